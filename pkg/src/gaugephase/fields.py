"""Gauge field configurations and the group action on them.

A FieldPoint bundles the connection 1-form A (algebra-valued), an optional
matter 0-form in the defining representation, and, for gravity, a tetrad
1-form with the cosmological couplings (ell, lambda_sign).  FieldTangent is
the matching displacement container; both support the affine arithmetic the
finite-difference field-space calculus needs.

Conventions for the (right) gauge action:
    A^g      = g^-1 A g + g^-1 dg
    matter^g = g^-1 matter
    tetrad^g = g^-1 tetrad
and the vertical vector generated by an algebra 0-form chi:
    delta_chi A      = d chi + [A, chi]
    delta_chi matter = -chi matter
    delta_chi tetrad = -chi tetrad
so that d/dt at t=0 of the exp(t chi) action reproduces delta_chi.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import lie
from .errors import BadBackground, DegreeMismatch
from .grid import FormField, Region, ValueSpace, exterior_derivative, wedge

__all__ = [
    "algebra_vspace",
    "group_vspace",
    "rep_vspace",
    "FieldPoint",
    "FieldTangent",
    "curvature",
    "torsion",
    "covariant_derivative",
    "gauge_transform",
    "push_tangent",
    "vertical_vector",
    "exp_field",
    "group_field_inverse",
    "BackgroundSplit",
    "background_split",
    "random_algebra_form",
    "random_config",
    "random_tangent",
]


def algebra_vspace(tag: str) -> ValueSpace:
    spec = lie.group(tag)
    return ValueSpace("algebra", tag, (spec.dim, spec.dim), spec.dtype)


def group_vspace(tag: str) -> ValueSpace:
    spec = lie.group(tag)
    return ValueSpace("group", tag, (spec.dim, spec.dim), spec.dtype)


def rep_vspace(tag: str) -> ValueSpace:
    """Defining representation: column vectors the group matrices act on."""
    spec = lie.group(tag)
    return ValueSpace("rep", tag, (spec.dim,), spec.dtype)


# ---------------------------------------------------------------------------
# containers


@dataclass
class FieldTangent:
    """Displacement of a FieldPoint; slots mirror the point's fields."""

    A: Optional[FormField] = None
    matter: Optional[FormField] = None
    tetrad: Optional[FormField] = None
    metric: Optional[np.ndarray] = None

    def scaled(self, t: float) -> "FieldTangent":
        return FieldTangent(
            A=None if self.A is None else t * self.A,
            matter=None if self.matter is None else t * self.matter,
            tetrad=None if self.tetrad is None else t * self.tetrad,
            metric=None if self.metric is None else t * self.metric,
        )

    def __add__(self, other: "FieldTangent") -> "FieldTangent":
        def add(a, b):
            if a is None:
                return b
            if b is None:
                return a
            return a + b

        return FieldTangent(
            A=add(self.A, other.A),
            matter=add(self.matter, other.matter),
            tetrad=add(self.tetrad, other.tetrad),
            metric=add(self.metric, other.metric),
        )

    def __sub__(self, other: "FieldTangent") -> "FieldTangent":
        return self + other.scaled(-1.0)

    def norm(self) -> float:
        parts = [
            p.max_abs()
            for p in (self.A, self.matter, self.tetrad)
            if p is not None
        ]
        if self.metric is not None:
            parts.append(float(np.max(np.abs(self.metric))))
        return max(parts) if parts else 0.0


@dataclass
class FieldPoint:
    """One lattice gauge configuration."""

    region: Region
    group: str
    A: FormField
    matter: Optional[FormField] = None
    tetrad: Optional[FormField] = None
    ell: Optional[float] = None
    lambda_sign: Optional[int] = None
    metric: Optional[np.ndarray] = None  # used by dressed gravity points

    def __post_init__(self):
        if self.A.degree != 1:
            raise DegreeMismatch("connection must be a 1-form")
        if self.matter is not None and self.matter.degree != 0:
            raise DegreeMismatch("matter must be a 0-form")
        if self.tetrad is not None and self.tetrad.degree != 1:
            raise DegreeMismatch("tetrad must be a 1-form")

    def copy(self) -> "FieldPoint":
        return FieldPoint(
            self.region,
            self.group,
            self.A.copy(),
            None if self.matter is None else self.matter.copy(),
            None if self.tetrad is None else self.tetrad.copy(),
            self.ell,
            self.lambda_sign,
            None if self.metric is None else self.metric.copy(),
        )

    def shifted(self, t: float, X: FieldTangent) -> "FieldPoint":
        """phi + t X, slotwise; None tangent slots leave the field alone."""
        return FieldPoint(
            self.region,
            self.group,
            self.A if X.A is None else self.A + t * X.A,
            self.matter
            if (self.matter is None or X.matter is None)
            else self.matter + t * X.matter,
            self.tetrad
            if (self.tetrad is None or X.tetrad is None)
            else self.tetrad + t * X.tetrad,
            self.ell,
            self.lambda_sign,
            self.metric
            if (self.metric is None or X.metric is None)
            else self.metric + t * X.metric,
        )

    def norm(self) -> float:
        parts = [self.A.max_abs()]
        if self.matter is not None:
            parts.append(self.matter.max_abs())
        if self.tetrad is not None:
            parts.append(self.tetrad.max_abs())
        if self.metric is not None:
            parts.append(float(np.max(np.abs(self.metric))))
        return max(parts)

    def zero_tangent(self) -> FieldTangent:
        return FieldTangent(
            A=FormField.zero(self.region, 1, self.A.vspace),
            matter=None
            if self.matter is None
            else FormField.zero(self.region, 0, self.matter.vspace),
            tetrad=None
            if self.tetrad is None
            else FormField.zero(self.region, 1, self.tetrad.vspace),
            metric=None if self.metric is None else np.zeros_like(self.metric),
        )


# ---------------------------------------------------------------------------
# curvature and covariant derivatives


def curvature(phi: FieldPoint) -> FormField:
    """F = dA + (1/2)[A ^ A] = dA + A ^ A (matrix wedge)."""
    return exterior_derivative(phi.A) + wedge(phi.A, phi.A, pairing="matmul")


def torsion(phi: FieldPoint) -> FormField:
    """T = d(tetrad) + A ^ tetrad for gravity points."""
    if phi.tetrad is None:
        raise DegreeMismatch("torsion needs a tetrad")
    return exterior_derivative(phi.tetrad) + wedge(phi.A, phi.tetrad, pairing="rep")


def covariant_derivative(w: FormField, A: FormField, kind: str = "adjoint"):
    """D^A w = dw + A ^ w (rep) or dw + [A ^ w] graded (adjoint)."""
    dw = exterior_derivative(w)
    if kind == "rep":
        return dw + wedge(A, w, pairing="rep")
    if kind == "adjoint":
        aw = wedge(A, w, pairing="matmul")
        wa = wedge(w, A, pairing="matmul")
        sign = (-1) ** w.degree
        return dw + aw - sign * wa
    raise ValueError(f"unknown covariant derivative kind '{kind}'")


# ---------------------------------------------------------------------------
# gauge action


def _conjugate(form: FormField, g: FormField, gi: FormField) -> FormField:
    vals = np.einsum(
        "...ij,...cjk,...kl->...cil",
        gi.values[..., 0, :, :],
        form.values,
        g.values[..., 0, :, :],
    )
    return FormField(form.region, form.degree, form.vspace, vals)


def gauge_transform(phi: FieldPoint, gamma: FormField) -> FieldPoint:
    """Right action of a group-valued 0-form on the configuration."""
    if gamma.degree != 0:
        raise DegreeMismatch("gauge parameter must be a group-valued 0-form")
    gi = FormField(
        gamma.region, 0, gamma.vspace, lie.group_inv(gamma.values)
    )
    dg = exterior_derivative(gamma)
    new_A = _conjugate(phi.A, gamma, gi) + FormField(
        phi.region,
        1,
        phi.A.vspace,
        np.einsum("...ij,...cjk->...cik", gi.values[..., 0, :, :], dg.values),
    )
    new_matter = None
    if phi.matter is not None:
        new_matter = FormField(
            phi.region,
            0,
            phi.matter.vspace,
            np.einsum(
                "...ij,...cj->...ci", gi.values[..., 0, :, :], phi.matter.values
            ),
        )
    new_tetrad = None
    if phi.tetrad is not None:
        new_tetrad = FormField(
            phi.region,
            1,
            phi.tetrad.vspace,
            np.einsum(
                "...ij,...cj->...ci", gi.values[..., 0, :, :], phi.tetrad.values
            ),
        )
    new_metric = None
    if phi.metric is not None:
        # the metric slot follows the dressing, not the coframe:
        # g = u^T eta u and u -> u gamma give g -> gamma^T g gamma
        gv = gamma.values[..., 0, :, :]
        new_metric = np.einsum("...ba,...bc,...cd->...ad", gv, phi.metric, gv)
    return FieldPoint(
        phi.region, phi.group, new_A, new_matter, new_tetrad, phi.ell,
        phi.lambda_sign, new_metric,
    )


def push_tangent(X: FieldTangent, gamma: FormField) -> FieldTangent:
    """Differential of the gauge action at fixed gamma (pure conjugation)."""
    gi_vals = lie.group_inv(gamma.values)[..., 0, :, :]
    g_vals = gamma.values[..., 0, :, :]

    def conj_matrix(f: FormField) -> FormField:
        vals = np.einsum(
            "...ij,...cjk,...kl->...cil", gi_vals, f.values, g_vals
        )
        return FormField(f.region, f.degree, f.vspace, vals)

    def rotate_vector(f: FormField) -> FormField:
        vals = np.einsum("...ij,...cj->...ci", gi_vals, f.values)
        return FormField(f.region, f.degree, f.vspace, vals)

    new_metric = None
    if X.metric is not None:
        new_metric = np.einsum("...ba,...bc,...cd->...ad", g_vals, X.metric, g_vals)
    return FieldTangent(
        A=None if X.A is None else conj_matrix(X.A),
        matter=None if X.matter is None else rotate_vector(X.matter),
        tetrad=None if X.tetrad is None else rotate_vector(X.tetrad),
        metric=new_metric,
    )


def vertical_vector(chi: FormField, phi: FieldPoint) -> FieldTangent:
    """Infinitesimal gauge motion generated by the algebra 0-form chi."""
    if chi.degree != 0:
        raise DegreeMismatch("gauge generator must be an algebra 0-form")
    dchi = exterior_derivative(chi)
    comm = wedge(phi.A, chi, pairing="matmul") - wedge(chi, phi.A, pairing="matmul")
    dA = dchi + comm
    d_matter = None
    if phi.matter is not None:
        d_matter = -1.0 * wedge(chi, phi.matter, pairing="rep")
    d_tetrad = None
    if phi.tetrad is not None:
        d_tetrad = -1.0 * wedge(chi, phi.tetrad, pairing="rep")
    d_metric = None
    if phi.metric is not None:
        # the metric slot is (dressing)^T eta (dressing), so a right move
        # of the dressing by exp(tau chi) gives delta g = chi^T g + g chi
        k = chi.values[..., 0, :, :]
        d_metric = np.einsum("...ba,...bc->...ac", k, phi.metric) + np.einsum(
            "...ab,...bc->...ac", phi.metric, k
        )
    return FieldTangent(A=dA, matter=d_matter, tetrad=d_tetrad, metric=d_metric)


def exp_field(chi: FormField) -> FormField:
    """Node-wise exponential of an algebra 0-form, as a group 0-form."""
    vs = chi.vspace
    return FormField(
        chi.region, 0, ValueSpace("group", vs.tag, vs.shape, vs.dtype),
        lie.group_exp(chi.values),
    )


def group_field_inverse(gamma: FormField) -> FormField:
    return FormField(gamma.region, 0, gamma.vspace, lie.group_inv(gamma.values))


# ---------------------------------------------------------------------------
# background splits (perturbative charges)


@dataclass
class BackgroundSplit:
    """A = A0 + alpha with the linearized curvature and current."""

    A0: FormField
    alpha: FormField
    F0: FormField
    f_lin: FormField  # D0 alpha
    current: FormField  # D0 * f_lin + [alpha ^ * F0]
    background_residual: float  # max |D0 * F0|

    def total_A(self) -> FormField:
        return self.A0 + self.alpha


def background_split(
    A0: FormField, alpha: FormField, strict: bool = False, tol: float = 1e-8
) -> BackgroundSplit:
    """Linearize around A0; warn (or raise) when A0 is off-shell."""
    from .grid import hodge  # local import keeps module load cheap

    f_lin = covariant_derivative(alpha, A0, kind="adjoint")
    region = A0.region
    phi0 = FieldPoint(region, A0.vspace.tag or "u1", A0)
    F0 = curvature(phi0)
    sF0 = hodge(F0)
    bg = covariant_derivative(sF0, A0, kind="adjoint")
    residual = bg.max_abs()
    if strict and residual > tol:
        raise BadBackground(f"background field equation residual {residual:.3e}")
    s_flin = hodge(f_lin)
    j = covariant_derivative(s_flin, A0, kind="adjoint") + (
        wedge(alpha, sF0, pairing="matmul") - wedge(sF0, alpha, pairing="matmul")
    )
    return BackgroundSplit(A0, alpha, F0, f_lin, j, residual)


# ---------------------------------------------------------------------------
# sampling

# Profiles multiply a smooth window that vanishes (with its first derivative)
# on the patch edges when flat_edges is set; near-boundary-quiet
# configurations keep integration-by-parts defects small without changing
# interior scales.


def _smooth_profile(region: Region, rng, modes: int, flat_edges: bool):
    mesh = region.mesh()
    out = np.zeros(region.shape)
    for _ in range(modes):
        coeff = rng.normal(scale=1.0)
        freq = rng.integers(1, 3, size=region.dim)
        phase = rng.uniform(0, 2 * np.pi, size=region.dim)
        term = coeff * np.ones(region.shape)
        for i, x in enumerate(mesh):
            lo, hi = region.bounds[i]
            xi = (x - lo) / (hi - lo)
            term = term * np.cos(freq[i] * np.pi * xi + phase[i])
        out += term
    if flat_edges:
        for i, x in enumerate(mesh):
            lo, hi = region.bounds[i]
            xi = (x - lo) / (hi - lo)
            out = out * np.sin(np.pi * xi) ** 2
    return out


def random_algebra_form(
    region: Region,
    tag: str,
    degree: int,
    rng: np.random.Generator,
    scale: float = 1.0,
    modes: int = 2,
    flat_edges: bool = False,
    constant: bool = False,
) -> FormField:
    f = FormField.zero(region, degree, algebra_vspace(tag))
    k_alg = lie.group(tag).algebra_dim
    for c in range(f.ncomp):
        coords = rng.normal(scale=scale, size=k_alg)
        base = lie.algebra_from_coords(coords, tag)
        if constant:
            profile = np.ones(region.shape)
        else:
            profile = _smooth_profile(region, rng, modes, flat_edges)
        f.values[(slice(None),) * region.dim + (c,)] = np.multiply.outer(
            profile, base
        )
    return f


def random_config(
    region: Region,
    tag: str,
    rng: np.random.Generator,
    scale: float = 1.0,
    with_matter: bool = True,
    flat_edges: bool = False,
    matter_offset: complex = 0.0,
) -> FieldPoint:
    """Smooth random YM-type configuration (no tetrad)."""
    A = random_algebra_form(region, tag, 1, rng, scale=scale, flat_edges=flat_edges)
    matter = None
    if with_matter:
        d = lie.group(tag).dim
        vs = rep_vspace(tag)
        vals = np.zeros(region.shape + (1, d), dtype=vs.dtype)
        for i in range(d):
            re = _smooth_profile(region, rng, 2, flat_edges)
            im = _smooth_profile(region, rng, 2, flat_edges)
            vals[..., 0, i] = scale * (re + 1j * im) if vs.dtype is complex else scale * re
        if matter_offset:
            vals[..., 0, :] += matter_offset
        matter = FormField(region, 0, vs, vals)
    return FieldPoint(region, tag, A, matter)


def random_tangent(
    phi: FieldPoint,
    rng: np.random.Generator,
    scale: float = 1.0,
    flat_edges: bool = False,
) -> FieldTangent:
    region = phi.region
    dA = random_algebra_form(
        region, phi.group, 1, rng, scale=scale, flat_edges=flat_edges
    )
    d_matter = None
    if phi.matter is not None:
        vs = phi.matter.vspace
        vals = np.zeros_like(phi.matter.values)
        for i in range(vs.shape[0]):
            re = _smooth_profile(region, rng, 2, flat_edges)
            if vs.dtype is complex:
                im = _smooth_profile(region, rng, 2, flat_edges)
                vals[..., 0, i] = scale * (re + 1j * im)
            else:
                vals[..., 0, i] = scale * re
        d_matter = FormField(region, 0, vs, vals)
    d_tetrad = None
    if phi.tetrad is not None:
        vs = phi.tetrad.vspace
        vals = np.zeros_like(phi.tetrad.values)
        for c in range(phi.tetrad.ncomp):
            for i in range(vs.shape[0]):
                vals[..., c, i] = scale * _smooth_profile(
                    region, rng, 1, flat_edges
                )
        d_tetrad = FormField(region, 1, vs, vals)
    return FieldTangent(A=dA, matter=d_matter, tetrad=d_tetrad)
