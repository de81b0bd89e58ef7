"""Theory kernels: Lagrangian, field equation, and presymplectic potential.

Every theory provides five evaluators.  For a tangent X and an algebra
0-form chi,

    lagrangian(phi)            -> top-degree form
    field_eq(phi, X)           -> top-degree form            E(X; phi)
    presymp(phi, X)            -> (n-1)-form                 theta(X; phi)
    boundary_kernel(phi, chi)  -> (n-2)-form                 theta(chi; phi)
    constraint_kernel(phi, chi)-> (n-1)-form                 E(chi; phi)

The chi-kernels are the integration-by-parts kernels with the algebra 0-form
substituted into the connection-displacement slot, so their spacetime degree
drops by one; the pointwise identity

    theta(vertical(chi); phi) = d boundary_kernel - constraint_kernel

closes at O(h^2) and is the backbone of every charge computation downstream.

Yang-Mills-with-scalar uses L = 1/2 Tr(F ^ *F) + 1/2 <Dm, *Dm> (optional
potential hook, default off).  First-order gravity with a cosmological
constant uses the epsilon-contraction polynomial with curvature
F = R - (eps/ell^2) e ^ e^T; its dressed (metric) variant weights the same
contractions with sqrt|det g| and raises indices with g^{-1}.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import lie
from .conventions import EPS_DET
from .errors import BadPatch, DegenerateMetric, SingularTetrad
from .fields import (
    FieldPoint,
    FieldTangent,
    algebra_vspace,
    covariant_derivative,
    curvature,
    rep_vspace,
    torsion,
)
from .grid import REAL, FormField, Region, hodge, wedge

__all__ = [
    "TheoryKernels",
    "ym_kernels",
    "mm_kernels",
    "mm_dressed_kernels",
    "make_theory",
    "GravityData",
    "build_gravity",
    "christoffel",
    "levi_civita_connection",
    "analytic_metric",
    "tetrad_dressing",
    "identity_coframe",
    "kappa_from_zeta",
    "killing_residual",
]


@dataclass
class TheoryKernels:
    name: str
    group: str
    couplings: dict
    lagrangian: Callable[[FieldPoint], FormField]
    field_eq: Callable[[FieldPoint, FieldTangent], FormField]
    presymp: Callable[[FieldPoint, FieldTangent], FormField]
    boundary_kernel: Callable[[FieldPoint, FormField], FormField]
    constraint_kernel: Callable[[FieldPoint, FormField], FormField]
    # optional explicit two-form integrand (X, Y) -> (n-1)-form, used to
    # cross-check the finite-difference construction where available
    direct_theta2: Optional[Callable] = None


def _re(f: FormField) -> FormField:
    if f.vspace.dtype is complex:
        return f.real_part()
    return f


# ---------------------------------------------------------------------------
# Yang-Mills with optional scalar


def ym_kernels(group: str, potential: Optional[dict] = None) -> TheoryKernels:
    """Yang-Mills(-scalar) kernels for u1/su(n) on any region.

    `potential`, when given, holds {mu2, lam} for the scalar self-coupling
    mu2 <m,m> + lam <m,m>^2 added to the Lagrangian density.
    """

    pot = potential or {}
    mu2 = float(pot.get("mu2", 0.0))
    lam = float(pot.get("lam", 0.0))
    has_pot = bool(pot)

    def matter_terms(phi):
        if phi.matter is None:
            return None, None
        Dm = covariant_derivative(phi.matter, phi.A, kind="rep")
        return Dm, hodge(Dm, phi.region)

    def vol_form(region):
        one = FormField.zero(region, 0, REAL)
        one.values[..., 0] = 1.0
        return hodge(one, region)

    def density(phi):
        s = np.einsum(
            "...i,...i->...",
            np.conj(phi.matter.values[..., 0, :]),
            phi.matter.values[..., 0, :],
        ).real
        return s

    def lagrangian(phi):
        F = curvature(phi)
        sF = hodge(F, phi.region)
        out = 0.5 * _re(wedge(F, sF, pairing="trace"))
        Dm, sDm = matter_terms(phi)
        if Dm is not None:
            out = out + 0.5 * _re(wedge(Dm, sDm, pairing="inner"))
            if has_pot:
                s = density(phi)
                out = out - vol_form(phi.region).scale_nodewise(
                    mu2 * s + lam * s * s
                )
        return out

    def field_eq(phi, X):
        F = curvature(phi)
        sF = hodge(F, phi.region)
        DsF = covariant_derivative(sF, phi.A, kind="adjoint")
        out = _re(wedge(X.A, DsF, pairing="trace"))
        Dm, sDm = matter_terms(phi)
        if Dm is not None:
            # current term: + Re< rho(X_A) m, *Dm >
            rXm = wedge(X.A, phi.matter, pairing="rep")
            out = out + _re(wedge(rXm, sDm, pairing="inner"))
            if X.matter is not None:
                DsDm = covariant_derivative(sDm, phi.A, kind="rep")
                out = out - _re(wedge(X.matter, DsDm, pairing="inner"))
                if has_pot:
                    s = density(phi)
                    dd = 2.0 * np.einsum(
                        "...i,...i->...",
                        np.conj(X.matter.values[..., 0, :]),
                        phi.matter.values[..., 0, :],
                    ).real
                    out = out - vol_form(phi.region).scale_nodewise(
                        (mu2 + 2.0 * lam * s) * dd
                    )
        return out

    def presymp(phi, X):
        F = curvature(phi)
        sF = hodge(F, phi.region)
        out = _re(wedge(X.A, sF, pairing="trace"))
        Dm, sDm = matter_terms(phi)
        if Dm is not None and X.matter is not None:
            out = out + _re(wedge(X.matter, sDm, pairing="inner"))
        return out

    def boundary_kernel(phi, chi):
        sF = hodge(curvature(phi), phi.region)
        return _re(wedge(chi, sF, pairing="trace"))

    def constraint_kernel(phi, chi):
        sF = hodge(curvature(phi), phi.region)
        DsF = covariant_derivative(sF, phi.A, kind="adjoint")
        out = _re(wedge(chi, DsF, pairing="trace"))
        Dm, sDm = matter_terms(phi)
        if Dm is not None:
            # - Tr(chi J) = - <m, chi * Dm>
            cm = wedge(chi, sDm, pairing="rep")
            pair = np.einsum(
                "...i,...ci->...c", np.conj(phi.matter.values[..., 0, :]), cm.values
            ).real
            out = out - FormField(phi.region, cm.degree, REAL, pair)
        return out

    def direct_theta2(phi, X, Y):
        def delta_F(Z):
            return covariant_derivative(Z.A, phi.A, kind="adjoint")

        def delta_Dm(Z):
            t = covariant_derivative(Z.matter, phi.A, kind="rep")
            return t + wedge(Z.A, phi.matter, pairing="rep")

        out = _re(wedge(Y.A, hodge(delta_F(X), phi.region), pairing="trace")) - _re(
            wedge(X.A, hodge(delta_F(Y), phi.region), pairing="trace")
        )
        if phi.matter is not None and X.matter is not None and Y.matter is not None:
            out = out + _re(
                wedge(Y.matter, hodge(delta_Dm(X), phi.region), pairing="inner")
            )
            out = out - _re(
                wedge(X.matter, hodge(delta_Dm(Y), phi.region), pairing="inner")
            )
        return out

    return TheoryKernels(
        name="ym",
        group=group,
        couplings={"potential": dict(pot)} if pot else {},
        lagrangian=lagrangian,
        field_eq=field_eq,
        presymp=presymp,
        boundary_kernel=boundary_kernel,
        constraint_kernel=constraint_kernel,
        direct_theta2=direct_theta2,
    )


# ---------------------------------------------------------------------------
# first-order gravity with cosmological constant


def _bullet_wedge(a: FormField, b: FormField, raiser=None, weight=None) -> FormField:
    out = wedge(
        a,
        b,
        pairing=lambda x, y: lie.bullet_pair(x, y, raiser=raiser),
        out_vspace=REAL,
    )
    if weight is not None:
        out = out.scale_nodewise(weight)
    return out


def _eta_lower(f: FormField) -> FormField:
    """Lower the second frame index with the Minkowski metric, turning an
    upper-upper outer product into a mixed (algebra-like) tensor so the
    tacit raising inside the epsilon pairing is consistent."""
    vals = np.einsum("...cab,bn->...can", f.values, lie.MINKOWSKI)
    return FormField(f.region, f.degree, f.vspace, vals)


def _mm_curvature(phi: FieldPoint, coupling: float) -> FormField:
    """F = dA + A^A - coupling * e ^ e^T (coupling = eps/ell^2)."""
    F = curvature(phi)
    if coupling != 0.0:
        ee = _eta_lower(wedge(phi.tetrad, phi.tetrad, pairing="outer"))
        F = F - coupling * ee
    return F


def mm_kernels(ell: float, eps_sign: int) -> TheoryKernels:
    """Pure first-order gravity, Lorentz-frame variables (A, e).

    eps_sign is the sign of the cosmological constant (0 disables the
    volume terms entirely); ell the (A)dS radius, Lambda = 3 eps / ell^2.
    In the (+,-,-,-) convention with the second frame index tacitly
    lowered, the ground-state term carries the sign opposite to
    sign(Lambda): the static (anti-)de Sitter patches then satisfy F = 0.
    """

    coupling = -float(eps_sign) / float(ell) ** 2 if eps_sign else 0.0

    def lagrangian(phi):
        F = _mm_curvature(phi, coupling)
        return 0.5 * _bullet_wedge(F, F)

    def theta_of(phi, dA_slot):
        F = _mm_curvature(phi, coupling)
        return _bullet_wedge(dA_slot, F)

    def presymp(phi, X):
        return theta_of(phi, X.A)

    def field_eq(phi, X):
        F = _mm_curvature(phi, coupling)
        out = None
        if coupling != 0.0:
            T = torsion(phi)
            Te = _eta_lower(wedge(T, phi.tetrad, pairing="outer"))
            out = (-2.0 * coupling) * _bullet_wedge(X.A, Te)
        if X.tetrad is not None and coupling != 0.0:
            de = _eta_lower(wedge(X.tetrad, phi.tetrad, pairing="outer"))
            out = out + (-2.0 * coupling) * _bullet_wedge(de, F)
        if out is None:
            out = FormField.zero(phi.region, phi.region.dim, REAL)
        return out

    def boundary_kernel(phi, chi):
        F = _mm_curvature(phi, coupling)
        return _bullet_wedge(chi, F)

    def constraint_kernel(phi, chi):
        if coupling == 0.0:
            return FormField.zero(phi.region, phi.region.dim - 1, REAL)
        T = torsion(phi)
        Te = _eta_lower(wedge(T, phi.tetrad, pairing="outer"))
        return (-2.0 * coupling) * _bullet_wedge(chi, Te)

    return TheoryKernels(
        name="mm",
        group="so13",
        couplings={"ell": ell, "eps_sign": eps_sign},
        lagrangian=lagrangian,
        field_eq=field_eq,
        presymp=presymp,
        boundary_kernel=boundary_kernel,
        constraint_kernel=constraint_kernel,
    )


def mm_dressed_kernels(ell: float, eps_sign: int) -> TheoryKernels:
    """Gravity kernels in dressed (coordinate-frame) variables.

    Points carry the linear connection in the A slot, the coordinate
    coframe in the tetrad slot, and the metric array in the metric slot.
    All epsilon contractions are raised with g^{-1} and weighted by
    sqrt|det g|, so the same formulas compute generalized Komar charges.
    The ground-state coupling sign matches the Lorentz-frame kernels.
    """

    coupling = -float(eps_sign) / float(ell) ** 2 if eps_sign else 0.0

    def geometry(phi):
        g = phi.metric
        if g is None:
            raise DegenerateMetric("dressed gravity point carries no metric")
        det = np.linalg.det(g)
        if np.min(np.abs(det)) < EPS_DET:
            raise DegenerateMetric("metric degenerate at some node")
        return np.linalg.inv(g), np.sqrt(np.abs(det))

    def f_curv(phi):
        F = curvature(phi)
        if coupling != 0.0:
            ee = wedge(phi.tetrad, phi.tetrad, pairing="outer")
            lowered = FormField(
                phi.region,
                2,
                ee.vspace,
                np.einsum("...cab,...bn->...can", ee.values, phi.metric),
            )
            F = F - coupling * lowered
        return F

    def lagrangian(phi):
        ginv, w = geometry(phi)
        F = f_curv(phi)
        return 0.5 * _bullet_wedge(F, F, raiser=ginv, weight=w)

    def presymp(phi, X):
        ginv, w = geometry(phi)
        return _bullet_wedge(X.A, f_curv(phi), raiser=ginv, weight=w)

    def field_eq(phi, X):
        ginv, w = geometry(phi)
        out = None
        if coupling != 0.0:
            T = torsion(phi)
            Te = wedge(T, phi.tetrad, pairing="outer")
            Te = FormField(
                phi.region, 3, Te.vspace,
                np.einsum("...cab,...bn->...can", Te.values, phi.metric),
            )
            out = (-2.0 * coupling) * _bullet_wedge(X.A, Te, raiser=ginv, weight=w)
        if out is None:
            out = FormField.zero(phi.region, phi.region.dim, REAL)
        return out

    def boundary_kernel(phi, chi):
        ginv, w = geometry(phi)
        return _bullet_wedge(chi, f_curv(phi), raiser=ginv, weight=w)

    def constraint_kernel(phi, chi):
        ginv, w = geometry(phi)
        if coupling == 0.0:
            return FormField.zero(phi.region, phi.region.dim - 1, REAL)
        T = torsion(phi)
        Te = wedge(T, phi.tetrad, pairing="outer")
        Te = FormField(
            phi.region, 3, Te.vspace,
            np.einsum("...cab,...bn->...can", Te.values, phi.metric),
        )
        return (-2.0 * coupling) * _bullet_wedge(chi, Te, raiser=ginv, weight=w)

    return TheoryKernels(
        name="mm_dressed",
        group="gl4",
        couplings={"ell": ell, "eps_sign": eps_sign},
        lagrangian=lagrangian,
        field_eq=field_eq,
        presymp=presymp,
        boundary_kernel=boundary_kernel,
        constraint_kernel=constraint_kernel,
    )


def make_theory(name: str, **kw) -> TheoryKernels:
    if name == "ym":
        return ym_kernels(kw.pop("group", "su2"), kw.pop("potential", None))
    if name == "mm":
        return mm_kernels(kw.pop("ell", 1.0), kw.pop("eps_sign", -1))
    if name == "mm_dressed":
        return mm_dressed_kernels(kw.pop("ell", 1.0), kw.pop("eps_sign", -1))
    raise ValueError(f"unknown theory '{name}'")


# ---------------------------------------------------------------------------
# geometry from tetrads


def _tetrad_matrix(tetrad: FormField) -> np.ndarray:
    """e^a_mu as node-wise matrices [a, mu] from the 1-form storage [mu, a]."""
    return np.swapaxes(tetrad.values, -1, -2)


def christoffel(g: np.ndarray, region: Region) -> np.ndarray:
    """Gamma^mu_{nu rho} from the metric, [..., mu, nu, rho], symmetric in
    (nu, rho); derivatives are the usual O(h^2) stencils."""
    n = region.dim
    ginv = np.linalg.inv(g)
    # D[..., m, n, r] = d_m g_{nr}
    D = np.stack(
        [np.gradient(g, region.axes[i], axis=i, edge_order=2) for i in range(n)],
        axis=-3,
    )
    # 1/2 g^{ms} (d_n g_{sr} + d_r g_{sn} - d_s g_{nr}), each addend laid
    # out as [..., s, n, r]
    sym = D.swapaxes(-3, -2) + np.moveaxis(D, -3, -1) - D
    return 0.5 * np.einsum("...ms,...snr->...mnr", ginv, sym)


def levi_civita_connection(tetrad: FormField, region: Region) -> FormField:
    """Spin connection solving the tetrad postulate against the metric's
    Levi-Civita Christoffels; torsion then vanishes at O(h^2)."""
    emat = _tetrad_matrix(tetrad)
    det = np.linalg.det(emat)
    if np.min(np.abs(det)) < EPS_DET:
        raise SingularTetrad("tetrad not invertible at some node")
    einv = np.linalg.inv(emat)
    eta = lie.MINKOWSKI
    g = np.einsum("...ai,ab,...bj->...ij", emat, eta, emat)
    gam = christoffel(g, region)
    n = region.dim
    vals = np.zeros(region.shape + (n, 4, 4))
    de = np.stack(
        [np.gradient(emat, region.axes[i], axis=i, edge_order=2) for i in range(n)],
        axis=-3,
    )  # [..., mu, a, nu] = d_mu e^a_nu
    for mu in range(n):
        gam_mu = gam[..., :, :, mu]  # Gamma^sigma_{nu mu} as [sigma, nu]
        a_mu = np.einsum("...as,...sn->...an", emat, gam_mu) - de[..., mu, :, :]
        vals[..., mu, :, :] = np.einsum("...an,...nb->...ab", a_mu, einv)
    out = FormField(region, 1, algebra_vspace("so13"), vals)
    return FormField(region, 1, out.vspace, lie.project_algebra(out.values, "so13"))


@dataclass
class GravityData:
    """Derived geometry of a Lorentz-frame gravity configuration."""

    phi: FieldPoint
    emat: np.ndarray  # e^a_mu, [..., a, mu]
    einv: np.ndarray  # [..., mu, a]
    g: np.ndarray
    ginv: np.ndarray
    sqrtg: np.ndarray
    gamma: FormField  # gl(4) linear connection
    riemann: FormField  # dGamma + Gamma^Gamma
    torsion_frame: FormField  # D^A e, Lorentz frame
    f_frame: FormField  # R_frame - (eps/ell^2) e^e^T
    f_coord: FormField  # dressed curvature R - (eps/ell^2) dx dx^T g
    metricity_residual: float


def identity_coframe(region: Region) -> FormField:
    vals = np.zeros(region.shape + (region.dim, 4))
    for mu in range(region.dim):
        vals[..., mu, mu] = 1.0
    return FormField(region, 1, rep_vspace("gl4"), vals)


def tetrad_dressing(phi: FieldPoint) -> FieldPoint:
    """Move to coordinate-frame variables: Gamma = e^-1 A e + e^-1 de.

    The returned point carries group tag gl4, the coordinate coframe in the
    tetrad slot, and the metric g = e^T eta e in the metric slot.
    """
    region = phi.region
    emat = _tetrad_matrix(phi.tetrad)
    det = np.linalg.det(emat)
    if np.min(np.abs(det)) < EPS_DET:
        raise SingularTetrad("tetrad not invertible at some node")
    einv = np.linalg.inv(emat)
    eta = lie.MINKOWSKI
    g = np.einsum("...ai,ab,...bj->...ij", emat, eta, emat)
    n = region.dim
    vals = np.zeros(region.shape + (n, 4, 4))
    de = np.stack(
        [np.gradient(emat, region.axes[i], axis=i, edge_order=2) for i in range(n)],
        axis=-3,
    )
    for mu in range(n):
        a_mu = phi.A.values[..., mu, :, :]
        vals[..., mu, :, :] = np.einsum(
            "...ma,...ab,...bn->...mn", einv, a_mu, emat
        ) + np.einsum("...ma,...an->...mn", einv, de[..., mu, :, :])
    gamma = FormField(region, 1, algebra_vspace("gl4"), vals)
    return FieldPoint(
        region,
        "gl4",
        gamma,
        matter=None,
        tetrad=identity_coframe(region),
        ell=phi.ell,
        lambda_sign=phi.lambda_sign,
        metric=g,
    )


def build_gravity(phi: FieldPoint) -> GravityData:
    region = phi.region
    emat = _tetrad_matrix(phi.tetrad)
    det = np.linalg.det(emat)
    if np.min(np.abs(det)) < EPS_DET:
        raise SingularTetrad("tetrad not invertible at some node")
    einv = np.linalg.inv(emat)
    eta = lie.MINKOWSKI
    g = np.einsum("...ai,ab,...bj->...ij", emat, eta, emat)
    detg = np.linalg.det(g)
    if np.min(np.abs(detg)) < EPS_DET:
        raise DegenerateMetric("tetrad metric degenerate")
    dressed = tetrad_dressing(phi)
    gamma = dressed.A
    riemann = curvature(dressed)
    coupling = (
        -float(phi.lambda_sign) / float(phi.ell) ** 2 if phi.lambda_sign else 0.0
    )
    T = torsion(phi)
    F_frame = _mm_curvature(phi, coupling)
    # coordinate-frame curvature from the dressed point
    ee = wedge(dressed.tetrad, dressed.tetrad, pairing="outer")
    lowered = FormField(
        region, 2, ee.vspace, np.einsum("...cab,...bn->...can", ee.values, g)
    )
    F_coord = riemann - coupling * lowered if coupling else riemann
    # metricity: d g - Gamma^T g - g Gamma per form axis
    n = region.dim
    res = 0.0
    dg = np.stack(
        [np.gradient(g, region.axes[i], axis=i, edge_order=2) for i in range(n)],
        axis=-3,
    )
    for mu in range(n):
        gm = gamma.values[..., mu, :, :]
        nabla = dg[..., mu, :, :] - np.einsum("...ba,...bc->...ac", gm, g) - np.einsum(
            "...ab,...bc->...ac", g, gm
        )
        interior = tuple(slice(1, -1) for _ in range(n))
        res = max(res, float(np.max(np.abs(nabla[interior]))))
    return GravityData(
        phi=phi,
        emat=emat,
        einv=einv,
        g=g,
        ginv=np.linalg.inv(g),
        sqrtg=np.sqrt(np.abs(detg)),
        gamma=gamma,
        riemann=riemann,
        torsion_frame=T,
        f_frame=F_frame,
        f_coord=F_coord,
        metricity_residual=res,
    )


# ---------------------------------------------------------------------------
# analytic configurations


_PROFILES = {
    "flat": lambda r, p: np.ones_like(r),
    "deSitter": lambda r, p: 1.0 - (r / p["ell"]) ** 2,
    "antiDeSitter": lambda r, p: 1.0 + (r / p["ell"]) ** 2,
    "schwarzschild_ads": lambda r, p: 1.0
    - 2.0 * p["mass"] / r
    + (r / p["ell"]) ** 2,
}


def analytic_metric(name: str, params: dict, region: Region) -> FieldPoint:
    """Static spherically symmetric tetrads with Levi-Civita spin connection.

    'flat' is Cartesian Minkowski (any dimension-4 box); the rest use
    (t, r, theta, phi) coordinates and raise BadPatch when the box touches
    a horizon, the axis, or r = 0.
    """
    if name not in _PROFILES:
        raise ValueError(f"unknown analytic metric '{name}'")
    params = dict(params)
    if region.dim != 4:
        raise BadPatch("analytic gravity patches are 4-dimensional")
    vs = rep_vspace("so13")
    if name == "flat":
        vals = np.zeros(region.shape + (4, 4))
        for mu in range(4):
            vals[..., mu, mu] = 1.0
        tetrad = FormField(region, 1, vs, vals)
        A = FormField.zero(region, 1, algebra_vspace("so13"))
        return FieldPoint(
            region, "so13", A, tetrad=tetrad,
            ell=params.get("ell", 1.0),
            lambda_sign=params.get("lambda_sign", 0),
        )
    t, r, th, ph = region.mesh()
    if np.min(r) <= 0:
        raise BadPatch("patch touches r <= 0")
    if np.min(np.sin(th)) <= 1e-12:
        raise BadPatch("patch touches the coordinate axis sin(theta) = 0")
    f = _PROFILES[name](r, params)
    if np.min(f) <= 0:
        raise BadPatch("patch touches or crosses a horizon (f <= 0)")
    vals = np.zeros(region.shape + (4, 4))
    vals[..., 0, 0] = np.sqrt(f)
    vals[..., 1, 1] = 1.0 / np.sqrt(f)
    vals[..., 2, 2] = r
    vals[..., 3, 3] = r * np.sin(th)
    tetrad = FormField(region, 1, vs, vals)
    A = levi_civita_connection(tetrad, region)
    lambda_sign = {
        "deSitter": 1,
        "antiDeSitter": -1,
        "schwarzschild_ads": -1,
    }[name]
    lambda_sign = params.get("lambda_sign", lambda_sign)
    return FieldPoint(
        region, "so13", A, tetrad=tetrad,
        ell=params["ell"], lambda_sign=lambda_sign,
    )


# ---------------------------------------------------------------------------
# Killing data


def kappa_from_zeta(gdata: GravityData, zeta: np.ndarray) -> FormField:
    """kappa^mu_nu = nabla_nu zeta^mu via the Levi-Civita linear connection,
    packaged as a gl(4)-valued 0-form."""
    region = gdata.phi.region
    n = region.dim
    dz = np.stack(
        [np.gradient(zeta, region.axes[i], axis=i, edge_order=2) for i in range(n)],
        axis=-1,
    )  # [..., mu, nu] = d_nu zeta^mu
    # gamma stores (Gamma_nu)^m_s on [..., nu, m, s]
    conn = np.einsum("...nms,...s->...mn", gdata.gamma.values, zeta)
    vals = (dz + conn)[..., None, :, :]
    return FormField(region, 0, algebra_vspace("gl4"), vals)


def killing_residual(gdata: GravityData, kappa: FormField) -> float:
    """max |nabla_(mu} zeta_{nu)} | over interior nodes."""
    k = kappa.values[..., 0, :, :]
    low = np.einsum("...ma,...an->...mn", gdata.g, k)
    sym = low + np.swapaxes(low, -1, -2)
    n = gdata.phi.region.dim
    interior = tuple(slice(1, -1) for _ in range(n))
    return float(np.max(np.abs(sym[interior])))
