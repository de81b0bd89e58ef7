"""Discrete differential forms on rectangular coordinate patches.

A Region is a bounded coordinate box [a_i, b_i]^n sampled on a tensor-product
node grid, optionally carrying a node-wise metric (defaults to the constant
diagonal signature metric).  A FormField stores one component per increasing
index tuple i1 < ... < ip, so its array has shape

    (*region.shape, ncomp, *value_shape)

with ncomp = C(n, p).  Values can be real scalars, complex scalars, Lie
algebra/group matrices, or representation vectors; the ValueSpace tag keeps
wedge pairings honest.

Derivatives are second-order stencils and quadrature is trapezoidal, so
Stokes-type identities close at O(h^2), not exactly; tests measure the order
rather than assuming exactness.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Callable, Optional, Sequence

import numpy as np

from .conventions import EPS_DET
from .errors import (
    DegenerateMetric,
    DegreeMismatch,
    DegreeOverflow,
    NoSlice,
    PairingMismatch,
)

__all__ = [
    "ValueSpace",
    "REAL",
    "CSCALAR",
    "Region",
    "FormField",
    "index_tuples",
    "tuple_index",
    "exterior_derivative",
    "wedge",
    "hodge",
    "integrate",
    "restrict_to_slice",
    "boundary_integrate",
    "form_norm",
    "convergence_order",
]


# ---------------------------------------------------------------------------
# value spaces


@dataclass(frozen=True)
class ValueSpace:
    """What kind of object sits at each (node, component) slot."""

    kind: str  # 'scalar' | 'algebra' | 'group' | 'rep'
    tag: Optional[str] = None
    shape: tuple = ()
    dtype: type = float

    def is_matrix(self) -> bool:
        return len(self.shape) == 2

    def is_vector(self) -> bool:
        return len(self.shape) == 1

    def is_scalar(self) -> bool:
        return self.shape == ()


REAL = ValueSpace("scalar")
CSCALAR = ValueSpace("scalar", dtype=complex)


# ---------------------------------------------------------------------------
# index bookkeeping


@lru_cache(maxsize=None)
def index_tuples(n: int, p: int) -> tuple:
    """Increasing index tuples of length p drawn from range(n)."""
    return tuple(itertools.combinations(range(n), p))


@lru_cache(maxsize=None)
def tuple_index(n: int, p: int) -> dict:
    return {t: k for k, t in enumerate(index_tuples(n, p))}


def _perm_sign(seq: Sequence[int]) -> int:
    sign = 1
    s = list(seq)
    for i in range(len(s)):
        for j in range(i + 1, len(s)):
            if s[i] > s[j]:
                sign = -sign
    return sign


@lru_cache(maxsize=None)
def _wedge_table(n: int, p: int, q: int) -> tuple:
    """(ia, ib, iout, sign) entries for the (p, q) wedge in n dimensions."""
    out = []
    idx_out = tuple_index(n, p + q)
    for ia, I in enumerate(index_tuples(n, p)):
        for ib, J in enumerate(index_tuples(n, q)):
            if set(I) & set(J):
                continue
            K = tuple(sorted(I + J))
            out.append((ia, ib, idx_out[K], _perm_sign(I + J)))
    return tuple(out)


@lru_cache(maxsize=None)
def _hodge_signs(n: int, p: int) -> tuple:
    """For each p-tuple I: (component of complement, sign of (I, comp))."""
    idx_c = tuple_index(n, n - p)
    out = []
    for I in index_tuples(n, p):
        J = tuple(i for i in range(n) if i not in I)
        out.append((idx_c[J], _perm_sign(I + J)))
    return tuple(out)


# ---------------------------------------------------------------------------
# regions


class Region:
    """Rectangular coordinate patch with node grid and metric.

    Parameters
    ----------
    bounds : sequence of (lo, hi) pairs, one per axis.
    shape : node counts per axis (>= 2; >= 3 wherever derivatives are taken).
    signature : +/-1 per axis; defines the default diagonal metric.
    metric : optional callable mesh -> (*shape, n, n) array, or a plain
        array; overrides the diagonal default.
    slice_spec : optional (axis, node_index) designating the hypersurface
        used for charge integrals.
    """

    def __init__(
        self,
        bounds,
        shape,
        signature=None,
        metric=None,
        slice_spec=None,
    ):
        self.bounds = np.asarray(bounds, dtype=float)
        if self.bounds.ndim != 2 or self.bounds.shape[1] != 2:
            raise ValueError("bounds must be a sequence of (lo, hi) pairs")
        self.dim = self.bounds.shape[0]
        self.shape = tuple(int(s) for s in shape)
        if len(self.shape) != self.dim:
            raise ValueError("shape length must match number of bounds")
        if any(s < 2 for s in self.shape):
            raise ValueError("need at least two nodes per axis")
        if np.any(self.bounds[:, 1] <= self.bounds[:, 0]):
            raise ValueError("bounds must be strictly increasing")
        if signature is None:
            signature = (1,) + (-1,) * (self.dim - 1)
        self.signature = tuple(int(s) for s in signature)
        if len(self.signature) != self.dim or any(
            s not in (-1, 1) for s in self.signature
        ):
            raise ValueError("signature must be +/-1 per axis")
        self.axes = [
            np.linspace(lo, hi, num) for (lo, hi), num in zip(self.bounds, self.shape)
        ]
        self.h = np.array(
            [(hi - lo) / (num - 1) for (lo, hi), num in zip(self.bounds, self.shape)]
        )
        self._metric_fn = metric if callable(metric) else None
        self._metric = None if callable(metric) else metric
        if self._metric is not None:
            self._metric = np.asarray(self._metric, dtype=float)
            if self._metric.shape != self.shape + (self.dim, self.dim):
                raise ValueError("metric array has wrong shape")
        if slice_spec is not None:
            axis, index = slice_spec
            index = int(index)
            if not 0 <= axis < self.dim:
                raise ValueError("slice axis out of range")
            if not -self.shape[axis] <= index < self.shape[axis]:
                raise ValueError("slice index out of range")
            slice_spec = (int(axis), index % self.shape[axis])
        self.slice_spec = slice_spec
        self._cache = {}

    # -- geometry ----------------------------------------------------------

    def mesh(self):
        """Dense coordinate arrays, one per axis, each of shape self.shape."""
        return np.meshgrid(*self.axes, indexing="ij")

    def metric(self) -> np.ndarray:
        if "g" not in self._cache:
            if self._metric is not None:
                g = self._metric
            elif self._metric_fn is not None:
                g = np.asarray(self._metric_fn(self.mesh()), dtype=float)
                if g.shape != self.shape + (self.dim, self.dim):
                    raise ValueError("metric callable returned wrong shape")
            else:
                g = np.zeros(self.shape + (self.dim, self.dim))
                for i, s in enumerate(self.signature):
                    g[..., i, i] = s
            if not np.allclose(g, np.swapaxes(g, -1, -2), atol=1e-12):
                raise ValueError("metric must be symmetric at every node")
            self._cache["g"] = g
        return self._cache["g"]

    def det_metric(self) -> np.ndarray:
        if "det" not in self._cache:
            det = np.linalg.det(self.metric())
            if np.min(np.abs(det)) < EPS_DET:
                raise DegenerateMetric(
                    f"|det g| fell to {np.min(np.abs(det)):.3e} at some node"
                )
            self._cache["det"] = det
        return self._cache["det"]

    def sqrt_abs_det(self) -> np.ndarray:
        return np.sqrt(np.abs(self.det_metric()))

    def inv_metric(self) -> np.ndarray:
        if "ginv" not in self._cache:
            self.det_metric()  # nondegeneracy gate
            self._cache["ginv"] = np.linalg.inv(self.metric())
        return self._cache["ginv"]

    def is_flat_diagonal(self) -> bool:
        return self._metric is None and self._metric_fn is None

    def node_volume(self) -> float:
        return float(np.prod(self.h))

    # -- derived regions ----------------------------------------------------

    def refined(self, factor: int = 2) -> "Region":
        """Same box with (s-1)*factor + 1 nodes per axis (nested grids)."""
        if self._metric is not None:
            raise ValueError("cannot refine a region with a baked metric array")
        new_shape = tuple((s - 1) * factor + 1 for s in self.shape)
        spec = self.slice_spec
        if spec is not None:
            spec = (spec[0], spec[1] * factor)
        return Region(
            self.bounds,
            new_shape,
            self.signature,
            metric=self._metric_fn,
            slice_spec=spec,
        )

    def with_slice(self, axis: int, index: int) -> "Region":
        out = Region(
            self.bounds,
            self.shape,
            self.signature,
            metric=self._metric_fn if self._metric_fn is not None else self._metric,
            slice_spec=(axis, index),
        )
        out._cache = self._cache
        return out

    def sliced(self, axis: int, index: int) -> "Region":
        """The (dim-1)-region at axes[axis] == node index."""
        keep = [i for i in range(self.dim) if i != axis]
        g = self.metric()
        take = [slice(None)] * self.dim
        take[axis] = index
        gsub = g[tuple(take)][..., keep, :][..., :, keep]
        sub = Region(
            self.bounds[keep],
            tuple(self.shape[i] for i in keep),
            tuple(self.signature[i] for i in keep),
            metric=gsub if not self.is_flat_diagonal() else None,
        )
        return sub


# ---------------------------------------------------------------------------
# form fields


class FormField:
    """Degree-p form sampled on the nodes of a Region."""

    def __init__(self, region: Region, degree: int, vspace: ValueSpace, values):
        if not 0 <= degree <= region.dim:
            raise DegreeOverflow(f"degree {degree} outside 0..{region.dim}")
        self.region = region
        self.degree = int(degree)
        self.vspace = vspace
        ncomp = math.comb(region.dim, degree)
        expected = region.shape + (ncomp,) + vspace.shape
        values = np.asarray(values)
        if values.shape != expected:
            raise ValueError(f"values shape {values.shape}, expected {expected}")
        if vspace.dtype is complex:
            values = values.astype(complex, copy=False)
        elif np.iscomplexobj(values):
            raise TypeError("complex values in a real value space")
        self.values = values

    # -- constructors -------------------------------------------------------

    @classmethod
    def zero(cls, region: Region, degree: int, vspace: ValueSpace) -> "FormField":
        ncomp = math.comb(region.dim, degree)
        values = np.zeros(region.shape + (ncomp,) + vspace.shape, dtype=vspace.dtype)
        return cls(region, degree, vspace, values)

    @classmethod
    def from_function(
        cls, region: Region, degree: int, vspace: ValueSpace, fn: Callable
    ) -> "FormField":
        """fn(mesh) -> values array (full shape) or list of per-component arrays."""
        out = fn(region.mesh())
        if isinstance(out, (list, tuple)):
            out = np.stack(
                [np.broadcast_to(c, region.shape + vspace.shape) for c in out],
                axis=region.dim,
            )
        return cls(region, degree, vspace, np.asarray(out, dtype=vspace.dtype))

    # -- bookkeeping ---------------------------------------------------------

    @property
    def ncomp(self) -> int:
        return math.comb(self.region.dim, self.degree)

    def component(self, idx_tuple) -> np.ndarray:
        k = tuple_index(self.region.dim, self.degree)[tuple(idx_tuple)]
        return self.values[(slice(None),) * self.region.dim + (k,)]

    def copy(self) -> "FormField":
        return FormField(self.region, self.degree, self.vspace, self.values.copy())

    def _check_mate(self, other: "FormField"):
        if other.region is not self.region and other.region.shape != self.region.shape:
            raise ValueError("forms live on different regions")
        if other.degree != self.degree or other.vspace.shape != self.vspace.shape:
            raise DegreeMismatch("incompatible forms")

    # -- arithmetic ----------------------------------------------------------

    def __add__(self, other: "FormField") -> "FormField":
        self._check_mate(other)
        return FormField(self.region, self.degree, self.vspace, self.values + other.values)

    def __sub__(self, other: "FormField") -> "FormField":
        self._check_mate(other)
        return FormField(self.region, self.degree, self.vspace, self.values - other.values)

    def __mul__(self, scalar) -> "FormField":
        return FormField(self.region, self.degree, self.vspace, self.values * scalar)

    __rmul__ = __mul__

    def __neg__(self) -> "FormField":
        return FormField(self.region, self.degree, self.vspace, -self.values)

    def scale_nodewise(self, weight: np.ndarray) -> "FormField":
        """Multiply by a scalar node field (e.g. sqrt|det g|)."""
        w = np.asarray(weight)
        extra = (1,) * (self.values.ndim - w.ndim)
        return FormField(
            self.region, self.degree, self.vspace, self.values * w.reshape(w.shape + extra)
        )

    def max_abs(self) -> float:
        if self.values.size == 0:
            return 0.0
        return float(np.max(np.abs(self.values)))

    def real_part(self) -> "FormField":
        vs = replace(self.vspace, dtype=float)
        return FormField(self.region, self.degree, vs, np.ascontiguousarray(self.values.real))


# ---------------------------------------------------------------------------
# calculus


def exterior_derivative(f: FormField) -> FormField:
    """d f with O(h^2) one-sided closures at the patch edges.

    The discrete d of a discrete d vanishes to round-off because the
    per-axis stencils commute exactly.
    """
    region, n, p = f.region, f.region.dim, f.degree
    if p >= n:
        raise DegreeOverflow("cannot raise degree past the dimension")
    out = FormField.zero(region, p + 1, f.vspace)
    idx_p = tuple_index(n, p)
    idx_out = tuple_index(n, p + 1)
    lead = (slice(None),) * n
    for K in index_tuples(n, p + 1):
        k = idx_out[K]
        for j, i in enumerate(K):
            I = K[:j] + K[j + 1 :]
            comp = f.values[lead + (idx_p[I],)]
            d = np.gradient(comp, region.axes[i], axis=i, edge_order=2)
            out.values[lead + (k,)] += ((-1) ** j) * d
    return out


_MATMUL = "...ij,...jk->...ik"


def _pair_arrays(pairing: str, a: np.ndarray, b: np.ndarray):
    if pairing == "mul":
        return a * b
    if pairing == "trace":
        return np.einsum("...ij,...ji->...", a, b)
    if pairing == "inner":
        return np.einsum("...i,...i->...", np.conj(a), b)
    if pairing == "rep":
        return np.einsum("...ij,...j->...i", a, b)
    if pairing == "matmul":
        return np.einsum(_MATMUL, a, b)
    if pairing == "bracket":
        return np.einsum(_MATMUL, a, b) - np.einsum(_MATMUL, b, a)
    if pairing == "outer":
        return np.einsum("...i,...j->...ij", a, b)
    raise PairingMismatch(f"unknown pairing '{pairing}'")


def _pair_vspace(pairing: str, a: ValueSpace, b: ValueSpace) -> ValueSpace:
    complex_out = a.dtype is complex or b.dtype is complex
    sdtype = complex if complex_out else float
    if pairing == "mul":
        if not (a.is_scalar() and b.is_scalar()):
            raise PairingMismatch("mul needs scalar values on both sides")
        return ValueSpace("scalar", dtype=sdtype)
    if pairing == "trace":
        if not (a.is_matrix() and b.is_matrix()):
            raise PairingMismatch("trace needs matrix values on both sides")
        return ValueSpace("scalar", dtype=sdtype)
    if pairing == "inner":
        if not (a.is_vector() and b.is_vector()):
            raise PairingMismatch("inner needs vector values on both sides")
        return ValueSpace("scalar", dtype=sdtype)
    if pairing == "rep":
        if not (a.is_matrix() and b.is_vector()):
            raise PairingMismatch("rep needs matrix (x) vector")
        return ValueSpace(b.kind, b.tag, b.shape, b.dtype if not complex_out else complex)
    if pairing in ("matmul", "bracket"):
        if not (a.is_matrix() and b.is_matrix()):
            raise PairingMismatch(f"{pairing} needs matrix values on both sides")
        return ValueSpace(a.kind, a.tag, a.shape, sdtype)
    if pairing == "outer":
        if not (a.is_vector() and b.is_vector()):
            raise PairingMismatch("outer needs vector values on both sides")
        return ValueSpace("algebra", None, (a.shape[0], b.shape[0]), sdtype)
    raise PairingMismatch(f"unknown pairing '{pairing}'")


def wedge(a: FormField, b: FormField, pairing="mul", pair_fn=None, out_vspace=None):
    """Wedge product with the requested value pairing.

    pairing may be one of 'mul', 'trace', 'inner', 'rep', 'matmul',
    'bracket', 'outer', or a callable (avals, bvals) -> paired values
    (then out_vspace must be given).
    """
    if a.region.shape != b.region.shape:
        raise ValueError("wedge operands live on different grids")
    n = a.region.dim
    p, q = a.degree, b.degree
    if p + q > n:
        raise DegreeOverflow(f"wedge degree {p}+{q} exceeds dimension {n}")
    if callable(pairing):
        pair_fn, pairing = pairing, None
    if pair_fn is not None:
        if out_vspace is None:
            raise PairingMismatch("callable pairing needs an explicit out_vspace")
        vspace = out_vspace
        pair = pair_fn
    else:
        vspace = _pair_vspace(pairing, a.vspace, b.vspace)
        pair = lambda x, y: _pair_arrays(pairing, x, y)  # noqa: E731
    out = FormField.zero(a.region, p + q, vspace)
    lead = (slice(None),) * n
    for ia, ib, iout, sign in _wedge_table(n, p, q):
        out.values[lead + (iout,)] += sign * pair(
            a.values[lead + (ia,)], b.values[lead + (ib,)]
        )
    return out


def hodge(f: FormField, region: Optional[Region] = None) -> FormField:
    """Metric Hodge dual: (*f)_{comp(I)} = sqrt|g| eps(I, comp(I)) f^I."""
    region = region or f.region
    n, p = region.dim, f.degree
    idx_p = index_tuples(n, p)
    lead = (slice(None),) * n
    if region.is_flat_diagonal():
        sig = region.signature
        sqrtg = 1.0
        raised = np.empty_like(f.values)
        for k, I in enumerate(idx_p):
            factor = 1
            for i in I:
                factor *= sig[i]
            raised[lead + (k,)] = factor * f.values[lead + (k,)]
    else:
        ginv = region.inv_metric()
        sqrtg = region.sqrt_abs_det()
        ncomp = len(idx_p)
        mat = np.empty(region.shape + (ncomp, ncomp))
        for ki, I in enumerate(idx_p):
            rows = ginv[..., list(I), :] if p else None
            for kj, J in enumerate(idx_p):
                if p == 0:
                    mat[..., ki, kj] = 1.0
                else:
                    sub = rows[..., :, list(J)]
                    mat[..., ki, kj] = np.linalg.det(sub) if p > 1 else sub[..., 0, 0]
        flat = f.values.reshape(region.shape + (ncomp, -1))
        raised = np.einsum("...ab,...bk->...ak", mat, flat).reshape(f.values.shape)
    out = FormField.zero(region, n - p, ValueSpace(
        f.vspace.kind, f.vspace.tag, f.vspace.shape,
        complex if f.vspace.dtype is complex else float))
    for k, (kc, sign) in enumerate(_hodge_signs(n, p)):
        term = sign * raised[lead + (k,)]
        if not region.is_flat_diagonal():
            w = np.asarray(sqrtg)
            term = term * w.reshape(w.shape + (1,) * (term.ndim - w.ndim))
        out.values[lead + (kc,)] += term
    return out


def integrate(f: FormField, region: Optional[Region] = None):
    """Trapezoid integral of a top-degree form over its region."""
    region = region or f.region
    if f.degree != region.dim:
        raise DegreeMismatch(
            f"integrate needs a top form (degree {region.dim}), got {f.degree}"
        )
    acc = f.values[(slice(None),) * region.dim + (0,)]
    for axis in range(region.dim - 1, -1, -1):
        acc = np.trapezoid(acc, x=region.axes[axis], axis=axis)
    return acc


def restrict_to_slice(
    f: FormField,
    axis: Optional[int] = None,
    index: Optional[int] = None,
) -> FormField:
    """Pull a form back to the designated (or given) hypersurface."""
    region = f.region
    if axis is None:
        if region.slice_spec is None:
            raise NoSlice("region carries no designated hypersurface")
        axis, index = region.slice_spec
    n, p = region.dim, f.degree
    if p > n - 1:
        raise DegreeOverflow("cannot restrict a top form to a hypersurface")
    sub = region.sliced(axis, index)
    keep = [i for i in range(n) if i != axis]
    remap = {old: new for new, old in enumerate(keep)}
    take = [slice(None)] * n
    take[axis] = index
    sliced = f.values[tuple(take)]
    idx_new = tuple_index(n - 1, p)
    out = FormField.zero(sub, p, f.vspace)
    for k, I in enumerate(index_tuples(n, p)):
        if axis in I:
            continue
        newI = tuple(remap[i] for i in I)
        out.values[(slice(None),) * (n - 1) + (idx_new[newI],)] = sliced[
            (slice(None),) * (n - 1) + (k,)
        ]
    return out


def boundary_integrate(f: FormField, region: Optional[Region] = None):
    """Integral of an (m-1)-form over the boundary of an m-dim region.

    Faces are oriented by the coordinate convention
    sum_a (-1)^a [x_a = max  minus  x_a = min], which matches the discrete
    Stokes identity integrate(d w) = boundary_integrate(w) at O(h^2).
    """
    region = region or f.region
    m = region.dim
    if f.degree != m - 1:
        raise DegreeMismatch(f"boundary integral needs degree {m - 1}, got {f.degree}")
    if m == 1:
        lead_last = f.values[-1, 0]
        lead_first = f.values[0, 0]
        return lead_last - lead_first
    total = None
    for a in range(m):
        hi = integrate(restrict_to_slice(f, axis=a, index=region.shape[a] - 1))
        lo = integrate(restrict_to_slice(f, axis=a, index=0))
        term = ((-1) ** a) * (hi - lo)
        total = term if total is None else total + term
    return total


# ---------------------------------------------------------------------------
# norms and convergence helpers


def form_norm(f: FormField) -> float:
    """Discrete L2 norm: sqrt(sum |components|^2 * node volume)."""
    return float(
        np.sqrt(np.sum(np.abs(f.values) ** 2).real * f.region.node_volume())
    )


def convergence_order(hs: Sequence[float], errs: Sequence[float]) -> float:
    """Least-squares slope of log(err) against log(h)."""
    hs = np.asarray(hs, dtype=float)
    errs = np.asarray(errs, dtype=float)
    if np.any(errs <= 0):
        return float("inf")
    return float(np.polyfit(np.log(hs), np.log(errs), 1)[0])
