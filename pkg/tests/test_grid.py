"""Grid calculus tests.

The Hodge and wedge checks compare against brute-force oracles that loop
over all (non-increasing) index tuples with an explicit Levi-Civita sign
function, written independently of the component bookkeeping in grid.py.
"""

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gaugephase import grid
from gaugephase.errors import (
    DegenerateMetric,
    DegreeMismatch,
    DegreeOverflow,
    NoSlice,
    PairingMismatch,
)
from gaugephase.grid import (
    CSCALAR,
    REAL,
    FormField,
    Region,
    ValueSpace,
    boundary_integrate,
    convergence_order,
    exterior_derivative,
    hodge,
    integrate,
    restrict_to_slice,
    wedge,
)

RNG = np.random.default_rng(20260814)


# ---------------------------------------------------------------------------
# oracles


def levi_civita_sign(seq):
    """Sign of a full permutation, 0 on repeats (independent oracle helper)."""
    seq = list(seq)
    if len(set(seq)) != len(seq):
        return 0
    sign = 1
    for i in range(len(seq)):
        for j in range(i + 1, len(seq)):
            if seq[i] > seq[j]:
                sign = -sign
    return sign


def hodge_oracle(f: FormField, g: np.ndarray) -> FormField:
    """Brute-force (*w)_J = sqrt|g|/p! eps_{I J} w^I with full index loops."""
    region = f.region
    n, p = region.dim, f.degree
    ginv = np.linalg.inv(g)
    sqrtg = np.sqrt(np.abs(np.linalg.det(g)))
    # build dense antisymmetric representation from increasing components
    comp = {
        I: f.values[(slice(None),) * n + (k,)]
        for k, I in enumerate(grid.index_tuples(n, p))
    }
    full = {}
    for I in itertools.permutations(range(n), p):
        inc = tuple(sorted(I))
        # sign that reorders I into increasing order
        sgn = levi_civita_sign([list(inc).index(i) for i in I]) if p else 1
        full[I] = sgn * comp[inc] if p else comp[()]
    out = FormField.zero(region, n - p, f.vspace)
    idx_out = grid.tuple_index(n, n - p)
    for J in grid.index_tuples(n, n - p):
        acc = np.zeros_like(out.values[(slice(None),) * n + (0,)])
        for I in itertools.permutations(range(n), p):
            eps = levi_civita_sign(I + J)
            if eps == 0:
                continue
            # raise all p indices with ginv
            raised = np.zeros_like(acc)
            for K in itertools.permutations(range(n), p):
                factor = np.ones(region.shape)
                for a, b in zip(I, K):
                    factor = factor * ginv[..., a, b]
                term = full[K]
                raised = raised + _bc(factor, term) * term
            acc = acc + eps * raised
        scale = sqrtg / math.factorial(p) if p else sqrtg
        out.values[(slice(None),) * n + (idx_out[J],)] = _bc(scale, acc) * acc
    return out


def _bc(w, like):
    w = np.asarray(w)
    if w.ndim == 0:
        return w
    return w.reshape(w.shape + (1,) * (np.asarray(like).ndim - w.ndim))


def smooth_scalar(region, seed, flat_edges=False):
    rng = np.random.default_rng(seed)
    mesh = region.mesh()
    out = np.zeros(region.shape)
    for _ in range(2):
        coeff = rng.normal(scale=0.7)
        phase = rng.uniform(0, 2 * np.pi, size=region.dim)
        freq = rng.integers(1, 3, size=region.dim)
        term = coeff * np.ones(region.shape)
        for i, x in enumerate(mesh):
            lo, hi = region.bounds[i]
            xi = (x - lo) / (hi - lo)
            if flat_edges:
                term = term * np.sin(np.pi * xi) ** 2
            else:
                term = term * np.cos(freq[i] * np.pi * xi + phase[i])
        out += term
    return out


def random_form(region, degree, seed, vspace=REAL):
    rng = np.random.default_rng(seed)
    f = FormField.zero(region, degree, vspace)
    for k in range(f.ncomp):
        base = smooth_scalar(region, seed * 31 + k)
        extra = np.ones(vspace.shape, dtype=vspace.dtype)
        if vspace.shape:
            extra = rng.normal(size=vspace.shape)
            if vspace.dtype is complex:
                extra = extra + 1j * rng.normal(size=vspace.shape)
        f.values[(slice(None),) * region.dim + (k,)] = np.multiply.outer(base, extra)
    return f


# ---------------------------------------------------------------------------
# regions and basic bookkeeping


def test_region_rejects_bad_bounds():
    with pytest.raises(ValueError):
        Region([(0.0, 0.0)], (4,))
    with pytest.raises(ValueError):
        Region([(0.0, 1.0)], (4, 4))


def test_region_rejects_asymmetric_metric():
    bad = np.zeros((3, 3, 2, 2))
    bad[..., 0, 1] = 1.0
    with pytest.raises(ValueError):
        Region([(0, 1), (0, 1)], (3, 3), metric=bad).metric()


def test_degenerate_metric_detected():
    g = np.zeros((3, 3, 2, 2))
    g[..., 0, 0] = 1.0
    g[..., 1, 1] = np.linspace(0, 1, 3)[None, :] ** 2  # vanishes on one line
    region = Region([(0, 1), (0, 1)], (3, 3), metric=g)
    with pytest.raises(DegenerateMetric):
        region.det_metric()


def test_constant_top_form_integrates_exactly():
    # c * vol on a box of volume 6 -> 6c, trapezoid exact on constants
    region = Region([(0, 2), (0, 3)], (7, 5), signature=(1, 1))
    f = FormField.zero(region, 2, REAL)
    f.values[..., 0] = 2.5
    assert integrate(f) == pytest.approx(2.5 * 6.0, abs=1e-13)


def test_degree_errors():
    region = Region([(0, 1), (0, 1)], (5, 5), signature=(1, 1))
    top = FormField.zero(region, 2, REAL)
    with pytest.raises(DegreeOverflow):
        exterior_derivative(top)
    with pytest.raises(DegreeMismatch):
        integrate(FormField.zero(region, 1, REAL))
    with pytest.raises(DegreeOverflow):
        wedge(top, FormField.zero(region, 1, REAL))
    with pytest.raises(PairingMismatch):
        wedge(
            FormField.zero(region, 1, ValueSpace("algebra", "su2", (2, 2), complex)),
            FormField.zero(region, 1, REAL),
            pairing="mul",
        )


# ---------------------------------------------------------------------------
# exterior derivative


def test_d_of_d_is_roundoff():
    region = Region([(0, 1), (0, 1), (0, 1)], (9, 9, 9), signature=(1, 1, 1))
    f = random_form(region, 0, seed=3)
    ddf = exterior_derivative(exterior_derivative(f))
    assert ddf.max_abs() < 1e-12


def test_gradient_of_linear_is_exact():
    region = Region([(0, 1), (0, 2)], (6, 8), signature=(1, 1))
    x, y = region.mesh()
    f = FormField(region, 0, REAL, (2 * x - 3 * y)[..., None])
    df = exterior_derivative(f)
    assert np.allclose(df.values[..., 0], 2.0, atol=1e-12)
    assert np.allclose(df.values[..., 1], -3.0, atol=1e-12)


def test_d_converges_at_second_order():
    errs, hs = [], []
    for nnodes in (9, 17, 33):
        region = Region([(0, 1)], (nnodes,), signature=(1,))
        (x,) = region.mesh()
        f = FormField(region, 0, REAL, np.sin(2 * np.pi * x)[..., None])
        df = exterior_derivative(f)
        exact = 2 * np.pi * np.cos(2 * np.pi * x)
        errs.append(np.max(np.abs(df.values[..., 0] - exact)))
        hs.append(region.h[0])
    assert convergence_order(hs, errs) > 1.8


# ---------------------------------------------------------------------------
# wedge


def test_wedge_hand_value_2d():
    region = Region([(0, 1), (0, 1)], (4, 4), signature=(1, 1))
    x, y = region.mesh()
    a = FormField(region, 1, REAL, np.stack([x, np.zeros_like(x)], axis=-1))
    b = FormField(region, 1, REAL, np.stack([np.zeros_like(y), y], axis=-1))
    ab = wedge(a, b)
    # (x dx0) ^ (y dx1) = x y dx0^dx1
    assert np.allclose(ab.values[..., 0], x * y, atol=1e-14)
    ba = wedge(b, a)
    assert np.allclose(ba.values, -ab.values, atol=1e-14)


@settings(max_examples=25, deadline=None)
@given(
    p=st.integers(min_value=0, max_value=2),
    q=st.integers(min_value=0, max_value=2),
    seed=st.integers(min_value=0, max_value=10_000),
)
def test_wedge_graded_antisymmetry(p, q, seed):
    if p + q > 3:
        return
    region = Region([(0, 1)] * 3, (4, 4, 4), signature=(1, 1, 1))
    a = random_form(region, p, seed=seed + 1)
    b = random_form(region, q, seed=seed + 2)
    ab = wedge(a, b)
    ba = wedge(b, a)
    assert np.allclose(ab.values, ((-1) ** (p * q)) * ba.values, atol=1e-12)


def test_wedge_associativity():
    region = Region([(0, 1)] * 3, (4, 4, 4), signature=(1, 1, 1))
    a = random_form(region, 1, seed=11)
    b = random_form(region, 1, seed=12)
    c = random_form(region, 1, seed=13)
    left = wedge(wedge(a, b), c)
    right = wedge(a, wedge(b, c))
    assert np.allclose(left.values, right.values, atol=1e-12)


def test_leibniz_rule_converges():
    errs, hs = [], []
    for nnodes in (9, 17, 33):
        region = Region([(0, 1), (0, 1)], (nnodes, nnodes), signature=(1, 1))
        a = random_form(region, 0, seed=5)
        b = random_form(region, 1, seed=6)
        lhs = exterior_derivative(wedge(a, b))
        rhs = wedge(exterior_derivative(a), b) + wedge(a, exterior_derivative(b))
        errs.append((lhs - rhs).max_abs())
        hs.append(region.h[0])
    assert convergence_order(hs, errs) > 1.8


def test_wedge_matrix_pairings():
    region = Region([(0, 1), (0, 1)], (3, 3), signature=(1, 1))
    vs = ValueSpace("algebra", "su2", (2, 2), complex)
    a = random_form(region, 1, seed=21, vspace=vs)
    b = random_form(region, 1, seed=22, vspace=vs)
    tr = wedge(a, b, pairing="trace")
    mm = wedge(a, b, pairing="matmul")
    # trace of the matmul wedge equals the trace pairing
    assert np.allclose(
        np.einsum("...ii->...", mm.values), tr.values, atol=1e-12
    )
    br = wedge(a, a, pairing="bracket")
    mm_aa = wedge(a, a, pairing="matmul")
    # [a^a] = 2 a^a for a matrix-valued 1-form
    assert np.allclose(br.values, 2 * mm_aa.values, atol=1e-12)


# ---------------------------------------------------------------------------
# hodge


def test_hodge_flat_lorentzian_sign_table():
    region = Region([(0, 1)] * 4, (3, 3, 3, 3), signature=(1, -1, -1, -1))
    f = FormField.zero(region, 2, REAL)
    f.values[..., 0] = 1.0  # dx0 ^ dx1
    s = hodge(f)
    # raised indices give g^00 g^11 = -1; eps((0,1),(2,3)) = +1
    k23 = grid.tuple_index(4, 2)[(2, 3)]
    expect = np.zeros(s.ncomp)
    expect[k23] = -1.0
    assert np.allclose(s.values[0, 0, 0, 0], expect, atol=1e-14)


@pytest.mark.parametrize("p", [0, 1, 2])
def test_hodge_matches_bruteforce_oracle_flat(p):
    region = Region([(0, 1)] * 3, (4, 4, 4), signature=(1, -1, -1))
    f = random_form(region, p, seed=40 + p)
    ours = hodge(f)
    oracle = hodge_oracle(f, region.metric())
    assert np.allclose(ours.values, oracle.values, atol=1e-12)


@pytest.mark.parametrize("p", [0, 1, 2])
def test_hodge_matches_bruteforce_oracle_curved(p):
    def metric(mesh):
        x, y = mesh
        g = np.zeros(x.shape + (2, 2))
        lam = 0.3 * x + 0.1 * y
        g[..., 0, 0] = np.exp(2 * lam)
        g[..., 1, 1] = np.exp(2 * lam) * (1 + 0.2 * x**2)
        g[..., 0, 1] = g[..., 1, 0] = 0.1 * x * y
        return g

    region = Region([(0, 1), (0, 1)], (5, 5), signature=(1, 1), metric=metric)
    f = random_form(region, p, seed=50 + p)
    ours = hodge(f)
    oracle = hodge_oracle(f, region.metric())
    assert np.allclose(ours.values, oracle.values, atol=1e-11)


@pytest.mark.parametrize("p", [0, 1, 2, 3])
def test_hodge_involution(p):
    region = Region([(0, 1)] * 3, (4, 4, 4), signature=(1, -1, -1))
    f = random_form(region, p, seed=60 + p)
    ss = hodge(hodge(f))
    n = 3
    sgn = float(np.prod(region.signature))  # +1 for (+,-,-) in 3D
    expect = sgn * ((-1) ** (p * (n - p))) * f.values
    assert np.allclose(ss.values, expect, atol=1e-12)


def test_hodge_matrix_values_pass_through():
    region = Region([(0, 1), (0, 1)], (3, 3), signature=(1, 1))
    vs = ValueSpace("algebra", "su2", (2, 2), complex)
    f = random_form(region, 1, seed=70, vspace=vs)
    s = hodge(f)
    assert s.vspace.shape == (2, 2)
    oracle = hodge_oracle(f, region.metric())
    assert np.allclose(s.values, oracle.values, atol=1e-12)


# ---------------------------------------------------------------------------
# slicing and boundary integration


def test_restrict_drops_normal_components():
    region = Region([(0, 1), (0, 2)], (4, 5), signature=(1, -1), slice_spec=(0, 2))
    x, y = region.mesh()
    f = FormField(region, 1, REAL, np.stack([x + y, x - y], axis=-1))
    sub = restrict_to_slice(f)
    assert sub.region.dim == 1
    assert np.allclose(sub.values[:, 0], (x - y)[2, :], atol=1e-14)


def test_restrict_without_slice_spec_raises():
    region = Region([(0, 1), (0, 1)], (4, 4))
    with pytest.raises(NoSlice):
        restrict_to_slice(FormField.zero(region, 1, REAL))


def test_boundary_integrate_two_endpoints():
    region = Region([(0, 2)], (9,), signature=(1,))
    (x,) = region.mesh()
    f = FormField(region, 0, REAL, (x**2)[..., None])
    assert boundary_integrate(f) == pytest.approx(4.0, abs=1e-13)


def test_stokes_exact_for_affine_forms():
    region = Region([(0, 1), (0, 2)], (5, 6), signature=(1, 1))
    x, y = region.mesh()
    f = FormField(region, 1, REAL, np.stack([1 + 2 * x + y, x - 3 * y], axis=-1))
    lhs = integrate(exterior_derivative(f))
    rhs = boundary_integrate(f)
    assert lhs == pytest.approx(rhs, abs=1e-12)


@pytest.mark.parametrize("dim", [2, 3])
def test_stokes_second_order(dim):
    errs, hs = [], []
    for nnodes in (9, 17, 33):
        region = Region([(0, 1)] * dim, (nnodes,) * dim, signature=(1,) * dim)
        f = random_form(region, dim - 1, seed=90 + dim)
        lhs = integrate(exterior_derivative(f))
        rhs = boundary_integrate(f)
        errs.append(abs(lhs - rhs))
        hs.append(region.h[0])
    assert convergence_order(hs, errs) > 1.8, (hs, errs)


def test_boundary_orientation_matches_divergence():
    # vector field (x, 0) on the unit square: outward flux = 1
    region = Region([(0, 1), (0, 1)], (21, 21), signature=(1, 1))
    x, y = region.mesh()
    # flux form for (P,Q) is P dx1 - Q dx0; here P=x, Q=0
    f = FormField(region, 1, REAL, np.stack([np.zeros_like(x), x], axis=-1))
    assert boundary_integrate(f) == pytest.approx(1.0, abs=1e-12)


# ---------------------------------------------------------------------------
# refinement


def test_refined_region_nests():
    region = Region([(0, 1), (0, 2)], (5, 9), slice_spec=(0, 2))
    fine = region.refined(2)
    assert fine.shape == (9, 17)
    assert fine.slice_spec == (0, 4)
    assert np.allclose(fine.axes[0][::2], region.axes[0])
