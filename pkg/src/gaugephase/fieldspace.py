"""Finite-difference exterior calculus on the space of configurations.

Every variational derivative here is a symmetric difference along a
tangent, with step h = EPS_FS * (1 + |phi|) / (1 + |X|) by default and
one Richardson halving that upgrades the value to fourth order and
yields an error estimate from the two-step disagreement.

Tangents passed as plain values are constant extensions: their mutual
bracket vanishes, so the Kozsul formula for a two-form keeps only the
two directional terms.  A field-dependent vector field is a callable
configuration -> tangent; its bracket with anything is computed by
differencing the callables themselves.

Contractions with vector-valued one-forms (the substitution operators
built from field-dependent parameters) are degree zero and annihilate
scalars; that convention fixes the orderings in the commutation checks.
"""

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np
from scipy.sparse.linalg import cg

from . import lie
from .conventions import CG_MAXITER, EPS_CG, EPS_FS
from .errors import SolverFailure
from .fields import (
    FieldPoint,
    FieldTangent,
    algebra_vspace,
    covariant_derivative,
    group_field_inverse,
    push_tangent,
    vertical_vector,
)
from .grid import FormField, wedge


@dataclass
class FDResult:
    """A differenced value with the step used and an error estimate.

    The estimate is the Richardson disagreement; it is NaN when the
    extrapolation was disabled.
    """

    value: object
    step: float
    error: float


def _size(v) -> float:
    if isinstance(v, FormField):
        return v.max_abs()
    if isinstance(v, FieldTangent):
        return v.norm()
    if isinstance(v, np.ndarray):
        return float(np.max(np.abs(v))) if v.size else 0.0
    return abs(v)


def _comb(ca: float, a, cb: float, b):
    # works for floats, FormField and FieldTangent alike
    if isinstance(a, FieldTangent):
        return a.scaled(ca) + b.scaled(cb)
    return ca * a + cb * b


def _err(e: float) -> float:
    # disabled Richardson reports NaN; treat it as no estimate
    return 0.0 if math.isnan(e) else e


def fd_step(phi: FieldPoint, X: FieldTangent, eps: float = EPS_FS) -> float:
    return eps * (1.0 + phi.norm()) / (1.0 + X.norm())


def fs_directional(
    func: Callable[[FieldPoint], object],
    phi: FieldPoint,
    X: FieldTangent,
    eps: float = EPS_FS,
    richardson: bool = True,
) -> FDResult:
    """Derivative of a functional along the constant extension of X.

    func may return a float, a FormField or a FieldTangent.  Symmetric
    differences are exact on affine functionals; the Richardson step
    removes the leading h^2 truncation term otherwise.
    """
    h = fd_step(phi, X, eps)

    def diff(step: float):
        plus = func(phi.shifted(step, X))
        minus = func(phi.shifted(-step, X))
        return _comb(0.5 / step, plus, -0.5 / step, minus)

    coarse = diff(h)
    if not richardson:
        return FDResult(coarse, h, math.nan)
    fine = diff(0.5 * h)
    value = _comb(4.0 / 3.0, fine, -1.0 / 3.0, coarse)
    error = _size(_comb(1.0, fine, -1.0, coarse)) / 3.0
    return FDResult(value, 0.5 * h, error)


# ---------------------------------------------------------------------------
# vector fields on configuration space

VectorField = Callable[[FieldPoint], FieldTangent]


def constant_field(X: FieldTangent) -> VectorField:
    return lambda phi: X


def as_vector_field(obj: Union[FieldTangent, VectorField]) -> VectorField:
    if isinstance(obj, FieldTangent):
        return constant_field(obj)
    return obj


def _is_constant(obj) -> bool:
    return isinstance(obj, FieldTangent)


def vertical_field(param) -> VectorField:
    """Vertical vector field of a gauge parameter.

    param is either a fixed algebra-valued scalar or a FieldDependentMap;
    either way the tangent is re-evaluated at the configuration it is
    attached to.
    """

    def vf(phi: FieldPoint) -> FieldTangent:
        chi = param(phi) if isinstance(param, FieldDependentMap) else param
        return vertical_vector(chi, phi)

    return vf


def vf_bracket(
    Xf: VectorField,
    Yf: VectorField,
    phi: FieldPoint,
    eps: float = EPS_FS,
    richardson: bool = True,
) -> FieldTangent:
    """Lie bracket of two vector fields at phi.

    On the affine configuration space [X, Y] = X(Y) - Y(X) componentwise;
    both directional terms are differenced, so constant fields commute
    exactly.
    """
    dY = fs_directional(Yf, phi, Xf(phi), eps, richardson).value
    dX = fs_directional(Xf, phi, Yf(phi), eps, richardson).value
    return dY - dX


# ---------------------------------------------------------------------------
# one- and two-forms

OneForm = Callable[[FieldPoint, FieldTangent], object]


def interior_vertical(alpha: OneForm, chi, phi: FieldPoint):
    """Contraction of a one-form with the vertical lift of chi."""
    value = chi(phi) if isinstance(chi, FieldDependentMap) else chi
    return alpha(phi, vertical_vector(value, phi))


def fs_two_form_kozsul(
    alpha: OneForm,
    phi: FieldPoint,
    X,
    Y,
    eps: float = EPS_FS,
    richardson: bool = True,
) -> FDResult:
    """Exterior derivative of a one-form evaluated on two arguments.

    d alpha(X, Y) = X(alpha(Y)) - Y(alpha(X)) - alpha([X, Y]); the last
    term is dropped when both arguments are constant extensions.
    """
    Xf, Yf = as_vector_field(X), as_vector_field(Y)
    left = fs_directional(lambda p: alpha(p, Yf(p)), phi, Xf(phi), eps, richardson)
    right = fs_directional(lambda p: alpha(p, Xf(p)), phi, Yf(phi), eps, richardson)
    value = _comb(1.0, left.value, -1.0, right.value)
    err = left.error + right.error
    if not (_is_constant(X) and _is_constant(Y)):
        value = _comb(1.0, value, -1.0, alpha(phi, vf_bracket(Xf, Yf, phi, eps, richardson)))
    return FDResult(value, left.step, err)


def lie_derivative(
    alpha: OneForm,
    Xf: VectorField,
    phi: FieldPoint,
    Y,
    eps: float = EPS_FS,
    richardson: bool = True,
) -> FDResult:
    """Lie derivative of a one-form along Xf, contracted with Y.

    Cartan's formula collapses to X(alpha(Y)) - alpha([X, Y]) for vector
    fields, which is what gets differenced.
    """
    Yf = as_vector_field(Y)
    lead = fs_directional(lambda p: alpha(p, Yf(p)), phi, Xf(phi), eps, richardson)
    value = _comb(1.0, lead.value, -1.0, alpha(phi, vf_bracket(Xf, Yf, phi, eps, richardson)))
    return FDResult(value, lead.step, lead.error)


# ---------------------------------------------------------------------------
# field-dependent gauge parameters


@dataclass
class FieldDependentMap:
    """Gauge parameter (or group element) depending on the configuration.

    evaluator maps a configuration to a scalar FormField, algebra valued
    for kind 'algebra' and group valued for kind 'group'.  Directional
    derivatives are always finite differences of the evaluator; closed
    forms are never assumed.
    """

    evaluator: Callable[[FieldPoint], FormField]
    kind: str = "algebra"
    name: str = ""

    def __call__(self, phi: FieldPoint) -> FormField:
        return self.evaluator(phi)

    def directional(
        self,
        phi: FieldPoint,
        X: FieldTangent,
        eps: float = EPS_FS,
        richardson: bool = True,
    ) -> FDResult:
        return fs_directional(self.evaluator, phi, X, eps, richardson)

    def log_derivative(
        self,
        phi: FieldPoint,
        X: FieldTangent,
        eps: float = EPS_FS,
        richardson: bool = True,
    ) -> FDResult:
        """Right logarithmic derivative (X . u) u^{-1} of a group map."""
        if self.kind != "group":
            raise ValueError("log_derivative needs a group-valued map")
        du = self.directional(phi, X, eps, richardson)
        inv = group_field_inverse(self.evaluator(phi))
        values = np.einsum("...ab,...bc->...ac", du.value.values, inv.values)
        form = FormField(phi.region, 0, algebra_vspace(phi.group), values)
        return FDResult(form, du.step, du.error)

    @classmethod
    def constant(cls, value: FormField, kind: str = "algebra", name: str = ""):
        return cls(lambda phi: value, kind, name)


def extended_bracket(
    bchi: FieldDependentMap,
    beta: FieldDependentMap,
    phi: FieldPoint,
    eps: float = EPS_FS,
    richardson: bool = True,
) -> FDResult:
    """Bracket of field-dependent parameters.

    The pointwise commutator is corrected by the derivative of each map
    along the vertical lift of the other; for constant maps it reduces
    to the plain commutator.
    """
    chi_val, eta_val = bchi(phi), beta(phi)
    value = wedge(chi_val, eta_val, "bracket")
    d_eta = beta.directional(phi, vertical_vector(chi_val, phi), eps, richardson)
    d_chi = bchi.directional(phi, vertical_vector(eta_val, phi), eps, richardson)
    return FDResult(value + d_eta.value - d_chi.value, d_eta.step, d_eta.error + d_chi.error)


# ---------------------------------------------------------------------------
# connections


@dataclass
class FieldSpaceConnection:
    """Algebra-valued one-form splitting tangents into vertical + rest.

    evaluator maps (configuration, tangent) to a scalar algebra-valued
    FormField.  details records choices the construction had to make
    (boundary conditions, solver tolerances) so reports can carry them.
    """

    kind: str
    evaluator: Callable[[FieldPoint, FieldTangent], FormField]
    details: dict = field(default_factory=dict)

    def __call__(self, phi: FieldPoint, X: FieldTangent) -> FormField:
        return self.evaluator(phi, X)

    def horizontal(self, phi: FieldPoint, X: FieldTangent) -> FieldTangent:
        return horizontal_project(X, phi, self)

    def shifted(self, beta: Callable[[FieldPoint, FieldTangent], FormField]):
        """New connection displaced by a tensorial one-form."""
        base = self.evaluator
        return FieldSpaceConnection(
            "shifted",
            lambda phi, X: base(phi, X) + beta(phi, X),
            dict(self.details, shifted_from=self.kind),
        )

    def curvature(
        self,
        phi: FieldPoint,
        X,
        Y,
        eps: float = EPS_FS,
        richardson: bool = True,
    ) -> FDResult:
        """Curvature on a pair of tangents.

        Kozsul terms of the connection one-form plus the commutator of
        the two contractions; the result is tensorial, so constant
        extensions of the argument values suffice.
        """
        two = fs_two_form_kozsul(self.evaluator, phi, X, Y, eps, richardson)
        Xv = X if isinstance(X, FieldTangent) else X(phi)
        Yv = Y if isinstance(Y, FieldTangent) else Y(phi)
        comm = wedge(self.evaluator(phi, Xv), self.evaluator(phi, Yv), "bracket")
        return FDResult(two.value + comm, two.step, two.error)


def horizontal_project(X: FieldTangent, phi: FieldPoint, omega: FieldSpaceConnection) -> FieldTangent:
    return X - vertical_vector(omega(phi, X), phi)


def flat_from_dressing(
    extractor: FieldDependentMap,
    eps: float = EPS_FS,
    richardson: bool = True,
) -> FieldSpaceConnection:
    """Connection carried by a dressing: minus the log derivative of it.

    Flat by construction; the curvature check is still worth running
    since here it probes the differencing itself.
    """

    def evaluator(phi: FieldPoint, X: FieldTangent) -> FormField:
        return -1.0 * extractor.log_derivative(phi, X, eps, richardson).value

    return FieldSpaceConnection(
        "flat_from_dressing",
        evaluator,
        {"source": extractor.name or "dressing", "eps": eps},
    )


def _real_flat(values: np.ndarray) -> np.ndarray:
    if np.iscomplexobj(values):
        return np.concatenate([values.real.ravel(), values.imag.ravel()])
    return values.ravel()


def singer_dewitt(rtol: float = EPS_CG, maxiter: int = CG_MAXITER) -> FieldSpaceConnection:
    """Orbit-orthogonal connection from the trace metric on tangents.

    The contraction solves the normal equations of
    min |X_A - D^A w|^2 over algebra-valued scalars w vanishing on the
    region boundary (a choice: the continuum construction is stated on
    closed manifolds and fixes none).  The Gram matrix is assembled
    densely column by column, so this is meant for small grids; the
    trace inner product on matrices is exactly the flat inner product
    of their real and imaginary parts, with uniform node weights.
    Only the gauge-field slot of the tangent enters the metric.
    """

    def evaluator(phi: FieldPoint, X: FieldTangent) -> FormField:
        region = phi.region
        spec = lie.group(phi.group)
        vs = algebra_vspace(phi.group)
        interior = [
            idx
            for idx in np.ndindex(*region.shape)
            if all(0 < i < s - 1 for i, s in zip(idx, region.shape))
        ]
        if not interior:
            raise SolverFailure("no interior nodes to carry the unknown")
        columns = []
        for idx in interior:
            for b in spec.basis:
                w = FormField.zero(region, 0, vs)
                w.values[idx + (0,)] = b
                columns.append(_real_flat(covariant_derivative(w, phi.A, "adjoint").values))
        G = np.stack(columns, axis=1)
        rhs = G.T @ _real_flat(X.A.values)
        gram = G.T @ G
        sol, info = cg(gram, rhs, rtol=rtol, atol=0.0, maxiter=maxiter)
        if info != 0:
            raise SolverFailure(f"conjugate gradient stopped with code {info}")
        out = FormField.zero(region, 0, vs)
        k = 0
        for idx in interior:
            acc = sum(c * b for c, b in zip(sol[k : k + len(spec.basis)], spec.basis))
            out.values[idx + (0,)] = acc
            k += len(spec.basis)
        return out

    return FieldSpaceConnection(
        "singer_dewitt",
        evaluator,
        {"boundary": "dirichlet-zero", "cg_rtol": rtol, "cg_maxiter": maxiter},
    )


def check_connection_axioms(
    omega: FieldSpaceConnection,
    phi: FieldPoint,
    chi: FormField,
    gamma: FormField,
    X: FieldTangent,
) -> dict:
    """Residuals of the two defining properties of a connection.

    Reproduction: contracting the vertical lift of chi returns chi.
    Equivariance: pushing phi and X along a rigid gauge transformation
    conjugates the contraction.
    """
    from .fields import gauge_transform  # local import keeps module load light

    vert = omega(phi, vertical_vector(chi, phi)) - chi
    reproduction = vert.max_abs() / (1.0 + chi.max_abs())
    moved = omega(gauge_transform(phi, gamma), push_tangent(X, gamma))
    ginv = group_field_inverse(gamma)
    conj = np.einsum(
        "...ab,...bc,...cd->...ad", ginv.values, omega(phi, X).values, gamma.values
    )
    den = max(_size(moved), float(np.max(np.abs(conj))), 1e-30)
    equivariance = float(np.max(np.abs(moved.values - conj))) / den
    return {"reproduction": reproduction, "equivariance": equivariance}


def check_formula1(
    alpha: OneForm,
    omega: FieldSpaceConnection,
    phi: FieldPoint,
    X: FieldTangent,
    Y: FieldTangent,
    eps: float = EPS_FS,
    richardson: bool = True,
) -> dict:
    """Covariant derivative of an invariant one-form, two ways.

    d alpha on the horizontally projected pair must equal the exterior
    derivative of the horizontalized form plus the contraction with the
    vertical lift of the curvature.  Both sides are differenced
    independently; the report carries them and the relative residual.
    """
    Xh = horizontal_project(X, phi, omega)
    Yh = horizontal_project(Y, phi, omega)
    lhs = fs_two_form_kozsul(alpha, phi, Xh, Yh, eps, richardson)

    def alpha_h(p: FieldPoint, Z: FieldTangent):
        return alpha(p, horizontal_project(Z, p, omega))

    dah = fs_two_form_kozsul(alpha_h, phi, X, Y, eps, richardson)
    curv = omega.curvature(phi, X, Y, eps, richardson)
    vert_term = alpha(phi, vertical_vector(curv.value, phi))
    rhs = _comb(1.0, dah.value, 1.0, vert_term)
    scale = _size(lhs.value) + _size(rhs) + _err(lhs.error) + _err(dah.error) + 1e-30
    return {
        "lhs": lhs.value,
        "rhs": rhs,
        "residual": _size(_comb(1.0, lhs.value, -1.0, rhs)) / scale,
        "step": lhs.step,
        "fd_error": _err(lhs.error) + _err(dah.error) + _err(curv.error),
    }


def check_commutation_relations(
    alpha: OneForm,
    bchi: FieldDependentMap,
    beta: FieldDependentMap,
    phi: FieldPoint,
    Z: FieldTangent,
    eps: float = EPS_FS,
    richardson: bool = True,
) -> dict:
    """Residuals of the three vertical commutation relations on a one-form.

    substitution: swapping a contraction with the parameter-derivative
    substitution reproduces the derivative of one parameter along the
    vertical lift of the other.
    lie_interior: the commutator of a vertical Lie derivative with a
    vertical contraction contracts with the extended bracket.
    lie_lie: two vertical Lie derivatives commute onto the Lie
    derivative along the extended bracket, tested on a fixed tangent Z.
    """
    vf_chi = vertical_field(bchi)
    vf_eta = vertical_field(beta)
    chi_val = bchi(phi)
    eta_val = beta(phi)

    def vert_of(form: FormField, p: FieldPoint) -> FieldTangent:
        return vertical_vector(form, p)

    # substitution relation: the only nonzero ordering contracts the
    # substituted form first, scalars being annihilated
    sub_form = lambda p, W: alpha(p, vert_of(beta.directional(p, W, eps, richardson).value, p))
    lhs1 = sub_form(phi, vertical_vector(chi_val, phi))
    nu = beta.directional(phi, vertical_vector(chi_val, phi), eps, richardson).value
    rhs1 = alpha(phi, vertical_vector(nu, phi))
    scale1 = _size(lhs1) + _size(rhs1) + 1e-30
    res1 = _size(_comb(1.0, lhs1, -1.0, rhs1)) / scale1

    # mixed relation on the one-form itself
    t1 = fs_directional(
        lambda p: alpha(p, vert_of(beta(p), p)), phi, vertical_vector(chi_val, phi), eps, richardson
    )
    t2 = lie_derivative(alpha, vf_chi, phi, vertical_vector(eta_val, phi), eps, richardson)
    lhs2 = _comb(1.0, t1.value, -1.0, t2.value)
    ext = extended_bracket(bchi, beta, phi, eps, richardson)
    rhs2 = alpha(phi, vertical_vector(ext.value, phi))
    scale2 = _size(lhs2) + _size(rhs2) + _err(t1.error) + _err(t2.error) + 1e-30
    res2 = _size(_comb(1.0, lhs2, -1.0, rhs2)) / scale2

    # nested Lie derivatives against the bracket field, on a probe tangent
    def lie_form(Xf: VectorField) -> OneForm:
        return lambda p, W: lie_derivative(alpha, Xf, p, W, eps, richardson).value

    lhs3a = lie_derivative(lie_form(vf_eta), vf_chi, phi, Z, eps, richardson)
    lhs3b = lie_derivative(lie_form(vf_chi), vf_eta, phi, Z, eps, richardson)
    lhs3 = _comb(1.0, lhs3a.value, -1.0, lhs3b.value)

    def bracket_field(p: FieldPoint) -> FieldTangent:
        return vertical_vector(extended_bracket(bchi, beta, p, eps, richardson).value, p)

    rhs3 = lie_derivative(alpha, bracket_field, phi, Z, eps, richardson)
    scale3 = _size(lhs3) + _size(rhs3.value) + _err(lhs3a.error) + _err(lhs3b.error) + 1e-30
    res3 = _size(_comb(1.0, lhs3, -1.0, rhs3.value)) / scale3

    return {
        "substitution": res1,
        "lie_interior": res2,
        "lie_lie": res3,
        "step": t1.step,
    }


def check_extended_bracket(
    bchi: FieldDependentMap,
    beta: FieldDependentMap,
    phi: FieldPoint,
    theta: Optional[OneForm] = None,
    Z: Optional[FieldTangent] = None,
    eps: float = EPS_FS,
    richardson: bool = True,
) -> dict:
    """Bracket of two parameter maps plus the commutation-relation audit.

    The relations are exercised on the tautological one-form (returning
    the tangent itself) and, when supplied, on a theory's presymplectic
    potential.
    """
    probe = Z if Z is not None else phi.zero_tangent()
    report = {
        "bracket": extended_bracket(bchi, beta, phi, eps, richardson),
        "tautological": check_commutation_relations(
            lambda p, W: W, bchi, beta, phi, probe, eps, richardson
        ),
    }
    if theta is not None:
        report["theta"] = check_commutation_relations(theta, bchi, beta, phi, probe, eps, richardson)
    return report
