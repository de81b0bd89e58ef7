"""Charges on the designated hypersurface, their brackets and flux laws.

The charge of a gauge parameter is the boundary integral of the theory's
corner kernel minus the bulk integral of its constraint kernel; the second
piece is pure field-equation content, so it decays under refinement exactly
when the configuration is on shell.  Everything built on top of that number
here (two-form contractions, Poisson brackets, transformation laws) is a
finite-difference statement in field space; reports therefore carry the
step and Richardson error estimate alongside the residuals.

Two linearized-charge constructions close the module: the charge of a
symmetry parameter about a fixed background connection, and the
gravitational charge of a spacetime vector through the dressed
metric-affine kernels.
"""

import math
from dataclasses import dataclass, field as dataclass_field
from typing import Optional, Union

import numpy as np

from .conventions import EPS_FS
from .errors import NotKilling
from .fields import (
    BackgroundSplit,
    FieldPoint,
    FieldTangent,
    covariant_derivative,
    gauge_transform,
    push_tangent,
    vertical_vector,
)
from .fieldspace import (
    FieldDependentMap,
    fs_directional,
    fs_two_form_kozsul,
)
from .grid import (
    FormField,
    boundary_integrate,
    exterior_derivative,
    hodge,
    integrate,
    restrict_to_slice,
    wedge,
)
from .theories import (
    GravityData,
    TheoryKernels,
    kappa_from_zeta,
    killing_residual,
    mm_dressed_kernels,
    tetrad_dressing,
)

__all__ = [
    "ChargeReport",
    "evaluate_parameter",
    "noether_charge",
    "potential_on_slice",
    "presymplectic_2form",
    "charge_flux_identity",
    "poisson_bracket",
    "gauge_transformed_presymplectic",
    "ab_charge",
    "komar_charge",
]

_TINY = 1e-30


def _err(e: float) -> float:
    return 0.0 if math.isnan(e) else e


def _re(f: FormField) -> FormField:
    if f.vspace.dtype is complex:
        return f.real_part()
    return f


Parameter = Union[FormField, FieldDependentMap]


def evaluate_parameter(param: Parameter, phi: FieldPoint) -> FormField:
    """A fixed algebra-valued scalar, or a configuration-dependent one
    evaluated where it is needed."""
    if isinstance(param, FieldDependentMap):
        return param(phi)
    return param


@dataclass
class ChargeReport:
    """A charge split into its boundary and bulk contributions.

    value == boundary_part - bulk_part by construction.  onshell_residual
    is |bulk| / |boundary|, the quantity that must decay under refinement
    on solutions; parameters carries construction-specific diagnostics
    and fd_metadata the differencing step/error when one was used.
    """

    value: float
    boundary_part: float
    bulk_part: float
    onshell_residual: float
    parameters: dict = dataclass_field(default_factory=dict)
    fd_metadata: dict = dataclass_field(default_factory=dict)


def noether_charge(kern: TheoryKernels, param: Parameter, phi: FieldPoint) -> ChargeReport:
    """Charge of a gauge parameter on the designated hypersurface.

    The corner kernel is integrated over the boundary of the slice, the
    constraint kernel over its interior; their difference is the charge
    however far off shell the configuration sits.
    """
    chi = evaluate_parameter(param, phi)
    bk = restrict_to_slice(kern.boundary_kernel(phi, chi))
    ck = restrict_to_slice(kern.constraint_kernel(phi, chi))
    boundary = float(boundary_integrate(bk))
    bulk = float(integrate(ck))
    return ChargeReport(
        value=boundary - bulk,
        boundary_part=boundary,
        bulk_part=bulk,
        onshell_residual=abs(bulk) / (abs(boundary) + _TINY),
        parameters={"theory": kern.name},
    )


def potential_on_slice(kern: TheoryKernels, phi: FieldPoint, X: FieldTangent) -> float:
    """Presymplectic potential of a tangent, integrated over the slice."""
    return float(integrate(restrict_to_slice(kern.presymp(phi, X))))


def _tangent_value(X, phi: FieldPoint) -> FieldTangent:
    return X if isinstance(X, FieldTangent) else X(phi)


def presymplectic_2form(
    kern: TheoryKernels,
    phi: FieldPoint,
    X,
    Y,
    eps: float = EPS_FS,
    richardson: bool = True,
) -> dict:
    """Presymplectic two-form on a pair of tangents.

    The value is the field-space exterior derivative of the potential;
    when the theory supplies an explicit integrand for the two-form the
    direct route is evaluated as well and the report carries the gap
    between the two.
    """

    def theta(p: FieldPoint, W: FieldTangent) -> float:
        return potential_on_slice(kern, p, W)

    two = fs_two_form_kozsul(theta, phi, X, Y, eps, richardson)
    out = {
        "value": float(two.value),
        "step": two.step,
        "fd_error": _err(two.error),
    }
    if kern.direct_theta2 is not None:
        integrand = kern.direct_theta2(phi, _tangent_value(X, phi), _tangent_value(Y, phi))
        direct = float(integrate(restrict_to_slice(integrand)))
        out["direct"] = direct
        out["discrepancy"] = abs(out["value"] - direct) / (
            abs(out["value"]) + abs(direct) + out["fd_error"] + _TINY
        )
    return out


def charge_flux_identity(
    kern: TheoryKernels,
    param: Parameter,
    phi: FieldPoint,
    X,
    eps: float = EPS_FS,
    richardson: bool = True,
) -> dict:
    """Contraction of the two-form with a vertical lift, against the charge.

    For a fixed parameter the contraction must equal minus the field-space
    differential of its charge; a configuration-dependent parameter is not
    integrable by itself and adds the charge of its own directional
    derivative as a flux term.  Both sides are differenced independently.
    """
    Xv = _tangent_value(X, phi)
    chi = evaluate_parameter(param, phi)
    vert = vertical_vector(chi, phi)

    def theta(p: FieldPoint, W: FieldTangent) -> float:
        return potential_on_slice(kern, p, W)

    contraction = fs_two_form_kozsul(theta, phi, vert, Xv, eps, richardson)
    dq = fs_directional(
        lambda p: noether_charge(kern, param, p).value, phi, Xv, eps, richardson
    )
    flux = 0.0
    flux_err = 0.0
    if isinstance(param, FieldDependentMap):
        dparam = param.directional(phi, Xv, eps, richardson)
        flux = noether_charge(kern, dparam.value, phi).value
        flux_err = _err(dparam.error)
    lhs = float(contraction.value)
    rhs = -float(dq.value) + flux
    fd_error = _err(contraction.error) + _err(dq.error) + flux_err
    return {
        "contraction": lhs,
        "charge_differential": float(dq.value),
        "flux_term": flux,
        "residual": abs(lhs - rhs) / (abs(lhs) + abs(rhs) + fd_error + _TINY),
        "step": contraction.step,
        "fd_error": fd_error,
    }


def poisson_bracket(
    kern: TheoryKernels,
    a: Parameter,
    b: Parameter,
    phi: FieldPoint,
    eps: float = EPS_FS,
    richardson: bool = True,
) -> dict:
    """Bracket of two charges, with its morphism target.

    The bracket is the two-form on the vertical lifts of the parameters
    (their values at the configuration suffice, the two-form being
    tensorial).  It must reproduce the charge of the pointwise commutator
    of those values; the report carries both numbers and the relative gap.
    """
    chi = evaluate_parameter(a, phi)
    eta = evaluate_parameter(b, phi)

    def theta(p: FieldPoint, W: FieldTangent) -> float:
        return potential_on_slice(kern, p, W)

    two = fs_two_form_kozsul(
        theta, phi, vertical_vector(chi, phi), vertical_vector(eta, phi), eps, richardson
    )
    target = noether_charge(kern, wedge(chi, eta, "bracket"), phi)
    value = float(two.value)
    fd_error = _err(two.error)
    return {
        "value": value,
        "charge_of_bracket": target.value,
        "residual": abs(value - target.value)
        / (abs(value) + abs(target.value) + fd_error + _TINY),
        "step": two.step,
        "fd_error": fd_error,
    }


def _as_group_map(gamma) -> FieldDependentMap:
    if isinstance(gamma, FieldDependentMap):
        if gamma.kind != "group":
            raise ValueError("transformation map must be group valued")
        return gamma
    return FieldDependentMap.constant(gamma, kind="group")


def gauge_transformed_presymplectic(
    kern: TheoryKernels,
    gamma,
    phi: FieldPoint,
    X,
    Y=None,
    eps: float = EPS_FS,
    richardson: bool = True,
) -> dict:
    """Transformation law of potential, two-form and field-equation form.

    Route one transports everything: the configuration moves by the group
    element, tangents are pushed along the transformation including the
    vertical compensation from its configuration dependence.  Route two
    stays put and adds charge terms: the charge of the logarithmic
    derivative shifts the potential, its field-space differential shifts
    the two-form, and the spacetime differential of the constraint kernel
    shifts the field-equation form.  The report carries both routes and
    relative residuals for each object.
    """
    gmap = _as_group_map(gamma)
    Xv = _tangent_value(X, phi)
    gval = gmap(phi)
    moved = gauge_transform(phi, gval)

    def log_d(p: FieldPoint, W: FieldTangent):
        return gmap.log_derivative(p, W, eps, richardson)

    def pushed(W: FieldTangent) -> FieldTangent:
        kappa = log_d(phi, W)
        return push_tangent(W + vertical_vector(kappa.value, phi), gval), kappa

    pushed_X, kappa_X = pushed(Xv)

    theta_moved = potential_on_slice(kern, moved, pushed_X)
    q_kappa = noether_charge(kern, kappa_X.value, phi)
    theta_here = potential_on_slice(kern, phi, Xv)
    theta_shifted = theta_here + q_kappa.value
    fd_error = _err(kappa_X.error)
    out = {
        "potential_transported": theta_moved,
        "potential_shifted": theta_shifted,
        "potential_residual": abs(theta_moved - theta_shifted)
        / (abs(theta_moved) + abs(theta_shifted) + fd_error + _TINY),
        "step": kappa_X.step,
    }

    # field-equation form: transported versus constraint-kernel shift
    eq_moved = kern.field_eq(moved, pushed_X)
    eq_shift = kern.field_eq(phi, Xv) + exterior_derivative(
        kern.constraint_kernel(phi, kappa_X.value)
    )
    eq_scale = eq_moved.max_abs() + eq_shift.max_abs() + _TINY
    out["field_eq_residual"] = (eq_moved - eq_shift).max_abs() / eq_scale

    if Y is not None:
        Yv = _tangent_value(Y, phi)
        pushed_Y, kappa_Y = pushed(Yv)

        def theta(p: FieldPoint, W: FieldTangent) -> float:
            return potential_on_slice(kern, p, W)

        transported = fs_two_form_kozsul(theta, moved, pushed_X, pushed_Y, eps, richardson)
        here = fs_two_form_kozsul(theta, phi, Xv, Yv, eps, richardson)

        def charge_one_form(p: FieldPoint, W: FieldTangent) -> float:
            return noether_charge(kern, log_d(p, W).value, p).value

        dq = fs_two_form_kozsul(charge_one_form, phi, Xv, Yv, eps, richardson)
        shifted = float(here.value) + float(dq.value)
        err2 = _err(transported.error) + _err(here.error) + _err(dq.error) + _err(
            kappa_Y.error
        )
        out["two_form_transported"] = float(transported.value)
        out["two_form_shifted"] = shifted
        out["two_form_residual"] = abs(float(transported.value) - shifted) / (
            abs(float(transported.value)) + abs(shifted) + err2 + _TINY
        )
        fd_error += err2
    out["fd_error"] = fd_error
    return out


def ab_charge(
    chi: FormField,
    split: BackgroundSplit,
    strict: bool = False,
    killing_tol: float = 1e-8,
) -> ChargeReport:
    """Linearized charge of a symmetry parameter about a background.

    The charge is the boundary integral of the parameter paired with the
    dual linearized field strength.  It is purely a boundary quantity; the
    bulk pairing with the linearized current reproduces it only up to the
    Stokes defect of the lattice, which is what onshell_residual records
    here.  The parameter is expected to be covariantly constant for the
    background; the violation is always reported and raises when strict.
    """
    residual = covariant_derivative(chi, split.A0, kind="adjoint").max_abs()
    if strict and residual > killing_tol:
        raise NotKilling(
            f"parameter fails covariant constancy at {residual:.3e} (tol {killing_tol:.1e})"
        )
    boundary = float(
        boundary_integrate(restrict_to_slice(_re(wedge(chi, hodge(split.f_lin), "trace"))))
    )
    current_bulk = float(
        integrate(restrict_to_slice(_re(wedge(chi, split.current, "trace"))))
    )
    background_boundary = float(
        boundary_integrate(restrict_to_slice(_re(wedge(chi, hodge(split.F0), "trace"))))
    )
    return ChargeReport(
        value=boundary,
        boundary_part=boundary,
        bulk_part=0.0,
        onshell_residual=abs(boundary - current_bulk)
        / (abs(boundary) + abs(current_bulk) + _TINY),
        parameters={
            "current_bulk": current_bulk,
            "background_boundary": background_boundary,
            "killing_residual": residual,
            "background_residual": split.background_residual,
        },
    )


def komar_charge(
    gdata: GravityData,
    zeta: np.ndarray,
    strict: bool = False,
    killing_tol: float = 1e-3,
) -> ChargeReport:
    """Gravitational charge of a spacetime vector on the designated slice.

    The vector becomes a mixed-index bivector through the metric
    connection; the dressed metric-affine kernels then supply the corner
    and constraint integrands.  The bulk part carries only torsion, so on
    metric-compatible data it is stencil noise; for a non-Killing vector
    the symmetrized covariant derivative is reported (and raises when
    strict).
    """
    phi = gdata.phi
    dressed = tetrad_dressing(phi)
    kern = mm_dressed_kernels(phi.ell, phi.lambda_sign)
    kappa = kappa_from_zeta(gdata, zeta)
    kres = killing_residual(gdata, kappa)
    if strict and kres > killing_tol:
        raise NotKilling(
            f"vector fails the Killing equation at {kres:.3e} (tol {killing_tol:.1e})"
        )
    boundary = float(
        boundary_integrate(restrict_to_slice(kern.boundary_kernel(dressed, kappa)))
    )
    bulk = float(integrate(restrict_to_slice(kern.constraint_kernel(dressed, kappa))))
    return ChargeReport(
        value=boundary - bulk,
        boundary_part=boundary,
        bulk_part=bulk,
        onshell_residual=abs(bulk) / (abs(boundary) + _TINY),
        parameters={
            "theory": kern.name,
            "killing_residual": kres,
            "metricity_residual": gdata.metricity_residual,
            "torsion_max": gdata.torsion_frame.max_abs(),
        },
    )
