"""Gauge-invariant potentials: connection route and dressing route.

A field-space connection yields an invariant potential by subtracting
the charge of the connection contraction.  A dressing extracted from
the configuration yields one by adding the charge of its logarithmic
derivative.  Minus the log derivative of a dressing is itself a flat
connection, so the two routes can be cross checked against each other;
everything here keeps both on the same charge machinery and reports
enough metadata to do that comparison in tests.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .charges import ChargeReport, noether_charge, potential_on_slice
from .conventions import EPS_DET, EPS_FS, EPS_RHO
from .errors import (
    DegreeMismatch,
    FDDomainError,
    SingularTetrad,
    UnknownGroup,
    VanishingModulus,
)
from .fields import (
    FieldPoint,
    FieldTangent,
    gauge_transform,
    group_field_inverse,
    group_vspace,
    push_tangent,
    vertical_vector,
)
from .fieldspace import (
    FieldDependentMap,
    FieldSpaceConnection,
    fs_two_form_kozsul,
)
from .grid import FormField, exterior_derivative
from .theories import TheoryKernels, tetrad_dressing

_TINY = 1e-30


def _err(e: float) -> float:
    return 0.0 if np.isnan(e) else float(e)


def _tan(X, phi: FieldPoint) -> FieldTangent:
    return X if isinstance(X, FieldTangent) else X(phi)


def _group_map(obj, name: str = "") -> FieldDependentMap:
    if isinstance(obj, FieldDependentMap):
        if obj.kind != "group":
            raise UnknownGroup("expected a group-valued map")
        return obj
    if isinstance(obj, FormField):
        if obj.degree != 0:
            raise DegreeMismatch("group element must be a 0-form")
        return FieldDependentMap.constant(obj, kind="group", name=name)
    raise UnknownGroup(f"cannot use {type(obj).__name__} as a group map")


def _sandwich(g: FormField, v: FormField) -> FormField:
    """g v g^{-1} for group-valued g and matrix-valued v, node-wise."""
    gi = group_field_inverse(g)
    vals = np.einsum(
        "...ab,...bc,...cd->...ad",
        g.values[..., 0, :, :],
        v.values[..., 0, :, :],
        gi.values[..., 0, :, :],
    )
    return FormField(v.region, 0, v.vspace, vals[..., None, :, :])


def _point_gap(a: FieldPoint, b: FieldPoint) -> float:
    gap = (a.A - b.A).max_abs()
    if a.matter is not None and b.matter is not None:
        gap = max(gap, (a.matter - b.matter).max_abs())
    return gap


# ---------------------------------------------------------------------------
# dressings


@dataclass
class Dressing:
    """Group-valued 0-form extracted from a configuration.

    method records the extraction rule, source the configuration the
    values came from.  Extraction rules counter-rotate under gauge
    transformations of the source; that property is what makes dressed
    quantities invariant, and it is checked per rule in tests.
    """

    u: FormField
    method: str
    source: FieldPoint


def extract_dressing(
    phi: FieldPoint,
    method: str = "u1_polar",
    supplied: Optional[FormField] = None,
) -> Dressing:
    """Build a dressing from the configuration itself.

    u1_polar divides the matter field by its modulus, which must stay
    bounded away from zero; tetrad reads the frame matrix; supplied
    wraps a caller-provided group field.
    """
    if method == "u1_polar":
        if phi.matter is None:
            raise DegreeMismatch("polar dressing needs a matter field")
        if phi.group != "u1":
            raise UnknownGroup("polar dressing needs an abelian configuration")
        m = phi.matter.values[..., 0, 0]
        rho = np.abs(m)
        bad = rho < EPS_RHO
        if np.any(bad):
            nodes = np.argwhere(bad)
            head = ", ".join(str(tuple(int(i) for i in ix)) for ix in nodes[:4])
            raise VanishingModulus(
                f"matter modulus below {EPS_RHO} at {len(nodes)} nodes: {head}"
            )
        vals = (m / rho)[..., None, None, None].astype(complex)
        return Dressing(FormField(phi.region, 0, group_vspace("u1"), vals), method, phi)
    if method == "tetrad":
        if phi.tetrad is None:
            raise DegreeMismatch("tetrad dressing needs a tetrad")
        # frame matrix [a, mu] from the 1-form storage [mu, a]
        emat = np.swapaxes(phi.tetrad.values, -1, -2)
        if np.min(np.abs(np.linalg.det(emat))) < EPS_DET:
            raise SingularTetrad("tetrad not invertible at some node")
        u = FormField(phi.region, 0, group_vspace("gl4"), emat[..., None, :, :])
        return Dressing(u, method, phi)
    if method == "supplied":
        if supplied is None or supplied.degree != 0:
            raise DegreeMismatch("supplied dressing must be a group 0-form")
        return Dressing(supplied, method, phi)
    raise UnknownGroup(f"unknown dressing method '{method}'")


def dressing_extractor(method: str = "u1_polar") -> FieldDependentMap:
    """The extraction rule as a group-valued map ready for differencing."""
    return FieldDependentMap(
        lambda p: extract_dressing(p, method).u, kind="group", name=method
    )


def dress_fields(phi: FieldPoint, dressing: Union[Dressing, FormField]) -> FieldPoint:
    """Rewrite the configuration in dressed variables.

    Identical in form to a gauge transformation by the dressing values;
    the tetrad method instead delegates to the frame change, which also
    installs the coordinate coframe and the metric slot.
    """
    if isinstance(dressing, Dressing):
        if dressing.method == "tetrad":
            return tetrad_dressing(phi)
        u = dressing.u
    else:
        u = dressing
    return gauge_transform(phi, u)


def gauge_displaced(
    phi: FieldPoint,
    gamma,
    X: Optional[FieldTangent] = None,
    eps: float = EPS_FS,
    richardson: bool = True,
) -> dict:
    """Configuration, and optionally a tangent, carried by a gauge motion.

    The tangent picks up the conjugation plus the vertical correction
    from any field dependence of gamma; plain group fields contribute
    no correction.
    """
    gmap = _group_map(gamma)
    gval = gmap(phi)
    out = {"configuration": gauge_transform(phi, gval), "step": 0.0, "fd_error": 0.0}
    if X is not None:
        ld = gmap.log_derivative(phi, X, eps, richardson)
        out["tangent"] = push_tangent(X + vertical_vector(ld.value, phi), gval)
        out["step"] = ld.step
        out["fd_error"] = _err(ld.error)
    return out


# ---------------------------------------------------------------------------
# invariant potentials


def basic_theta_via_connection(
    kern: TheoryKernels,
    omega: FieldSpaceConnection,
    phi: FieldPoint,
    X,
    Y=None,
    eps: float = EPS_FS,
    richardson: bool = True,
) -> dict:
    """Invariant potential: sliced potential minus the connection charge.

    With Y given, the companion two form is produced by differencing
    the full one form, connection dependence included.
    """
    Xv = _tan(X, phi)
    plain = potential_on_slice(kern, phi, Xv)
    charge = noether_charge(kern, omega(phi, Xv), phi)

    def one_form(p: FieldPoint, W: FieldTangent) -> float:
        return potential_on_slice(kern, p, W) - noether_charge(kern, omega(p, W), p).value

    report = {
        "value": plain - charge.value,
        "plain": plain,
        "charge_term": charge.value,
        "connection": omega.kind,
        "step": 0.0,
        "fd_error": 0.0,
    }
    if Y is not None:
        two = fs_two_form_kozsul(one_form, phi, X, Y, eps, richardson)
        report["two_form"] = two.value
        report["step"] = two.step
        report["fd_error"] = _err(two.error)
    return report


def dressed_presymplectic(
    kern: TheoryKernels,
    phi: FieldPoint,
    extractor,
    X,
    Y=None,
    eps: float = EPS_FS,
    richardson: bool = True,
) -> dict:
    """Invariant potential in dressed variables.

    Two routes are reported: the sliced potential plus the charge of
    the dressing log derivative, and the direct evaluation on the
    dressed configuration with the carried tangent.  Their gap probes
    the discretisation, not the construction.  The field equation one
    form is cross checked the same way.
    """
    ext = extractor if isinstance(extractor, FieldDependentMap) else _group_map(extractor)
    if ext.kind != "group":
        raise UnknownGroup("dressing extractor must be group valued")
    Xv = _tan(X, phi)
    try:
        ld = ext.log_derivative(phi, Xv, eps, richardson)
    except (VanishingModulus, SingularTetrad) as exc:
        raise FDDomainError(f"dressing undefined under displacement: {exc}") from exc

    plain = potential_on_slice(kern, phi, Xv)
    charge = noether_charge(kern, ld.value, phi)
    value = plain + charge.value

    uval = ext(phi)
    dressed_point = gauge_transform(phi, uval)
    carried = push_tangent(Xv + vertical_vector(ld.value, phi), uval)
    direct = potential_on_slice(kern, dressed_point, carried)
    scale = max(abs(value), abs(direct), abs(plain)) + _TINY

    eq_direct = kern.field_eq(dressed_point, carried)
    eq_shift = kern.field_eq(phi, Xv) + exterior_derivative(
        kern.constraint_kernel(phi, ld.value)
    )
    eq_scale = eq_direct.max_abs() + eq_shift.max_abs() + _TINY

    report = {
        "value": value,
        "plain": plain,
        "charge_term": charge.value,
        "direct": direct,
        "discrepancy": abs(value - direct) / scale,
        "field_eq_residual": (eq_direct - eq_shift).max_abs() / eq_scale,
        "step": ld.step,
        "fd_error": _err(ld.error),
    }
    if Y is not None:

        def one_form(p: FieldPoint, W: FieldTangent) -> float:
            ldw = ext.log_derivative(p, W, eps, richardson)
            return potential_on_slice(kern, p, W) + noether_charge(kern, ldw.value, p).value

        two = fs_two_form_kozsul(one_form, phi, X, Y, eps, richardson)
        report["two_form"] = two.value
        report["two_form_error"] = _err(two.error)
    return report


def residual_transform(
    kern: TheoryKernels,
    phi: FieldPoint,
    extractor,
    xi,
    X,
    eps: float = EPS_FS,
    richardson: bool = True,
) -> dict:
    """Shift of the dressed potential under a change of dressing.

    The dressing is multiplied on the right by xi and the potential
    recomputed; the recomputation is compared against the predicted
    shift, minus the charge of the dressing-conjugated log derivative
    of xi.  The two orderings of the underlying configuration moves are
    compared as well.
    """
    ext = extractor if isinstance(extractor, FieldDependentMap) else _group_map(extractor)
    xmap = _group_map(xi, name="xi")
    Xv = _tan(X, phi)

    def shifted_eval(p: FieldPoint) -> FormField:
        a, b = ext(p), xmap(p)
        vals = np.einsum(
            "...ab,...bc->...ac", a.values[..., 0, :, :], b.values[..., 0, :, :]
        )
        return FormField(p.region, 0, a.vspace, vals[..., None, :, :])

    shifted_ext = FieldDependentMap(
        shifted_eval, kind="group", name=(ext.name or "u") + "*xi"
    )
    base = dressed_presymplectic(kern, phi, ext, Xv, eps=eps, richardson=richardson)
    moved = dressed_presymplectic(
        kern, phi, shifted_ext, Xv, eps=eps, richardson=richardson
    )

    ldxi = xmap.log_derivative(phi, Xv, eps, richardson)
    uval = ext(phi)
    beta = -1.0 * _sandwich(uval, ldxi.value)
    shift = noether_charge(kern, beta, phi)
    predicted = base["value"] - shift.value
    scale = max(abs(moved["value"]), abs(base["value"]), abs(shift.value)) + _TINY

    one_step = gauge_transform(phi, shifted_eval(phi))
    two_step = gauge_transform(gauge_transform(phi, uval), xmap(phi))

    return {
        "value": moved["value"],
        "base": base["value"],
        "predicted": predicted,
        "shift_charge": shift.value,
        "residual": abs(moved["value"] - predicted) / scale,
        "point_residual": _point_gap(one_step, two_step),
        "step": ldxi.step,
        "fd_error": _err(ldxi.error) + base["fd_error"] + moved["fd_error"],
    }


def dressed_charge(kern: TheoryKernels, param, dressed: FieldPoint) -> ChargeReport:
    """Charge of a residual symmetry parameter on a dressed configuration.

    Same kernels as the undressed charge, evaluated on dressed
    variables; the parameter lives in the algebra of whatever group
    still acts on those.
    """
    report = noether_charge(kern, param, dressed)
    report.parameters["dressed"] = True
    return report
