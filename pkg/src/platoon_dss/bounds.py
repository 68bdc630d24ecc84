"""Evaluable right-hand sides of the disturbance string stability estimates."""

from dataclasses import dataclass
import math

import numpy as np
from scipy.optimize import minimize_scalar

from .conditions import CertificateError

PROP1 = "prop1_eq5"
AUGMENTED = "augmented_eq14"
ORIGINAL = "original_eq16"
MONTEIL = "monteil_eq17"
KINDS = (PROP1, AUGMENTED, ORIGINAL, MONTEIL)

# short names accepted on the command line and in config files
ALIASES = {"eq5": PROP1, "eq14": AUGMENTED, "eq16": ORIGINAL, "eq17": MONTEIL}


@dataclass(frozen=True)
class BoundInputs:
    """Suprema entering the estimates.

    Attributes
    ----------
    cbar_sq : float
        Contraction margin (1/s), must be positive.
    gain_k : float
        Condition-number-like factor of the coordinate change.
    init_err : float
        ``sup_i |x_i(0) - x*_i(0)|``.
    init_integral_err : float
        ``sup_i |zeta_i(0) + w_bar_i / k|``.
    sup_w : float
        ``sup_i ||w_i||_inf`` of the time-varying part.
    sup_w_total : float
        ``sup_i ||w_bar_i + w_i||_inf``.
    init_err_z : float
        ``sup_i |z_i(0) - z*_i(0)|`` in augmented coordinates.
    """

    cbar_sq: float
    gain_k: float = 1.0
    init_err: float = 0.0
    init_integral_err: float = 0.0
    sup_w: float = 0.0
    sup_w_total: float = 0.0
    init_err_z: float = 0.0


@dataclass(frozen=True)
class DssBound:
    kind: str
    inputs: BoundInputs

    def __post_init__(self):
        kind = ALIASES.get(self.kind, self.kind)
        if kind not in KINDS:
            raise ValueError(f"unknown bound kind {self.kind!r}")
        object.__setattr__(self, "kind", kind)


def eval_bound(bound, t):
    """Evaluate a bound at time(s) ``t`` (scalar or array)."""
    p = bound.inputs
    if not p.cbar_sq > 0:
        raise CertificateError(f"contraction margin {p.cbar_sq!r} is not positive")
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("bounds are defined for t >= 0")
    decay = np.exp(-p.cbar_sq * t)
    # -expm1 keeps precision for small c t
    growth = -np.expm1(-p.cbar_sq * t) / p.cbar_sq
    if bound.kind == PROP1:
        val = decay * p.init_err + growth * p.sup_w_total
    elif bound.kind == AUGMENTED:
        val = p.gain_k * (decay * p.init_err_z + growth * p.sup_w)
    elif bound.kind == ORIGINAL:
        val = p.gain_k * (decay * (p.init_err + p.init_integral_err) + growth * p.sup_w)
    else:
        val = p.gain_k * (decay * p.init_err + growth * p.sup_w_total)
    return float(val) if val.ndim == 0 else val


def bound_curve(bound, t_grid):
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.size > 1 and np.any(np.diff(t_grid) <= 0):
        raise ValueError("t_grid must be strictly ascending")
    return list(zip(t_grid.tolist(), np.atleast_1d(eval_bound(bound, t_grid)).tolist()))


def bound_envelope(bound):
    """Supremum over t >= 0 of the bound.

    Each estimate is a convex combination of its t=0 value and its t->inf
    value, so the supremum is the larger of the two.
    """
    at_zero = eval_bound(bound, 0.0)
    p = bound.inputs
    limit = {
        PROP1: p.sup_w_total / p.cbar_sq,
        AUGMENTED: p.gain_k * p.sup_w / p.cbar_sq,
        ORIGINAL: p.gain_k * p.sup_w / p.cbar_sq,
        MONTEIL: p.gain_k * p.sup_w_total / p.cbar_sq,
    }[bound.kind]
    return max(at_zero, limit)


def _sup_over_t(fun, spec, sign):
    """sup_{t>=0} of ``sign * fun(t)`` where ``fun`` is a shifted damped sinusoid.

    Extrema of ``sin(f t) exp(-d t)`` recur every ``2 pi / f`` and shrink by
    ``exp(-2 pi d / f)`` each time, so the first period holds the sup. Each
    half period contains at most one interior extremum.
    """
    half = math.pi / spec.freq
    cands = [sign * fun(0.0)]
    for lo in (0.0, half):
        res = minimize_scalar(lambda t: -sign * fun(t), bounds=(lo, lo + half),
                              method="bounded", options={"xatol": 1e-9})
        cands.append(sign * fun(res.x))
    return max(cands)


def sup_time_varying(spec):
    """``||amp sin(freq t) exp(-decay t)||_inf`` over t >= 0."""
    if spec.amp == 0.0 or spec.freq == 0.0:
        return 0.0
    if spec.decay == 0.0:
        return abs(spec.amp)
    w = lambda t: spec.amp * math.sin(spec.freq * t) * math.exp(-spec.decay * t)
    return max(_sup_over_t(w, spec, 1.0), _sup_over_t(w, spec, -1.0))


def sup_total(spec):
    """``||w_bar + w(t)||_inf`` over t >= 0."""
    if spec.amp == 0.0 or spec.freq == 0.0:
        return abs(spec.w_bar)
    if spec.decay == 0.0:
        return abs(spec.w_bar) + abs(spec.amp)
    d = lambda t: spec.w_bar + spec.amp * math.sin(spec.freq * t) * math.exp(-spec.decay * t)
    return max(_sup_over_t(d, spec, 1.0), _sup_over_t(d, spec, -1.0))


def scenario_bound_inputs(cfg, gains, report, channel="accel"):
    """Assemble :class:`BoundInputs` for a scenario from its initial data.

    With ``channel="force"`` the disturbance values are forces, converted to
    accelerations with each vehicle's true mass.
    """
    init_err = init_int = init_z = sup_w = sup_tot = 0.0
    k = gains.k_int
    for i, veh in enumerate(cfg.per_vehicle, start=1):
        scale = 1.0 / veh.params.mass_true if channel == "force" else 1.0
        q_star = cfg.leader_initial_position - float(np.sum(cfg.spacing[:i]))
        dq = veh.initial.q - q_star
        dv = veh.initial.v - cfg.leader_speed
        xi0 = veh.initial.xi + scale * veh.disturbance.w_bar / k if k != 0 else math.inf
        init_err = max(init_err, math.hypot(dq, dv))
        init_int = max(init_int, abs(xi0))
        init_z = max(init_z, math.sqrt(dq * dq + dv * dv + xi0 * xi0))
        sup_w = max(sup_w, scale * sup_time_varying(veh.disturbance))
        sup_tot = max(sup_tot, scale * sup_total(veh.disturbance))
    return BoundInputs(
        cbar_sq=report.cbar_sq,
        gain_k=report.gain_k,
        init_err=init_err,
        init_integral_err=init_int,
        sup_w=sup_w,
        sup_w_total=sup_tot,
        init_err_z=init_z,
    )
