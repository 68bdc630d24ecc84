"""Bidirectional nonlinear platoon controller with integral action.

The per-unit-mass command is

    u/m_hat = h_pred + eps * h_foll + h_leader + k * zeta
    d(zeta)/dt = g_pred + eps * g_foll + g_leader

with saturating position couplings ``K1 tanh(K2 x)`` and linear velocity
and leader couplings. Every function works elementwise on numpy arrays, so
the simulator can evaluate a whole string at once.
"""

from dataclasses import dataclass, asdict, fields, replace
import math
from typing import Optional

import numpy as np

from .model import VehicleState

C1 = "c1"
C2 = "c2"
VARIANTS = (C1, C2)


@dataclass(frozen=True)
class GainSet:
    kp1: float
    kp2: float
    kv: float
    kp0: float
    kv0: float
    k_int: float
    gp1: float
    gp2: float
    gv: float
    gp0: float
    gv0: float
    alpha: float = 0.0
    beta: float = 0.0
    eps: float = 1.0

    def __post_init__(self):
        for f in fields(self):
            val = getattr(self, f.name)
            if not math.isfinite(val):
                raise ValueError(f"gain {f.name} must be finite, got {val}")
            object.__setattr__(self, f.name, float(val))
        if not 0.0 <= self.eps <= 1.0:
            raise ValueError(f"eps must lie in [0, 1], got {self.eps}")

    @property
    def admissible(self):
        """Whether the strict sign requirements on the gains hold.

        Zero gains are representable (open-loop analysis needs them) but a
        certificate is only issued for admissible sets.
        """
        return (
            self.kp1 > 0 and self.kp2 > 0 and self.gp1 > 0 and self.gp2 > 0
            and self.k_int != 0
        )

    def as_dict(self):
        return asdict(self)

    def with_(self, **changes):
        return replace(self, **changes)

    @classmethod
    def names(cls):
        return tuple(f.name for f in fields(cls))


REFERENCE_GAINS = GainSet(
    kp1=0.1188, kp2=0.1188, kv=0.0121, kp0=0.6, kv0=0.6, k_int=0.2508,
    gp1=0.01, gp2=0.01, gv=0.01, gp0=0.2881, gv0=0.3420,
    alpha=0.3, beta=-0.4, eps=1.0,
)


@dataclass(frozen=True)
class NeighborView:
    """What vehicle ``i`` sees: predecessor (or leader), follower, leader, gaps."""

    pred: VehicleState
    leader: VehicleState
    gap_pred: float
    gap_leader: float
    foll: Optional[VehicleState] = None
    gap_foll: float = 0.0


def hp(gains, x):
    return gains.kp1 * np.tanh(gains.kp2 * x)


def gp(gains, x):
    return gains.gp1 * np.tanh(gains.gp2 * x)


def hp_slope(gains, x):
    return gains.kp1 * gains.kp2 / np.cosh(gains.kp2 * x) ** 2


def gp_slope(gains, x):
    return gains.gp1 * gains.gp2 / np.cosh(gains.gp2 * x) ** 2


def coupling_pred(gains, me, view):
    return hp(gains, view.pred.q - me.q - view.gap_pred) + gains.kv * (view.pred.v - me.v)


def coupling_foll(gains, me, view):
    if view.foll is None:
        return 0.0
    return hp(gains, view.foll.q - me.q + view.gap_foll) + gains.kv * (view.foll.v - me.v)


def coupling_leader(gains, me, view):
    return (gains.kp0 * (view.leader.q - me.q - view.gap_leader)
            + gains.kv0 * (view.leader.v - me.v))


def integral_rate(gains, me, view):
    g_pred = gp(gains, view.pred.q - me.q - view.gap_pred) + gains.gv * (view.pred.v - me.v)
    g_foll = 0.0
    if view.foll is not None:
        g_foll = gp(gains, view.foll.q - me.q + view.gap_foll) + gains.gv * (view.foll.v - me.v)
    g_lead = (gains.gp0 * (view.leader.q - me.q - view.gap_leader)
              + gains.gv0 * (view.leader.v - me.v))
    return g_pred + gains.eps * g_foll + g_lead


def control_input(gains, me, view, zeta, mass_nominal, variant=C2):
    """Control force in newtons, computed with the nominal mass."""
    h = (coupling_pred(gains, me, view) + gains.eps * coupling_foll(gains, me, view)
         + coupling_leader(gains, me, view))
    if variant == C2:
        h = h + gains.k_int * zeta
    elif variant != C1:
        raise ValueError(f"unknown controller variant {variant!r}")
    return mass_nominal * h


def string_commands(gains, q, v, zeta, leader_q, leader_v, spacing, variant=C2):
    """Per-unit-mass commands for a whole string.

    Parameters
    ----------
    q, v, zeta : ndarray, shape (..., N)
        Follower states; leading axes broadcast (e.g. time).
    leader_q, leader_v : float or ndarray broadcastable to ``q[..., 0]``
    spacing : ndarray, shape (N,)
        Desired gaps ``delta_{i,i-1}``.

    Returns
    -------
    accel : ndarray, shape (..., N)
        ``u_i / m_hat_i``.
    zeta_dot : ndarray, shape (..., N)
        Integral state rates (zeros for variant C1).
    """
    spacing = np.asarray(spacing, dtype=float)
    leader_q = np.asarray(leader_q, dtype=float)[..., None]
    leader_v = np.asarray(leader_v, dtype=float)[..., None]
    q_pred = np.concatenate([leader_q, q[..., :-1]], axis=-1)
    v_pred = np.concatenate([leader_v, v[..., :-1]], axis=-1)
    e_pred = q_pred - q - spacing
    dv_pred = v_pred - v

    # last vehicle has no follower; its follower terms are identically zero
    e_foll = np.zeros_like(q)
    dv_foll = np.zeros_like(q)
    e_foll[..., :-1] = q[..., 1:] - q[..., :-1] + spacing[1:]
    dv_foll[..., :-1] = v[..., 1:] - v[..., :-1]

    e_lead = leader_q - q - np.cumsum(spacing)
    dv_lead = leader_v - v

    accel = (hp(gains, e_pred) + gains.kv * dv_pred
             + gains.eps * (hp(gains, e_foll) + gains.kv * dv_foll)
             + gains.kp0 * e_lead + gains.kv0 * dv_lead)
    if variant == C1:
        return accel, np.zeros_like(q)
    if variant != C2:
        raise ValueError(f"unknown controller variant {variant!r}")
    accel = accel + gains.k_int * zeta
    zeta_dot = (gp(gains, e_pred) + gains.gv * dv_pred
                + gains.eps * (gp(gains, e_foll) + gains.gv * dv_foll)
                + gains.gp0 * e_lead + gains.gv0 * dv_lead)
    return accel, zeta_dot
