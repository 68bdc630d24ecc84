"""Transformed contraction conditions for the integral-action platoon.

The closed loop of one vehicle in coordinates ``z = (q, v, xi)`` is, per
unit (nominal) mass, ``z' = F z + [0, v_x, v_zeta]``. Under the change of
coordinates ``z~ = T z`` the Jacobian blocks become ``T (F + D) T^-1`` on
the diagonal and ``T D_nb T^-1`` off the diagonal, where ``D`` collects
the partial derivatives of the command. The only state dependence is
through the tanh slopes, which live in a box ``[0, K1 K2] x [0, G1 G2]``.
"""

from dataclasses import dataclass, field
import itertools
import json
import math

import numpy as np

from .controller import string_commands, C2
from .linalg import matrix_measure_2, spectral_norm_2, singular_value_extremes

TOL = 1e-9

F_MATRIX = np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]])


class DomainError(ValueError):
    pass


class CertificateError(ValueError):
    """Raised when a bound is requested without a positive contraction margin."""


@dataclass(frozen=True)
class TransformPair:
    t_mat: np.ndarray
    t_inv: np.ndarray


@dataclass(frozen=True)
class JacobianBlocks:
    j_ii: np.ndarray
    j_pred: np.ndarray
    j_foll: np.ndarray


@dataclass
class ConditionReport:
    c_sq: float
    b: float
    eps: float
    eps_max_allowed: float
    c1_ok: bool
    c2_ok: bool
    c3_ok: bool
    cbar_sq: float
    gain_k: float
    worst_vertex: tuple
    worst_norm_vertex: tuple
    # b when the follower block is weighted by eps before taking its norm
    b_eps_scaled: float
    c1_residual: float
    admissible: bool = True
    vertices: list = field(default_factory=list)

    @property
    def feasible(self):
        return self.admissible and self.c1_ok and self.c2_ok and self.c3_ok and self.cbar_sq > 0

    def to_dict(self):
        return {
            "feasible": self.feasible,
            "c_sq": self.c_sq,
            "b": self.b,
            "b_eps_scaled": self.b_eps_scaled,
            "eps": self.eps,
            "eps_max_allowed": self.eps_max_allowed,
            "cbar_sq": self.cbar_sq,
            "gain_k": self.gain_k,
            "c1_ok": self.c1_ok,
            "c2_ok": self.c2_ok,
            "c3_ok": self.c3_ok,
            "admissible": self.admissible,
            "c1_residual": self.c1_residual,
            "worst_vertex": list(self.worst_vertex),
            "worst_norm_vertex": list(self.worst_norm_vertex),
            "vertices": self.vertices,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, allow_nan=True)

    def format(self):
        flag = lambda ok: "ok" if ok else "FAIL"
        lines = [
            f"verdict        : {'FEASIBLE' if self.feasible else 'INFEASIBLE'}",
            f"C1* equilibrium: {flag(self.c1_ok)} (residual {self.c1_residual:.3e})",
            f"C2* c^2        : {flag(self.c2_ok)} c^2 = {self.c_sq:.10g}, b = {self.b:.10g}",
            f"C3* eps        : {flag(self.c3_ok)} eps = {self.eps:g} < c^2/b - 1 = {self.eps_max_allowed:.10g}",
            f"margin cbar^2  : {self.cbar_sq:.10g}",
            f"gain K         : {self.gain_k:.10g}",
            f"b (eps-scaled) : {self.b_eps_scaled:.10g}",
            f"worst vertex   : mu at (s_h, s_g) = {self.worst_vertex}, "
            f"norm at {self.worst_norm_vertex}",
        ]
        if not self.admissible:
            lines.append("gain set is not admissible (kp1, kp2, gp1, gp2 > 0 and k != 0 required)")
        return "\n".join(lines)


def build_transform(alpha, beta):
    t_mat = np.array([[1.0, alpha, 0.0], [0.0, 1.0, beta], [0.0, 0.0, 1.0]])
    t_inv = np.array([[1.0, -alpha, alpha * beta], [0.0, 1.0, -beta], [0.0, 0.0, 1.0]])
    return TransformPair(t_mat, t_inv)


def slope_box(gains):
    """Closed slope intervals ``(s_h_max, s_g_max)``; lower ends are 0."""
    return gains.kp1 * gains.kp2, gains.gp1 * gains.gp2


def _check_slope(name, s, hi):
    lo_tol = TOL * max(1.0, abs(hi))
    if s < -lo_tol or s > hi + lo_tol:
        raise DomainError(f"{name} = {s!r} outside slope box [0, {hi!r}]")


def command_partials(gains, s_h_pred, s_g_pred, s_h_foll, s_g_foll):
    """Partial derivatives of ``[0, v_x, v_zeta]`` w.r.t. own and neighbour states.

    Returns ``(D_self, D_pred, D_foll)`` as 3x3 arrays; ``D_foll`` is not
    weighted by ``eps``.
    """
    g = gains
    d_self = np.array([
        [0.0, 0.0, 0.0],
        [-(s_h_pred + g.eps * s_h_foll + g.kp0), -(g.kv * (1 + g.eps) + g.kv0), g.k_int],
        [-(s_g_pred + g.eps * s_g_foll + g.gp0), -(g.gv * (1 + g.eps) + g.gv0), 0.0],
    ])
    d_pred = np.array([[0.0, 0.0, 0.0], [s_h_pred, g.kv, 0.0], [s_g_pred, g.gv, 0.0]])
    d_foll = np.array([[0.0, 0.0, 0.0], [s_h_foll, g.kv, 0.0], [s_g_foll, g.gv, 0.0]])
    return d_self, d_pred, d_foll


def jacobian_blocks(gains, s_h, s_g, s_h_foll=None, s_g_foll=None):
    """Jacobian blocks of the transformed closed loop at given tanh slopes.

    With only ``s_h`` and ``s_g`` the predecessor and follower couplings
    share one slope pair, which is the case the conditions need. Passing
    separate follower slopes evaluates the blocks at an arbitrary state.
    """
    s_h_max, s_g_max = slope_box(gains)
    s_h_foll = s_h if s_h_foll is None else s_h_foll
    s_g_foll = s_g if s_g_foll is None else s_g_foll
    for name, s, hi in (("s_h", s_h, s_h_max), ("s_g", s_g, s_g_max),
                        ("s_h_foll", s_h_foll, s_h_max), ("s_g_foll", s_g_foll, s_g_max)):
        _check_slope(name, s, hi)
    tp = build_transform(gains.alpha, gains.beta)
    d_self, d_pred, d_foll = command_partials(gains, s_h, s_g, s_h_foll, s_g_foll)
    t, ti = tp.t_mat, tp.t_inv
    return JacobianBlocks(
        j_ii=t @ (F_MATRIX + d_self) @ ti,
        j_pred=t @ d_pred @ ti,
        j_foll=t @ d_foll @ ti,
    )


def contraction_margin(c_sq, b, eps):
    if not b > 0:
        raise ValueError("b must be positive")
    return c_sq - b * (1.0 + eps)


def gain_K(transform):
    s_min, s_max = singular_value_extremes(transform.t_mat)
    return s_max / s_min


def equilibrium_residual(gains, n_vehicles=5, gap=10.0, speed=20.0, times=(0.0, 1.7, 50.0)):
    """Largest |command| when every vehicle sits on its desired trajectory."""
    spacing = np.full(n_vehicles, gap)
    worst = 0.0
    for t in times:
        lead_q = speed * t
        q = lead_q - np.cumsum(spacing)
        v = np.full(n_vehicles, speed)
        accel, zeta_dot = string_commands(
            gains, q, v, np.zeros(n_vehicles), lead_q, speed, spacing, variant=C2)
        worst = max(worst, float(np.abs(accel).max()), float(np.abs(zeta_dot).max()))
    return worst


def check_conditions(gains):
    """Evaluate the transformed sufficient conditions on the slope-box vertices.

    Infeasible gain sets produce a report with failed flags; nothing raises.
    """
    s_h_max, s_g_max = slope_box(gains)
    worst_mu, worst_nb = -math.inf, 0.0
    worst_nb_scaled = 0.0
    worst_vertex = worst_norm_vertex = (0.0, 0.0)
    vertices = []
    for s_h, s_g in itertools.product((0.0, s_h_max), (0.0, s_g_max)):
        blocks = jacobian_blocks(gains, s_h, s_g)
        mu = matrix_measure_2(blocks.j_ii)
        n_pred = spectral_norm_2(blocks.j_pred)
        n_foll = spectral_norm_2(blocks.j_foll)
        nb = max(n_pred, n_foll)
        vertices.append({"s_h": s_h, "s_g": s_g, "mu": mu, "norm_pred": n_pred, "norm_foll": n_foll})
        if mu > worst_mu:
            worst_mu, worst_vertex = mu, (s_h, s_g)
        if nb > worst_nb:
            worst_nb, worst_norm_vertex = nb, (s_h, s_g)
        worst_nb_scaled = max(worst_nb_scaled, n_pred, gains.eps * n_foll)

    c_sq = -worst_mu
    b = worst_nb
    residual = equilibrium_residual(gains)
    c1_ok = residual < 1e-12
    c2_ok = c_sq > TOL and b > 0
    eps_max = c_sq / b - 1.0 if b > 0 else math.inf
    c3_ok = c2_ok and gains.eps < eps_max - TOL
    cbar_sq = c_sq - b * (1.0 + gains.eps)
    return ConditionReport(
        c_sq=c_sq,
        b=b,
        eps=gains.eps,
        eps_max_allowed=eps_max,
        c1_ok=c1_ok,
        c2_ok=c2_ok,
        c3_ok=c3_ok,
        cbar_sq=cbar_sq,
        gain_k=gain_K(build_transform(gains.alpha, gains.beta)),
        worst_vertex=worst_vertex,
        worst_norm_vertex=worst_norm_vertex,
        b_eps_scaled=worst_nb_scaled,
        c1_residual=residual,
        admissible=gains.admissible,
        vertices=vertices,
    )
