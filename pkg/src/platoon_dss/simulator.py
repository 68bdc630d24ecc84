"""Fixed-step simulation of the closed-loop platoon and error bookkeeping."""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .bounds import DssBound, ORIGINAL, bound_envelope, eval_bound, scenario_bound_inputs
from .conditions import check_conditions
from .controller import C1, C2, string_commands
from .model import AugmentedState, DisturbanceSpec, PlatoonConfig, VehicleParams, VehicleSpec

ACCEL = "accel"
FORCE = "force"
DIVERGENCE_LIMIT = 1e9


class SimulationDivergence(ArithmeticError):
    def __init__(self, t, vehicle, value):
        self.t, self.vehicle, self.value = t, vehicle, value
        super().__init__(f"state diverged at t={t:.6g} s, vehicle {vehicle} (value {value!r})")


@dataclass
class Trajectory:
    """Time histories of one run; arrays are shaped ``(len(times), N)``.

    ``xi_shift`` is ``w_bar / k`` per vehicle (absent without integral action),
    so the shifted integral coordinate is ``zeta + xi_shift``.
    """

    times: np.ndarray
    q: np.ndarray
    v: np.ndarray
    zeta: np.ndarray
    u: np.ndarray
    a: np.ndarray
    d: np.ndarray
    leader_q: np.ndarray
    leader_v: np.ndarray
    spacing: np.ndarray
    xi_shift: Optional[np.ndarray] = None
    variant: str = C2

    @property
    def n_vehicles(self):
        return self.q.shape[1]

    def gap_errors(self):
        q_pred = np.concatenate([self.leader_q[:, None], self.q[:, :-1]], axis=1)
        return q_pred - self.q - self.spacing

    def state_errors(self):
        q_star = self.leader_q[:, None] - np.cumsum(self.spacing)
        return self.q - q_star, self.v - self.leader_v[:, None]

    def error_norm_x(self):
        dq, dv = self.state_errors()
        return np.sqrt(dq ** 2 + dv ** 2).max(axis=1)

    def error_norm_z(self):
        if self.xi_shift is None:
            raise ValueError("augmented error needs integral action (variant C2, k != 0)")
        dq, dv = self.state_errors()
        xi = self.zeta + self.xi_shift
        return np.sqrt(dq ** 2 + dv ** 2 + xi ** 2).max(axis=1)


@dataclass
class ErrorMetrics:
    sup_err: np.ndarray
    gap_err: np.ndarray
    terminal_gap_err: np.ndarray
    peak_gap_err: np.ndarray
    sup_err_z: Optional[np.ndarray] = None

    @classmethod
    def from_trajectory(cls, traj):
        gaps = traj.gap_errors()
        idx = np.abs(gaps).argmax(axis=0)
        return cls(
            sup_err=traj.error_norm_x(),
            gap_err=gaps,
            terminal_gap_err=gaps[-1].copy(),
            peak_gap_err=gaps[idx, np.arange(gaps.shape[1])],
            sup_err_z=traj.error_norm_z() if traj.xi_shift is not None else None,
        )


def _vehicle_arrays(cfg):
    veh = cfg.per_vehicle
    return dict(
        m_true=np.array([p.params.mass_true for p in veh]),
        m_nom=np.array([p.params.mass_nominal for p in veh]),
        w_bar=np.array([p.disturbance.w_bar for p in veh]),
        amp=np.array([p.disturbance.amp for p in veh]),
        decay=np.array([p.disturbance.decay for p in veh]),
        freq=np.array([p.disturbance.freq for p in veh]),
        spacing=np.asarray(cfg.spacing, dtype=float),
    )


def _disturbance(arr, t):
    t = np.asarray(t, dtype=float)[..., None]
    return arr["w_bar"] + arr["amp"] * np.sin(arr["freq"] * t) * np.exp(-arr["decay"] * t)


def initial_state(cfg):
    """Stacked ``(N, 3)`` array of ``(q, v, zeta)``."""
    return np.array([[p.initial.q, p.initial.v, p.initial.xi] for p in cfg.per_vehicle])


def make_rhs(cfg, gains, variant=C2, channel=ACCEL, leader_frame=False):
    """Build ``rhs(t, state)`` for a ``(N, 3)`` state of ``(q, v, zeta)`` rows.

    The plant divides the control force by the true mass while the controller
    multiplies its command by the nominal mass. The disturbance is an
    acceleration by default; ``channel="force"`` divides it by the true mass.

    With ``leader_frame=True`` positions and velocities are measured relative
    to the leader. The couplings only see differences, so this is the same
    system with far smaller magnitudes, which keeps roundoff out of the
    integration error.
    """
    if variant not in (C1, C2):
        raise ValueError(f"unknown controller variant {variant!r}")
    if channel not in (ACCEL, FORCE):
        raise ValueError(f"unknown disturbance channel {channel!r}")
    arr = _vehicle_arrays(cfg)
    mass_ratio = arr["m_nom"] / arr["m_true"]
    d_scale = 1.0 / arr["m_true"] if channel == FORCE else 1.0
    q0, v0 = cfg.leader_initial_position, cfg.leader_speed

    def rhs(t, state):
        q, v, zeta = state[:, 0], state[:, 1], state[:, 2]
        if leader_frame:
            accel, zeta_dot = string_commands(
                gains, q, v, zeta, 0.0, 0.0, arr["spacing"], variant)
        else:
            accel, zeta_dot = string_commands(
                gains, q, v, zeta, q0 + v0 * t, v0, arr["spacing"], variant)
        out = np.empty_like(state)
        out[:, 0] = v
        out[:, 1] = mass_ratio * accel + d_scale * _disturbance(arr, t)
        out[:, 2] = zeta_dot
        return out

    return rhs


def closed_loop_rhs(t, full_state, cfg, gains, variant=C2, channel=ACCEL):
    state = np.asarray(full_state, dtype=float).reshape(cfg.n_vehicles, 3)
    out = make_rhs(cfg, gains, variant, channel)(t, state)
    _guard(t, out)
    return out


def _guard(t, state):
    bad = ~np.isfinite(state) | (np.abs(state) > DIVERGENCE_LIMIT)
    if bad.any():
        row = int(np.argwhere(bad)[0][0]) if state.ndim > 1 else 0
        flat = state[row] if state.ndim > 1 else state
        raise SimulationDivergence(t, row + 1, flat.tolist())


def integrate_rk4(rhs, initial_state, dt, t_end):
    """Classical fixed-step RK4 on the grid ``0, dt, ..., t_end``.

    Returns
    -------
    times : ndarray, shape (n_steps + 1,)
    states : ndarray, shape (n_steps + 1, *initial_state.shape)
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    n_steps = int(round(t_end / dt))
    if n_steps < 1 or abs(n_steps * dt - t_end) > 1e-9 * max(1.0, t_end):
        raise ValueError(f"t_end={t_end} must be a positive multiple of dt={dt}")
    y = np.array(initial_state, dtype=float)
    times = np.arange(n_steps + 1) * dt
    states = np.empty((n_steps + 1,) + y.shape)
    states[0] = y
    half = 0.5 * dt
    for n in range(n_steps):
        t = times[n]
        k1 = rhs(t, y)
        k2 = rhs(t + half, y + half * k1)
        k3 = rhs(t + half, y + half * k2)
        k4 = rhs(t + dt, y + dt * k3)
        y = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        _guard(times[n + 1], y)
        states[n + 1] = y
    return times, states


def run_scenario(cfg, gains, variant=C2, dt=0.01, t_end=100.0, channel=ACCEL):
    """Simulate one scenario; returns ``(Trajectory, ErrorMetrics)``."""
    rhs = make_rhs(cfg, gains, variant, channel, leader_frame=True)
    y0 = initial_state(cfg) - [cfg.leader_initial_position, cfg.leader_speed, 0.0]
    times, states = integrate_rk4(rhs, y0, dt, t_end)
    arr = _vehicle_arrays(cfg)
    leader_q = cfg.leader_initial_position + cfg.leader_speed * times
    leader_v = np.full_like(times, cfg.leader_speed)
    q = states[..., 0] + leader_q[:, None]
    v = states[..., 1] + leader_v[:, None]
    zeta = states[..., 2]
    accel, _ = string_commands(gains, q, v, zeta, leader_q, leader_v, arr["spacing"], variant)
    u = arr["m_nom"] * accel
    d = _disturbance(arr, times)
    xi_shift = None
    if variant == C2 and gains.k_int != 0:
        w_bar = arr["w_bar"] / arr["m_true"] if channel == FORCE else arr["w_bar"]
        xi_shift = w_bar / gains.k_int
    traj = Trajectory(
        times=times, q=q, v=v, zeta=zeta, u=u, a=u / arr["m_true"], d=d,
        leader_q=leader_q, leader_v=leader_v, spacing=arr["spacing"],
        xi_shift=xi_shift, variant=variant,
    )
    return traj, ErrorMetrics.from_trajectory(traj)


def verify_bound(traj, bound, which_norm="original_x", dt_allowance=True):
    """Compare a measured error series against a bound on the trajectory grid.

    Returns ``(holds, max_violation, argmax_t)``; ``max_violation`` is the
    largest ``measured - bound`` (negative when the bound holds everywhere).
    """
    if which_norm == "original_x":
        measured = traj.error_norm_x()
    elif which_norm == "augmented_z":
        measured = traj.error_norm_z()
    else:
        raise ValueError(f"unknown norm {which_norm!r}")
    values = eval_bound(bound, traj.times)
    if np.shape(values) != measured.shape:
        raise ValueError("bound and trajectory grids differ")
    dt = traj.times[1] - traj.times[0] if len(traj.times) > 1 else 0.0
    tol = 1e-6 + (10.0 * dt ** 4 if dt_allowance else 0.0)
    gap = measured - values
    j = int(np.argmax(gap))
    return bool(gap[j] <= tol), float(gap[j]), float(traj.times[j])


def envelope_config(n_vehicles, gap=10.0, leader_speed=20.0, r=1.0, mass=1000.0):
    """Worst-case-style scenario whose per-vehicle magnitudes do not depend on N.

    Signs alternate along the string so neighbouring vehicles are pushed
    apart: position and velocity offsets ``+-r``, disturbance amplitude
    ``+-r`` and constant disturbance ``1 +- r``.
    """
    vehicles = []
    for i in range(1, n_vehicles + 1):
        s = 1.0 if i % 2 else -1.0
        vehicles.append(VehicleSpec(
            params=VehicleParams(mass, mass),
            disturbance=DisturbanceSpec(w_bar=1.0 + s * r, amp=s * r),
            initial=AugmentedState(-gap * i + s * r, leader_speed - s * r, 0.0),
        ))
    return PlatoonConfig.uniform(n_vehicles, gap, leader_speed=leader_speed,
                                 per_vehicle=tuple(vehicles))


@dataclass(frozen=True)
class SweepRow:
    n_vehicles: int
    worst_sup_err: float
    bound_envelope: float


def string_sweep(gains, variant=C2, n_list=(3, 5, 10, 20, 40), dt=0.01, t_end=100.0,
                 make_config=envelope_config, channel=ACCEL, max_workers=None):
    """Worst error norm per string length under a common disturbance envelope."""
    report = check_conditions(gains)

    def one(n):
        cfg = make_config(n)
        traj, metrics = run_scenario(cfg, gains, variant, dt, t_end, channel)
        env = float("nan")
        if report.feasible:
            inputs = scenario_bound_inputs(cfg, gains, report, channel)
            env = bound_envelope(DssBound(ORIGINAL, inputs))
        return SweepRow(n, float(metrics.sup_err.max()), env)

    n_list = list(n_list)
    if not n_list:
        return []
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        return list(pool.map(one, n_list))
