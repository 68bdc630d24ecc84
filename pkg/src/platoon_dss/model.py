"""Vehicles, disturbances, desired configuration and the virtual leader."""

from dataclasses import dataclass, field, replace
import math

import numpy as np


@dataclass(frozen=True)
class VehicleState:
    q: float
    v: float


@dataclass(frozen=True)
class AugmentedState:
    """Position, velocity and integral coordinate of one vehicle."""

    q: float
    v: float
    xi: float = 0.0


@dataclass(frozen=True)
class DisturbanceSpec:
    """Acceleration disturbance ``w_bar + amp * sin(freq t) * exp(-decay t)``."""

    w_bar: float = 0.0
    amp: float = 0.0
    decay: float = 0.1
    freq: float = 1.0

    def __post_init__(self):
        for name in ("w_bar", "amp", "decay", "freq"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"disturbance {name} must be finite")
        if self.decay < 0:
            raise ValueError("disturbance decay must be >= 0")


@dataclass(frozen=True)
class VehicleParams:
    mass_true: float = 1000.0
    mass_nominal: float = 1000.0

    def __post_init__(self):
        if not (self.mass_true > 0 and self.mass_nominal > 0):
            raise ValueError("vehicle masses must be positive")


@dataclass(frozen=True)
class VehicleSpec:
    """Everything that is specific to one follower vehicle.

    ``initial.xi`` holds the raw integral state zeta(0), not the shifted one;
    the shift depends on the integral gain and lives with the controller.
    """

    params: VehicleParams = field(default_factory=VehicleParams)
    disturbance: DisturbanceSpec = field(default_factory=DisturbanceSpec)
    initial: AugmentedState = field(default_factory=lambda: AugmentedState(0.0, 0.0, 0.0))


@dataclass(frozen=True)
class PlatoonConfig:
    """A platoon of ``n_vehicles`` followers behind a constant-speed virtual leader.

    ``spacing[i-1]`` is the desired gap between vehicle ``i`` and its
    predecessor (the leader for ``i = 1``).
    """

    n_vehicles: int
    spacing: tuple
    leader_speed: float = 20.0
    leader_initial_position: float = 0.0
    seed: int = 0
    per_vehicle: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "spacing", tuple(float(s) for s in self.spacing))
        object.__setattr__(self, "per_vehicle", tuple(self.per_vehicle))
        if self.n_vehicles < 1:
            raise ValueError("n_vehicles must be >= 1")
        if len(self.spacing) != self.n_vehicles:
            raise ValueError(
                f"spacing has {len(self.spacing)} entries, expected {self.n_vehicles}"
            )
        if any(not (s > 0 and math.isfinite(s)) for s in self.spacing):
            raise ValueError("spacings must be positive and finite")
        if self.per_vehicle and len(self.per_vehicle) != self.n_vehicles:
            raise ValueError(
                f"per_vehicle has {len(self.per_vehicle)} entries, expected {self.n_vehicles}"
            )
        if not self.per_vehicle:
            object.__setattr__(
                self,
                "per_vehicle",
                tuple(
                    VehicleSpec(initial=self._desired_initial(i))
                    for i in range(1, self.n_vehicles + 1)
                ),
            )

    def _desired_initial(self, i):
        q = self.leader_initial_position - sum(self.spacing[:i])
        return AugmentedState(q, self.leader_speed, 0.0)

    @classmethod
    def uniform(cls, n_vehicles, gap=10.0, **kwargs):
        return cls(n_vehicles=n_vehicles, spacing=(gap,) * n_vehicles, **kwargs)

    @property
    def offsets(self):
        """Cumulative distances ``delta_{i,0}`` from the leader, as an array."""
        return np.cumsum(self.spacing)


def leader_state(t, cfg):
    return VehicleState(cfg.leader_initial_position + cfg.leader_speed * t, cfg.leader_speed)


def spacing_to_leader(i, cfg):
    if not 1 <= i <= cfg.n_vehicles:
        raise IndexError(f"vehicle index {i} outside 1..{cfg.n_vehicles}")
    return float(sum(cfg.spacing[:i]))


def desired_state(i, t, cfg):
    lead = leader_state(t, cfg)
    return VehicleState(lead.q - spacing_to_leader(i, cfg), cfg.leader_speed)


def disturbance_value(spec, t):
    return spec.w_bar + spec.amp * np.sin(spec.freq * t) * np.exp(-spec.decay * t)


def sample_scenario(base, seed, mass_spread=200.0):
    """Draw a randomized scenario around the desired configuration of ``base``.

    Every use of the random number ``r`` is a fresh uniform draw on [-1, 1].
    Per vehicle, in order: initial position offset, initial velocity offset,
    time-varying disturbance amplitude, constant disturbance ``1 + r`` and
    true mass ``m_nominal + mass_spread * r``. The five draws are always made,
    so ``mass_spread=0`` yields the nominal-mass twin of the same scenario.

    Draws come from ``numpy.random.Generator(PCG64(seed))``.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    vehicles = []
    for i in range(1, base.n_vehicles + 1):
        r_pos, r_vel, r_amp, r_bar, r_mass = rng.uniform(-1.0, 1.0, size=5)
        template = base.per_vehicle[i - 1]
        m_nom = template.params.mass_nominal
        desired = desired_state(i, 0.0, base)
        vehicles.append(
            VehicleSpec(
                params=VehicleParams(mass_true=m_nom + mass_spread * r_mass, mass_nominal=m_nom),
                disturbance=replace(template.disturbance, amp=float(r_amp), w_bar=float(1.0 + r_bar)),
                initial=AugmentedState(float(desired.q + r_pos), float(desired.v + r_vel), 0.0),
            )
        )
    return replace(base, seed=seed, per_vehicle=tuple(vehicles))
