"""Certified gain search.

Gains are tuned by a multi-start pattern search on the unit cube of the
free gains. Every candidate
is scored only through :func:`check_conditions`, so whatever comes back
carries a certificate recomputed from scratch.
"""

from dataclasses import dataclass, field
import math

import numpy as np

from .conditions import check_conditions
from .controller import GainSet, REFERENCE_GAINS

POSITIVE_BOX = (1e-4, 10.0)
TRANSFORM_BOX = (-2.0, 2.0)


def default_bounds():
    bounds = {name: POSITIVE_BOX for name in GainSet.names()}
    bounds["alpha"] = bounds["beta"] = TRANSFORM_BOX
    bounds["eps"] = (0.0, 1.0)
    return bounds


@dataclass
class SearchSpec:
    bounds: dict = field(default_factory=default_bounds)
    fixed: dict = field(default_factory=lambda: {"eps": 1.0})
    initial: GainSet = None
    n_starts: int = 2
    max_iters: int = 100
    seed: int = 0
    shrink: float = 0.5
    init_step: float = 0.25
    min_step: float = 1e-4

    def __post_init__(self):
        names = set(GainSet.names())
        unknown = (set(self.bounds) | set(self.fixed)) - names
        if unknown:
            raise ValueError(f"unknown gain name(s): {', '.join(sorted(unknown))}")
        full = default_bounds()
        full.update({k: tuple(map(float, v)) for k, v in self.bounds.items()})
        for name, (lo, hi) in full.items():
            if not lo <= hi:
                raise ValueError(f"empty box for {name}: [{lo}, {hi}]")
        self.bounds = full
        if self.n_starts < 1:
            raise ValueError("n_starts must be >= 1")
        if not 0 < self.shrink < 1:
            raise ValueError("shrink must lie in (0, 1)")


@dataclass
class SynthesisResult:
    gains: GainSet
    report: object
    evaluations: int

    @property
    def feasible(self):
        return self.report.feasible


def _score(report):
    if report.feasible:
        return (1, report.cbar_sq)
    c_sq, b = report.c_sq, report.b
    slack = c_sq / b - 1.0 if b > 0 else math.inf
    penalty = max(0.0, -c_sq) + max(0.0, report.eps - slack)
    if not report.admissible:
        penalty += 1.0
    return (0, -penalty)


class _Space:
    """Maps free gains to the unit cube, logarithmically for positive boxes."""

    def __init__(self, spec):
        self.fixed = dict(spec.fixed)
        self.free = []
        for name in GainSet.names():
            if name in self.fixed:
                continue
            lo, hi = spec.bounds[name]
            if lo == hi:
                self.fixed[name] = lo
            else:
                self.free.append((name, lo, hi, lo > 0))

    def to_gains(self, u):
        vals = dict(self.fixed)
        for x, (name, lo, hi, log) in zip(u, self.free):
            if log:
                vals[name] = lo * (hi / lo) ** x
            else:
                vals[name] = lo + (hi - lo) * x
        # keep box edges exact despite the log/exp round trip
        for name, lo, hi, _ in self.free:
            vals[name] = min(max(vals[name], lo), hi)
        return GainSet(**vals)

    def from_gains(self, gains):
        u = []
        for name, lo, hi, log in self.free:
            x = min(max(getattr(gains, name), lo), hi)
            u.append(math.log(x / lo) / math.log(hi / lo) if log else (x - lo) / (hi - lo))
        return np.array(u)


def _pattern_search(u, spec, evaluate, rng):
    """Coordinate polling with a random-direction fallback before each shrink.

    The worst-vertex objective is nonsmooth, so a pure coordinate poll stalls
    on ridges where two gains must move together; the extra directions get
    it across.
    """
    best = evaluate(u)
    step = spec.init_step
    it = 0
    d = len(u)
    while it < spec.max_iters and step >= spec.min_step and d:
        it += 1
        basis = np.eye(d)
        cand_best, cand_u = _poll(u, step, np.vstack([basis, -basis]), best, evaluate)
        if cand_u is None:
            dirs = rng.normal(size=(d, d))
            dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
            cand_best, cand_u = _poll(u, step, np.vstack([dirs, -dirs]), best, evaluate)
        if cand_u is None:
            step *= spec.shrink
        else:
            best, u = cand_best, cand_u
    return best


def _poll(u, step, directions, best, evaluate):
    cand_best, cand_u = best, None
    for direction in directions:
        trial = np.clip(u + step * direction, 0.0, 1.0)
        if np.array_equal(trial, u):
            continue
        res = evaluate(trial)
        if res[0] > cand_best[0]:
            cand_best, cand_u = res, trial
    return cand_best, cand_u


def synthesize(spec):
    """Search for the gain set with the largest certified margin.

    Returns a :class:`SynthesisResult`; check ``result.feasible``. When no
    feasible point is found the result holds the least infeasible one.
    """
    space = _Space(spec)
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    cache = {}

    def evaluate(u):
        key = tuple(np.round(u, 15))
        if key not in cache:
            gains = space.to_gains(u)
            report = check_conditions(gains)
            cache[key] = (_score(report), gains, report)
        return cache[key]

    initial = spec.initial
    starts = []
    if initial is not None:
        starts.append(space.from_gains(initial))
    else:
        starts.append(np.full(len(space.free), 0.5))
    while len(starts) < spec.n_starts:
        starts.append(rng.uniform(0.0, 1.0, size=len(space.free)))

    results = []
    for j, u in enumerate(starts):
        poll_rng = np.random.Generator(np.random.PCG64([spec.seed, j]))
        results.append(_pattern_search(u, spec, evaluate, poll_rng))
    best = max(results, key=lambda r: (r[0], tuple(-x for x in r[1].as_dict().values())))
    gains = best[1]
    # certificate is recomputed on the returned value, never reused from the search
    return SynthesisResult(gains, check_conditions(gains), len(cache))


def reference_pinned_spec():
    """A spec whose boxes pin every gain to the reference values."""
    return SearchSpec(fixed=REFERENCE_GAINS.as_dict(), n_starts=1, max_iters=0)
