"""Power sweeps and extraction of the named curve features."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .detector import DetectorConfig
from .feedback import OperatingPoint, SolverError, SolverOptions
from .simulator import DEFAULT_GATES, GateChainResult, simulate_power_point

BLIND_THRESHOLD = 1e3
RECOVERY_FRACTION = 0.99
PLATEAU_TOLERANCE = 0.2
PLATEAU_DECADES = 1.0


def default_grid(p_min: float = 1e-12, p_max: float = 1e-2, n: int = 81) -> np.ndarray:
    return np.logspace(math.log10(p_min), math.log10(p_max), n)


def make_grid(p_min: float, p_max: float, n: int, spacing: str = "log") -> np.ndarray:
    if n < 1:
        raise ValueError("grid needs at least one point")
    if n > 1 and not p_min < p_max:
        raise ValueError("grid needs p_min < p_max")
    if spacing == "log":
        if p_min <= 0:
            raise ValueError("log grid needs p_min > 0")
        return np.logspace(math.log10(p_min), math.log10(p_max), n)
    if spacing == "linear":
        if p_min < 0:
            raise ValueError("grid powers must be >= 0")
        return np.linspace(p_min, p_max, n)
    raise ValueError(f"unknown grid spacing {spacing!r}")


def derive_seed(base_seed: int, index: int) -> int:
    """64-bit per-point seed from (base_seed, index); independent of sweep length."""
    ss = np.random.SeedSequence([int(base_seed), int(index)])
    return int(ss.generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class SweepPoint:
    power: float
    op: OperatingPoint | None
    result: GateChainResult | None
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.op is not None and self.result is not None and self.op.converged

    @property
    def count_rate(self) -> float:
        return self.result.count_rate if self.result is not None else math.nan


@dataclass(frozen=True)
class SweepFeatures:
    blinding_gaps: tuple[tuple[float, float], ...] = ()
    recovery_power: float | None = None
    plateau: tuple[float, float] | None = None
    dip_minimum: tuple[float, float] | None = None
    blind_threshold: float = BLIND_THRESHOLD


@dataclass(frozen=True)
class SweepResult:
    points: tuple[SweepPoint, ...]
    config_snapshot: DetectorConfig
    features: SweepFeatures = field(default_factory=SweepFeatures)
    n_gates: int = DEFAULT_GATES
    base_seed: int = 0

    @property
    def powers(self) -> np.ndarray:
        return np.array([p.power for p in self.points])

    @property
    def rates(self) -> np.ndarray:
        return np.array([p.count_rate for p in self.points])

    @property
    def all_converged(self) -> bool:
        return all(p.ok for p in self.points)


def _point_task(args):
    power, config, n_gates, seed, opts = args
    try:
        op, res = simulate_power_point(power, config, n_gates, seed, opts)
        return SweepPoint(power, op, res)
    except SolverError as exc:
        return SweepPoint(power, None, None, f"solver: {exc}")


def run_sweep(config: DetectorConfig, power_grid=None, n_gates: int = DEFAULT_GATES,
              base_seed: int = 0, jobs: int = 1, blind_threshold: float = BLIND_THRESHOLD,
              solver_opts: SolverOptions | None = None) -> SweepResult:
    grid = default_grid() if power_grid is None else np.asarray(power_grid, dtype=float)
    if grid.size == 0:
        raise ValueError("power grid is empty")
    if np.any(grid < 0):
        raise ValueError("grid powers must be >= 0")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("power grid must be strictly increasing")
    tasks = [(float(p), config, n_gates, derive_seed(base_seed, i), solver_opts)
             for i, p in enumerate(grid)]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            points = list(pool.map(_point_task, tasks))
    else:
        points = [_point_task(t) for t in tasks]
    sweep = SweepResult(tuple(points), config, n_gates=n_gates, base_seed=base_seed)
    return SweepResult(sweep.points, config, extract_features(sweep, blind_threshold),
                       n_gates, base_seed)


def _runs(mask) -> list[tuple[int, int]]:
    """Maximal runs of True as inclusive (start, end) index pairs."""
    out, start = [], None
    for i, v in enumerate(mask):
        if v and start is None:
            start = i
        elif not v and start is not None:
            out.append((start, i - 1))
            start = None
    if start is not None:
        out.append((start, len(mask) - 1))
    return out


def find_plateau(powers, rates, tolerance: float = PLATEAU_TOLERANCE,
                 min_decades: float = PLATEAU_DECADES, floor: float = 0.0):
    """Widest run (in decades) whose rates stay within +-tolerance of the run median."""
    powers = np.asarray(powers, dtype=float)
    rates = np.asarray(rates, dtype=float)
    n = len(rates)
    best, best_span = None, -1.0
    for i in range(n):
        if powers[i] <= 0:
            continue
        for j in range(n - 1, i, -1):
            span = math.log10(powers[j] / powers[i])
            if span < min_decades or span <= best_span:
                break
            seg = rates[i:j + 1]
            if np.any(np.isnan(seg)):
                continue
            med = float(np.median(seg))
            if med > floor and np.all(np.abs(seg - med) <= tolerance * med):
                best, best_span = (i, j), span
                break
    return best


def extract_features(sweep: SweepResult, blind_threshold: float = BLIND_THRESHOLD,
                     plateau_tolerance: float = PLATEAU_TOLERANCE,
                     plateau_decades: float = PLATEAU_DECADES) -> SweepFeatures:
    if blind_threshold < 0:
        raise ValueError("blind_threshold must be >= 0")
    powers, rates = sweep.powers, sweep.rates
    f = sweep.config_snapshot.gate_frequency
    n = len(rates)
    # NaN (failed point) compares False, so it never joins a gap.
    gap_idx = _runs(rates <= blind_threshold)
    gaps = tuple((float(powers[a]), float(powers[b])) for a, b in gap_idx)

    def first_full(start):
        for k in range(start, n):
            if rates[k] >= RECOVERY_FRACTION * f:
                return k
        return None

    recovery_idx = first_full(gap_idx[-1][1] + 1) if gap_idx else None
    recovery = float(powers[recovery_idx]) if recovery_idx is not None else None

    pl = find_plateau(powers, rates, plateau_tolerance, plateau_decades, floor=blind_threshold)
    plateau = (float(powers[pl[0]]), float(powers[pl[1]])) if pl else None

    dip = None
    if pl:
        end = recovery_idx if recovery_idx is not None and recovery_idx > pl[1] else first_full(pl[1] + 1)
        end = n if end is None else end
        window = rates[pl[1] + 1:end]
        if window.size and not np.all(np.isnan(window)):
            k = pl[1] + 1 + int(np.nanargmin(window))
            med = float(np.median(rates[pl[0]:pl[1] + 1]))
            if rates[k] < (1 - plateau_tolerance) * med:
                dip = (float(powers[k]), float(rates[k]))
    return SweepFeatures(gaps, recovery, plateau, dip, blind_threshold)


def lower_gap_edge(features: SweepFeatures) -> float | None:
    return features.blinding_gaps[0][0] if features.blinding_gaps else None


def _intersect(a: tuple[float, float], b: tuple[float, float]):
    lo, hi = max(a[0], b[0]), min(a[1], b[1])
    return (lo, hi) if lo <= hi else None


def gap_overlap(sweeps: list[SweepResult]) -> list[tuple[int, int, tuple[float, float]]]:
    """Intersections of blinding gaps for every pair, as (i, j, interval)."""
    if len(sweeps) < 2:
        raise ValueError("gap_overlap needs at least two sweeps")
    ref = sweeps[0].powers
    for s in sweeps[1:]:
        if s.powers.shape != ref.shape or not np.array_equal(s.powers, ref):
            raise ValueError("sweeps do not share a common power grid")
    out = []
    for i in range(len(sweeps)):
        for j in range(i + 1, len(sweeps)):
            for ga in sweeps[i].features.blinding_gaps:
                for gb in sweeps[j].features.blinding_gaps:
                    hit = _intersect(ga, gb)
                    if hit:
                        out.append((i, j, hit))
    return out
