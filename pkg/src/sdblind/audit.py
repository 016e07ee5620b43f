"""Best-practice compliance audit for self-differencing detector setups."""

from __future__ import annotations

from dataclasses import dataclass, field

from .detector import BiasState, DetectorConfig, sigma_sd
from .sweep import SweepResult, gap_overlap

PASS, FAIL, NA = "pass", "fail", "not_applicable"
R_QUENCH_LIMIT = 50_000.0
SUGGESTED_ALARM_CURRENT = 1e-4

EXIT_PASS, EXIT_FAIL, EXIT_BLOCKED = 0, 2, 3
# Criteria that must be evaluable for a single detector; C4 alone may be n/a.
BLOCKING = ("C1", "C2", "C3", "C5", "C6")

REMEDIATION = {
    "C1": "add a photocurrent monitor (e.g. a sense resistor in the bias line) with an alarm "
          "level below the blinding-regime photocurrent",
    "C2": "reduce the quenching/biasing resistor below 50 kOhm",
    "C3": "set the discrimination level above sigma0 and no higher than the residual reached at breakdown",
    "C4": "use different resistor values across detectors so their blinding gaps do not overlap",
    "C5": "detune the self-differencing circuit slightly and/or re-set the detector discrimination level",
    "C6": "run a complete, converged simulation of the detector over the power range of interest",
}


@dataclass(frozen=True)
class Monitor:
    sense_resistor: float
    alarm_current: float

    def __post_init__(self):
        if self.sense_resistor <= 0 or self.alarm_current <= 0:
            raise ValueError("monitor needs sense_resistor > 0 and alarm_current > 0")


@dataclass(frozen=True)
class CriterionRecord:
    id: str
    verdict: str
    evidence: dict = field(default_factory=dict)
    remediation: str = ""


@dataclass(frozen=True)
class AuditReport:
    criteria: tuple[CriterionRecord, ...]

    @property
    def overall(self) -> str:
        return FAIL if any(c.verdict == FAIL for c in self.criteria) else PASS

    def get(self, cid: str) -> CriterionRecord:
        return next(c for c in self.criteria if c.id == cid)

    @property
    def exit_code(self) -> int:
        if self.overall == FAIL:
            return EXIT_FAIL
        if any(c.verdict == NA for c in self.criteria if c.id in BLOCKING):
            return EXIT_BLOCKED
        return EXIT_PASS


def _record(cid, verdict, evidence):
    return CriterionRecord(cid, verdict, evidence, "" if verdict == PASS else REMEDIATION[cid])


def _in_gap_points(sweep: SweepResult):
    for lo, hi in sweep.features.blinding_gaps:
        for p in sweep.points:
            if lo <= p.power <= hi and p.op is not None:
                yield p


def check_c1(sweeps, monitor):
    currents = [p.op.photocurrent for s in sweeps or () for p in _in_gap_points(s)]
    evidence = {"min_in_gap_photocurrent_a": min(currents) if currents else None}
    if monitor is None:
        return _record("C1", FAIL, {**evidence, "monitor": None})
    evidence.update(alarm_current_a=monitor.alarm_current, sense_resistor_ohm=monitor.sense_resistor)
    if sweeps is None:
        return _record("C1", NA, evidence)
    ok = all(i >= monitor.alarm_current for i in currents)
    return _record("C1", PASS if ok else FAIL, evidence)


def check_c2(configs):
    worst = max(c.r_quench for c in configs)
    ok = all(c.r_quench < R_QUENCH_LIMIT for c in configs)
    return _record("C2", PASS if ok else FAIL,
                   {"max_r_quench_ohm": worst, "limit_ohm": R_QUENCH_LIMIT})


def check_c3(configs):
    rows = []
    ok = True
    for c in configs:
        at_breakdown = sigma_sd(BiasState.from_drop(c.excess_bias_nominal, c), c)
        good = c.sigma0 < c.disc_level <= at_breakdown
        ok &= good
        rows.append({"disc_level_i0": c.disc_level, "sigma0_i0": c.sigma0,
                     "sigma_at_breakdown_i0": at_breakdown})
    return _record("C3", PASS if ok else FAIL, {"detectors": rows})


def check_c4(sweeps):
    if sweeps is None or len(sweeps) < 2:
        return _record("C4", NA, {"detectors": 0 if sweeps is None else len(sweeps)})
    overlaps = gap_overlap(sweeps)
    ev = {"overlaps": [{"pair": [i, j], "interval_w": list(iv)} for i, j, iv in overlaps]}
    return _record("C4", FAIL if overlaps else PASS, ev)


def check_c5(sweeps):
    if sweeps is None:
        return _record("C5", NA, {})
    rows, ok = [], True
    for s in sweeps:
        gaps = s.features.blinding_gaps
        delta = s.config_snapshot.disc_level
        if not gaps:
            rows.append({"gap": False})
            continue
        after = [p.op.sigma for p in s.points if p.power > gaps[-1][1] and p.op is not None]
        peak = max(after) if after else None
        good = peak is not None and peak >= delta
        ok &= good
        rows.append({"gap": True, "max_post_gap_sigma_i0": peak, "disc_level_i0": delta})
    return _record("C5", PASS if ok else FAIL, {"detectors": rows})


def check_c6(sweeps):
    if sweeps is None:
        return _record("C6", NA, {})
    rows = [{"points": len(s.points),
             "converged": sum(p.ok for p in s.points),
             "gaps": len(s.features.blinding_gaps),
             "plateau": s.features.plateau is not None} for s in sweeps]
    ok = all(s.all_converged and len(s.points) > 0 for s in sweeps)
    return _record("C6", PASS if ok else FAIL, {"sweeps": rows})


def run_audit(configs: list[DetectorConfig], sweeps: list[SweepResult] | None = None,
              monitor: Monitor | None = None) -> AuditReport:
    """Evaluate C1..C6.  Without sweeps, the sweep-based criteria are not_applicable."""
    if not configs:
        raise ValueError("audit needs at least one configuration")
    if sweeps is not None and len(sweeps) != len(configs):
        raise ValueError(f"{len(configs)} configs but {len(sweeps)} sweeps")
    return AuditReport((
        check_c1(sweeps, monitor),
        check_c2(configs),
        check_c3(configs),
        check_c4(sweeps),
        check_c5(sweeps),
        check_c6(sweeps),
    ))
