"""Acceptance criteria, one test per criterion, at the stated tolerances."""

import math
import time

import numpy as np
import pytest

from sdblind import io
from sdblind.audit import FAIL, NA, PASS, Monitor, run_audit
from sdblind.detector import paper_default, photon_flux_per_gate
from sdblind.feedback import feedback_map, operating_point_at
from sdblind.simulator import binary_count_rate, run_gate_chain
from sdblind.sweep import derive_seed, lower_gap_edge, run_sweep

from conftest import JOBS, SEED
from oracles import bisection_drop, eq1_rate

F = 1e9
BINARY_BLIND_POWER = 100e-9
RQ_SET = (0.0, 1e5, 2e5, 4e5)


def _in_gap(sweep):
    return [p for lo, hi in sweep.features.blinding_gaps for p in sweep.points if lo <= p.power <= hi]


def test_criterion_01_binary_model_exact():
    cfg = paper_default()
    r = binary_count_rate(math.log(2), 1.0, cfg)
    assert abs(r - F / 4) / (F / 4) <= 1e-12
    mu = photon_flux_per_gate(BINARY_BLIND_POWER, cfg)
    assert mu * cfg.eta0 == pytest.approx(22.6, abs=0.05)
    assert binary_count_rate(mu, cfg.eta0, cfg) < 1.0


def test_criterion_02_mc_matches_binary_model():
    cfg = paper_default(q1=0.0, responsivity=0.0, m_sat=1, sigma0=0.0, disc_level=0.5, dark_prob=0.0)
    per_photon = photon_flux_per_gate(1.0, cfg) * cfg.eta0
    t0 = time.perf_counter()
    for i, x in enumerate(np.logspace(-2, 1, 10)):
        op = operating_point_at(x / per_photon, 0.0, cfg)
        res = run_gate_chain(op, cfg, 1_000_000, seed=derive_seed(SEED, i))
        expected = eq1_rate(x, F)
        assert abs(res.count_rate - expected) <= 4 * res.std_error, (x, res.count_rate, expected)
    assert time.perf_counter() - t0 < 10.0


def test_criterion_03_single_gap_and_recovery(grid, sweeps):
    t0 = time.perf_counter()
    s = run_sweep(paper_default(disc_level=1.04), grid, base_seed=SEED, jobs=1)
    elapsed = time.perf_counter() - t0
    assert elapsed < 120.0
    assert s == sweeps(1.04, 0.0)
    gaps = s.features.blinding_gaps
    assert len(gaps) == 1
    lo, hi = gaps[0]
    assert lo <= 2.5e-3 and hi >= 1e-4
    rec = s.features.recovery_power
    assert rec is not None and rec > hi
    assert any(p.result.count_rate == F for p in s.points if p.power > hi)


def test_criterion_04_no_gap_at_proper_discrimination(sweeps):
    f = sweeps(0.72, 0.0).features
    assert f.blinding_gaps == ()
    assert f.dip_minimum is not None
    assert 5e6 <= f.dip_minimum[1] <= 1e8


def test_criterion_05_onset_three_orders_above_binary(sweeps):
    edge = lower_gap_edge(sweeps(1.04, 0.0).features)
    assert edge >= 1e3 * BINARY_BLIND_POWER


def test_criterion_06_resistor_shift(sweeps):
    edges = [lower_gap_edge(sweeps(1.04, rq).features) for rq in RQ_SET]
    assert None not in edges
    assert all(b <= a for a, b in zip(edges, edges[1:])), edges
    assert edges[-1] <= 1e-3 * edges[0], edges


def test_criterion_07_recovery_voltage(sweeps):
    checked = 0
    for rq in RQ_SET:
        s = sweeps(1.04, rq)
        if s.features.recovery_power is None:
            continue
        delta = s.config_snapshot.disc_level
        rec = next(p for p in s.points if p.power == s.features.recovery_power)
        last_gap = max(_in_gap(s), key=lambda p: p.power)
        assert rec.op.sigma >= delta
        assert last_gap.op.sigma < delta
        checked += 1
        if rq == 0.0:
            step = rec.op.voltage_drop - last_gap.op.voltage_drop
            assert abs(rec.op.voltage_drop - 5.0) <= step, (rec.op.voltage_drop, last_gap.op.voltage_drop)
    assert checked >= 1


def test_criterion_08_blinding_photocurrent(sweeps):
    pts = _in_gap(sweeps(1.04, 0.0))
    assert pts
    for p in pts:
        assert 1e-4 <= p.op.photocurrent <= 1e-2, (p.power, p.op.photocurrent)


def test_criterion_09_solver_properties(sweeps):
    for rq in RQ_SET:
        s = sweeps(1.04, rq)
        drops = [p.op.voltage_drop for p in s.points]
        assert all(b >= a for a, b in zip(drops, drops[1:])), rq
        for p in s.points:
            assert p.op.converged
            assert abs(p.op.voltage_drop - feedback_map(p.op.voltage_drop, p.power, s.config_snapshot)) <= 1e-3
    from sdblind.feedback import solve_operating_point
    rng = np.random.default_rng(SEED)
    for _ in range(100):
        cfg = paper_default(
            r_quench=float(rng.choice([0, 1e4, 5e4, 1e5, 2e5, 4e5, 1e6])),
            q1=float(rng.uniform(0, 3e-12)), responsivity=float(rng.uniform(0, 3)),
            m_sat=int(rng.integers(1, 8)), eta_exponent=float(rng.uniform(1, 20)),
            amplitude_exponent=float(rng.uniform(1, 5)), eta0=float(rng.uniform(0.005, 0.1)),
            disc_level=float(rng.uniform(0.5, 1.2)))
        power = 10 ** rng.uniform(-12, -2)
        op = solve_operating_point(power, cfg)
        assert op.voltage_drop == pytest.approx(bisection_drop(cfg, power), abs=2e-3)


def test_criterion_10_audit_fixtures(sweeps):
    mon = Monitor(1e3, 1e-4)
    hi_r = sweeps(1.04, 4e5)
    rep = run_audit([hi_r.config_snapshot], [hi_r], mon)
    assert rep.get("C2").verdict == FAIL and rep.exit_code == 2

    ok = sweeps(0.72, 0.0)
    rep = run_audit([ok.config_snapshot], [ok], mon)
    for cid in ("C1", "C2", "C3", "C5", "C6"):
        assert rep.get(cid).verdict == PASS, (cid, rep.get(cid))
    assert rep.get("C4").verdict == NA

    pair = [sweeps(1.04, 0.0), sweeps(1.04, 4e5)]
    rep = run_audit([s.config_snapshot for s in pair], pair, mon)
    assert rep.get("C4").verdict == PASS


def test_criterion_11_determinism(grid, sweeps, tmp_path):
    a = sweeps(1.04, 0.0)
    b = run_sweep(paper_default(disc_level=1.04), grid, base_seed=SEED, jobs=JOBS)
    io.emit_sweep_csv(a, tmp_path / "a.csv")
    io.emit_sweep_csv(b, tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    c = sweeps(1.04, 0.0, seed=SEED + 1)
    assert c.features == a.features
    assert not np.array_equal(a.rates, c.rates)
