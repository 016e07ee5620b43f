"""Monte-Carlo gate chain with self-differencing and threshold discrimination.

A gate counts when the difference between its avalanche amplitude and the
previous gate's, plus the capacitive residual, reaches the discrimination
level.  The bias is frozen at the mean-field operating point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .detector import (
    BiasState,
    DetectorConfig,
    amplitude_scale,
    chain_pmf,
    photon_flux_per_gate,
    sample_triggered_chains,
)
from .feedback import OperatingPoint, SolverError, SolverOptions, solve_operating_point

DEFAULT_GATES = 1_000_000
CHUNK = 1 << 20


@dataclass(frozen=True)
class GateChainResult:
    counts: int
    gates: int
    count_rate: float
    std_error: float
    seed: int | None

    @classmethod
    def from_tally(cls, counts: int, gates: int, frequency: float, seed=None) -> "GateChainResult":
        p = counts / gates
        return cls(
            counts=int(counts),
            gates=int(gates),
            count_rate=frequency * p,
            std_error=frequency * math.sqrt(p * (1.0 - p) / gates),
            seed=seed,
        )


def merge_results(results: list[GateChainResult], frequency: float) -> GateChainResult:
    """Pool independent replicas by adding their tallies."""
    counts = sum(r.counts for r in results)
    gates = sum(r.gates for r in results)
    return GateChainResult.from_tally(counts, gates, frequency, seed=None)


def binary_count_rate(mu: float, eta: float, config: DetectorConfig) -> float:
    if mu < 0 or not 0 <= eta <= 1:
        raise ValueError("need mu >= 0 and 0 <= eta <= 1")
    x = mu * eta
    # -expm1(-x) keeps full precision for small x
    return config.gate_frequency * math.exp(-x) * -math.expm1(-x)


def run_gate_chain(op: OperatingPoint, config: DetectorConfig, n_gates: int = DEFAULT_GATES,
                   seed: int | None = 0, sigma_jitter: float = 0.0) -> GateChainResult:
    if n_gates < 1 or int(n_gates) != n_gates:
        raise ValueError(f"n_gates must be a positive integer, got {n_gates}")
    if sigma_jitter < 0:
        raise ValueError("sigma_jitter must be >= 0")
    n_gates = int(n_gates)
    rng = np.random.default_rng(seed)
    mu = photon_flux_per_gate(op.power, config)
    state = BiasState(op.voltage_drop, op.excess_bias)
    scale = amplitude_scale(state, config)
    threshold = config.disc_level - op.sigma

    counts = 0
    prev = 0.0
    done = 0
    while done < n_gates:
        n = min(CHUNK, n_gates - done)
        m = sample_triggered_chains(mu, op.eta, config.dark_prob, rng, n)
        a = scale * np.minimum(m, config.m_sat)
        diff = np.diff(a, prepend=prev)
        if sigma_jitter > 0:
            diff = diff + rng.normal(0.0, sigma_jitter, n)
        counts += int(np.count_nonzero(diff >= threshold))
        prev = float(a[-1])
        done += n
    return GateChainResult.from_tally(counts, n_gates, config.gate_frequency, seed)


def count_probability(op: OperatingPoint, config: DetectorConfig) -> float:
    """Stationary per-gate count probability, summed exactly over chain pairs."""
    mu = photon_flux_per_gate(op.power, config)
    state = BiasState(op.voltage_drop, op.excess_bias)
    pmf = chain_pmf(mu * op.eta, config.dark_prob, int(config.m_sat))
    a = amplitude_scale(state, config) * np.arange(pmf.size)
    fires = (a[None, :] - a[:, None]) >= config.disc_level - op.sigma
    return float(pmf @ fires @ pmf)


def analytic_count_rate(op: OperatingPoint, config: DetectorConfig) -> float:
    return config.gate_frequency * count_probability(op, config)


def simulate_power_point(power: float, config: DetectorConfig, n_gates: int = DEFAULT_GATES,
                         seed: int | None = 0, solver_opts: SolverOptions | None = None,
                         sigma_jitter: float = 0.0) -> tuple[OperatingPoint, GateChainResult]:
    try:
        op = solve_operating_point(power, config, solver_opts)
    except SolverError as exc:
        exc.power = power
        raise
    return op, run_gate_chain(op, config, n_gates, seed, sigma_jitter)
