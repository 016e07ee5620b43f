"""Self-consistent bias operating point under CW illumination.

The photocurrent drops a voltage across the APD and quenching resistor,
which lowers the excess bias, which in turn lowers the avalanche current.
The steady state is the fixed point of that loop, evaluated in mean field.
"""

from __future__ import annotations

from dataclasses import dataclass

from scipy.optimize import brentq

from .detector import (
    BiasState,
    DetectorConfig,
    eta_of_bias,
    expected_amplitude,
    photon_flux_per_gate,
    sigma_sd,
)


class SolverError(RuntimeError):
    """Fixed-point search failed; carries the last two iterates."""

    def __init__(self, message: str, last_iterates: tuple[float, float], power: float | None = None):
        super().__init__(message)
        self.last_iterates = last_iterates
        self.power = power


@dataclass(frozen=True)
class SolverOptions:
    tolerance: float = 1e-3
    damping: float = 0.5
    max_iterations: int = 10_000
    # Picard gives up after this many iterations without improving the residual.
    stall_window: int = 50
    bisection_fallback: bool = True

    def __post_init__(self):
        if not self.tolerance > 0:
            raise ValueError(f"tolerance must be > 0, got {self.tolerance}")
        if not 0 < self.damping <= 1:
            raise ValueError(f"damping must lie in (0, 1], got {self.damping}")
        if int(self.max_iterations) != self.max_iterations or self.max_iterations < 1:
            raise ValueError(f"max_iterations must be a positive integer, got {self.max_iterations}")
        if self.stall_window < 1:
            raise ValueError("stall_window must be >= 1")


@dataclass(frozen=True)
class OperatingPoint:
    power: float
    voltage_drop: float
    excess_bias: float
    photocurrent: float
    eta: float
    sigma: float
    converged: bool
    iterations: int
    residual: float = 0.0
    method: str = "picard"


def photocurrent(power: float, state: BiasState, config: DetectorConfig) -> float:
    mu = photon_flux_per_gate(power, config)
    avalanche = config.gate_frequency * config.q1 * expected_amplitude(mu, state, config)
    return avalanche + config.responsivity * power


def feedback_map(drop: float, power: float, config: DetectorConfig) -> float:
    """Voltage drop implied by the photocurrent at a trial drop, clamped to the supply."""
    state = BiasState.from_drop(drop, config)
    implied = config.r_total * photocurrent(power, state, config)
    return min(max(implied, 0.0), config.dc_bias)


def operating_point_at(power: float, drop: float, config: DetectorConfig, *,
                       converged: bool = True, iterations: int = 0,
                       residual: float = 0.0, method: str = "picard") -> OperatingPoint:
    state = BiasState.from_drop(drop, config)
    return OperatingPoint(
        power=power,
        voltage_drop=drop,
        excess_bias=state.excess_bias,
        photocurrent=photocurrent(power, state, config),
        eta=eta_of_bias(state, config),
        sigma=sigma_sd(state, config),
        converged=converged,
        iterations=iterations,
        residual=residual,
        method=method,
    )


def _bisect(power: float, config: DetectorConfig) -> tuple[float, float]:
    # g(x) = x - F(x) is strictly increasing because F is non-increasing in x.
    g = lambda x: x - feedback_map(x, power, config)
    lo, hi = 0.0, config.dc_bias
    if g(lo) >= 0:
        return lo, abs(g(lo))
    if g(hi) <= 0:
        return hi, abs(g(hi))
    root = brentq(g, lo, hi, xtol=1e-13, maxiter=500)
    return root, abs(g(root))


def solve_operating_point(power: float, config: DetectorConfig,
                          opts: SolverOptions | None = None) -> OperatingPoint:
    opts = opts or SolverOptions()
    if power < 0:
        raise ValueError(f"power must be >= 0, got {power}")

    x = 0.0
    prev = x
    best = float("inf")
    since_best = 0
    it = 0
    while it < opts.max_iterations:
        fx = feedback_map(x, power, config)
        res = abs(fx - x)
        if res <= opts.tolerance:
            return operating_point_at(power, x, config, iterations=it, residual=res)
        if res < best * (1 - 1e-9):
            best, since_best = res, 0
        else:
            since_best += 1
            if since_best >= opts.stall_window:
                break
        prev, x = x, min(max(x + opts.damping * (fx - x), 0.0), config.dc_bias)
        it += 1

    if opts.bisection_fallback:
        root, res = _bisect(power, config)
        if res <= opts.tolerance:
            return operating_point_at(power, root, config, iterations=it,
                                      residual=res, method="bisection")
        prev, x = x, root
    raise SolverError(
        f"no fixed point within tolerance {opts.tolerance} V at power {power} W "
        f"after {it} iterations (last iterates {prev!r}, {x!r})",
        (prev, x),
        power,
    )
