"""Device physics primitives for a gated self-differencing APD.

Everything here is a pure function of a :class:`DetectorConfig` and a
:class:`BiasState`; randomness enters only through an explicit numpy
``Generator``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields, replace

import numpy as np

PLANCK = 6.62607015e-34
LIGHT_SPEED = 2.99792458e8

# Discriminator calibration: the efficiency kink at 16 mV is where the
# threshold meets sigma0 = 0.64 I0, so one millivolt is 0.04 I0.
KAPPA_I0_PER_MV = 0.04


class ConfigError(ValueError):
    """Invalid configuration value; ``field`` names the offending entry."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


@dataclass(frozen=True)
class DetectorConfig:
    gate_frequency: float = 1.0e9
    excess_bias_nominal: float = 2.1
    dc_bias: float = 51.6
    r_apd: float = 1.0e3
    r_quench: float = 0.0
    eta0: float = 0.028
    sigma0: float = 0.64
    residual_growth: float = 0.125
    m_sat: int = 4
    q1: float = 1.0e-12
    dark_prob: float = 2.3e-5
    responsivity: float = 2.0
    wavelength: float = 1606e-9
    disc_level: float = 0.72
    # Shape exponents of the bias laws; 1.0 gives the plain linear laws.
    eta_exponent: float = 14.0
    amplitude_exponent: float = 3.0

    def __post_init__(self):
        validate_config(self)

    @property
    def r_total(self) -> float:
        return self.r_apd + self.r_quench

    def with_(self, **changes) -> "DetectorConfig":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return asdict(self)


def validate_config(cfg: DetectorConfig) -> None:
    for f in fields(cfg):
        v = getattr(cfg, f.name)
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError(f.name, f"expected a number, got {v!r}")
        if not math.isfinite(v):
            raise ConfigError(f.name, "must be finite")
    checks = [
        ("gate_frequency", cfg.gate_frequency > 0, "must be > 0"),
        ("excess_bias_nominal", cfg.excess_bias_nominal > 0, "must be > 0"),
        ("dc_bias", cfg.dc_bias >= cfg.excess_bias_nominal, "must be >= excess_bias_nominal"),
        ("eta0", 0 <= cfg.eta0 <= 1, "must lie in [0, 1]"),
        ("dark_prob", 0 <= cfg.dark_prob <= 1, "must lie in [0, 1]"),
        ("sigma0", cfg.sigma0 >= 0, "must be >= 0"),
        ("residual_growth", cfg.residual_growth >= 0, "must be >= 0"),
        ("r_apd", cfg.r_apd >= 0, "must be >= 0"),
        ("r_quench", cfg.r_quench >= 0, "must be >= 0"),
        ("m_sat", float(cfg.m_sat).is_integer() and cfg.m_sat >= 1, "must be an integer >= 1"),
        ("q1", cfg.q1 >= 0, "must be >= 0"),
        ("responsivity", cfg.responsivity >= 0, "must be >= 0"),
        ("wavelength", cfg.wavelength > 0, "must be > 0"),
        ("disc_level", cfg.disc_level >= 0, "must be >= 0"),
        ("eta_exponent", cfg.eta_exponent > 0, "must be > 0"),
        ("amplitude_exponent", cfg.amplitude_exponent > 0, "must be > 0"),
    ]
    for name, ok, msg in checks:
        if not ok:
            raise ConfigError(name, f"{msg} (got {getattr(cfg, name)!r})")


def paper_default(**overrides) -> DetectorConfig:
    """Calibrated default profile (the dataclass defaults)."""
    return DetectorConfig(**overrides)


def linear_profile(**overrides) -> DetectorConfig:
    """Linear bias laws with the uncalibrated charge and responsivity."""
    base = dict(eta_exponent=1.0, amplitude_exponent=1.0, q1=0.25e-12, responsivity=0.9)
    base.update(overrides)
    return DetectorConfig(**base)


PROFILES = {"paper": paper_default, "linear": linear_profile}


def mv_to_i0(mv: float) -> float:
    return KAPPA_I0_PER_MV * mv


def i0_to_mv(level: float) -> float:
    return level / KAPPA_I0_PER_MV


@dataclass(frozen=True)
class BiasState:
    voltage_drop: float
    excess_bias: float

    @classmethod
    def from_drop(cls, voltage_drop: float, config: DetectorConfig) -> "BiasState":
        if voltage_drop < 0:
            raise ValueError(f"voltage_drop must be >= 0, got {voltage_drop}")
        return cls(voltage_drop, config.excess_bias_nominal - voltage_drop)


def bias_fraction(state: BiasState, config: DetectorConfig) -> float:
    """V_ex / V_ex0 clipped to [0, 1]."""
    return min(max(state.excess_bias / config.excess_bias_nominal, 0.0), 1.0)


def photon_flux_per_gate(power: float, config: DetectorConfig) -> float:
    if power < 0:
        raise ValueError(f"power must be >= 0, got {power}")
    return power * config.wavelength / (PLANCK * LIGHT_SPEED * config.gate_frequency)


def eta_of_bias(state: BiasState, config: DetectorConfig) -> float:
    return config.eta0 * bias_fraction(state, config) ** config.eta_exponent


def amplitude_scale(state: BiasState, config: DetectorConfig) -> float:
    s = bias_fraction(state, config)
    if s <= 0.0:
        return 0.0
    return s ** config.amplitude_exponent


def avalanche_amplitude(m, state: BiasState, config: DetectorConfig):
    """Avalanche current in I0 for ``m`` triggered chains (scalar or array)."""
    if np.any(np.asarray(m) < 0):
        raise ValueError("chain count must be >= 0")
    return amplitude_scale(state, config) * np.minimum(m, config.m_sat)


def sigma_sd(state: BiasState, config: DetectorConfig) -> float:
    if state.voltage_drop < 0:
        raise ValueError("voltage_drop must be >= 0")
    return config.sigma0 * (1.0 + config.residual_growth * state.voltage_drop)


def sample_triggered_chains(mu: float, eta: float, dark_prob: float,
                            rng: np.random.Generator, size=None):
    """Poisson(mu*eta) photon-initiated chains plus a Bernoulli dark chain."""
    if mu < 0 or not 0 <= eta <= 1:
        raise ValueError("need mu >= 0 and 0 <= eta <= 1")
    m = rng.poisson(mu * eta, size)
    dark = rng.random(size) < dark_prob
    return m + dark


def chain_pmf(lam: float, dark_prob: float, m_sat: int) -> np.ndarray:
    """Distribution of min(m, m_sat) for m = Poisson(lam) + Bernoulli(dark_prob).

    Returns an array of length m_sat + 1; the last entry holds P(m >= m_sat).
    The sum is exact, so no truncation is involved.
    """
    k = np.arange(m_sat)
    if lam > 0:
        logp = -lam + k * math.log(lam) - np.array([math.lgamma(i + 1) for i in k])
        pois = np.exp(logp)
    else:
        pois = (k == 0).astype(float)
    head = (1.0 - dark_prob) * pois
    head[1:] += dark_prob * pois[:-1]
    tail = max(1.0 - head.sum(), 0.0)
    return np.append(head, tail)


def expected_amplitude(mu: float, state: BiasState, config: DetectorConfig) -> float:
    if mu < 0:
        raise ValueError("mu must be >= 0")
    scale = amplitude_scale(state, config)
    if scale == 0.0:
        return 0.0
    lam = mu * eta_of_bias(state, config)
    pmf = chain_pmf(lam, config.dark_prob, int(config.m_sat))
    return scale * float(np.dot(np.arange(pmf.size), pmf))
