"""Gated self-differencing APD blinding simulator and best-practice auditor."""

from .audit import AuditReport, CriterionRecord, Monitor, run_audit
from .detector import BiasState, ConfigError, DetectorConfig, linear_profile, paper_default
from .feedback import OperatingPoint, SolverError, SolverOptions, solve_operating_point
from .simulator import GateChainResult, binary_count_rate, run_gate_chain, simulate_power_point
from .sweep import SweepFeatures, SweepResult, extract_features, gap_overlap, run_sweep

__version__ = "0.1.0"

__all__ = [
    "AuditReport", "BiasState", "ConfigError", "CriterionRecord", "DetectorConfig",
    "GateChainResult", "Monitor", "OperatingPoint", "SolverError", "SolverOptions",
    "SweepFeatures", "SweepResult", "binary_count_rate", "extract_features", "gap_overlap",
    "linear_profile", "paper_default", "run_audit", "run_gate_chain", "run_sweep",
    "simulate_power_point", "solve_operating_point",
]
