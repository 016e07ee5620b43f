"""Config parsing and CSV/JSON/plot-data serialization."""

from __future__ import annotations

import csv
import json
import re
from dataclasses import fields
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .audit import AuditReport, CriterionRecord
from .detector import PROFILES, ConfigError, DetectorConfig, mv_to_i0
from .sweep import SweepFeatures, SweepResult

SCHEMA_VERSION = 1
CSV_HEADER = ["power_w", "count_rate_hz", "std_error_hz", "photocurrent_a",
              "voltage_drop_v", "excess_bias_v", "sigma_i0", "eta", "converged"]
CONFIG_KEYS = tuple(f.name for f in fields(DetectorConfig))
EXTRA_KEYS = ("disc_mv",)


class ConfigParseError(ValueError):
    def __init__(self, path, line: int | None, message: str):
        where = f"{path}:{line}" if line is not None else str(path)
        super().__init__(f"{where}: {message}")
        self.line = line


def _toml_line(exc: Exception) -> int | None:
    line = getattr(exc, "lineno", None)
    if line is not None:
        return int(line)
    m = re.search(r"line (\d+)", str(exc))
    return int(m.group(1)) if m else None


def parse_config_text(text: str, defaults: str | None = None, source: str = "<config>"):
    """Parse TOML text into (DetectorConfig, metadata)."""
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigParseError(source, _toml_line(exc), f"parse error: {exc}") from None
    unknown = sorted(set(raw) - set(CONFIG_KEYS) - set(EXTRA_KEYS))
    if unknown:
        raise ConfigError(unknown[0], "unknown key")
    meta = {"source": source, "defaults": defaults}
    if "disc_mv" in raw:
        if "disc_level" in raw:
            raise ConfigError("disc_mv", "give either disc_level or disc_mv, not both")
        mv = raw.pop("disc_mv")
        if isinstance(mv, bool) or not isinstance(mv, (int, float)):
            raise ConfigError("disc_mv", f"expected a number, got {mv!r}")
        raw["disc_level"] = mv_to_i0(mv)
        meta["disc_mv"] = mv
        meta["disc_level_from_mv"] = raw["disc_level"]
    missing = [k for k in CONFIG_KEYS if k not in raw]
    if missing and defaults is None:
        raise ConfigError(missing[0], "missing key (pass --defaults paper to fill from the default profile)")
    if "m_sat" in raw:
        v = raw["m_sat"]
        if isinstance(v, float) and v.is_integer():
            raw["m_sat"] = int(v)
        elif not isinstance(v, int) or isinstance(v, bool):
            raise ConfigError("m_sat", f"must be an integer, got {v!r}")
    if defaults is None:
        return DetectorConfig(**raw), meta
    if defaults not in PROFILES:
        raise ConfigError("defaults", f"unknown profile {defaults!r}")
    return PROFILES[defaults](**raw), meta


def parse_config(path, defaults: str | None = None) -> DetectorConfig:
    return load_config(path, defaults)[0]


def load_config(path, defaults: str | None = None):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigParseError(path, None, f"cannot read: {exc.strerror}") from None
    return parse_config_text(text, defaults, str(path))


def _f(x) -> str:
    return repr(float(x))


def sweep_rows(sweep: SweepResult):
    for p in sweep.points:
        if p.op is None or p.result is None:
            yield [_f(p.power)] + ["nan"] * 7 + ["false"]
            continue
        yield [_f(p.power), _f(p.result.count_rate), _f(p.result.std_error),
               _f(p.op.photocurrent), _f(p.op.voltage_drop), _f(p.op.excess_bias),
               _f(p.op.sigma), _f(p.op.eta), "true" if p.op.converged else "false"]


def _open_for_write(path):
    path = Path(path)
    try:
        return path.open("w", newline="")
    except OSError as exc:
        raise OSError(f"{path}: cannot write: {exc.strerror}") from None


def emit_sweep_csv(sweep: SweepResult, path) -> Path:
    with _open_for_write(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        w.writerows(sweep_rows(sweep))
    return Path(path)


def read_sweep_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    for r in rows:
        for k in CSV_HEADER[:-1]:
            r[k] = float(r[k])
        r["converged"] = r["converged"] == "true"
    return rows


def emit_plot_data(sweep: SweepResult, path) -> Path:
    with _open_for_write(path) as fh:
        fh.write("# power_w count_rate_hz\n")
        for p in sweep.points:
            fh.write(f"{_f(p.power)} {_f(p.count_rate)}\n")
    return Path(path)


def features_to_dict(features: SweepFeatures, metadata: dict | None = None) -> dict:
    d = {
        "schema_version": SCHEMA_VERSION,
        "kind": "sweep_features",
        "blind_threshold_hz": features.blind_threshold,
        "blinding_gaps": [[lo, hi] for lo, hi in features.blinding_gaps],
        "recovery_power_w": features.recovery_power,
        "plateau_w": list(features.plateau) if features.plateau else None,
        "dip_minimum": None if features.dip_minimum is None else {
            "power_w": features.dip_minimum[0], "count_rate_hz": features.dip_minimum[1]},
    }
    if metadata is not None:
        d["metadata"] = metadata
    return d


def features_from_dict(d: dict) -> SweepFeatures:
    _check_schema(d, "sweep_features")
    dip = d["dip_minimum"]
    return SweepFeatures(
        blinding_gaps=tuple((float(a), float(b)) for a, b in d["blinding_gaps"]),
        recovery_power=d["recovery_power_w"],
        plateau=tuple(d["plateau_w"]) if d["plateau_w"] else None,
        dip_minimum=None if dip is None else (dip["power_w"], dip["count_rate_hz"]),
        blind_threshold=d["blind_threshold_hz"],
    )


def report_to_dict(report: AuditReport, metadata: dict | None = None) -> dict:
    d = {
        "schema_version": SCHEMA_VERSION,
        "kind": "audit_report",
        "overall": report.overall,
        "exit_code": report.exit_code,
        "criteria": [{"id": c.id, "verdict": c.verdict, "evidence": c.evidence,
                      "remediation": c.remediation} for c in report.criteria],
    }
    if metadata is not None:
        d["metadata"] = metadata
    return d


def report_from_dict(d: dict) -> AuditReport:
    _check_schema(d, "audit_report")
    return AuditReport(tuple(CriterionRecord(c["id"], c["verdict"], c["evidence"], c["remediation"])
                             for c in d["criteria"]))


def _check_schema(d: dict, kind: str):
    if d.get("schema_version") != SCHEMA_VERSION or d.get("kind") != kind:
        raise ValueError(f"not a schema_version {SCHEMA_VERSION} {kind} document")


def dumps(d: dict) -> str:
    # allow_nan=False: non-finite values must be mapped to null before this point
    return json.dumps(d, indent=2, allow_nan=False) + "\n"


def _write_json(d: dict, path) -> Path:
    with _open_for_write(path) as fh:
        fh.write(dumps(d))
    return Path(path)


def emit_features_json(features: SweepFeatures, path, metadata: dict | None = None) -> Path:
    return _write_json(features_to_dict(features, metadata), path)


def emit_report_json(report: AuditReport, path, metadata: dict | None = None) -> Path:
    return _write_json(report_to_dict(report, metadata), path)


def parse_features_json(path) -> SweepFeatures:
    return features_from_dict(json.loads(Path(path).read_text()))


def parse_report_json(path) -> AuditReport:
    return report_from_dict(json.loads(Path(path).read_text()))
