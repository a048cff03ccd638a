"""Config ingestion, result persistence, and run manifests.

Config documents are JSON objects restricted to the documented flat keys;
floats round-trip exactly (shortest-repr serialization). Result CSVs carry
one row per (model, angle) with full-double-precision scientific notation;
every CSV gets a JSON manifest sidecar recording the config snapshot, seed,
PRNG algorithm and command provenance, which suffices to reproduce the file
bit-for-bit.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .analysis import deviation_report
from .config import ExperimentConfig, config_from_dict
from .errors import ConfigError
from .physics import classical_coincidence_ratio, qm_coincidence_ratio
from .runner import BatchResult
from .streams import RNG_ALGORITHM

CSV_COLUMNS = (
    "model",
    "angle_rad",
    "pairs_total",
    "coincidences_total",
    "ratio_mean",
    "ratio_se",
    "qm_prediction",
    "classical_prediction",
    "deviation_pct",
    "z_score",
)

#: Reference curve used for the deviation/z columns, per model.
REFERENCE_CURVES = {
    "collapse": "qm",
    "smeared": "qm",
    "local-realistic": "classical",
}


def parse_config(text: str) -> ExperimentConfig:
    """Parse a JSON config document; missing keys take the replication defaults."""
    try:
        doc = json.loads(text) if text.strip() else {}
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config document is not valid JSON: {exc}") from exc
    return config_from_dict(doc)


def load_config(path: str | Path) -> ExperimentConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    return parse_config(text)


def config_to_text(cfg: ExperimentConfig) -> str:
    return json.dumps(cfg.to_dict(), indent=2, sort_keys=True) + "\n"


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return format(value, ".17e")
    return str(value)


def _parse_field(name: str, raw: str):
    if raw == "":
        return None
    if name == "model":
        return raw
    if name in ("pairs_total", "coincidences_total"):
        return int(raw)
    return float(raw)


def build_result_rows(batches: list[BatchResult], cfg: ExperimentConfig) -> list[dict]:
    """One CSV row per (model, angle): statistics plus both prediction curves.

    deviation_pct and z_score are taken against the model's reference curve
    (QM for collapse/smeared, classical for local-realistic).
    """
    rows = []
    for batch in batches:
        reference = REFERENCE_CURVES[batch.model.value]
        curve = (
            (lambda phi: qm_coincidence_ratio(phi, cfg))
            if reference == "qm"
            else (lambda phi: classical_coincidence_ratio(phi, cfg))
        )
        report = deviation_report(batch, curve)
        for stats, dev in zip(batch.angle_stats(), report.rows):
            rows.append(
                {
                    "model": batch.model.value,
                    "angle_rad": stats.angle,
                    "pairs_total": stats.total_pairs,
                    "coincidences_total": stats.total_coincidences,
                    "ratio_mean": stats.ratio_mean,
                    "ratio_se": stats.ratio_se,
                    "qm_prediction": qm_coincidence_ratio(stats.angle, cfg),
                    "classical_prediction": classical_coincidence_ratio(stats.angle, cfg),
                    "deviation_pct": dev.deviation_pct,
                    "z_score": dev.z_score,
                }
            )
    return rows


def write_results_csv(path: str | Path, rows: list[dict]) -> None:
    path = Path(path)
    try:
        with path.open("w", encoding="utf-8", newline="\n") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(CSV_COLUMNS)
            for row in rows:
                writer.writerow([_fmt(row[col]) for col in CSV_COLUMNS])
    except OSError as exc:
        raise OSError(f"cannot write results to {path}: {exc}") from exc


def read_results_csv(path: str | Path) -> list[dict]:
    path = Path(path)
    try:
        with path.open("r", encoding="utf-8", newline="") as fh:
            reader = csv.DictReader(fh)
            return [
                {name: _parse_field(name, row[name]) for name in CSV_COLUMNS}
                for row in reader
            ]
    except OSError as exc:
        raise OSError(f"cannot read results from {path}: {exc}") from exc


@dataclass
class RunManifest:
    """Provenance for a set of output files.

    The config snapshot plus command/arguments reproduce every listed
    output; the timestamp documents when the run happened and is the one
    field expected to differ between reproductions.
    """

    command: str
    argv: list[str]
    config: dict
    outputs: list[str] = field(default_factory=list)
    tool = "fcsim"
    version: str = __version__
    rng_algorithm: str = RNG_ALGORITHM
    backend: str = ""
    workers: int = 0
    created_utc: str = ""
    notes: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "tool": self.tool,
            "version": self.version,
            "command": self.command,
            "argv": list(self.argv),
            "config": self.config,
            "rng_algorithm": self.rng_algorithm,
            "master_seed": self.config.get("master_seed"),
            "backend": self.backend,
            "workers": self.workers,
            "created_utc": self.created_utc or datetime.now(timezone.utc).isoformat(),
            "outputs": list(self.outputs),
            "notes": dict(self.notes),
        }


DEFAULT_NOTES = {
    "error_bars": "3x standard error of the mean over experiments",
    "chi_squared": "pearson-mean: mean over angles of (ratio_mean - curve)^2 / curve",
    "deviation_reference": REFERENCE_CURVES,
}


def write_manifest(path: str | Path, manifest: RunManifest) -> None:
    payload = manifest.to_dict()
    payload["notes"] = {**DEFAULT_NOTES, **payload["notes"]}
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def write_json(path: str | Path, payload: dict) -> None:
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
