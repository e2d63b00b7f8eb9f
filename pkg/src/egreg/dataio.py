"""File formats: CSV tables, JSON model files, config digests, run manifests.

Numeric CSV cells are written with 17 significant digits so a value survives
the decimal round trip bitwise and a rerun with the same seed produces
byte-identical files.  Model files are versioned JSON; coefficient floats
round-trip exactly because JSON serializes them at full precision.
"""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass

import numpy as np

from . import __version__
from .estimators import FittedModel
from .exceptions import ConfigError, ParseError
from .matrixcore import Transform

MODEL_FORMAT = "egreg-model"
MODEL_FORMAT_VERSION = 1


def _fmt(value):
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return str(value)


def write_table(path, rows):
    """Write rows to CSV; floats are encoded with 17 significant digits."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def load_table(path):
    """Read a numeric CSV with a header row; returns (names, matrix).

    Malformed cells raise a :class:`ParseError` naming the file line.
    """
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            names = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: file is empty") from None
        names = [c.strip() for c in names]
        if len(set(names)) != len(names):
            raise ParseError(f"{path}, line 1: duplicate column names")
        body = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(names):
                raise ParseError(
                    f"{path}, line {lineno}: expected {len(names)} cells, got {len(row)}"
                )
            try:
                body.append([float(c) for c in row])
            except ValueError as exc:
                raise ParseError(f"{path}, line {lineno}: {exc}") from None
    if not body:
        raise ParseError(f"{path}: no data rows")
    return names, np.array(body, dtype=float)


def split_response(names, M, response=None):
    """Split a table into predictors and responses by column names.

    ``response`` lists the response column names; by default the last
    column is the response.  Returns ``(X, Y, x_names, y_names)``.
    """
    if response is None or len(response) == 0:
        y_names = [names[-1]]
    else:
        y_names = list(response)
        missing = [c for c in y_names if c not in names]
        if missing:
            raise ConfigError(
                f"response column(s) not in header: {', '.join(missing)}"
            )
    y_idx = [names.index(c) for c in y_names]
    x_idx = [i for i in range(len(names)) if i not in set(y_idx)]
    if not x_idx:
        raise ConfigError("no predictor columns remain after removing responses")
    x_names = [names[i] for i in x_idx]
    return M[:, x_idx], M[:, y_idx], x_names, y_names


def load_csv(path, response=None):
    """Load a regression table: ``(X, Y, x_names, y_names)``."""
    names, M = load_table(path)
    return split_response(names, M, response)


# ---------------------------------------------------------------------------
# Model files
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ModelFile:
    """A deserialized model plus the column names stored alongside it."""

    model: FittedModel
    x_names: list | None
    y_names: list | None
    software_version: str


def _transform_to_dict(tr: Transform | None):
    if tr is None:
        return None
    return {
        "mode": tr.mode,
        "x_mean": [float(v) for v in tr.x_mean],
        "x_scale": [float(v) for v in tr.x_scale],
        "y_mean": [float(v) for v in tr.y_mean],
        "y_scale": [float(v) for v in tr.y_scale],
    }


def _transform_from_dict(d):
    if d is None:
        return None
    return Transform(
        mode=d["mode"],
        x_mean=np.asarray(d["x_mean"], dtype=float),
        x_scale=np.asarray(d["x_scale"], dtype=float),
        y_mean=np.asarray(d["y_mean"], dtype=float),
        y_scale=np.asarray(d["y_scale"], dtype=float),
    )


def save_model(path, model: FittedModel, x_names=None, y_names=None):
    """Serialize a fitted model to versioned, self-describing JSON."""
    doc = {
        "format": MODEL_FORMAT,
        "format_version": MODEL_FORMAT_VERSION,
        "software_version": __version__,
        "method": model.method,
        "params": model.params,
        "flags": model.flags,
        "beta": [[float(v) for v in row] for row in model.beta],
        "gamma_hat": (
            None
            if model.gamma_hat is None
            else [[float(v) for v in row] for row in model.gamma_hat]
        ),
        "transform": _transform_to_dict(model.transform),
        "x_names": list(x_names) if x_names is not None else None,
        "y_names": list(y_names) if y_names is not None else None,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_model(path) -> ModelFile:
    """Read a model file written by :func:`save_model`."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: not valid JSON ({exc})") from None
    if not isinstance(doc, dict) or doc.get("format") != MODEL_FORMAT:
        raise ParseError(f"{path}: not an {MODEL_FORMAT} file")
    if doc.get("format_version", 0) > MODEL_FORMAT_VERSION:
        raise ParseError(
            f"{path}: format_version {doc['format_version']} is newer than "
            f"supported version {MODEL_FORMAT_VERSION}"
        )
    params = doc.get("params", {})
    model = FittedModel(
        beta=np.asarray(doc["beta"], dtype=float),
        method=doc["method"],
        d=params.get("d"),
        u=params.get("u"),
        lam=params.get("lambda"),
        gamma_hat=(
            None
            if doc.get("gamma_hat") is None
            else np.asarray(doc["gamma_hat"], dtype=float)
        ),
        transform=_transform_from_dict(doc.get("transform")),
        flags=doc.get("flags", {}),
    )
    return ModelFile(
        model=model,
        x_names=doc.get("x_names"),
        y_names=doc.get("y_names"),
        software_version=doc.get("software_version", "unknown"),
    )


# ---------------------------------------------------------------------------
# Manifests
# ---------------------------------------------------------------------------

def config_digest(obj) -> str:
    """SHA-256 of the canonical JSON encoding (sorted keys, no whitespace)."""
    blob = json.dumps(obj, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class RunManifest:
    """Provenance record written next to every command's outputs."""

    command: list
    config_digest: str
    seed: int | None
    software_version: str
    wall_clock_sec: float
    outputs: list


def write_manifest(path, manifest: RunManifest):
    doc = {
        "command": list(manifest.command),
        "config_digest": manifest.config_digest,
        "seed": manifest.seed,
        "software_version": manifest.software_version,
        "wall_clock_sec": manifest.wall_clock_sec,
        "outputs": list(manifest.outputs),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
