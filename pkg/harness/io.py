"""
Harness I/O
Versioned JSON documents and CSV series for the command-line front end.
"""

import json
import logging
from pathlib import Path
from typing import Optional

import numpy as np
import pandas as pd

from config.solver_config import CLI
from data.instances import GeneratedInstance, IntervalTable
from scheduling.errors import InvalidInputError
from scheduling.model import Instance, Schedule

logger = logging.getLogger(__name__)


def read_json(path) -> dict:
    path = Path(path)
    try:
        with open(path) as f:
            data = json.load(f)
    except OSError as e:
        raise InvalidInputError(f"cannot read {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise InvalidInputError(f"{path} is not valid JSON: {e}") from e
    version = data.get("schema_version", CLI["schema_version"]) if isinstance(data, dict) else None
    if version != CLI["schema_version"]:
        raise InvalidInputError(f"{path}: unsupported schema_version {version}")
    return data


def write_json(path, payload: dict, seed: Optional[int] = None) -> dict:
    document = {"schema_version": CLI["schema_version"], **payload}
    if seed is not None:
        document["seed"] = seed
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        json.dump(document, f, indent=2, default=_json_default)
    logger.info(f"Wrote {path}")
    return document


def _json_default(value):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"{type(value).__name__} is not JSON serializable")


def load_instance(path) -> tuple:
    """(Instance, GeneratedInstance or None) from a plain or generated instance file."""
    data = read_json(path)
    if "instance" in data:
        generated = GeneratedInstance.from_dict(data)
        return generated.instance, generated
    return Instance.from_dict(data), None


def load_schedule(path) -> Schedule:
    data = read_json(path)
    return Schedule.from_dict(data.get("schedule", data))


def load_intervals(path) -> IntervalTable:
    return IntervalTable.from_dict(read_json(path))


def load_samples(path, n: int) -> np.ndarray:
    """N x n service samples from a CSV (no header) or a JSON {"samples": [...]} file."""
    path = Path(path)
    if path.suffix.lower() == ".json":
        samples = np.asarray(read_json(path).get("samples", []), dtype=float)
    else:
        try:
            samples = pd.read_csv(path, header=None).to_numpy(dtype=float)
        except (OSError, ValueError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
            raise InvalidInputError(f"cannot read samples from {path}: {e}") from e
    if samples.ndim != 2 or samples.shape[1] != n:
        raise InvalidInputError(f"samples in {path} must be an N x {n} matrix, got shape {samples.shape}")
    return samples


def write_csv(path, rows: list, columns: Optional[list] = None) -> pd.DataFrame:
    frame = pd.DataFrame(rows, columns=columns)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=f"%.{CLI['float_digits']}f")
    logger.info(f"Wrote {len(frame)} rows to {path}")
    return frame
