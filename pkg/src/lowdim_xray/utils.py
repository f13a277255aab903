"""Utility functions for lowdim-xray."""

import hashlib
import json
from pathlib import Path
from typing import Any

import numpy as np

FORMAT_VERSION = 1


def derive_seed(seed: int, *keys: str | int) -> int:
    """Deterministic 63-bit seed from a base seed and any number of keys."""
    hash_input = ":".join(str(part) for part in (seed, *keys))
    return int(hashlib.sha256(hash_input.encode()).hexdigest()[:16], 16) >> 1


def row_rng(seed: int, row: int) -> np.random.Generator:
    """Independent generator for one dataset row, so rows can be produced in any order."""
    return np.random.default_rng([seed, row])


def calculate_file_hash(file_path: Path) -> str:
    """Calculate SHA256 hash of a file."""
    hash_sha256 = hashlib.sha256()
    with open(file_path, "rb") as f:
        for chunk in iter(lambda: f.read(4096), b""):
            hash_sha256.update(chunk)
    return hash_sha256.hexdigest()[:16]  # Use first 16 chars


def write_json(path: Path, payload: Any) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f, indent=2)
        f.write("\n")
    return path


def read_json(path: Path) -> Any:
    with open(path, encoding="utf-8") as f:
        return json.load(f)


def write_matrix_csv(path: Path, matrix: np.ndarray) -> Path:
    """Rows of full-precision decimals (``repr`` round-trips every float64 exactly)."""
    path = Path(path)
    with open(path, "w", encoding="utf-8") as f:
        for row in np.atleast_2d(matrix):
            f.write(",".join(repr(float(v)) for v in row))
            f.write("\n")
    return path


def read_matrix_csv(path: Path, n_cols: int) -> np.ndarray:
    rows = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if line:
                rows.append([float(v) for v in line.split(",")])
    if not rows:
        return np.empty((0, n_cols))
    return np.array(rows, dtype=float)
