"""Dataset directories: ``header.json``, ``clean.csv``, ``noisy.csv``, ``mixtures.csv`` and ``split.json``."""

from pathlib import Path

import numpy as np
from pydantic import ValidationError as PydanticValidationError

from ..errors import MissingArtifactError, ParseError, ValidationError
from ..utils import FORMAT_VERSION, read_json, read_matrix_csv, write_json, write_matrix_csv
from .dataset import SPLIT_NAMES, Dataset, DatasetSpec, StandardizationStats
from .mixtures import MixtureSpec

HEADER_FILE = "header.json"
CLEAN_FILE = "clean.csv"
NOISY_FILE = "noisy.csv"
MIXTURES_FILE = "mixtures.csv"
SPLIT_FILE = "split.json"


def save_dataset(d: Dataset, directory: Path) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    write_json(
        directory / HEADER_FILE,
        {
            "format_version": FORMAT_VERSION,
            "spec": d.spec.model_dump(mode="json"),
            "seed": d.spec.seed,
            "stats": d.stats.to_dict(),
            "stats_source": d.stats_source,
            "row_ids": d.row_ids.tolist(),
        },
    )
    write_matrix_csv(directory / CLEAN_FILE, d.clean)
    write_matrix_csv(directory / NOISY_FILE, d.noisy)
    with open(directory / MIXTURES_FILE, "w", encoding="utf-8") as f:
        f.write("row,components\n")
        for row_id, mixture in zip(d.row_ids, d.mixtures, strict=True):
            f.write(f"{int(row_id)},{mixture.format()}\n")
    return directory


def _read_mixtures(path: Path) -> list[MixtureSpec]:
    mixtures = []
    with open(path, encoding="utf-8") as f:
        header = f.readline().strip()
        if header != "row,components":
            raise ParseError(f"{path}: expected header row,components")
        for lineno, line in enumerate(f, start=2):
            line = line.strip()
            if not line:
                continue
            try:
                _, components = line.split(",", 1)
                mixtures.append(MixtureSpec.parse(components))
            except ValueError as e:
                raise ParseError(f"{path}:{lineno}: malformed mixture {line!r}") from e
    return mixtures


def load_dataset(directory: Path) -> Dataset:
    directory = Path(directory)
    header_path = directory / HEADER_FILE
    if not header_path.exists():
        raise MissingArtifactError(f"no dataset at {directory} ({HEADER_FILE} missing)")
    header = read_json(header_path)
    if header.get("format_version") != FORMAT_VERSION:
        raise ParseError(f"{header_path}: unsupported format version {header.get('format_version')!r}")

    try:
        spec = DatasetSpec.model_validate(header["spec"])
    except (KeyError, PydanticValidationError) as e:
        raise ParseError(f"{header_path}: invalid dataset spec: {e}") from e
    n_bins = spec.grid.n_bins
    clean = read_matrix_csv(directory / CLEAN_FILE, n_bins)
    noisy = read_matrix_csv(directory / NOISY_FILE, n_bins)
    mixtures = _read_mixtures(directory / MIXTURES_FILE)
    if not len(mixtures) == clean.shape[0] == noisy.shape[0]:
        raise ValidationError(f"{directory}: clean, noisy and mixtures row counts differ")
    return Dataset(
        spec=spec,
        clean=clean,
        noisy=noisy,
        mixtures=tuple(mixtures),
        stats=StandardizationStats.from_dict(header["stats"]),
        row_ids=np.array(header.get("row_ids", []), dtype=int),
        stats_source=header.get("stats_source"),
    )


def save_split(directory: Path, parts: dict[str, np.ndarray], fractions: tuple[float, ...], seed: int) -> Path:
    payload = {
        "fractions": list(fractions),
        "seed": seed,
        **{name: [int(i) for i in parts[name]] for name in SPLIT_NAMES},
    }
    return write_json(Path(directory) / SPLIT_FILE, payload)


def load_split(directory: Path, name: str) -> Dataset:
    """One split of a saved dataset, using the indices recorded in ``split.json``.

    ``"all"`` returns every row.
    """
    if name not in (*SPLIT_NAMES, "all"):
        raise ValidationError(f"unknown split {name!r}; expected one of {', '.join(SPLIT_NAMES)} or all")
    directory = Path(directory)
    if name == "all":
        return load_dataset(directory)
    split_path = directory / SPLIT_FILE
    if not split_path.exists():
        raise MissingArtifactError(f"no {SPLIT_FILE} in {directory}")
    indices = np.array(read_json(split_path)[name], dtype=int)
    return load_dataset(directory).subset(indices)
