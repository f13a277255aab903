"""Reading and writing fitted models as JSON, dispatching on ``kind``."""

from collections.abc import Callable
from pathlib import Path
from typing import Any

from ..errors import MissingArtifactError, ParseError
from ..neural.network import Network
from ..utils import FORMAT_VERSION, read_json, write_json
from .base import SpectralModel
from .hybrid import HybridModel
from .linear import SvdModel
from .sparse import SparseModel

MODEL_FILES = {
    SvdModel.kind: "svd_model.json",
    SparseModel.kind: "sparse_model.json",
    Network.kind: "network.json",
    HybridModel.kind: "hybrid_model.json",
}

_LOADERS: dict[str, Callable[[dict[str, Any]], SpectralModel]] = {
    SvdModel.kind: SvdModel.from_dict,
    SparseModel.kind: SparseModel.from_dict,
    Network.kind: Network.from_dict,
    HybridModel.kind: HybridModel.from_dict,
}


def model_filename(model: SpectralModel) -> str:
    return MODEL_FILES[model.kind]


def save_model(model: SpectralModel, directory: Path) -> Path:
    """Write the model into ``directory`` under its kind's file name."""
    return write_json(Path(directory) / model_filename(model), model.to_dict())


def model_from_dict(data: dict[str, Any]) -> SpectralModel:
    kind = data.get("kind")
    if kind not in _LOADERS:
        raise ParseError(f"unknown model kind {kind!r}")
    if data.get("format_version") != FORMAT_VERSION:
        raise ParseError(f"unsupported model format version {data.get('format_version')!r}")
    return _LOADERS[kind](data)


def load_model(path: Path) -> SpectralModel:
    """Load a model file, or the single model file inside a model directory."""
    path = Path(path)
    if path.is_dir():
        candidates = [path / name for name in MODEL_FILES.values() if (path / name).exists()]
        if len(candidates) != 1:
            raise MissingArtifactError(f"expected exactly one model file in {path}, found {len(candidates)}")
        path = candidates[0]
    if not path.exists():
        raise MissingArtifactError(f"model file not found: {path}")
    return model_from_dict(read_json(path))
