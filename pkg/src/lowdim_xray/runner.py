"""Main runner for lowdim-xray experiments."""

import logging
from collections.abc import Callable
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .errors import MissingArtifactError
from .evaluation.evaluator import EvalReport, evaluate_model
from .experiment import ExperimentConfig, ModelKind, ModelSpec
from .models.base import SpectralModel
from .models.hybrid import HybridModel, fit_hybrid, hybrid_encode
from .models.io import load_model, save_model
from .models.linear import SvdModel, fit_svd
from .models.sparse import SparseModel, build_basis, tune_lambda, write_codes_csv
from .neural.network import Network, NetworkArch, init_network
from .neural.training import TrainConfig, TrainHistory, train_denoising
from .physics.ingest import ingest_elements
from .physics.tables import ElementLibrary, load_element_library
from .reporting.report_builder import REPORT_JSON, ReportBuilder
from .synth.dataset import Dataset, StandardizationStats, build_dataset, split_indices
from .synth.io import HEADER_FILE, load_split, save_dataset, save_split
from .utils import calculate_file_hash, write_json, write_matrix_csv

logger = logging.getLogger(__name__)

MANIFEST_FILE = "manifest.json"


@dataclass
class TrainResult:
    """A fitted model and, for trained networks, its loss history."""

    name: str
    model: SpectralModel
    path: Path
    history: TrainHistory | None = None
    notes: dict[str, float] = field(default_factory=dict)


class ExperimentRunner:
    """Runs the synthesize / train / evaluate / report steps of one experiment."""

    def __init__(self, config: ExperimentConfig, out_dir: Path, data_dir: Path, seed: int):
        self.config = config
        self.out_dir = Path(out_dir)
        self.data_dir = Path(data_dir)
        self.seed = seed
        self._library: ElementLibrary | None = None

        # Registry of model trainers
        self.trainer_registry: dict[ModelKind, Callable[[ModelSpec], TrainResult]] = {
            ModelKind.SVD: self._train_svd,
            ModelKind.FISTA: self._train_fista,
            ModelKind.NEURAL: self._train_neural,
            ModelKind.HYBRID: self._train_hybrid,
        }

    @property
    def library(self) -> ElementLibrary:
        if self._library is None:
            if not any(self.data_dir.glob("*.csv")):
                logger.info("No element tables in %s, writing them from xraydb", self.data_dir)
                ingest_elements(self.data_dir)
            self._library = load_element_library(self.data_dir)
        return self._library

    def dataset_dir(self, name: str) -> Path:
        return self.out_dir / "datasets" / name

    def model_dir(self, name: str) -> Path:
        return self.out_dir / "models" / name

    @property
    def report_dir(self) -> Path:
        return self.out_dir / "reports"

    # -- synthesize -------------------------------------------------------

    def synthesize(self) -> list[Path]:
        """Build, save and split every dataset of the experiment, in declaration order."""
        built: dict[str, Dataset] = {}
        written = []
        fractions = self.config.split.as_tuple()
        for entry in self.config.datasets:
            spec = self.config.dataset_spec(entry.name, self.seed)
            stats_source: StandardizationStats | None = None
            if entry.stats_from is not None:
                stats_source = built[entry.stats_from].stats
            dataset = build_dataset(spec, self.library, stats_source, entry.stats_from)
            built[entry.name] = dataset

            directory = save_dataset(dataset, self.dataset_dir(entry.name))
            split_seed = self.config.split_seed(entry.name, self.seed)
            save_split(directory, split_indices(dataset.n_rows, fractions, split_seed), fractions, split_seed)
            written.append(directory)
        return written

    # -- train ------------------------------------------------------------

    def _require_dataset(self, name: str) -> Path:
        directory = self.dataset_dir(name)
        if not (directory / HEADER_FILE).exists():
            raise MissingArtifactError(f"dataset {name} not found under {directory}; run 'lowdim synthesize' first")
        return directory

    def _training_split(self, spec: ModelSpec, name: str, split: str = "train") -> Dataset:
        data = load_split(self._require_dataset(name), split)
        if split == "train" and spec.max_train_rows is not None and data.n_rows > spec.max_train_rows:
            data = data.subset(np.arange(spec.max_train_rows))
        return data

    def _arch(self, spec: ModelSpec, input_len: int) -> NetworkArch:
        assert spec.arch is not None
        return NetworkArch(kind=spec.arch, input_len=input_len, latent_dim=spec.latent_dim, widths=spec.widths)

    def _train_svd(self, spec: ModelSpec) -> TrainResult:
        train = self._training_split(spec, spec.dataset)
        # fitted on the clean spectra
        model = fit_svd(train.clean, spec.rank)
        return TrainResult(spec.name, model, save_model(model, self.model_dir(spec.name)))

    def _train_fista(self, spec: ModelSpec) -> TrainResult:
        train = self._training_split(spec, spec.dataset)
        basis = build_basis(self.library, train.spec.grid, train.stats, spec.lam, spec.k_select, spec.max_iters, spec.tol)
        if spec.lambda_grid:
            rows = np.arange(min(spec.tune_rows, train.n_rows))
            lam = tune_lambda(basis, train.noisy[rows], spec.lambda_grid, targets=train.clean[rows])
            basis = basis.with_lambda(lam)
            logger.info("Model %s: tuned lambda %g over %d spectra", spec.name, lam, rows.size)
        model = SparseModel(basis=basis, stats=train.stats, lambda_grid=tuple(spec.lambda_grid))
        return TrainResult(spec.name, model, save_model(model, self.model_dir(spec.name)), notes={"lambda": basis.lam})

    def _train_config(self, spec: ModelSpec) -> TrainConfig:
        return spec.train.model_copy(update={"seed": self.config.model_seed(spec.name, self.seed)})

    def _train_neural(self, spec: ModelSpec) -> TrainResult:
        train = self._training_split(spec, spec.dataset)
        val = self._training_split(spec, spec.dataset, "val")
        train_config = self._train_config(spec)
        network = init_network(self._arch(spec, train.spec.grid.n_bins), train_config.seed)
        network, history = train_denoising(network, (train.noisy, train.clean), (val.noisy, val.clean), train_config)
        directory = self.model_dir(spec.name)
        path = save_model(network, directory)
        write_json(directory / "history.json", history.to_dict())
        return TrainResult(spec.name, network, path, history)

    def _train_hybrid(self, spec: ModelSpec) -> TrainResult:
        assert spec.no_kedge_dataset is not None
        train = self._training_split(spec, spec.dataset)
        val = self._training_split(spec, spec.dataset, "val")
        no_kedge = self._training_split(spec, spec.no_kedge_dataset)
        train_config = self._train_config(spec)
        arch = self._arch(spec, train.spec.grid.n_bins)
        model, history = fit_hybrid(no_kedge, train, arch, train_config, val)
        directory = self.model_dir(spec.name)
        path = save_model(model, directory)
        write_json(directory / "history.json", history.to_dict())
        return TrainResult(spec.name, model, path, history)

    def train(self, model_names: list[str] | None = None) -> list[TrainResult]:
        """Fit the named models (all by default) and write them under ``models/<name>/``."""
        names = model_names or [m.name for m in self.config.models]
        results = []
        for name in names:
            spec = self.config.model(name)
            logger.info("Training %s (%s) on %s", name, spec.kind.value, spec.dataset)
            results.append(self.trainer_registry[spec.kind](spec))
        return results

    # -- evaluate ---------------------------------------------------------

    def _load_trained(self, name: str) -> SpectralModel:
        directory = self.model_dir(name)
        if not directory.exists():
            raise MissingArtifactError(f"model {name} not found under {directory}; run 'lowdim train' first")
        return load_model(directory)

    def export_codes(self, model: SpectralModel, dataset: Dataset, inputs: np.ndarray, path: Path) -> Path:
        """Per-spectrum low-dimensional codes of ``inputs`` as CSV, keyed by dataset row."""
        if isinstance(model, SparseModel):
            return write_codes_csv(path, model.encode(inputs), dataset.row_ids)
        if isinstance(model, HybridModel):
            codes = hybrid_encode(model, inputs)
        elif isinstance(model, SvdModel | Network):
            codes = model.encode(inputs)
        else:
            raise TypeError(f"cannot export codes for {type(model).__name__}")
        return write_matrix_csv(path, np.column_stack([dataset.row_ids, codes]))

    def evaluate(self, export_codes: bool = False) -> list[EvalReport]:
        """Run every configured evaluation and render the report bundle."""
        if not self.config.evaluations:
            raise MissingArtifactError("the experiment defines no evaluations")
        models: dict[str, SpectralModel] = {}
        reports = []
        for evaluation in self.config.evaluations:
            if evaluation.model not in models:
                models[evaluation.model] = self._load_trained(evaluation.model)
            model = models[evaluation.model]
            dataset = load_split(self._require_dataset(evaluation.dataset), evaluation.split)
            reports.append(evaluate_model(model, dataset, evaluation.input_mode, model_name=evaluation.model))
            if export_codes:
                inputs = dataset.noisy if evaluation.input_mode.value == "noisy" else dataset.clean
                path = self.report_dir / "codes" / f"{evaluation.model}__{evaluation.dataset}.csv"
                path.parent.mkdir(parents=True, exist_ok=True)
                self.export_codes(model, dataset, inputs, path)

        ReportBuilder().render_report(reports, self.report_dir, title=self.config.name)
        return reports

    def report(self) -> list[Path]:
        """Re-render the report bundle from an existing ``report.json``."""
        builder = ReportBuilder()
        reports = builder.load_reports(self.report_dir / REPORT_JSON)
        return builder.render_report(reports, self.report_dir, title=self.config.name)

    def write_manifest(self) -> Path:
        return write_manifest(self.out_dir)


def write_manifest(out_dir: Path) -> Path:
    """``manifest.json``: package versions and the hash of every artifact under ``out_dir``."""
    out_dir = Path(out_dir)
    manifest_path = out_dir / MANIFEST_FILE
    artifacts = {
        path.relative_to(out_dir).as_posix(): calculate_file_hash(path)
        for path in sorted(out_dir.rglob("*"))
        if path.is_file() and path != manifest_path
    }
    return write_json(
        manifest_path,
        {"versions": {"lowdim-xray": __version__, "numpy": np.__version__}, "artifacts": artifacts},
    )
