"""Report bundles for evaluation results: JSON, CSV, an SVG box plot and a Markdown summary."""

import csv
import math
from collections.abc import Sequence
from pathlib import Path
from typing import Any

from jinja2 import Environment, FileSystemLoader

from ..errors import MissingArtifactError, ParseError, ValidationError
from ..evaluation.evaluator import EvalReport
from ..utils import FORMAT_VERSION, read_json, write_json

REPORT_JSON = "report.json"
NMSE_CSV = "nmse.csv"
BOXPLOT_SVG = "boxplot.svg"
REPORT_MD = "report.md"

# SVG layout, in pixels
_LEFT, _TOP, _PLOT_HEIGHT, _SLOT, _BOX_WIDTH = 70.0, 30.0, 300.0, 110.0, 40.0


def _fmt(v: float) -> str:
    return f"{v:.2f}"


class ReportBuilder:
    """Builder for report bundles from evaluation reports."""

    def __init__(self, template_dir: Path | None = None):
        if template_dir is None:
            template_dir = Path(__file__).parent / "templates"

        self.template_dir = Path(template_dir)
        self.env = Environment(loader=FileSystemLoader(self.template_dir), autoescape=True)

    def render_report(self, reports: Sequence[EvalReport], out_dir: Path, title: str = "NMSE per model") -> list[Path]:
        """Write ``report.json``, ``nmse.csv``, ``boxplot.svg`` and ``report.md`` into ``out_dir``."""
        if not reports:
            raise ValidationError("no evaluation reports to render")
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        return [
            self.write_report_json(reports, out_dir / REPORT_JSON),
            self.write_nmse_csv(reports, out_dir / NMSE_CSV),
            self.generate_svg(reports, out_dir / BOXPLOT_SVG, title),
            self.generate_markdown_report(reports, out_dir / REPORT_MD, title),
        ]

    def write_report_json(self, reports: Sequence[EvalReport], output_path: Path) -> Path:
        return write_json(output_path, {"format_version": FORMAT_VERSION, "reports": [r.to_dict() for r in reports]})

    def write_nmse_csv(self, reports: Sequence[EvalReport], output_path: Path) -> Path:
        with open(output_path, "w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(("model", "dataset", "row", "nmse"))
            for report in reports:
                for row, value in zip(report.row_ids, report.nmse, strict=True):
                    writer.writerow((report.model_name, report.dataset_name, int(row), repr(float(value))))
        return output_path

    def _svg_context(self, reports: Sequence[EvalReport], title: str) -> dict[str, Any]:
        positive = [float(v) for r in reports for v in r.nmse if v > 0.0]
        lo = math.floor(math.log10(min(positive))) if positive else -12
        hi = math.ceil(math.log10(max(positive))) if positive else 0
        if hi <= lo:
            hi = lo + 1
        bottom = _TOP + _PLOT_HEIGHT

        def y(value: float) -> float:
            # zeros sit on the lowest decade
            exponent = math.log10(value) if value > 0.0 else lo
            return _TOP + _PLOT_HEIGHT * (hi - max(exponent, lo)) / (hi - lo)

        boxes = []
        for i, report in enumerate(reports):
            s = report.summary
            boxes.append(
                {
                    "model": report.model_name,
                    "dataset": report.dataset_name,
                    "x": _LEFT + _SLOT * (i + 0.5),
                    "q1": _fmt(y(s.q1)),
                    "q3": _fmt(y(s.q3)),
                    "box_height": _fmt(y(s.q1) - y(s.q3)),
                    "median": _fmt(y(s.median)),
                    "mean": _fmt(y(s.mean)),
                    "whisker_low": _fmt(y(s.whisker_low)),
                    "whisker_high": _fmt(y(s.whisker_high)),
                    "outliers": [_fmt(y(v)) for v in s.outliers],
                }
            )
        right = _LEFT + _SLOT * len(reports)
        return {
            "title": title,
            "width": right + 20.0,
            "height": bottom + 45.0,
            "left": _LEFT,
            "right": right,
            "top": _TOP,
            "bottom": bottom,
            "box_width": _BOX_WIDTH,
            "ticks": [{"y": _fmt(y(10.0**e)), "label": f"1e{e}"} for e in range(lo, hi + 1)],
            "boxes": boxes,
        }

    def generate_svg(self, reports: Sequence[EvalReport], output_path: Path, title: str = "NMSE per model") -> Path:
        """One box-and-whisker glyph per report on a shared logarithmic NMSE axis."""
        template = self.env.get_template("boxplot.svg.j2")
        svg = template.render(**self._svg_context(reports, title))

        output_path.parent.mkdir(parents=True, exist_ok=True)
        with open(output_path, "w", encoding="utf-8") as f:
            f.write(svg)

        return output_path

    def generate_markdown_report(
        self, reports: Sequence[EvalReport], output_path: Path, title: str = "NMSE per model"
    ) -> Path:
        """Generate Markdown report from evaluation reports."""
        md_content = self._format_markdown(reports, title)

        output_path.parent.mkdir(parents=True, exist_ok=True)
        with open(output_path, "w", encoding="utf-8") as f:
            f.write(md_content)

        return output_path

    def _format_markdown(self, reports: Sequence[EvalReport], title: str) -> str:
        lines = [
            f"# {title}",
            "",
            f"![NMSE box plot]({BOXPLOT_SVG})",
            "",
            "| Model | Dataset | Input | Spectra | Mean | Median | Q1 | Q3 | Outliers |",
            "|-------|---------|-------|---------|------|--------|----|----|----------|",
        ]
        for r in reports:
            s = r.summary
            lines.append(
                f"| {r.model_name} | {r.dataset_name} | {r.input_mode.value} | {r.nmse.size} "
                f"| {s.mean:.4g} | {s.median:.4g} | {s.q1:.4g} | {s.q3:.4g} | {len(s.outliers)} |"
            )
        lines.append("")

        # Best model per dataset, compared on the mean
        by_dataset: dict[str, list[EvalReport]] = {}
        for r in reports:
            by_dataset.setdefault(r.dataset_name, []).append(r)
        if any(len(group) > 1 for group in by_dataset.values()):
            lines.extend(["## Lowest mean NMSE", ""])
            for dataset, group in by_dataset.items():
                best = min(group, key=lambda r: r.summary.mean)
                lines.append(f"- **{dataset}**: {best.model_name} ({best.summary.mean:.4g})")
            lines.append("")

        return "\n".join(lines)

    def load_reports(self, json_path: Path) -> list[EvalReport]:
        """Load evaluation reports from a ``report.json``."""
        json_path = Path(json_path)
        if not json_path.exists():
            raise MissingArtifactError(f"report not found: {json_path}")
        try:
            data = read_json(json_path)
            return [EvalReport.from_dict(entry) for entry in data["reports"]]
        except (KeyError, TypeError, ValueError) as e:
            raise ParseError(f"{json_path}: malformed report: {e}") from e


def render_report(reports: Sequence[EvalReport], out_dir: Path) -> list[Path]:
    return ReportBuilder().render_report(reports, out_dir)
