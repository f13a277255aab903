"""Report generation for evaluation results."""

from .report_builder import ReportBuilder, render_report

__all__ = ["ReportBuilder", "render_report"]
