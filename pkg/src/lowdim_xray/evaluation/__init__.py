from .evaluator import EvalReport, InputMode, evaluate_model
from .metrics import BoxStats, boxplot_stats, nmse, nmse_rows

__all__ = ["BoxStats", "EvalReport", "InputMode", "boxplot_stats", "evaluate_model", "nmse", "nmse_rows"]
