from .budget import budget_rows, budget_rows_from_checkpoint, format_budget
from .metrics import (LOGLOSS_CLAMP, EvalReport, MissingHeadError,
                      evaluate_checkpoint, predict_audio_clip,
                      predict_visual_features)
from .report import (REPORT_SCHEMA_VERSION, load_csv, load_json, render_csv,
                     render_json, render_text, report_render)

__all__ = [
    "EvalReport", "evaluate_checkpoint", "MissingHeadError", "LOGLOSS_CLAMP",
    "predict_audio_clip", "predict_visual_features",
    "report_render", "render_json", "render_csv", "render_text",
    "load_json", "load_csv", "REPORT_SCHEMA_VERSION",
    "budget_rows", "budget_rows_from_checkpoint", "format_budget",
]
