from .backend import BACKEND
from .core import (Block, ClassMatching, ClassScore, EvalScores, Matching,
                   MetricConfig, block_distance, eval_report_rows,
                   match_blocks, match_sequences, mean_scores,
                   render_markdown, score, to_blocks, write_eval_report)

__all__ = [
    "BACKEND", "Block", "ClassMatching", "ClassScore", "EvalScores",
    "Matching", "MetricConfig", "block_distance", "eval_report_rows",
    "match_blocks", "match_sequences", "mean_scores", "render_markdown",
    "score", "to_blocks", "write_eval_report",
]
