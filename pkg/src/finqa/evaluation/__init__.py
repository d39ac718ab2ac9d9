from .bench import (
    BenchReport,
    PipelineVariant,
    ablation_grid,
    load_dataset,
    run_benchmark,
    write_report,
)
from .metrics import (
    HumanJudgment,
    LlmJudge,
    MetricBundle,
    MockJudge,
    QARecord,
    cosine_score,
    extract_claims,
    factual_correctness,
    faithfulness,
    human_eval_rollup,
    metric_bundle,
    numeric_matches,
    rouge_score,
)

__all__ = [
    "BenchReport",
    "PipelineVariant",
    "ablation_grid",
    "load_dataset",
    "run_benchmark",
    "write_report",
    "HumanJudgment",
    "LlmJudge",
    "MetricBundle",
    "MockJudge",
    "QARecord",
    "cosine_score",
    "extract_claims",
    "factual_correctness",
    "faithfulness",
    "human_eval_rollup",
    "metric_bundle",
    "numeric_matches",
    "rouge_score",
]
