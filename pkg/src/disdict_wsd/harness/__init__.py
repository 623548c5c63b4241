from .datasets import (
    EvalInstance,
    ManualData,
    load_eval_dataset,
    load_semcor_style,
    read_gold,
    write_keys,
)
from .pipeline import DEFAULTS, STAGES, load_config, main, run_pipeline
from .scoring import (
    BUCKETS,
    ScoreReport,
    bucket_of,
    bucket_report,
    format_table,
    full_report,
    keys_for,
    mfs_predict,
    score,
    write_report_tsv,
)
