"""rlsel: data-efficient subset selection for RL-based recommendation training.

Scores every training sample on learnability (reward-based Gaussian),
representativeness (alignment of second-order sample directions with the
dataset-averaged optimization direction), and marginal diversity; greedily
builds a subset maximizing the unified value function; and emits a
curriculum-scheduled training manifest. A built-in GRPO simulator validates
the full pipeline at desk scale.
"""

__version__ = "0.1.0"

from .curriculum import (
    CurriculumSchedule,
    build_schedule,
    partition,
    read_schedule,
    read_schedule_text,
    sort_within_groups,
    write_schedule,
    write_schedule_text,
)
from .dataset import (
    Dataset,
    SampleRecord,
    load_dataset,
    mean_reward,
    parse_sample_record,
    write_dataset,
)
from .errors import (
    ConfigurationError,
    DatasetError,
    ParameterError,
    RlselError,
    StageError,
)
from .hvp import (
    AnalyticModel,
    HvpReport,
    LogisticPoint,
    Quadratic,
    hvp_finite_difference,
    run_verification,
    sample_direction,
    verify_hvp,
)
from .scoring import (
    ScoreTable,
    ScoringParams,
    build_score_table,
    global_direction,
    grad_directions,
    learnability,
    min_max_normalize,
    representativeness,
)
from .selection import (
    SelectionStep,
    SubsetManifest,
    candidate_value,
    cosine_distance,
    diversity,
    greedy_select,
    random_select,
)
from .validation import load_schema, validate_artifact

__all__ = [
    "AnalyticModel",
    "ConfigurationError",
    "CurriculumSchedule",
    "Dataset",
    "DatasetError",
    "HvpReport",
    "LogisticPoint",
    "ParameterError",
    "Quadratic",
    "RlselError",
    "SampleRecord",
    "ScoreTable",
    "ScoringParams",
    "SelectionStep",
    "StageError",
    "SubsetManifest",
    "build_schedule",
    "build_score_table",
    "candidate_value",
    "cosine_distance",
    "diversity",
    "global_direction",
    "grad_directions",
    "greedy_select",
    "hvp_finite_difference",
    "learnability",
    "load_dataset",
    "load_schema",
    "mean_reward",
    "min_max_normalize",
    "parse_sample_record",
    "partition",
    "random_select",
    "read_schedule",
    "read_schedule_text",
    "representativeness",
    "run_verification",
    "sample_direction",
    "sort_within_groups",
    "validate_artifact",
    "verify_hvp",
    "write_dataset",
    "write_schedule",
    "write_schedule_text",
]
