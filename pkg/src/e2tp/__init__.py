"""Two-step element-to-tuple prompting toolkit for sentiment tuple extraction.

The pipeline first queries one element list per role of the task, then anchors
each predicted element ahead of a permuted task prompt to complete its tuples,
and finally aggregates the generated candidates by threshold voting.
"""

from .aggregate import (
    InferenceResult,
    VoteConfig,
    VoteGroup,
    default_vote_config,
    run_inference,
    vote,
)
from .backends import (
    Backend,
    GenerationRequest,
    OracleBackend,
    RecordingBackend,
    RemoteBackend,
    ReplayBackend,
    oracle_answer,
)
from .core import (
    AnnotatedSentence,
    Element,
    ElementKind,
    SentimentTuple,
    Task,
    canonical_tuple_key,
    element_set,
    normalize_text,
)
from .evaluate import EvalReport, element_f1, gold_ablation, propagated_error_rate, tuple_f1
from .ingest import DatasetFile, convert_legacy, load_canonical, write_canonical
from .output_parser import ParsedCandidate, enforce_semantics, parse_step2_output
from .step1 import Step1Record, build_step1, constrain_elements, parse_step1_output
from .step2 import (
    Paradigm,
    Step2Record,
    TaskPrompt,
    Template,
    build_step2,
    enumerate_prompts,
    render_input,
    render_target,
)

__version__ = "0.1.0"

__all__ = [
    "AnnotatedSentence",
    "Backend",
    "DatasetFile",
    "Element",
    "ElementKind",
    "EvalReport",
    "GenerationRequest",
    "InferenceResult",
    "OracleBackend",
    "Paradigm",
    "ParsedCandidate",
    "RecordingBackend",
    "RemoteBackend",
    "ReplayBackend",
    "SentimentTuple",
    "Step1Record",
    "Step2Record",
    "Task",
    "TaskPrompt",
    "Template",
    "VoteConfig",
    "VoteGroup",
    "build_step1",
    "build_step2",
    "canonical_tuple_key",
    "constrain_elements",
    "convert_legacy",
    "default_vote_config",
    "element_f1",
    "element_set",
    "enforce_semantics",
    "enumerate_prompts",
    "gold_ablation",
    "load_canonical",
    "normalize_text",
    "oracle_answer",
    "parse_step1_output",
    "parse_step2_output",
    "propagated_error_rate",
    "render_input",
    "render_target",
    "run_inference",
    "tuple_f1",
    "vote",
    "write_canonical",
]
