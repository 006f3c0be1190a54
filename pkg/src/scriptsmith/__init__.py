"""Execution-free Bash script generation, assessment, refinement, and review.

The pipeline answers a natural-language remediation action with a Bash
script: it first searches a curated catalogue of reviewed scripts, generates
a fresh one when nothing matches with high confidence, judges it without
running it, refines flagged scripts from model feedback, and routes every
generated script through a human review loop that grows the catalogue.
"""

__version__ = "0.1.0"

from .assessment import (  # noqa: F401
    AnalysisKind,
    AnalysisOutcome,
    AnalysisVerdict,
    AssessmentVerdict,
    assess,
    difference_analysis,
    ensemble_synthesis,
    similarity_analysis,
    summarize_functionality,
)
from .catalogue import (  # noqa: F401
    ActionKey,
    Catalogue,
    CatalogueEntry,
    Entity,
    MatchScore,
    Provenance,
    RetrievalResult,
    embed,
    extract_entities,
    match_score,
)
from .config import (  # noqa: F401
    AppConfig,
    BackendSpec,
    CatalogueConfig,
    ModelRole,
    PipelineConfig,
    Preset,
    Role,
    RoleSet,
    ScoreMode,
    ServiceConfig,
    load_config,
)
from .evaluation import (  # noqa: F401
    Criteria,
    EvalRecord,
    EvalReport,
    Labels,
    TaskItem,
    TaskSet,
    compute_metrics,
    load_dataset,
    run_eval,
)
from .gateway import (  # noqa: F401
    CompletionText,
    CountingGateway,
    FixtureEntry,
    LlmGateway,
    PromptRequest,
    ScriptedBackend,
    TemplateRegistry,
    render_prompt,
)
from .generation import (  # noqa: F401
    BashScript,
    ExtractionRule,
    GeneratedScript,
    extract_script,
    generate_script,
)
from .pipeline import (  # noqa: F401
    Decision,
    OutcomeStore,
    PipelineOutcome,
    ReviewDecision,
    RoundRecord,
    Source,
    Status,
    record_decision,
    run_action,
    run_batch,
)
from .refinement import (  # noqa: F401
    Feedback,
    FeedbackSource,
    RefinementOutcome,
    explain_failure,
    refine,
    refine_loop,
)
from .syntax import (  # noqa: F401
    FindingKind,
    SyntaxFinding,
    SyntaxReport,
    check_syntax,
)
