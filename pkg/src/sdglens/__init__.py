"""sdglens: SDG tagging, climate sentiment and interlinkage mining for policy corpora."""

from .analytics import (
    EvalReport,
    InterlinkageGraph,
    SentimentDistribution,
    build_interlinkage_graph,
    category_shares,
    country_zscores,
    expected_sentiment,
    match_rate,
)
from .cleaning import CleaningReport, Paragraph, clean_pipeline
from .ingest import DocumentRecord, TextBlock, fetch_manifest, load_blocks
from .orchestrator import (
    AgreementReport,
    CompletionClient,
    interlink_extract,
    run_robustness_protocol,
    two_step_classify,
)
from .parsing import (
    InterlinkageRecord,
    SdgAssignment,
    parse_interlinkage,
    parse_sdg_assignment,
    parse_sentiment_label,
)
from .prompts import PromptTemplate, get_template, render_prompt
from .similarity import SimilarityAssignment, assign_sdg, load_descriptions

__version__ = "0.1.0"

__all__ = [
    "AgreementReport",
    "CleaningReport",
    "CompletionClient",
    "DocumentRecord",
    "EvalReport",
    "InterlinkageGraph",
    "InterlinkageRecord",
    "Paragraph",
    "PromptTemplate",
    "SdgAssignment",
    "SentimentDistribution",
    "SimilarityAssignment",
    "TextBlock",
    "assign_sdg",
    "build_interlinkage_graph",
    "category_shares",
    "clean_pipeline",
    "country_zscores",
    "expected_sentiment",
    "fetch_manifest",
    "get_template",
    "interlink_extract",
    "load_blocks",
    "load_descriptions",
    "match_rate",
    "parse_interlinkage",
    "parse_sdg_assignment",
    "parse_sentiment_label",
    "render_prompt",
    "run_robustness_protocol",
    "two_step_classify",
]
