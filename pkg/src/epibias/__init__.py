"""Disease-demographic co-occurrence mining and rank-concordance auditing.

The pipeline has three ranking sources that all land in the same
RankTable shape: corpus co-occurrence counts, model mean logits, and
real-world prevalence rates. The stats module compares any two of them
with tau-a concordance, drift deltas, position tallies, quartile means,
and template-robustness metrics.
"""
from __future__ import annotations

from importlib import resources

__version__ = "0.1.0"


def data_path(*parts: str):
    """Path to a bundled data fixture, e.g. data_path("dictionaries", "core.json")."""
    return resources.files("epibias").joinpath("data", *parts)


from .dictionary import (  # noqa: E402
    CATEGORY_DISEASE,
    CATEGORY_GENDER,
    CATEGORY_RACE,
    CompiledMatcher,
    Concept,
    DictionaryBundle,
    Occurrence,
    compile_matcher,
    load_dictionary,
    save_dictionary,
)
from .scanner import (  # noqa: E402
    CoOccurrenceMatrix,
    TokenStream,
    WindowConfig,
    count_corpus,
    merge,
    normalize_text,
    rank_from_counts,
    scan_document,
)
from .corpus import CorpusReader, RawDocument  # noqa: E402
from .templates import RenderedPrompt, TemplateSet, load_templates, render, render_matrix  # noqa: E402
from .logits import (  # noqa: E402
    LogitRecord,
    LogitTable,
    MeanLogit,
    load_logits,
    mean_logits,
    rank_from_logits,
    write_logits,
)
from .prevalence import (  # noqa: E402
    PrevalenceTable,
    load_prevalence,
    normalize_rate,
    rank_from_prevalence,
    save_prevalence,
)
from .ranking import RankTable, assign_ranks, build_rank_table  # noqa: E402
from .stats import (  # noqa: E402
    DriftReport,
    PositionTally,
    QuartileBin,
    TauResult,
    compare_tables,
    drift,
    kendall_tau,
    mean_tau,
    position_tally,
    quartile_tau,
    template_pairwise_tau,
    template_top_agreement,
)
