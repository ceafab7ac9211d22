"""Teacher-forced sequence scoring for rendered prompts.

Consumes the prompt JSONL emitted by the rendering pipeline and writes
versioned logit-record JSONL that the analysis toolkit ingests. No
generation or sampling is involved: a prompt's score is the sum (or
length-normalized mean) of its tokens' next-token log-probabilities.
"""
from .scoring import ScoringJob, score_prompts

__version__ = "0.1.0"
__all__ = ["ScoringJob", "score_prompts", "__version__"]
