"""Batched teacher-forced log-likelihood scoring."""
from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass
from pathlib import Path

SCORING_MODES = ("sum_logprob", "mean_logprob")
SCHEMA_VERSION = 1
PROMPT_FIELDS = ("disease", "subgroup", "category", "template", "language", "text")


class HarvestError(Exception):
    pass


class ModelLoadError(HarvestError):
    pass


class TokenizationError(HarvestError):
    def __init__(self, prompt_key, reason: str):
        super().__init__(f"prompt {prompt_key!r}: {reason}")
        self.prompt_key = prompt_key


@dataclass(frozen=True)
class ScoringJob:
    """One scoring run: a model, a prompts file, an output path.

    ``precision`` is auto (float32 on CPU, float16 on CUDA), float32, or
    float16. ``model_label`` overrides the model id recorded in the output,
    useful when ``model`` is a local directory. The seed is fixed for
    run-to-run parity even though scoring itself never samples.
    """

    model: str
    prompts_path: str
    output_path: str
    scoring_mode: str = "sum_logprob"
    batch_size: int = 8
    device: str = "auto"
    precision: str = "auto"
    model_label: str | None = None
    seed: int = 42

    def __post_init__(self):
        if self.scoring_mode not in SCORING_MODES:
            raise HarvestError(f"unknown scoring_mode {self.scoring_mode!r}")
        if self.batch_size < 1:
            raise HarvestError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.precision not in ("auto", "float32", "float16"):
            raise HarvestError(f"unknown precision {self.precision!r}")

    @property
    def label(self) -> str:
        return self.model_label or self.model


def read_prompts(path) -> list[dict]:
    prompts = []
    seen = set()
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise HarvestError(f"{path}:{lineno}: invalid JSON: {exc.msg}") from exc
            missing = [f for f in PROMPT_FIELDS if f not in record]
            if missing:
                raise HarvestError(f"{path}:{lineno}: prompt missing fields {missing}")
            key = (record["disease"], record["subgroup"], record["category"],
                   record["template"], record["language"])
            if key in seen:
                raise HarvestError(f"{path}:{lineno}: duplicate prompt key {key!r}")
            seen.add(key)
            prompts.append(record)
    if not prompts:
        raise HarvestError(f"{path}: no prompts")
    return prompts


def _load_model(job: ScoringJob):
    import torch
    from transformers import AutoModelForCausalLM, AutoTokenizer

    device = job.device
    if device == "auto":
        device = "cuda" if torch.cuda.is_available() else "cpu"
    precision = job.precision
    if precision == "auto":
        precision = "float16" if device == "cuda" else "float32"
    dtype = torch.float16 if precision == "float16" else torch.float32
    try:
        tokenizer = AutoTokenizer.from_pretrained(job.model)
        model = AutoModelForCausalLM.from_pretrained(job.model, dtype=dtype)
    except Exception as exc:
        raise ModelLoadError(f"cannot load model {job.model!r}: {exc}") from exc
    model.to(device)
    model.eval()
    return tokenizer, model, device


def _encode(tokenizer, prompt: dict) -> list[int]:
    key = (prompt["disease"], prompt["subgroup"], prompt["template"])
    try:
        ids = tokenizer(prompt["text"], add_special_tokens=False)["input_ids"]
    except Exception as exc:
        raise TokenizationError(key, str(exc)) from exc
    bos = tokenizer.bos_token_id
    if bos is not None and (not ids or ids[0] != bos):
        ids = [bos] + ids
    if len(ids) < 2:
        raise TokenizationError(key, "needs at least 2 tokens to score")
    return ids


def _score_batch(model, device, batch_ids: list[list[int]], pad_id: int) -> list[tuple[float, int]]:
    """(sum of token log-probs, scored token count) per sequence.

    Right padding plus a causal model means pad positions cannot influence
    the scored tokens. Log-probs accumulate in float64.
    """
    import torch

    width = max(len(ids) for ids in batch_ids)
    input_ids = torch.full((len(batch_ids), width), pad_id, dtype=torch.long)
    attention = torch.zeros((len(batch_ids), width), dtype=torch.long)
    for row, ids in enumerate(batch_ids):
        input_ids[row, : len(ids)] = torch.tensor(ids, dtype=torch.long)
        attention[row, : len(ids)] = 1
    input_ids = input_ids.to(device)
    attention = attention.to(device)
    with torch.no_grad():
        logits = model(input_ids=input_ids, attention_mask=attention).logits
    log_probs = torch.log_softmax(logits.to(torch.float64), dim=-1)
    results = []
    for row, ids in enumerate(batch_ids):
        targets = torch.tensor(ids[1:], dtype=torch.long, device=log_probs.device)
        picked = log_probs[row, : len(ids) - 1, :].gather(1, targets.unsqueeze(1)).squeeze(1)
        results.append((float(picked.sum().item()), len(ids) - 1))
    return results


def score_prompts(job: ScoringJob) -> int:
    """Score every prompt and atomically write logit-record JSONL.

    Returns the number of records written. Output order follows prompt
    order; a fixed model, precision, and mode make reruns byte-identical.
    """
    import torch

    torch.manual_seed(job.seed)
    prompts = read_prompts(job.prompts_path)
    tokenizer, model, device = _load_model(job)
    pad_id = tokenizer.pad_token_id
    if pad_id is None:
        pad_id = tokenizer.eos_token_id if tokenizer.eos_token_id is not None else 0

    encoded = [_encode(tokenizer, p) for p in prompts]
    records = []
    for start in range(0, len(prompts), job.batch_size):
        batch_prompts = prompts[start : start + job.batch_size]
        batch_ids = encoded[start : start + job.batch_size]
        for prompt, (total, n_tokens) in zip(batch_prompts, _score_batch(model, device, batch_ids, pad_id)):
            if not math.isfinite(total):
                key = (prompt["disease"], prompt["subgroup"], prompt["template"])
                raise HarvestError(f"non-finite score for prompt {key!r}")
            score = total if job.scoring_mode == "sum_logprob" else total / n_tokens
            records.append(
                {
                    "v": SCHEMA_VERSION,
                    "model": job.label,
                    "language": prompt["language"],
                    "disease": prompt["disease"],
                    "subgroup": prompt["subgroup"],
                    "category": prompt["category"],
                    "template": prompt["template"],
                    "score": score,
                    "scoring_mode": job.scoring_mode,
                }
            )

    output_path = Path(job.output_path)
    output_path.parent.mkdir(parents=True, exist_ok=True)
    tmp_path = output_path.with_name(output_path.name + ".tmp")
    with open(tmp_path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record, ensure_ascii=False))
            fh.write("\n")
    os.replace(tmp_path, output_path)
    return len(records)
