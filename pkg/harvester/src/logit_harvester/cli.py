from __future__ import annotations

import argparse
import sys

from .scoring import HarvestError, ScoringJob, score_prompts


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="harvest", description="Score prompts under a causal LM")
    parser.add_argument("--model", required=True, help="hub id or local model directory")
    parser.add_argument("--prompts", required=True, help="prompt JSONL from the render step")
    parser.add_argument("--out", required=True, help="output logit JSONL path")
    parser.add_argument("--mode", default="sum_logprob", choices=["sum_logprob", "mean_logprob"])
    parser.add_argument("--batch", type=int, default=8)
    parser.add_argument("--device", default="auto")
    parser.add_argument("--precision", default="auto", choices=["auto", "float32", "float16"])
    parser.add_argument("--model-label", dest="model_label", help="model id to record in the output")
    parser.add_argument("--seed", type=int, default=42)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    job = ScoringJob(
        model=args.model,
        prompts_path=args.prompts,
        output_path=args.out,
        scoring_mode=args.mode,
        batch_size=args.batch,
        device=args.device,
        precision=args.precision,
        model_label=args.model_label,
        seed=args.seed,
    )
    try:
        written = score_prompts(job)
    except HarvestError as exc:
        sys.stderr.write(f"harvest: {exc}\n")
        return 2
    except OSError as exc:
        sys.stderr.write(f"harvest: I/O error: {exc}\n")
        return 3
    sys.stderr.write(f"harvest: wrote {written} records to {args.out}\n")
    return 0


def run() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    run()
