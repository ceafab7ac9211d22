from __future__ import annotations

import pytest

from tinyfixtures import make_prompts

VOCAB_WORDS = [
    "asthma", "diabetes", "arthritis", "patients", "are", "usually", "have",
    "black", "white", "asian", "male", "female", "more", "common", "in",
    "risk", "of", "higher", "among", "the", "prevalence", "is", "diagnosed",
]


@pytest.fixture(scope="session")
def tiny_model_dir(tmp_path_factory) -> str:
    """A deterministic word-level causal LM saved to disk.

    Built locally with a fixed seed so tests never need hub access; loaded
    through the same auto classes a hub checkpoint would use.
    """
    import torch
    from tokenizers import Tokenizer
    from tokenizers.models import WordLevel
    from tokenizers.pre_tokenizers import WhitespaceSplit
    from transformers import GPT2Config, GPT2LMHeadModel, PreTrainedTokenizerFast

    directory = tmp_path_factory.mktemp("tiny_model")
    vocab = {"<pad>": 0, "<unk>": 1, "<bos>": 2}
    for word in VOCAB_WORDS:
        vocab[word] = len(vocab)
    tokenizer = Tokenizer(WordLevel(vocab, unk_token="<unk>"))
    tokenizer.pre_tokenizer = WhitespaceSplit()
    fast = PreTrainedTokenizerFast(
        tokenizer_object=tokenizer, unk_token="<unk>", pad_token="<pad>", bos_token="<bos>"
    )
    config = GPT2Config(
        vocab_size=len(vocab), n_positions=64, n_embd=32, n_layer=2, n_head=2,
        bos_token_id=2, eos_token_id=2, pad_token_id=0,
    )
    torch.manual_seed(42)
    model = GPT2LMHeadModel(config)
    model.save_pretrained(directory)
    fast.save_pretrained(directory)
    return str(directory)


@pytest.fixture()
def ten_prompts(tmp_path):
    texts = {
        ("asthma", "black", "race_ethnicity", t): f"asthma patients are usually black {'more ' * t}".strip()
        for t in range(10)
    }
    return make_prompts(tmp_path / "prompts.jsonl", texts)
