"""Synthetic dictionaries and corpora with ground-truth ledgers.

The ledger corpus plants single-token keywords at known positions and
records the expected pair counts at generation time, directly from the
plant plan, never by scanning the text. Filler tokens use a reserved "w"
prefix so they can never collide with a keyword.
"""
from __future__ import annotations

import json
import random

from epibias.corpus import RawDocument

LEDGER_WINDOWS = (5, 12, 40)


def synth_dictionary(n_diseases=4, n_race=3, n_gender=2):
    return {
        "version": "synthetic-1",
        "diseases": [
            {"id": f"d{i}", "display": {"en": f"malady {i}"}, "synonyms": {"en": [f"maladyx{i}"]}}
            for i in range(1, n_diseases + 1)
        ],
        "race": [
            {"id": f"r{i}", "display": {"en": f"Group R{i}"}, "synonyms": {"en": [f"groupra{i}"]}}
            for i in range(1, n_race + 1)
        ],
        "gender": [
            {"id": f"g{i}", "display": {"en": f"group g{i}"}, "synonyms": {"en": [f"groupge{i}"]}}
            for i in range(1, n_gender + 1)
        ],
    }


def write_synth_dictionary(path, **kwargs):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(synth_dictionary(**kwargs), fh, indent=2)
        fh.write("\n")
    return path


# Dictionary with multi-token and nested phrases for matcher stress tests;
# the corpus vocabulary reuses the phrase tokens so accidental and
# overlapping matches actually happen.
STRESS_DICTIONARY = {
    "version": "stress-1",
    "diseases": [
        {"id": "kidney_rot", "display": {"en": "kidney rot"}, "synonyms": {"en": ["kidney rot"]}},
        {"id": "blue_kidney_rot", "display": {"en": "blue kidney rot"},
         "synonyms": {"en": ["blue kidney rot"]}},
        {"id": "fizzle_pox", "display": {"en": "fizzle pox"}, "synonyms": {"en": ["fizzle pox", "fizzle"]}},
        {"id": "grey_ague", "display": {"en": "grey ague"}, "synonyms": {"en": ["grey ague", "ague"]}},
    ],
    "race": [
        {"id": "northfolk", "display": {"en": "Northfolk"}, "synonyms": {"en": ["northfolk"]}},
        {"id": "cliff_dwellers", "display": {"en": "Cliff Dwellers"},
         "synonyms": {"en": ["cliff dwellers", "dwellers of the cliff"]}},
    ],
    "gender": [
        {"id": "gmarsh", "display": {"en": "marshborn"}, "synonyms": {"en": ["marshborn"]}},
    ],
}

STRESS_VOCAB = (
    "kidney rot blue fizzle pox grey ague northfolk cliff dwellers of the marshborn "
    "stone river quiet harbor lantern wheat barrel north window"
).split()


def stress_document(rng: random.Random, max_tokens=1000) -> list[str]:
    length = rng.randint(1, max_tokens)
    return [rng.choice(STRESS_VOCAB) for _ in range(length)]


def generate_ledger_corpus(n_docs: int, seed: int, windows=LEDGER_WINDOWS):
    """Documents plus the exact mention-pair ledger they must produce."""
    rng = random.Random(seed)
    dictionary = synth_dictionary()
    disease_tokens = {c["id"]: c["synonyms"]["en"][0] for c in dictionary["diseases"]}
    subgroup_tokens = {
        c["id"]: c["synonyms"]["en"][0] for c in dictionary["race"] + dictionary["gender"]
    }
    docs = []
    ledger: dict[tuple[str, str, int], int] = {}
    for ordinal in range(n_docs):
        length = rng.randint(20, 120)
        tokens = [f"w{rng.randrange(500):03d}" for _ in range(length)]
        n_plants = rng.randint(0, 6)
        positions = rng.sample(range(length), min(n_plants, length))
        plan: list[tuple[str, str, int]] = []
        for pos in positions:
            if rng.random() < 0.5:
                concept_id = rng.choice(sorted(disease_tokens))
                tokens[pos] = disease_tokens[concept_id]
                plan.append(("disease", concept_id, pos))
            else:
                concept_id = rng.choice(sorted(subgroup_tokens))
                tokens[pos] = subgroup_tokens[concept_id]
                plan.append(("subgroup", concept_id, pos))
        for kind_a, concept_a, pos_a in plan:
            if kind_a != "disease":
                continue
            for kind_b, concept_b, pos_b in plan:
                if kind_b != "subgroup":
                    continue
                distance = abs(pos_a - pos_b)
                for window in windows:
                    if distance <= window:
                        key = (concept_a, concept_b, window)
                        ledger[key] = ledger.get(key, 0) + 1
        docs.append(RawDocument(doc_id=f"synth-{ordinal}", text=" ".join(tokens)))
    return dictionary, docs, ledger
