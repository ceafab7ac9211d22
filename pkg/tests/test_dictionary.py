from __future__ import annotations

import json
import logging

import pytest
from hypothesis import given, strategies as st

from epibias.dictionary import (
    CATEGORY_DISEASE,
    CATEGORY_GENDER,
    CATEGORY_RACE,
    compile_matcher,
    load_dictionary,
    save_dictionary,
)
from epibias.errors import MissingLanguage, ParseError, ValidationError

from oracles import naive_occurrences, patterns_from_bundle
from synth import STRESS_DICTIONARY, stress_document


def write_dict(tmp_path, data, name="dict.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data), encoding="utf-8")
    return path


def minimal_dict(**overrides):
    data = {
        "version": "test",
        "diseases": [{"id": "asthma", "display": {"en": "asthma"}, "synonyms": {"en": ["asthma"]}}],
        "race": [{"id": "black", "display": {"en": "Black"}, "synonyms": {"en": ["black"]}}],
        "gender": [{"id": "male", "display": {"en": "male"}, "synonyms": {"en": ["male"]}}],
    }
    data.update(overrides)
    return data


class TestLoad:
    def test_bundled_fixture_has_full_scale(self, core_bundle):
        assert core_bundle.sizes() == (89, 6, 3)
        assert {c.category for c in core_bundle.race} == {CATEGORY_RACE}
        assert {c.category for c in core_bundle.gender} == {CATEGORY_GENDER}
        assert {c.category for c in core_bundle.diseases} == {CATEGORY_DISEASE}

    def test_minimal_bundle(self, tmp_path):
        bundle = load_dictionary(write_dict(tmp_path, minimal_dict()))
        assert bundle.sizes() == (1, 1, 1)

    def test_duplicate_phrase_names_both_concepts(self, tmp_path):
        data = minimal_dict()
        data["diseases"] = [
            {"id": "copd", "display": {"en": "copd"}, "synonyms": {"en": ["copd"]}},
            {"id": "emphysema", "display": {"en": "emphysema"}, "synonyms": {"en": ["copd"]}},
        ]
        with pytest.raises(ValidationError) as excinfo:
            load_dictionary(write_dict(tmp_path, data))
        assert set(excinfo.value.concept_ids) == {"copd", "emphysema"}

    def test_empty_synonym_rejected(self, tmp_path):
        data = minimal_dict()
        data["diseases"][0]["synonyms"]["en"] = ["..."]
        with pytest.raises(ValidationError):
            load_dictionary(write_dict(tmp_path, data))

    def test_missing_en_synonyms_rejected(self, tmp_path):
        data = minimal_dict()
        data["diseases"][0]["synonyms"] = {"fr": ["asthme"]}
        with pytest.raises(ValidationError):
            load_dictionary(write_dict(tmp_path, data))

    def test_unknown_category_rejected(self, tmp_path):
        data = minimal_dict(occupations=[])
        with pytest.raises(ValidationError):
            load_dictionary(write_dict(tmp_path, data))

    def test_malformed_json_is_parse_error(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json", encoding="utf-8")
        with pytest.raises(ParseError):
            load_dictionary(path)

    def test_cross_category_overlap_logged_not_rejected(self, tmp_path, caplog):
        data = minimal_dict()
        data["diseases"][0]["synonyms"]["en"].append("black")
        with caplog.at_level(logging.WARNING, logger="epibias.dictionary"):
            bundle = load_dictionary(write_dict(tmp_path, data))
        assert bundle.sizes() == (1, 1, 1)
        assert any("black" in rec.message for rec in caplog.records)

    def test_round_trip(self, tmp_path, core_bundle):
        out = tmp_path / "roundtrip.json"
        save_dictionary(core_bundle, out)
        assert load_dictionary(out) == core_bundle


class TestMatcher:
    def test_multi_token_phrase_span(self, core_bundle):
        matcher = compile_matcher(core_bundle, "en")
        hits = matcher.find(("cardiovascular", "disease", "risk"))
        spans = {(h.concept_id, h.start, h.end) for h in hits}
        assert ("cardiovascular_disease", 0, 1) in spans

    def test_token_boundary_anchoring(self, core_bundle):
        matcher = compile_matcher(core_bundle, "en")
        assert matcher.find(("whiteboard",)) == []

    def test_case_insensitive_via_normalization(self, core_bundle):
        from epibias.scanner import normalize_text

        matcher = compile_matcher(core_bundle, "en")
        stream = normalize_text("ASTHMA affects Black patients.")
        found = {h.concept_id for h in matcher.find(stream.tokens)}
        assert {"asthma", "black"} <= found

    def test_missing_language(self, tmp_path):
        bundle = load_dictionary(write_dict(tmp_path, minimal_dict()))
        with pytest.raises(MissingLanguage) as excinfo:
            compile_matcher(bundle, "zh")
        assert excinfo.value.language == "zh"

    def test_longest_match_wins_within_category(self, tmp_path):
        data = minimal_dict()
        data["diseases"] = [
            {"id": "kidney_rot", "display": {"en": "kidney rot"}, "synonyms": {"en": ["kidney rot"]}},
            {"id": "blue_kidney_rot", "display": {"en": "blue kidney rot"},
             "synonyms": {"en": ["blue kidney rot"]}},
        ]
        matcher = compile_matcher(load_dictionary(write_dict(tmp_path, data)), "en")
        hits = matcher.find(("blue", "kidney", "rot"))
        by_concept = {h.concept_id: (h.start, h.end) for h in hits if h.category == "disease"}
        # the nested phrase starting later is still reported; the same-start
        # shorter alternative would be a different concept at start 0 only
        assert by_concept == {"blue_kidney_rot": (0, 2), "kidney_rot": (1, 2)}

    def test_matcher_equals_naive_scan_on_planted_doc(self, tmp_path):
        bundle = load_dictionary(write_dict(tmp_path, STRESS_DICTIONARY))
        matcher = compile_matcher(bundle, "en")
        patterns = patterns_from_bundle(bundle, "en")
        tokens = (
            "stone kidney rot harbor blue kidney rot northfolk lantern "
            "dwellers of the cliff fizzle pox ague marshborn wheat fizzle"
        ).split()
        got = [(h.concept_id, h.category, h.start, h.end) for h in matcher.find(tokens)]
        assert got == naive_occurrences(patterns, tokens)

    @given(st.integers(min_value=0, max_value=10_000), st.integers(min_value=1, max_value=220))
    def test_matcher_equals_naive_scan_randomized(self, seed, max_tokens):
        import random

        bundle = getattr(self, "_stress_bundle", None)
        if bundle is None:
            import json as _json
            import tempfile

            with tempfile.NamedTemporaryFile("w", suffix=".json", delete=False) as fh:
                _json.dump(STRESS_DICTIONARY, fh)
                path = fh.name
            bundle = load_dictionary(path)
            type(self)._stress_bundle = bundle
        matcher = compile_matcher(bundle, "en")
        patterns = patterns_from_bundle(bundle, "en")
        tokens = stress_document(random.Random(seed), max_tokens=max_tokens)
        got = [(h.concept_id, h.category, h.start, h.end) for h in matcher.find(tokens)]
        assert got == naive_occurrences(patterns, tokens)

    def test_deterministic_across_compiles(self, core_bundle):
        a = compile_matcher(core_bundle, "en")
        b = compile_matcher(core_bundle, "en")
        tokens = ("black", "men", "with", "asthma", "and", "heart", "disease")
        assert a.find(tokens) == b.find(tokens)
