from __future__ import annotations

import math
import random

import pytest
from hypothesis import given, strategies as st

from epibias.errors import (
    DiseaseSetMismatch,
    EmptyInput,
    IncompleteTemplates,
    SubgroupMismatch,
    ValidationError,
)
from epibias.logits import LogitRecord, LogitTable
from epibias.ranking import build_rank_table
from epibias.stats import (
    compare_tables,
    drift,
    kendall_tau,
    mean_tau,
    position_tally,
    quartile_tau,
    template_pairwise_tau,
    template_top_agreement,
)

from oracles import tau_fraction

SUBGROUPS = ["white", "black", "hispanic", "asian", "indigenous"]

# Published gold-subset ranks for asthma: corpus side and real-world side.
ASTHMA_PILE = {"white": 1, "black": 2, "hispanic": 3, "asian": 4, "indigenous": 5}
ASTHMA_REAL = {"white": 3, "black": 2, "hispanic": 4, "asian": 5, "indigenous": 1}


def rank_vectors(n_min=2, n_max=12, with_ties=True):
    """Random min-rank-consistent rank vectors over a shared key set."""

    def build(draw_values, keys):
        ranks = {}
        for key, value in zip(keys, draw_values):
            ranks[key] = 1 + sum(1 for other in draw_values if other > value)
        return ranks

    @st.composite
    def strategy(draw):
        n = draw(st.integers(min_value=n_min, max_value=n_max))
        keys = [f"s{i}" for i in range(n)]
        upper = n if with_ties else 10 * n
        xs = draw(st.lists(st.integers(0, upper), min_size=n, max_size=n))
        ys = draw(st.lists(st.integers(0, upper), min_size=n, max_size=n))
        return build(xs, keys), build(ys, keys)

    return strategy()


def table(source, per_disease_ranks, category="race_ethnicity", language="en"):
    """Build a RankTable from explicit rank vectors.

    build_rank_table expects scores; negating a min-rank vector gives scores
    whose min-rank assignment reproduces that exact vector, ties included.
    """
    per_disease_values = {
        d: {s: -float(r) for s, r in ranks.items()} for d, ranks in per_disease_ranks.items()
    }
    return build_rank_table(source, category, per_disease_values, language=language)


class TestKendallTau:
    def test_identical_rankings(self):
        r = kendall_tau(ASTHMA_PILE, ASTHMA_PILE)
        assert r.tau == 1.0
        assert r.n == 5

    def test_reversed_rankings(self):
        reverse = {s: 6 - r for s, r in ASTHMA_PILE.items()}
        assert kendall_tau(ASTHMA_PILE, reverse).tau == -1.0

    def test_asthma_corpus_vs_real_is_zero(self):
        # 10 subgroup pairs: 5 concordant, 5 discordant
        assert kendall_tau(ASTHMA_PILE, ASTHMA_REAL).tau == 0.0

    def test_all_tied_side_gives_zero(self):
        tied = {s: 1 for s in SUBGROUPS}
        assert kendall_tau(ASTHMA_PILE, tied).tau == 0.0

    def test_subgroup_mismatch(self):
        with pytest.raises(SubgroupMismatch):
            kendall_tau(ASTHMA_PILE, {"white": 1, "black": 2})

    def test_single_subgroup_rejected(self):
        with pytest.raises(SubgroupMismatch):
            kendall_tau({"a": 1}, {"a": 1})

    @given(rank_vectors())
    def test_matches_fraction_oracle(self, pair):
        x, y = pair
        got = kendall_tau(x, y).tau
        assert math.isclose(got, float(tau_fraction(x, y)), rel_tol=0, abs_tol=1e-12)

    @given(rank_vectors())
    def test_symmetry_and_bounds(self, pair):
        x, y = pair
        assert kendall_tau(x, y).tau == kendall_tau(y, x).tau
        assert -1.0 <= kendall_tau(x, y).tau <= 1.0

    @given(rank_vectors())
    def test_relabeling_invariance(self, pair):
        x, y = pair
        mapping = {k: f"renamed_{k}" for k in x}
        rx = {mapping[k]: v for k, v in x.items()}
        ry = {mapping[k]: v for k, v in y.items()}
        assert kendall_tau(x, y).tau == kendall_tau(rx, ry).tau


class TestDrift:
    def fixed_tables(self):
        per_disease = {
            "d1": {"a": 1, "b": 2, "c": 3, "d": 4},
            "d2": {"a": 2, "b": 1, "c": 4, "d": 3},
            "d3": {"a": 4, "b": 3, "c": 2, "d": 1},
        }
        return table("base", per_disease)

    def test_self_drift_is_one(self):
        base = self.fixed_tables()
        report = drift(base, base)
        assert report.delta == 1.0
        assert all(t == 1.0 for t in report.per_disease_tau.values())

    def test_reversed_drift_is_minus_one(self):
        base = self.fixed_tables()
        reversed_ranks = {
            d: {s: 5 - r for s, r in base.row(d).items()} for d in base.diseases
        }
        report = drift(base, table("flipped", reversed_ranks))
        assert report.delta == -1.0

    def test_three_model_synthetic_matches_oracle(self):
        rng = random.Random(2024)
        diseases = [f"d{i}" for i in range(3)]
        subgroups = ["a", "b", "c", "d", "e"]

        def random_table(name):
            per_disease = {}
            for d in diseases:
                values = {s: rng.random() for s in subgroups}
                ranks = {s: 1 + sum(1 for o in values.values() if o > values[s]) for s in values}
                per_disease[d] = ranks
            return table(name, per_disease)

        base = random_table("m0")
        for aligned_name in ("m1", "m2"):
            aligned = random_table(aligned_name)
            report = drift(base, aligned)
            taus = [float(tau_fraction(base.row(d), aligned.row(d))) for d in diseases]
            assert math.isclose(report.delta, sum(taus) / len(taus), abs_tol=1e-12)

    def test_disease_set_mismatch(self):
        base = self.fixed_tables()
        other = table("m1", {"d1": {"a": 1, "b": 2, "c": 3, "d": 4}})
        with pytest.raises(DiseaseSetMismatch):
            drift(base, other)

    def test_category_mismatch(self):
        base = self.fixed_tables()
        other = table("m1", {d: base.row(d) for d in base.diseases}, category="gender")
        with pytest.raises(ValidationError):
            drift(base, other)

    def test_partial_diseases_reported_not_imputed(self):
        full = {"d1": {"a": 1, "b": 2, "c": 3}, "d2": {"a": 3, "b": 2, "c": 1}}
        partial = {"d1": {"a": 1, "b": 2, "c": 3}, "d2": {"a": 2, "b": 1}}
        report = drift(table("base", full), table("m1", partial))
        assert report.incomplete == ("d2",)
        assert set(report.per_disease_tau) == {"d1"}
        assert report.delta == 1.0


class TestCompare:
    def test_restricts_to_shared_subgroups(self):
        left = table("pile", {"d": {"a": 1, "b": 2, "c": 3, "d": 4, "e": 5, "f": 6}})
        right = table("real", {"d": {"a": 2, "b": 1, "c": 3, "d": 4, "e": 5}})
        (result,) = compare_tables(left, right)
        assert result.n == 5

    def test_mismatched_disease_sets_named(self):
        left = table("pile", {"d1": {"a": 1, "b": 2}})
        right = table("real", {"d2": {"a": 1, "b": 2}})
        with pytest.raises(DiseaseSetMismatch) as excinfo:
            compare_tables(left, right)
        assert excinfo.value.left_only == ("d1",)
        assert excinfo.value.right_only == ("d2",)

    def test_mean_tau_empty_rejected(self):
        with pytest.raises(EmptyInput):
            mean_tau([])


class TestPositionTally:
    def two_tables(self, n_diseases=89, male_top_in_reference=59):
        source = {}
        reference = {}
        for i in range(n_diseases):
            d = f"d{i:03d}"
            source[d] = {"male": 1, "female": 2, "nonbinary": 3}
            if i < male_top_in_reference:
                reference[d] = {"male": 1, "female": 2, "nonbinary": 3}
            else:
                reference[d] = {"male": 2, "female": 1, "nonbinary": 3}
        return (
            table("model", source, category="gender"),
            table("corpus", reference, category="gender"),
        )

    def test_published_gender_example(self):
        source, reference = self.two_tables()
        tally = position_tally(source, reference, "top")
        assert tally.counts == {"male": 89}
        assert tally.match_count == 59
        assert tally.ambiguous == ()

    def test_source_equals_reference(self):
        source, _ = self.two_tables()
        tally = position_tally(source, source, "bottom")
        assert tally.match_count == 89
        assert tally.counts == {"nonbinary": 89}

    def test_second_bottom_position(self):
        source, reference = self.two_tables()
        tally = position_tally(source, reference, "second_bottom")
        assert tally.counts == {"female": 89}
        # second-bottom differs on the 30 flipped diseases
        assert tally.match_count == 59

    def test_ties_excluded_and_surfaced(self):
        source = table("model", {
            "d1": {"a": 1, "b": 1, "c": 3},
            "d2": {"a": 1, "b": 2, "c": 3},
        })
        reference = table("corpus", {
            "d1": {"a": 1, "b": 2, "c": 3},
            "d2": {"a": 1, "b": 2, "c": 3},
        })
        tally = position_tally(source, reference, "top")
        assert tally.ambiguous == ("d1",)
        assert tally.counts == {"a": 1}
        assert tally.match_count == 1

    def test_random_pair_matches_enumeration(self):
        rng = random.Random(7)
        diseases = [f"d{i}" for i in range(5)]
        subgroups = ["a", "b", "c", "d"]

        def rand_table(name):
            per = {}
            for d in diseases:
                values = {s: rng.random() for s in subgroups}
                per[d] = {s: 1 + sum(1 for o in values.values() if o > values[s]) for s in values}
            return table(name, per)

        source, reference = rand_table("s"), rand_table("r")
        for position, target in (("top", 1), ("bottom", 4), ("second_bottom", 3)):
            tally = position_tally(source, reference, position)
            expected_counts: dict[str, int] = {}
            expected_match = 0
            for d in diseases:
                srow = source.row(d)
                holders = [s for s, r in srow.items() if r == target]
                assert len(holders) == 1
                expected_counts[holders[0]] = expected_counts.get(holders[0], 0) + 1
                rrow = reference.row(d)
                if [s for s, r in rrow.items() if r == target] == holders:
                    expected_match += 1
            assert tally.counts == expected_counts
            assert tally.match_count == expected_match

    def test_counts_sum_to_disease_count_when_untied(self):
        source, reference = self.two_tables(n_diseases=30, male_top_in_reference=12)
        for position in ("top", "bottom", "second_bottom"):
            tally = position_tally(source, reference, position)
            assert sum(tally.counts.values()) == 30


class TestQuartiles:
    def test_constant_tau(self):
        taus = {f"d{i}": 0.5 for i in range(8)}
        totals = {f"d{i}": float(i) for i in range(8)}
        bins = quartile_tau(taus, totals)
        assert [b.mean_tau for b in bins] == [0.5] * 4
        assert [len(b.diseases) for b in bins] == [2, 2, 2, 2]

    def test_singleton_bins_in_count_order(self):
        taus = {"w": 1.0, "x": 0.0, "y": -1.0, "z": 0.5}
        totals = {"w": 1.0, "x": 2.0, "y": 3.0, "z": 4.0}
        bins = quartile_tau(taus, totals)
        assert [b.mean_tau for b in bins] == [1.0, 0.0, -1.0, 0.5]

    def test_remainder_goes_to_lower_quartiles(self):
        taus = {f"d{i:02d}": 0.0 for i in range(89)}
        totals = {f"d{i:02d}": float(i) for i in range(89)}
        bins = quartile_tau(taus, totals)
        assert [len(b.diseases) for b in bins] == [23, 22, 22, 22]

    def test_matches_sort_and_bin_oracle(self):
        rng = random.Random(13)
        taus = {f"d{i:03d}": rng.uniform(-1, 1) for i in range(89)}
        totals = {d: float(rng.randrange(10_000)) for d in taus}
        bins = quartile_tau(taus, totals)
        ordered = sorted(taus, key=lambda d: (totals[d], d))
        base, rem = divmod(len(ordered), 4)
        cursor = 0
        for i, b in enumerate(bins):
            size = base + (1 if i < rem else 0)
            members = ordered[cursor : cursor + size]
            cursor += size
            assert list(b.diseases) == members
            expected = sum(taus[d] for d in members) / len(members)
            assert math.isclose(b.mean_tau, expected, abs_tol=1e-12)

    def test_empty_rejected(self):
        with pytest.raises(EmptyInput):
            quartile_tau({}, {})

    def test_missing_total_rejected(self):
        with pytest.raises(ValidationError):
            quartile_tau({"d": 0.5}, {})


def robustness_table(per_disease_template_scores, model="m0", language="en"):
    """disease -> template -> {subgroup: score}."""
    records = []
    for disease, templates in per_disease_template_scores.items():
        for template, by_subgroup in templates.items():
            for subgroup, score in by_subgroup.items():
                records.append(
                    LogitRecord(
                        model=model, language=language, disease_id=disease,
                        subgroup_id=subgroup, category="race_ethnicity",
                        template_index=template, score=score, scoring_mode="sum_logprob",
                    )
                )
    return LogitTable(records)


class TestTemplateRobustness:
    def all_agree(self, n_templates=10):
        return robustness_table({
            d: {
                t: {"a": -1.0 - 0.01 * t, "b": -2.0, "c": -3.0}
                for t in range(n_templates)
            }
            for d in ("d1", "d2", "d3")
        })

    def test_full_agreement_scores_template_count(self):
        result = template_top_agreement(self.all_agree(), "m0", "en", "race_ethnicity")
        assert result.mean == 10.0
        assert result.std_error == 0.0

    def test_split_modal_count(self):
        templates = {}
        for t in range(10):
            top = "a" if t < 6 else "b"
            scores = {"a": -2.0, "b": -2.0, "c": -3.0}
            scores[top] = -1.0
            templates[t] = scores
        result = template_top_agreement(robustness_table({"d1": templates}), "m0", "en", "race_ethnicity")
        assert result.per_disease["d1"] == 6

    def test_tied_top_template_contributes_nothing(self):
        templates = {0: {"a": -1.0, "b": -1.0, "c": -3.0},
                     1: {"a": -1.0, "b": -2.0, "c": -3.0}}
        result = template_top_agreement(robustness_table({"d1": templates}), "m0", "en", "race_ethnicity")
        assert result.per_disease["d1"] == 1

    def test_random_fixture_matches_recount(self):
        rng = random.Random(99)
        data = {
            f"d{i}": {
                t: {s: rng.uniform(-9, -1) for s in ("a", "b", "c", "d")}
                for t in range(10)
            }
            for i in range(6)
        }
        result = template_top_agreement(robustness_table(data), "m0", "en", "race_ethnicity")
        for disease, templates in data.items():
            tally: dict[str, int] = {}
            for scores in templates.values():
                best = max(scores.values())
                tops = [s for s, v in scores.items() if v == best]
                if len(tops) == 1:
                    tally[tops[0]] = tally.get(tops[0], 0) + 1
            assert result.per_disease[disease] == max(tally.values())

    def test_identical_rankings_give_tau_one(self):
        result = template_pairwise_tau(self.all_agree(), "m0", "en", "race_ethnicity")
        assert result.mean == 1.0

    def test_two_reversed_templates_give_minus_one(self):
        data = {"d1": {0: {"a": -1.0, "b": -2.0, "c": -3.0},
                       1: {"a": -3.0, "b": -2.0, "c": -1.0}}}
        result = template_pairwise_tau(robustness_table(data), "m0", "en", "race_ethnicity")
        assert result.mean == -1.0

    def test_three_template_fixture_matches_brute_force(self):
        rng = random.Random(4)
        data = {
            f"d{i}": {t: {s: rng.uniform(-9, -1) for s in ("a", "b", "c", "d")} for t in range(3)}
            for i in range(4)
        }
        result = template_pairwise_tau(robustness_table(data), "m0", "en", "race_ethnicity")
        for disease, templates in data.items():
            taus = []
            for i in range(3):
                for j in range(i + 1, 3):
                    ranks_i = {s: 1 + sum(1 for o in templates[i].values() if o > templates[i][s])
                               for s in templates[i]}
                    ranks_j = {s: 1 + sum(1 for o in templates[j].values() if o > templates[j][s])
                               for s in templates[j]}
                    taus.append(float(tau_fraction(ranks_i, ranks_j)))
            assert math.isclose(result.per_disease[disease], sum(taus) / len(taus), abs_tol=1e-12)

    def test_single_template_rejected_for_pairwise(self):
        data = {"d1": {0: {"a": -1.0, "b": -2.0}}}
        with pytest.raises(IncompleteTemplates):
            template_pairwise_tau(robustness_table(data), "m0", "en", "race_ethnicity")
