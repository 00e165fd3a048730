import random

import pytest

from synth import spam_contaminated_benchmark
from webspam.ranktransform import (
    SpamAnnotatedRun,
    ThresholdProfile,
    annotate,
    cross_validate,
    filter_run,
    optimize_thresholds,
    random_control,
    rerank,
    threshold_sweep,
)
from webspam.treceval import Judgment, JudgmentSet, est_p, parse_run


def simple_run(percentiles):
    """One topic, docs A.. with given percentiles, descending scores."""
    names = [chr(ord("A") + i) for i in range(len(percentiles))]
    lines = [
        f"1 Q0 {name} {rank} {100 - rank} tag"
        for rank, name in enumerate(names, 1)
    ]
    run = parse_run("\n".join(lines) + "\n")
    return annotate(run, dict(zip(names, percentiles)))


class TestFilterRun:
    def test_t0_is_identity(self):
        ann = simple_run([10, 80, 60])
        assert filter_run(ann, 0).doc_ids("1") == ["A", "B", "C"]

    def test_drops_below_threshold(self):
        ann = simple_run([10, 80, 60])
        assert filter_run(ann, 50).doc_ids("1") == ["B", "C"]

    def test_t100_drops_everything(self):
        ann = simple_run([10, 80, 100])
        assert filter_run(ann, 100).doc_ids("1") == []

    def test_ranks_reassigned(self):
        ann = simple_run([10, 80, 60])
        filtered = filter_run(ann, 50)
        assert [e.rank for e in filtered.topics["1"]] == [1, 2]

    def test_subsequence_and_monotone_containment(self):
        rng = random.Random(0)
        ann = simple_run([rng.randrange(101) for _ in range(26)])
        original = ann.topics["1"]
        previous = filter_run(ann, 0).doc_ids("1")
        order = {e.doc_id: i for i, (e, _) in enumerate(original)}
        for t in range(0, 101, 10):
            docs = filter_run(ann, t).doc_ids("1")
            # subsequence of the previous (smaller t) survivor list
            it = iter(previous)
            assert all(d in it for d in docs)
            assert sorted(docs, key=order.get) == docs
            previous = docs


class TestRandomControl:
    def test_t0_unchanged(self):
        ann = simple_run([50] * 5)
        plain = filter_run(ann, 0)
        assert random_control(plain, 0, seed=1).doc_ids("1") == plain.doc_ids("1")

    def test_deterministic_per_seed(self):
        ann = simple_run([50] * 20)
        plain = filter_run(ann, 0)
        a = random_control(plain, 40, seed=7).doc_ids("1")
        b = random_control(plain, 40, seed=7).doc_ids("1")
        assert a == b

    def test_t100_empty(self):
        ann = simple_run([50] * 5)
        plain = filter_run(ann, 0)
        assert random_control(plain, 100, seed=1).doc_ids("1") == []

    def test_removal_rate_near_t(self):
        ann = simple_run([50] * 26)
        plain = filter_run(ann, 0)
        survivors = [
            len(random_control(plain, 30, seed=s).doc_ids("1"))
            for s in range(200)
        ]
        mean = sum(survivors) / len(survivors)
        assert 26 * 0.6 < mean < 26 * 0.8


class TestOptimizeThresholds:
    def test_perfect_separation_learns_cut(self):
        # spam docs (pct < 50) nonrelevant, others relevant
        rng = random.Random(1)
        js = JudgmentSet()
        percentiles = []
        for i in range(26):
            pct = rng.choice([rng.randrange(50), rng.randrange(50, 101)])
            percentiles.append(pct)
            js.entries[("1", chr(ord("A") + i))] = Judgment(
                grade=1 if pct >= 50 else 0
            )
        ann = simple_run(percentiles)
        profile = optimize_thresholds(ann, js, depth=5)
        boundary = min(p for p in percentiles if p >= 50)
        for k in range(5):
            t = profile.thresholds[k]
            assert t <= boundary
            filtered = filter_run(ann, t).doc_ids("1")
            assert est_p(filtered, js, "1", k + 1) == pytest.approx(1.0)

    def test_all_relevant_gives_zero_thresholds(self):
        js = JudgmentSet()
        for i in range(10):
            js.entries[("1", chr(ord("A") + i))] = Judgment(grade=1)
        ann = simple_run([random.Random(2).randrange(101) for _ in range(10)])
        profile = optimize_thresholds(ann, js, depth=4)
        assert profile.thresholds == [0, 0, 0, 0]

    def test_single_topic_matches_enumeration(self):
        rng = random.Random(3)
        js = JudgmentSet()
        percentiles = []
        for i in range(26):
            percentiles.append(rng.randrange(101))
            js.entries[("1", chr(ord("A") + i))] = Judgment(grade=rng.randint(0, 1))
        ann = simple_run(percentiles)
        k = 3
        profile = optimize_thresholds(ann, js, depth=k)
        best_t, best_v = 0, -1.0
        for t in range(101):
            v = est_p(filter_run(ann, t).doc_ids("1"), js, "1", k)
            if v > best_v + 1e-12:
                best_t, best_v = t, v
        assert profile.thresholds[k - 1] == best_t

    def test_smallest_maximizer(self):
        run, js, pct = spam_contaminated_benchmark(num_topics=5, seed=11)
        ann = annotate(run, pct)
        profile = optimize_thresholds(ann, js, depth=10)
        topics = js.topics()
        for k in (1, 5, 10):
            t_k = profile.thresholds[k - 1]
            best = sum(
                est_p(filter_run(ann, t_k).doc_ids(topic), js, topic, k)
                for topic in topics
            ) / len(topics)
            for t in range(t_k):
                mean = sum(
                    est_p(filter_run(ann, t).doc_ids(topic), js, topic, k)
                    for topic in topics
                ) / len(topics)
                assert mean < best - 1e-12

    def test_no_judged_topics_rejected(self):
        ann = simple_run([50, 50])
        with pytest.raises(ValueError, match="topics"):
            optimize_thresholds(ann, JudgmentSet(), depth=3)


class TestRerank:
    def test_zero_profile_is_identity(self):
        ann = simple_run([10, 80, 60])
        assert rerank(ann, ThresholdProfile([0, 0, 0])).doc_ids("1") == ["A", "B", "C"]

    def test_hand_traced_greedy(self):
        ann = simple_run([10, 80, 60])
        result = rerank(ann, ThresholdProfile([50, 50, 50]))
        assert result.doc_ids("1") == ["B", "C", "A"]

    def test_all_pass_is_identity(self):
        ann = simple_run([90, 95, 100])
        assert rerank(ann, ThresholdProfile([80, 80, 80])).doc_ids("1") == \
            ["A", "B", "C"]

    def test_permutation_property(self):
        rng = random.Random(4)
        for _ in range(20):
            pcts = [rng.randrange(101) for _ in range(15)]
            ann = simple_run(pcts)
            profile = ThresholdProfile([rng.randrange(101) for _ in range(8)])
            result = rerank(ann, profile)
            assert sorted(result.doc_ids("1")) == sorted(
                e.doc_id for e, _ in ann.topics["1"]
            )

    def test_constant_profile_equals_filter_then_rest(self):
        rng = random.Random(5)
        pcts = [rng.randrange(101) for _ in range(20)]
        ann = simple_run(pcts)
        t = 50
        reranked = rerank(ann, ThresholdProfile([t] * 20)).doc_ids("1")
        kept = filter_run(ann, t).doc_ids("1")
        dropped = [e.doc_id for e, p in ann.topics["1"] if p < t]
        assert reranked == kept + dropped

    def test_positions_beyond_depth_pass_everything(self):
        ann = simple_run([10, 20, 30, 40])
        result = rerank(ann, ThresholdProfile([25]))
        # position 1 takes earliest pct >= 25 (C); rest fall back to original order
        assert result.doc_ids("1") == ["C", "A", "B", "D"]


class TestCrossValidate:
    def test_uniform_percentiles_no_change(self):
        run, js, _ = spam_contaminated_benchmark(num_topics=4, seed=6)
        ann = annotate(run, {})  # every doc gets the default percentile
        result = cross_validate(ann, js, depth=10)
        for topic in result.original_metrics:
            assert result.reranked.doc_ids(topic) == run.doc_ids(topic)

    def test_requires_two_topics(self):
        run, js, pct = spam_contaminated_benchmark(num_topics=1, seed=7)
        with pytest.raises(ValueError, match="2 judged topics"):
            cross_validate(annotate(run, pct), js, depth=10)

    def test_profile_transfer_improves(self):
        run, js, pct = spam_contaminated_benchmark(num_topics=2, seed=8)
        result = cross_validate(annotate(run, pct), js, depth=10)
        assert result.mean_reranked["estP10"] > result.mean_original["estP10"]

    def test_no_leakage(self):
        run, js, pct = spam_contaminated_benchmark(num_topics=5, seed=9)
        ann = annotate(run, pct)
        held_out = "3"
        before = cross_validate(ann, js, depth=10).profiles[held_out]
        mutated = JudgmentSet(entries=dict(js.entries))
        for (topic, doc), j in list(mutated.entries.items()):
            if topic == held_out:
                mutated.entries[(topic, doc)] = Judgment(
                    grade=1 - min(j.grade, 1), prob=j.prob
                )
        after = cross_validate(ann, mutated, depth=10).profiles[held_out]
        assert before.thresholds == after.thresholds

    def test_reranked_lists_are_permutations(self):
        run, js, pct = spam_contaminated_benchmark(num_topics=6, seed=10)
        result = cross_validate(annotate(run, pct), js, depth=20)
        for topic in run.topics:
            assert sorted(result.reranked.doc_ids(topic)) == \
                sorted(run.doc_ids(topic))


class TestThresholdSweep:
    def test_grid_of_zero_is_baseline_only(self):
        run, js, pct = spam_contaminated_benchmark(num_topics=3, seed=12)
        ann = annotate(run, pct)
        rows = threshold_sweep([ann], js, grid=[0])
        assert {(r.series, r.t) for r in rows} == {("filter", 0), ("control", 0)}
        baseline = [r for r in rows if r.series == "filter"][0]
        assert baseline.mean_est_p10 == pytest.approx(0.2)

    def test_filtering_helps_on_contaminated_fixture(self):
        run, js, pct = spam_contaminated_benchmark(num_topics=10, seed=13)
        ann = annotate(run, pct)
        rows = threshold_sweep([ann], js, grid=list(range(0, 100, 10)))
        filt = {r.t: r.mean_est_p10 for r in rows if r.series == "filter"}
        assert max(filt.values()) > filt[0] + 0.1
        assert filt[50] == pytest.approx(1.0)

    def test_empty_grid_rejected(self):
        run, js, pct = spam_contaminated_benchmark(num_topics=2, seed=14)
        with pytest.raises(ValueError, match="grid"):
            threshold_sweep([annotate(run, pct)], js, grid=[])
