"""Spam-percentile run surgery: filtering, reranking, threshold learning.

A brick-wall filter drops every document in the spammiest t% of the corpus
(percentile < t).  The reranker instead learns, per rank position k, the
threshold t_k that maximizes mean estP@k on training topics, then greedily
rebuilds each ranking so position i is filled by the earliest unplaced
document meeting t_i.  Leave-one-topic-out cross-validation evaluates the
reranker without leaking the held-out topic's judgments.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from webspam.pipeline import PercentileTable
from webspam.treceval import (
    JudgmentSet,
    RankedRun,
    RunEntry,
    average_precision_variants,
    est_p,
    est_r_precision,
    sign_test_p,
)

DEFAULT_MISSING_PERCENTILE = 50
FULL_GRID = tuple(range(101))
DEFAULT_GRID = tuple(range(0, 100, 10))


@dataclass
class ThresholdProfile:
    thresholds: List[int]

    def __post_init__(self):
        for t in self.thresholds:
            if not 0 <= t <= 100:
                raise ValueError(f"threshold {t} out of [0, 100]")

    @property
    def depth(self) -> int:
        return len(self.thresholds)

    def at(self, position: int) -> int:
        """Threshold for 1-based rank position; 0 beyond the learned depth."""
        return self.thresholds[position - 1] if position <= self.depth else 0


@dataclass
class SpamAnnotatedRun:
    run_id: str = ""
    # per topic: (entry, percentile) in rank order
    topics: Dict[str, List[Tuple[RunEntry, int]]] = field(default_factory=dict)


def annotate(
    run: RankedRun,
    percentiles: PercentileTable | Dict[str, int],
    default: int = DEFAULT_MISSING_PERCENTILE,
) -> SpamAnnotatedRun:
    table = percentiles.entries if isinstance(percentiles, PercentileTable) else percentiles
    annotated = SpamAnnotatedRun(run_id=run.run_id)
    for topic, entries in run.topics.items():
        annotated.topics[topic] = [
            (entry, table.get(entry.doc_id, default)) for entry in entries
        ]
    return annotated


def filter_run(run: SpamAnnotatedRun, t: int) -> RankedRun:
    """Drop documents with percentile < t; t = 100 drops everything."""
    if not 0 <= t <= 100:
        raise ValueError(f"threshold {t} out of [0, 100]")
    out = RankedRun(run_id=f"{run.run_id}.filtered.t{t}")
    for topic, pairs in run.topics.items():
        survivors = [] if t == 100 else [e for e, pct in pairs if pct >= t]
        out.topics[topic] = [
            RunEntry(e.doc_id, e.score, rank) for rank, e in enumerate(survivors, 1)
        ]
    return out


def _in_random_subset(doc_id: str, t: int, seed: int) -> bool:
    digest = hashlib.sha1(f"{seed}:{doc_id}".encode("utf-8")).digest()
    u = int.from_bytes(digest[:8], "big") / 2.0 ** 64
    return u * 100.0 < t


def random_control(run: RankedRun, t: int, seed: int = 0) -> RankedRun:
    """Remove a seeded pseudo-random t% of the document id space."""
    if not 0 <= t <= 100:
        raise ValueError(f"threshold {t} out of [0, 100]")
    out = RankedRun(run_id=f"{run.run_id}.control.t{t}")
    for topic, entries in run.topics.items():
        survivors = [
            e for e in entries if not _in_random_subset(e.doc_id, t, seed)
        ]
        out.topics[topic] = [
            RunEntry(e.doc_id, e.score, rank) for rank, e in enumerate(survivors, 1)
        ]
    return out


def _est_p_curve(
    docs: Sequence[str], judgments: JudgmentSet, topic: str, depth: int
) -> np.ndarray:
    """estP@k for k = 1..depth as a vector."""
    n = min(len(docs), depth)
    inv_rel = np.zeros(depth)
    inv_nrel = np.zeros(depth)
    cnt_rel = np.zeros(depth)
    cnt_nrel = np.zeros(depth)
    for i in range(n):
        j = judgments.get(topic, docs[i])
        if j is None:
            continue
        if j.relevant:
            inv_rel[i] = 1.0 / j.prob
            cnt_rel[i] = 1.0
        else:
            inv_nrel[i] = 1.0 / j.prob
            cnt_nrel[i] = 1.0
    stat_rel = np.cumsum(inv_rel)
    stat_nrel = np.cumsum(inv_nrel)
    rel = np.cumsum(cnt_rel)
    nrel = np.cumsum(cnt_nrel)
    k = np.arange(1, depth + 1, dtype=float)
    est_rel = np.minimum(stat_rel, k - nrel)
    est_nrel = np.minimum(stat_nrel, k - rel)
    return est_rel / np.maximum(est_rel + est_nrel, 1.0)


def _curves_by_threshold(
    run: SpamAnnotatedRun, judgments: JudgmentSet, topics: Sequence[str],
    depth: int, grid: Sequence[int] = FULL_GRID,
) -> np.ndarray:
    """estP@k curves, shape (len(grid), len(topics), depth)."""
    curves = np.zeros((len(grid), len(topics), depth))
    for ti, t in enumerate(grid):
        filtered = filter_run(run, t)
        for si, topic in enumerate(topics):
            curves[ti, si] = _est_p_curve(
                filtered.doc_ids(topic), judgments, topic, depth
            )
    return curves


def optimize_thresholds(
    run: SpamAnnotatedRun, judgments: JudgmentSet, depth: int,
    topics: Optional[Sequence[str]] = None,
) -> ThresholdProfile:
    """Per rank position, the smallest t maximizing mean estP@k over topics."""
    topics = list(topics) if topics is not None else judgments.topics()
    if not topics:
        raise ValueError("no judged training topics")
    curves = _curves_by_threshold(run, judgments, topics, depth)
    mean_curve = curves.mean(axis=1)  # (101, depth)
    best = np.argmax(mean_curve, axis=0)  # smallest index on ties
    return ThresholdProfile([int(t) for t in best])


def rerank(run: SpamAnnotatedRun, profile: ThresholdProfile) -> RankedRun:
    """Greedy rebuild: position i takes the earliest unplaced document with
    percentile >= t_i, falling back to the earliest unplaced document when
    none qualifies.  The result is a permutation of the input list.
    """
    out = RankedRun(run_id=f"{run.run_id}.reranked")
    for topic, pairs in run.topics.items():
        remaining = list(pairs)
        ordered: List[RunEntry] = []
        for position in range(1, len(pairs) + 1):
            t = profile.at(position)
            pick = next(
                (i for i, (_, pct) in enumerate(remaining) if pct >= t), 0
            )
            ordered.append(remaining.pop(pick)[0])
        out.topics[topic] = [
            RunEntry(e.doc_id, e.score, rank) for rank, e in enumerate(ordered, 1)
        ]
    return out


@dataclass
class CrossValResult:
    reranked: RankedRun
    profiles: Dict[str, ThresholdProfile]
    original_metrics: Dict[str, Dict[str, float]]  # topic -> metric -> value
    reranked_metrics: Dict[str, Dict[str, float]]
    mean_original: Dict[str, float]
    mean_reranked: Dict[str, float]
    p_values: Dict[str, float]  # one-tailed sign test, rerank > original


def cross_validate(
    run: SpamAnnotatedRun, judgments: JudgmentSet, depth: int,
    ks: Sequence[int] = (10,), ap_depth: int = 1000,
) -> CrossValResult:
    """Leave-one-topic-out: learn thresholds on all other topics, rerank the
    held-out topic, and compare metrics against the original ranking.
    """
    topics = [t for t in judgments.topics() if t in run.topics]
    if len(topics) < 2:
        raise ValueError("cross-validation needs at least 2 judged topics")
    curves = _curves_by_threshold(run, judgments, topics, depth)

    reranked = RankedRun(run_id=f"{run.run_id}.reranked")
    profiles: Dict[str, ThresholdProfile] = {}
    orig_metrics: Dict[str, Dict[str, float]] = {}
    rr_metrics: Dict[str, Dict[str, float]] = {}

    for si, topic in enumerate(topics):
        # exact sum over the other topics, so the held-out topic's judgments
        # cannot perturb its own profile even through rounding
        others = [i for i in range(len(topics)) if i != si]
        held_out_mean = curves[:, others].mean(axis=1)
        profile = ThresholdProfile(
            [int(t) for t in np.argmax(held_out_mean, axis=0)]
        )
        profiles[topic] = profile
        single = SpamAnnotatedRun(run.run_id, {topic: run.topics[topic]})
        reranked.topics[topic] = rerank(single, profile).topics[topic]
        orig_metrics[topic] = _cv_metrics(
            [e.doc_id for e, _ in run.topics[topic]], judgments, topic, ks, ap_depth
        )
        rr_metrics[topic] = _cv_metrics(
            [e.doc_id for e in reranked.topics[topic]], judgments, topic, ks, ap_depth
        )

    names = list(next(iter(orig_metrics.values())).keys())
    mean_orig = {m: sum(orig_metrics[t][m] for t in topics) / len(topics) for m in names}
    mean_rr = {m: sum(rr_metrics[t][m] for t in topics) / len(topics) for m in names}
    p_values = {
        m: sign_test_p(rr_metrics[t][m] - orig_metrics[t][m] for t in topics)
        for m in names
    }
    return CrossValResult(
        reranked, profiles, orig_metrics, rr_metrics, mean_orig, mean_rr, p_values
    )


def _cv_metrics(docs, judgments, topic, ks, ap_depth) -> Dict[str, float]:
    values = {f"estP{k}": est_p(docs, judgments, topic, k) for k in ks}
    values["estRP"] = est_r_precision(docs, judgments, topic)
    ap_nrel, ap_elided = average_precision_variants(docs, judgments, topic, ap_depth)
    values["AP_unj_nrel"] = ap_nrel
    values["AP_unj_elided"] = ap_elided
    return values


@dataclass
class SweepRow:
    run_id: str
    series: str  # "filter" or "control"
    t: int
    mean_est_p10: float


def threshold_sweep(
    runs: Sequence[SpamAnnotatedRun], judgments: JudgmentSet,
    grid: Sequence[int] = DEFAULT_GRID, seed: int = 0,
) -> List[SweepRow]:
    """Mean estP@10 of each run, brick-wall filtered at each grid threshold,
    alongside a seeded random-deletion control series.
    """
    if not grid or any(not 0 <= t <= 100 for t in grid):
        raise ValueError("grid must be a non-empty subset of [0, 100]")
    rows: List[SweepRow] = []
    for run in runs:
        plain = RankedRun(run.run_id, {
            topic: [e for e, _ in pairs] for topic, pairs in run.topics.items()
        })
        for t in grid:
            rows.append(SweepRow(
                run.run_id, "filter", t,
                _mean_est_p10(filter_run(run, t), judgments),
            ))
        for t in grid:
            rows.append(SweepRow(
                run.run_id, "control", t,
                _mean_est_p10(random_control(plain, t, seed), judgments),
            ))
    return rows


def _mean_est_p10(run: RankedRun, judgments: JudgmentSet) -> float:
    topics = judgments.topics()
    return sum(
        est_p(run.doc_ids(topic), judgments, topic, 10) for topic in topics
    ) / len(topics)


def format_sweep(rows: Sequence[SweepRow]) -> str:
    lines = ["run_id\tseries\tt\tmean_estP10"]
    for row in rows:
        lines.append(
            f"{row.run_id}\t{row.series}\t{row.t}\t{row.mean_est_p10:.4f}"
        )
    return "\n".join(lines) + "\n"


def format_crossval(result: CrossValResult) -> str:
    names = list(result.mean_original.keys())
    lines = ["topic\tmetric\toriginal\treranked"]
    for topic in sorted(result.original_metrics):
        for name in names:
            lines.append(
                f"{topic}\t{name}\t{result.original_metrics[topic][name]:.4f}"
                f"\t{result.reranked_metrics[topic][name]:.4f}"
            )
    for name in names:
        lines.append(
            f"all\t{name}\t{result.mean_original[name]:.4f}"
            f"\t{result.mean_reranked[name]:.4f}"
        )
    for name in names:
        lines.append(f"pvalue\t{name}\t{result.p_values[name]:.6g}\t-")
    return "\n".join(lines) + "\n"
