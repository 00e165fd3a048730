"""Retrieval-run parsing and effectiveness measures for sparse judgments.

Implements the Horvitz-Thompson statrel/statnrel estimates and the measures
built on them (statPC@k, estP@k, estRP), the two P@k and AP conventions for
unjudged documents (count-as-nonrelevant vs elide), and Mann-Whitney AUC.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

log = logging.getLogger(__name__)

DEFAULT_DEPTH = 1000


@dataclass(frozen=True)
class RunEntry:
    doc_id: str
    score: float
    rank: int


@dataclass
class RankedRun:
    run_id: str = ""
    topics: Dict[str, List[RunEntry]] = field(default_factory=dict)

    def doc_ids(self, topic: str) -> List[str]:
        return [e.doc_id for e in self.topics.get(topic, [])]


@dataclass(frozen=True)
class Judgment:
    grade: int
    prob: float = 1.0  # inclusion probability, in (0, 1]

    @property
    def relevant(self) -> bool:
        return self.grade > 0


@dataclass
class JudgmentSet:
    # keyed (topic, doc_id)
    entries: Dict[Tuple[str, str], Judgment] = field(default_factory=dict)

    def topics(self) -> List[str]:
        return sorted({topic for topic, _ in self.entries})

    def get(self, topic: str, doc_id: str) -> Optional[Judgment]:
        return self.entries.get((topic, doc_id))

    def judged_relevant_count(self, topic: str) -> int:
        return sum(
            1 for (t, _), j in self.entries.items() if t == topic and j.relevant
        )


def parse_run(text: str, run_id: Optional[str] = None) -> RankedRun:
    """Parse TREC run lines "topic Q0 doc_id rank score tag".

    Topics are re-sorted by descending retrieval score (ties keep input
    order) and ranks are reassigned contiguously from 1.
    """
    raw: Dict[str, List[Tuple[str, float]]] = {}
    tag = run_id
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != 6:
            raise ValueError(f"run line {lineno}: expected 6 fields, got {len(parts)}")
        topic, _, doc_id, _, score, line_tag = parts
        try:
            value = float(score)
        except ValueError as exc:
            raise ValueError(f"run line {lineno}: bad score {score!r}") from exc
        tag = tag or line_tag
        raw.setdefault(topic, []).append((doc_id, value))
    run = RankedRun(run_id=tag or "")
    for topic, pairs in raw.items():
        seen = set()
        for doc_id, _ in pairs:
            if doc_id in seen:
                raise ValueError(f"topic {topic}: duplicate doc_id {doc_id!r}")
            seen.add(doc_id)
        ordered = sorted(
            enumerate(pairs), key=lambda item: (-item[1][1], item[0])
        )
        run.topics[topic] = [
            RunEntry(doc_id, score, rank)
            for rank, (_, (doc_id, score)) in enumerate(ordered, 1)
        ]
    return run


def format_run(run: RankedRun, tag: Optional[str] = None) -> str:
    tag = tag or run.run_id or "run"
    lines = []
    for topic in sorted(run.topics, key=_topic_key):
        for entry in run.topics[topic]:
            lines.append(
                f"{topic} Q0 {entry.doc_id} {entry.rank} {entry.score:.6g} {tag}"
            )
    return "\n".join(lines) + ("\n" if lines else "")


def _topic_key(topic: str):
    return (0, int(topic)) if topic.isdigit() else (1, topic)


def parse_judgments(text: str) -> JudgmentSet:
    """Parse qrels "topic 0 doc_id grade" or extended "topic doc_id grade prob".

    Duplicate (topic, doc_id) pairs are deduplicated last-wins with a warning.
    """
    judgments = JudgmentSet()
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != 4:
            raise ValueError(
                f"judgment line {lineno}: expected 4 fields, got {len(parts)}"
            )
        if parts[1] in ("0", "Q0"):
            topic, _, doc_id, grade = parts
            prob = 1.0
        else:
            topic, doc_id, grade, prob_text = parts
            prob = float(prob_text)
        if not 0.0 < prob <= 1.0:
            raise ValueError(
                f"judgment line {lineno}: inclusion probability {prob} not in (0, 1]"
            )
        key = (topic, doc_id)
        if key in judgments.entries:
            log.warning("judgment line %d: duplicate %s, keeping last", lineno, key)
        judgments.entries[key] = Judgment(grade=int(grade), prob=prob)
    return judgments


def format_judgments(judgments: JudgmentSet) -> str:
    lines = []
    for (topic, doc_id), j in sorted(judgments.entries.items()):
        if j.prob == 1.0:
            lines.append(f"{topic} 0 {doc_id} {j.grade}")
        else:
            lines.append(f"{topic} {doc_id} {j.grade} {j.prob:g}")
    return "\n".join(lines) + ("\n" if lines else "")


def statrel(
    docs: Sequence[str], judgments: JudgmentSet, topic: str, k: int
) -> Tuple[float, float, int, int]:
    """Horvitz-Thompson relevant/nonrelevant estimates over the top k.

    Returns (statrel_k, statnrel_k, rel_k, nrel_k); unjudged documents
    contribute to none of the four.
    """
    stat_rel = stat_nrel = 0.0
    rel = nrel = 0
    for doc_id in docs[:k]:
        j = judgments.get(topic, doc_id)
        if j is None:
            continue
        if j.relevant:
            stat_rel += 1.0 / j.prob
            rel += 1
        else:
            stat_nrel += 1.0 / j.prob
            nrel += 1
    return stat_rel, stat_nrel, rel, nrel


def stat_pc(docs: Sequence[str], judgments: JudgmentSet, topic: str, k: int) -> float:
    """statrel_k / k; may exceed 1 under sampled judging."""
    stat_rel, _, _, _ = statrel(docs, judgments, topic, k)
    return stat_rel / k


def est_p(docs: Sequence[str], judgments: JudgmentSet, topic: str, k: int) -> float:
    """Sparse set-based precision estimate; equals P@k under full judging."""
    stat_rel, stat_nrel, rel, nrel = statrel(docs, judgments, topic, k)
    est_rel = min(stat_rel, k - nrel)
    est_nrel = min(stat_nrel, k - rel)
    return est_rel / max(est_rel + est_nrel, 1.0)


def p_at_k_variants(
    docs: Sequence[str], judgments: JudgmentSet, topic: str, k: int
) -> Tuple[float, float]:
    """P@k with unjudged counted nonrelevant, and with unjudged elided."""
    relevant = 0
    for doc_id in docs[:k]:
        j = judgments.get(topic, doc_id)
        if j is not None and j.relevant:
            relevant += 1
    judged_docs = [d for d in docs if judgments.get(topic, d) is not None]
    elided_relevant = sum(
        1 for d in judged_docs[:k] if judgments.get(topic, d).relevant
    )
    return relevant / k, elided_relevant / k


def average_precision_variants(
    docs: Sequence[str], judgments: JudgmentSet, topic: str,
    depth: int = DEFAULT_DEPTH,
) -> Tuple[float, float]:
    """AP with unjudged counted nonrelevant, and with unjudged elided.

    R is the count of judged-relevant documents for the topic (judged
    anywhere, not only retrieved).
    """
    total_relevant = judgments.judged_relevant_count(topic)
    if total_relevant == 0:
        log.warning("topic %s has no judged-relevant documents; AP = 0", topic)
        return 0.0, 0.0

    def ap(ranking: Sequence[str]) -> float:
        found = 0
        acc = 0.0
        for pos, doc_id in enumerate(ranking[:depth], 1):
            j = judgments.get(topic, doc_id)
            if j is not None and j.relevant:
                found += 1
                acc += found / pos
        return acc / total_relevant

    elided = [d for d in docs if judgments.get(topic, d) is not None]
    return ap(docs), ap(elided)


def est_r_precision(docs: Sequence[str], judgments: JudgmentSet, topic: str) -> float:
    """estRP = estP at the estimated number of relevant documents."""
    est_r = 0.0
    for (t, _), j in judgments.entries.items():
        if t == topic and j.relevant:
            est_r += 1.0 / j.prob
    rounded = round(est_r)
    if rounded < 1:
        if est_r == 0.0:
            log.warning("topic %s: no judged-relevant documents; estRP = 0", topic)
            return 0.0
        rounded = 1
    return est_p(docs, judgments, topic, int(rounded))


def roc_auc(pairs: Iterable[Tuple[float, bool]]) -> float:
    """Mann-Whitney AUC with ties counting one half.

    ``pairs`` is (score, is_positive).  Computed via tied midranks, so the
    value equals the probability that a random positive outscores a random
    negative.
    """
    data = sorted(pairs, key=lambda p: p[0])
    n_pos = sum(1 for _, positive in data if positive)
    n_neg = len(data) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC requires at least one positive and one negative")
    rank_sum = 0.0
    i = 0
    while i < len(data):
        j = i
        while j < len(data) and data[j][0] == data[i][0]:
            j += 1
        midrank = (i + 1 + j) / 2.0  # average of ranks i+1 .. j
        rank_sum += midrank * sum(1 for k in range(i, j) if data[k][1])
        i = j
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


METRIC_NAMES = (
    "estP10", "statPC10", "P10_unj_nrel", "P10_unj_elided",
    "estRP", "AP_unj_nrel", "AP_unj_elided",
)


def topic_metrics(
    docs: Sequence[str], judgments: JudgmentSet, topic: str,
    ks: Sequence[int] = (10,), depth: int = DEFAULT_DEPTH,
) -> Dict[str, float]:
    values: Dict[str, float] = {}
    for k in ks:
        values[f"estP{k}"] = est_p(docs, judgments, topic, k)
        values[f"statPC{k}"] = stat_pc(docs, judgments, topic, k)
        nrel_var, elided_var = p_at_k_variants(docs, judgments, topic, k)
        values[f"P{k}_unj_nrel"] = nrel_var
        values[f"P{k}_unj_elided"] = elided_var
    values["estRP"] = est_r_precision(docs, judgments, topic)
    ap_nrel, ap_elided = average_precision_variants(docs, judgments, topic, depth)
    values["AP_unj_nrel"] = ap_nrel
    values["AP_unj_elided"] = ap_elided
    return values


def evaluate_run(
    run: RankedRun, judgments: JudgmentSet,
    ks: Sequence[int] = (10,), depth: int = DEFAULT_DEPTH,
) -> Dict[str, Dict[str, float]]:
    """Per-topic metrics plus the mean over judged topics (key "all").

    Topics absent from the judgments are excluded from the means; judged
    topics missing from the run score 0.
    """
    report: Dict[str, Dict[str, float]] = {}
    topics = judgments.topics()
    if not topics:
        raise ValueError("no judged topics")
    for topic in topics:
        docs = run.doc_ids(topic)
        report[topic] = topic_metrics(docs, judgments, topic, ks=ks, depth=depth)
    metric_names = list(next(iter(report.values())).keys())
    report["all"] = {
        name: sum(report[t][name] for t in topics) / len(topics)
        for name in metric_names
    }
    return report


def format_report(run_id: str, report: Dict[str, Dict[str, float]]) -> str:
    """Tab-separated "run_id metric topic value" rows in stable order."""
    lines = []
    topics = sorted((t for t in report if t != "all"), key=_topic_key)
    metric_names = list(report[topics[0]].keys()) if topics else []
    for name in metric_names:
        for topic in topics:
            lines.append(f"{run_id}\t{name}\t{topic}\t{report[topic][name]:.4f}")
        lines.append(f"{run_id}\t{name}\tall\t{report['all'][name]:.4f}")
    return "\n".join(lines) + ("\n" if lines else "")


def sign_test_p(differences: Iterable[float]) -> float:
    """One-tailed paired sign test: P[#positives >= observed | fair coin].

    Zero differences are dropped.  Returns 1.0 when nothing differs.
    """
    nonzero = [d for d in differences if d != 0.0]
    n = len(nonzero)
    if n == 0:
        return 1.0
    positives = sum(1 for d in nonzero if d > 0)
    return sum(math.comb(n, i) for i in range(positives, n + 1)) / 2.0 ** n
