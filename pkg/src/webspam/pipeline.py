"""Corpus scoring, percentile ranking, and log-odds score fusion.

Percentiles follow the published convention: percentile(p) is
floor(100 * |{p' : score(p') >= score(p)}| / N), so the spammiest documents
(highest log-odds) get the lowest percentiles and the set {percentile < t}
is the spammiest t% of the corpus.
"""

from __future__ import annotations

import heapq
import os
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np

from webspam.classifier import WeightVector, spamminess
from webspam.corpus import PageRecord


@dataclass
class ScoreTable:
    entries: Dict[str, float] = field(default_factory=dict)
    model_id: str = ""


@dataclass
class PercentileTable:
    entries: Dict[str, int] = field(default_factory=dict)
    corpus_size: int = 0


def score_corpus(
    w: WeightVector, pages: Iterable[PageRecord], model_id: str = "",
    workers: int = 1, chunk_size: int = 256,
) -> ScoreTable:
    """Score every page; parallel execution yields the identical table."""
    table = ScoreTable(model_id=model_id)

    def add(doc_id: str, score: float):
        if doc_id in table.entries:
            raise ValueError(f"duplicate doc_id {doc_id!r} in corpus stream")
        table.entries[doc_id] = score

    if workers <= 1:
        for page in pages:
            add(page.doc_id, spamminess(w, page.data))
        return table

    # Read-only weights are safe to share; chunk to keep ordering cheap.
    def score_chunk(chunk: List[PageRecord]):
        return [(p.doc_id, spamminess(w, p.data)) for p in chunk]

    with ThreadPoolExecutor(max_workers=workers) as pool:
        for result in pool.map(score_chunk, _chunks(pages, chunk_size)):
            for doc_id, score in result:
                add(doc_id, score)
    return table


def _chunks(items: Iterable, size: int):
    chunk = []
    for item in items:
        chunk.append(item)
        if len(chunk) >= size:
            yield chunk
            chunk = []
    if chunk:
        yield chunk


def percentile_rank(
    table: ScoreTable, max_in_memory: Optional[int] = None
) -> PercentileTable:
    """Assign each document its integer percentile rank in [0, 100]."""
    n = len(table.entries)
    if n == 0:
        raise ValueError("cannot rank an empty score table")
    if max_in_memory is not None and n > max_in_memory:
        ge_counts = _ge_counts_external(table.entries, max_in_memory)
    else:
        scores = np.fromiter(table.entries.values(), dtype=np.float64, count=n)
        asc = np.sort(scores)
        # count of scores >= s, per document
        ge = n - np.searchsorted(asc, scores, side="left")
        ge_counts = dict(zip(table.entries.keys(), ge.tolist()))
    entries = {
        doc_id: (100 * count) // n for doc_id, count in ge_counts.items()
    }
    return PercentileTable(entries=entries, corpus_size=n)


def _ge_counts_external(entries: Dict[str, float], chunk_limit: int) -> Dict[str, int]:
    """Chunked external merge sort of (-score, doc_id) pairs on disk."""
    chunk_limit = max(chunk_limit, 2)
    paths = []
    items = list(entries.items())
    tmpdir = tempfile.mkdtemp(prefix="webspam-extsort-")
    try:
        for start in range(0, len(items), chunk_limit):
            chunk = sorted(
                ((-score, doc_id) for doc_id, score in items[start:start + chunk_limit])
            )
            path = os.path.join(tmpdir, f"chunk{start}.tsv")
            with open(path, "w", encoding="utf-8") as fh:
                for neg, doc_id in chunk:
                    fh.write(f"{neg!r}\t{doc_id}\n")
            paths.append(path)

        def read_sorted(path):
            with open(path, encoding="utf-8") as fh:
                for line in fh:
                    neg, doc_id = line.rstrip("\n").split("\t")
                    yield float(neg), doc_id

        counts: Dict[str, int] = {}
        group: List[str] = []
        group_score = None
        seen = 0
        for neg, doc_id in heapq.merge(*(read_sorted(p) for p in paths)):
            if group and neg != group_score:
                for gid in group:
                    counts[gid] = seen
                group = []
            group_score = neg
            group.append(doc_id)
            seen += 1
        for gid in group:
            counts[gid] = seen
        return counts
    finally:
        for path in paths:
            os.unlink(path)
        os.rmdir(tmpdir)


def fuse(tables: Sequence[ScoreTable]) -> ScoreTable:
    """Average log-odds scores across classifiers (naive Bayes combination)."""
    if len(tables) < 2:
        raise ValueError("fusion needs at least two score tables")
    base = set(tables[0].entries)
    for other in tables[1:]:
        ids = set(other.entries)
        if ids != base:
            sample = sorted((base ^ ids))[:5]
            raise ValueError(f"doc_id sets differ between tables, e.g. {sample}")
    fused = ScoreTable(model_id="+".join(t.model_id or "?" for t in tables))
    for doc_id in tables[0].entries:
        fused.entries[doc_id] = sum(t.entries[doc_id] for t in tables) / len(tables)
    return fused


def write_scores(table: ScoreTable, path) -> None:
    """One "<doc_id> <score>" line per document, sorted by doc_id."""
    with open(path, "w", encoding="utf-8") as fh:
        for doc_id in sorted(table.entries):
            fh.write(f"{doc_id} {table.entries[doc_id]:.6g}\n")


def read_scores(path, model_id: str = "") -> ScoreTable:
    table = ScoreTable(model_id=model_id)
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.split()
            if not parts:
                continue
            if len(parts) != 2:
                raise ValueError(f"{path}:{lineno}: expected '<doc_id> <score>'")
            doc_id, score = parts
            if doc_id in table.entries:
                raise ValueError(f"{path}:{lineno}: duplicate doc_id {doc_id!r}")
            table.entries[doc_id] = float(score)
    return table


def write_percentiles(table: PercentileTable, path) -> None:
    """One "<percentile> <doc_id>" line per document, sorted by doc_id."""
    with open(path, "w", encoding="utf-8") as fh:
        for doc_id in sorted(table.entries):
            fh.write(f"{table.entries[doc_id]} {doc_id}\n")


def read_percentiles(path) -> PercentileTable:
    table = PercentileTable()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.split()
            if not parts:
                continue
            if len(parts) != 2:
                raise ValueError(f"{path}:{lineno}: expected '<percentile> <doc_id>'")
            pct, doc_id = parts
            value = int(pct)
            if not 0 <= value <= 100:
                raise ValueError(f"{path}:{lineno}: percentile {value} out of range")
            table.entries[doc_id] = value
    table.corpus_size = len(table.entries)
    return table
