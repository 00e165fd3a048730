"""Training-example generators.

Three sources feed the classifier: host-level transfer labels (one
representative page per labeled host), automatic honeypot labels (top
results of popular queries labeled spam, directory-listed URLs labeled
nonspam), and manual adjudication imports.
"""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Set, Tuple
from urllib.parse import urlsplit, urlunsplit

from webspam.classifier import NONSPAM, SPAM, TrainingExample
from webspam.corpus import PageRecord
from webspam.treceval import RankedRun

log = logging.getLogger(__name__)

DEFAULT_MIN_PAGE_SIZE = 5000
DEFAULT_HONEYPOT_TOP_N = 10
DEFAULT_DIRECTORY_SAMPLE = 10000


@dataclass(frozen=True)
class ManualLabel:
    doc_id: str
    label: str  # spam / nonspam / unknown


def normalize_url(url: str) -> str:
    """Lowercase scheme and host, strip the fragment, keep the query."""
    parts = urlsplit(url.strip())
    return urlunsplit(
        (parts.scheme.lower(), parts.netloc.lower(), parts.path, parts.query, "")
    )


def host_of(record: PageRecord) -> Optional[str]:
    uri = record.headers.get("warc-target-uri")
    if not uri:
        return None
    host = urlsplit(uri).hostname
    return host.lower() if host else None


def select_host_examples(
    labels: Dict[str, str], pages: Iterable[PageRecord],
    min_size: int = DEFAULT_MIN_PAGE_SIZE,
) -> List[TrainingExample]:
    """First page of each labeled host with at least min_size bytes.

    Hosts with no qualifying page are silently absent.
    """
    pending = {host.lower(): label for host, label in labels.items()}
    examples = []
    for record in pages:
        if not pending:
            break
        host = host_of(record)
        if host is None or host not in pending:
            continue
        if len(record.data) < min_size:
            continue
        examples.append(
            TrainingExample(record.doc_id, record.data, pending.pop(host), "uk2006")
        )
    return examples


def honeypot_spam_labels(
    run: RankedRun, top_n: int = DEFAULT_HONEYPOT_TOP_N
) -> List[Tuple[str, str]]:
    """Label the top results of every honeypot topic as spam.

    Returns (doc_id, label) pairs; duplicates across topics keep the first
    occurrence only.
    """
    seen: Set[str] = set()
    labels = []
    for topic in sorted(run.topics, key=_topic_sort_key):
        entries = run.topics[topic]
        if len(entries) < top_n:
            log.warning(
                "honeypot topic %s has only %d results (wanted %d)",
                topic, len(entries), top_n,
            )
        for entry in entries[:top_n]:
            if entry.doc_id in seen:
                continue
            seen.add(entry.doc_id)
            labels.append((entry.doc_id, SPAM))
    return labels


def _topic_sort_key(topic: str):
    return (0, int(topic)) if topic.isdigit() else (1, topic)


def directory_nonspam_labels(
    directory_urls: Iterable[str], corpus_index: Dict[str, str],
    sample: int = DEFAULT_DIRECTORY_SAMPLE, seed: int = 0,
) -> List[Tuple[str, str]]:
    """Intersect directory URLs with the corpus and sample nonspam labels."""
    normalized_index = {normalize_url(u): d for u, d in corpus_index.items()}
    hits = sorted(
        {
            normalized_index[normalize_url(url)]
            for url in directory_urls
            if normalize_url(url) in normalized_index
        }
    )
    if not hits:
        raise ValueError("directory URLs do not intersect the corpus")
    if len(hits) > sample:
        hits = sorted(random.Random(seed).sample(hits, sample))
    return [(doc_id, NONSPAM) for doc_id in hits]


def resolve_conflicts(
    spam: Sequence[Tuple[str, str]], nonspam: Sequence[Tuple[str, str]]
) -> List[Tuple[str, str]]:
    """Drop documents labeled both ways; contradictions are pure noise."""
    spam_ids = {d for d, _ in spam}
    nonspam_ids = {d for d, _ in nonspam}
    both = spam_ids & nonspam_ids
    for doc_id in sorted(both):
        log.warning("doc %s labeled both spam and nonspam; dropping", doc_id)
    return [
        (d, label) for d, label in list(spam) + list(nonspam) if d not in both
    ]


def import_manual_labels(lines: Iterable[str]) -> List[ManualLabel]:
    """Import adjudication-log records, dropping "unknown" judgments.

    Log lines are tab-separated, timestamp first:
    timestamp, task_id, doc_id, assessor, label, elapsed_ms.
    Duplicate (task_id, assessor) pairs are effective-last-wins.
    """
    effective: Dict[Tuple[str, str], ManualLabel] = {}
    order: List[Tuple[str, str]] = []
    for lineno, line in enumerate(lines, 1):
        line = line.rstrip("\n")
        if not line:
            continue
        parts = line.split("\t")
        if len(parts) != 6:
            raise ValueError(f"adjudication record line {lineno}: expected 6 fields")
        _, task_id, doc_id, assessor, label, _ = parts
        if label not in (SPAM, NONSPAM, "unknown"):
            raise ValueError(f"adjudication record line {lineno}: bad label {label!r}")
        key = (task_id, assessor)
        if key not in effective:
            order.append(key)
        effective[key] = ManualLabel(doc_id, label)
    return [
        effective[key] for key in order if effective[key].label != "unknown"
    ]


def materialize(
    labels: Iterable[Tuple[str, str]], resolver: Callable[[str], bytes],
    source: str,
) -> List[TrainingExample]:
    """Join (doc_id, label) pairs with page bytes from a resolver."""
    return [
        TrainingExample(doc_id, resolver(doc_id), label, source)
        for doc_id, label in labels
    ]


def read_host_labels(path) -> Dict[str, str]:
    """"<host> <spam|nonspam>" per line; hosts lowercased, duplicates rejected."""
    labels: Dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.split()
            if not parts:
                continue
            if len(parts) != 2 or parts[1] not in (SPAM, NONSPAM):
                raise ValueError(f"{path}:{lineno}: expected '<host> <spam|nonspam>'")
            host = parts[0].lower()
            if host in labels:
                raise ValueError(f"{path}:{lineno}: duplicate host {host!r}")
            labels[host] = parts[1]
    return labels


def read_url_list(path) -> List[str]:
    with open(path, encoding="utf-8") as fh:
        return [line.strip() for line in fh if line.strip()]


def read_corpus_index(path) -> Dict[str, str]:
    """"<url>\\t<doc_id>" per line."""
    index: Dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise ValueError(f"{path}:{lineno}: expected '<url>\\t<doc_id>'")
            index[parts[0]] = parts[1]
    return index
