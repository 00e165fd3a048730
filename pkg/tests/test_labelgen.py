import random
from collections import Counter

import pytest

from webspam.corpus import build_record
from webspam.labelgen import (
    directory_nonspam_labels,
    honeypot_spam_labels,
    import_manual_labels,
    normalize_url,
    read_corpus_index,
    read_host_labels,
    resolve_conflicts,
    select_host_examples,
)
from webspam.treceval import parse_run


def page_for_host(doc_id, host, size):
    return build_record(
        doc_id, b"x" * size, target_uri=f"http://{host}/index.html"
    )


class TestNormalizeUrl:
    def test_lowercases_scheme_and_host(self):
        assert normalize_url("HTTP://Example.COM/Path?q=1#frag") == \
            "http://example.com/Path?q=1"

    def test_keeps_query(self):
        assert normalize_url("http://a.com/p?x=Y") == "http://a.com/p?x=Y"


class TestSelectHostExamples:
    def test_first_qualifying_page(self):
        pages = [
            page_for_host("p1", "spammy.com", 3000),
            page_for_host("p2", "spammy.com", 6000),
            page_for_host("p3", "spammy.com", 9000),
        ]
        examples = select_host_examples({"spammy.com": "spam"}, pages)
        assert [(e.doc_id, e.label) for e in examples] == [("p2", "spam")]

    def test_host_with_only_small_pages_absent(self):
        pages = [page_for_host("p1", "tiny.com", 100)]
        assert select_host_examples({"tiny.com": "nonspam"}, pages) == []

    def test_at_most_one_example_per_host(self):
        pages = [page_for_host(f"p{i}", "big.com", 8000) for i in range(5)]
        examples = select_host_examples({"big.com": "spam"}, pages)
        assert len(examples) == 1

    def test_matches_brute_force_scan(self):
        rng = random.Random(0)
        hosts = {f"host{i}.com": rng.choice(["spam", "nonspam"]) for i in range(10)}
        pages = []
        for i in range(200):
            host = f"host{rng.randrange(12)}.com"
            pages.append(page_for_host(f"p{i}", host, rng.randrange(10000)))
        expected = {}
        for page in pages:
            host = page.headers["warc-target-uri"].split("//")[1].split("/")[0]
            if host in hosts and host not in expected and len(page.data) >= 5000:
                expected[host] = (page.doc_id, hosts[host])
        examples = select_host_examples(hosts, pages)
        assert {(e.doc_id, e.label) for e in examples} == set(expected.values())
        assert all(e.source == "uk2006" for e in examples)


def make_run(topics):
    lines = []
    for topic, docs in topics.items():
        for rank, doc in enumerate(docs, 1):
            lines.append(f"{topic} Q0 {doc} {rank} {1000 - rank} tag")
    return parse_run("\n".join(lines) + "\n")


class TestHoneypot:
    def test_no_overlap_counts(self):
        run = make_run({
            str(t): [f"t{t}doc{i}" for i in range(10)] for t in range(100)
        })
        labels = honeypot_spam_labels(run)
        assert len(labels) == 1000
        assert all(label == "spam" for _, label in labels)

    def test_shared_doc_deduplicated(self):
        run = make_run({"1": ["shared", "a"], "2": ["shared", "b"]})
        labels = honeypot_spam_labels(run, top_n=2)
        assert Counter(d for d, _ in labels)["shared"] == 1

    def test_short_topic_takes_all(self, caplog):
        run = make_run({"1": ["only1", "only2"]})
        with caplog.at_level("WARNING"):
            labels = honeypot_spam_labels(run, top_n=10)
        assert len(labels) == 2
        assert "only 2 results" in caplog.text

    def test_matches_enumeration_oracle(self):
        rng = random.Random(1)
        topics = {
            str(t): [f"doc{rng.randrange(300)}" for _ in range(15)]
            for t in range(20)
        }
        # parse_run forbids duplicate docs within a topic
        topics = {t: list(dict.fromkeys(docs)) for t, docs in topics.items()}
        run = make_run(topics)
        labels = honeypot_spam_labels(run, top_n=5)
        expected = set()
        for t in sorted(topics, key=int):
            expected.update(topics[t][:5])
        assert {d for d, _ in labels} == expected


class TestDirectoryLabels:
    def test_small_intersection_returns_all(self):
        index = {f"http://site{i}.com/": f"doc{i}" for i in range(5)}
        urls = list(index) + ["http://absent.com/"]
        labels = directory_nonspam_labels(urls, index, sample=10000, seed=1)
        assert {d for d, _ in labels} == {f"doc{i}" for i in range(5)}
        assert all(label == "nonspam" for _, label in labels)

    def test_seed_determinism(self):
        index = {f"http://site{i}.com/": f"doc{i}" for i in range(100)}
        urls = list(index)
        a = directory_nonspam_labels(urls, index, sample=10, seed=42)
        b = directory_nonspam_labels(urls, index, sample=10, seed=42)
        assert a == b

    def test_empty_intersection_rejected(self):
        with pytest.raises(ValueError, match="intersect"):
            directory_nonspam_labels(
                ["http://absent.com/"], {"http://there.com/": "d"}
            )

    def test_sampling_roughly_uniform(self):
        index = {f"http://site{i}.com/": f"doc{i}" for i in range(20)}
        urls = list(index)
        counts = Counter()
        trials = 400
        for seed in range(trials):
            for doc, _ in directory_nonspam_labels(urls, index, sample=5, seed=seed):
                counts[doc] += 1
        expected = trials * 5 / 20
        chi2 = sum((counts[f"doc{i}"] - expected) ** 2 / expected for i in range(20))
        assert chi2 < 50  # chi-square(19) 0.9999 quantile is ~52.4

    def test_normalization_applied_to_both_sides(self):
        index = {"HTTP://Site.COM/a#x": "docA"}
        labels = directory_nonspam_labels(["http://site.com/a"], index)
        assert labels == [("docA", "nonspam")]


class TestResolveConflicts:
    def test_conflicting_doc_dropped_from_both(self, caplog):
        with caplog.at_level("WARNING"):
            merged = resolve_conflicts(
                [("x", "spam"), ("a", "spam")], [("x", "nonspam"), ("b", "nonspam")]
            )
        assert merged == [("a", "spam"), ("b", "nonspam")]
        assert "both" in caplog.text


LOG_LINE = "{ts}\t{task}\t{doc}\t{who}\t{label}\t{ms}\n"


def log_lines(rows):
    return [
        LOG_LINE.format(ts=1000.0 + i, task=t, doc=d, who=w, label=label, ms=500)
        for i, (t, d, w, label) in enumerate(rows)
    ]


class TestImportManualLabels:
    def test_unknown_dropped(self):
        lines = log_lines([
            ("t1", "d1", "a", "spam"),
            ("t2", "d2", "a", "nonspam"),
            ("t3", "d3", "a", "unknown"),
        ])
        labels = import_manual_labels(lines)
        assert [(r.doc_id, r.label) for r in labels] == [
            ("d1", "spam"), ("d2", "nonspam")
        ]

    def test_empty_input(self):
        assert import_manual_labels([]) == []

    def test_duplicate_task_last_wins(self):
        lines = log_lines([
            ("t1", "d1", "a", "spam"),
            ("t1", "d1", "a", "nonspam"),
        ])
        labels = import_manual_labels(lines)
        assert [(r.doc_id, r.label) for r in labels] == [("d1", "nonspam")]

    def test_malformed_record_reports_line(self):
        with pytest.raises(ValueError, match="line 1"):
            import_manual_labels(["garbage without tabs\n"])

    def test_bad_label_rejected(self):
        lines = log_lines([("t1", "d1", "a", "maybe")])
        with pytest.raises(ValueError, match="label"):
            import_manual_labels(lines)

    def test_756_record_fixture(self):
        rng = random.Random(2)
        rows = []
        unknown = 0
        for i in range(756):
            label = rng.choice(["spam", "spam", "nonspam", "unknown"])
            unknown += label == "unknown"
            rows.append((f"t{i}", f"d{i}", "groupx", label))
        labels = import_manual_labels(log_lines(rows))
        assert len(labels) == 756 - unknown


class TestFileReaders:
    def test_host_labels(self, tmp_path):
        path = tmp_path / "hosts.txt"
        path.write_text("Example.com spam\nother.org nonspam\n")
        labels = read_host_labels(path)
        assert labels == {"example.com": "spam", "other.org": "nonspam"}

    def test_duplicate_host_rejected(self, tmp_path):
        path = tmp_path / "hosts.txt"
        path.write_text("a.com spam\nA.COM nonspam\n")
        with pytest.raises(ValueError, match="duplicate"):
            read_host_labels(path)

    def test_corpus_index(self, tmp_path):
        path = tmp_path / "index.tsv"
        path.write_text("http://a.com/\tdocA\n")
        assert read_corpus_index(path) == {"http://a.com/": "docA"}
