"""Streaming WARC ingestion.

Yields one record per response-type WARC entry, carrying the verbatim record
bytes (WARC header block plus content, which for responses includes the HTTP
header and body).  Both WARC 0.18 and 1.0 are accepted, plain or gzipped
(whole-file or one gzip member per record -- the gzip reader consumes
concatenated members transparently).
"""

from __future__ import annotations

import gzip
import io
import logging
import uuid
from dataclasses import dataclass, field
from typing import Dict, Iterable, Iterator, Optional

log = logging.getLogger(__name__)

_GZIP_MAGIC = b"\x1f\x8b"
_RESPONSE_TYPES = {"response"}
_TREC_ID_HEADERS = ("warc-trec-id", "trec-id")


class WarcFormatError(ValueError):
    """Unrecoverable stream corruption, with the offset where it was seen."""

    def __init__(self, message: str, source: str, offset: int):
        super().__init__(f"{source}: {message} (at offset {offset})")
        self.offset = offset


@dataclass
class PageRecord:
    doc_id: str
    data: bytes  # verbatim record: WARC header block + content
    source_file: str = ""
    offset: int = 0
    headers: Dict[str, str] = field(default_factory=dict)  # lowercased names

    @property
    def content(self) -> bytes:
        """The record's content block (after the WARC header)."""
        split = self.data.find(b"\r\n\r\n")
        return self.data[split + 4:] if split >= 0 else b""


@dataclass
class CorpusStats:
    pages: int = 0
    bytes_read: int = 0
    malformed_records: int = 0
    skipped_records: int = 0


class _LineReader:
    """Buffered reader tracking the offset in the (decompressed) stream."""

    def __init__(self, raw: io.BufferedIOBase):
        self.raw = raw
        self.offset = 0

    def readline(self) -> bytes:
        line = self.raw.readline()
        self.offset += len(line)
        return line

    def read(self, n: int) -> bytes:
        chunks = []
        remaining = n
        while remaining > 0:
            chunk = self.raw.read(remaining)
            if not chunk:
                break
            chunks.append(chunk)
            remaining -= len(chunk)
        data = b"".join(chunks)
        self.offset += len(data)
        return data


def stream_warc(
    source, stats: Optional[CorpusStats] = None, source_name: Optional[str] = None
) -> Iterator[PageRecord]:
    """Yield PageRecords for the response records of a WARC archive.

    ``source`` is a path or a binary file object.  Memory use is bounded by
    the largest single record.  Malformed records are skipped and counted;
    corruption that prevents finding the next record raises WarcFormatError.
    """
    if stats is None:
        stats = CorpusStats()
    own = False
    if isinstance(source, (str, bytes)) or hasattr(source, "__fspath__"):
        name = source_name or str(source)
        fh = open(source, "rb")
        own = True
    else:
        name = source_name or getattr(source, "name", "<stream>")
        fh = source
    try:
        head = fh.peek(2)[:2] if hasattr(fh, "peek") else b""
        if not head:
            pos = fh.tell()
            head = fh.read(2)
            fh.seek(pos)
        if head == _GZIP_MAGIC:
            fh = gzip.GzipFile(fileobj=fh)
        reader = _LineReader(fh)
        yield from _parse_records(reader, name, stats)
    finally:
        if own:
            fh.close()


def _parse_records(
    reader: _LineReader, name: str, stats: CorpusStats
) -> Iterator[PageRecord]:
    line = reader.readline()
    while line:
        if line.strip() == b"":
            line = reader.readline()
            continue
        if not line.startswith(b"WARC/"):
            # Lost framing: resync at the next WARC version line.
            stats.malformed_records += 1
            start = reader.offset - len(line)
            while line and not line.startswith(b"WARC/"):
                line = reader.readline()
            if not line:
                raise WarcFormatError("cannot resync to a record boundary", name, start)
            continue
        record_offset = reader.offset - len(line)
        record, ok = _parse_one(reader, line, name, record_offset)
        if not ok:
            stats.malformed_records += 1
            line = reader.readline()
            continue
        stats.bytes_read += len(record.data)
        rtype = record.headers.get("warc-type", "").lower()
        if rtype in _RESPONSE_TYPES:
            stats.pages += 1
            yield record
        else:
            stats.skipped_records += 1
        line = reader.readline()


def _parse_one(reader, version_line: bytes, name: str, offset: int):
    parts = [version_line]
    headers: Dict[str, str] = {}
    while True:
        line = reader.readline()
        if not line:
            return None, False  # EOF inside header block
        parts.append(line)
        stripped = line.rstrip(b"\r\n")
        if stripped == b"":
            break
        if b":" not in stripped:
            log.warning("%s: malformed header line at offset %d", name, offset)
            return None, False
        key, _, value = stripped.partition(b":")
        headers[key.strip().decode("ascii", "replace").lower()] = (
            value.strip().decode("utf-8", "replace")
        )
    try:
        length = int(headers["content-length"])
    except (KeyError, ValueError):
        log.warning("%s: record at offset %d lacks a valid Content-Length", name, offset)
        return None, False
    content = reader.read(length)
    if len(content) < length:
        return None, False  # truncated content
    parts.append(content)
    doc_id = next(
        (headers[h] for h in _TREC_ID_HEADERS if headers.get(h)), None
    ) or f"{name}:{offset}"
    record = PageRecord(
        doc_id=doc_id,
        data=b"".join(parts),
        source_file=name,
        offset=offset,
        headers=headers,
    )
    return record, True


def build_record(
    doc_id: str, payload: bytes, warc_type: str = "response",
    target_uri: Optional[str] = None,
) -> PageRecord:
    """Synthesize a full WARC 1.0 record around a content payload."""
    headers = [
        b"WARC/1.0",
        b"WARC-Type: " + warc_type.encode("ascii"),
        b"WARC-Record-ID: <urn:uuid:" + uuid.uuid5(
            uuid.NAMESPACE_URL, doc_id
        ).hex.encode("ascii") + b">",
        b"WARC-TREC-ID: " + doc_id.encode("ascii"),
    ]
    if target_uri:
        headers.append(b"WARC-Target-URI: " + target_uri.encode("ascii"))
    headers.append(b"Content-Length: " + str(len(payload)).encode("ascii"))
    data = b"\r\n".join(headers) + b"\r\n\r\n" + payload
    parsed = {
        h.split(b":", 1)[0].decode().lower(): h.split(b":", 1)[1].strip().decode()
        for h in headers[1:]
    }
    return PageRecord(doc_id=doc_id, data=data, headers=parsed)


def write_warc(
    records: Iterable[PageRecord], path, gzip_per_record: bool = False
) -> None:
    """Write records verbatim to a WARC archive (test fixture writer)."""
    seen = set()
    with open(path, "wb") as fh:
        for record in records:
            if record.doc_id in seen:
                raise ValueError(f"duplicate doc_id {record.doc_id!r}")
            seen.add(record.doc_id)
            blob = record.data + b"\r\n\r\n"
            if gzip_per_record:
                blob = gzip.compress(blob)
            fh.write(blob)
