"""Append-only event log: length-prefixed JSON records with a rolling hash.

Each entry on disk is ``<byte length>\\n<body>\\n`` where the body is the
canonical JSON of {"record": ..., "prev": ..., "hash": ...}. The hash of a
record is sha256(prev_hash + canonical(record)), so any truncation,
reordering, or edit breaks the chain and reading fails with
CorruptLogError.
"""

from __future__ import annotations

import hashlib
import json
import os

from ..errors import CorruptLogError


def canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def chain_hash(prev_hash: str, record) -> str:
    return hashlib.sha256((prev_hash + canonical(record)).encode("utf-8")).hexdigest()


class EventLog:
    """One session's event file."""

    def __init__(self, path):
        self.path = path
        self.tip = ""
        self.count = 0

    def append(self, record) -> str:
        h = chain_hash(self.tip, record)
        body = canonical({"record": record, "prev": self.tip, "hash": h}).encode("utf-8")
        os.makedirs(os.path.dirname(self.path), exist_ok=True)
        with open(self.path, "ab") as fh:
            fh.write(str(len(body)).encode("ascii") + b"\n")
            fh.write(body + b"\n")
        self.tip = h
        self.count += 1
        return h

    def read_all(self) -> list[dict]:
        """Replay the framing and the hash chain; returns the records."""
        records = []
        prev = ""
        with open(self.path, "rb") as fh:
            while True:
                header = fh.readline()
                if not header:
                    break
                try:
                    length = int(header.strip())
                except ValueError:
                    raise CorruptLogError(f"{self.path}: bad length prefix {header!r}")
                body = fh.read(length)
                if len(body) != length:
                    raise CorruptLogError(f"{self.path}: truncated record")
                if fh.read(1) != b"\n":
                    raise CorruptLogError(f"{self.path}: missing record terminator")
                try:
                    entry = json.loads(body.decode("utf-8"))
                except (UnicodeDecodeError, json.JSONDecodeError):
                    raise CorruptLogError(f"{self.path}: undecodable record")
                record = entry.get("record")
                if entry.get("prev") != prev or entry.get("hash") != chain_hash(prev, record):
                    raise CorruptLogError(f"{self.path}: hash chain broken at record {len(records)}")
                prev = entry["hash"]
                records.append(record)
        self.tip = prev
        self.count = len(records)
        return records
