"""Dataset manifests and content hashing.

Every pipeline stage writes its records in a canonical order and records
a manifest next to the output. The output hash is derived from the
canonical record serialization (identical data => identical hash, no
matter where the file lives or when it was written); the timestamp is
informational and never hashed.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

MANIFEST_FORMAT = "knowdis-manifest/v1"


def canonical_line(record: dict) -> str:
    return json.dumps(record, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def records_hash(records) -> str:
    """sha256 over the canonical JSON-lines serialization of `records`."""
    h = hashlib.sha256()
    for rec in records:
        h.update(canonical_line(rec).encode("utf-8"))
        h.update(b"\n")
    return h.hexdigest()


def file_sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_jsonl(path, records) -> str:
    """Write records as canonical JSON lines; returns the content hash."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(canonical_line(rec))
            fh.write("\n")
    return file_sha256(path)


def read_jsonl(path) -> list[dict]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(json.loads(line))
    return out


@dataclass
class DatasetManifest:
    stage: str
    input_hashes: dict[str, str]
    output_hash: str
    counts: dict[str, int]
    config_echo: str
    created_at: str = field(
        default_factory=lambda: datetime.now(timezone.utc).isoformat())
    format: str = MANIFEST_FORMAT

    def to_record(self) -> dict:
        return {
            "format": self.format,
            "stage": self.stage,
            "input_hashes": dict(sorted(self.input_hashes.items())),
            "output_hash": self.output_hash,
            "counts": dict(sorted(self.counts.items())),
            "config_echo": self.config_echo,
            "created_at": self.created_at,
        }

    def write(self, path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(
            json.dumps(self.to_record(), indent=2, sort_keys=True,
                       ensure_ascii=False) + "\n",
            encoding="utf-8")

    @classmethod
    def read(cls, path) -> "DatasetManifest":
        rec = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(
            stage=rec["stage"],
            input_hashes=rec["input_hashes"],
            output_hash=rec["output_hash"],
            counts=rec["counts"],
            config_echo=rec["config_echo"],
            created_at=rec["created_at"],
            format=rec.get("format", MANIFEST_FORMAT),
        )
