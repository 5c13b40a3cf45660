"""Token-dump binary format, corpus file formats, and CLI entry point.

A token dump is a 16-byte header followed by a single-precision
little-endian payload:

    offset 0   magic           4 bytes, b"TPK1"
    offset 4   n_tokens        uint32, little-endian, >= 1
    offset 8   dim             uint32, little-endian, >= 1
    offset 12  has_attention   uint8, 0 or 1
    offset 13  reserved        zero bytes to offset 16

    offset 16  embeddings      n_tokens * dim float32, row-major
    then       attention       n_tokens float32, only if has_attention = 1

File length must equal 16 + 4*n_tokens*dim (+ 4*n_tokens with attention)
exactly. Values are widened to double on load and validated like any other
in-process input.
"""

from __future__ import annotations

from dataclasses import dataclass
import json
import os
import struct
from pathlib import Path

import numpy as np

from .core import AttentionVector, TokenMatrix, validate_pair
from .chair import CaptionRecord, ObjectLexicon
from .errors import (
    BadMagic,
    HeaderMismatch,
    InvalidValue,
    IoFailure,
    TruncatedFile,
)

MAGIC = b"TPK1"
HEADER_SIZE = 16
_HEADER = struct.Struct("<4sIIB3s")

DUMP_SUFFIX = ".tpk1"


@dataclass(frozen=True)
class TokenDumpHeader:
    """Parsed dump header; carries everything needed to size the payload."""

    n_tokens: int
    dim: int
    has_attention: bool

    def __post_init__(self):
        if self.n_tokens < 1:
            raise HeaderMismatch(f"n_tokens must be >= 1, got {self.n_tokens}")
        if self.dim < 1:
            raise HeaderMismatch(f"dim must be >= 1, got {self.dim}")

    @property
    def expected_file_size(self) -> int:
        size = HEADER_SIZE + 4 * self.n_tokens * self.dim
        if self.has_attention:
            size += 4 * self.n_tokens
        return size

    def pack(self) -> bytes:
        return _HEADER.pack(
            MAGIC, self.n_tokens, self.dim, 1 if self.has_attention else 0, b"\x00" * 3
        )

    @classmethod
    def unpack(cls, raw: bytes) -> "TokenDumpHeader":
        # Magic is checked before length so that a wrong-format file is
        # reported as such even when it is also too short.
        if raw[:4] != MAGIC:
            raise BadMagic(f"expected magic {MAGIC!r}, got {bytes(raw[:4])!r}")
        if len(raw) < HEADER_SIZE:
            raise TruncatedFile(f"header needs {HEADER_SIZE} bytes, got {len(raw)}")
        _, n_tokens, dim, has_attention, reserved = _HEADER.unpack(raw[:HEADER_SIZE])
        if has_attention not in (0, 1):
            raise HeaderMismatch(f"has_attention must be 0 or 1, got {has_attention}")
        if reserved != b"\x00" * 3:
            raise HeaderMismatch("reserved header bytes must be zero")
        return cls(n_tokens=n_tokens, dim=dim, has_attention=bool(has_attention))


def read_dump(path) -> tuple[TokenMatrix, AttentionVector | None]:
    """Load a token dump, widening the payload to double precision.

    Raises:
        BadMagic: the file does not start with the dump magic.
        TruncatedFile: shorter than the header demands.
        HeaderMismatch: malformed header fields, or trailing bytes beyond
            the size the header implies.
        InvalidValue: payload carries NaN or Inf.
        IoFailure: the file cannot be read at all.
    """
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    header = TokenDumpHeader.unpack(data)
    if len(data) < header.expected_file_size:
        raise TruncatedFile(
            f"{path}: expected {header.expected_file_size} bytes, got {len(data)}"
        )
    if len(data) > header.expected_file_size:
        raise HeaderMismatch(
            f"{path}: {len(data) - header.expected_file_size} trailing bytes beyond "
            "the size implied by the header"
        )
    n, d = header.n_tokens, header.dim
    emb = np.frombuffer(data, dtype="<f4", count=n * d, offset=HEADER_SIZE)
    matrix = TokenMatrix(emb.astype(np.float64).reshape(n, d))
    attn = None
    if header.has_attention:
        raw = np.frombuffer(data, dtype="<f4", count=n, offset=HEADER_SIZE + 4 * n * d)
        attn = AttentionVector(raw.astype(np.float64))
        validate_pair(matrix, attn)
    return matrix, attn


def write_dump(path, matrix, attn=None) -> None:
    """Write a token dump in the binary format above.

    The payload is stored single-precision; values too large for float32
    are rejected rather than silently saturated.

    Raises:
        InvalidValue: a value does not survive the float32 round trip finite.
        IoFailure: the file cannot be written.
    """
    m = TokenMatrix.coerce(matrix)
    a = None
    if attn is not None:
        a = AttentionVector.coerce(attn)
        validate_pair(m, a)
    with np.errstate(over="ignore"):
        emb32 = m.values.astype("<f4")
    if not np.isfinite(emb32).all():
        raise InvalidValue("embedding magnitude exceeds single-precision range")
    blob = TokenDumpHeader(m.rows, m.cols, a is not None).pack() + emb32.tobytes(order="C")
    if a is not None:
        with np.errstate(over="ignore"):
            att32 = a.scores.astype("<f4")
        if not np.isfinite(att32).all():
            raise InvalidValue("attention magnitude exceeds single-precision range")
        blob += att32.tobytes()
    try:
        Path(path).write_bytes(blob)
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def list_dumps(target) -> list[Path]:
    """Resolve a corpus argument to dump paths.

    A directory yields its *.tpk1 files sorted by name; any other path is
    read as a manifest of one dump path per line (blank lines and lines
    starting with # skipped), resolved relative to the manifest.
    """
    target = Path(target)
    if target.is_dir():
        paths = sorted(target.glob(f"*{DUMP_SUFFIX}"))
        if not paths:
            raise IoFailure(f"no {DUMP_SUFFIX} files in directory {target}")
        return paths
    try:
        lines = target.read_text().splitlines()
    except OSError as exc:
        raise IoFailure(f"cannot read manifest {target}: {exc}") from exc
    paths = []
    for line in lines:
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        p = Path(line)
        paths.append(p if p.is_absolute() else target.parent / p)
    if not paths:
        raise IoFailure(f"manifest {target} lists no dump files")
    return paths


def read_corpus(target, max_workers: int | None = None) -> list[tuple[TokenMatrix, AttentionVector | None]]:
    """Load every dump named by a directory or manifest, in listing order.

    Files load in a thread pool capped by max_workers (default: the
    TOKENPRUNE_THREADS cap); results keep listing order regardless.
    """
    from concurrent.futures import ThreadPoolExecutor

    paths = list_dumps(target)
    workers = max_workers if max_workers is not None else thread_cap()
    workers = max(1, min(workers, len(paths)))
    if workers == 1:
        return [read_dump(p) for p in paths]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(read_dump, paths))


def thread_cap() -> int:
    """Worker cap for per-file corpus parallelism.

    Defaults to the CPU count (at most 8); the TOKENPRUNE_THREADS
    environment variable lowers or raises it explicitly.
    """
    raw = os.environ.get("TOKENPRUNE_THREADS")
    if raw is None:
        return min(os.cpu_count() or 1, 8)
    try:
        value = int(raw)
    except ValueError:
        raise InvalidValue(f"TOKENPRUNE_THREADS must be an integer, got {raw!r}")
    return max(1, value)


def read_caption_records(path) -> list[CaptionRecord]:
    """Parse a JSON-lines caption corpus: one object per line with fields
    `caption` (string) and `gt_objects` (array of strings)."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise IoFailure(f"cannot read captions {path}: {exc}") from exc
    records = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise InvalidValue(f"{path}:{lineno}: bad JSON: {exc}") from exc
        if not isinstance(obj, dict) or "caption" not in obj or "gt_objects" not in obj:
            raise InvalidValue(
                f"{path}:{lineno}: each line needs caption and gt_objects fields"
            )
        records.append(
            CaptionRecord(
                caption_text=str(obj["caption"]),
                gt_objects=frozenset(str(o) for o in obj["gt_objects"]),
            )
        )
    return records


def read_lexicon(path) -> ObjectLexicon:
    """Parse a lexicon file: a JSON object mapping surface form to
    canonical object name."""
    try:
        payload = json.loads(Path(path).read_text())
    except OSError as exc:
        raise IoFailure(f"cannot read lexicon {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InvalidValue(f"lexicon {path} is not valid JSON: {exc}") from exc
    return ObjectLexicon.from_dict(payload)


def read_stats(path) -> dict:
    """Parse a stats JSON file (erank_mean / entropy_mean plus optional
    quartiles), returned as a plain dict."""
    try:
        payload = json.loads(Path(path).read_text())
    except OSError as exc:
        raise IoFailure(f"cannot read stats {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InvalidValue(f"stats {path} is not valid JSON: {exc}") from exc
    if not isinstance(payload, dict):
        raise InvalidValue(f"stats {path} must hold a JSON object")
    return payload


def reference_stats() -> dict:
    """Packaged corpus reference statistics.

    Measured on the LLaVA training corpus with a CLIP ViT-L/14-336 encoder
    (576 visual tokens); see the label field inside. Useful as erank_avg /
    entropy_avg defaults when pruning dumps from that setup.
    """
    from importlib import resources

    text = (
        resources.files("tokenprune").joinpath("data/llava_clip_l_576_stats.json").read_text()
    )
    return json.loads(text)


def cli_dispatch(argv=None) -> int:
    """Run the command-line interface; returns the process exit code."""
    from .cli import main

    return main(argv)
