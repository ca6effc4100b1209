"""Benchmark-corpus screening: function filtering and MinHash
near-duplicate detection.

Filtering drops functions that make poor benchmark material (empty or
initializer bodies, very long functions, literal-heavy functions,
private-API dependencies). De-duplication shingles the token stream
(comments stripped), builds k-permutation MinHash signatures with a
multiply-shift hash family over 64-bit lanes, and estimates Jaccard
similarity as the fraction of agreeing signature coordinates.

Corpus signatures are persisted in a small binary record stream so a
large corpus is signed once and scanned many times.
"""

from __future__ import annotations

import hashlib
import re
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import BinaryIO, Iterable, Iterator

import numpy as np

from .lexer import COMMENT, NAME, NUMBER, STRING, tokenize
from .metrics import count_loc
from .model import LanguageProfile

_DEFAULT_PROFILE = LanguageProfile()


class EmptySet(ValueError):
    pass


class ParameterMismatch(ValueError):
    """Signatures built with different (k, shingle width, seed) cannot be
    compared."""


@dataclass(frozen=True)
class FilterVerdict:
    keep: bool
    reasons: tuple[str, ...]  # sorted; empty iff keep


REASON_EMPTY_OR_INIT = "empty_or_init"
REASON_EXCEEDS_LOC_CAP = "exceeds_loc_cap"
REASON_CONSTANT_HEAVY = "constant_heavy"
REASON_PRIVATE_DEPENDENCY = "private_dependency"

DEFAULT_LOC_CAP = 100
DEFAULT_CONSTANT_RATIO = 0.40
DEFAULT_PRIVATE_PATTERNS = (r"^_",)

# pass-throughs: bare return, or returning one constant / name / own attribute
_TRIVIAL_BODY_RE = re.compile(
    r"^(pass|\.\.\.|return(\s+(None|True|False|self\.\w+|\w+|-?\d+(\.\d+)?|"
    r"\"[^\"]*\"|'[^']*'))?)$"
)
_SELF_ASSIGN_RE = re.compile(r"^self\.\w+\s*=\s*\S")


def filter_function(
    code: str,
    profile: LanguageProfile = _DEFAULT_PROFILE,
    loc_cap: int = DEFAULT_LOC_CAP,
    constant_ratio: float = DEFAULT_CONSTANT_RATIO,
    private_patterns: tuple[str, ...] = DEFAULT_PRIVATE_PATTERNS,
) -> FilterVerdict:
    """Judge one function as benchmark material; reasons are data."""
    reasons: set[str] = set()
    tokens = tokenize(code, profile.comment_prefix, strict=True)
    content = [t for t in tokens if t.kind != COMMENT]

    if _is_empty_or_init(code, profile):
        reasons.add(REASON_EMPTY_OR_INIT)
    if count_loc(code, profile) > loc_cap:
        reasons.add(REASON_EXCEEDS_LOC_CAP)
    if content:
        literals = sum(1 for t in content if t.kind in (STRING, NUMBER))
        if literals / len(content) > constant_ratio:
            reasons.add(REASON_CONSTANT_HEAVY)
    if private_patterns and _references_private(content, private_patterns):
        reasons.add(REASON_PRIVATE_DEPENDENCY)

    ordered = tuple(sorted(reasons))
    return FilterVerdict(keep=not ordered, reasons=ordered)


def _is_empty_or_init(code: str, profile: LanguageProfile) -> bool:
    """True when the body holds no statements beyond pass-throughs,
    docstrings, and attribute initialization."""
    lines = code.splitlines()
    body: list[str] = []
    in_signature = True
    for line in lines:
        stripped = line.strip()
        if not stripped or stripped.startswith(profile.comment_prefix):
            continue
        if in_signature:
            if stripped.startswith(("def ", "class ", "@")) or stripped.endswith((",", "(")):
                if stripped.endswith(":"):
                    in_signature = False
                continue
            in_signature = False
        body.append(stripped)
    if not body:
        return True
    for stmt in body:
        if stmt.startswith(('"""', "'''", '"', "'")):
            continue  # docstring line
        if _TRIVIAL_BODY_RE.match(stmt) or _SELF_ASSIGN_RE.match(stmt):
            continue
        return False
    return True


def _references_private(tokens: list, patterns: tuple[str, ...]) -> bool:
    """Match imported modules and used API names against the denylist."""
    compiled = [re.compile(p) for p in patterns]
    local_defs = {
        tokens[i + 1].text
        for i, tok in enumerate(tokens[:-1])
        if tok.kind == NAME and tok.text in ("def", "class") and tokens[i + 1].kind == NAME
    }
    for i, tok in enumerate(tokens):
        if tok.kind != NAME or tok.text == "self" or tok.text in local_defs:
            continue
        prev = tokens[i - 1] if i > 0 else None
        nxt = tokens[i + 1] if i + 1 < len(tokens) else None
        if prev is not None and prev.text == "." and i >= 2 and tokens[i - 2].text == "self":
            continue  # own attributes are not external dependencies
        used_as_api = (
            (prev is not None and prev.kind == NAME and prev.text in ("import", "from"))
            or (prev is not None and prev.text == ".")
            or (nxt is not None and nxt.text in (".", "("))
        )
        if used_as_api and any(c.search(tok.text) for c in compiled):
            return True
    return False


@dataclass(frozen=True)
class ShingleSet:
    """Hashed w-token windows of one snippet."""

    values: frozenset[int]
    width: int


def shingles(code: str, w: int, profile: LanguageProfile = _DEFAULT_PROFILE) -> ShingleSet:
    """Token w-grams, comments stripped, identifiers kept verbatim.

    Snippets shorter than w tokens collapse to a single shingle covering
    the whole sequence.
    """
    if w < 1:
        raise ValueError("shingle width must be >= 1")
    texts = [
        t.text for t in tokenize(code, profile.comment_prefix, strict=True)
        if t.kind != COMMENT
    ]
    if not texts:
        return ShingleSet(frozenset(), w)
    if len(texts) < w:
        return ShingleSet(frozenset({_hash_window(texts)}), w)
    values = {_hash_window(texts[i : i + w]) for i in range(len(texts) - w + 1)}
    return ShingleSet(frozenset(values), w)


def _hash_window(window: list[str]) -> int:
    digest = hashlib.blake2b("\x00".join(window).encode("utf-8"), digest_size=8)
    return int.from_bytes(digest.digest(), "little")


@dataclass(frozen=True)
class MinHashSignature:
    values: tuple[int, ...]  # length k, 64-bit minima
    shingle_width: int
    seed: int

    @property
    def k(self) -> int:
        return len(self.values)

    def compatible(self, other: "MinHashSignature") -> bool:
        return (
            self.k == other.k
            and self.shingle_width == other.shingle_width
            and self.seed == other.seed
        )


DEFAULT_K = 128
DEFAULT_SHINGLE_WIDTH = 5
DEFAULT_THRESHOLD = 0.8


def _hash_params(k: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    rng = np.random.Generator(np.random.PCG64(seed))
    a = rng.integers(1, 1 << 63, size=k, dtype=np.uint64) * np.uint64(2) + np.uint64(1)
    b = rng.integers(0, 1 << 63, size=k, dtype=np.uint64)
    return a, b


def signature(shingle_set: ShingleSet, k: int = DEFAULT_K, seed: int = 0) -> MinHashSignature:
    """Per-permutation minima over the shingle set.

    Permutations are multiply-shift hashes a*x+b over uint64 with odd a,
    drawn from a PCG64 stream keyed by the seed, so signatures are
    reproducible across runs and platforms.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if not shingle_set.values:
        raise EmptySet("cannot sign an empty shingle set")
    a, b = _hash_params(k, seed)
    xs = np.fromiter(shingle_set.values, dtype=np.uint64, count=len(shingle_set.values))
    with np.errstate(over="ignore"):
        hashed = a[:, None] * xs[None, :] + b[:, None]
    minima = hashed.min(axis=1)
    return MinHashSignature(
        values=tuple(int(v) for v in minima),
        shingle_width=shingle_set.width,
        seed=seed,
    )


def estimate_jaccard(a: MinHashSignature, b: MinHashSignature) -> float:
    if not a.compatible(b):
        raise ParameterMismatch(
            f"(k={a.k}, w={a.shingle_width}, seed={a.seed}) vs "
            f"(k={b.k}, w={b.shingle_width}, seed={b.seed})"
        )
    agree = sum(1 for x, y in zip(a.values, b.values) if x == y)
    return agree / a.k


def scan_duplicates(
    candidates: list[tuple[str, MinHashSignature]],
    corpus_signatures: Iterable[tuple[str, MinHashSignature]],
    threshold: float = DEFAULT_THRESHOLD,
) -> list[tuple[str, str, float]]:
    """All candidate pairs (candidate-vs-candidate and candidate-vs-corpus)
    whose estimated similarity reaches the threshold, sorted for
    deterministic output."""
    hits: list[tuple[str, str, float]] = []
    ordered = sorted(candidates, key=lambda item: item[0])
    for i, (cid, sig) in enumerate(ordered):
        for cid2, sig2 in ordered[i + 1 :]:
            estimate = estimate_jaccard(sig, sig2)
            if estimate >= threshold:
                hits.append((cid, cid2, estimate))
    for corpus_id, corpus_sig in corpus_signatures:
        for cid, sig in ordered:
            estimate = estimate_jaccard(sig, corpus_sig)
            if estimate >= threshold:
                hits.append((cid, corpus_id, estimate))
    hits.sort()
    return hits


# --- corpus signature stream -------------------------------------------------
#
# header: magic "MHSG", u32 version, u32 k, u32 shingle width, u64 seed,
#         u32 id width
# record: id padded with NULs to id width, then k little-endian u64 minima

_MAGIC = b"MHSG"
_VERSION = 1
_HEADER = struct.Struct("<4sIIIQI")
DEFAULT_ID_WIDTH = 64


def write_signature_stream(
    path: str | Path,
    signatures: Iterable[tuple[str, MinHashSignature]],
    k: int,
    shingle_width: int,
    seed: int,
    id_width: int = DEFAULT_ID_WIDTH,
) -> int:
    """Write signatures to a binary stream; returns the record count."""
    count = 0
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(_MAGIC, _VERSION, k, shingle_width, seed, id_width))
        record = struct.Struct(f"<{id_width}s{k}Q")
        for entry_id, sig in signatures:
            if sig.k != k or sig.shingle_width != shingle_width or sig.seed != seed:
                raise ParameterMismatch(f"signature for {entry_id!r} mismatches stream header")
            raw_id = entry_id.encode("utf-8")
            if len(raw_id) > id_width:
                raise ValueError(f"id {entry_id!r} longer than {id_width} bytes")
            fh.write(record.pack(raw_id, *sig.values))
            count += 1
    return count


def read_signature_stream(path: str | Path) -> Iterator[tuple[str, MinHashSignature]]:
    with open(path, "rb") as fh:
        header = fh.read(_HEADER.size)
        if len(header) < _HEADER.size:
            raise ValueError(f"{path}: truncated signature stream header")
        magic, version, k, shingle_width, seed, id_width = _HEADER.unpack(header)
        if magic != _MAGIC:
            raise ValueError(f"{path}: not a signature stream")
        if version != _VERSION:
            raise ValueError(f"{path}: unsupported stream version {version}")
        record = struct.Struct(f"<{id_width}s{k}Q")
        while True:
            chunk = fh.read(record.size)
            if not chunk:
                return
            if len(chunk) < record.size:
                raise ValueError(f"{path}: truncated signature record")
            fields = record.unpack(chunk)
            entry_id = fields[0].rstrip(b"\x00").decode("utf-8")
            yield entry_id, MinHashSignature(
                values=tuple(fields[1:]), shingle_width=shingle_width, seed=seed
            )
