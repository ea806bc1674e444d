"""Equivalent-block-pair corpora, the shared vocabulary, and sampling.

The corpus file is UTF-8 JSON lines:

    {"id": "...", "a": {"arch": "x86", "ins": ["...", ...]},
     "b": {"arch": "arm", "ins": [...]}, "normalized": false}

Instructions are normalized to canonical tokens on load unless the
record declares `"normalized": true`, in which case each text is taken
as an already-rendered token body and only the architecture prefix is
attached.
"""

from __future__ import annotations

import collections
import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    ArchMismatch,
    EmptyBlock,
    EmptyVocabulary,
    MalformedRecord,
    UnknownArchitecture,
)
from .normalize import check_arch, normalize_text, split_token


@dataclass(frozen=True)
class Block:
    """One basic block: an architecture tag plus its canonical tokens.

    Invariant: tokens is nonempty and every token carries this block's
    architecture prefix.
    """

    arch: str
    tokens: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))


@dataclass(frozen=True)
class BlockPair:
    """Two semantically equivalent blocks from different architectures."""

    id: str
    first: Block
    second: Block


@dataclass(frozen=True)
class VocabEntry:
    token: str
    arch: str
    count: int


class Vocabulary:
    """Architecture-qualified token table with dense ids.

    Ids are assigned in descending count order, ties broken
    lexicographically by token text, so id 0 is the most frequent token.
    """

    def __init__(self, entries: list[VocabEntry], min_count: int = 1):
        if not entries:
            raise EmptyVocabulary("vocabulary has no entries")
        self.entries = list(entries)
        self.min_count = min_count
        self.index: dict[str, int] = {e.token: i for i, e in enumerate(self.entries)}
        if len(self.index) != len(self.entries):
            raise ValueError("duplicate token in vocabulary entries")
        totals: dict[str, int] = collections.defaultdict(int)
        ids: dict[str, list[int]] = collections.defaultdict(list)
        for i, e in enumerate(self.entries):
            totals[e.arch] += e.count
            ids[e.arch].append(i)
        # totals count retained occurrences only: subsampling frequencies
        # are relative to what survived min_count, per architecture
        self.arch_totals: dict[str, int] = dict(totals)
        self._arch_ids = {a: np.asarray(v, dtype=np.int64) for a, v in ids.items()}

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, token: str) -> bool:
        return token in self.index

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Vocabulary)
            and self.entries == other.entries
            and self.min_count == other.min_count
        )

    def id_of(self, token: str) -> int:
        return self.index[token]

    def get(self, token: str) -> int | None:
        return self.index.get(token)

    def token_of(self, idx: int) -> str:
        return self.entries[idx].token

    def arch_of(self, idx: int) -> str:
        return self.entries[idx].arch

    def count_of(self, idx: int) -> int:
        return self.entries[idx].count

    def architectures(self) -> list[str]:
        return sorted(self.arch_totals)

    def arch_ids(self, arch: str) -> np.ndarray:
        try:
            return self._arch_ids[arch]
        except KeyError:
            raise UnknownArchitecture(f"no vocabulary entries for {arch!r}") from None

    def keep_table(self, rate: float) -> np.ndarray:
        """Per-id keep probability under subsampling rate `rate`."""
        table = np.empty(len(self.entries), dtype=np.float64)
        for i, e in enumerate(self.entries):
            table[i] = keep_probability(e.count, self.arch_totals[e.arch], rate)
        return table


def build_vocab(pairs, min_count: int) -> Vocabulary:
    """Count token occurrences over all blocks and keep those with
    count >= min_count. Dropped tokens are simply absent; training and
    evaluation skip them."""
    if min_count < 1:
        raise ValueError("min_count must be >= 1")
    counts: collections.Counter[str] = collections.Counter()
    for pair in pairs:
        counts.update(pair.first.tokens)
        counts.update(pair.second.tokens)
    survivors = [(t, c) for t, c in counts.items() if c >= min_count]
    if not survivors:
        raise EmptyVocabulary(
            f"no token reached min_count={min_count} "
            f"({len(counts)} distinct tokens seen)"
        )
    survivors.sort(key=lambda tc: (-tc[1], tc[0]))
    entries = [VocabEntry(t, split_token(t)[0], c) for t, c in survivors]
    return Vocabulary(entries, min_count=min_count)


def keep_probability(count: int, arch_total: int, rate: float) -> float:
    """word2vec keep rule: min(1, (sqrt(f/t) + 1) * t/f) with relative
    frequency f = count/arch_total computed per architecture."""
    if count < 1 or arch_total < count:
        raise ValueError("need 1 <= count <= arch_total")
    if rate <= 0:
        raise ValueError("subsample rate must be > 0")
    f = count / arch_total
    return min(1.0, (math.sqrt(f / rate) + 1.0) * rate / f)


class NegativeSampler:
    """Draws token ids within one architecture, weighted by count^0.75."""

    def __init__(self, vocab: Vocabulary, power: float = 0.75):
        self.vocab = vocab
        self.power = power
        self._tables: dict[str, tuple[np.ndarray, np.ndarray]] = {}
        for arch in vocab.arch_totals:
            ids = vocab.arch_ids(arch)
            weights = np.array(
                [vocab.count_of(i) ** power for i in ids], dtype=np.float64
            )
            self._tables[arch] = (ids, np.cumsum(weights))

    def _table(self, arch: str) -> tuple[np.ndarray, np.ndarray]:
        try:
            return self._tables[arch]
        except KeyError:
            raise UnknownArchitecture(f"no sampling table for {arch!r}") from None

    def sample(self, arch: str, rng: np.random.Generator) -> int:
        """One token id of `arch`, drawn proportionally to count^0.75."""
        ids, cum = self._table(arch)
        pos = int(np.searchsorted(cum, rng.random() * cum[-1], side="right"))
        return int(ids[min(pos, len(ids) - 1)])

    def sample_batch(
        self,
        arch: str,
        k: int,
        rng: np.random.Generator,
        exclude: int | None = None,
    ) -> np.ndarray:
        """k ids of `arch`, redrawing any draw that collides with
        `exclude`. Duplicates among the negatives are allowed."""
        ids, cum = self._table(arch)
        pos = np.searchsorted(cum, rng.random(k) * cum[-1], side="right")
        out = ids[np.minimum(pos, len(ids) - 1)]
        if exclude is not None:
            # bounded redraw; bails out only when exclude is the sole entry
            for _ in range(100):
                mask = out == exclude
                if not mask.any():
                    break
                n = int(mask.sum())
                pos = np.searchsorted(cum, rng.random(n) * cum[-1], side="right")
                out = out.copy()
                out[mask] = ids[np.minimum(pos, len(ids) - 1)]
            else:
                out = out[out != exclude]
        return out.astype(np.int64, copy=False)


def sample_negative(sampler: NegativeSampler, arch: str, rng: np.random.Generator) -> int:
    """Draw a single negative token id of the requested architecture."""
    return sampler.sample(arch, rng)


def _require(cond: bool, line: int | None, message: str):
    if not cond:
        raise MalformedRecord(message, line)


def _block_from_record(side: dict, label: str, normalized: bool, line: int | None) -> Block:
    _require(isinstance(side, dict), line, f"field {label!r} must be an object")
    arch = side.get("arch")
    ins = side.get("ins")
    _require(isinstance(arch, str), line, f"{label}.arch must be a string")
    try:
        check_arch(arch)
    except ValueError as exc:
        raise MalformedRecord(str(exc), line) from exc
    _require(isinstance(ins, list), line, f"{label}.ins must be a list")
    if not ins:
        raise EmptyBlock(f"block {label!r} has no instructions", line)
    _require(
        all(isinstance(t, str) and t.strip() for t in ins),
        line,
        f"{label}.ins must contain nonempty strings",
    )
    if normalized:
        tokens = tuple(f"{arch}:{t.strip()}" for t in ins)
    else:
        try:
            tokens = tuple(normalize_text(t, arch) for t in ins)
        except Exception as exc:
            raise MalformedRecord(f"cannot normalize {label}.ins: {exc}", line) from exc
    return Block(arch=arch, tokens=tokens)


def parse_pair_record(record: dict, line: int | None = None) -> BlockPair:
    """Build a BlockPair from one decoded corpus record."""
    _require(isinstance(record, dict), line, "record must be a JSON object")
    pair_id = record.get("id")
    _require(isinstance(pair_id, str) and pair_id, line, "missing or invalid 'id'")
    normalized = record.get("normalized", False)
    _require(isinstance(normalized, bool), line, "'normalized' must be a boolean")
    first = _block_from_record(record.get("a"), "a", normalized, line)
    second = _block_from_record(record.get("b"), "b", normalized, line)
    if first.arch == second.arch:
        raise ArchMismatch(
            f"pair {pair_id!r} has both blocks on {first.arch!r}", line
        )
    return BlockPair(id=pair_id, first=first, second=second)


def iter_records(path) -> "collections.abc.Iterator[tuple[int, dict]]":
    """Yield (line number, decoded JSON object) for each nonblank line."""
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            raw = raw.strip()
            if not raw:
                continue
            try:
                yield lineno, json.loads(raw)
            except json.JSONDecodeError as exc:
                raise MalformedRecord(f"invalid JSON: {exc}", lineno) from exc


def load_pairs(path) -> list[BlockPair]:
    """Load a corpus file; returns pairs in file order."""
    return [parse_pair_record(rec, lineno) for lineno, rec in iter_records(path)]


def save_pairs(pairs, path) -> None:
    """Write pairs in corpus format with `"normalized": true`. Inverse
    of load_pairs on the in-memory representation."""
    with open(path, "w", encoding="utf-8") as fh:
        for pair in pairs:
            record = {
                "id": pair.id,
                "a": {
                    "arch": pair.first.arch,
                    "ins": [_strip_prefix(t, pair.first.arch) for t in pair.first.tokens],
                },
                "b": {
                    "arch": pair.second.arch,
                    "ins": [_strip_prefix(t, pair.second.arch) for t in pair.second.tokens],
                },
                "normalized": True,
            }
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")


def _strip_prefix(token: str, arch: str) -> str:
    prefix = arch + ":"
    if not token.startswith(prefix):
        raise ValueError(f"token {token!r} does not carry prefix {prefix!r}")
    return token[len(prefix):]
