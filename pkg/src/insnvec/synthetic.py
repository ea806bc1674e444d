"""Synthetic two-architecture corpus with a known opcode bijection.

Two artificial ISAs share a hidden one-to-one opcode mapping. Equivalent
blocks are built by drawing one side's opcodes uniformly and mapping
them position by position; a noise fraction of mapped positions is
re-drawn at random. Because the ground truth is planted, cross-
architecture retrieval and planted-pair AUC are exactly checkable.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .corpus import Block, BlockPair, save_pairs
from .evaluate import LabeledPair


@dataclass(frozen=True)
class SyntheticCorpus:
    pairs: list[BlockPair]
    labeled: list[LabeledPair]
    mapping: dict[str, str]  # canonical token of arch_a -> counterpart in arch_b
    arch_a: str
    arch_b: str


def _token(arch: str, opcode_id: int) -> str:
    return f"{arch}:op{opcode_id:02d}"


_BRANCHES = 4
_BRANCH_WEIGHTS = (0.45, 0.25, 0.20, 0.10)
_RESTART = 0.15


def generate_bijection(
    vocab_size: int = 50,
    blocks: int = 2000,
    min_len: int = 3,
    max_len: int = 10,
    noise: float = 0.1,
    seed: int = 1,
    arch_a: str = "alpha",
    arch_b: str = "beta",
) -> SyntheticCorpus:
    """Build the planted-bijection corpus.

    Blocks on the first side are random walks over a seeded sparse
    transition graph (each opcode has a few preferred successors), so
    every opcode gets a distinctive context signature; i.i.d. draws
    would leave the context windows uninformative and nothing to learn.
    The second block carries the bijection image position by position,
    except for a `noise` fraction of positions re-drawn uniformly. The
    labeled set plants one positive (true counterpart) and one negative
    (any other token) per opcode.
    """
    if vocab_size < 2:
        raise ValueError("vocab_size must be >= 2")
    if not 1 <= min_len <= max_len:
        raise ValueError("need 1 <= min_len <= max_len")
    if not 0.0 <= noise <= 1.0:
        raise ValueError("noise must be in [0, 1]")
    if arch_a == arch_b:
        raise ValueError("the two architecture tags must differ")
    rng = np.random.default_rng(seed)
    sigma = rng.permutation(vocab_size)
    successors = rng.integers(0, vocab_size, size=(vocab_size, _BRANCHES))
    branch_p = np.asarray(_BRANCH_WEIGHTS)
    pairs = []
    for b in range(blocks):
        length = int(rng.integers(min_len, max_len + 1))
        a_ops = np.empty(length, dtype=np.int64)
        a_ops[0] = rng.integers(0, vocab_size)
        for t in range(1, length):
            if rng.random() < _RESTART:
                a_ops[t] = rng.integers(0, vocab_size)
            else:
                branch = rng.choice(_BRANCHES, p=branch_p)
                a_ops[t] = successors[a_ops[t - 1], branch]
        b_ops = sigma[a_ops]
        flip = rng.random(length) < noise
        if flip.any():
            b_ops = b_ops.copy()
            b_ops[flip] = rng.integers(0, vocab_size, size=int(flip.sum()))
        pairs.append(
            BlockPair(
                id=f"syn{b:05d}",
                first=Block(arch_a, tuple(_token(arch_a, int(i)) for i in a_ops)),
                second=Block(arch_b, tuple(_token(arch_b, int(i)) for i in b_ops)),
            )
        )
    mapping = {
        _token(arch_a, i): _token(arch_b, int(sigma[i])) for i in range(vocab_size)
    }
    labeled = []
    for i in range(vocab_size):
        true_j = int(sigma[i])
        wrong_j = (true_j + 1 + int(rng.integers(0, vocab_size - 1))) % vocab_size
        labeled.append(
            LabeledPair(
                left=(arch_a, _token(arch_a, i)),
                right=(arch_b, _token(arch_b, true_j)),
                label=1,
            )
        )
        labeled.append(
            LabeledPair(
                left=(arch_a, _token(arch_a, i)),
                right=(arch_b, _token(arch_b, wrong_j)),
                label=-1,
            )
        )
    return SyntheticCorpus(
        pairs=pairs, labeled=labeled, mapping=mapping, arch_a=arch_a, arch_b=arch_b
    )


def write_corpus(corpus: SyntheticCorpus, corpus_path, pairs_path=None, mapping_path=None):
    """Write the corpus file and optionally the planted labeled TSV and
    the ground-truth mapping JSON."""
    save_pairs(corpus.pairs, corpus_path)
    if pairs_path is not None:
        with open(pairs_path, "w", encoding="utf-8") as fh:
            for lp in corpus.labeled:
                arch_a, token_a = lp.left
                arch_b, token_b = lp.right
                body_a = token_a.split(":", 1)[1]
                body_b = token_b.split(":", 1)[1]
                fh.write(f"{arch_a}\t{body_a}\t{arch_b}\t{body_b}\t{lp.label}\n")
    if mapping_path is not None:
        with open(mapping_path, "w", encoding="utf-8") as fh:
            json.dump(
                {
                    "arch_a": corpus.arch_a,
                    "arch_b": corpus.arch_b,
                    "a_to_b": corpus.mapping,
                },
                fh,
                indent=2,
                sort_keys=True,
            )
            fh.write("\n")
