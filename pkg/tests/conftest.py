"""Shared fixtures: repo paths and small hand-built corpora/models."""
from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from insnvec.corpus import Block, BlockPair, VocabEntry, Vocabulary, build_vocab
from insnvec.model import EmbeddingModel, TrainConfig, init

REPO_ROOT = Path(__file__).resolve().parent.parent

# One line per acceptance criterion, filled by tests/test_acceptance.py and
# echoed into the terminal summary so the verdicts are visible even when
# pytest captures stdout.
ACCEPTANCE_RESULTS: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_RESULTS:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def repo_root() -> Path:
    return REPO_ROOT


@pytest.fixture(scope="session")
def data_dir(repo_root) -> Path:
    return repo_root / "data"


def make_pairs() -> list[BlockPair]:
    """Six tiny two-architecture pairs with repeated tokens."""
    a = ["x86:mov eax,0", "x86:add eax,ebx", "x86:ret"]
    b = ["arm:mov r0,0", "arm:add r0,r0,r1", "arm:bx lr"]
    c = ["x86:cmp eax,0", "x86:je <TAG>"]
    d = ["arm:cmp r0,0", "arm:beq <TAG>"]
    pairs = []
    for i in range(3):
        pairs.append(BlockPair(f"p{2 * i}", Block("x86", a), Block("arm", b)))
        pairs.append(BlockPair(f"p{2 * i + 1}", Block("x86", c), Block("arm", d)))
    return pairs


@pytest.fixture()
def tiny_pairs() -> list[BlockPair]:
    return make_pairs()


@pytest.fixture()
def tiny_vocab(tiny_pairs) -> Vocabulary:
    return build_vocab(tiny_pairs, min_count=1)


@pytest.fixture()
def tiny_model(tiny_vocab) -> EmbeddingModel:
    return init(tiny_vocab, dim=8, seed=3)


@pytest.fixture()
def tiny_config() -> TrainConfig:
    return TrainConfig(dim=8, window=2, epochs=2, negatives=3, subsample=1.0,
                       min_count=1, seed=3)


def vocab_from_counts(counts: dict[str, int], min_count: int = 1) -> Vocabulary:
    """Vocabulary straight from {token: count} without a corpus."""
    entries = [
        VocabEntry(token, token.split(":", 1)[0], count)
        for token, count in counts.items()
    ]
    return Vocabulary(entries, min_count=min_count)


def model_with_vectors(vectors: dict[str, list[float]]) -> EmbeddingModel:
    """Model whose input rows are set by hand; outputs zero."""
    vocab = vocab_from_counts({t: 1 for t in vectors})
    dim = len(next(iter(vectors.values())))
    inp = np.zeros((len(vocab), dim), dtype=np.float32)
    for token, vec in vectors.items():
        inp[vocab.id_of(token)] = vec
    out = np.zeros_like(inp)
    return EmbeddingModel(vocab, dim, inp, out, config_digest="", epochs_done=0)
