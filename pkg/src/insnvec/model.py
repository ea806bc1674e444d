"""The joint embedding model.

One shared input matrix (published embeddings) and one output matrix
(target-side weights) host every architecture's tokens. Training mixes
two kinds of CBOW negative-sampling steps over the same parameters:
mono steps predict a token from its same-block window, cross steps
predict it from the window around its linearly aligned position in the
paired block of the other architecture. Step weights gamma (mono) and
beta (cross) scale the per-step learning rate.
"""

from __future__ import annotations

import hashlib
import json
import struct
import threading
from dataclasses import asdict, dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.special import expit

from .corpus import Block, BlockPair, NegativeSampler, VocabEntry, Vocabulary
from .errors import (
    ConfigMismatch,
    CorruptFile,
    EmptyContext,
    IncompatibleVersion,
    UnknownToken,
)
from .normalize import split_token

MAGIC = b"XAEM"
FORMAT_VERSION = 1


@dataclass(frozen=True)
class TrainConfig:
    """All training hyperparameters. Defaults follow the reference
    recipe: dim 200, window 5, 10 epochs, lr 0.05, 30 negatives,
    subsample 1e-5, gamma 1, beta 4, min_count 5."""

    dim: int = 200
    window: int = 5
    epochs: int = 10
    learning_rate: float = 0.05
    negatives: int = 30
    subsample: float = 1e-5
    gamma: float = 1.0
    beta: float = 4.0
    min_count: int = 5
    seed: int = 1
    workers: int = 1
    dynamic_window: bool = False
    include_aligned_center: bool = False

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if self.window < 1:
            raise ValueError("window must be >= 1")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be > 0")
        if self.negatives < 1:
            raise ValueError("negatives must be >= 1")
        if not self.subsample > 0:
            raise ValueError("subsample must be > 0")
        if self.gamma < 0 or self.beta < 0:
            raise ValueError("gamma and beta must be >= 0")
        if not self.gamma + self.beta > 0:
            raise ValueError("gamma + beta must be > 0")
        if self.min_count < 1:
            raise ValueError("min_count must be >= 1")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")

    def digest(self) -> str:
        blob = json.dumps(asdict(self), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


@dataclass(frozen=True)
class TrainingStep:
    """One stochastic update: predict `target` from `context` with
    effective learning rate weight*alpha and `negatives` negative
    draws. All context ids share one architecture; the target may
    belong to the other one (cross steps)."""

    target: int
    context: tuple[int, ...]
    weight: float
    alpha: float
    negatives: int


class PassStats(NamedTuple):
    loss: float
    steps: int


@dataclass
class EpochStats:
    epoch: int
    mono_loss: float
    mono_steps: int
    multi_loss: float
    multi_steps: int

    @property
    def mono_mean(self) -> float:
        return self.mono_loss / self.mono_steps if self.mono_steps else float("nan")

    @property
    def multi_mean(self) -> float:
        return self.multi_loss / self.multi_steps if self.multi_steps else float("nan")


@dataclass
class TrainReport:
    epochs: list[EpochStats] = field(default_factory=list)

    @property
    def total_steps(self) -> int:
        return sum(e.mono_steps + e.multi_steps for e in self.epochs)


class EmbeddingModel:
    """Input and output weight matrices over a shared vocabulary."""

    def __init__(
        self,
        vocab: Vocabulary,
        dim: int,
        input: np.ndarray,
        output: np.ndarray,
        config_digest: str = "",
        epochs_done: int = 0,
    ):
        if input.shape != (len(vocab), dim) or output.shape != (len(vocab), dim):
            raise ConfigMismatch(
                f"matrix shapes {input.shape}/{output.shape} do not match "
                f"V={len(vocab)}, d={dim}"
            )
        self.vocab = vocab
        self.dim = dim
        self.input = input
        self.output = output
        self.config_digest = config_digest
        self.epochs_done = epochs_done

    @property
    def dtype(self) -> np.dtype:
        return self.input.dtype

    def vector(self, token: str) -> np.ndarray:
        """Input embedding of a canonical token."""
        idx = self.vocab.get(token)
        if idx is None:
            raise UnknownToken(f"token not in vocabulary: {token!r}")
        return self.input[idx]


def init(vocab: Vocabulary, dim: int, seed: int, dtype=np.float32) -> EmbeddingModel:
    """Fresh model: input rows i.i.d. uniform on the open interval
    (-0.5/d, +0.5/d), output rows zero. Fully determined by seed.

    dtype float64 selects the gradient-check build (all accumulators and
    weights 64-bit); float32 is the training/storage default.
    """
    if dim < 1:
        raise ValueError("dim must be >= 1")
    rng = np.random.default_rng(seed)
    shape = (len(vocab), dim)
    bound = 0.5 / dim
    vals = ((rng.random(shape) - 0.5) / dim).astype(dtype)
    # dtype rounding may land exactly on the interval edge; redraw those
    bad = ~(np.abs(vals.astype(np.float64)) < bound)
    while bad.any():
        redraw = ((rng.random(int(bad.sum())) - 0.5) / dim).astype(dtype)
        vals[bad] = redraw
        bad = ~(np.abs(vals.astype(np.float64)) < bound)
    return EmbeddingModel(
        vocab, dim, vals, np.zeros(shape, dtype=dtype)
    )


def align(i: int, len_m: int, len_n: int) -> int:
    """Aligned position j = floor(i * len_n / len_m), clamped into
    [0, len_n - 1]. Positions are 0-based."""
    if len_m < 1 or len_n < 1:
        raise ValueError("sequence lengths must be >= 1")
    if not 0 <= i < len_m:
        raise ValueError(f"position {i} outside sequence of length {len_m}")
    j = (i * len_n) // len_m
    return max(0, min(j, len_n - 1))


def _gather(model: EmbeddingModel, target: int, context, negatives):
    ctx = np.asarray(context, dtype=np.int64)
    if ctx.size == 0:
        raise EmptyContext("training step has no context tokens")
    negs = np.asarray(negatives, dtype=np.int64)
    out_ids = np.empty(negs.size + 1, dtype=np.int64)
    out_ids[0] = target
    out_ids[1:] = negs
    h = model.input[ctx].mean(axis=0, dtype=np.float64)
    u = model.output[out_ids].astype(np.float64, copy=False)
    return ctx, out_ids, h, u


def _loss_from_products(prod: np.ndarray) -> float:
    # -log sigma(x) == logaddexp(0, -x), stable for any x
    return float(np.logaddexp(0.0, -prod[0]) + np.logaddexp(0.0, prod[1:]).sum())


def step_loss(model: EmbeddingModel, target: int, context, negatives) -> float:
    """Negative-sampling CBOW loss of one step; pure.

    With h the mean of the context tokens' input rows:
    -log sigma(u_target . h) - sum over negatives of log sigma(-u_neg . h).
    Computed in 64-bit regardless of the model dtype.
    """
    _, _, h, u = _gather(model, target, context, negatives)
    return _loss_from_products(u @ h)


def apply_step(model: EmbeddingModel, target: int, context, negatives, lr: float) -> float:
    """One SGD update of step_loss at rate lr with fixed negatives.

    Gradients are evaluated at the starting point and applied once:
    output rows get -lr * (sigma(u_o.h) - y_o) * h, and every context
    input row gets -lr/|context| * sum_o (sigma(u_o.h) - y_o) * u_o.
    Returns the pre-update loss. lr == 0 is an exact no-op.
    """
    ctx, out_ids, h, u = _gather(model, target, context, negatives)
    prod = u @ h
    loss = _loss_from_products(prod)
    if lr == 0.0:
        return loss
    g = expit(prod)
    g[0] -= 1.0  # y=1 for the true target, 0 for negatives
    dtype = model.input.dtype
    np.add.at(model.output, out_ids, (np.outer(g, h) * (-lr)).astype(dtype))
    np.add.at(model.input, ctx, ((g @ u) * (-lr / ctx.size)).astype(dtype))
    return loss


def cbow_step(
    model: EmbeddingModel,
    step: TrainingStep,
    sampler: NegativeSampler,
    rng: np.random.Generator,
) -> float:
    """Draw negatives of the target's architecture (redrawing on
    collision with the target) and apply one update with effective
    rate step.weight * step.alpha. Returns the pre-update loss."""
    arch = model.vocab.arch_of(step.target)
    negatives = sampler.sample_batch(arch, step.negatives, rng, exclude=step.target)
    return apply_step(model, step.target, step.context, negatives, step.weight * step.alpha)


def _resolve(vocab: Vocabulary, tokens) -> list[int]:
    index = vocab.index
    return [index[t] for t in tokens if t in index]


def _span(cfg: TrainConfig, rng: np.random.Generator) -> int:
    if cfg.dynamic_window:
        return int(rng.integers(1, cfg.window + 1))
    return cfg.window


def mono_pass(
    model: EmbeddingModel,
    block: Block,
    cfg: TrainConfig,
    sampler: NegativeSampler,
    rng: np.random.Generator,
    alpha: float,
    keep: np.ndarray | None = None,
) -> PassStats:
    """Same-architecture CBOW pass over one block.

    Unknown tokens are skipped; surviving positions are subsampled by
    the keep rule, and each remaining position is predicted from up to
    `window` kept tokens on each side, truncated at block boundaries.
    Steps run at weight gamma.
    """
    vocab = model.vocab
    ids = _resolve(vocab, block.tokens)
    if keep is None:
        keep = vocab.keep_table(cfg.subsample)
    working = [i for i in ids if rng.random() < keep[i]]
    loss, steps = 0.0, 0
    for p, target in enumerate(working):
        span = _span(cfg, rng)
        ctx = working[max(0, p - span):p] + working[p + 1:p + 1 + span]
        if not ctx:
            continue
        step = TrainingStep(target, tuple(ctx), cfg.gamma, alpha, cfg.negatives)
        loss += cbow_step(model, step, sampler, rng)
        steps += 1
    return PassStats(loss, steps)


def multi_pass(
    model: EmbeddingModel,
    pair: BlockPair,
    cfg: TrainConfig,
    sampler: NegativeSampler,
    rng: np.random.Generator,
    alpha: float,
) -> PassStats:
    """Cross-architecture pass over one equivalent pair.

    Every position i of one block is predicted from the window around
    its aligned position floor(i*|N|/|M|) in the partner block; the
    aligned token itself is excluded unless include_aligned_center is
    set. Both directions run. No subsampling: dropping positions would
    desynchronize the alignment geometry. Steps run at weight beta.
    """
    vocab = model.vocab
    first = _resolve(vocab, pair.first.tokens)
    second = _resolve(vocab, pair.second.tokens)
    loss, steps = 0.0, 0
    for targets, partner in ((first, second), (second, first)):
        if not targets or not partner:
            continue
        len_m, len_n = len(targets), len(partner)
        for i, target in enumerate(targets):
            j = align(i, len_m, len_n)
            span = _span(cfg, rng)
            lo = max(0, j - span)
            if cfg.include_aligned_center:
                ctx = partner[lo:j + 1 + span]
            else:
                ctx = partner[lo:j] + partner[j + 1:j + 1 + span]
            if not ctx:
                continue
            step = TrainingStep(target, tuple(ctx), cfg.beta, alpha, cfg.negatives)
            loss += cbow_step(model, step, sampler, rng)
            steps += 1
    return PassStats(loss, steps)


class _Progress:
    """Processed-token counter shared by workers. Parallel mode updates
    it without locking (hogwild contract: races only blur the decay)."""

    __slots__ = ("value",)

    def __init__(self):
        self.value = 0


def _chunk_worker(model, pairs, chunk, cfg, sampler, keep, progress, total, rng, out, slot):
    alpha0 = cfg.learning_rate
    floor = alpha0 * 1e-4
    mono_loss, mono_steps, multi_loss, multi_steps = 0.0, 0, 0.0, 0
    for pi in chunk:
        pair, tokens = pairs[pi]
        frac = progress.value / total if total else 1.0
        alpha = max(alpha0 * (1.0 - frac), floor)
        # a zero component weight disables that component outright
        # rather than running its steps as weight-0 no-ops
        if cfg.gamma > 0:
            a = mono_pass(model, pair.first, cfg, sampler, rng, alpha, keep)
            b = mono_pass(model, pair.second, cfg, sampler, rng, alpha, keep)
            mono_loss += a.loss + b.loss
            mono_steps += a.steps + b.steps
        if cfg.beta > 0:
            c = multi_pass(model, pair, cfg, sampler, rng, alpha)
            multi_loss += c.loss
            multi_steps += c.steps
        progress.value += tokens
    out[slot] = (mono_loss, mono_steps, multi_loss, multi_steps)


def train(model: EmbeddingModel, pairs, cfg: TrainConfig) -> TrainReport:
    """Run the gamma/beta-weighted joint objective for cfg.epochs.

    Each epoch shuffles pair order (seeded), then runs mono_pass on both
    blocks and multi_pass on the pair. The learning rate decays linearly
    with processed-token progress from learning_rate to 0 across all
    epochs, floored at learning_rate * 1e-4.

    workers=1 is the deterministic mode: same corpus, config and seed
    give bit-identical matrices. workers>1 partitions each epoch's pairs
    across lock-free threads (non-deterministic, statistically sound).
    """
    pairs = list(pairs)
    vocab = model.vocab
    if model.dim != cfg.dim:
        raise ConfigMismatch(f"model dim {model.dim} != config dim {cfg.dim}")
    if vocab.min_count != cfg.min_count:
        raise ConfigMismatch(
            f"vocabulary min_count {vocab.min_count} != config min_count {cfg.min_count}"
        )
    index = vocab.index
    resolved = [
        (
            pair,
            sum(1 for t in pair.first.tokens if t in index)
            + sum(1 for t in pair.second.tokens if t in index),
        )
        for pair in pairs
    ]
    total = sum(tokens for _, tokens in resolved) * cfg.epochs
    keep = vocab.keep_table(cfg.subsample)
    sampler = NegativeSampler(vocab)
    progress = _Progress()
    report = TrainReport()
    for epoch in range(cfg.epochs):
        order = np.random.default_rng([cfg.seed, epoch]).permutation(len(pairs))
        chunks = [c for c in np.array_split(order, cfg.workers) if c.size]
        results: list[tuple | None] = [None] * len(chunks)
        if len(chunks) <= 1:
            for slot, chunk in enumerate(chunks):
                rng = np.random.default_rng([cfg.seed, epoch, slot])
                _chunk_worker(
                    model, resolved, chunk, cfg, sampler, keep,
                    progress, total, rng, results, slot,
                )
        else:
            threads = []
            for slot, chunk in enumerate(chunks):
                rng = np.random.default_rng([cfg.seed, epoch, slot])
                threads.append(
                    threading.Thread(
                        target=_chunk_worker,
                        args=(model, resolved, chunk, cfg, sampler, keep,
                              progress, total, rng, results, slot),
                    )
                )
            for t in threads:
                t.start()
            for t in threads:
                t.join()
        mono_loss = sum(r[0] for r in results if r)
        mono_steps = sum(r[1] for r in results if r)
        multi_loss = sum(r[2] for r in results if r)
        multi_steps = sum(r[3] for r in results if r)
        report.epochs.append(
            EpochStats(epoch, mono_loss, mono_steps, multi_loss, multi_steps)
        )
    model.epochs_done += cfg.epochs
    model.config_digest = cfg.digest()
    return report


# --- serialization ---

def _pack_str(text: str) -> bytes:
    raw = text.encode("utf-8")
    if len(raw) > 0xFFFF:
        raise ValueError("string too long for model file")
    return struct.pack("<H", len(raw)) + raw


class _Reader:
    def __init__(self, blob: bytes):
        self.blob = blob
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.blob):
            raise CorruptFile("model file is truncated")
        out = self.blob[self.pos:self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    def take_str(self) -> str:
        (n,) = self.unpack("<H")
        try:
            return self.take(n).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise CorruptFile(f"bad string in model file: {exc}") from exc


def save(model: EmbeddingModel, path) -> None:
    """Binary model file: magic XAEM, version, header, count-ordered
    vocabulary, then input and output matrices as little-endian float32."""
    vocab = model.vocab
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(
            struct.pack(
                "<IIIII",
                FORMAT_VERSION,
                model.dim,
                len(vocab),
                vocab.min_count,
                model.epochs_done,
            )
        )
        fh.write(_pack_str(model.config_digest))
        for entry in vocab.entries:
            fh.write(_pack_str(entry.token))
            fh.write(struct.pack("<Q", entry.count))
        fh.write(np.ascontiguousarray(model.input, dtype="<f4").tobytes())
        fh.write(np.ascontiguousarray(model.output, dtype="<f4").tobytes())


def load(path) -> EmbeddingModel:
    """Inverse of save. Raises CorruptFile on structural damage and
    IncompatibleVersion on an unsupported format version."""
    with open(path, "rb") as fh:
        blob = fh.read()
    r = _Reader(blob)
    if r.take(4) != MAGIC:
        raise CorruptFile("not a model file (bad magic)")
    version, dim, size, min_count, epochs_done = r.unpack("<IIIII")
    if version != FORMAT_VERSION:
        raise IncompatibleVersion(
            f"model format version {version}, expected {FORMAT_VERSION}"
        )
    if dim < 1 or size < 1 or min_count < 1:
        raise CorruptFile("nonsensical header fields")
    digest = r.take_str()
    entries = []
    for _ in range(size):
        token = r.take_str()
        (count,) = r.unpack("<Q")
        try:
            arch, _ = split_token(token)
        except ValueError as exc:
            raise CorruptFile(f"vocabulary token without prefix: {token!r}") from exc
        entries.append(VocabEntry(token, arch, count))
    matrix_bytes = size * dim * 4
    input_mat = np.frombuffer(r.take(matrix_bytes), dtype="<f4").reshape(size, dim).copy()
    output_mat = np.frombuffer(r.take(matrix_bytes), dtype="<f4").reshape(size, dim).copy()
    if r.pos != len(blob):
        raise CorruptFile(f"{len(blob) - r.pos} trailing bytes after matrices")
    try:
        vocab = Vocabulary(entries, min_count=min_count)
    except Exception as exc:
        raise CorruptFile(f"invalid vocabulary block: {exc}") from exc
    return EmbeddingModel(
        vocab, dim, input_mat, output_mat,
        config_digest=digest, epochs_done=epochs_done,
    )


def export_text(model: EmbeddingModel, path) -> None:
    """Text vector format: first line `V d`, then one line per token:
    token text, then d space-separated decimals (float32 precision).
    Token texts contain spaces, so parsers should split fields from the
    right: the last d fields are the vector."""
    vocab = model.vocab
    mat = np.ascontiguousarray(model.input, dtype=np.float32)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{len(vocab)} {model.dim}\n")
        for i, entry in enumerate(vocab.entries):
            values = " ".join(repr(float(v)) for v in mat[i])
            fh.write(f"{entry.token} {values}\n")
