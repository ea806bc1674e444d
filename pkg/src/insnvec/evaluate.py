"""Embedding quality measurements.

Cosine similarity and nearest neighbors over the input matrix, ROC/AUC
scoring of labeled pairs, block embeddings by summation, and the
hand-counted feature baseline the block evaluation is compared against.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import corpus as corpus_mod
from .corpus import Block, BlockPair
from .errors import (
    AllTokensUnknown,
    DimensionMismatch,
    EmptySide,
    MalformedRecord,
    UnknownToken,
    ZeroVector,
)
from .model import EmbeddingModel
from .normalize import arch_spec, leaf_tokens, normalize_text, split_token

NUM_LEAF = "0"
STR_LEAF = "<STR>"


@dataclass(frozen=True)
class LabeledPair:
    """Two (arch, canonical token) sides with a similarity label of 1
    (similar) or -1 (dissimilar)."""

    left: tuple[str, str]
    right: tuple[str, str]
    label: int

    def __post_init__(self):
        if self.label not in (1, -1):
            raise ValueError(f"label must be 1 or -1, got {self.label!r}")


@dataclass(frozen=True)
class RocCurve:
    """Threshold-sweep ROC points from (0,0) to (1,1) plus the AUC.

    The AUC is the Mann-Whitney rank statistic (average ranks for ties)
    and equals the trapezoidal integral of the points."""

    points: tuple[tuple[float, float], ...]
    auc: float

    def lines(self) -> list[str]:
        """Plot-ready output: fpr<TAB>tpr rows plus the final AUC row."""
        rows = [f"{fpr:.6f}\t{tpr:.6f}" for fpr, tpr in self.points]
        rows.append(f"AUC\t{self.auc:.6f}")
        return rows


@dataclass(frozen=True)
class BlockFeatureVector:
    """Hand-counted block statistics: (instructions, constants, strings,
    calls, branches)."""

    instructions: int
    constants: int
    strings: int
    calls: int
    branches: int

    def as_array(self) -> np.ndarray:
        return np.array(
            [self.instructions, self.constants, self.strings, self.calls, self.branches],
            dtype=np.float64,
        )


@dataclass
class EvalReport:
    """ROC result plus the mandatory exclusion accounting."""

    curve: RocCurve
    pairs: int
    scored: int
    excluded: int
    positives: int
    negatives: int
    exclusions: list[str]

    @property
    def auc(self) -> float:
        return self.curve.auc

    def as_dict(self) -> dict:
        return {
            "pairs": self.pairs,
            "scored": self.scored,
            "excluded": self.excluded,
            "positives": self.positives,
            "negatives": self.negatives,
            "auc": self.auc,
            "exclusions": list(self.exclusions),
        }


def cosine(a, b) -> float:
    """a.b / (|a||b|), in [-1, 1]."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionMismatch(f"shapes {a.shape} and {b.shape} differ")
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise ZeroVector("cosine undefined for zero-norm vector")
    return float(np.clip(a @ b / (na * nb), -1.0, 1.0))


def nearest(
    model: EmbeddingModel,
    query: str,
    k: int,
    arch_filter: str | None = None,
) -> list[tuple[str, float]]:
    """Top-k vocabulary tokens by cosine against the query's input
    embedding, excluding the query itself. Ties break by vocabulary id.
    With arch_filter only that architecture's tokens are candidates."""
    if k < 1:
        raise ValueError("k must be >= 1")
    vocab = model.vocab
    idx = vocab.get(query)
    if idx is None:
        raise UnknownToken(f"token not in vocabulary: {query!r}")
    mat = model.input.astype(np.float64, copy=False)
    q = mat[idx]
    qn = np.linalg.norm(q)
    if qn == 0.0:
        raise ZeroVector(f"query {query!r} has a zero embedding")
    norms = np.linalg.norm(mat, axis=1)
    scores = np.full(len(vocab), -np.inf)
    ok = norms > 0.0
    scores[ok] = (mat[ok] @ q) / (norms[ok] * qn)
    scores[idx] = -np.inf
    if arch_filter is not None:
        allowed = np.zeros(len(vocab), dtype=bool)
        if arch_filter in vocab.arch_totals:
            allowed[vocab.arch_ids(arch_filter)] = True
        scores[~allowed] = -np.inf
    order = np.lexsort((np.arange(len(vocab)), -scores))
    out = []
    for i in order[:k]:
        if not np.isfinite(scores[i]):
            break
        out.append((vocab.token_of(int(i)), float(scores[i])))
    return out


def roc_auc(pos_scores, neg_scores) -> RocCurve:
    """ROC curve and AUC for two score sets.

    AUC is computed as the pairwise-win fraction with ties counted half
    (exactly the Mann-Whitney statistic with average ranks); the curve
    comes from a threshold sweep over the union of observed scores.
    """
    pos = np.sort(np.asarray(list(pos_scores), dtype=np.float64))
    neg = np.sort(np.asarray(list(neg_scores), dtype=np.float64))
    if pos.size == 0 or neg.size == 0:
        raise EmptySide(
            f"need both positive and negative scores "
            f"(got {pos.size} positive, {neg.size} negative)"
        )
    wins = np.searchsorted(neg, pos, side="left").sum(dtype=np.float64)
    ties = np.searchsorted(neg, pos, side="right").sum(dtype=np.float64) - wins
    auc = float((wins + 0.5 * ties) / (pos.size * neg.size))
    thresholds = np.unique(np.concatenate([pos, neg]))[::-1]
    tpr = (pos.size - np.searchsorted(pos, thresholds, side="left")) / pos.size
    fpr = (neg.size - np.searchsorted(neg, thresholds, side="left")) / neg.size
    points = [(0.0, 0.0)] + list(zip(fpr.tolist(), tpr.tolist()))
    return RocCurve(points=tuple(points), auc=auc)


# --- labeled-file loading ---

def load_labeled_instruction_pairs(path) -> list[LabeledPair]:
    """Tab-separated file: archA, instrA, archB, instrB, label (1/-1).
    Instruction texts are normalized to canonical tokens on load."""
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            fields = line.split("\t")
            if len(fields) != 5:
                raise MalformedRecord(
                    f"expected 5 tab-separated fields, got {len(fields)}", lineno
                )
            arch_a, ins_a, arch_b, ins_b, label_text = fields
            try:
                label = int(label_text)
                pair = LabeledPair(
                    left=(arch_a, normalize_text(ins_a, arch_a)),
                    right=(arch_b, normalize_text(ins_b, arch_b)),
                    label=label,
                )
            except MalformedRecord:
                raise
            except Exception as exc:
                raise MalformedRecord(str(exc), lineno) from exc
            out.append(pair)
    return out


def load_labeled_block_pairs(path) -> list[tuple[BlockPair, int]]:
    """Corpus-format lines with an extra top-level `"label": 1|-1`."""
    out = []
    for lineno, record in corpus_mod.iter_records(path):
        label = record.get("label")
        if isinstance(label, bool) or label not in (1, -1):
            raise MalformedRecord(f"label must be 1 or -1, got {label!r}", lineno)
        pair = corpus_mod.parse_pair_record(record, lineno)
        out.append((pair, label))
    return out


# --- evaluators ---

def _score_sets(scored: list[tuple[float, int]]) -> tuple[list[float], list[float]]:
    pos = [s for s, lbl in scored if lbl == 1]
    neg = [s for s, lbl in scored if lbl == -1]
    return pos, neg


def _build_report(scored, total, exclusions) -> EvalReport:
    pos, neg = _score_sets(scored)
    if not pos or not neg:
        raise EmptySide(
            f"no {'positive' if not pos else 'negative'} pairs left to score "
            f"({len(exclusions)} of {total} pairs excluded)"
        )
    curve = roc_auc(pos, neg)
    return EvalReport(
        curve=curve,
        pairs=total,
        scored=len(scored),
        excluded=len(exclusions),
        positives=len(pos),
        negatives=len(neg),
        exclusions=exclusions,
    )


def eval_instruction_pairs(model: EmbeddingModel, pairs) -> EvalReport:
    """Score labeled instruction pairs by embedding cosine.

    Pairs touching out-of-vocabulary tokens are excluded and counted in
    the report rather than failing the run; silent exclusion would bias
    the AUC invisibly."""
    pairs = list(pairs)
    scored: list[tuple[float, int]] = []
    exclusions: list[str] = []
    for n, pair in enumerate(pairs):
        try:
            va = model.vector(pair.left[1])
            vb = model.vector(pair.right[1])
        except UnknownToken as exc:
            exclusions.append(f"pair {n}: {exc}")
            continue
        try:
            score = cosine(va, vb)
        except ZeroVector:
            score = 0.0  # degenerate embedding; neutral score
        scored.append((score, pair.label))
    return _build_report(scored, len(pairs), exclusions)


def embed_block(model: EmbeddingModel, block: Block) -> np.ndarray:
    """Sum of input embeddings of the block's in-vocabulary tokens."""
    ids = [i for i in (model.vocab.get(t) for t in block.tokens) if i is not None]
    if not ids:
        raise AllTokensUnknown(
            f"no token of block ({block.arch}, {len(block.tokens)} instructions) "
            "is in the vocabulary"
        )
    return np.sum(model.input[ids], axis=0, dtype=np.float64)


def eval_block_pairs(model: EmbeddingModel, labeled) -> EvalReport:
    """Score labeled block pairs by cosine of summed block embeddings."""
    labeled = list(labeled)
    scored: list[tuple[float, int]] = []
    exclusions: list[str] = []
    for pair, label in labeled:
        try:
            va = embed_block(model, pair.first)
            vb = embed_block(model, pair.second)
        except AllTokensUnknown as exc:
            exclusions.append(f"pair {pair.id!r}: {exc}")
            continue
        try:
            score = cosine(va, vb)
        except ZeroVector:
            score = 0.0
        scored.append((score, label))
    return _build_report(scored, len(labeled), exclusions)


def baseline_features(block: Block) -> BlockFeatureVector:
    """Count instructions, constants ("0"/"-0" leaves), strings
    ("<STR>" leaves), call opcodes, and branch opcodes of a block."""
    constants = strings = calls = branches = 0
    for token in block.tokens:
        arch, body = split_token(token)
        spec = arch_spec(arch)
        opcode, _, operand_text = body.partition(" ")
        if opcode in spec.call_opcodes:
            calls += 1
        elif opcode in spec.branch_opcodes:
            branches += 1
        if operand_text:
            for leaf in leaf_tokens(operand_text):
                if leaf == NUM_LEAF:
                    constants += 1
                elif leaf == STR_LEAF:
                    strings += 1
    return BlockFeatureVector(
        instructions=len(block.tokens),
        constants=constants,
        strings=strings,
        calls=calls,
        branches=branches,
    )


def eval_block_pairs_baseline(labeled) -> EvalReport:
    """Score labeled block pairs by cosine of the two feature vectors.
    All-zero feature vectors score 0. Needs no trained model."""
    labeled = list(labeled)
    scored: list[tuple[float, int]] = []
    for pair, label in labeled:
        fa = baseline_features(pair.first).as_array()
        fb = baseline_features(pair.second).as_array()
        try:
            score = cosine(fa, fb)
        except ZeroVector:
            score = 0.0
        scored.append((score, label))
    return _build_report(scored, len(labeled), exclusions=[])
