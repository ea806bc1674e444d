"""scikit-learn style front door for the embedding pipeline.

InstructionEmbedder wraps vocabulary construction, model initialization
and joint training behind fit/transform so the embedding space composes
with the wider sklearn ecosystem (pipelines, grid search over the
hyperparameters, clone).
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from . import evaluate, model as model_mod
from .corpus import BlockPair, build_vocab
from .model import TrainConfig


def check_pairs(X) -> list[BlockPair]:
    """Validate fit input: a nonempty iterable of BlockPair."""
    pairs = list(X)
    if not pairs:
        raise ValueError("fit needs at least one BlockPair")
    for n, pair in enumerate(pairs):
        if not isinstance(pair, BlockPair):
            raise TypeError(
                f"element {n} is {type(pair).__name__}, expected BlockPair"
            )
    return pairs


def check_tokens(X) -> list[str]:
    """Validate transform input: an iterable of canonical token texts."""
    tokens = list(X)
    for n, token in enumerate(tokens):
        if not isinstance(token, str):
            raise TypeError(f"element {n} is {type(token).__name__}, expected str")
    return tokens


class InstructionEmbedder(BaseEstimator, TransformerMixin):
    """Learns one shared embedding space for instructions of several
    architectures from equivalent-block pairs.

    fit(X) expects a sequence of BlockPair; transform(X) maps canonical
    token texts to embedding rows. Parameters mirror TrainConfig.
    """

    def __init__(
        self,
        dim: int = 200,
        window: int = 5,
        epochs: int = 10,
        learning_rate: float = 0.05,
        negatives: int = 30,
        subsample: float = 1e-5,
        gamma: float = 1.0,
        beta: float = 4.0,
        min_count: int = 5,
        seed: int = 1,
        workers: int = 1,
        dynamic_window: bool = False,
        include_aligned_center: bool = False,
    ):
        self.dim = dim
        self.window = window
        self.epochs = epochs
        self.learning_rate = learning_rate
        self.negatives = negatives
        self.subsample = subsample
        self.gamma = gamma
        self.beta = beta
        self.min_count = min_count
        self.seed = seed
        self.workers = workers
        self.dynamic_window = dynamic_window
        self.include_aligned_center = include_aligned_center

    def _train_config(self) -> TrainConfig:
        return TrainConfig(**self.get_params())

    def fit(self, X, y=None):
        """Build the vocabulary over X and train the joint model."""
        pairs = check_pairs(X)
        cfg = self._train_config()
        self.vocabulary_ = build_vocab(pairs, cfg.min_count)
        self.model_ = model_mod.init(self.vocabulary_, cfg.dim, cfg.seed)
        self.report_ = model_mod.train(self.model_, pairs, cfg)
        return self

    def transform(self, X) -> np.ndarray:
        """Map canonical token texts to their input embeddings, shape
        (len(X), dim). Unknown tokens raise UnknownToken."""
        check_is_fitted(self, "model_")
        tokens = check_tokens(X)
        rows = [self.model_.vector(t) for t in tokens]
        if not rows:
            return np.empty((0, self.model_.dim), dtype=np.float64)
        return np.vstack(rows).astype(np.float64)

    def embed_blocks(self, blocks) -> np.ndarray:
        """Summed block embeddings, shape (len(blocks), dim)."""
        check_is_fitted(self, "model_")
        out = [evaluate.embed_block(self.model_, b) for b in blocks]
        if not out:
            return np.empty((0, self.model_.dim), dtype=np.float64)
        return np.vstack(out)

    def similarity(self, a: str, b: str) -> float:
        """Cosine similarity of two tokens' embeddings."""
        check_is_fitted(self, "model_")
        return evaluate.cosine(self.model_.vector(a), self.model_.vector(b))

    def nearest(self, token: str, k: int = 10, arch: str | None = None):
        """Top-k nearest tokens; see evaluate.nearest."""
        check_is_fitted(self, "model_")
        return evaluate.nearest(self.model_, token, k, arch_filter=arch)

    def save(self, path) -> None:
        check_is_fitted(self, "model_")
        model_mod.save(self.model_, path)

    @classmethod
    def from_file(cls, path) -> "InstructionEmbedder":
        """Wrap an already trained model file in a fitted embedder."""
        loaded = model_mod.load(path)
        est = cls(dim=loaded.dim)
        est.model_ = loaded
        est.vocabulary_ = loaded.vocab
        est.report_ = model_mod.TrainReport()
        return est
