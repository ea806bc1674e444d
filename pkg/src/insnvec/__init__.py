"""insnvec: one shared embedding space for instructions of several ISAs.

Instructions are normalized to a closed token alphabet, then a joint
CBOW objective is trained over equivalent basic-block pairs: mono
steps use same-block context windows, cross steps predict each token
from the window around its linearly aligned position in the paired
block of the other architecture. Cosine distances in the resulting
space compare instructions and (by summation) basic blocks across
architectures.
"""

from . import corpus, errors, evaluate, model, normalize, synthetic
from .corpus import (
    Block,
    BlockPair,
    NegativeSampler,
    Vocabulary,
    build_vocab,
    keep_probability,
    load_pairs,
    sample_negative,
    save_pairs,
)
from .estimator import InstructionEmbedder, check_pairs, check_tokens
from .evaluate import (
    BlockFeatureVector,
    EvalReport,
    LabeledPair,
    RocCurve,
    baseline_features,
    cosine,
    embed_block,
    eval_block_pairs,
    eval_block_pairs_baseline,
    eval_instruction_pairs,
    load_labeled_block_pairs,
    load_labeled_instruction_pairs,
    nearest,
    roc_auc,
)
from .model import (
    EmbeddingModel,
    TrainConfig,
    TrainingStep,
    TrainReport,
    align,
    apply_step,
    cbow_step,
    export_text,
    init,
    load,
    mono_pass,
    multi_pass,
    save,
    step_loss,
    train,
)
from .normalize import (
    NormalizedInstruction,
    OperandKind,
    OperandToken,
    ParsedInstruction,
    classify_operand,
    normalize as normalize_instruction,
    normalize_text,
    parse_instruction,
    render_token,
)

__version__ = "0.1.0"

__all__ = [
    "Block",
    "BlockFeatureVector",
    "BlockPair",
    "EmbeddingModel",
    "EvalReport",
    "InstructionEmbedder",
    "LabeledPair",
    "NegativeSampler",
    "NormalizedInstruction",
    "OperandKind",
    "OperandToken",
    "ParsedInstruction",
    "RocCurve",
    "TrainConfig",
    "TrainReport",
    "TrainingStep",
    "Vocabulary",
    "align",
    "apply_step",
    "baseline_features",
    "build_vocab",
    "cbow_step",
    "check_pairs",
    "check_tokens",
    "classify_operand",
    "corpus",
    "cosine",
    "embed_block",
    "errors",
    "eval_block_pairs",
    "eval_block_pairs_baseline",
    "eval_instruction_pairs",
    "evaluate",
    "export_text",
    "init",
    "keep_probability",
    "load",
    "load_labeled_block_pairs",
    "load_labeled_instruction_pairs",
    "load_pairs",
    "model",
    "mono_pass",
    "multi_pass",
    "nearest",
    "normalize",
    "normalize_instruction",
    "normalize_text",
    "parse_instruction",
    "render_token",
    "roc_auc",
    "sample_negative",
    "save",
    "save_pairs",
    "step_loss",
    "synthetic",
    "train",
]
