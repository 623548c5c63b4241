from .gradcheck import gradient_check, relative_errors
from .inference import MFS, RANDOM, InferOptions, Query, infer, infer_many
from .model import (
    Model,
    ModelConfig,
    build_vocab,
    init_model,
    load_checkpoint,
    load_embeddings,
    save_checkpoint,
    save_embeddings,
    width_matched_std,
)
from .network import (
    SYNSET,
    WORD,
    FixedSampler,
    UniformSampler,
    encode_forward,
    full_softmax_loss,
    head_distribution,
    make_batch,
)
from .training import (
    TrainConfig,
    TrainLog,
    draw_sources,
    encode_labeled,
    encode_pairs,
    joint_loss,
    predict_synsets,
    train,
    training_accuracy,
)


def encode_context(model, left, right, train_mode=False, rng=None):
    """Context vector (d_ctx,) for one left/right token sequence pair."""
    ctx, _ = encode_forward(model, make_batch(model, [left], [right]), train=train_mode, rng=rng)
    return ctx[0]
