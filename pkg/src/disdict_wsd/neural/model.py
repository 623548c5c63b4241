"""Model parameters, vocabularies, embedding files and checkpoints."""

from __future__ import annotations

import io
import json
import zipfile
from collections import Counter
from dataclasses import asdict, dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np

from ..errors import DimensionMismatch, UnreadableEmbeddingFile

PAD = "<pad>"
UNK = "<unk>"
PAD_ID, UNK_ID = 0, 1

CHECKPOINT_VERSION = 1


@dataclass
class ModelConfig:
    embed_dim: int = 400
    hidden: int = 400
    layers: int = 2
    t_window: int = 20
    dropout: float = 0.5
    neg_samples: int = 256
    fc_dim: int = 800
    ctx_dim: int = 400
    freeze_embeddings: bool = False
    vocab: List[str] = field(default_factory=lambda: [PAD, UNK])
    synset_vocab: List[str] = field(default_factory=list)
    feature_vocab: List[str] = field(default_factory=list)

    def __post_init__(self):
        for name in ("embed_dim", "hidden", "layers", "t_window", "fc_dim", "ctx_dim"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if not 0 <= self.dropout < 1:
            raise ValueError("dropout must be in [0, 1)")
        if self.vocab[:2] != [PAD, UNK]:
            self.vocab = [PAD, UNK] + [w for w in self.vocab if w not in (PAD, UNK)]


def build_vocab(sequences: Iterable[Sequence[str]], extra: Iterable[str] = (),
                min_count: int = 1) -> List[str]:
    """Word list ``[<pad>, <unk>, ...]`` ordered by frequency, then alphabetically.

    ``extra`` words (e.g. multiword feature words used as prediction targets) are
    always included.
    """
    counts: Counter = Counter()
    for seq in sequences:
        counts.update(seq)
    words = {w for w, c in counts.items() if c >= min_count}
    words.update(extra)
    words.discard(PAD)
    words.discard(UNK)
    ordered = sorted(words, key=lambda w: (-counts.get(w, 0), w))
    return [PAD, UNK] + ordered


class Model:
    """Embedding table, two LSTM stacks, two fully-connected layers, two output tables.

    Parameters live in ``self.params`` (name -> float64 array):

    - ``emb``: (|vocab|, embed_dim)
    - ``lstm_{fwd,bwd}{layer}_W`` / ``_b``: (4*hidden, in + hidden) / (4*hidden,)
    - ``W1``/``b1``: (fc_dim, 2*hidden), ``W2``/``b2``: (ctx_dim, fc_dim)
    - ``syn_out``: (|synset_vocab|, ctx_dim), ``word_out``: (|vocab|, ctx_dim)
    """

    def __init__(self, config: ModelConfig, params: Dict[str, np.ndarray]):
        self.config = config
        self.params = params
        self.word_index = {w: i for i, w in enumerate(config.vocab)}
        self.syn_index = {s: i for i, s in enumerate(config.synset_vocab)}

    @property
    def d_ctx(self) -> int:
        return self.config.ctx_dim

    def lstm_names(self, direction: str) -> List[str]:
        return [f"lstm_{direction}{l}" for l in range(self.config.layers)]

    def word_ids(self, words: Sequence[str]) -> List[int]:
        idx = self.word_index
        return [idx.get(w, UNK_ID) for w in words]

    def copy(self) -> "Model":
        return Model(self.config, {k: v.copy() for k, v in self.params.items()})

    def n_params(self) -> int:
        return sum(v.size for v in self.params.values())


def param_shapes(config: ModelConfig) -> Dict[str, tuple]:
    H, E = config.hidden, config.embed_dim
    shapes = {"emb": (len(config.vocab), E)}
    for direction in ("fwd", "bwd"):
        for l in range(config.layers):
            d_in = E if l == 0 else H
            shapes[f"lstm_{direction}{l}_W"] = (4 * H, d_in + H)
            shapes[f"lstm_{direction}{l}_b"] = (4 * H,)
    shapes["W1"] = (config.fc_dim, 2 * H)
    shapes["b1"] = (config.fc_dim,)
    shapes["W2"] = (config.ctx_dim, config.fc_dim)
    shapes["b2"] = (config.ctx_dim,)
    shapes["syn_out"] = (len(config.synset_vocab), config.ctx_dim)
    shapes["word_out"] = (len(config.vocab), config.ctx_dim)
    return shapes


def width_matched_std(config: ModelConfig, ref_width: int = 400, ref_std: float = 0.1) -> float:
    """Init std giving a narrow model the per-layer gain that ``ref_std`` gives at ``ref_width``.

    Equals ``ref_std`` at the reference width; used for desk-scale toy models.
    """
    return ref_std * (ref_width / config.hidden) ** 0.5


def init_model(config: ModelConfig, pretrained: Optional[str] = None, seed: int = 0,
               std: float = 0.1) -> Model:
    """Gaussian(0, ``std``) initialization; rows found in ``pretrained`` are copied in."""
    rng = np.random.default_rng(seed)
    params = {name: rng.normal(0.0, std, size=shape) for name, shape in param_shapes(config).items()}
    if pretrained is not None:
        table, found = load_embeddings(pretrained, config.vocab, config.embed_dim)
        params["emb"][found] = table[found]
    return Model(config, params)


def load_embeddings(path, vocab: Sequence[str], dim: int):
    """Read ``word v1 ... vd`` lines.

    Returns ``(table, found)``: a (|vocab|, dim) array and a boolean mask of the
    vocabulary rows present in the file.  A leading ``count dim`` header line is
    accepted.
    """
    index = {w: i for i, w in enumerate(vocab)}
    table = np.zeros((len(vocab), dim))
    found = np.zeros(len(vocab), dtype=bool)
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise UnreadableEmbeddingFile(str(exc)) from exc
    with fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.rstrip().split(" ")
            if lineno == 1 and len(parts) == 2 and all(p.isdigit() for p in parts):
                if int(parts[1]) != dim:
                    raise DimensionMismatch(f"file dimension {parts[1]} != embed_dim {dim}")
                continue
            if len(parts) < 2:
                continue
            if len(parts) - 1 != dim:
                raise DimensionMismatch(f"{path}:{lineno}: {len(parts) - 1} values, expected {dim}")
            i = index.get(parts[0])
            if i is None:
                continue
            try:
                table[i] = np.array(parts[1:], dtype=np.float64)
            except ValueError:
                raise UnreadableEmbeddingFile(f"{path}:{lineno}: non-numeric value") from None
            found[i] = True
    return table, found


def save_embeddings(path, words: Sequence[str], table: np.ndarray) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for w, row in zip(words, table):
            fh.write(w + " " + " ".join(repr(float(v)) for v in row) + "\n")


# Fixed zip timestamp keeps checkpoints byte-identical across runs.
_ZIP_DATE = (1980, 1, 1, 0, 0, 0)


def save_checkpoint(model: Model, path) -> None:
    """Zip archive readable by ``np.load``: ``config.json`` plus one ``.npy`` per tensor."""
    header = {"version": CHECKPOINT_VERSION, "config": asdict(model.config)}
    with zipfile.ZipFile(path, "w", compression=zipfile.ZIP_STORED) as zf:
        zf.writestr(zipfile.ZipInfo("config.json", _ZIP_DATE),
                    json.dumps(header, sort_keys=True, ensure_ascii=False))
        for name in sorted(model.params):
            buf = io.BytesIO()
            np.lib.format.write_array(buf, np.ascontiguousarray(model.params[name]),
                                      allow_pickle=False)
            zf.writestr(zipfile.ZipInfo(f"{name}.npy", _ZIP_DATE), buf.getvalue())


def load_checkpoint(path) -> Model:
    with zipfile.ZipFile(path) as zf:
        header = json.loads(zf.read("config.json"))
        if header.get("version") != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {header.get('version')}")
        config = ModelConfig(**header["config"])
        params = {}
        for info in zf.infolist():
            if info.filename.endswith(".npy"):
                params[info.filename[:-4]] = np.lib.format.read_array(
                    io.BytesIO(zf.read(info)), allow_pickle=False)
    expected = param_shapes(config)
    for name, shape in expected.items():
        if name not in params or params[name].shape != shape:
            raise ValueError(f"checkpoint tensor {name} missing or misshapen")
    return Model(config, params)
