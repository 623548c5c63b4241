"""Stage runner behind ``python -m disdict_wsd``.

Stages share one output directory and talk only through files there, so any
stage can be rerun on its own:

=============  ==========================================================
build-disdict  ``disdict.tsv``
gen-data       ``instances.jsonl``, ``quota_summary.tsv``, ``unsup_pairs.jsonl``,
               ``corpus_stats.json``
train          ``model.npz``, ``train_log.tsv``, ``train_counts.tsv``
evaluate       ``predictions_<name>.txt``, ``report_<name>.tsv``,
               ``report_<name>_mfs.tsv``, ``scores.json``, ``report.txt``
stats          ``stats.json``
=============  ==========================================================
"""

from __future__ import annotations

import copy
import json
import logging
from collections import Counter
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np

from ..datagen import (
    allocate_quota,
    extract_unsupervised_pairs,
    generate_instances,
    load_corpus,
    read_instances,
    read_pairs,
    synset_frequency_model,
    write_instances,
    write_pairs,
    write_summary,
)
from ..disdict import build_disdict, disdict_stats, load_disdict, save_disdict
from ..errors import ConfigError, StageError
from ..neural import (
    InferOptions,
    ModelConfig,
    Query,
    TrainConfig,
    build_vocab,
    infer_many,
    init_model,
    load_checkpoint,
    save_checkpoint,
    train,
    width_matched_std,
)
from ..wordnet_kb import parse_wordnet
from .datasets import load_eval_dataset, load_semcor_style, write_keys
from .scoring import format_table, full_report, keys_for, mfs_predict, write_report_tsv

log = logging.getLogger(__name__)

STAGES = ("build-disdict", "gen-data", "train", "evaluate", "stats")

DEFAULTS: Dict[str, Any] = {
    "wordnet": None,
    "output_dir": "out",
    "stages": list(STAGES),
    "seed": 0,
    "t_window": 20,
    "corpus": None,
    "manual": None,
    "disdict": {"n_f": 10, "tau": 0.66},
    "datagen": {"p": 0.3, "budget": 100000, "unsup": True, "max_pairs": None},
    "model": {
        "embed_dim": 400, "hidden": 400, "layers": 2, "dropout": 0.5, "neg_samples": 256,
        "fc_dim": 800, "ctx_dim": 400, "freeze_embeddings": False,
        "pretrained": None, "init_std": 0.1, "min_count": 1,
    },
    "train": {
        "lr": 0.1, "alpha": 5.0, "batch": 80, "mix_ratio": [1.0, 0.3], "epochs": 10,
        "steps_per_epoch": None, "use_generated": True,
    },
    "evaluate": {"datasets": [], "mfs_bias": 0.5, "backoff": "MFS"},
}


# --------------------------------------------------------------------------
# Configuration
# --------------------------------------------------------------------------

def merge_config(base: Dict, override: Dict, path: str = "") -> Dict:
    """Recursive merge; keys absent from ``base`` are rejected."""
    out = copy.deepcopy(base)
    for key, value in override.items():
        name = f"{path}{key}"
        if key not in base:
            raise ConfigError(f"unknown config key {name!r}")
        if isinstance(base[key], dict) and isinstance(value, dict):
            out[key] = merge_config(base[key], value, name + ".")
        else:
            out[key] = copy.deepcopy(value)
    return out


def parse_value(text: str):
    try:
        return json.loads(text)
    except ValueError:
        return text


def parse_overrides(args: Sequence[str]) -> Dict:
    """``--a.b=value`` flags to a nested dict (values parsed as JSON when possible)."""
    out: Dict = {}
    for arg in args:
        if not arg.startswith("--") or "=" not in arg:
            raise ConfigError(f"expected --key=value, got {arg!r}")
        key, value = arg[2:].split("=", 1)
        node = out
        parts = key.split(".")
        for p in parts[:-1]:
            node = node.setdefault(p, {})
        node[parts[-1]] = parse_value(value)
    return out


def load_config(source: Union[str, Path, Dict, None] = None, overrides: Optional[Dict] = None) -> Dict:
    """Defaults, then the config file (or dict), then ``overrides``."""
    cfg = copy.deepcopy(DEFAULTS)
    if source is not None:
        if isinstance(source, dict):
            data = source
            base_dir = Path.cwd()
        else:
            path = Path(source)
            try:
                data = json.loads(path.read_text(encoding="utf-8"))
            except OSError as exc:
                raise ConfigError(f"cannot read config {path}: {exc}") from exc
            except ValueError as exc:
                raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
            base_dir = path.parent
        cfg = merge_config(cfg, data)
        cfg["_base"] = str(base_dir)
    if overrides:
        cfg = merge_config(cfg, overrides)
    stages = cfg["stages"]
    if isinstance(stages, str):
        stages = [s for s in stages.split(",") if s]
    for s in stages:
        if s not in STAGES:
            raise ConfigError(f"unknown stage {s!r} (choose from {', '.join(STAGES)})")
    cfg["stages"] = [s for s in STAGES if s in stages]
    return cfg


def _path(cfg: Dict, value) -> Optional[Path]:
    if value is None:
        return None
    p = Path(value)
    return p if p.is_absolute() else Path(cfg.get("_base", ".")) / p


def _require(cfg: Dict, value, what: str) -> Path:
    p = _path(cfg, value)
    if p is None:
        raise ConfigError(f"{what} is not set")
    if not p.exists():
        raise ConfigError(f"{what} not found: {p}")
    return p


def validate(cfg: Dict) -> None:
    stages = cfg["stages"]
    if set(stages) & {"build-disdict", "gen-data", "train", "evaluate"}:
        _require(cfg, cfg["wordnet"], "wordnet directory")
    if "gen-data" in stages:
        _require(cfg, cfg["corpus"], "corpus")
    if cfg["manual"] is not None and {"train", "evaluate"} & set(stages):
        _require(cfg, cfg["manual"].get("xml"), "manual xml")
        _require(cfg, cfg["manual"].get("gold"), "manual gold")
    if "evaluate" in stages:
        for ds in cfg["evaluate"]["datasets"]:
            _require(cfg, ds.get("xml"), f"dataset {ds.get('name')!r} xml")
            _require(cfg, ds.get("gold"), f"dataset {ds.get('name')!r} gold")


# --------------------------------------------------------------------------
# Stages
# --------------------------------------------------------------------------

class _Run:
    def __init__(self, cfg: Dict):
        self.cfg = cfg
        self.out = _path(cfg, cfg["output_dir"])
        self._graph = None

    @property
    def graph(self):
        if self._graph is None:
            self._graph = parse_wordnet(_path(self.cfg, self.cfg["wordnet"]))
        return self._graph

    def file(self, name: str) -> Path:
        return self.out / name

    def need(self, name: str) -> Path:
        p = self.file(name)
        if not p.exists():
            raise FileNotFoundError(f"{p} missing; run the stage that produces it first")
        return p


def stage_build_disdict(run: _Run) -> None:
    d = build_disdict(run.graph, **run.cfg["disdict"])
    save_disdict(d, run.file("disdict.tsv"))


def stage_gen_data(run: _Run) -> None:
    cfg, g = run.cfg, run.graph
    dg = cfg["datagen"]
    disdict = load_disdict(run.need("disdict.tsv"), g)
    sentences, stats = load_corpus(_path(cfg, cfg["corpus"]), g)
    f_map = synset_frequency_model(disdict, g, stats, dg["p"], dg["budget"])
    quota = allocate_quota(f_map, disdict)
    instances, summary = generate_instances(sentences, disdict, quota, cfg["t_window"], cfg["seed"], g)
    write_instances(run.file("instances.jsonl"), instances)
    write_summary(run.file("quota_summary.tsv"), summary)
    pairs = []
    if dg["unsup"]:
        pairs = extract_unsupervised_pairs(sentences, disdict.feature_vocab(), cfg["t_window"], g)
        if dg["max_pairs"] is not None and len(pairs) > dg["max_pairs"]:
            rng = np.random.default_rng(cfg["seed"])
            keep = np.sort(rng.choice(len(pairs), size=dg["max_pairs"], replace=False))
            pairs = [pairs[i] for i in keep]
    write_pairs(run.file("unsup_pairs.jsonl"), pairs)
    _write_json(run.file("corpus_stats.json"), {
        "sentences": len(sentences), "tokens": stats.token_total,
        "types": len(stats.word_freq)})


def _manual(run: _Run):
    m = run.cfg["manual"]
    if m is None:
        return None
    return load_semcor_style(_path(run.cfg, m["xml"]), _path(run.cfg, m["gold"]), run.graph,
                             run.cfg["t_window"])


def stage_train(run: _Run) -> None:
    cfg = run.cfg
    tcfg = dict(cfg["train"])
    use_generated = tcfg.pop("use_generated")
    generated = read_instances(run.need("instances.jsonl"), run.graph) if use_generated else []
    manual = _manual(run)
    manual_instances = manual.instances if manual else []
    pairs = []
    if tcfg["alpha"] > 0 and run.file("unsup_pairs.jsonl").exists():
        pairs = read_pairs(run.file("unsup_pairs.jsonl"))

    labeled = manual_instances + generated
    if not labeled:
        raise ValueError("no labeled training instances")
    mcfg = dict(cfg["model"])
    pretrained = _path(cfg, mcfg.pop("pretrained"))
    init_std = mcfg.pop("init_std")
    min_count = mcfg.pop("min_count")
    targets = sorted({p.target for p in pairs})
    vocab = build_vocab([i.left + i.right for i in labeled] + [p.left + p.right for p in pairs],
                        extra=targets, min_count=min_count)
    config = ModelConfig(t_window=cfg["t_window"], vocab=vocab,
                         synset_vocab=sorted({i.label.name for i in labeled}),
                         feature_vocab=targets, **mcfg)
    if init_std == "width-matched":
        init_std = width_matched_std(config)
    model = init_model(config, pretrained=str(pretrained) if pretrained else None,
                       seed=cfg["seed"], std=float(init_std))
    tc = TrainConfig(seed=cfg["seed"], **tcfg)
    model, tlog = train(model, manual_instances, generated, pairs, tc)
    save_checkpoint(model, run.file("model.npz"))
    tlog.write(run.file("train_log.tsv"))
    counts = manual.synset_counts if manual else Counter()
    with open(run.file("train_counts.tsv"), "w", encoding="utf-8", newline="\n") as fh:
        for sid in sorted(counts):
            fh.write(f"{sid.name}\t{counts[sid]}\n")


def read_train_counts(path: Path) -> Dict[str, int]:
    out = {}
    if path.exists():
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                name, n = line.rstrip("\n").split("\t")
                out[name] = int(n)
    return out


def evaluate_dataset(model, graph, instances, options: InferOptions) -> Dict[str, str]:
    queries = [Query(i.surfaces, i.target_index, i.lemma, i.pos, key=i.id) for i in instances]
    return keys_for(graph, instances, infer_many(model, graph, queries, options))


def stage_evaluate(run: _Run) -> None:
    cfg, g = run.cfg, run.graph
    ev = cfg["evaluate"]
    model = load_checkpoint(run.need("model.npz"))
    counts = read_train_counts(run.file("train_counts.tsv"))
    options = InferOptions(mfs_bias=ev["mfs_bias"], backoff=ev["backoff"], seed=cfg["seed"])
    scores = {}
    tables = []
    for ds in ev["datasets"]:
        name = ds["name"]
        instances = load_eval_dataset(_path(cfg, ds["xml"]), _path(cfg, ds["gold"]))
        preds = evaluate_dataset(model, g, instances, options)
        write_keys(run.file(f"predictions_{name}.txt"), preds)
        rep = full_report(preds, instances, counts, g)
        write_report_tsv(run.file(f"report_{name}.tsv"), rep)
        mfs = full_report(mfs_predict(instances, g), instances, counts, g)
        write_report_tsv(run.file(f"report_{name}_mfs.tsv"), mfs)
        scores[name] = {"f1": rep.f1, "precision": rep.precision, "recall": rep.recall,
                        "mfs_f1": mfs.f1, "instances": len(instances)}
        tables.append(format_table(rep, f"== {name} (model)"))
        tables.append(format_table(mfs, f"== {name} (MFS)"))
    _write_json(run.file("scores.json"), scores)
    run.file("report.txt").write_text("\n\n".join(tables) + "\n", encoding="utf-8")


def stage_stats(run: _Run) -> None:
    out: Dict[str, Any] = {}
    if run.file("disdict.tsv").exists():
        out["disdict"] = disdict_stats(load_disdict(run.file("disdict.tsv")))
    if run.file("corpus_stats.json").exists():
        out["corpus"] = json.loads(run.file("corpus_stats.json").read_text(encoding="utf-8"))
    if run.file("instances.jsonl").exists():
        insts = read_instances(run.file("instances.jsonl"))
        out["generated"] = {"instances": len(insts),
                            "synsets": len({i.label.name for i in insts})}
    if run.file("quota_summary.tsv").exists():
        req = emi = short = 0
        with open(run.file("quota_summary.tsv"), encoding="utf-8") as fh:
            next(fh)
            for line in fh:
                _, _, r, e = line.rstrip("\n").split("\t")
                req, emi = req + int(r), emi + int(e)
                short += int(e) < int(r)
        out["quota"] = {"requested": req, "emitted": emi, "short_pairs": short}
    if run.file("unsup_pairs.jsonl").exists():
        with open(run.file("unsup_pairs.jsonl"), encoding="utf-8") as fh:
            out["unsup_pairs"] = sum(1 for line in fh if line.strip())
    if run.file("train_log.tsv").exists():
        rows = run.file("train_log.tsv").read_text(encoding="utf-8").splitlines()[1:]
        if rows:
            out["train"] = {"epochs": len(rows), "final_loss": float(rows[-1].split("\t")[1])}
    if run.file("scores.json").exists():
        out["scores"] = json.loads(run.file("scores.json").read_text(encoding="utf-8"))
    _write_json(run.file("stats.json"), out)


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


_RUNNERS = {
    "build-disdict": stage_build_disdict,
    "gen-data": stage_gen_data,
    "train": stage_train,
    "evaluate": stage_evaluate,
    "stats": stage_stats,
}


def run_pipeline(config: Union[str, Path, Dict, None] = None, overrides: Optional[Dict] = None) -> int:
    """Run the configured stages in pipeline order; returns 0 on success.

    Raises ConfigError for bad configuration or missing input paths, and
    StageError (naming the stage) for anything that fails inside a stage.
    """
    cfg = load_config(config, overrides)
    validate(cfg)
    run = _Run(cfg)
    run.out.mkdir(parents=True, exist_ok=True)
    for stage in cfg["stages"]:
        log.info("stage %s", stage)
        try:
            _RUNNERS[stage](run)
        except Exception as exc:
            raise StageError(stage, exc) from exc
    return 0


def main(argv: Optional[List[str]] = None) -> int:
    import argparse
    import sys

    parser = argparse.ArgumentParser(
        prog="disdict_wsd",
        description="Build the discriminative dictionary, generate data, train, evaluate.",
        epilog="Any config value can be overridden with --section.key=value "
               "(e.g. --stages=build-disdict,gen-data --train.epochs=3).")
    parser.add_argument("--config", help="JSON config file")
    parser.add_argument("--quiet", action="store_true", help="only log warnings")
    args, rest = parser.parse_known_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return run_pipeline(args.config, parse_overrides(rest))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
