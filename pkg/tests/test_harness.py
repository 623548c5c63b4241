import json
import subprocess
import sys

import pytest
from hypothesis import given, settings, strategies as st

from disdict_wsd.datagen import MANUAL, TaggedToken
from disdict_wsd.errors import ConfigError, MalformedXml, MissingGoldKey, StageError
from disdict_wsd.harness import (
    BUCKETS,
    EvalInstance,
    bucket_of,
    bucket_report,
    format_table,
    full_report,
    load_config,
    load_eval_dataset,
    load_semcor_style,
    mfs_predict,
    run_pipeline,
    score,
    write_report_tsv,
)
from disdict_wsd.harness.pipeline import evaluate_dataset, parse_overrides
from disdict_wsd.harness.scoring import f1_of
from disdict_wsd.neural import InferOptions, ModelConfig, build_vocab, init_model
from disdict_wsd.synthetic import write_eval_xml
from disdict_wsd.wordnet_kb import Pos

from conftest import FIXTURES, TINY_WN

XML = FIXTURES / "tiny_eval.data.xml"
GOLD = FIXTURES / "tiny_eval.gold.key.txt"


def inst(iid, keys, pos=Pos.NOUN, lemma="dog"):
    return EvalInstance(iid, lemma, pos, (TaggedToken(lemma, pos),), 0, tuple(keys))


# -- dataset loading -----------------------------------------------------------

def test_load_fixture():
    data = load_eval_dataset(XML, GOLD)
    assert [i.id for i in data] == [line.split()[0] for line in GOLD.read_text().splitlines()]
    first = data[0]
    assert first.lemma == "dog" and first.pos is Pos.NOUN
    assert first.surfaces == ["the", "dogs", "barked", "."]
    assert first.sentence[2].pos is Pos.VERB and first.sentence[3].pos is None
    assert first.target_index == 1
    assert data[2].gold_keys == ("dog%1:03:01::", "dog%1:03:00::")


def test_missing_gold(tmp_path):
    gold = tmp_path / "g.txt"
    gold.write_text("\n".join(GOLD.read_text().splitlines()[:-1]) + "\n")
    with pytest.raises(MissingGoldKey):
        load_eval_dataset(XML, gold)


def test_malformed_xml(tmp_path):
    bad = tmp_path / "bad.xml"
    bad.write_text("<corpus><text><sentence><wf>oops</sentence></corpus>")
    with pytest.raises(MalformedXml):
        load_eval_dataset(bad, GOLD)
    noid = tmp_path / "noid.xml"
    noid.write_text('<corpus><text><sentence><instance lemma="dog" pos="NOUN">dog</instance>'
                    "</sentence></text></corpus>")
    with pytest.raises(MalformedXml):
        load_eval_dataset(noid, GOLD)


def test_manual_corpus_counts(tmp_path, tiny_graph):
    keys = ["dog%1:03:00::", "dog%1:03:00::", "dog%1:03:01::", "frump%1:03:00::", "entity%1:03:00::",
            "dog%1:03:00::", "bogus%1:03:00::", "domestic_dog%1:03:00::", "entity%1:03:00::",
            "dog%1:03:01::"]
    sents = [[("a", "DET"), (k.split("%")[0].replace("_", " "), "NOUN", k.split("%")[0], [k]), ("b", "X")]
             for k in keys]
    write_eval_xml(tmp_path / "m.xml", tmp_path / "m.gold", sents)
    data = load_semcor_style(tmp_path / "m.xml", tmp_path / "m.gold", tiny_graph, t_window=5)
    assert data.skipped == 1
    assert len(data.instances) == 9
    assert all(i.provenance == MANUAL and i.left == ("a",) and i.right == ("b",) for i in data.instances)
    recount = {}
    for line in (tmp_path / "m.gold").read_text().splitlines():
        key = line.split()[1]
        sid = tiny_graph.synset_for_key(key)
        if sid is not None:
            recount[sid] = recount.get(sid, 0) + 1
    assert dict(data.synset_counts) == recount


# -- MFS and scoring ------------------------------------------------------------

def test_mfs_on_fixture(tiny_graph):
    data = load_eval_dataset(XML, GOLD)
    preds = mfs_predict(data, tiny_graph)
    assert preds["d000.s001.t001"] == "dog%1:03:00::"
    assert preds == mfs_predict(data, tiny_graph)
    assert score(preds, data).f1 == 1.0
    unknown = [inst("x", ["unicorn%1:03:00::"], lemma="unicorn")]
    assert mfs_predict(unknown, tiny_graph) == {}


def test_three_of_four():
    data = [inst(f"i{k}", [f"k{k}"]) for k in range(4)]
    rep = score({"i0": "k0", "i1": "k1", "i2": "k2", "i3": "wrong"}, data)
    assert (rep.precision, rep.recall, rep.f1) == (0.75, 0.75, 0.75)


def test_second_gold_key_counts():
    rep = score({"a": "k2"}, [inst("a", ["k1", "k2"])])
    assert rep.f1 == 1.0


def test_unattempted_instance():
    data = [inst(f"i{k}", [f"k{k}"]) for k in range(4)]
    rep = score({"i0": "k0", "i1": "k1", "i2": "bad"}, data)
    assert rep.precision == 2 / 3 and rep.recall == 0.5
    assert rep.precision > rep.f1 > rep.recall
    assert rep.f1 == pytest.approx(2 * rep.precision * rep.recall / (rep.precision + rep.recall), abs=1e-15)
    assert rep.counts.attempted == 3 and rep.counts.total == 4


def test_unknown_prediction_ids_rejected():
    with pytest.raises(ValueError):
        score({"ghost": "k"}, [inst("a", ["k"])])


def test_per_pos_split():
    data = [inst("n", ["k"]), inst("v", ["k"], pos=Pos.VERB), inst("s", ["k"], pos=Pos.ADJ_SATELLITE)]
    rep = score({"n": "k", "v": "x", "s": "k"}, data)
    assert rep.per_pos == {Pos.NOUN: 1.0, Pos.VERB: 0.0, Pos.ADJ: 1.0}


outcomes = st.lists(st.tuples(st.sampled_from(["hit", "miss", "skip"]),
                              st.sampled_from([Pos.NOUN, Pos.VERB, Pos.ADJ, Pos.ADV]),
                              st.integers(0, 400)), min_size=1, max_size=60)


def _build(rows):
    data, preds = [], {}
    for k, (what, pos, freq) in enumerate(rows):
        data.append(EvalInstance(f"i{k}", "w", pos, (TaggedToken("w", pos),), 0, (f"g{k}",)))
        if what != "skip":
            preds[f"i{k}"] = f"g{k}" if what == "hit" else "nope"
    return data, preds


@settings(max_examples=200, deadline=None)
@given(outcomes)
def test_scorer_identity(rows):
    rows = [("hit" if w == "skip" else w, p, f) for w, p, f in rows]
    data, preds = _build(rows)
    rep = score(preds, data)
    assert rep.precision == rep.recall == rep.f1
    for c in rep.pos_counts.values():
        assert c.precision == c.recall == c.f1


@settings(max_examples=200, deadline=None)
@given(outcomes)
def test_f1_is_harmonic_mean(rows):
    data, preds = _build(rows)
    rep = score(preds, data)
    if rep.precision + rep.recall:
        assert rep.f1 == pytest.approx(2 * rep.precision * rep.recall / (rep.precision + rep.recall),
                                       rel=1e-12)
    else:
        assert rep.f1 == 0


# -- buckets --------------------------------------------------------------------

@pytest.mark.parametrize("freq,label", [(0, "0<=f<=5"), (5, "0<=f<=5"), (6, "5<f<=30"), (30, "5<f<=30"),
                                        (31, "30<f<=150"), (150, "30<f<=150"), (151, "f>150")])
def test_bucket_boundaries(freq, label):
    assert bucket_of(freq) == label


def test_bucket_fixture(tiny_graph):
    g = tiny_graph
    # gold synset frequencies: dog.n.01 = 3, frump.n.01 = 12, entity.n.01 = 200
    counts = {g.sid("dog.n.01"): 3, g.sid("frump.n.01"): 12, g.sid("entity.n.01"): 200}
    data = [
        inst("a", ["dog%1:03:00::"]), inst("b", ["dog%1:03:00::"]),  # bucket 0, hit + miss
        inst("c", ["frump%1:03:00::"], lemma="frump"),               # bucket 1, hit
        inst("d", ["dog%1:03:01::", "dog%1:03:00::"]),               # first key frump.n.01 -> bucket 1, skipped
        inst("e", ["entity%1:03:00::"], lemma="entity"),             # bucket 3, hit
        inst("f", ["entity%1:03:00::"], lemma="entity"),             # bucket 3, miss
        inst("g", ["entity%1:03:00::"], lemma="entity"),             # bucket 3, hit
        inst("h", ["unknown%1:03:00::"]),                            # unknown key -> bucket 0, hit
    ]
    preds = {"a": "dog%1:03:00::", "b": "x", "c": "frump%1:03:00::", "e": "entity%1:03:00::",
             "f": "x", "g": "entity%1:03:00::", "h": "unknown%1:03:00::"}
    rep = bucket_report(counts, data, preds, g)
    assert rep["0<=f<=5"] == pytest.approx(2 / 3)           # 2 of 3, all attempted
    p, r = 1 / 1, 1 / 2                                     # bucket 1: 1 correct, 1 attempted, 2 total
    assert rep["5<f<=30"] == pytest.approx(2 * p * r / (p + r))
    assert rep["30<f<=150"] == 0.0
    assert rep["f>150"] == pytest.approx(2 / 3)
    # names work as keys too
    assert bucket_report({s.name: n for s, n in counts.items()}, data, preds, g) == rep


@settings(max_examples=100, deadline=None)
@given(outcomes)
def test_buckets_partition_and_recombine(rows):
    from disdict_wsd.wordnet_kb import SynsetId

    class Keys:
        def synset_for_key(self, key):
            return SynsetId.from_name(f"{key}.n.01")

    data, preds = _build(rows)
    counts = {f"g{k}.n.01": f for k, (_, _, f) in enumerate(rows)}
    rep = full_report(preds, data, counts, Keys())
    cs = rep.bucket_counts.values()
    assert sum(c.total for c in cs) == len(data)
    assert f1_of(sum(c.correct for c in cs), sum(c.attempted for c in cs),
                 sum(c.total for c in cs)) == rep.f1


def test_report_files(tmp_path, tiny_graph):
    data = load_eval_dataset(XML, GOLD)
    rep = full_report(mfs_predict(data, tiny_graph), data, {}, tiny_graph)
    write_report_tsv(tmp_path / "r.tsv", rep)
    rows = (tmp_path / "r.tsv").read_text().splitlines()
    assert rows[1].startswith("overall\tall\t100.00")
    assert [r.split("\t")[1] for r in rows[3:]] == list(BUCKETS)
    assert "overall" in format_table(rep)


def test_backoff_parity(tiny_graph):
    """A model that never saw any synset falls back to MFS everywhere."""
    data = load_eval_dataset(XML, GOLD)
    cfg = ModelConfig(embed_dim=4, hidden=3, layers=1, fc_dim=5, ctx_dim=3, dropout=0.0,
                      vocab=build_vocab([["the", "dog"]]), synset_vocab=[])
    model = init_model(cfg, seed=0)
    got = evaluate_dataset(model, tiny_graph, data, InferOptions(backoff="MFS"))
    assert got == mfs_predict(data, tiny_graph)


# -- pipeline ---------------------------------------------------------------------

def test_config_precedence(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"seed": 5, "train": {"epochs": 3, "lr": 0.5}}))
    cfg = load_config(path, parse_overrides(["--train.epochs=7", "--stages=build-disdict,stats"]))
    assert cfg["seed"] == 5                      # file beats default
    assert cfg["train"]["epochs"] == 7           # CLI beats file
    assert cfg["train"]["lr"] == 0.5
    assert cfg["train"]["batch"] == 80           # default
    assert cfg["stages"] == ["build-disdict", "stats"]


def test_config_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_config({"no_such_key": 1})
    with pytest.raises(ConfigError):
        load_config({"stages": ["fly"]})
    with pytest.raises(ConfigError):
        parse_overrides(["train.epochs=3"])
    missing = tmp_path / "nowhere.txt"
    with pytest.raises(ConfigError, match="nowhere.txt"):
        run_pipeline({"wordnet": str(TINY_WN), "corpus": str(missing), "output_dir": str(tmp_path / "o")})


def test_only_build_disdict(tmp_path):
    out = tmp_path / "o"
    run_pipeline({"wordnet": str(TINY_WN), "output_dir": str(out), "stages": ["build-disdict"]})
    assert sorted(p.name for p in out.iterdir()) == ["disdict.tsv"]


def test_stage_error_names_stage(tmp_path):
    with pytest.raises(StageError) as err:
        run_pipeline({"wordnet": str(TINY_WN), "output_dir": str(tmp_path), "stages": ["train"]})
    assert err.value.stage == "train"


def test_cli(tmp_path):
    out = tmp_path / "o"
    cmd = [sys.executable, "-m", "disdict_wsd", "--quiet", f"--wordnet={TINY_WN}",
           f"--output_dir={out}", "--stages=build-disdict,stats"]
    done = subprocess.run(cmd, capture_output=True, text=True)
    assert done.returncode == 0, done.stderr
    stats = json.loads((out / "stats.json").read_text())
    assert stats["disdict"]["synsets"] == 3
    bad = subprocess.run([sys.executable, "-m", "disdict_wsd", "--corpus=/nope", f"--wordnet={TINY_WN}",
                          "--stages=gen-data"], capture_output=True, text=True)
    assert bad.returncode == 2 and "/nope" in bad.stderr


def test_mini_world_pipeline_with_manual_data(mini_world, tmp_path):
    cfg = mini_world.config(output_dir=str(tmp_path / "o"), train={"epochs": 2},
                            manual={"xml": str(mini_world.manual_xml), "gold": str(mini_world.manual_gold)})
    run_pipeline(cfg)
    out = tmp_path / "o"
    for name in ("disdict.tsv", "instances.jsonl", "model.npz", "report_test.tsv", "stats.json",
                 "predictions_test.txt", "train_counts.tsv", "report.txt"):
        assert (out / name).exists(), name
    stats = json.loads((out / "stats.json").read_text())
    assert stats["train"]["epochs"] == 2
    assert 0 <= stats["scores"]["test"]["f1"] <= 1
    counts = (out / "train_counts.tsv").read_text().splitlines()
    assert sum(int(line.split("\t")[1]) for line in counts) == 60
