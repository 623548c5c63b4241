import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from disdict_wsd.datagen import (
    DISDICT,
    Quota,
    TaggedToken,
    allocate_quota,
    corpus_stats,
    extract_unsupervised_pairs,
    generate_instances,
    largest_remainder,
    load_corpus,
    parse_sentence,
    raw_synset_scores,
    read_instances,
    synset_frequency_model,
    write_instances,
    write_summary,
)
from disdict_wsd.disdict import DisDict, DisDictEntry
from disdict_wsd.errors import EmptyModel, IoFailure, MalformedToken
from disdict_wsd.synthetic import SynsetSpec, write_wordnet
from disdict_wsd.wordnet_kb import Pos, parse_wordnet


@pytest.fixture(scope="module")
def accident_graph(tmp_path_factory):
    d = tmp_path_factory.mktemp("wn")
    write_wordnet(d, [
        SynsetSpec("crash", "n", ["accident", "wreck"], "a crash"),
        SynsetSpec("luck", "n", ["accident", "fortuity", "happy chance", "chance event"], "luck"),
        SynsetSpec("opp", "n", ["chance"], "an opportunity"),
        SynsetSpec("go", "v", ["meet"], "come together"),
    ])
    return parse_wordnet(d)


def _dd(graph, pairs):
    entries = {}
    for name, word, conf in pairs:
        sid = graph.sid(name)
        entries.setdefault(sid, []).append(DisDictEntry(sid, word, conf))
    return DisDict(entries, 10)


def _sent(text):
    return parse_sentence(text)


# -- corpus ------------------------------------------------------------------

def test_tagged_line(tmp_path):
    p = tmp_path / "c.txt"
    p.write_text("knowledge_NOUN is_OTHER power_NOUN\n")
    sents, stats = load_corpus(p)
    assert len(sents[0]) == 3
    assert sents[0][0] == TaggedToken("knowledge", Pos.NOUN)
    assert stats.word_freq[("knowledge", Pos.NOUN)] == 1
    assert stats.token_total == 3


def test_empty_corpus(tmp_path):
    p = tmp_path / "c.txt"
    p.write_text("")
    sents, stats = load_corpus(p)
    assert sents == [] and stats.token_total == 0


def test_corpus_errors(tmp_path):
    with pytest.raises(IoFailure):
        load_corpus(tmp_path / "missing.txt")
    p = tmp_path / "c.txt"
    p.write_text("fine_NOUN _NOUN\n")
    with pytest.raises(MalformedToken):
        load_corpus(p)


def test_untagged_tokens_fall_back_to_wordnet_pos(tiny_graph):
    sent = parse_sentence("Dogs bark_VERB xyzzy", tiny_graph)
    assert [t.pos for t in sent] == [Pos.NOUN, Pos.VERB, None]
    assert sent[0].surface == "dogs"


def test_hundred_line_recount(tmp_path):
    rng = np.random.default_rng(5)
    vocab = ["cat", "sat", "mat", "on", "the", "dog", "ran"]
    tags = ["NOUN", "VERB", "ADJ", "ADV", "OTHER"]
    lines = [" ".join(f"{rng.choice(vocab)}_{rng.choice(tags)}" for _ in range(rng.integers(1, 15)))
             for _ in range(100)]
    p = tmp_path / "c.txt"
    p.write_text("\n".join(lines) + "\n")
    _, stats = load_corpus(p)
    recount = Counter()
    for line in lines:
        for tok in line.split():
            recount[tuple(tok.split("_"))] += 1
    tag_pos = {"NOUN": Pos.NOUN, "VERB": Pos.VERB, "ADJ": Pos.ADJ, "ADV": Pos.ADV, "OTHER": None}
    assert stats.word_freq == Counter({(w, tag_pos[t]): c for (w, t), c in recount.items()})
    assert stats.token_total == sum(recount.values())


@settings(max_examples=50, deadline=None)
@given(st.lists(st.lists(st.sampled_from(["a_NOUN", "b_VERB", "c_OTHER", "a_OTHER"]), min_size=1),
                max_size=20), st.integers(0, 20))
def test_stats_merge_is_order_independent(lines, cut):
    sents = [_sent(" ".join(l)) for l in lines]
    whole = corpus_stats(sents)
    a, b = corpus_stats(sents[:cut]), corpus_stats(sents[cut:])
    assert a.merge(b) == whole == b.merge(a)


# -- frequencies and quotas --------------------------------------------------

def test_rank_contributions(tiny_graph):
    raw = raw_synset_scores(tiny_graph, {("dog", Pos.NOUN): 100}, 0.3)
    assert raw[tiny_graph.sid("dog.n.01")] == 100 * 0.3 ** 1 == pytest.approx(30.0, abs=1e-12)
    assert raw[tiny_graph.sid("frump.n.01")] == 100 * 0.3 ** 2 == pytest.approx(9.0, abs=1e-12)


def test_p_one_spreads_evenly(tiny_graph):
    raw = raw_synset_scores(tiny_graph, {("dog", Pos.NOUN): 100}, 1.0)
    assert raw[tiny_graph.sid("dog.n.01")] == raw[tiny_graph.sid("frump.n.01")] == 100


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 8), st.floats(0.01, 0.99), st.integers(1, 10_000))
def test_rank_bias_strictly_decreasing(k, p, f):
    contrib = [f * p ** rank for rank in range(1, k + 1)]
    assert all(a > b for a, b in zip(contrib, contrib[1:]))


def test_budget_zero_and_empty_model(tiny_graph):
    stats = corpus_stats([_sent("dogs_NOUN ran_VERB")])
    f = synset_frequency_model(None, tiny_graph, stats, 0.3, 0)
    assert set(f.values()) == {0}
    with pytest.raises(EmptyModel):
        synset_frequency_model(None, tiny_graph, corpus_stats([_sent("xyz_NOUN")]), 0.3, 10)


def test_frequency_model_hits_budget(tiny_graph):
    stats = corpus_stats([_sent("dogs_NOUN entity_NOUN dog_NOUN frump_NOUN")])
    f = synset_frequency_model(None, tiny_graph, stats, 0.3, 997)
    assert sum(f.values()) == 997


def test_quota_from_confidence(tiny_graph):
    sid = tiny_graph.sid("dog.n.01")
    d = DisDict({sid: [DisDictEntry(sid, "brainy", 0.52), DisDictEntry(sid, "smart", 0.48)],
                 tiny_graph.sid("frump.n.01"): []}, 10)
    q = allocate_quota({sid: 100, tiny_graph.sid("frump.n.01"): 7}, d)
    assert q.per_pair == {(sid, "brainy"): 52, (sid, "smart"): 48}


@settings(max_examples=300, deadline=None)
@given(st.dictionaries(st.text("abcdef", min_size=1, max_size=3),
                       st.floats(1e-6, 1e6, allow_nan=False), min_size=1, max_size=15),
       st.integers(0, 100_000))
def test_largest_remainder_conserves(weights, total):
    alloc = largest_remainder(weights, total)
    assert sum(alloc.values()) == total
    z = math.fsum(weights.values())
    for k, w in weights.items():
        assert abs(alloc[k] - total * w / z) < 1 + 1e-9


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 5000), st.data())
def test_quota_conservation(budget, data):
    from disdict_wsd.wordnet_kb import SynsetId
    sids = [SynsetId.from_name(f"s{i}.n.01") for i in range(4)]
    entries = {}
    for sid in sids:
        n = data.draw(st.integers(0, 5))
        raw = data.draw(st.lists(st.floats(0.01, 1), min_size=n, max_size=n))
        z = sum(raw)
        entries[sid] = [DisDictEntry(sid, f"w{j}", r / z) for j, r in enumerate(raw)]
    d = DisDict(entries, 10)
    f = largest_remainder({s: 1.0 + i for i, s in enumerate(sids)}, budget)
    q = allocate_quota(f, d)
    for sid in sids:
        got = sum(v for (s, _), v in q.per_pair.items() if s == sid)
        assert got == (f[sid] if entries[sid] else 0)


# -- generation ----------------------------------------------------------------

def test_multiword_feature_labels_context(accident_graph):
    g = accident_graph
    d = _dd(g, [("accident.n.02", "happy chance", 1.0)])
    q = Quota({(g.sid("accident.n.02"), "happy chance"): 5}, {g.sid("accident.n.02"): 5})
    sent = _sent("it_OTHER was_OTHER a_OTHER happy_NOUN chance_NOUN that_OTHER we_OTHER met_VERB")
    insts, summary = generate_instances([sent], d, q, t_window=20, seed=0, graph=g)
    assert len(insts) == 1
    inst = insts[0]
    assert inst.label.name == "accident.n.02" and inst.provenance == DISDICT
    assert inst.left == ("it", "was", "a") and inst.right == ("that", "we", "met")
    assert (summary[0].requested, summary[0].emitted) == (5, 1)


def test_head_pos_must_match(accident_graph):
    g = accident_graph
    d = _dd(g, [("accident.n.02", "fortuity", 1.0)])
    q = Quota({(g.sid("accident.n.02"), "fortuity"): 5}, {})
    insts, _ = generate_instances([_sent("a_OTHER fortuity_VERB")], d, q, graph=g)
    assert insts == []


def test_zero_quota_gives_nothing(accident_graph):
    g = accident_graph
    d = _dd(g, [("accident.n.02", "fortuity", 1.0)])
    q = Quota({(g.sid("accident.n.02"), "fortuity"): 0}, {})
    insts, summary = generate_instances([_sent("a_OTHER fortuity_NOUN")], d, q, graph=g)
    assert insts == [] and summary == []


def _five_occurrences():
    return [_sent(f"w{i}_OTHER fortuity_NOUN x{i}_OTHER") for i in range(5)]


def test_sampling_respects_quota_and_seed(accident_graph):
    g = accident_graph
    d = _dd(g, [("accident.n.02", "fortuity", 1.0)])
    q = Quota({(g.sid("accident.n.02"), "fortuity"): 3}, {})
    a, _ = generate_instances(_five_occurrences(), d, q, seed=7, graph=g)
    b, _ = generate_instances(_five_occurrences(), d, q, seed=7, graph=g)
    assert len(a) == 3 and a == b
    picked = {i.left for i in a}
    assert len(picked) == 3
    others = {frozenset(i.left for i in generate_instances(_five_occurrences(), d, q, seed=s, graph=g)[0])
              for s in range(10)}
    assert len(others) > 1


def test_polysemous_competitor_is_skipped(accident_graph):
    g = accident_graph
    # "accident" names both senses; using it as a feature of one of them would mislabel
    d = _dd(g, [("accident.n.02", "accident", 1.0)])
    q = Quota({(g.sid("accident.n.02"), "accident"): 5}, {})
    insts, _ = generate_instances([_sent("an_OTHER accident_NOUN")], d, q, graph=g)
    assert insts == []


@settings(max_examples=40, deadline=None)
@given(st.lists(st.lists(st.sampled_from(["fortuity", "wreck", "x", "y", "z"]), min_size=1, max_size=12),
                min_size=1, max_size=15),
       st.integers(0, 6), st.integers(0, 6), st.integers(1, 4))
def test_generation_properties(accident_graph, rows, q1, q2, t):
    g = accident_graph
    d = _dd(g, [("accident.n.02", "fortuity", 1.0), ("accident.n.01", "wreck", 1.0)])
    q = Quota({(g.sid("accident.n.02"), "fortuity"): q1, (g.sid("accident.n.01"), "wreck"): q2}, {})
    sents = [[TaggedToken(f"{w}", Pos.NOUN) for w in row] for row in rows]
    insts, summary = generate_instances(sents, d, q, t_window=t, seed=3, graph=g)
    occ = Counter(w for row in rows for w in row)
    counts = Counter(i.matched_word for i in insts)
    assert counts["fortuity"] == min(q1, occ["fortuity"])
    assert counts["wreck"] == min(q2, occ["wreck"])
    for r in summary:
        assert r.emitted <= r.requested
    for inst in insts:
        assert len(inst.left) <= t and len(inst.right) <= t
        # some occurrence of the word has exactly these flanks
        assert any(
            tuple(row[max(0, k - t):k]) == inst.left and tuple(row[k + 1:k + 1 + t]) == inst.right
            for row in rows for k, w in enumerate(row) if w == inst.matched_word)


def test_instance_files_are_deterministic(tmp_path, accident_graph):
    g = accident_graph
    d = _dd(g, [("accident.n.02", "fortuity", 1.0)])
    q = Quota({(g.sid("accident.n.02"), "fortuity"): 3}, {})
    for name in ("a", "b"):
        insts, summary = generate_instances(_five_occurrences(), d, q, seed=1, graph=g)
        write_instances(tmp_path / f"{name}.jsonl", insts)
        write_summary(tmp_path / f"{name}.tsv", summary)
    assert (tmp_path / "a.jsonl").read_bytes() == (tmp_path / "b.jsonl").read_bytes()
    assert (tmp_path / "a.tsv").read_text().splitlines()[0] == "synset\tfeature_word\trequested\temitted"
    back = read_instances(tmp_path / "a.jsonl", g)
    assert back == insts


# -- unsupervised pairs ------------------------------------------------------------

def test_unsupervised_pair_for_language():
    sent = _sent("to_OTHER master_VERB a_OTHER language_NOUN ,_OTHER you_OTHER have_VERB to_OTHER")
    pairs = extract_unsupervised_pairs([sent], {"language"}, t_window=3)
    assert len(pairs) == 1
    assert pairs[0].target == "language"
    assert pairs[0].left == ("to", "master", "a") and pairs[0].right == (",", "you", "have")
    assert extract_unsupervised_pairs([_sent("nothing_OTHER here_OTHER")], {"language"}) == []


def test_pair_count_matches_scan():
    rng = np.random.default_rng(0)
    vocab = ["alpha", "beta", "gamma", "delta", "eps"]
    fw = {"beta", "delta"}
    sents = [[TaggedToken(str(w), Pos.NOUN) for w in rng.choice(vocab, size=rng.integers(1, 10))]
             for _ in range(50)]
    pairs = extract_unsupervised_pairs(sents, fw)
    assert len(pairs) == sum(t.surface in fw for s in sents for t in s)
