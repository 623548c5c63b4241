"""Small synthetic worlds: WordNet-format databases, tagged corpora and test sets.

:func:`write_wordnet` writes a database in the WordNet 3.0 file layout (byte
offsets included) from a list of :class:`SynsetSpec`.  :func:`build_mini_world`
uses it to set up ten two-sense nouns whose senses each come with monosemous
synonyms and distinctive context words, plus a raw corpus and a labeled test set
in the evaluation XML format.
"""

from __future__ import annotations

import json
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple
from xml.sax.saxutils import escape, quoteattr

import numpy as np

_SS_TYPE = {"n": 1, "v": 2, "a": 3, "r": 4, "s": 5}
_INDEX_POS = {"n": "n", "v": "v", "a": "a", "s": "a", "r": "r"}
_SUFFIX = {"n": "noun", "v": "verb", "a": "adj", "r": "adv"}
_LEXFILE = {"n": 3, "v": 29, "a": 0, "s": 0, "r": 2}
HEADER = "  Synthetic database in WordNet 3.0 format.\n"


@dataclass
class SynsetSpec:
    """One synset to write.  ``handle`` is a local name used by ``hypernyms``.

    The sense order of a lemma follows the order of the specs that contain it.
    """

    handle: str
    pos: str
    lemmas: Sequence[str]
    gloss: str
    hypernyms: Sequence[str] = ()
    examples: Sequence[str] = ()


def _wn_lemma(lemma: str) -> str:
    return lemma.replace(" ", "_")


def write_wordnet(db_dir, specs: Sequence[SynsetSpec],
                  exceptions: Optional[Dict[str, Dict[str, str]]] = None) -> Dict[str, str]:
    """Write ``data.*``, ``index.*``, ``index.sense`` and ``*.exc`` files.

    Returns handle -> synset name (first lemma, POS letter, sense number).
    """
    db = Path(db_dir)
    db.mkdir(parents=True, exist_ok=True)
    by_handle = {s.handle: s for s in specs}
    if len(by_handle) != len(specs):
        raise ValueError("duplicate synset handles")

    # Sense lists per (lemma, index pos), in the order the SynsetSpecs are given.
    senses: Dict[Tuple[str, str], List[str]] = defaultdict(list)
    lex_ids: Dict[str, Dict[str, int]] = {}
    lex_seen: Dict[Tuple[str, int], int] = defaultdict(int)
    for s in specs:
        lex_ids[s.handle] = {}
        for lemma in s.lemmas:
            key = (lemma.lower(), _INDEX_POS[s.pos])
            senses[key].append(s.handle)
            lk = (lemma.lower(), _LEXFILE[s.pos])
            lex_ids[s.handle][lemma] = lex_seen[lk]
            lex_seen[lk] += 1

    hyponyms: Dict[str, List[str]] = defaultdict(list)
    for s in specs:
        for h in s.hypernyms:
            if h not in by_handle:
                raise ValueError(f"{s.handle}: unknown hypernym {h!r}")
            hyponyms[h].append(s.handle)

    def pointers(s: SynsetSpec, offsets):
        ptrs = [("@", h) for h in s.hypernyms] + [("~", h) for h in hyponyms[s.handle]]
        return " ".join(f"{sym} {offsets[h]:08d} {by_handle[h].pos} 0000" for sym, h in ptrs), len(ptrs)

    def data_line(s: SynsetSpec, offsets) -> str:
        words = " ".join(f"{_wn_lemma(l)} {lex_ids[s.handle][l]:x}" for l in s.lemmas)
        ptr_text, n_ptr = pointers(s, offsets)
        gloss = s.gloss + "".join(f'; "{e}"' for e in s.examples)
        frames = " 00" if s.pos == "v" else ""
        ptr_part = f" {ptr_text}" if ptr_text else ""
        return (f"{offsets[s.handle]:08d} {_LEXFILE[s.pos]:02d} {s.pos} {len(s.lemmas):02x} "
                f"{words} {n_ptr:03d}{ptr_part}{frames} | {gloss}  \n")

    # Offsets are fixed-width, so line lengths do not depend on their values.
    offsets: Dict[str, int] = {}
    groups: Dict[str, List[SynsetSpec]] = defaultdict(list)
    for s in specs:
        groups[_INDEX_POS[s.pos]].append(s)
    dummy = {s.handle: 0 for s in specs}
    for pos, group in groups.items():
        at = len(HEADER.encode("utf-8"))
        for s in group:
            offsets[s.handle] = at
            at += len(data_line(s, dummy).encode("utf-8"))

    for pos, suffix in _SUFFIX.items():
        with open(db / f"data.{suffix}", "w", encoding="utf-8", newline="\n") as fh:
            fh.write(HEADER)
            for s in groups.get(pos, []):
                fh.write(data_line(s, offsets))

    for pos, suffix in _SUFFIX.items():
        rows = []
        for (lemma, ipos), handles in senses.items():
            if ipos != pos:
                continue
            symbols = sorted({sym for h in handles for sym, _ in
                              [("@", x) for x in by_handle[h].hypernyms] +
                              [("~", x) for x in hyponyms[h]]})
            rows.append(f"{_wn_lemma(lemma)} {pos} {len(handles)} {len(symbols)} "
                        + "".join(f"{sym} " for sym in symbols)
                        + f"{len(handles)} 0 " + " ".join(f"{offsets[h]:08d}" for h in handles) + "  \n")
        with open(db / f"index.{suffix}", "w", encoding="utf-8", newline="\n") as fh:
            fh.write(HEADER)
            fh.writelines(sorted(rows))

    keys = []
    for (lemma, ipos), handles in senses.items():
        for rank, h in enumerate(handles, 1):
            s = by_handle[h]
            key = f"{_wn_lemma(lemma)}%{_SS_TYPE[s.pos]}:{_LEXFILE[s.pos]:02d}:{lex_ids[h][_orig(s, lemma)]:02d}::"
            keys.append(f"{key} {offsets[h]:08d} {rank} 0\n")
    with open(db / "index.sense", "w", encoding="utf-8", newline="\n") as fh:
        fh.writelines(sorted(keys))

    for pos, suffix in _SUFFIX.items():
        table = (exceptions or {}).get(pos, {})
        with open(db / f"{suffix}.exc", "w", encoding="utf-8", newline="\n") as fh:
            for form in sorted(table):
                fh.write(f"{_wn_lemma(form)} {_wn_lemma(table[form])}\n")

    names = {}
    for s in specs:
        head = s.lemmas[0].lower()
        rank = senses[(head, _INDEX_POS[s.pos])].index(s.handle) + 1
        names[s.handle] = f"{_wn_lemma(head)}.{s.pos}.{rank:02d}"
    return names


def _orig(spec: SynsetSpec, lower: str) -> str:
    for l in spec.lemmas:
        if l.lower() == lower:
            return l
    raise KeyError(lower)


# --------------------------------------------------------------------------
# Evaluation-format writers
# --------------------------------------------------------------------------

def write_eval_xml(xml_path, gold_path, sentences: Sequence[Sequence[tuple]], source: str = "synthetic") -> None:
    """Write sentences in the all-words XML layout plus a gold key file.

    Each token is ``(surface, pos_tag)`` or ``(surface, pos_tag, lemma, [keys])``
    for an annotated instance.  Instance ids follow ``d000.s000.t000``.
    """
    xml = ['<?xml version="1.0" encoding="UTF-8" ?>', f'<corpus lang="en" source={quoteattr(source)}>',
           '<text id="d000">']
    gold = []
    for si, sent in enumerate(sentences):
        xml.append(f'<sentence id="d000.s{si:03d}">')
        ti = 0
        for tok in sent:
            surface, tag = tok[0], tok[1]
            if len(tok) > 2:
                iid = f"d000.s{si:03d}.t{ti:03d}"
                ti += 1
                xml.append(f'<instance id="{iid}" lemma={quoteattr(tok[2])} pos="{tag}">{escape(surface)}</instance>')
                gold.append(f"{iid} {' '.join(tok[3])}")
            else:
                xml.append(f'<wf lemma={quoteattr(surface.lower())} pos="{tag}">{escape(surface)}</wf>')
        xml.append("</sentence>")
    xml += ["</text>", "</corpus>"]
    Path(xml_path).write_text("\n".join(xml) + "\n", encoding="utf-8")
    Path(gold_path).write_text("\n".join(gold) + "\n", encoding="utf-8")


# --------------------------------------------------------------------------
# The mini-world
# --------------------------------------------------------------------------

# word -> [(sense label, monosemous synonyms, distinctive context words)], rank order.
LEXICON = {
    "bass": [("fish", ["grouper", "perch"], ["lake", "angler", "hook", "trout"]),
             ("voice", ["baritone", "basso"], ["choir", "chorus", "tenor", "hymn"])],
    "crane": [("bird", ["heron", "stork"], ["marsh", "feather", "wing", "nest"]),
              ("machine", ["derrick", "hoist"], ["girder", "cargo", "dock", "lifting"])],
    "spring": [("season", ["springtime", "vernal"], ["blossom", "april", "thaw", "bloom"]),
               ("coil", ["coilspring", "helix"], ["steel", "tension", "mattress", "bounce"])],
    "pitcher": [("jug", ["ewer", "carafe"], ["lemonade", "pour", "tray", "glass"]),
                ("player", ["hurler", "reliever"], ["inning", "mound", "batter", "strikeout"])],
    "seal": [("animal", ["sealion", "pinniped"], ["walrus", "flipper", "iceberg", "blubber"]),
             ("stamp", ["signet", "insignia"], ["wax", "envelope", "royal", "document"])],
    "bat": [("animal", ["flittermouse", "chiroptera"], ["cave", "nocturnal", "echo", "vampire"]),
            ("club", ["cudgel", "paddle"], ["swing", "wicket", "cricket", "ball"])],
    "mole": [("animal", ["talpa", "burrower"], ["tunnel", "garden", "molehill", "soil"]),
             ("spy", ["infiltrator", "sleeper"], ["agency", "secret", "defect", "intelligence"])],
    "palm": [("tree", ["coconut", "frond"], ["tropical", "beach", "oasis", "date"]),
             ("hand", ["handpalm", "thenar"], ["finger", "wrist", "grip", "sweaty"])],
    "jam": [("preserve", ["marmalade", "jelly"], ["toast", "strawberry", "jar", "breakfast"]),
            ("traffic", ["gridlock", "tailback"], ["highway", "commute", "honking", "rush"])],
    "pen": [("writing", ["ballpoint", "quill"], ["ink", "paper", "signature", "nib"]),
            ("enclosure", ["corral", "paddock"], ["sheep", "fence", "livestock", "gate"])],
}

NOISE = ("the a we saw there then it was very near old new one day that this "
         "they found some every morning later again").split()


@dataclass
class MiniWorld:
    root: Path
    wordnet: Path
    corpus: Path
    test_xml: Path
    test_gold: Path
    manual_xml: Path
    manual_gold: Path
    names: Dict[Tuple[str, int], str] = field(default_factory=dict)  # (word, rank) -> synset name

    def config(self, **overrides) -> dict:
        """Pipeline config for a desk-scale run on this world."""
        cfg = {
            "wordnet": str(self.wordnet),
            "corpus": str(self.corpus),
            "output_dir": str(self.root / "out"),
            "t_window": 8,
            "datagen": {"budget": 1200},
            "model": {"embed_dim": 32, "hidden": 32, "layers": 1, "dropout": 0.0,
                      "neg_samples": 32, "fc_dim": 64, "ctx_dim": 32, "init_std": "width-matched"},
            "train": {"epochs": 60, "mix_ratio": [1.0, 0.3]},
            "evaluate": {"datasets": [{"name": "test", "xml": str(self.test_xml),
                                       "gold": str(self.test_gold)}]},
        }
        for key, value in overrides.items():
            if isinstance(value, dict) and isinstance(cfg.get(key), dict):
                cfg[key] = {**cfg[key], **value}
            else:
                cfg[key] = value
        return cfg

    def write_config(self, path, **overrides) -> Path:
        path = Path(path)
        path.write_text(json.dumps(self.config(**overrides), indent=2, sort_keys=True) + "\n",
                        encoding="utf-8")
        return path


def mini_world_specs() -> List[SynsetSpec]:
    specs = []
    for word in sorted(LEXICON):
        for label, synonyms, _ in LEXICON[word]:
            specs.append(SynsetSpec(f"{word}-{label}", "n", [word] + synonyms,
                                    f"the {label} sense"))
    return specs


def _sentence(rng, cues: Sequence[str], target: Tuple, n_cues: int, length: int = 12) -> List[tuple]:
    """Noise tokens around ``target`` with ``n_cues`` cue nouns at random slots."""
    toks = [(str(rng.choice(NOISE)), "OTHER") for _ in range(length)]
    pos = int(rng.integers(2, length - 2))
    slots = [i for i in range(length) if i != pos]
    picks = rng.choice(len(slots), size=n_cues, replace=False)
    for k, i in enumerate(picks):
        toks[slots[int(i)]] = (str(rng.choice(cues)), "NOUN")
    toks[pos] = target
    return toks


def build_mini_world(root, seed: int = 0, per_synonym: int = 30, ambiguous_per_sense: int = 10,
                     test_per_word: int = 20, rank1_share: float = 0.7, cue_rate: float = 0.85,
                     manual_per_word: int = 6) -> MiniWorld:
    """Write the mini-world under ``root`` and return its paths.

    The raw corpus has ``per_synonym`` sentences per synonym (two cue words each)
    and ``ambiguous_per_sense`` sentences per ambiguous word and sense, skewed
    towards the first sense.  Test sentences pick the first sense with probability
    ``rank1_share``; a sentence carries one or two cue words with probability
    ``cue_rate`` and none otherwise.
    """
    root = Path(root)
    rng = np.random.default_rng(seed)
    wn_dir = root / "wordnet"
    specs = mini_world_specs()
    handle_names = write_wordnet(wn_dir, specs)
    names = {}
    for word in LEXICON:
        for rank, (label, _, _) in enumerate(LEXICON[word], 1):
            names[(word, rank)] = handle_names[f"{word}-{label}"]

    lines = []
    for word in sorted(LEXICON):
        for rank, (label, synonyms, cues) in enumerate(LEXICON[word], 1):
            for syn in synonyms:
                for _ in range(per_synonym):
                    lines.append(_sentence(rng, cues, (syn, "NOUN"), 2))
            n_amb = ambiguous_per_sense * (3 if rank == 1 else 1)
            for _ in range(n_amb):
                lines.append(_sentence(rng, cues, (word, "NOUN"), 2))
    order = rng.permutation(len(lines))
    corpus = root / "corpus.txt"
    with open(corpus, "w", encoding="utf-8", newline="\n") as fh:
        for i in order:
            fh.write(" ".join(f"{s}_{t}" for s, t in lines[i]) + "\n")

    def labeled(n_per_word, share):
        out = []
        for word in sorted(LEXICON):
            for _ in range(n_per_word):
                rank = 1 if rng.random() < share else 2
                label, _, cues = LEXICON[word][rank - 1]
                key = _key_of(word, rank)
                n_cues = 0
                if rng.random() < cue_rate:
                    n_cues = 1 + int(rng.random() < 0.5)
                out.append(_sentence(rng, cues, (word, "NOUN", word, [key]), n_cues))
        return [out[i] for i in rng.permutation(len(out))]

    test_xml, test_gold = root / "test.data.xml", root / "test.gold.key.txt"
    write_eval_xml(test_xml, test_gold, labeled(test_per_word, rank1_share), "mini-test")
    manual_xml, manual_gold = root / "manual.data.xml", root / "manual.gold.key.txt"
    write_eval_xml(manual_xml, manual_gold, labeled(manual_per_word, rank1_share), "mini-manual")
    return MiniWorld(root, wn_dir, corpus, test_xml, test_gold, manual_xml, manual_gold, names)


def _key_of(word: str, rank: int) -> str:
    # Every ambiguous noun has lex_id 0 for its first sense and 1 for its second.
    return f"{word}%1:{_LEXFILE['n']:02d}:{rank - 1:02d}::"
