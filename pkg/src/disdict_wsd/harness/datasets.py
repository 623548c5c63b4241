"""Readers for the unified all-words evaluation format (``.data.xml`` + ``.gold.key.txt``)."""

from __future__ import annotations

import logging
import xml.etree.ElementTree as ET
from collections import Counter
from dataclasses import dataclass
from typing import Dict, Iterator, List, Optional, Tuple

from ..datagen import MANUAL, LabeledInstance, TaggedToken
from ..errors import MalformedXml, MissingGoldKey, UnknownSenseKey
from ..wordnet_kb import KnowledgeGraph, Pos, SynsetId

log = logging.getLogger(__name__)

# Framework tags outside the four content classes map to None (OTHER).
FRAMEWORK_POS = {"NOUN": Pos.NOUN, "VERB": Pos.VERB, "ADJ": Pos.ADJ, "ADV": Pos.ADV}


@dataclass(frozen=True)
class EvalInstance:
    id: str
    lemma: str
    pos: Pos
    sentence: Tuple[TaggedToken, ...]
    target_index: int
    gold_keys: Tuple[str, ...]

    def __post_init__(self):
        if not self.gold_keys:
            raise ValueError(f"{self.id}: no gold keys")
        if not 0 <= self.target_index < len(self.sentence):
            raise ValueError(f"{self.id}: target index out of range")

    @property
    def surfaces(self) -> List[str]:
        return [t.surface for t in self.sentence]


def read_gold(path) -> Dict[str, Tuple[str, ...]]:
    """``instance_id key [key ...]`` per line."""
    gold = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            parts = line.split()
            if parts:
                gold[parts[0]] = tuple(parts[1:])
    return gold


def write_keys(path, keys: Dict[str, str]) -> None:
    """Predictions in the gold-file line format, sorted by instance id."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for iid in sorted(keys):
            fh.write(f"{iid} {keys[iid]}\n")


def iter_sentences(xml_path) -> Iterator[List[Tuple[TaggedToken, Optional[dict]]]]:
    """Yield sentences as ``(token, instance attributes or None)`` lists."""
    try:
        for _, elem in ET.iterparse(str(xml_path), events=("end",)):
            if elem.tag != "sentence":
                continue
            tokens = []
            for child in elem:
                if child.tag not in ("wf", "instance"):
                    continue
                text = (child.text or "").strip().lower()
                if not text:
                    raise MalformedXml(f"{xml_path}: empty token in sentence {elem.get('id')!r}")
                tok = TaggedToken(text, FRAMEWORK_POS.get(child.get("pos", "")))
                attrs = None
                if child.tag == "instance":
                    attrs = dict(child.attrib)
                    for name in ("id", "lemma", "pos"):
                        if not attrs.get(name):
                            raise MalformedXml(f"{xml_path}: instance without {name!r}")
                    if attrs["pos"] not in FRAMEWORK_POS:
                        raise MalformedXml(f"{xml_path}: instance {attrs['id']} has pos {attrs['pos']!r}")
                tokens.append((tok, attrs))
            yield tokens
            elem.clear()
    except ET.ParseError as exc:
        raise MalformedXml(f"{xml_path}: {exc}") from exc
    except OSError as exc:
        raise MalformedXml(f"{xml_path}: {exc}") from exc


def load_eval_dataset(xml_path, gold_path) -> List[EvalInstance]:
    gold = read_gold(gold_path)
    out = []
    for tokens in iter_sentences(xml_path):
        sentence = tuple(t for t, _ in tokens)
        for i, (_, attrs) in enumerate(tokens):
            if attrs is None:
                continue
            keys = gold.get(attrs["id"])
            if not keys:
                raise MissingGoldKey(attrs["id"])
            out.append(EvalInstance(attrs["id"], attrs["lemma"], FRAMEWORK_POS[attrs["pos"]],
                                    sentence, i, keys))
    return out


@dataclass
class ManualData:
    instances: List[LabeledInstance]
    synset_counts: Counter
    skipped: int = 0


def load_semcor_style(xml_path, gold_path, graph: KnowledgeGraph, t_window: int = 20) -> ManualData:
    """Hand-labeled training contexts from an annotated corpus in the evaluation format.

    Each annotation contributes one instance labeled with its first gold key's
    synset.  Keys missing from ``index.sense`` are skipped and counted.
    """
    data = ManualData([], Counter())
    for inst in load_eval_dataset(xml_path, gold_path):
        try:
            sid = _synset_of(graph, inst.gold_keys[0])
        except UnknownSenseKey:
            data.skipped += 1
            continue
        s = inst.surfaces
        i = inst.target_index
        data.instances.append(LabeledInstance(tuple(s[max(0, i - t_window):i]),
                                              tuple(s[i + 1:i + 1 + t_window]),
                                              sid, MANUAL, inst.lemma))
        data.synset_counts[sid] += 1
    if data.skipped:
        log.warning("%s: skipped %d annotations with unknown sense keys", xml_path, data.skipped)
    return data


def _synset_of(graph: KnowledgeGraph, key: str) -> SynsetId:
    sid = graph.synset_for_key(key)
    if sid is None:
        raise UnknownSenseKey(key)
    return sid
