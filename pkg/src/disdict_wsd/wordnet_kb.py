"""Reader for the WordNet 3.0 database files (``data.*``, ``index.*``, ``index.sense``).

The parsed :class:`KnowledgeGraph` holds every synset with its lemmas, gloss and
hypernym/hyponym links, the per-lemma sense ordering of the index files and the
sense keys of ``index.sense``.  It is treated as read-only after construction.
"""

from __future__ import annotations

import enum
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Tuple

from .errors import (
    DanglingPointer,
    MalformedLine,
    MissingFile,
    UnknownPairing,
    UnknownSynset,
)


class Pos(enum.Enum):
    NOUN = "n"
    VERB = "v"
    ADJ = "a"
    ADJ_SATELLITE = "s"
    ADV = "r"

    @property
    def letter(self) -> str:
        return self.value

    @property
    def index_pos(self) -> "Pos":
        """POS used for index-file lookups (satellites share the adjective files)."""
        return Pos.ADJ if self is Pos.ADJ_SATELLITE else self

    @property
    def file_suffix(self) -> str:
        return _FILE_SUFFIX[self.index_pos]

    @classmethod
    def from_letter(cls, letter: str) -> "Pos":
        return _BY_LETTER[letter]

    @classmethod
    def from_tag(cls, tag: str) -> Optional["Pos"]:
        """Map a coarse tag (``NOUN``, ``ADJ``, ``n``, ``ADJ_SATELLITE`` ...) to a Pos; ``None`` otherwise."""
        return _BY_TAG.get(tag)

    @property
    def tag(self) -> str:
        return "ADJ" if self is Pos.ADJ_SATELLITE else self.name


_FILE_SUFFIX = {Pos.NOUN: "noun", Pos.VERB: "verb", Pos.ADJ: "adj", Pos.ADV: "adv"}
_BY_LETTER = {p.value: p for p in Pos}
_BY_TAG = {p.name: p for p in Pos}
_BY_TAG.update(_BY_LETTER)
_SS_TYPE = {1: Pos.NOUN, 2: Pos.VERB, 3: Pos.ADJ, 4: Pos.ADV, 5: Pos.ADJ_SATELLITE}
INDEX_POS = (Pos.NOUN, Pos.VERB, Pos.ADJ, Pos.ADV)


@dataclass(frozen=True, order=True)
class SynsetId:
    name: str
    offset: int = field(compare=False)
    pos: Pos = field(compare=False)

    def __str__(self) -> str:
        return self.name

    @classmethod
    def from_name(cls, name: str) -> "SynsetId":
        """Id detached from any graph (offset -1), POS taken from the name."""
        try:
            pos = Pos.from_letter(name.rsplit(".", 2)[1])
        except (IndexError, KeyError):
            raise ValueError(f"not a synset name: {name!r}") from None
        return cls(name, -1, pos)


@dataclass(frozen=True)
class Synset:
    id: SynsetId
    lemmas: Tuple[str, ...]
    gloss: str
    examples: Tuple[str, ...] = ()
    hypernyms: Tuple[SynsetId, ...] = ()
    hyponyms: Tuple[SynsetId, ...] = ()


@dataclass(frozen=True)
class KnowledgeGraph:
    synsets: Dict[SynsetId, Synset]
    sense_index: Dict[Tuple[str, Pos], Tuple[SynsetId, ...]]
    sense_keys: Dict[Tuple[str, SynsetId], str]
    exceptions: Dict[Pos, Dict[str, Tuple[str, ...]]] = field(default_factory=dict)
    by_name: Dict[str, SynsetId] = field(default_factory=dict, compare=False, repr=False)
    _key_index: Dict[str, Tuple[str, SynsetId]] = field(
        default_factory=dict, compare=False, repr=False
    )
    _morph_cache: dict = field(default_factory=dict, compare=False, repr=False)
    _lemma_pos: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        if not self.by_name:
            self.by_name.update((sid.name, sid) for sid in self.synsets)
        if not self._key_index:
            self._key_index.update((key, pair) for pair, key in self.sense_keys.items())

    def __len__(self) -> int:
        return len(self.synsets)

    def synset(self, name: str) -> Synset:
        try:
            return self.synsets[self.by_name[name]]
        except KeyError:
            raise UnknownSynset(name) from None

    def sid(self, name: str) -> SynsetId:
        try:
            return self.by_name[name]
        except KeyError:
            raise UnknownSynset(name) from None

    def synset_for_key(self, key: str) -> Optional[SynsetId]:
        pair = self._key_index.get(key)
        return pair[1] if pair else None

    def base_form(self, form: str, pos: Pos) -> Optional[str]:
        """Lemmatize ``form`` under ``pos``; ``None`` if no base form is in the index."""
        pos = pos.index_pos
        cache_key = (form, pos)
        if cache_key not in self._morph_cache:
            self._morph_cache[cache_key] = morphy(self, form, pos)
        return self._morph_cache[cache_key]

    def most_frequent_pos(self, surface: str) -> Optional[Pos]:
        """POS under which ``surface`` has the most senses (ties: n, v, a, r order)."""
        if surface not in self._lemma_pos:
            best, best_n = None, 0
            for pos in INDEX_POS:
                base = self.base_form(surface, pos)
                n = len(self.sense_index.get((base, pos), ())) if base else 0
                if n > best_n:
                    best, best_n = pos, n
            self._lemma_pos[surface] = best
        return self._lemma_pos[surface]


def normalize_lemma(text: str) -> str:
    return text.replace("_", " ").strip().lower()


# --------------------------------------------------------------------------
# Parsing
# --------------------------------------------------------------------------

_ADJ_MARKER = re.compile(r"\((?:a|p|ip)\)$")
_QUOTED = re.compile(r'"([^"]*)"')


def _split_gloss(field_text: str) -> Tuple[str, Tuple[str, ...]]:
    examples = tuple(e.strip() for e in _QUOTED.findall(field_text))
    cut = field_text.find('"')
    definition = field_text if cut < 0 else field_text[:cut]
    definition = _QUOTED.sub(" ", definition).strip().rstrip(";").strip()
    return definition, examples


def _content_lines(path: Path):
    with open(path, encoding="utf-8", errors="replace") as fh:
        for lineno, line in enumerate(fh, 1):
            if line.startswith("  ") or not line.strip():
                continue  # license header
            yield lineno, line.rstrip("\n")


def _read_index(path: Path, pos: Pos):
    entries = []
    for lineno, line in _content_lines(path):
        parts = line.split()
        try:
            lemma = parts[0]
            p_cnt = int(parts[3])
            synset_cnt = int(parts[2])
            offsets = [int(o) for o in parts[4 + p_cnt + 2:]]
        except (IndexError, ValueError) as exc:
            raise MalformedLine(path, lineno, str(exc)) from None
        if len(offsets) != synset_cnt or parts[1] != pos.letter:
            raise MalformedLine(path, lineno, "sense count / pos mismatch")
        entries.append((normalize_lemma(lemma), offsets, lineno))
    return entries


def _read_data(path: Path):
    records = []
    for lineno, line in _content_lines(path):
        head, sep, gloss_field = line.partition("|")
        parts = head.split()
        try:
            offset = int(parts[0])
            ss_pos = Pos.from_letter(parts[2])
            w_cnt = int(parts[3], 16)
            lemmas = [_ADJ_MARKER.sub("", parts[4 + 2 * i]) for i in range(w_cnt)]
            i = 4 + 2 * w_cnt
            p_cnt = int(parts[i])
            hypers = []
            for k in range(p_cnt):
                symbol, target, target_pos = parts[i + 1 + 4 * k : i + 4 + 4 * k]
                if symbol in ("@", "@i"):
                    hypers.append((int(target), Pos.from_letter(target_pos).index_pos))
        except (IndexError, ValueError, KeyError) as exc:
            raise MalformedLine(path, lineno, f"unparseable record ({exc})") from None
        if not sep or not lemmas:
            raise MalformedLine(path, lineno, "missing gloss separator or lemmas")
        definition, examples = _split_gloss(gloss_field)
        records.append((offset, ss_pos, tuple(l.replace("_", " ") for l in lemmas),
                        definition, examples, hypers, lineno))
    return records


def _read_exceptions(path: Path) -> Dict[str, Tuple[str, ...]]:
    table = {}
    if not path.exists():
        return table
    with open(path, encoding="utf-8", errors="replace") as fh:
        for line in fh:
            parts = line.split()
            if len(parts) >= 2:
                table[normalize_lemma(parts[0])] = tuple(normalize_lemma(p) for p in parts[1:])
    return table


def parse_wordnet(db_dir) -> KnowledgeGraph:
    """Parse a WordNet 3.0 ``dict/`` directory into a :class:`KnowledgeGraph`."""
    db_dir = Path(db_dir)
    required = [f"{kind}.{sfx}" for kind in ("data", "index") for sfx in _FILE_SUFFIX.values()]
    required.append("index.sense")
    for name in required:
        if not (db_dir / name).is_file():
            raise MissingFile(str(db_dir / name))

    # (offset, index pos) -> record
    raw = {}
    for pos in INDEX_POS:
        path = db_dir / f"data.{pos.file_suffix}"
        for rec in _read_data(path):
            raw[(rec[0], pos)] = rec + (path,)

    index = {}
    for pos in INDEX_POS:
        path = db_dir / f"index.{pos.file_suffix}"
        for lemma, offsets, lineno in _read_index(path, pos):
            for off in offsets:
                if (off, pos) not in raw:
                    raise DanglingPointer(f"{path}:{lineno}: offset {off:08d} not in data.{pos.file_suffix}")
            index[(lemma, pos)] = [(off, pos) for off in offsets]

    # Synset names: first lemma + pos letter + that lemma's sense number.
    ids = {}
    for key, rec in raw.items():
        offset, ss_pos, lemmas = rec[0], rec[1], rec[2]
        head = normalize_lemma(lemmas[0])
        senses = index.get((head, key[1]), [])
        try:
            number = senses.index(key) + 1
        except ValueError:
            raise MalformedLine(rec[-1], rec[6], f"lemma {head!r} lacks index entry") from None
        ids[key] = SynsetId(f"{head.replace(' ', '_')}.{ss_pos.letter}.{number:02d}", offset, ss_pos)

    hyponyms: Dict[Tuple[int, Pos], List[SynsetId]] = {k: [] for k in raw}
    hypernyms: Dict[Tuple[int, Pos], List[SynsetId]] = {}
    for key, rec in raw.items():
        targets = []
        for target in rec[5]:
            if target not in ids:
                raise DanglingPointer(f"{rec[-1]}:{rec[6]}: hypernym {target[0]:08d} not found")
            if ids[target] not in targets:
                targets.append(ids[target])
                hyponyms[target].append(ids[key])
        hypernyms[key] = targets

    synsets = {}
    for key, rec in raw.items():
        sid = ids[key]
        synsets[sid] = Synset(sid, rec[2], rec[3], rec[4], tuple(hypernyms[key]), tuple(hyponyms[key]))

    sense_index = {k: tuple(ids[t] for t in v) for k, v in index.items()}

    sense_keys = {}
    path = db_dir / "index.sense"
    for lineno, line in _content_lines(path):
        parts = line.split()
        try:
            key, offset = parts[0], int(parts[1])
            lemma_part, lex_sense = key.split("%", 1)
            ss_pos = _SS_TYPE[int(lex_sense.split(":", 1)[0])]
        except (IndexError, ValueError, KeyError):
            raise MalformedLine(path, lineno, "bad sense key line") from None
        target = (offset, ss_pos.index_pos)
        if target not in ids:
            raise DanglingPointer(f"{path}:{lineno}: offset {offset:08d} not found")
        sense_keys[(normalize_lemma(lemma_part), ids[target])] = key

    exceptions = {pos: _read_exceptions(db_dir / f"{pos.file_suffix}.exc") for pos in INDEX_POS}
    return KnowledgeGraph(synsets, sense_index, sense_keys, exceptions)


# --------------------------------------------------------------------------
# Queries
# --------------------------------------------------------------------------

def candidate_synsets(graph: KnowledgeGraph, lemma: str, pos: Pos) -> List[SynsetId]:
    """Senses of ``lemma`` in index order; position k (1-based) is the sense rank."""
    return list(graph.sense_index.get((normalize_lemma(lemma), pos.index_pos), ()))


def sense_key_for(graph: KnowledgeGraph, lemma: str, synset: SynsetId) -> str:
    try:
        return graph.sense_keys[(normalize_lemma(lemma), synset)]
    except KeyError:
        raise UnknownPairing((lemma, synset.name)) from None


_DETACHMENT = {
    Pos.NOUN: [("s", ""), ("ses", "s"), ("ves", "f"), ("xes", "x"), ("zes", "z"),
               ("ches", "ch"), ("shes", "sh"), ("men", "man"), ("ies", "y")],
    Pos.VERB: [("s", ""), ("ies", "y"), ("es", "e"), ("es", ""), ("ed", "e"),
               ("ed", ""), ("ing", "e"), ("ing", "")],
    Pos.ADJ: [("er", ""), ("est", ""), ("er", "e"), ("est", "e")],
    Pos.ADV: [],
}


def morphy(graph: KnowledgeGraph, form: str, pos: Pos) -> Optional[str]:
    """WordNet-style lemmatizer: exception list, then suffix detachment rules."""
    pos = pos.index_pos
    form = normalize_lemma(form)
    if not form:
        return None
    exc = graph.exceptions.get(pos, {}).get(form, ())
    forms = [form, *exc]
    if not exc:
        forms += [form[: -len(old)] + new for old, new in _DETACHMENT[pos] if form.endswith(old)]
    for f in forms:
        if f and (f, pos) in graph.sense_index:
            return f
    return None


STOPWORDS = frozenset("""
a an the this that these those some any each every such
i you he she it we they me him her us them my your his its our their one
be is are was were been being am have has had having do does did done
will would shall should can could may might must
of to in on at by for with from into as about than
and or but not no nor so too very also
there here what which who whom whose when where how
""".split())

_TOKEN = re.compile(r"[a-z][a-z'\-]*[a-z]|[a-z]")


def gloss_tokens(text: str) -> List[str]:
    return _TOKEN.findall(text.lower())


def harvest_candidates(graph: KnowledgeGraph, synset: SynsetId) -> Counter:
    """Potential feature words of ``synset`` with their association counts.

    Sources: the synset's own lemmas (only those monosemous under its POS), the
    lemmas of its direct hypernyms and hyponyms (+1 each), and gloss tokens whose
    base form is indexed under the synset's POS (+1 per occurrence).
    """
    try:
        syn = graph.synsets[synset]
    except KeyError:
        raise UnknownSynset(getattr(synset, "name", synset)) from None
    pos = synset.pos.index_pos
    counts: Counter = Counter()
    for lemma in syn.lemmas:
        word = normalize_lemma(lemma)
        if len(graph.sense_index.get((word, pos), ())) == 1:
            counts[word] += 1
    for rel in syn.hypernyms + syn.hyponyms:
        for lemma in graph.synsets[rel].lemmas:
            counts[normalize_lemma(lemma)] += 1
    for token in gloss_tokens(syn.gloss):
        if token in STOPWORDS:
            continue
        base = graph.base_form(token, pos)
        if base and base not in STOPWORDS:
            counts[base] += 1
    return counts


def iter_synsets(graph: KnowledgeGraph) -> Iterable[SynsetId]:
    """Synset ids in name order."""
    return sorted(graph.synsets)


def lemma_senses(graph: KnowledgeGraph, synset: SynsetId) -> List[Tuple[str, int]]:
    """(lemma, rank) for every lemma whose candidate list contains ``synset``."""
    out = []
    for lemma in graph.synsets[synset].lemmas:
        word = normalize_lemma(lemma)
        senses = graph.sense_index.get((word, synset.pos.index_pos), ())
        if synset in senses:
            out.append((word, senses.index(synset) + 1))
    return out
