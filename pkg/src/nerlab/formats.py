"""Readers and writers for every on-disk format the toolkit touches.

Byte-level descriptions with examples live in ``docs/formats.md``.
"""

from __future__ import annotations

import json
import logging
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Optional, Sequence

from .core import (
    CorefChain, CorpusError, Document, Mention, Sentence, Span, TagSequence,
    Token, ValidationError, AlignmentError, spans_of,
)

log = logging.getLogger(__name__)

FORMAT_VERSION = "1.0"
SUPPORTED_VERSIONS = ("1.0",)


class FormatError(CorpusError):
    """Malformed input file. ``where`` is a JSON pointer or ``path:line``."""

    def __init__(self, message: str, where: str = ""):
        super().__init__(f"{where}: {message}" if where else message)
        self.where = where


@dataclass
class CorpusFile:
    version: str = FORMAT_VERSION
    documents: list[Document] = field(default_factory=list)

    def __post_init__(self):
        if self.version not in SUPPORTED_VERSIONS:
            raise FormatError(f"unsupported corpus version {self.version!r}", "/version")
        ids = [d.id for d in self.documents]
        if len(ids) != len(set(ids)):
            dup = next(i for i in ids if ids.count(i) > 1)
            raise ValidationError(f"duplicate document id {dup!r}")

    def by_id(self) -> dict[str, Document]:
        return {d.id: d for d in self.documents}


@dataclass
class Lexicon:
    name: str
    entries: dict[str, str] = field(default_factory=dict)

    def __contains__(self, term: str) -> bool:
        return term.lower() in self.entries

    def get(self, term: str) -> Optional[str]:
        return self.entries.get(term.lower())

    @property
    def categories(self) -> list[str]:
        return sorted(set(self.entries.values()))


@dataclass
class VectorTable:
    dimension: int
    entries: dict[str, list[float]] = field(default_factory=dict)

    def __post_init__(self):
        if self.dimension <= 0:
            raise FormatError(f"vector dimension must be positive, got {self.dimension}")
        for tok, vec in self.entries.items():
            if len(vec) != self.dimension:
                raise FormatError(f"vector for {tok!r} has {len(vec)} values, expected {self.dimension}")

    def __contains__(self, token: str) -> bool:
        return token in self.entries

    def get(self, token: str) -> Optional[list[float]]:
        return self.entries.get(token)


# -- corpus JSON -------------------------------------------------------------

def _require(obj: dict, key: str, pointer: str, kind=None):
    if not isinstance(obj, dict) or key not in obj:
        raise FormatError(f"missing required key {key!r}", pointer)
    value = obj[key]
    if kind is not None and not isinstance(value, kind):
        raise FormatError(f"expected {getattr(kind, '__name__', kind)} at {key!r}",
                          f"{pointer}/{key}")
    return value


def _pair_list(raw, pointer: str) -> tuple[Span, ...]:
    if not isinstance(raw, list) or not raw:
        raise FormatError("expected a non-empty list of [start, end] pairs", pointer)
    for i, p in enumerate(raw):
        if (not isinstance(p, list) or len(p) != 2
                or not all(isinstance(x, int) and not isinstance(x, bool) for x in p)):
            raise FormatError("expected [start, end] integer pair", f"{pointer}/{i}")
    try:
        return spans_of(raw)
    except ValidationError as exc:
        raise FormatError(str(exc), pointer) from None


def _token_from_json(raw: dict, ptr: str) -> Token:
    start = _require(raw, "start", ptr, int)
    end = _require(raw, "end", ptr, int)
    try:
        span = Span(start, end)
    except ValidationError as exc:
        raise FormatError(str(exc), ptr) from None
    return Token(text=_require(raw, "text", ptr, str), span=span,
                 lemma=raw.get("lemma"), pos=raw.get("pos"), head=raw.get("head"),
                 deprel=raw.get("deprel"), feats=raw.get("feats"))


def document_from_json(raw: dict, ptr: str = "") -> Document:
    doc_id = str(_require(raw, "id", ptr))
    text = _require(raw, "text", ptr, str)
    meta = raw.get("meta", {})
    if not isinstance(meta, dict):
        raise FormatError("meta must be an object", f"{ptr}/meta")

    sentences = []
    for si, s in enumerate(raw.get("sentences", [])):
        sptr = f"{ptr}/sentences/{si}"
        toks = [_token_from_json(t, f"{sptr}/tokens/{ti}")
                for ti, t in enumerate(_require(s, "tokens", sptr, list))]
        try:
            sentences.append(Sentence(toks))
        except ValidationError as exc:
            raise ValidationError(f"document {doc_id}: {exc} ({sptr})") from None

    mentions = []
    for mi, m in enumerate(raw.get("mentions", [])):
        mptr = f"{ptr}/mentions/{mi}"
        codes = []
        for ci, c in enumerate(m.get("codes", [])):
            cptr = f"{mptr}/codes/{ci}"
            codes.append((_require(c, "scheme", cptr, str), _require(c, "code", cptr, str)))
        try:
            mentions.append(Mention(
                id=str(_require(m, "id", mptr)),
                entity=_require(m, "entity", mptr, str),
                attribute=m.get("attribute"),
                spans=_pair_list(_require(m, "spans", mptr), f"{mptr}/spans"),
                normalized_term=m.get("norm"),
                codes=tuple(codes),
                meta=dict(m.get("meta", {})),
            ))
        except ValidationError as exc:
            raise ValidationError(f"document {doc_id}: {exc} ({mptr})") from None

    chains = []
    for ci, c in enumerate(raw.get("chains", [])):
        cptr = f"{ptr}/chains/{ci}"
        if not isinstance(c, list):
            raise FormatError("chain must be a list of elements", cptr)
        elements = [_pair_list(el, f"{cptr}/{ei}") for ei, el in enumerate(c)]
        try:
            chains.append(CorefChain(id=f"{doc_id}:{ci}", elements=elements))
        except ValidationError as exc:
            raise ValidationError(f"document {doc_id}: {exc} ({cptr})") from None

    return Document(id=doc_id, text=text, meta=meta, sentences=sentences,
                    mentions=mentions, chains=chains)


def document_to_json(doc: Document) -> dict:
    out = {"id": doc.id, "text": doc.text, "meta": doc.meta}
    out["sentences"] = [
        {"tokens": [_token_to_json(t) for t in s.tokens]} for s in doc.sentences
    ]
    mentions = []
    for m in doc.mentions:
        mj = {"id": m.id, "entity": m.entity}
        if m.attribute is not None:
            mj["attribute"] = m.attribute
        mj["spans"] = [[s.start, s.end] for s in m.spans]
        if m.normalized_term is not None:
            mj["norm"] = m.normalized_term
        mj["codes"] = [{"scheme": s, "code": c} for s, c in m.codes]
        if m.meta:
            mj["meta"] = m.meta
        mentions.append(mj)
    out["mentions"] = mentions
    out["chains"] = [[[[s.start, s.end] for s in el] for el in c.elements] for c in doc.chains]
    return out


def _token_to_json(t: Token) -> dict:
    tj = {"text": t.text, "start": t.span.start, "end": t.span.end}
    for key in ("lemma", "pos", "head", "deprel", "feats"):
        value = getattr(t, key)
        if value is not None:
            tj[key] = value
    return tj


def corpus_from_json(raw) -> CorpusFile:
    if not isinstance(raw, dict):
        raise FormatError("top level must be an object", "")
    version = _require(raw, "version", "", str)
    if version not in SUPPORTED_VERSIONS:
        raise FormatError(f"unsupported corpus version {version!r}", "/version")
    docs = [document_from_json(d, f"/documents/{i}")
            for i, d in enumerate(_require(raw, "documents", "", list))]
    return CorpusFile(version=version, documents=docs)


def corpus_to_json(corpus: CorpusFile) -> dict:
    return {"version": corpus.version,
            "documents": [document_to_json(d) for d in corpus.documents]}


def dumps_corpus(corpus: CorpusFile) -> str:
    # key order is fixed by the builders above; never sort, never escape Cyrillic
    return json.dumps(corpus_to_json(corpus), ensure_ascii=False, indent=1) + "\n"


def load_corpus(path) -> CorpusFile:
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"invalid JSON: {exc.msg}", f"{path}:{exc.lineno}") from None
    return corpus_from_json(raw)


def save_corpus(corpus: CorpusFile, path) -> None:
    path = Path(path)
    try:
        path.write_text(dumps_corpus(corpus), encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write corpus to {path}: {exc}") from exc


# -- CoNLL-U -----------------------------------------------------------------

def parse_conllu(lines: Iterable[str], source: str = "<conllu>") -> list[Sentence]:
    """Parse CoNLL-U lines into sentences.

    Multiword-token ranges (``1-2``) and empty nodes (``1.1``) are skipped.
    Character offsets come from ``TokenRange=s:e`` in MISC when every token
    has one; otherwise tokens are laid out over the ``# text`` comment (or a
    space-joined reconstruction when SpaceAfter=No cannot be honoured).
    """
    sentences = []
    rows: list[list[str]] = []
    text = None
    offset = 0
    lineno = 0

    def flush():
        nonlocal rows, text, offset
        if rows:
            sent, offset = _build_sentence(rows, text, offset, source)
            sentences.append(sent)
        rows, text = [], None

    for lineno, line in enumerate(lines, 1):
        line = line.rstrip("\r\n")
        if not line.strip():
            flush()
            continue
        if line.startswith("#"):
            key, _, value = line[1:].partition("=")
            if key.strip() == "text":
                text = value.strip()
            continue
        cols = line.split("\t")
        if len(cols) != 10:
            raise FormatError(f"expected 10 tab-separated columns, got {len(cols)}",
                              f"{source}:{lineno}")
        if "-" in cols[0] or "." in cols[0]:
            continue
        rows.append(cols + [str(lineno)])
    flush()
    return sentences


def _build_sentence(rows, text, offset, source):
    ranges = []
    for r in rows:
        misc = dict(kv.partition("=")[::2] for kv in r[9].split("|") if "=" in kv)
        if "TokenRange" in misc:
            s, _, e = misc["TokenRange"].partition(":")
            ranges.append((int(s), int(e)))
    if len(ranges) != len(rows):
        ranges = []
        pos = offset
        for r in rows:
            form = r[1]
            if text is not None:
                found = text.find(form, pos - offset)
                start = offset + found if found >= 0 else pos
            else:
                start = pos
            ranges.append((start, start + len(form)))
            no_space = "SpaceAfter=No" in r[9]
            pos = start + len(form) + (0 if no_space else 1)
        offset = pos
    else:
        offset = ranges[-1][1] + 1
    tokens = []
    for r, (s, e) in zip(rows, ranges):
        try:
            head = None if r[6] == "_" else int(r[6])
        except ValueError:
            raise FormatError(f"non-integer HEAD {r[6]!r}", f"{source}:{r[10]}") from None
        tokens.append(Token(
            text=r[1], span=Span(s, e),
            lemma=None if r[2] == "_" else r[2],
            pos=None if r[3] == "_" else r[3],
            head=head,
            deprel=None if r[7] == "_" else r[7],
            feats=None if r[5] == "_" else r[5],
        ))
    return Sentence(tokens), offset


def read_conllu(path) -> list[Sentence]:
    with open(path, encoding="utf-8") as fh:
        return parse_conllu(fh, str(path))


# -- tag files ---------------------------------------------------------------

def format_tag_lines(sentences: Sequence[Sentence], gold: Sequence[Sequence[str]],
                     pred: Sequence[Sequence[str]]) -> Iterator[str]:
    """Yield conlleval lines; ``gold``/``pred`` hold prefixed tags per sentence."""
    if not len(sentences) == len(gold) == len(pred):
        raise AlignmentError(
            f"{len(sentences)} sentences, {len(gold)} gold and {len(pred)} predicted sequences")
    for k, (sent, g, p) in enumerate(zip(sentences, gold, pred)):
        if not len(sent) == len(g) == len(p):
            raise AlignmentError(
                f"sentence {k}: {len(sent)} tokens, {len(g)} gold tags, {len(p)} predicted tags")
        for tok, gt, pt in zip(sent.tokens, g, p):
            form = "".join("_" if ch.isspace() else ch for ch in tok.text)
            yield f"{form} {gt} {pt}\n"
        yield "\n"


def _as_prefixed(seq) -> list[str]:
    return seq.prefixed() if isinstance(seq, TagSequence) else list(seq)


def write_tag_file(sentences: Sequence[Sentence], gold, pred, path) -> None:
    gold = [_as_prefixed(g) for g in gold]
    pred = [_as_prefixed(p) for p in pred]
    lines = list(format_tag_lines(sentences, gold, pred))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.writelines(lines)


def layer_path(path, layer: str) -> Path:
    """``out.tags`` + ``ADR`` -> ``out-ADR.tags``."""
    path = Path(path)
    return path.with_name(f"{path.stem}-{layer}{path.suffix}")


def write_layer_tag_files(sentences: Sequence[Sentence], gold: dict, pred: dict, path) -> list[Path]:
    """One tag file per layer; ``gold``/``pred`` map layer -> per-sentence TagSequences."""
    written = []
    for layer in gold:
        target = layer_path(path, layer)
        write_tag_file(sentences, gold[layer], pred[layer], target)
        written.append(target)
    return written


def parse_tag_lines(lines: Iterable[str], source: str = "<tags>"):
    """Read ``token gold pred`` lines back into (tokens, gold, pred) per sentence."""
    tokens, gold, pred = [], [], []
    cur_t, cur_g, cur_p = [], [], []
    for lineno, line in enumerate(lines, 1):
        line = line.rstrip("\r\n")
        if not line.strip():
            if cur_t:
                tokens.append(cur_t); gold.append(cur_g); pred.append(cur_p)
            cur_t, cur_g, cur_p = [], [], []
            continue
        parts = line.split(" ")
        if len(parts) < 3:
            raise FormatError(f"expected 'token gold pred', got {line!r}", f"{source}:{lineno}")
        cur_t.append(" ".join(parts[:-2]))
        cur_g.append(parts[-2])
        cur_p.append(parts[-1])
    if cur_t:
        tokens.append(cur_t); gold.append(cur_g); pred.append(cur_p)
    return tokens, gold, pred


def read_tag_file(path):
    with open(path, encoding="utf-8") as fh:
        return parse_tag_lines(fh, str(path))


# -- lexicons and vectors ----------------------------------------------------

def load_lexicon(path, name: Optional[str] = None) -> Lexicon:
    path = Path(path)
    entries: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\r\n")
            if not line.strip() or line.startswith("#"):
                continue
            term, sep, category = line.partition("\t")
            term = term.strip().lower()
            if not sep or not term or not category.strip():
                raise FormatError("expected 'term<TAB>category'", f"{path}:{lineno}")
            if term in entries:
                log.warning("%s:%d: duplicate term %r, last entry wins", path, lineno, term)
            entries[term] = category.strip()
    return Lexicon(name=name or path.stem, entries=entries)


def load_vectors(path) -> VectorTable:
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise FormatError("header must be 'count dim'", f"{path}:1")
        try:
            count, dim = int(header[0]), int(header[1])
        except ValueError:
            raise FormatError("header must be 'count dim'", f"{path}:1") from None
        if dim <= 0:
            raise FormatError("dimension must be positive", f"{path}:1")
        entries: dict[str, list[float]] = {}
        rows = 0
        for lineno, line in enumerate(fh, 2):
            parts = line.rstrip().split(" ")
            if not line.strip():
                continue
            rows += 1
            token, values = parts[0], parts[1:]
            if len(values) != dim:
                raise FormatError(f"expected {dim} values, got {len(values)}", f"{path}:{lineno}")
            try:
                vec = [float(v) for v in values]
            except ValueError:
                raise FormatError("non-numeric vector component", f"{path}:{lineno}") from None
            if not all(math.isfinite(v) for v in vec):
                raise FormatError("non-finite vector component", f"{path}:{lineno}")
            if token in entries:
                log.warning("%s:%d: duplicate token %r, last entry wins", path, lineno, token)
            entries[token] = vec
    if rows != count:
        raise FormatError(f"header declares {count} rows, found {rows}", str(path))
    return VectorTable(dimension=dim, entries=entries)


def save_vectors(table: VectorTable, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"{len(table.entries)} {table.dimension}\n")
        for tok, vec in table.entries.items():
            fh.write(tok + " " + " ".join(repr(float(v)) for v in vec) + "\n")


def load_code_mapping(path) -> dict[str, dict[str, str]]:
    """``name<TAB>scheme<TAB>code`` rows -> {name: {scheme: code}}.

    Names are matched case-insensitively. A repeated (name, scheme) pair
    overrides the earlier one with a warning.
    """
    path = Path(path)
    out: dict[str, dict[str, str]] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\r\n")
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 3 or not all(p.strip() for p in parts):
                raise FormatError("expected 'name<TAB>scheme<TAB>code'", f"{path}:{lineno}")
            name, scheme, code = (p.strip() for p in parts)
            slot = out.setdefault(name.lower(), {})
            if scheme in slot:
                log.warning("%s:%d: duplicate mapping for %r/%s, last wins", path, lineno, name, scheme)
            slot[scheme] = code
    return out


def load_concept_inventory(path) -> list[tuple[str, str]]:
    """``concept_text<TAB>code`` rows, file order kept."""
    path = Path(path)
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\r\n")
            if not line.strip() or line.startswith("#"):
                continue
            text, sep, code = line.partition("\t")
            if not sep or not text.strip() or not code.strip():
                raise FormatError("expected 'concept_text<TAB>code'", f"{path}:{lineno}")
            out.append((text.strip(), code.strip()))
    return out


def write_json(obj, path=None, stream=None) -> str:
    text = json.dumps(obj, ensure_ascii=False, indent=2, sort_keys=True) + "\n"
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    elif stream is not None:
        stream.write(text)
    return text


def ensure_parent(path) -> None:
    parent = os.path.dirname(os.fspath(path))
    if parent:
        os.makedirs(parent, exist_ok=True)
