"""Builders and independent brute-force oracles shared by the test modules."""

import itertools
import random

from nerlab.core import Document, Mention, Sentence, Span, Token


def make_doc(sentences, mentions=(), doc_id="d1", pos=None, lemmas=None, heads=None, chains=()):
    """Build a document from lists of words.

    ``mentions`` items are (label, [(sent, first_tok, last_tok), ...]) with
    inclusive token ranges; an attribute label implies its entity.
    """
    from nerlab.core import ENTITIES, _entity_of
    text_parts, sents, offsets = [], [], []
    pos_ = 0
    for si, words in enumerate(sentences):
        toks, offs = [], []
        for wi, w in enumerate(words):
            start = pos_
            text_parts.append(w)
            pos_ += len(w)
            text_parts.append(" ")
            pos_ += 1
            p = pos[si][wi] if pos else None
            lem = lemmas[si][wi] if lemmas else w.lower()
            h = heads[si][wi] if heads else None
            toks.append(Token(w, Span(start, start + len(w)), lemma=lem, pos=p, head=h))
            offs.append((start, start + len(w)))
        sents.append(Sentence(toks))
        offsets.append(offs)
    text = "".join(text_parts)
    ms = []
    for k, (label, parts) in enumerate(mentions):
        spans = tuple(Span(offsets[s][a][0], offsets[s][b][1]) for s, a, b in parts)
        if label in ENTITIES:
            ms.append(Mention(f"m{k}", label, spans))
        else:
            ms.append(Mention(f"m{k}", _entity_of(label), spans, attribute=label))
    return Document(doc_id, text, sentences=sents, mentions=ms, chains=chains)


# -- chunks ------------------------------------------------------------------

def _split(tag):
    if tag == "O":
        return "O", None
    return tag[0], tag[2:]


def brute_chunks(seq):
    """Every (type, start, end) satisfying the chunk definition, by enumeration."""
    n = len(seq)
    out = set()
    for a in range(n):
        pa, ta = _split(seq[a])
        if pa == "O":
            continue
        if pa == "I" and a > 0 and _split(seq[a - 1])[1] == ta:
            continue  # continuation, not a start
        for b in range(a, n):
            if b > a and seq[b] != f"I-{ta}":
                break
            nxt = seq[b + 1] if b + 1 < n else "O"
            if nxt != f"I-{ta}":
                out.add((ta, a, b))
                break
    return out


def brute_prf(gold, pred):
    g = {(k,) + c for k, s in enumerate(gold) for c in brute_chunks(s)}
    p = {(k,) + c for k, s in enumerate(pred) for c in brute_chunks(s)}
    correct = len(g & p)
    prec = 100.0 * correct / len(p) if p else 0.0
    rec = 100.0 * correct / len(g) if g else 0.0
    f = 2 * prec * rec / (prec + rec) if prec + rec else 0.0
    return prec, rec, f


# -- matching ----------------------------------------------------------------

def brute_matching(A, B, ok):
    best = 0
    for k in range(min(len(A), len(B)), 0, -1):
        for sub_a in itertools.combinations(range(len(A)), k):
            for perm in itertools.permutations(range(len(B)), k):
                if all(ok(A[i], B[j]) for i, j in zip(sub_a, perm)):
                    return k
    return best


# -- Ratcliff/Obershelp ------------------------------------------------------

def brute_longest(a, b):
    best = (0, 0, 0)
    for i in range(len(a)):
        for j in range(len(b)):
            k = 0
            while i + k < len(a) and j + k < len(b) and a[i + k] == b[j + k]:
                k += 1
            if k > best[2] or (k == best[2] and k > 0 and (i, j) < best[:2]):
                best = (i, j, k)
    return best


def brute_matched(a, b):
    if not a or not b:
        return 0
    i, j, k = brute_longest(a, b)
    if k == 0:
        return 0
    return k + brute_matched(a[:i], b[:j]) + brute_matched(a[i + k:], b[j + k:])


def brute_ratcliff(a, b):
    a, b = sorted((a.lower(), b.lower()))
    if not a and not b:
        return 1.0
    return 2.0 * brute_matched(a, b) / (len(a) + len(b))


# -- coreference -------------------------------------------------------------

def brute_ceafe(gold, pred):
    """Best total phi4 over every injective chain alignment."""
    gold, pred = [set(c) for c in gold], [set(c) for c in pred]
    small, big, flip = (gold, pred, False) if len(gold) <= len(pred) else (pred, gold, True)
    best = 0.0
    for perm in itertools.permutations(range(len(big)), len(small)):
        total = 0.0
        for i, j in enumerate(perm):
            k, r = (big[j], small[i]) if flip else (small[i], big[j])
            total += 2.0 * len(k & r) / (len(k) + len(r))
        best = max(best, total)
    return best


def random_partition(rng, universe, max_chains):
    items = list(universe)
    rng.shuffle(items)
    chains, i = [], 0
    while i < len(items) - 1 and len(chains) < max_chains:
        size = rng.randint(2, min(4, len(items) - i))
        chains.append(items[i:i + size])
        i += size
    return chains


# -- synthetic corpora -------------------------------------------------------

def random_layer_sentence(rng, n_tokens, n_layers=1, layers=("ADR", "Drugname", "Indication")):
    """Random well-formed prefixed tag sequences with up to n_layers types."""
    types = layers[:n_layers]
    seq, i = [], 0
    while i < n_tokens:
        if rng.random() < 0.4:
            t = rng.choice(types)
            length = rng.randint(1, min(3, n_tokens - i))
            seq.append(f"B-{t}")
            seq.extend(f"I-{t}" for _ in range(length - 1))
            i += length
        else:
            seq.append("O")
            i += 1
    return seq


def random_tags(rng, n_tokens, types=("ADR", "Drugname", "Indication")):
    """Arbitrary (possibly ill-formed) prefixed tags."""
    pool = ["O"] + [f"{p}-{t}" for t in types for p in "BI"]
    return [rng.choice(pool) for _ in range(n_tokens)]


# -- linker ------------------------------------------------------------------

FUNCTION = {"ADP", "PART", "PUNCT", "CCONJ", "SCONJ", "DET", "AUX"}


def brute_cosine_link(word_vec, concept_vecs, threshold):
    """(index, score) of the best concept by plain cosine, or None."""
    import numpy as np
    if word_vec is None:
        return None
    w = np.asarray(word_vec, dtype=float)
    best = None
    for i, cv in enumerate(concept_vecs):
        if cv is None:
            continue
        c = np.asarray(cv, dtype=float)
        den = np.linalg.norm(w) * np.linalg.norm(c)
        s = float(w @ c / den) if den else 0.0
        if best is None or s > best[1] + 1e-12:
            best = (i, s)
    if best is None or best[1] < threshold - 1e-12:
        return None
    return best


def _sets(forms_parents):
    """Lexical and syntactic sets straight from a list of (form, parent_form)."""
    out = []
    for k, (form, parent) in enumerate(forms_parents):
        lex = {form}
        if k:
            lex.add(forms_parents[k - 1][0])
        if k + 1 < len(forms_parents):
            lex.add(forms_parents[k + 1][0])
        syn = {form} | ({parent} if parent else set())
        out.append((lex, syn, parent))
    return out


def _f1(x, y):
    c = len(x & y)
    return 0.0 if not c else 2 * (c / len(x)) * (c / len(y)) / (c / len(x) + c / len(y))


def brute_syntactic_scores(word_fp, concept_fps):
    """Per target word: list of concept scores (max over concept words)."""
    wsets = _sets(word_fp)
    csets = [_sets(fp) for fp in concept_fps]
    table = []
    for lex, syn, parent in wsets:
        row = []
        for cs in csets:
            best = 0.0
            for clex, csyn, _ in cs:
                cen = 1 if parent is not None and parent in csyn else 0
                best = max(best, (_f1(lex, clex) + _f1(syn, csyn) + cen) / 3)
            row.append(best)
        table.append(row)
    return table


# -- tagger ------------------------------------------------------------------

DRUGS = ["аспирин", "ибупрофен", "нурофен", "парацетамол", "цитрамон", "анальгин",
         "кагоцел", "арбидол", "ингавирин", "амиксин", "терафлю", "колдрекс"]
FILLER = ["я", "пил", "принимал", "три", "дня", "после", "еды", "помогло", "хорошо",
          "не", "сильно", "утром", "вечером", "врач", "назначил", "таблетки", "от", "боли",
          "и", "но", "снова", "очень", "быстро", "купил", "в", "аптеке"]


def synthetic_corpus(n_sentences, seed, per_doc=5):
    """Documents whose Drugname layer is exactly "token is in DRUGS"."""
    rng = random.Random(seed)
    docs = []
    for d in range(0, n_sentences, per_doc):
        sents, mentions = [], []
        for s in range(min(per_doc, n_sentences - d)):
            words = [rng.choice(FILLER) for _ in range(rng.randint(4, 10))]
            for _ in range(rng.randint(0, 2)):
                words.insert(rng.randint(0, len(words)), rng.choice(DRUGS))
            for i, w in enumerate(words):
                if w in DRUGS:
                    mentions.append(("Drugname", [(s, i, i)]))
            sents.append(words)
        docs.append(make_doc(sents, mentions, doc_id=f"syn{d // per_doc}"))
    return docs


def random_corpus(rng, n_docs=5, labels=("ADR", "Drugname", "Indication", "BNE-Pos")):
    """Small documents with random, possibly overlapping or discontinuous mentions."""
    docs = []
    for d in range(n_docs):
        n_sent = rng.randint(1, 3)
        sents = [[f"w{rng.randint(0, 20)}" for _ in range(rng.randint(3, 8))] for _ in range(n_sent)]
        mentions = []
        for _ in range(rng.randint(0, 6)):
            s = rng.randrange(n_sent)
            a = rng.randrange(len(sents[s]))
            b = rng.randint(a, min(a + 2, len(sents[s]) - 1))
            parts = [(s, a, b)]
            if b + 2 < len(sents[s]) and rng.random() < 0.3:
                parts.append((s, b + 2, b + 2))
            mentions.append((rng.choice(labels), parts))
        docs.append(make_doc(sents, mentions, doc_id=f"r{d}"))
    return docs


# -- acceptance reporting ----------------------------------------------------

ACCEPTANCE = {}


class criterion:
    """Context manager recording one PASS/FAIL line per acceptance criterion."""

    def __init__(self, number, title):
        self.number, self.title = number, title

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        status = "PASS" if exc_type is None else "FAIL"
        detail = "" if exc is None else f" ({type(exc).__name__}: {str(exc).splitlines()[0] if str(exc) else ''})"
        line = f"criterion {self.number:>2} {status}: {self.title}{detail}"
        ACCEPTANCE[self.number] = line
        print(line)
        return False
