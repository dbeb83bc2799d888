"""One test per acceptance criterion, each at its stated tolerance."""

import itertools
import random
import time
from pathlib import Path

import pytest

from helpers import (
    DRUGS, brute_ceafe, brute_cosine_link, brute_prf, brute_ratcliff, brute_syntactic_scores,
    criterion, make_doc, random_corpus, random_layer_sentence, random_partition, random_tags,
    synthetic_corpus,
)
from nerlab.core import TagSequence, decode_bio, encode_bio
from nerlab.evaluate import (
    AgreementConfig, ChainSet, agreement_pair, b3_prf, ceafe_alignment, ceafe_prf, chunk_prf,
    muc_prf,
)
from nerlab.formats import (
    CorpusFile, Lexicon, VectorTable, corpus_from_json, corpus_to_json, dumps_corpus, load_corpus,
    read_tag_file, write_tag_file,
)
from nerlab.linker import ConceptEntry, link_cosine, link_sentence
from nerlab.core import Sentence
from nerlab.normalize import group_mentions, ratcliff_similarity
from nerlab.stats import complexity_table, saturation_value, tonality
from nerlab.tagger import FeatureExtractor, tag, train
from nerlab.tagger.perceptron import gold_tags

DATA = Path(__file__).parent / "data"


def test_c01_bio_round_trip():
    with criterion(1, "BIO round-trip on 1,000 random sentences in < 5 s"):
        rng = random.Random(2024)
        start = time.perf_counter()
        for _ in range(1000):
            n = rng.randint(1, 20)
            words = [f"w{i}" for i in range(n)]
            mentions, i = [], 0
            while i < n:
                if rng.random() < 0.35:
                    j = min(n - 1, i + rng.randint(0, 3))
                    mentions.append(("ADR", [(0, i, j)]))
                    i = j + 1 + (rng.random() < 0.5)
                else:
                    i += 1
            doc = make_doc([words], mentions)
            sent = doc.sentences[0]
            decoded = decode_bio(encode_bio(sent, doc.mentions, "ADR"), sent)
            assert [(m.label, m.spans) for m in decoded] == [(m.label, m.spans) for m in doc.mentions]
        elapsed = time.perf_counter() - start
        assert elapsed < 5.0, f"{elapsed:.2f} s"


def test_c02_repair_rule():
    with criterion(2, "[O, I-ADR, I-ADR] vs gold [O, B-ADR, I-ADR] scores F1 = 100"):
        report = chunk_prf([["O", "B-ADR", "I-ADR"]], [["O", "I-ADR", "I-ADR"]])
        assert report.micro.f1 == 100.0


def test_c03_chunk_scorer_oracle():
    with criterion(3, "chunk_prf equals brute force on 200 random instances (1e-9)"):
        rng = random.Random(3)
        for _ in range(200):
            layers = rng.randint(1, 3)
            gold = [random_layer_sentence(rng, rng.randint(1, 10), layers) for _ in range(rng.randint(1, 3))]
            pred = [random_tags(rng, len(g), ("ADR", "Drugname", "Indication")[:layers]) for g in gold]
            m = chunk_prf(gold, pred).micro
            want = brute_prf(gold, pred)
            for got, exp in zip((m.precision, m.recall, m.f1), want):
                assert abs(got - exp) <= 1e-9


def _random_mentions(rng, k):
    from nerlab.core import Mention, Span
    out = []
    for i in range(k):
        s = rng.randint(0, 15)
        label = rng.choice(["ADR", "Drugname", "Indication"])
        entity = "ADR" if label == "ADR" else ("Medication" if label == "Drugname" else "Disease")
        out.append(Mention(f"m{i}", entity, (Span(s, s + rng.randint(1, 5)),),
                           attribute=None if label == "ADR" else label))
    return out


def test_c04_agreement_properties():
    with criterion(4, "agreement symmetric and monotone on 500 pairs; 100*2/4 = 50"):
        from nerlab.core import Mention, Span
        rng = random.Random(4)
        cfgs = {(s, t): AgreementConfig(s, t) for s in ("strict", "intersection") for t in ("strict", "ignored")}
        for _ in range(500):
            a = _random_mentions(rng, rng.randint(0, 6))
            b = _random_mentions(rng, rng.randint(0, 6))
            sc = {}
            for key, cfg in cfgs.items():
                sc[key] = agreement_pair(a, b, cfg)
                assert sc[key] == agreement_pair(b, a, cfg)
            assert sc[("strict", "strict")] <= sc[("intersection", "strict")] <= sc[("intersection", "ignored")]
            assert sc[("strict", "strict")] <= sc[("strict", "ignored")] <= sc[("intersection", "ignored")]
        fixture_a = [Mention(f"a{i}", "ADR", (Span(3 * i, 3 * i + 2),)) for i in range(4)]
        fixture_b = fixture_a[:2]
        assert agreement_pair(fixture_a, fixture_b, AgreementConfig()) == 50.0


def test_c05_ratcliff():
    with criterion(5, "Ratcliff equals oracle on all strings up to length 6 over {a,b,c}; abc/abd = 2/3"):
        pool = ["".join(t) for n in range(1, 7) for t in itertools.product("abc", repeat=n)]
        for a in pool:
            for b in pool:
                # both sides sort their inputs, so unordered pairs cover the product
                if a <= b:
                    assert ratcliff_similarity(a, b) == brute_ratcliff(a, b)
        assert ratcliff_similarity("abd", "abc") == ratcliff_similarity("abc", "abd")
        assert abs(ratcliff_similarity("abc", "abd") - 2 / 3) <= 1e-9


def test_c06_grouping():
    with criterion(6, "Russian 3-surface fixture gives 2 groups at 0.8; duplicates co-group; sizes sum"):
        rng = random.Random(6)
        base = ["боль", "больно", "тошнота", "тошнит", "головная боль", "зуд", "сыпь"]
        for _ in range(100):
            surfaces = [rng.choice(base) for _ in range(rng.randint(1, 25))]
            groups = group_mentions(surfaces, rng.choice([0.5, 0.8, 0.95]))
            assert sum(g.size for g in groups) == len(surfaces)
            home = {}
            for gi, g in enumerate(groups):
                for s in g.members:
                    assert home.setdefault(s, gi) == gi
        groups = group_mentions(["головная боль", "головные боли", "тошнота"], 0.8)
        assert len(groups) == 2, (
            f"got {len(groups)} groups; similarity of the first two surfaces is "
            f"{ratcliff_similarity('головная боль', 'головные боли'):.4f}, not above 0.8")


def _toy_inventory(rng):
    vocab = [f"w{i}" for i in range(25)]
    vt = VectorTable(5, {w: [rng.uniform(-1, 1) for _ in range(5)] for w in vocab})
    concepts, fps = [], []
    for k in range(20):
        n = rng.randint(1, 3)
        ws = rng.sample(vocab, n)
        heads = [0] + [rng.randint(1, n) for _ in range(n - 1)]
        heads = [h if h != i + 1 else 0 for i, h in enumerate(heads)]
        ct = make_doc([ws], pos=[["NOUN"] * n], heads=[heads]).sentences[0].tokens
        concepts.append(ConceptEntry.from_tokens(" ".join(ws), f"C{k:02d}", ct))
        fps.append([(w, ws[h - 1] if h else None) for w, h in zip(ws, heads)])
    return vocab, vt, concepts, fps


def test_c07_linker():
    with criterion(7, "cosine (T=0.55) and syntactic (0.6) linking match brute force; monotone in threshold"):
        import numpy as np
        rng = random.Random(7)
        vocab, vt, concepts, fps = _toy_inventory(rng)
        cvecs = [list(np.mean([vt.entries[w] for w in c.words], axis=0)) for c in concepts]
        sweep = [round(0.3 + 0.05 * k, 2) for k in range(13)]
        for _ in range(20):
            n = rng.randint(2, 8)
            ws = [rng.choice(vocab + ["oov"]) for _ in range(n)]
            heads = [rng.randint(0, n) for _ in range(n)]
            heads = [h if h != i + 1 else 0 for i, h in enumerate(heads)]
            sent = Sentence(make_doc([ws], pos=[["NOUN"] * n], heads=[heads]).sentences[0].tokens)
            for w in ws:
                got = link_cosine(w, concepts, vt, 0.55)
                want = brute_cosine_link(vt.get(w), cvecs, 0.55)
                assert (got is None) == (want is None)
                assert got is None or got.code == concepts[want[0]].code
            table = brute_syntactic_scores([(w, ws[h - 1] if h else None) for w, h in zip(ws, heads)], fps)
            for (_, link), row in zip(link_sentence(sent, concepts, "syntactic", threshold=0.6), table):
                best = max(range(len(row)), key=lambda j: (row[j], -j))
                assert (link is not None) == (row[best] > 0.6)
                assert link is None or link.code == concepts[best].code
            for method in ("cosine", "syntactic"):
                counts = [sum(l is not None for _, l in link_sentence(sent, concepts, method, vt, t))
                          for t in sweep]
                assert counts == sorted(counts, reverse=True)


def test_c08_coref():
    with criterion(8, "MUC recall 2/3 on split chain; identical = 100; CEAFe equals permutation optimum"):
        gold, pred = ChainSet(["abcd"]), ChainSet(["ab", "cd"])
        assert abs(muc_prf(gold, pred)[1] - 200 / 3) <= 1e-9
        same = ChainSet(["abc", "de"])
        for fn in (muc_prf, b3_prf, ceafe_prf):
            assert fn(same, ChainSet(["de", "abc"])) == (100.0, 100.0, 100.0)
        rng = random.Random(8)
        for _ in range(300):
            g = random_partition(rng, list("abcdefghijkl")[: rng.randint(2, 12)], 5)
            p = random_partition(rng, list("abcdefghijkl")[: rng.randint(2, 12)], 5)
            if g and p:
                total, _ = ceafe_alignment(ChainSet(g), ChainSet(p))
                assert abs(total - brute_ceafe(g, p)) <= 1e-12


def test_c09_stats():
    with criterion(9, "CADEC saturation 53.38 back-solved; complexity axes sum to 100; tonality exclusion"):
        words = round(6318 * 1000 / 53.38)
        assert abs(saturation_value(6318, words) - 53.38) <= 0.01
        rng = random.Random(9)
        for _ in range(50):
            for row in complexity_table(random_corpus(rng)).values():
                if row["empty"]:
                    continue
                assert abs(row["multiword"] + row["singleword"] - 100) <= 0.01
                assert abs(sum(v for k, v in row.items() if ", " in k) - 100) <= 0.01
        words_ = ["врач", "сказал", "эффект", "эффект"]
        docs = [
            make_doc([words_], [("SourceInfodrug", [(0, 0, 0)]), ("BNE-Pos", [(0, 2, 2)]), ("Worse", [(0, 3, 3)])], "both"),
            make_doc([words_], [("SourceInfodrug", [(0, 0, 0)]), ("BNE-Pos", [(0, 2, 2)])], "pos"),
        ]
        t = tonality(docs, {"врач": "doctor"})
        assert t["doctor"]["positive"] == 1 and t["doctor"]["negative"] == 0


def _train_synthetic():
    docs = synthetic_corpus(2000, seed=42)
    random.Random(42).shuffle(docs)
    cut = int(len(docs) * 0.8)
    lex = Lexicon("drugs", {d: "drug" for d in DRUGS})
    model = train(docs[:cut], "Drugname", epochs=5, seed=42, extractor=FeatureExtractor(lexicons=[lex]))
    return docs[cut:], model


def test_c10_tagger():
    with criterion(10, "synthetic tagger: held-out F1 >= 95, bit-identical rerun, < 60 s"):
        start = time.perf_counter()
        held, model = _train_synthetic()
        elapsed = time.perf_counter() - start
        gold = [TagSequence("Drugname", gold_tags(d, s, "Drugname")) for d in held for s in d.sentences]
        pred = [seq for seqs in tag(model, held) for seq in seqs]
        f1 = chunk_prf(gold, pred).micro.f1
        assert f1 >= 95, f"held-out F1 {f1:.2f}"
        assert elapsed < 60, f"{elapsed:.1f} s"
        _, again = _train_synthetic()
        assert again.to_json() == model.to_json()


def test_c11_formats(tmp_path):
    with criterion(11, "corpus JSON round-trips on all fixtures; tag-file writer re-scores exactly"):
        fixtures = [load_corpus(DATA / "golden.json")]
        rng = random.Random(11)
        fixtures += [CorpusFile(documents=random_corpus(rng)) for _ in range(20)]
        fixtures.append(CorpusFile(documents=synthetic_corpus(50, seed=1)))
        for corpus in fixtures:
            again = corpus_from_json(corpus_to_json(corpus))
            assert again == corpus
            assert dumps_corpus(again) == dumps_corpus(corpus)
        for k, corpus in enumerate(fixtures[1:21]):
            sentences = [s for d in corpus.documents for s in d.sentences]
            for layer in ("ADR", "Drugname"):
                gold = [encode_bio(s, d.mentions, layer) for d in corpus.documents for s in d.sentences]
                pred = [TagSequence(layer, [rng.choice("BIO") for _ in s.tokens]) for s in sentences]
                path = tmp_path / f"{k}-{layer}.tags"
                write_tag_file(sentences, gold, pred, path)
                _, g2, p2 = read_tag_file(path)
                assert chunk_prf(g2, p2).to_json() == chunk_prf(gold, pred).to_json()
                assert chunk_prf(g2, p2).micro.f1 == chunk_prf(gold, pred).micro.f1
