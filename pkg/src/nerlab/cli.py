"""Command-line entry point: ``nerlab <subcommand> ...``.

Exit codes: 0 success, 1 validation or evaluation failure, 2 usage error.
Data goes to ``--out`` or stdout, logs to stderr.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import __version__
from .core import CorpusError, Sentence, TagSequence, encode_bio, layers_of
from .evaluate import AgreementConfig, ChainSet, chunk_prf, coref_scores, pairwise_table, pct
from .formats import (
    CorpusFile, dumps_corpus, ensure_parent, layer_path, load_code_mapping,
    load_concept_inventory, load_corpus, load_lexicon, load_vectors, read_conllu,
    read_tag_file, write_json, write_layer_tag_files, write_tag_file,
)

log = logging.getLogger("nerlab")

SUBCOMMANDS = ("validate", "convert", "stats", "agreement", "eval-ner", "eval-coref",
               "group", "link", "train", "tag")


class UsageError(Exception):
    pass


def _threads_default() -> int:
    env = os.environ.get("NER_LAB_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            log.warning("ignoring non-integer NER_LAB_THREADS=%r", env)
    return os.cpu_count() or 1


def _common(p: argparse.ArgumentParser, formats=("text", "json")) -> None:
    p.add_argument("--out", help="write the report here instead of stdout")
    p.add_argument("--format", choices=formats, default=formats[0])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nerlab", description="Annotated drug-review corpus toolkit.",
                                     epilog="exit codes: 0 success, 1 validation or evaluation failure, 2 usage error")
    parser.add_argument("--version", action="version", version=f"nerlab {__version__}")
    parser.add_argument("--config", help="TOML file with option defaults (flags win)")
    parser.add_argument("--threads", type=int, default=None,
                        help="worker threads (default: $NER_LAB_THREADS or CPU count)")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)

    p = sub.add_parser("validate", help="check a corpus file against every invariant")
    p.add_argument("corpus")
    _common(p)

    p = sub.add_parser("convert", help="rewrite a corpus canonically or export tag files")
    p.add_argument("corpus")
    p.add_argument("--to", choices=("json", "tags"), default="json")
    p.add_argument("--layers", help="comma-separated layers for tag export (default: all present)")
    p.add_argument("--pred", help="corpus whose mentions fill the predicted column")
    p.add_argument("--out", help="output file; tag export writes <stem>-<layer><suffix>")

    p = sub.add_parser("stats", help="corpus statistics")
    p.add_argument("corpus")
    p.add_argument("--layers")
    p.add_argument("--drug-groups", help="TSV surface<TAB>drug group")
    p.add_argument("--source-groups", help="TSV surface<TAB>source group")
    _common(p, ("text", "json", "csv"))

    p = sub.add_parser("agreement", help="pairwise inter-annotator agreement")
    p.add_argument("--a", required=True, help="first annotator's corpus")
    p.add_argument("--b", required=True, help="second annotator's corpus")
    p.add_argument("--c", dest="more", action="append", default=[],
                   help="further annotators' corpora (repeatable)")
    p.add_argument("--span", choices=("strict", "intersection"), default="strict")
    p.add_argument("--tag", choices=("strict", "ignored"), default="strict")
    _common(p)

    p = sub.add_parser("eval-ner", help="CoNLL-2000 chunk scoring of tag files")
    p.add_argument("tagfile", nargs="?", help="one file with token, gold and predicted tag")
    p.add_argument("--gold", help="tag file whose gold column is the reference")
    p.add_argument("--pred", help="tag file whose predicted column is scored")
    _common(p)

    p = sub.add_parser("eval-coref", help="MUC, B3, CEAFe and their mean")
    p.add_argument("--gold", required=True)
    p.add_argument("--pred", required=True)
    _common(p)

    p = sub.add_parser("group", help="group mention surfaces of one layer")
    p.add_argument("corpus")
    p.add_argument("--layer", required=True)
    p.add_argument("--threshold", type=float, default=0.8)
    p.add_argument("--lemmas", action="store_true", help="compare token lemmas instead of surfaces")
    p.add_argument("--mapping", help="TSV name<TAB>scheme<TAB>code")
    _common(p, ("json", "tsv"))

    p = sub.add_parser("link", help="link corpus words to thesaurus concepts")
    p.add_argument("corpus")
    p.add_argument("--concepts", required=True, help="TSV concept_text<TAB>code")
    p.add_argument("--concept-parse", help="CoNLL-U parse of the concept texts, same order")
    p.add_argument("--vectors", help="word2vec text vectors (cosine method)")
    p.add_argument("--method", choices=("cosine", "syntactic"), default="cosine")
    p.add_argument("--threshold", type=float, default=None,
                   help="cosine default 0.55 (>=), syntactic default 0.6 (>)")
    p.add_argument("--min-len", type=int, default=1)
    p.add_argument("--out")

    p = sub.add_parser("train", help="train the baseline tagger for one layer")
    p.add_argument("corpus")
    p.add_argument("--layer", required=True)
    p.add_argument("--epochs", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--model", required=True, help="output model file (JSON)")
    p.add_argument("--lexicon", action="append", default=[], help="category lexicon TSV (repeatable)")
    p.add_argument("--emotion", action="append", default=[], help="emotion dictionary TSV (repeatable)")
    p.add_argument("--no-markers", action="store_true", help="disable document-level markers")
    p.add_argument("--log", help="training log CSV")

    p = sub.add_parser("tag", help="tag a corpus with a trained model")
    p.add_argument("corpus")
    p.add_argument("--model", required=True)
    p.add_argument("--out", help="tag file (token gold pred)")
    return parser


# -- config ------------------------------------------------------------------

def _load_toml(path: str) -> dict:
    try:
        import tomllib
    except ImportError:  # Python < 3.11
        import tomli as tomllib
    with open(path, "rb") as fh:
        return tomllib.load(fh)


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> argparse.Namespace:
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    command = next((a for a in argv if a in SUBCOMMANDS), None)
    if not known.config or command is None:
        return parser.parse_args(argv)
    try:
        raw = _load_toml(known.config)
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot read config {known.config}: {exc}") from None
    values = {k: v for k, v in raw.items() if not isinstance(v, dict)}
    values.update(raw.get(command, {}))
    sub = parser._subparsers._group_actions[0].choices[command]
    top = {a.dest for a in parser._actions} - {"help", "version", "config", "command"}
    actions = {a.dest: a for a in sub._actions if a.dest != "help"}
    sub_defaults, top_defaults = {}, {}
    for key, value in values.items():
        dest = key.replace("-", "_")
        if dest in actions:
            # a config value satisfies a required option; an explicit flag still wins
            actions[dest].required = False
            sub_defaults[dest] = value
        elif dest in top:
            top_defaults[dest] = value
        else:
            raise UsageError(f"unknown config key {key!r} for {command}")
    sub.set_defaults(**sub_defaults)
    parser.set_defaults(**top_defaults)
    return parser.parse_args(argv)


def _validate(args: argparse.Namespace) -> None:
    if args.threads is None:
        args.threads = _threads_default()
    if args.threads < 1:
        raise UsageError("--threads must be >= 1")
    cmd = args.command
    if cmd == "group" and not 0 < args.threshold <= 1:
        raise UsageError("--threshold must be in (0, 1]")
    if cmd == "link" and args.threshold is not None:
        lo = -1.0 if args.method == "cosine" else 0.0
        if not lo <= args.threshold <= 1:
            raise UsageError(f"--threshold must be in [{lo}, 1]")
    if cmd == "link" and args.method == "cosine" and not args.vectors:
        raise UsageError("--method cosine needs --vectors")
    if cmd == "link" and args.method == "syntactic" and args.vectors:
        raise UsageError("--vectors conflicts with --method syntactic")
    if cmd == "link" and args.method == "syntactic" and not args.concept_parse:
        raise UsageError("--method syntactic needs --concept-parse")
    if cmd == "train" and args.epochs < 1:
        raise UsageError("--epochs must be >= 1")
    if cmd == "eval-ner":
        if args.tagfile and (args.gold or args.pred):
            raise UsageError("give either TAGFILE or --gold/--pred, not both")
        if not args.tagfile and not (args.gold and args.pred):
            raise UsageError("eval-ner needs TAGFILE or both --gold and --pred")
    if cmd == "convert" and args.to == "tags" and not args.out:
        raise UsageError("--to tags needs --out")
    if cmd == "convert" and args.to == "json" and (args.pred or args.layers):
        raise UsageError("--pred/--layers only apply to --to tags")
    for name in ("corpus", "a", "b", "gold", "pred", "tagfile", "model", "concepts",
                 "concept_parse", "vectors", "mapping", "drug_groups", "source_groups"):
        value = getattr(args, name, None)
        if value and not (name == "model" and cmd == "train") and not os.path.exists(value):
            raise UsageError(f"no such file: {value}")
    for value in getattr(args, "more", []) + getattr(args, "lexicon", []) + getattr(args, "emotion", []):
        if not os.path.exists(value):
            raise UsageError(f"no such file: {value}")


def _effective_config(args: argparse.Namespace) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in ("verbose", "threads")}


def _emit(args, text: str) -> None:
    if getattr(args, "out", None):
        ensure_parent(args.out)
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _emit_json(args, payload: dict) -> None:
    payload = {"tool_version": __version__, "config": _effective_config(args), **payload}
    _emit(args, write_json(payload))


def _layers(arg, mentions) -> list[str]:
    return [x.strip() for x in arg.split(",") if x.strip()] if arg else layers_of(mentions)


# -- subcommands -------------------------------------------------------------

def cmd_validate(args) -> int:
    corpus = load_corpus(args.corpus)
    docs = corpus.documents
    summary = {"documents": len(docs),
               "mentions": sum(len(d.mentions) for d in docs),
               "chains": sum(len(d.chains) for d in docs),
               "sentences": sum(len(d.sentences) for d in docs)}
    if args.format == "json":
        _emit_json(args, {"valid": True, **summary})
    else:
        _emit(args, "OK: {documents} documents, {sentences} sentences, {mentions} mentions, "
                    "{chains} chains\n".format(**summary))
    return 0


def _doc_tags(doc, layers):
    return {layer: [encode_bio(s, doc.mentions, layer) for s in doc.sentences] for layer in layers}


def cmd_convert(args) -> int:
    corpus = load_corpus(args.corpus)
    if args.to == "json":
        _emit(args, dumps_corpus(corpus))
        return 0
    pred_docs = load_corpus(args.pred).by_id() if args.pred else None
    layers = _layers(args.layers, [m for d in corpus.documents for m in d.mentions])
    sentences, gold, pred = [], {l: [] for l in layers}, {l: [] for l in layers}
    for doc in corpus.documents:
        sentences.extend(doc.sentences)
        g = _doc_tags(doc, layers)
        if pred_docs is not None:
            other = pred_docs.get(doc.id)
            if other is None:
                raise CorpusError(f"document {doc.id} missing from {args.pred}")
            p = {l: [encode_bio(s, other.mentions, l) for s in doc.sentences] for l in layers}
        else:
            p = g
        for l in layers:
            gold[l].extend(g[l])
            pred[l].extend(p[l])
    ensure_parent(args.out)
    for path in write_layer_tag_files(sentences, gold, pred, args.out):
        log.info("wrote %s", path)
    return 0


def cmd_stats(args) -> int:
    from .stats import corpus_stats, cooccurrence, matrix_csv, stats_text, tonality
    docs = load_corpus(args.corpus).documents
    layers = _layers(args.layers, [m for d in docs for m in d.mentions])
    result = corpus_stats(docs, layers)
    matrix = None
    if args.source_groups:
        sources = load_lexicon(args.source_groups).entries
        result["tonality"] = tonality(docs, sources)
        if args.drug_groups:
            matrix = cooccurrence(docs, load_lexicon(args.drug_groups).entries, sources)
            result["cooccurrence"] = matrix
    if args.format == "json":
        _emit_json(args, {"stats": result})
    elif args.format == "csv":
        if matrix is None:
            raise UsageError("--format csv needs --drug-groups and --source-groups")
        _emit(args, matrix_csv(matrix))
    else:
        _emit(args, stats_text(result))
    return 0


def cmd_agreement(args) -> int:
    cfg = AgreementConfig(span=args.span, tag=args.tag)
    files = [args.a, args.b] + list(args.more)
    annotations = {}
    for k, path in enumerate(files):
        docs = load_corpus(path).documents
        annotations[f"{k + 1}:{path}"] = {d.id: list(d.mentions) for d in docs}
    table = pairwise_table(annotations, cfg)
    score = sum(table.values()) / len(table)
    if args.format == "json":
        _emit_json(args, {"agreement": score,
                          "pairs": [{"a": a, "b": b, "agreement": v} for (a, b), v in table.items()]})
    else:
        lines = [f"{a} vs {b}: {pct(v):.1f}" for (a, b), v in table.items()]
        lines.append(f"average agreement ({cfg.span}/{cfg.tag}): {pct(score):.1f}")
        _emit(args, "\n".join(lines) + "\n")
    return 0


def cmd_eval_ner(args) -> int:
    if args.tagfile:
        _, gold, pred = read_tag_file(args.tagfile)
    else:
        gtok, gold, _ = read_tag_file(args.gold)
        ptok, _, pred = read_tag_file(args.pred)
        if [len(s) for s in gtok] != [len(s) for s in ptok]:
            raise CorpusError("gold and predicted files are not token-aligned")
    report = chunk_prf(gold, pred)
    if args.format == "json":
        _emit_json(args, {"report": report.to_json()})
    else:
        _emit(args, report.to_text())
    return 0


def cmd_eval_coref(args) -> int:
    gold = load_corpus(args.gold).by_id()
    pred = load_corpus(args.pred).by_id()
    missing = sorted(set(gold) - set(pred))
    if missing:
        raise CorpusError(f"documents missing from prediction: {', '.join(missing)}")
    pairs = [(ChainSet.from_chains(gold[d].chains), ChainSet.from_chains(pred[d].chains))
             for d in gold]
    scores = coref_scores(pairs)
    if args.format == "json":
        _emit_json(args, {"coref": scores})
    else:
        lines = ["metric  P      R      F1"]
        for name in ("muc", "b3", "ceafe"):
            s = scores[name]
            lines.append(f"{name:<6} {pct(s['precision']):>5.1f}  {pct(s['recall']):>5.1f}  "
                         f"{pct(s['f1']):>5.1f}")
        lines.append(f"avg F1 {pct(scores['avg_f1']):.1f}")
        _emit(args, "\n".join(lines) + "\n")
    return 0


def cmd_group(args) -> int:
    from .core import token_extent
    from .normalize import assign_codes, group_mentions, groups_tsv
    docs = load_corpus(args.corpus).documents
    surfaces, keys = [], []
    for d in docs:
        for m in d.layer(args.layer):
            surfaces.append(m.text(d.text))
            if args.lemmas:
                lemmas = []
                for s in d.sentences:
                    for i in token_extent(m, s):
                        tok = s.tokens[i]
                        lemmas.append((tok.lemma or tok.text).lower())
                keys.append(" ".join(lemmas) or surfaces[-1])
    groups = group_mentions(surfaces, args.threshold, keys if args.lemmas else None)
    if args.mapping:
        groups = assign_codes(groups, load_code_mapping(args.mapping))
    if args.format == "tsv":
        _emit(args, groups_tsv(groups))
    else:
        _emit_json(args, {"layer": args.layer, "input_size": len(surfaces),
                          "groups": [g.to_json() for g in groups]})
    return 0


def cmd_link(args) -> int:
    from .linker import ConceptEntry, link_sentence
    docs = load_corpus(args.corpus).documents
    inventory = load_concept_inventory(args.concepts)
    vectors = load_vectors(args.vectors) if args.vectors else None
    if args.concept_parse:
        parsed = read_conllu(args.concept_parse)
        if len(parsed) != len(inventory):
            raise CorpusError(f"{len(inventory)} concepts but {len(parsed)} parsed sentences")
        concepts = [ConceptEntry.from_tokens(t, c, s.tokens, min_len=args.min_len)
                    for (t, c), s in zip(inventory, parsed)]
    else:
        concepts = [ConceptEntry.from_text(t, c) for t, c in inventory]
    sentences = [s for d in docs for s in d.sentences]

    def work(sent: Sentence):
        return link_sentence(sent, concepts, args.method, vectors, args.threshold,
                             min_len=args.min_len)

    with ThreadPoolExecutor(max_workers=args.threads) as pool:
        results = list(pool.map(work, sentences))
    lines = ["word\tcode\tscore\tmethod"]
    for links in results:
        lines.extend(link.tsv() for _, link in links if link is not None)
    _emit(args, "\n".join(lines) + "\n")
    return 0


def cmd_train(args) -> int:
    from .tagger import FeatureExtractor, trace_csv, train
    docs = load_corpus(args.corpus).documents
    extractor = FeatureExtractor(
        lexicons=[load_lexicon(p) for p in args.lexicon],
        emotions=[load_lexicon(p) for p in args.emotion],
        use_markers=not args.no_markers,
    )
    model = train(docs, args.layer, epochs=args.epochs, seed=args.seed, extractor=extractor)
    ensure_parent(args.model)
    model.save(args.model)
    if args.log:
        ensure_parent(args.log)
        Path(args.log).write_text(trace_csv(model.trace), encoding="utf-8")
    last = model.trace[-1] if model.trace else {}
    sys.stderr.write(f"trained {args.layer}: {model.epochs} epochs, "
                     f"training F1 {pct(last.get('f1', 0.0)):.1f}\n")
    return 0


def cmd_tag(args) -> int:
    from .tagger import TaggerModel, tag_sentences
    model = TaggerModel.load(args.model)
    docs = load_corpus(args.corpus).documents

    def work(doc):
        return tag_sentences(model, doc.sentences, doc)

    with ThreadPoolExecutor(max_workers=args.threads) as pool:
        predicted = list(pool.map(work, docs))
    sentences, gold, pred = [], [], []
    for doc, seqs in zip(docs, predicted):
        sentences.extend(doc.sentences)
        gold.extend(encode_bio(s, doc.mentions, model.layer) for s in doc.sentences)
        pred.extend(seqs)
    if args.out:
        ensure_parent(args.out)
        write_tag_file(sentences, gold, pred, args.out)
    else:
        from .formats import format_tag_lines
        sys.stdout.writelines(format_tag_lines(
            sentences, [g.prefixed() for g in gold], [p.prefixed() for p in pred]))
    return 0


COMMANDS = {
    "validate": cmd_validate, "convert": cmd_convert, "stats": cmd_stats,
    "agreement": cmd_agreement, "eval-ner": cmd_eval_ner, "eval-coref": cmd_eval_coref,
    "group": cmd_group, "link": cmd_link, "train": cmd_train, "tag": cmd_tag,
}


def run(argv=None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = _apply_config(parser, argv)
        _validate(args)
    except SystemExit as exc:
        return int(exc.code or 0)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        sys.stderr.write(f"nerlab: error: {exc}\n")
        return 2
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        sys.stderr.write(f"nerlab: error: {exc}\n")
        return 2
    except (CorpusError, OSError, ValueError) as exc:
        sys.stderr.write(f"nerlab: {args.command} failed: {exc}\n")
        return 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
