"""Command-line pipeline: extract / vocab / train / quantize / eval /
complete / serve.

Bare model names resolve against $PYCC_MODEL_DIR.  Errors exit non-zero
with a single machine-readable line on stderr.
"""

import argparse
import json
import os
import sys

from . import baselines, corpus, quantize
from .container import MAGIC, load_container
from .evaluation import (evaluate, write_comparison_csv, write_histogram_csv,
                         write_per_class_csv, write_report)
from .neural import TrainConfig, init_model
from .rankers import (AlphabeticRanker, FrequencyRanker, MarkovRanker,
                      NeuralRanker, build_eval_samples)
from .service import ModelBundle, complete, serve
from .training import train
from .vocab import Vocabulary, build_vocabulary, encode_records


def resolve_model_path(name):
    if os.path.exists(name):
        return name
    base = os.environ.get("PYCC_MODEL_DIR", "")
    if base:
        candidate = os.path.join(base, name)
        if os.path.exists(candidate):
            return candidate
    return name


def _fail(message, code=1):
    print(f"error: {message}", file=sys.stderr)
    return code


def _split_records(records, split_path):
    split = corpus.read_split(split_path)
    parts = {}
    for part, idx in split.indices().items():
        parts[part] = [records[i] for i in idx]
    return parts, split


def cmd_extract(args):
    records, report = corpus.ingest_corpus(args.corpus_dir, T=args.lookback)
    if not records:
        return _fail("no call sites extracted")
    split = corpus.split_corpus(records, seed=args.seed)
    corpus.write_records(records, args.out)
    corpus.write_split(split, args.splits or args.out + ".splits.json")
    corpus.write_report(report, args.report or args.out + ".report.json")
    if split.meta["single_repo_mode"]:
        print("warning: fewer than 2 repositories, record-level split",
              file=sys.stderr)
    print(json.dumps({
        "records": len(records), "files_total": report.files_total,
        "files_skipped": report.files_skipped,
        "statements_skipped": report.statements_skipped,
        "train": len(split.train), "validation": len(split.validation),
        "test": len(split.test)}, sort_keys=True))
    return 0


def cmd_vocab(args):
    records = corpus.read_records(args.records)
    parts, _ = _split_records(records, args.splits)
    vocab = build_vocabulary(parts["train"], freq_threshold=args.threshold)
    vocab.save(args.out)
    print(json.dumps({"V": vocab.V, "methods": len(vocab.method_ids),
                      "classes": len(vocab.class_members)}, sort_keys=True))
    return 0


def cmd_train(args):
    records = corpus.read_records(args.records)
    parts, _ = _split_records(records, args.splits)
    train_records = parts["train"]
    if args.model == "frequency" or args.model == "frequency-if":
        table = baselines.train_frequency(train_records)
        payload = table.to_json_dict()
        payload["kind"] = args.model
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, sort_keys=True)
            fh.write("\n")
    elif args.model == "markov":
        model = baselines.train_markov(train_records, n=args.markov_order)
        baselines.save_model(model, args.out)
    elif args.model == "neural":
        vocab = Vocabulary.load(args.vocab)
        config = TrainConfig.load(args.config) if args.config else TrainConfig()
        samples, dropped = encode_records(train_records, vocab)
        valid, _ = encode_records(parts["validation"], vocab)
        model = init_model(config, V=vocab.V, vocab_hash=vocab.content_hash())
        log_fh = open(args.log, "w", encoding="utf-8") if args.log else None

        def log(entry):
            line = json.dumps(entry, sort_keys=True)
            print(line)
            if log_fh:
                log_fh.write(line + "\n")
                log_fh.flush()

        try:
            train(model, samples, config, valid_samples=valid,
                  method_ids=vocab.method_ids, log=log)
        finally:
            if log_fh:
                log_fh.close()
        quantize.save_model(model, args.out)
        print(json.dumps({"trained": len(samples), "dropped": dropped,
                          "V": vocab.V}, sort_keys=True))
    else:
        return _fail(f"unknown model {args.model!r}", 2)
    return 0


def cmd_quantize(args):
    out = args.out or args.model + ".q8"
    model = quantize.load_model(resolve_model_path(args.model))
    model.model_id = model.model_id + "-q8"
    quantize.save_model(model, out, quantized=True)
    print(json.dumps(quantize.size_report(model), sort_keys=True))
    return 0


def load_bundle(path, vocab_path):
    vocab = Vocabulary.load(vocab_path)
    path = resolve_model_path(path)
    if path == "alphabetic":
        return ModelBundle(kind="alphabetic", vocab=vocab,
                           model_id="alphabetic")
    with open(path, "rb") as fh:
        head = fh.read(8)
    if head == MAGIC:
        model = quantize.load_model(path)
        meta, _ = load_container(path)
        return ModelBundle(kind="neural", vocab=vocab,
                           model_id=model.model_id,
                           quantized=bool(meta.get("quantized")),
                           neural=model)
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    kind = payload["kind"]
    if kind in ("frequency", "frequency-if"):
        table = baselines.FrequencyTable.from_json_dict(payload)
        return ModelBundle(kind=kind, vocab=vocab, model_id=kind, table=table)
    if kind == "markov":
        return ModelBundle(kind="markov", vocab=vocab, model_id="markov",
                           markov=baselines.MarkovModel.from_json_dict(payload))
    raise ValueError(f"unknown model kind {kind!r}")


def ranker_for_bundle(bundle):
    if bundle.kind == "alphabetic":
        return AlphabeticRanker(bundle.vocab)
    if bundle.kind == "frequency":
        return FrequencyRanker(bundle.table, use_if=False)
    if bundle.kind == "frequency-if":
        return FrequencyRanker(bundle.table, use_if=True)
    if bundle.kind == "markov":
        return MarkovRanker(bundle.markov)
    return NeuralRanker(bundle.neural, bundle.vocab, name=bundle.model_id)


def cmd_eval(args):
    records = corpus.read_records(args.test)
    parts, _ = _split_records(records, args.splits)
    test_records = parts["test"]
    if args.limit:
        test_records = test_records[:args.limit]
    vocab = Vocabulary.load(args.vocab)
    samples, dropped = build_eval_samples(test_records, vocab)
    if not samples:
        return _fail("no evaluable test samples")
    rankers = []
    model_sizes = {}
    for spec in args.models.split(","):
        spec = spec.strip()
        bundle = load_bundle(spec, args.vocab)
        rankers.append(ranker_for_bundle(bundle))
        path = resolve_model_path(spec)
        if os.path.exists(path):
            model_sizes[rankers[-1].name] = os.path.getsize(path)
    report = evaluate(rankers, samples)
    report["dropped_labels"] = dropped
    report["model_sizes_bytes"] = model_sizes
    os.makedirs(args.out_dir, exist_ok=True)
    write_report(report, os.path.join(args.out_dir, "report.json"))
    write_comparison_csv(report, os.path.join(args.out_dir, "comparison.csv"))
    write_per_class_csv(report, os.path.join(args.out_dir, "per_class.csv"))
    write_histogram_csv(report, os.path.join(args.out_dir, "histogram.csv"))
    summary = {name: {"top5_all": m["all"]["acc5"], "coverage": m["coverage"]}
               for name, m in report["models"].items()}
    print(json.dumps(summary, sort_keys=True))
    return 0


def cmd_complete(args):
    bundle = load_bundle(args.model, args.vocab)
    with open(args.file, "rb") as fh:
        source = fh.read().decode("utf-8")
    cursor = args.cursor if args.cursor >= 0 else len(source.encode("utf-8"))
    try:
        response = complete(bundle, source, cursor, k=args.k)
    except Exception as exc:
        return _fail(str(exc))
    print(json.dumps(response, sort_keys=True))
    return 0


def cmd_serve(args):
    bundle = load_bundle(args.model, args.vocab)
    return serve(bundle, args.port)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="pycc",
        description="method-completion pipeline: ingest, train, evaluate, serve")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="walk a corpus and extract call sites")
    p.add_argument("corpus_dir")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--lookback", type=int, default=corpus.DEFAULT_LOOKBACK)
    p.add_argument("--splits")
    p.add_argument("--report")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("vocab", help="build the token vocabulary")
    p.add_argument("records")
    p.add_argument("--splits", required=True)
    p.add_argument("--threshold", type=int, default=500)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_vocab)

    p = sub.add_parser("train", help="train a ranking model")
    p.add_argument("records")
    p.add_argument("--model", required=True,
                   choices=["frequency", "frequency-if", "markov", "neural"])
    p.add_argument("--splits", required=True)
    p.add_argument("--vocab")
    p.add_argument("--config")
    p.add_argument("--out", required=True)
    p.add_argument("--markov-order", type=int,
                   default=baselines.DEFAULT_MARKOV_ORDER)
    p.add_argument("--log")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("quantize", help="8-bit quantize a model container")
    p.add_argument("model")
    p.add_argument("--out")
    p.set_defaults(func=cmd_quantize)

    p = sub.add_parser("eval", help="score models on the test split")
    p.add_argument("--models", required=True,
                   help="comma-separated model paths (or 'alphabetic')")
    p.add_argument("--test", required=True, help="records JSONL")
    p.add_argument("--splits", required=True)
    p.add_argument("--vocab", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--limit", type=int, default=0)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("complete", help="one completion for a file position")
    p.add_argument("--model", required=True)
    p.add_argument("--vocab", required=True)
    p.add_argument("--file", required=True)
    p.add_argument("--cursor", type=int, default=-1,
                   help="byte offset; defaults to end of file")
    p.add_argument("--k", type=int, default=5)
    p.set_defaults(func=cmd_complete)

    p = sub.add_parser("serve", help="run the local completion endpoint")
    p.add_argument("--model", required=True)
    p.add_argument("--vocab", required=True)
    p.add_argument("--port", type=int, default=8763)
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        return _fail(f"missing file: {exc.filename}")
    except (ValueError, KeyError) as exc:
        return _fail(str(exc))


if __name__ == "__main__":
    sys.exit(main())
