"""Desk-scale pipeline driver used to tune the acceptance configuration.

Builds the real corpus from installed site packages, runs the full
pipeline, and reports per-model test accuracy.  Not part of the package.
"""

import argparse
import importlib
import json
import os
import sys
import time

import numpy as np

from pycc import baselines, corpus
from pycc.evaluation import evaluate
from pycc.neural import TrainConfig, init_model
from pycc.rankers import (AlphabeticRanker, FrequencyRanker, MarkovRanker,
                          NeuralRanker, build_eval_samples)
from pycc.training import train
from pycc.vocab import build_vocabulary, encode_records

PACKAGES = ["psutil", "attr", "filelock", "click", "yaml", "loguru",
            "requests", "httpx", "jinja2", "tqdm", "jsonschema", "seaborn",
            "fsspec", "h5py", "joblib", "cryptography", "PIL", "rich",
            "pydantic", "polars", "matplotlib", "sqlalchemy", "networkx",
            "numpy"]


def build_corpus_dir(root):
    os.makedirs(root, exist_ok=True)
    linked = 0
    for name in PACKAGES:
        dst = os.path.join(root, name)
        if os.path.islink(dst):
            linked += 1
            continue
        try:
            mod = importlib.import_module(name)
            path = getattr(mod, "__file__", "") or ""
            if path.endswith("__init__.py"):
                os.symlink(os.path.dirname(path), dst)
                linked += 1
        except ImportError:
            pass
    return linked


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--workdir", default="/tmp/pycc_desk")
    ap.add_argument("--lookback", type=int, default=200)
    ap.add_argument("--threshold", type=int, default=10)
    ap.add_argument("--epochs", type=int, default=15)
    ap.add_argument("--hidden", type=int, default=64)
    ap.add_argument("--embed", type=int, default=64)
    ap.add_argument("--bptt", type=int, default=50)
    ap.add_argument("--batch", type=int, default=128)
    ap.add_argument("--lr", type=float, default=0.003)
    ap.add_argument("--decay", type=float, default=0.97)
    ap.add_argument("--dropout", type=float, default=0.9)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--val-limit", type=int, default=2000)
    ap.add_argument("--reingest", action="store_true")
    args = ap.parse_args()

    os.makedirs(args.workdir, exist_ok=True)
    corpus_dir = os.path.join(args.workdir, "corpus")
    n_repos = build_corpus_dir(corpus_dir)
    print(f"repos: {n_repos}", flush=True)

    rec_path = os.path.join(args.workdir, f"records_T{args.lookback}.jsonl")
    t0 = time.time()
    if args.reingest or not os.path.exists(rec_path):
        records, report = corpus.ingest_corpus(corpus_dir, T=args.lookback)
        corpus.write_records(records, rec_path)
        print(f"ingest: {len(records)} records in {time.time()-t0:.0f}s "
              f"(files={report.files_total})", flush=True)
    else:
        records = corpus.read_records(rec_path)
        print(f"loaded {len(records)} records in {time.time()-t0:.0f}s", flush=True)

    split = corpus.split_corpus(records, seed=args.seed)
    train_records = [records[i] for i in split.train]
    valid_records = [records[i] for i in split.validation]
    test_records = [records[i] for i in split.test]
    print(f"split: train={len(train_records)} valid={len(valid_records)} "
          f"test={len(test_records)}", flush=True)

    vocab = build_vocabulary(train_records, freq_threshold=args.threshold)
    print(f"vocab: V={vocab.V} methods={len(vocab.method_ids)} "
          f"classes={len(vocab.class_members)}", flush=True)

    table = baselines.train_frequency(train_records)
    markov = baselines.train_markov(train_records, n=3)

    samples, dropped = encode_records(train_records, vocab)
    vsamples, _ = encode_records(valid_records[:args.val_limit], vocab)
    print(f"train samples: {len(samples)} (dropped {dropped})", flush=True)

    config = TrainConfig(
        base_lr=args.lr, lr_decay=args.decay, layers=2, hidden=args.hidden,
        embed=args.embed, lookback=args.lookback, bptt=args.bptt,
        batch=args.batch, dropout_keep=args.dropout, l2=1e-5, clip_norm=10.0,
        epochs=args.epochs, seed=args.seed, oov_slots=50,
        bucket_bounds=(100, 150))
    model = init_model(config, V=vocab.V, vocab_hash=vocab.content_hash())

    t0 = time.time()

    def log(entry):
        print(json.dumps({**entry, "elapsed": round(time.time() - t0)},
                         sort_keys=True), flush=True)

    train(model, samples, config, valid_samples=vsamples,
          method_ids=vocab.method_ids, log=log)
    print(f"trained in {time.time()-t0:.0f}s", flush=True)

    eval_samples, edropped = build_eval_samples(test_records, vocab)
    print(f"eval samples: {len(eval_samples)} (dropped {edropped})", flush=True)
    rankers = [
        AlphabeticRanker(vocab),
        FrequencyRanker(table, use_if=False),
        FrequencyRanker(table, use_if=True),
        MarkovRanker(markov),
        NeuralRanker(model, vocab),
    ]
    t0 = time.time()
    report = evaluate(rankers, eval_samples, delta_pair=("neural", "markov"))
    print(f"evaluated in {time.time()-t0:.0f}s", flush=True)
    for name in ("alphabetic", "frequency", "frequency-if", "markov", "neural"):
        m = report["models"][name]
        cov = m["covered"] or {}
        print(f"{name:13s} top5_all={m['all']['acc5']:.4f} "
              f"top1_all={m['all']['acc1']:.4f} mrr={m['all']['mrr']:.4f} "
              f"top5_cov={cov.get('acc5', float('nan')):.4f} "
              f"coverage={m['coverage']:.3f}", flush=True)

    # neural vs markov on markov-covered samples
    nr, mk = rankers[-1], rankers[-2]
    m_ranks, m_cov = mk.label_ranks(eval_samples)
    n_ranks, _ = nr.label_ranks(eval_samples)
    covered_idx = [i for i, c in enumerate(m_cov) if c]
    n5 = sum(1 for i in covered_idx if n_ranks[i] <= 5) / len(covered_idx)
    m5 = sum(1 for i in covered_idx if m_ranks[i] <= 5) / len(covered_idx)
    print(f"on markov-covered: neural={n5:.4f} markov={m5:.4f} gap={n5-m5:+.4f}",
          flush=True)

    from pycc.quantize import save_model
    save_model(model, os.path.join(args.workdir, "neural.pyccmodl"))
    vocab.save(os.path.join(args.workdir, "vocab.json"))


if __name__ == "__main__":
    main()
