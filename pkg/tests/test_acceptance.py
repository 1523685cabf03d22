"""Acceptance suite: one test per criterion, each printing a PASS/FAIL
line.  The desk-scale fixture ingests a real multi-package corpus and
trains every model once; the heavy criteria share it.

Run with:  pytest -s tests/test_acceptance.py
"""

import json
import math
import os
import time

import numpy as np
import pytest

from conftest import write_toy_corpus
from desk_corpus import build_corpus_dir
from test_baselines import brute_force_markov, rec as make_record, seq_records

from pycc import baselines, corpus
from pycc.cli import main as cli_main
from pycc.evaluation import evaluate, score_ranks
from pycc.neural import (TrainConfig, forward_chunk, init_model,
                         loss_and_gradients, softmax)
from pycc.quantize import dequantize_tensor, quantize_tensor, save_model, \
    load_model, size_report
from pycc.rankers import (AlphabeticRanker, FrequencyRanker, MarkovRanker,
                          NeuralRanker, build_eval_samples)
from pycc.service import ModelBundle, complete
from pycc.training import learning_rate, topk_accuracy, train
from pycc.vocab import Vocabulary, build_vocabulary, encode_records


def report(name):
    """Prints the criterion verdict; failures re-raise."""
    class _Reporter:
        def __enter__(self):
            return self

        def __exit__(self, exc_type, exc, tb):
            verdict = "PASS" if exc_type is None else "FAIL"
            print(f"\nACCEPTANCE {name}: {verdict}", flush=True)
            return False
    return _Reporter()


# --- fast criteria ---------------------------------------------------------

class TestGradientOracle:
    def test_gradient_oracle(self):
        with report("gradient-oracle"):
            started = time.monotonic()
            cfg = TrainConfig(layers=2, hidden=3, embed=4, lookback=16,
                              bptt=8, batch=4, dropout_keep=1.0, l2=1e-3,
                              clip_norm=1e9, oov_slots=3,
                              bucket_bounds=(4, 8), seed=11)
            model = init_model(cfg, V=10, seed=11, dtype=np.float64,
                               init_scale=0.4)
            rng = np.random.default_rng(3)
            B, t = 2, 5
            ids = rng.integers(1, 14, size=(B, t))
            mask = np.zeros((B, t), dtype=np.uint8)
            mask[0, 4] = 1
            mask[1, 3] = 1
            labels = np.array([3, 7])
            states = [(rng.normal(size=(B, cfg.hidden)),
                       rng.normal(size=(B, cfg.hidden)))
                      for _ in range(cfg.layers)]

            def loss_fn():
                logits, _, _ = forward_chunk(
                    model, ids, mask,
                    [(h.copy(), c.copy()) for h, c in states], train=False)
                probs = softmax(logits)
                ce = -np.log(probs[np.arange(2), labels - 1]).mean()
                l2 = cfg.l2 * sum(float((model.params[n] ** 2).sum())
                                  for n in model.weight_names())
                return ce + l2

            _, grads, _ = loss_and_gradients(
                model, ids, mask, labels,
                [(h.copy(), c.copy()) for h, c in states], train=False)
            eps = 1e-5
            checked = 0
            for name, param in model.params.items():
                flat = param.reshape(-1)
                gflat = grads[name].reshape(-1)
                for i in range(flat.size):
                    orig = flat[i]
                    flat[i] = orig + eps
                    lp = loss_fn()
                    flat[i] = orig - eps
                    lm = loss_fn()
                    flat[i] = orig
                    fd = (lp - lm) / (2 * eps)
                    a = gflat[i]
                    denom = max(abs(a), abs(fd))
                    if denom < 1e-8:
                        assert abs(a - fd) < 1e-8, (name, i)
                    else:
                        assert abs(a - fd) / denom < 1e-4, (name, i, a, fd)
                    checked += 1
            elapsed = time.monotonic() - started
            assert checked == sum(p.size for p in model.params.values())
            assert elapsed < 10.0, f"gradient check took {elapsed:.1f}s"


class TestMarkovOracle:
    def test_markov_oracle(self):
        with report("markov-oracle"):
            rng = np.random.default_rng(99)
            labels = [f"m{i}" for i in range(10)]
            classes = ["os", "numpy", "os.path", "str"]
            records = []
            for f in range(12):
                for cls in classes:
                    for lbl in rng.choice(labels, size=int(rng.integers(0, 20))):
                        records.append(make_record(str(lbl), cls=cls,
                                                   file=f"f{f}.py"))
            assert len(records) <= 1000
            for n in (2, 3, 4):
                model = baselines.train_markov(records, n=n)
                for cls in classes:
                    for hist_len in range(0, n + 1):
                        history = [str(x) for x in
                                   rng.choice(labels, size=hist_len)]
                        got = baselines.rank_markov(model, cls, history)
                        want = brute_force_markov(records, cls, history, n)
                        assert got == want    # bit-exact, probabilities included


class TestMetricOracle:
    def test_metric_oracle(self):
        with report("metric-oracle"):
            result5 = score_ranks([1, 3, 6, 2], 5)
            assert result5["acc"] == 0.75
            assert result5["mrr"] == (1 + 1 / 3 + 1 / 6 + 1 / 2) / 4 == 0.5
            rng = np.random.default_rng(1234)
            for _ in range(1000):
                n = int(rng.integers(1, 40))
                ranks = [float(r) if r < 30 else math.inf
                         for r in rng.integers(1, 40, size=n)]
                acc1 = score_ranks(ranks, 1)["acc"]
                acc5 = score_ranks(ranks, 5)["acc"]
                mrr = score_ranks(ranks, 5)["mrr"]
                assert acc1 <= mrr <= 1.0
                assert acc1 <= acc5 <= 1.0


class TestLearningRateSchedule:
    def test_learning_rate_schedule(self):
        with report("learning-rate-schedule"):
            for n_worker in (1, 8):
                cfg = TrainConfig(n_worker=n_worker)
                for i in range(7):
                    expected = 0.002 * 0.97 ** i
                    if n_worker > 1:
                        expected *= 1.0 + (n_worker / 4.0 - 1.0) * min(i, 4) / 4.0
                    assert abs(learning_rate(cfg, i) - expected) < 1e-12


class TestQuantizationBounds:
    def test_quantization_reconstruction_and_ratio(self):
        with report("quantization-bounds"):
            rng = np.random.default_rng(5)
            for trial in range(100):
                shape = tuple(rng.integers(1, 30, size=rng.integers(1, 4)))
                scale = 10.0 ** rng.integers(-3, 4)
                W = rng.normal(scale=scale, size=shape).astype(np.float32)
                qt = quantize_tensor(W)
                err = np.abs(W.astype(np.float64) -
                             dequantize_tensor(qt, np.float64))
                bound = qt.beta / 2 + np.finfo(np.float32).eps * scale
                assert err.max() <= bound + 1e-12, trial
            # Size ratio at the reference model shape.
            cfg = TrainConfig(layers=2, hidden=100, embed=150, lookback=1000,
                              bptt=100, batch=256)
            model = init_model(cfg, V=3540, seed=1)
            ratio = size_report(model)["ratio"]
            assert 0.25 <= ratio <= 0.25 * 1.01, ratio


# --- latency ---------------------------------------------------------------

def synthetic_long_source(lines=150):
    parts = ["import os", "import numpy as np"]
    for i in range(lines):
        parts.append(f"v{i} = np.dot(a{i}, b{i})")
    parts.append("os.")
    return "\n".join(parts)


class TestLatency:
    def test_latency_budget(self):
        with report("latency"):
            cfg = TrainConfig(layers=2, hidden=100, embed=150, lookback=1000,
                              bptt=100, batch=256, oov_slots=50,
                              bucket_bounds=(100, 400))
            V = 3500
            tokens = [f"tok{i}" for i in range(1, V)] + ["."]
            members = tokens[:400]
            vocab = Vocabulary.from_json_dict({
                "version": 1, "V": V, "freq_threshold": 1, "tokens": tokens,
                "method_ids": list(range(1, 401)),
                "class_members": {"os": members}})
            model = init_model(cfg, V=V, seed=2)
            bundle = ModelBundle(kind="neural", vocab=vocab,
                                 model_id="latency-fixture", neural=model)
            source = synthetic_long_source()
            cursor = len(source.encode("utf-8"))
            from pycc.service import analyze_cursor
            context, _, _, _, _ = analyze_cursor(source.encode("utf-8"),
                                                 cursor, cfg.lookback)
            assert len(context) >= 1000, len(context)
            latencies = []
            for _ in range(100):
                response = complete(bundle, source, cursor, k=5)
                latencies.append(response["latency_ms"])
            median = sorted(latencies)[50]
            print(f"\n  latency median={median:.1f}ms "
                  f"p90={sorted(latencies)[90]:.1f}ms", flush=True)
            assert median <= 100.0, median


# --- overfit sanity --------------------------------------------------------

class TestOverfitSanity:
    def test_overfit_200_samples(self, tmp_path):
        with report("overfit-sanity"):
            started = time.monotonic()
            root = tmp_path / "toycorpus"
            root.mkdir()
            write_toy_corpus(str(root), n_repos=10)
            records, _ = corpus.ingest_corpus(str(root), T=120)
            vocab = build_vocabulary(records, freq_threshold=1)
            samples, _ = encode_records(records, vocab)
            samples = samples[:200]
            assert len(samples) == 200
            cfg = TrainConfig(layers=2, hidden=32, embed=32, lookback=120,
                              bptt=60, batch=4, dropout_keep=1.0, l2=1e-6,
                              clip_norm=10.0, epochs=30, seed=3,
                              oov_slots=16, bucket_bounds=(30, 60),
                              base_lr=0.03, lr_decay=1.0)
            model = init_model(cfg, V=vocab.V, seed=3)
            train(model, samples, cfg)
            top1, _ = topk_accuracy(model, samples, vocab.method_ids)
            elapsed = time.monotonic() - started
            print(f"\n  overfit top1={top1:.3f} in {elapsed:.0f}s", flush=True)
            assert top1 >= 0.95, top1
            assert elapsed < 300.0, elapsed


# --- pipeline determinism ---------------------------------------------------

class TestPipelineDeterminism:
    def test_byte_identical_reports(self, tmp_path):
        with report("pipeline-determinism"):
            corpus_dir = tmp_path / "corpus"
            corpus_dir.mkdir()
            write_toy_corpus(str(corpus_dir))
            outputs = []
            for run in ("a", "b"):
                out = tmp_path / run
                out.mkdir()
                records = str(out / "records.jsonl")
                splits = records + ".splits.json"
                vocab_path = str(out / "vocab.json")
                markov_path = str(out / "markov.json")
                eval_dir = str(out / "eval")
                for argv in (
                    ["extract", str(corpus_dir), "--out", records,
                     "--seed", "5", "--lookback", "120"],
                    ["vocab", records, "--splits", splits, "--threshold", "1",
                     "--out", vocab_path],
                    ["train", records, "--model", "markov",
                     "--splits", splits, "--out", markov_path],
                    ["eval", "--models", markov_path, "--test", records,
                     "--splits", splits, "--vocab", vocab_path,
                     "--out-dir", eval_dir],
                ):
                    assert cli_main(argv) == 0, argv
                outputs.append(out)
            for rel in ("records.jsonl", "vocab.json", "markov.json",
                        "eval/report.json", "eval/comparison.csv",
                        "eval/per_class.csv", "eval/histogram.csv"):
                a = (outputs[0] / rel).read_bytes()
                b = (outputs[1] / rel).read_bytes()
                assert a == b, f"{rel} differs between runs"


# --- desk-scale fixture and the heavy criteria ------------------------------

DESK_CONFIG = TrainConfig(
    base_lr=0.005, lr_decay=0.97, layers=2, hidden=64, embed=64,
    lookback=200, bptt=50, batch=256, dropout_keep=1.0, l2=1e-5,
    clip_norm=10.0, epochs=26, seed=7, oov_slots=50, bucket_bounds=(100, 150))


@pytest.fixture(scope="module")
def desk_pipeline(tmp_path_factory):
    """Real-corpus pipeline: ingest installed packages, train all models."""
    root = tmp_path_factory.mktemp("desk")
    corpus_dir = str(root / "corpus")
    n_repos = build_corpus_dir(corpus_dir)
    assert n_repos >= 20, f"only {n_repos} package repositories available"
    records, _ = corpus.ingest_corpus(corpus_dir, T=DESK_CONFIG.lookback)
    assert len(records) >= 20000, f"only {len(records)} call sites extracted"
    split = corpus.split_corpus(records, seed=DESK_CONFIG.seed)
    train_records = [records[i] for i in split.train]
    test_records = [records[i] for i in split.test]

    vocab = build_vocabulary(train_records, freq_threshold=10)
    table = baselines.train_frequency(train_records)
    markov = baselines.train_markov(train_records, n=3)

    samples, _ = encode_records(train_records, vocab)
    model = init_model(DESK_CONFIG, V=vocab.V, vocab_hash=vocab.content_hash())
    t0 = time.monotonic()
    train(model, samples, DESK_CONFIG)
    train_seconds = time.monotonic() - t0

    eval_samples, _ = build_eval_samples(test_records, vocab)
    return {
        "n_repos": n_repos, "records": records, "vocab": vocab,
        "table": table, "markov": markov, "model": model,
        "eval_samples": eval_samples, "train_seconds": train_seconds,
        "root": root,
    }


class TestModelOrdering:
    def test_desk_scale_ordering(self, desk_pipeline):
        with report("model-ordering"):
            d = desk_pipeline
            rankers = [
                AlphabeticRanker(d["vocab"]),
                FrequencyRanker(d["table"], use_if=False),
                FrequencyRanker(d["table"], use_if=True),
                MarkovRanker(d["markov"]),
                NeuralRanker(d["model"], d["vocab"]),
            ]
            result = evaluate(rankers, d["eval_samples"],
                              delta_pair=("neural", "markov"))
            acc = {name: result["models"][name]["all"]["acc5"]
                   for name in ("alphabetic", "frequency", "frequency-if",
                                "markov", "neural")}
            print(f"\n  top-5 (all samples): {json.dumps(acc, sort_keys=True)}",
                  flush=True)
            assert acc["neural"] >= acc["markov"] >= acc["frequency-if"] \
                >= acc["frequency"] >= acc["alphabetic"], acc

            # Positive neural-markov gap on the markov-covered subset.
            m_ranks, m_cov = rankers[3].label_ranks(d["eval_samples"])
            n_ranks, _ = rankers[4].label_ranks(d["eval_samples"])
            idx = [i for i, c in enumerate(m_cov) if c]
            n5 = sum(1 for i in idx if n_ranks[i] <= 5) / len(idx)
            m5 = sum(1 for i in idx if m_ranks[i] <= 5) / len(idx)
            print(f"  covered subset: neural={n5:.4f} markov={m5:.4f} "
                  f"gap={n5 - m5:+.4f}", flush=True)
            assert n5 - m5 > 0.0
            assert d["train_seconds"] <= 7200, d["train_seconds"]


class TestQuantizedAccuracy:
    def test_quantized_top5_drop(self, desk_pipeline, tmp_path):
        with report("quantization-accuracy-drop"):
            d = desk_pipeline
            fpath = str(tmp_path / "neural.pyccmodl")
            qpath = str(tmp_path / "neural.q8.pyccmodl")
            save_model(d["model"], fpath)
            save_model(d["model"], qpath, quantized=True)
            qmodel = load_model(qpath)
            base = NeuralRanker(d["model"], d["vocab"], name="neural")
            quant = NeuralRanker(qmodel, d["vocab"], name="neural-q8")
            result = evaluate([base, quant], d["eval_samples"],
                              delta_pair=None)
            acc_f = result["models"]["neural"]["all"]["acc5"]
            acc_q = result["models"]["neural-q8"]["all"]["acc5"]
            drop = (acc_f - acc_q) * 100.0
            print(f"\n  float top5={acc_f:.4f} quantized top5={acc_q:.4f} "
                  f"drop={drop:.2f}pp", flush=True)
            assert drop <= 5.0, drop
