"""Top-k accuracy / MRR scoring, per-class comparison, and the
relative-improvement histogram.

Every model is run over every test sample.  Samples a model produces no
ranking for are excluded from its covered metrics and scored rank-inf in
the all-samples metrics, so both views of the coverage gap are reported.
"""

import csv
import json
import math

INF = math.inf
HISTOGRAM_BIN_WIDTH = 10.0


def score_ranks(ranks, k):
    """Acc(k) and MRR over 1-based ranks; rank inf contributes 0 to MRR."""
    ranks = list(ranks)
    Q = len(ranks)
    if Q == 0:
        raise ValueError("empty test set")
    acc = sum(1 for r in ranks if r <= k) / Q
    mrr = sum(0.0 if math.isinf(r) else 1.0 / r for r in ranks) / Q
    return {"acc": acc, "mrr": mrr}


def _metrics(ranks):
    Q = len(ranks)
    return {
        "acc1": score_ranks(ranks, 1)["acc"],
        "acc5": score_ranks(ranks, 5)["acc"],
        "mrr": score_ranks(ranks, 5)["mrr"],
        "n": Q,
    }


def evaluate(rankers, samples, delta_pair=None):
    """Run every ranker over every sample; returns the report dict.

    rankers: list of objects with .name and .label_ranks(samples) ->
    (ranks, covered) where ranks are 1-based floats (inf = miss) and
    covered flags whether the model produced any ranking.
    """
    if not samples:
        raise ValueError("empty test set")
    Q = len(samples)
    report = {"Q": Q, "models": {}, "per_class": {}, "pairwise": [],
              "delta_pair": None, "histogram": []}
    all_ranks = {}
    covered_flags = {}
    for ranker in rankers:
        ranks, covered = ranker.label_ranks(samples)
        all_ranks[ranker.name] = ranks
        covered_flags[ranker.name] = covered
        covered_ranks = [r for r, c in zip(ranks, covered) if c]
        entry = {
            "coverage": sum(covered) / Q,
            "all": _metrics([r if c else INF for r, c in zip(ranks, covered)]),
        }
        entry["covered"] = _metrics(covered_ranks) if covered_ranks else None
        report["models"][ranker.name] = entry

        per_class = {}
        for sample, rank, cov in zip(samples, ranks, covered):
            if not cov:
                continue
            cls = per_class.setdefault(sample.class_name,
                                       {"hits5": 0, "n_recommend": 0})
            cls["n_recommend"] += 1
            if rank <= 5:
                cls["hits5"] += 1
        report["per_class"][ranker.name] = {
            cls: {"acc5": v["hits5"] / v["n_recommend"],
                  "n_recommend": v["n_recommend"]}
            for cls, v in sorted(per_class.items())
        }

    names = [r.name for r in rankers]
    for a in names:
        for b in names:
            if a == b:
                continue
            row = {"a": a, "b": b}
            for view in ("all", "covered"):
                acc_a = (report["models"][a][view] or {}).get("acc5")
                acc_b = (report["models"][b][view] or {}).get("acc5")
                if acc_a is None or not acc_b:      # missing or zero baseline
                    row[f"delta_acc5_{view}"] = None
                else:
                    row[f"delta_acc5_{view}"] = 100.0 * (acc_a - acc_b) / acc_b
            report["pairwise"].append(row)

    if delta_pair is None and len(names) >= 2:
        delta_pair = _default_pair(names)
    if delta_pair is not None:
        report["delta_pair"] = {"a": delta_pair[0], "b": delta_pair[1]}
        report["per_class_delta"] = per_class_delta(
            report["per_class"], samples, covered_flags, delta_pair)
        report["histogram"] = histogram(report["per_class_delta"])
    return report


def _default_pair(names):
    for a in ("neural", "quantized"):
        if a in names:
            for b in ("markov", "frequency-if", "frequency", "alphabetic"):
                if b in names and b != a:
                    return (a, b)
    return (names[0], names[1])


def per_class_delta(per_class, samples, covered_flags, pair):
    """Relative Acc(5) change per class for (a, b); classes the baseline
    never covers, or covers with zero accuracy, get delta 'n/a'."""
    a, b = pair
    rows = []
    classes = sorted({s.class_name for s in samples})
    for cls in classes:
        ea = per_class.get(a, {}).get(cls)
        eb = per_class.get(b, {}).get(cls)
        row = {"class_name": cls,
               "acc5_a": ea["acc5"] if ea else None,
               "acc5_b": eb["acc5"] if eb else None,
               "n_recommend": ea["n_recommend"] if ea else 0}
        if ea is None or eb is None or eb["acc5"] == 0.0:
            row["delta_pct"] = "n/a"
        else:
            row["delta_pct"] = 100.0 * (ea["acc5"] - eb["acc5"]) / eb["acc5"]
        rows.append(row)
    return rows


def histogram(delta_rows, width=HISTOGRAM_BIN_WIDTH):
    """Class counts per delta bin; 'n/a' classes land in the overflow bin."""
    finite = [r["delta_pct"] for r in delta_rows
              if isinstance(r["delta_pct"], float)]
    overflow = sum(1 for r in delta_rows if r["delta_pct"] == "n/a")
    rows = []
    if finite:
        lo = math.floor(min(finite) / width) * width
        hi = math.ceil(max(finite) / width) * width
        hi = hi if hi > lo else lo + width
        edges = [lo + i * width for i in range(int((hi - lo) / width) + 1)]
        for left, right in zip(edges[:-1], edges[1:]):
            count = sum(1 for d in finite
                        if left <= d < right or (d == right == edges[-1]))
            rows.append({"bin_low": left, "bin_high": right,
                         "class_count": count})
    rows.append({"bin_low": "overflow", "bin_high": "overflow",
                 "class_count": overflow})
    return rows


# --- report output --------------------------------------------------------

def write_report(report, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, sort_keys=True, indent=2, allow_nan=False,
                  default=_json_default)
        fh.write("\n")


def _json_default(value):
    if value == INF:
        return "inf"
    raise TypeError(f"not serializable: {value!r}")


def write_comparison_csv(report, path):
    """Overall metrics table (one row per model), Table-4 layout."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["model", "top1_all", "top5_all", "mrr_all",
                         "top1_covered", "top5_covered", "mrr_covered",
                         "coverage"])
        for name in sorted(report["models"]):
            m = report["models"][name]
            cov = m["covered"] or {}
            writer.writerow([
                name, m["all"]["acc1"], m["all"]["acc5"], m["all"]["mrr"],
                cov.get("acc1", ""), cov.get("acc5", ""), cov.get("mrr", ""),
                m["coverage"]])


def write_per_class_csv(report, path):
    """Per-class comparison for the delta pair, Table-5 layout."""
    rows = report.get("per_class_delta", [])
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        pair = report.get("delta_pair") or {"a": "", "b": ""}
        writer.writerow(["class_name", f"acc5_{pair['b']}", f"acc5_{pair['a']}",
                         "delta_pct", "n_recommend"])
        for row in sorted(rows, key=lambda r: -r["n_recommend"]):
            writer.writerow([row["class_name"],
                             "" if row["acc5_b"] is None else row["acc5_b"],
                             "" if row["acc5_a"] is None else row["acc5_a"],
                             row["delta_pct"], row["n_recommend"]])


def write_histogram_csv(report, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["bin_low", "bin_high", "class_count"])
        for row in report.get("histogram", []):
            writer.writerow([row["bin_low"], row["bin_high"],
                             row["class_count"]])
