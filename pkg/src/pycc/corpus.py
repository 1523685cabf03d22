"""Corpus ingestion: walk .py trees, extract call-site records, split.

Repositories are the first-level directories of the corpus root.  Files
are processed in sorted path order so a fixed corpus + seed ingests
byte-identically on every run.
"""

import json
import os
from dataclasses import dataclass, field

import numpy as np

from .analysis import CallSiteRecord, extract_call_sites, infer_types, serialize_ast
from .lexer import LexicalError
from .parser import parse_source

DEFAULT_LOOKBACK = 1000


@dataclass
class ParseReport:
    files_total: int = 0
    files_skipped: int = 0
    statements_skipped: int = 0
    skipped_files: list = field(default_factory=list)

    def to_json_dict(self):
        return {
            "files_total": self.files_total,
            "files_skipped": self.files_skipped,
            "statements_skipped": self.statements_skipped,
            "skipped_files": self.skipped_files,
        }


def ingest_file(source: str, repo: str, file: str, T: int = DEFAULT_LOOKBACK):
    """Records + per-file skipped-statement count for one source text."""
    module, stats = parse_source(source, file)
    bindings = infer_types(module)
    serialized = serialize_ast(module, bindings)
    records = extract_call_sites(module, bindings, serialized, T,
                                 repo=repo, file=file)
    return records, stats.statements_skipped


def iter_corpus_files(corpus_dir: str):
    """Yield (repo, relpath, abspath) sorted by relpath."""
    entries = []
    for dirpath, dirnames, filenames in os.walk(corpus_dir, followlinks=True):
        dirnames.sort()
        for fn in sorted(filenames):
            if not fn.endswith(".py"):
                continue
            abspath = os.path.join(dirpath, fn)
            rel = os.path.relpath(abspath, corpus_dir)
            parts = rel.split(os.sep)
            repo = parts[0] if len(parts) > 1 else "<root>"
            entries.append((repo, rel, abspath))
    entries.sort(key=lambda e: e[1])
    return entries


def ingest_corpus(corpus_dir: str, T: int = DEFAULT_LOOKBACK):
    """Walk a corpus directory; returns (records, ParseReport)."""
    report = ParseReport()
    records: list[CallSiteRecord] = []
    for repo, rel, abspath in iter_corpus_files(corpus_dir):
        report.files_total += 1
        try:
            with open(abspath, "rb") as fh:
                source = fh.read().decode("utf-8")
        except (OSError, UnicodeDecodeError) as exc:
            report.files_skipped += 1
            report.skipped_files.append({"file": rel, "error": str(exc)})
            continue
        try:
            file_records, skipped = ingest_file(source, repo, rel, T)
        except (LexicalError, RecursionError) as exc:
            report.files_skipped += 1
            report.skipped_files.append({"file": rel, "error": str(exc)})
            continue
        report.statements_skipped += skipped
        records.extend(file_records)
    return records, report


@dataclass
class SplitResult:
    train: list
    validation: list
    test: list
    meta: dict

    def indices(self):
        return {"train": self.train, "validation": self.validation,
                "test": self.test}


def split_corpus(records: list, seed: int) -> SplitResult:
    """70-30 dev/test at repository level, then 80-20 train/validation
    over development records.  Index lists refer into ``records``.

    With fewer than 2 repositories the split degrades to record level,
    flagged with ``single_repo_mode`` in the metadata.
    """
    rng = np.random.default_rng(seed)
    repos = sorted({r.repo for r in records})
    meta = {"seed": seed, "single_repo_mode": False, "n_repos": len(repos)}

    if len(repos) >= 2:
        order = list(repos)
        rng.shuffle(order)
        n_dev = int(round(0.7 * len(order)))
        n_dev = min(max(n_dev, 1), len(order) - 1)
        dev_repos = set(order[:n_dev])
        dev_idx = [i for i, r in enumerate(records) if r.repo in dev_repos]
        test_idx = [i for i, r in enumerate(records) if r.repo not in dev_repos]
        meta["dev_repos"] = sorted(dev_repos)
        meta["test_repos"] = sorted(set(repos) - dev_repos)
    else:
        meta["single_repo_mode"] = True
        all_idx = np.arange(len(records))
        rng.shuffle(all_idx)
        n_dev = int(round(0.7 * len(records)))
        dev_idx = sorted(int(i) for i in all_idx[:n_dev])
        test_idx = sorted(int(i) for i in all_idx[n_dev:])

    dev_order = np.array(dev_idx)
    rng.shuffle(dev_order)
    n_train = int(round(0.8 * len(dev_order)))
    train_idx = sorted(int(i) for i in dev_order[:n_train])
    valid_idx = sorted(int(i) for i in dev_order[n_train:])
    return SplitResult(train_idx, valid_idx, sorted(test_idx), meta)


# --- persistence --------------------------------------------------------

def write_records(records, path):
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec.to_json_dict(), sort_keys=True))
            fh.write("\n")


def read_records(path):
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                records.append(CallSiteRecord.from_json_dict(json.loads(line)))
    return records


def write_split(split: SplitResult, path):
    payload = {"meta": split.meta, **split.indices()}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True)
        fh.write("\n")


def read_split(path) -> SplitResult:
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    return SplitResult(payload["train"], payload["validation"],
                       payload["test"], payload["meta"])


def write_report(report: ParseReport, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report.to_json_dict(), fh, sort_keys=True, indent=2)
        fh.write("\n")
