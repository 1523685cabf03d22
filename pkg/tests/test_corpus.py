import json
import os

from pycc.analysis import CallSiteRecord
from pycc.corpus import (
    ingest_corpus, read_records, read_split, split_corpus, write_records,
    write_split,
)


def make_records(n_repos, per_repo):
    records = []
    for r in range(n_repos):
        for i in range(per_repo):
            records.append(CallSiteRecord(
                repo=f"repo{r}", file=f"repo{r}/f{i}.py", class_name="os",
                label=f"m{i}", context_tokens=["Import", "os", "."],
                in_if=False, span=(0, 2)))
    return records


class TestSplit:
    def test_repo_level_70_30(self):
        records = make_records(10, 5)
        split = split_corpus(records, seed=1)
        assert len(split.meta["dev_repos"]) == 7
        assert len(split.meta["test_repos"]) == 3
        dev = set(split.meta["dev_repos"])
        for i in split.test:
            assert records[i].repo not in dev
        for i in split.train + split.validation:
            assert records[i].repo in dev

    def test_dev_80_20(self):
        records = make_records(10, 10)
        split = split_corpus(records, seed=3)
        n_dev = len(split.train) + len(split.validation)
        assert len(split.train) == round(0.8 * n_dev)

    def test_partitions_disjoint_and_complete(self):
        records = make_records(7, 4)
        split = split_corpus(records, seed=9)
        all_idx = sorted(split.train + split.validation + split.test)
        assert all_idx == list(range(len(records)))

    def test_single_repo_mode(self):
        records = make_records(1, 20)
        split = split_corpus(records, seed=2)
        assert split.meta["single_repo_mode"] is True
        assert len(split.test) == 6

    def test_deterministic(self):
        records = make_records(9, 6)
        a = split_corpus(records, seed=5)
        b = split_corpus(records, seed=5)
        assert a.indices() == b.indices()
        c = split_corpus(records, seed=6)
        assert a.indices() != c.indices()


class TestIngest:
    def write_corpus(self, root, files):
        for rel, text in files.items():
            path = os.path.join(root, rel)
            os.makedirs(os.path.dirname(path), exist_ok=True)
            with open(path, "w") as fh:
                fh.write(text)

    def test_walk_and_extract(self, tmp_path):
        self.write_corpus(str(tmp_path), {
            "alpha/a.py": "import os\nos.getcwd()\n",
            "alpha/b.py": "import sys\nsys.exit()\n",
            "beta/c.py": "class X:\n    pass\n",
        })
        records, report = ingest_corpus(str(tmp_path))
        assert report.files_total == 3
        assert report.files_skipped == 0
        assert report.statements_skipped == 1
        assert [(r.repo, r.label) for r in records] == [
            ("alpha", "getcwd"), ("alpha", "exit")]

    def test_monotone_extraction(self, tmp_path):
        base = {"alpha/a.py": "import os\nos.getcwd()\nos.listdir(p)\n"}
        self.write_corpus(str(tmp_path), base)
        before, _ = ingest_corpus(str(tmp_path))
        self.write_corpus(str(tmp_path), {"beta/b.py": "import sys\nsys.exit()\n"})
        after, _ = ingest_corpus(str(tmp_path))
        from_alpha = [r for r in after if r.repo == "alpha"]
        assert [r.to_json_dict() for r in from_alpha] == \
               [r.to_json_dict() for r in before]

    def test_undecodable_file_skipped(self, tmp_path):
        self.write_corpus(str(tmp_path), {"alpha/a.py": "import os\nos.getcwd()\n"})
        with open(tmp_path / "alpha" / "bad.py", "wb") as fh:
            fh.write(b"\xff\xfe\x00bad")
        records, report = ingest_corpus(str(tmp_path))
        assert report.files_skipped == 1
        assert len(records) == 1

    def test_byte_identical_reingest(self, tmp_path):
        self.write_corpus(str(tmp_path), {
            "alpha/a.py": "import os\nif os.path.isfile(p):\n    os.remove(p)\n",
            "beta/b.py": "import numpy as np\nnp.zeros(3)\n",
        })
        out1 = tmp_path / "r1.jsonl"
        out2 = tmp_path / "r2.jsonl"
        for out in (out1, out2):
            records, _ = ingest_corpus(str(tmp_path))
            write_records(records, str(out))
        assert out1.read_bytes() == out2.read_bytes()

    def test_records_round_trip(self, tmp_path):
        self.write_corpus(str(tmp_path), {"alpha/a.py": "import os\nos.getcwd()\n"})
        records, _ = ingest_corpus(str(tmp_path))
        path = str(tmp_path / "records.jsonl")
        write_records(records, path)
        loaded = read_records(path)
        assert [r.to_json_dict() for r in loaded] == \
               [r.to_json_dict() for r in records]

    def test_split_round_trip(self, tmp_path):
        records = make_records(5, 4)
        split = split_corpus(records, seed=11)
        path = str(tmp_path / "split.json")
        write_split(split, path)
        loaded = read_split(path)
        assert loaded.indices() == split.indices()
        assert loaded.meta == split.meta
