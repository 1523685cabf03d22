import os

import numpy as np
import pytest

from pycc import baselines, corpus, quantize
from pycc.neural import TrainConfig, init_model
from pycc.service import ModelBundle
from pycc.training import train
from pycc.vocab import build_vocabulary, encode_records

# Deterministic synthetic corpus: per-repo files exercising module,
# literal, and chained receivers with if-condition splits and repeated
# invocation chains (so the Markov model has signal).

_FILE_TEMPLATES = [
    (
        "checks.py",
        "import os\n"
        "import shutil\n"
        "p = 'data.txt'\n"
        "if os.path.isfile(p):\n"
        "    os.remove(p)\n"
        "    os.rename(p, p)\n"
        "    shutil.move(p, p)\n"
        "x = os.getcwd()\n"
        "y = os.listdir(x)\n"
    ),
    (
        "arrays.py",
        "import numpy as np\n"
        "a = np.zeros(4)\n"
        "b = np.ones(4)\n"
        "c = np.dot(a, b)\n"
        "d = np.sum(c)\n"
        "if np.isnan(d):\n"
        "    e = np.nan_to_num(d)\n"
    ),
    (
        "strings.py",
        "s = 'hello'\n"
        "t = s.upper()\n"
        "u = s.strip()\n"
        "v = s.split(u)\n"
        "w = ' '.join(v)\n"
    ),
    (
        "paths.py",
        "import os\n"
        "import sys\n"
        "base = os.path.join('a', 'b')\n"
        "if os.path.exists(base):\n"
        "    sys.exit(1)\n"
        "name = os.path.basename(base)\n"
        "here = os.getcwd()\n"
    ),
    (
        "flow.py",
        "import os\n"
        "def cleanup(p):\n"
        "    if os.path.isfile(p):\n"
        "        os.remove(p)\n"
        "        os.rename(p, p)\n"
        "    return os.listdir(p)\n"
    ),
    (
        "dirs.py",
        "import os\n"
        "d = 'out'\n"
        "os.mkdir(d)\n"
        "info = os.stat(d)\n"
        "tree = os.walk(d)\n"
        "os.rmdir(d)\n"
        "env = os.getenv('HOME')\n"
    ),
]


def write_toy_corpus(root, n_repos=8):
    for r in range(n_repos):
        repo = os.path.join(root, f"repo{r:02d}")
        os.makedirs(repo, exist_ok=True)
        for i, (fname, text) in enumerate(_FILE_TEMPLATES):
            if (r + i) % 5 == 4:
                continue            # vary repo contents a little
            with open(os.path.join(repo, fname), "w") as fh:
                fh.write(text)
    return root


@pytest.fixture(scope="session")
def toy_pipeline(tmp_path_factory):
    """extract -> split -> vocab -> frequency/markov/neural on a toy corpus."""
    root = tmp_path_factory.mktemp("toycorpus")
    write_toy_corpus(str(root))
    records, report = corpus.ingest_corpus(str(root), T=120)
    split = corpus.split_corpus(records, seed=11)
    train_records = [records[i] for i in split.train]
    vocab = build_vocabulary(train_records, freq_threshold=1)
    table = baselines.train_frequency(train_records)
    markov = baselines.train_markov(train_records, n=3)

    config = TrainConfig(layers=2, hidden=24, embed=24, lookback=120, bptt=40,
                         batch=8, dropout_keep=1.0, l2=1e-6, clip_norm=10.0,
                         epochs=30, seed=5, oov_slots=8, bucket_bounds=(30, 60),
                         base_lr=0.02, lr_decay=1.0)
    samples, _ = encode_records(train_records, vocab)
    model = init_model(config, V=vocab.V, vocab_hash=vocab.content_hash())
    train(model, samples, config)

    return {
        "root": str(root), "records": records, "split": split,
        "train_records": train_records,
        "test_records": [records[i] for i in split.test],
        "vocab": vocab, "frequency": table, "markov": markov,
        "neural": model, "report": report,
    }


@pytest.fixture()
def neural_bundle(toy_pipeline):
    return ModelBundle(kind="neural", vocab=toy_pipeline["vocab"],
                       model_id="neural", neural=toy_pipeline["neural"])


@pytest.fixture()
def markov_bundle(toy_pipeline):
    return ModelBundle(kind="markov", vocab=toy_pipeline["vocab"],
                       model_id="markov", markov=toy_pipeline["markov"])
