import logging
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

from licscan import pipeline
from licscan.attitude import AttitudeLexicon
from licscan.registry import default_db
from licscan.term_id import SequenceModel

settings.register_profile(
    "licscan", deadline=None, suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large],
)
settings.load_profile("licscan")
logging.getLogger("licscan").setLevel(logging.WARNING)


@pytest.fixture(scope="session")
def db():
    return default_db()


@pytest.fixture(scope="session")
def model():
    return SequenceModel.load(pipeline.bundled_model_path())


@pytest.fixture(scope="session")
def lexicon():
    return AttitudeLexicon.default()


# ------------------------------------------------------------ split models

SPLIT_SEED = 0


@pytest.fixture(scope="session")
def split_models():
    """Supervised and self-trained models on a fixed 80/20 split of the shipped corpus, with timings."""
    import random
    import time

    from licscan.term_id import TrainConfig, TrainingCorpus, read_tsv, read_unlabeled, train

    corpus = Path(pipeline.bundled_model_path()).parent / "corpus"
    labeled = read_tsv(corpus / "labeled.tsv")
    unlabeled = read_unlabeled(corpus / "unlabeled.txt")
    order = list(range(len(labeled)))
    random.Random(SPLIT_SEED).shuffle(order)
    cut = int(0.8 * len(order))
    train_set = [labeled[i] for i in order[:cut]]
    test_set = [labeled[i] for i in order[cut:]]
    t0 = time.perf_counter()
    supervised = train(TrainingCorpus(train_set), TrainConfig(seed=SPLIT_SEED))
    t1 = time.perf_counter()
    self_trained = train(TrainingCorpus(train_set, unlabeled), TrainConfig(semi_supervised=True, seed=SPLIT_SEED))
    t2 = time.perf_counter()
    return {
        "train": train_set, "test": test_set, "supervised": supervised, "self_trained": self_trained,
        "supervised_seconds": t1 - t0, "self_trained_seconds": t2 - t1,
    }


# ------------------------------------------------------- acceptance summary

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
