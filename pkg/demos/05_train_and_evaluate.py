"""Train the term tagger on part of the shipped corpus and score the rest.

The corpus is split 80/20 with a fixed seed. A supervised model is trained
first, then a second one that also learns from confidently tagged unlabeled
sentences. Both are scored with entity-level precision, recall and F1.
Expect about a minute of training on a laptop.

Run:  python3 demos/05_train_and_evaluate.py [seed]
"""

import random
import sys
import time
from pathlib import Path

from licscan import pipeline
from licscan.term_id import TrainConfig, TrainingCorpus, evaluate, read_tsv, read_unlabeled, train


def main(seed: int) -> None:
    corpus = Path(pipeline.bundled_model_path()).parent / "corpus"
    labeled = read_tsv(corpus / "labeled.tsv")
    unlabeled = read_unlabeled(corpus / "unlabeled.txt")
    order = list(range(len(labeled)))
    random.Random(seed).shuffle(order)
    cut = int(0.8 * len(order))
    train_set, test_set = [labeled[i] for i in order[:cut]], [labeled[i] for i in order[cut:]]
    print(f"{len(train_set)} training sentences, {len(test_set)} test sentences, {len(unlabeled)} unlabeled")

    for name, data, config in (
        ("supervised", TrainingCorpus(train_set), TrainConfig(seed=seed)),
        ("self-trained", TrainingCorpus(train_set, unlabeled), TrainConfig(semi_supervised=True, seed=seed)),
    ):
        start = time.perf_counter()
        model = train(data, config)
        m = evaluate(model, test_set)
        print(f"{name:13} P {m.precision:.3f}  R {m.recall:.3f}  F1 {m.f1:.3f}"
              f"  ({time.perf_counter() - start:.0f}s, {len(model.weights)} features)")


if __name__ == "__main__":
    main(int(sys.argv[1]) if len(sys.argv) > 1 else 0)
