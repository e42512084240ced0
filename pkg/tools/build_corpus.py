"""Build the bundled term-identification corpus and model.

    python3 tools/build_corpus.py            # corpus files only
    python3 tools/build_corpus.py --model    # corpus files plus data/model.json

Input is ``tools/corpus/labeled.src``: ``SOURCE<TAB>text`` per line where a term
entity is written ``{ID:surface}``. Unlabeled sentences are drawn round-robin
from the bundled SPDX texts, skipping any sentence that is also labeled.
"""

import argparse
import logging
import json
import re
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "src"))

from licscan.preprocess import Sentence, fold_text, split_sentences  # noqa: E402
from licscan.term_id import LabeledSentence, TrainConfig, TrainingCorpus, train, write_tsv  # noqa: E402

SRC = ROOT / "tools" / "corpus" / "labeled.src"
DATA = ROOT / "src" / "licscan" / "data"
OUT = DATA / "corpus"
N_UNLABELED = 300
_ENTITY = re.compile(r"\{(\d{1,2}):([^{}]+)\}")


def parse_line(text: str, lineno: int) -> LabeledSentence:
    plain, spans, last = [], [], 0
    offset = 0
    for m in _ENTITY.finditer(text):
        plain.append(text[last:m.start()])
        offset += m.start() - last
        spans.append((int(m.group(1)), offset, offset + len(m.group(2))))
        plain.append(m.group(2))
        offset += len(m.group(2))
        last = m.end()
    plain.append(text[last:])
    raw = "".join(plain)
    if "{" in raw or "}" in raw:
        raise ValueError(f"line {lineno}: unbalanced entity markup")
    sentence = Sentence.from_text(raw)
    labels = ["O"] * len(sentence)
    for term, lo, hi in spans:
        idx = [i for i, t in enumerate(sentence.tokens) if lo <= t.position < hi]
        if not idx:
            raise ValueError(f"line {lineno}: empty entity at {lo}")
        first, end = sentence.tokens[idx[0]], sentence.tokens[idx[-1]]
        if first.position != lo or end.position + len(end.surface) != hi:
            raise ValueError(f"line {lineno}: entity {raw[lo:hi]!r} does not align with tokens")
        labels[idx[0]] = f"B-{term}"
        for i in idx[1:]:
            labels[i] = f"I-{term}"
    return LabeledSentence(sentence, tuple(labels))


def load_labeled() -> list[LabeledSentence]:
    out = []
    for lineno, line in enumerate(SRC.read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip() or line.startswith("#"):
            continue
        _source, text = line.split("\t", 1)
        out.append(parse_line(text, lineno))
    return out


def unlabeled_sentences(exclude: set[str]) -> list[str]:
    index = json.loads((DATA / "spdx" / "index.json").read_text(encoding="utf-8"))
    per_license = []
    for entry in sorted(index, key=lambda e: e["id"]):
        path = DATA / "spdx" / entry["file"]
        keep = []
        for s in split_sentences(fold_text(path.read_text(encoding="utf-8"))):
            key = " ".join(t.surface.lower() for t in s.tokens)
            if 5 <= len(s) <= 70 and key not in exclude:
                exclude.add(key)
                keep.append(" ".join(s.raw.split()))
        per_license.append(keep)
    out, depth = [], 0
    while len(out) < N_UNLABELED and any(depth < len(p) for p in per_license):
        out.extend(p[depth] for p in per_license if depth < len(p))
        depth += 1
    return out[:N_UNLABELED]


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--model", action="store_true", help="also train data/model.json")
    args = ap.parse_args()
    logging.disable(logging.WARNING)

    labeled = load_labeled()
    OUT.mkdir(parents=True, exist_ok=True)
    write_tsv(labeled, OUT / "labeled.tsv")
    seen = {" ".join(t.surface.lower() for t in ls.sentence.tokens) for ls in labeled}
    unlabeled = unlabeled_sentences(seen)
    (OUT / "unlabeled.txt").write_text("\n".join(unlabeled) + "\n", encoding="utf-8")
    n_ent = sum(lab.startswith("B-") for ls in labeled for lab in ls.labels)
    print(f"{len(labeled)} labeled sentences ({n_ent} entities), {len(unlabeled)} unlabeled")

    if args.model:
        unl = [Sentence.from_text(s, k) for k, s in enumerate(unlabeled)]
        model = train(TrainingCorpus(labeled, unl), TrainConfig(semi_supervised=True))
        model.save(DATA / "model.json")
        print(f"wrote {DATA / 'model.json'}")


if __name__ == "__main__":
    main()
