"""License-term entity tagging with a BIO linear-chain CRF.

Emission scores come from sparse indicator features (stem window, shape,
position, attitude cues, stem bigrams); a transition matrix over the 47 BIO
labels scores adjacent pairs. Invalid BIO transitions are excluded
structurally, so every decoded sequence is well formed.
"""

from __future__ import annotations

import json
import logging
import math
import os
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
import scipy.optimize
import scipy.sparse

from licscan.preprocess import Sentence
from licscan.terms import LABEL_INDEX, LABELS, NUM_LABELS, NUM_TERMS, is_valid_sequence, is_valid_transition, label_term

log = logging.getLogger(__name__)

TEMPLATE_VERSION = "window2-shape-pos-lex-bigram-bag3/2"
MODEL_FORMAT = "licscan-crf"


class TermIdError(Exception):
    pass


class PositionOutOfRange(TermIdError, IndexError):
    pass


class EmptyLabeledCorpus(TermIdError, ValueError):
    pass


class NonFiniteLoss(TermIdError, FloatingPointError):
    pass


class LengthMismatch(TermIdError, ValueError):
    pass


class EmptyTestset(TermIdError, ValueError):
    pass


class TsvFormatError(TermIdError, ValueError):
    def __init__(self, path: str, lineno: int, msg: str):
        super().__init__(f"{path}:{lineno}: {msg}")
        self.lineno = lineno


@dataclass(frozen=True)
class TermEntity:
    term: int
    start: int
    end: int
    sentence_index: int = 0

    def __post_init__(self):
        if not 0 <= self.term < NUM_TERMS:
            raise ValueError(f"term id {self.term} out of range")
        if not 0 <= self.start < self.end:
            raise ValueError(f"empty or negative span [{self.start}, {self.end})")


@dataclass(frozen=True)
class LabeledSentence:
    sentence: Sentence
    labels: tuple[str, ...]

    def __post_init__(self):
        if len(self.labels) != len(self.sentence.tokens):
            raise LengthMismatch(f"{len(self.labels)} labels for {len(self.sentence.tokens)} tokens")
        if not is_valid_sequence(list(self.labels)):
            raise ValueError(f"invalid BIO sequence {self.labels}")


@dataclass
class TrainingCorpus:
    labeled: list[LabeledSentence]
    unlabeled: list[Sentence] = field(default_factory=list)


@dataclass
class TrainConfig:
    l2: float = 0.03
    max_iter: int = 250
    semi_supervised: bool = False
    pseudo_threshold: float = 0.9
    seed: int = 0
    batch_size: int = 64


@dataclass(frozen=True)
class Metrics:
    precision: float
    recall: float
    f1: float
    tp: int = 0
    fp: int = 0
    fn: int = 0


# ------------------------------------------------------------------- features

_MUST_CUES = {"must", "shall", "should", "requir", "provid"}
_CANNOT_CUES = {"not", "without", "notwithstand", "refus", "disallow", "declin", "against", "delet", "nor",
                "void", "neither", "prohibit", "remov", "no", "noth"}


def _shape(surface: str) -> str:
    if surface.isdigit():
        return "digit"
    if not surface[:1].isalnum():
        return "punct"
    if surface.isupper() and len(surface) > 1:
        return "upper"
    if surface[:1].isupper():
        return "cap"
    if surface.isalpha():
        return "word"
    return "mixed"


def _bucket(i: int) -> str:
    if i == 0:
        return "0"
    if i <= 3:
        return "1-3"
    if i <= 10:
        return "4-10"
    return "11+"


def featurize(sentence: Sentence, position: int) -> list[str]:
    """Feature strings for one token position."""
    n = len(sentence.tokens)
    if not 0 <= position < n:
        raise PositionOutOfRange(f"position {position} outside sentence of {n} tokens")
    stems = [t.stem for t in sentence.tokens]

    def at(k: int) -> str:
        j = position + k
        if j < 0:
            return "<s>"
        if j >= n:
            return "</s>"
        return stems[j]

    s0 = stems[position]
    feats = [
        "bias",
        f"stem[0]={s0}",
        f"prefix4={s0[:4]}",
        f"shape={_shape(sentence.tokens[position].surface)}",
        f"pos={_bucket(position)}",
        f"left-neighbor={at(-1)}",
        f"right-neighbor={at(1)}",
        f"stem[-2]={at(-2)}",
        f"stem[+2]={at(2)}",
        f"bigram[-1,0]={at(-1)}|{s0}",
        f"bigram[0,+1]={s0}|{at(1)}",
    ]
    # unordered context reaches past a modifier or two to the head word
    feats += sorted({f"left-bag={stems[j]}" for j in range(max(0, position - 3), position)})
    feats += sorted({f"right-bag={stems[j]}" for j in range(position + 1, min(n, position + 4))})
    window = {at(k) for k in range(-2, 3)}
    if window & _MUST_CUES:
        feats.append("lex=must")
    if window & _CANNOT_CUES:
        feats.append("lex=cannot")
    return feats


# ---------------------------------------------------------------------- model

_VALID = np.array([[is_valid_transition(a, b) for b in LABELS] for a in LABELS])
_START_OK = np.array([not lab.startswith("I-") for lab in LABELS])


@dataclass
class SequenceModel:
    weights: dict[str, dict[str, float]]
    transitions: list[list[float]]
    template_version: str = TEMPLATE_VERSION
    labels: tuple[str, ...] = LABELS

    def __post_init__(self):
        if tuple(self.labels) != LABELS:
            raise TermIdError("label alphabet differs from the built-in one")
        t = np.asarray(self.transitions, dtype=float)
        if t.shape != (NUM_LABELS, NUM_LABELS) or not np.all(np.isfinite(t)):
            raise TermIdError("transition matrix must be a finite 47x47 matrix")
        for attr, row in self.weights.items():
            for lab, w in row.items():
                if lab not in LABEL_INDEX or not math.isfinite(w):
                    raise TermIdError(f"bad weight {attr}/{lab}={w}")

    @classmethod
    def zeros(cls) -> SequenceModel:
        return cls({}, [[0.0] * NUM_LABELS for _ in range(NUM_LABELS)])

    @cached_property
    def _dense(self) -> tuple[dict[str, int], np.ndarray, np.ndarray]:
        attrs = {a: i for i, a in enumerate(sorted(self.weights))}
        w = np.zeros((len(attrs), NUM_LABELS))
        for a, row in self.weights.items():
            for lab, val in row.items():
                w[attrs[a], LABEL_INDEX[lab]] = val
        trans = np.where(_VALID, np.asarray(self.transitions, dtype=float), -np.inf)
        return attrs, w, trans

    def emissions(self, sentence: Sentence) -> np.ndarray:
        attrs, w, _ = self._dense
        out = np.zeros((len(sentence.tokens), NUM_LABELS))
        for i in range(len(sentence.tokens)):
            idx = [attrs[f] for f in featurize(sentence, i) if f in attrs]
            if idx:
                out[i] = w[idx].sum(axis=0)
        return out

    @property
    def max_abs_weight(self) -> float:
        vals = [abs(v) for row in self.weights.values() for v in row.values()]
        vals += [abs(v) for row in self.transitions for v in row]
        return max(vals, default=0.0)

    # serialization
    def to_json(self) -> str:
        doc = {
            "format": MODEL_FORMAT,
            "template_version": self.template_version,
            "label_alphabet": list(self.labels),
            "features": self.weights,
            "transitions": self.transitions,
        }
        return json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n"

    @classmethod
    def from_json(cls, text: str) -> SequenceModel:
        doc = json.loads(text)
        if doc.get("format") != MODEL_FORMAT:
            raise TermIdError("not a licscan CRF model file")
        if doc["template_version"] != TEMPLATE_VERSION:
            raise TermIdError(f"model template {doc['template_version']!r} != {TEMPLATE_VERSION!r}")
        return cls(doc["features"], doc["transitions"], doc["template_version"], tuple(doc["label_alphabet"]))

    def save(self, path: str | os.PathLike) -> None:
        Path(path).write_text(self.to_json(), "utf-8")

    @classmethod
    def load(cls, path: str | os.PathLike) -> SequenceModel:
        return cls.from_json(Path(path).read_text("utf-8"))


# ----------------------------------------------------------------- inference


def viterbi(emissions: np.ndarray, trans: np.ndarray) -> list[int]:
    """Best label path; ``trans`` carries -inf on forbidden transitions."""
    n = emissions.shape[0]
    if n == 0:
        return []
    delta = np.where(_START_OK, emissions[0], -np.inf)
    back = np.zeros((n, NUM_LABELS), dtype=int)
    cols = np.arange(NUM_LABELS)
    for t in range(1, n):
        scores = delta[:, None] + trans
        back[t] = np.argmax(scores, axis=0)  # first maximum = alphabet order
        delta = scores[back[t], cols] + emissions[t]
    path = [int(np.argmax(delta))]
    for t in range(n - 1, 0, -1):
        path.append(int(back[t, path[-1]]))
    return path[::-1]


def tag(model: SequenceModel, sentence: Sentence) -> list[str]:
    """Viterbi-decoded BIO labels for ``sentence``."""
    _, _, trans = model._dense
    return [LABELS[i] for i in viterbi(model.emissions(sentence), trans)]


def marginals(model: SequenceModel, sentence: Sentence) -> np.ndarray:
    """Per-token label marginals, shape (tokens, 47)."""
    if not sentence.tokens:
        return np.zeros((0, NUM_LABELS))
    _, _, trans = model._dense
    e = model.emissions(sentence)[None]
    post, _, _ = _forward_backward(e, np.array([e.shape[1]]), trans)
    return post[0]


def _forward_backward(e: np.ndarray, lengths: np.ndarray, trans: np.ndarray):
    """Scaled forward/backward over padded emissions (B, T, L).

    Returns per-token posteriors (zero on padding), expected transition counts
    summed over the batch, and per-sentence log partition values.
    """
    b, t_max, _ = e.shape
    live = np.arange(t_max)[None, :] < lengths[:, None]
    shift = e.max(axis=2, keepdims=True)
    ee = np.exp(e - shift)
    t_shift = trans[_VALID].max()
    m = np.where(_VALID, np.exp(np.where(_VALID, trans, 0.0) - t_shift), 0.0)
    tiny = np.finfo(float).tiny

    alpha = np.empty_like(e)
    scale = np.ones((b, t_max))
    a = ee[:, 0] * _START_OK
    for t in range(t_max):
        if t:
            a = (alpha[:, t - 1] @ m) * ee[:, t]
        c = np.maximum(a.sum(axis=1), tiny)
        c = np.where(live[:, t], c, 1.0)
        scale[:, t] = c
        alpha[:, t] = a / c[:, None]

    beta = np.ones_like(e)
    for t in range(t_max - 2, -1, -1):
        nxt = (ee[:, t + 1] * beta[:, t + 1] / scale[:, t + 1, None]) @ m.T
        beta[:, t] = np.where(live[:, t + 1, None], nxt, 1.0)

    log_z = (np.log(scale).sum(axis=1) + (shift[..., 0] * live).sum(axis=1) + (lengths - 1) * t_shift)
    post = alpha * beta * live[..., None]
    pairs = live[:, 1:]
    left = alpha[:, :-1][pairs]
    right = (ee * beta / scale[..., None])[:, 1:][pairs]
    exp_t = m * (left.T @ right)
    return post, exp_t, log_z


# ---------------------------------------------------------------------- training


class _Problem:
    """Packed CRF objective over a fixed training set."""

    def __init__(self, data: list[LabeledSentence], batch_size: int):
        attr_index: dict[str, int] = {}
        rows, cols = [], []
        gold: list[int] = []
        pairs: set[tuple[int, int]] = set()
        offsets = [0]
        for ls in data:
            for i, lab in enumerate(ls.labels):
                y = LABEL_INDEX[lab]
                for f in featurize(ls.sentence, i):
                    a = attr_index.setdefault(f, len(attr_index))
                    rows.append(len(gold))
                    cols.append(a)
                    pairs.add((a, y))
                gold.append(y)
            offsets.append(len(gold))
        self.attrs = sorted(attr_index, key=attr_index.get)
        n_tok = len(gold)
        self.x = scipy.sparse.csr_matrix(
            (np.ones(len(rows)), (np.array(rows), np.array(cols))), shape=(n_tok, len(self.attrs))
        )
        self.xt = self.x.T.tocsr()
        self.gold = np.array(gold)
        self.mask = np.zeros((len(self.attrs), NUM_LABELS), dtype=bool)
        for a, y in pairs:
            self.mask[a, y] = True
        self.n_w = int(self.mask.sum())
        self.n_params = self.n_w + int(_VALID.sum())

        onehot = np.zeros((n_tok, NUM_LABELS))
        onehot[np.arange(n_tok), self.gold] = 1.0
        self.emp_w = (self.xt @ onehot)[self.mask]
        emp_t = np.zeros((NUM_LABELS, NUM_LABELS))
        for s, e in zip(offsets, offsets[1:]):
            np.add.at(emp_t, (self.gold[s : e - 1], self.gold[s + 1 : e]), 1.0)
        self.emp_t = emp_t[_VALID]

        # length-sorted batches keep padding small
        order = sorted(range(len(data)), key=lambda k: (offsets[k + 1] - offsets[k], k))
        self.batches = []
        for k in range(0, len(order), batch_size):
            idx = order[k : k + batch_size]
            lengths = np.array([offsets[j + 1] - offsets[j] for j in idx])
            t_max = int(lengths.max())
            pos = np.zeros((len(idx), t_max), dtype=int)
            for r, j in enumerate(idx):
                pos[r, : lengths[r]] = np.arange(offsets[j], offsets[j + 1])
            self.batches.append((pos, lengths))

    def unpack(self, theta: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        w = np.zeros(self.mask.shape)
        w[self.mask] = theta[: self.n_w]
        t = np.zeros((NUM_LABELS, NUM_LABELS))
        t[_VALID] = theta[self.n_w :]
        return w, t

    def objective(self, theta: np.ndarray, l2: float) -> tuple[float, np.ndarray]:
        w, t = self.unpack(theta)
        trans = np.where(_VALID, t, -np.inf)
        scores = np.asarray(self.x @ w)
        log_z_total = 0.0
        post = np.zeros_like(scores)
        exp_t = np.zeros((NUM_LABELS, NUM_LABELS))
        for pos, lengths in self.batches:
            live = np.arange(pos.shape[1])[None, :] < lengths[:, None]
            p, pair_counts, log_z = _forward_backward(scores[pos], lengths, trans)
            log_z_total += float(log_z.sum())
            post[pos[live]] += p[live]
            exp_t += pair_counts
        gold_score = scores[np.arange(len(self.gold)), self.gold].sum() + (t[_VALID] * self.emp_t).sum()
        loss = log_z_total - gold_score + 0.5 * l2 * float(theta @ theta)
        grad_w = np.asarray(self.xt @ post)[self.mask] - self.emp_w
        grad_t = exp_t[_VALID] - self.emp_t
        grad = np.concatenate([grad_w, grad_t]) + l2 * theta
        if not math.isfinite(loss) or not np.all(np.isfinite(grad)):
            raise NonFiniteLoss(
                f"non-finite loss {loss} (log Z {log_z_total}, gold {gold_score}, |theta|max "
                f"{np.abs(theta).max() if theta.size else 0.0})"
            )
        return loss, grad

    def to_model(self, theta: np.ndarray) -> SequenceModel:
        w, t = self.unpack(theta)
        weights: dict[str, dict[str, float]] = {}
        for a, y in zip(*np.nonzero(self.mask)):
            weights.setdefault(self.attrs[a], {})[LABELS[y]] = float(w[a, y])
        return SequenceModel(weights, t.tolist())


def _fit(data: list[LabeledSentence], config: TrainConfig) -> SequenceModel:
    problem = _Problem(data, config.batch_size)
    theta0 = np.zeros(problem.n_params)
    res = scipy.optimize.minimize(
        problem.objective, theta0, args=(config.l2,), jac=True, method="L-BFGS-B",
        options={"maxiter": config.max_iter, "gtol": 1e-5},
    )
    log.info("CRF fit: %d sentences, %d params, loss %.4f, %d iterations (%s)",
             len(data), problem.n_params, res.fun, res.nit, res.message)
    return problem.to_model(res.x)


def pseudo_label(model: SequenceModel, sentences: list[Sentence], threshold: float) -> list[LabeledSentence]:
    """Tag ``sentences`` and keep those whose least-confident token marginal is >= threshold."""
    accepted = []
    for s in sentences:
        if not s.tokens:
            continue
        labels = tag(model, s)
        probs = marginals(model, s)
        conf = probs[np.arange(len(labels)), [LABEL_INDEX[x] for x in labels]].min()
        if conf >= threshold:
            accepted.append(LabeledSentence(s, tuple(labels)))
    return accepted


def train(corpus: TrainingCorpus, config: TrainConfig | None = None) -> SequenceModel:
    """Supervised CRF fit, optionally followed by one round of confidence-gated self-training."""
    config = config or TrainConfig()
    if not corpus.labeled:
        raise EmptyLabeledCorpus("training corpus has no labeled sentences")
    # L-BFGS from a zero start is deterministic; the seed only orders the data
    order = np.random.default_rng(config.seed).permutation(len(corpus.labeled))
    labeled = [corpus.labeled[i] for i in order]
    model = _fit(labeled, config)
    if not config.semi_supervised:
        return model
    pseudo = pseudo_label(model, corpus.unlabeled, config.pseudo_threshold)
    log.info("self-training: accepted %d of %d unlabeled sentences", len(pseudo), len(corpus.unlabeled))
    if not pseudo:
        return model
    return _fit(labeled + pseudo, config)


# ----------------------------------------------------------------------- entities


def decode_entities(labels: list[str], sentence: Sentence, warnings: list[str] | None = None) -> list[TermEntity]:
    """Turn each maximal ``B-t I-t*`` run into an entity; a dangling I-t starts a new one."""
    if len(labels) != len(sentence.tokens):
        raise LengthMismatch(f"{len(labels)} labels for {len(sentence.tokens)} tokens")
    out: list[TermEntity] = []
    cur: int | None = None
    start = 0
    for i, lab in enumerate(labels):
        t = label_term(lab)
        if lab.startswith("I-") and cur == t:
            continue
        if cur is not None:
            out.append(TermEntity(cur, start, i, sentence.index))
            cur = None
        if t is not None:
            if lab.startswith("I-") and warnings is not None:
                warnings.append(f"sentence {sentence.index}: dangling {lab} at token {i} treated as B-{t}")
            cur, start = t, i
    if cur is not None:
        out.append(TermEntity(cur, start, len(labels), sentence.index))
    return out


def encode_labels(entities: list[TermEntity], n_tokens: int) -> list[str]:
    labels = ["O"] * n_tokens
    for ent in sorted(entities, key=lambda e: e.start):
        if ent.end > n_tokens:
            raise ValueError(f"entity {ent} beyond {n_tokens} tokens")
        if any(labels[i] != "O" for i in range(ent.start, ent.end)):
            raise ValueError(f"overlapping entity {ent}")
        labels[ent.start] = f"B-{ent.term}"
        for i in range(ent.start + 1, ent.end):
            labels[i] = f"I-{ent.term}"
    return labels


def evaluate(model: SequenceModel, testset: list[LabeledSentence]) -> Metrics:
    """Entity-level precision/recall/F1 with exact span and term matching."""
    if not testset:
        raise EmptyTestset("no test sentences")
    tp = fp = fn = 0
    for k, ls in enumerate(testset):
        gold = {(e.term, e.start, e.end) for e in decode_entities(list(ls.labels), ls.sentence)}
        pred = {(e.term, e.start, e.end) for e in decode_entities(tag(model, ls.sentence), ls.sentence)}
        tp += len(gold & pred)
        fp += len(pred - gold)
        fn += len(gold - pred)
    p = tp / (tp + fp) if tp + fp else 0.0
    r = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * p * r / (p + r) if p + r else 0.0
    return Metrics(p, r, f1, tp, fp, fn)


# --------------------------------------------------------------------------- TSV


def read_tsv(path: str | os.PathLike) -> list[LabeledSentence]:
    """``surface<TAB>label`` per line, blank line between sentences."""
    path = str(path)
    out: list[LabeledSentence] = []
    surfaces: list[str] = []
    labels: list[str] = []
    start_line = 1

    def flush(lineno: int) -> None:
        if not surfaces:
            return
        if not is_valid_sequence(labels):
            raise TsvFormatError(path, start_line, "invalid BIO transition in sentence")
        out.append(LabeledSentence(Sentence.from_surfaces(surfaces, len(out)), tuple(labels)))
        surfaces.clear()
        labels.clear()

    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line.strip():
                flush(lineno)
                start_line = lineno + 1
                continue
            parts = line.split("\t")
            if len(parts) != 2 or not parts[0]:
                raise TsvFormatError(path, lineno, f"expected 'surface<TAB>label', got {line!r}")
            if parts[1] not in LABEL_INDEX:
                raise TsvFormatError(path, lineno, f"unknown label {parts[1]!r}")
            if not surfaces:
                start_line = lineno
            surfaces.append(parts[0])
            labels.append(parts[1])
    flush(-1)
    return out


def write_tsv(sentences: list[LabeledSentence], path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for k, ls in enumerate(sentences):
            if k:
                fh.write("\n")
            for tok, lab in zip(ls.sentence.tokens, ls.labels):
                fh.write(f"{tok.surface}\t{lab}\n")


def read_unlabeled(path: str | os.PathLike) -> list[Sentence]:
    """One pre-split sentence per line."""
    with open(path, encoding="utf-8") as fh:
        return [Sentence.from_text(line.strip(), k) for k, line in enumerate(fh) if line.strip()]
