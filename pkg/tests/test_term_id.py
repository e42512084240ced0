import itertools
import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from licscan.preprocess import Sentence
from licscan.term_id import (
    TEMPLATE_VERSION, EmptyLabeledCorpus, EmptyTestset, LabeledSentence, LengthMismatch, PositionOutOfRange,
    SequenceModel, TermEntity, TermIdError, TrainConfig, TrainingCorpus, TsvFormatError, _forward_backward,
    _Problem, decode_entities, encode_labels, evaluate, featurize, marginals, read_tsv, read_unlabeled, tag,
    train, viterbi, write_tsv,
)
from licscan.terms import LABELS, NUM_LABELS, NUM_TERMS, is_valid_sequence, is_valid_transition

WORDS = ["you", "may", "not", "redistribute", "the", "software", "must", "retain", "notice", "copyright",
         "modify", "without", "permission", ",", ".", "Use", "in", "source"]


def ls(words, labels):
    return LabeledSentence(Sentence.from_surfaces(words), tuple(labels))


def random_model(rng, sentence, scale=3.0):
    weights = {}
    for i in range(len(sentence.tokens)):
        for f in featurize(sentence, i):
            if rng.random() < 0.5:
                weights[f] = {lab: float(rng.normal(0, scale)) for lab in rng.choice(LABELS, 5, replace=False)}
    return SequenceModel(weights, rng.normal(0, scale, (NUM_LABELS, NUM_LABELS)).tolist())


def all_paths(n):
    return np.array(list(itertools.product(range(NUM_LABELS), repeat=n)))


def brute_scores(e, trans, paths):
    """Unnormalized path scores, -inf for any BIO-invalid path."""
    score = e[np.arange(e.shape[0]), paths].sum(axis=1)
    ok = np.array([not LABELS[p[0]].startswith("I-") for p in paths])
    for t in range(1, e.shape[0]):
        score = score + trans[paths[:, t - 1], paths[:, t]]
        ok &= np.array([is_valid_transition(LABELS[a], LABELS[b]) for a, b in paths[:, t - 1 : t + 1]])
    return np.where(ok, score, -np.inf)


# --------------------------------------------------------------------- features

def test_feature_template_readout():
    feats = featurize(Sentence.from_text("redistribution and use"), 0)
    assert {"stem[0]=redistribut", "shape=word", "right-neighbor=and", "left-neighbor=<s>", "bias"} <= set(feats)


def test_single_token_edges():
    feats = featurize(Sentence.from_text("Permitted"), 0)
    assert {"left-neighbor=<s>", "right-neighbor=</s>", "stem[-2]=<s>", "stem[+2]=</s>"} <= set(feats)


def test_position_out_of_range():
    s = Sentence.from_text("a b")
    with pytest.raises(PositionOutOfRange):
        featurize(s, 2)
    with pytest.raises(PositionOutOfRange):
        featurize(s, -1)


def test_lexicon_cue_features():
    s = Sentence.from_text("you must not copy")
    assert {"lex=must", "lex=cannot"} <= set(featurize(s, 3))


# --------------------------------------------------------------- inference oracles

@pytest.mark.parametrize("n", [1, 2, 3])
def test_log_partition_and_marginals_match_enumeration(n):
    rng = np.random.default_rng(n)
    e = rng.normal(0, 2, (n, NUM_LABELS))
    trans = np.where(
        [[is_valid_transition(a, b) for b in LABELS] for a in LABELS], rng.normal(0, 2, (NUM_LABELS,) * 2), -np.inf
    )
    paths = all_paths(n)
    scores = brute_scores(e, trans, paths)
    top = scores.max()
    log_z = top + np.log(np.exp(scores - top).sum())
    probs = np.exp(scores - log_z)
    post, _, got = _forward_backward(e[None], np.array([n]), trans)
    assert got[0] == pytest.approx(log_z, abs=1e-9)
    for t in range(n):
        expected = np.bincount(paths[:, t], weights=probs, minlength=NUM_LABELS)
        np.testing.assert_allclose(post[0, t], expected, atol=1e-10)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_viterbi_matches_enumeration(n):
    rng = np.random.default_rng(10 + n)
    e = rng.normal(0, 2, (n, NUM_LABELS))
    trans = np.where(
        [[is_valid_transition(a, b) for b in LABELS] for a in LABELS], rng.normal(0, 2, (NUM_LABELS,) * 2), -np.inf
    )
    paths = all_paths(n)
    best = paths[int(np.argmax(brute_scores(e, trans, paths)))]
    assert viterbi(e, trans) == best.tolist()


def test_padding_does_not_change_results():
    rng = np.random.default_rng(3)
    trans = rng.normal(0, 1, (NUM_LABELS,) * 2)
    trans = np.where([[is_valid_transition(a, b) for b in LABELS] for a in LABELS], trans, -np.inf)
    e = rng.normal(0, 1, (2, 5, NUM_LABELS))
    post, _, log_z = _forward_backward(e, np.array([5, 3]), trans)
    post1, _, log_z1 = _forward_backward(e[1:, :3], np.array([3]), trans)
    assert log_z[1] == pytest.approx(log_z1[0])
    np.testing.assert_allclose(post[1, :3], post1[0])
    assert not post[1, 3:].any()


def test_gradient_matches_finite_differences():
    data = [
        ls(["You", "may", "redistribute", "it", "."], ["O", "O", "B-0", "O", "O"]),
        ls(["Retain", "the", "notice", "."], ["O", "B-11", "I-11", "O"]),
    ]
    problem = _Problem(data, batch_size=1)
    rng = np.random.default_rng(0)
    theta = rng.normal(0, 0.5, problem.n_params)
    _, grad = problem.objective(theta, 0.1)
    h = 1e-6
    for k in rng.choice(problem.n_params, 25, replace=False):
        d = np.zeros_like(theta)
        d[k] = h
        num = (problem.objective(theta + d, 0.1)[0] - problem.objective(theta - d, 0.1)[0]) / (2 * h)
        assert grad[k] == pytest.approx(num, abs=1e-5)


def test_marginals_are_distributions(model):
    m = marginals(model, Sentence.from_text("You may not redistribute the software."))
    np.testing.assert_allclose(m.sum(axis=1), 1.0)
    assert marginals(model, Sentence((), "", 0)).shape == (0, NUM_LABELS)


# -------------------------------------------------------------------- tagging

def test_zero_model_tags_all_o():
    s = Sentence.from_text("Redistribution and use in source and binary forms are permitted")
    assert tag(SequenceModel.zeros(), s) == ["O"] * len(s)


def test_bundled_model_tags_distribute_span(model):
    s = Sentence.from_text("Redistribution and use in source and binary forms , with or without modification , are permitted")
    labels = tag(model, s)
    assert labels[0] == "B-0" and labels[1] == "I-0" and labels[-1] == "O"


@settings(max_examples=300)
@given(st.lists(st.sampled_from(WORDS), min_size=1, max_size=12), st.integers(0, 2**32 - 1))
def test_tag_output_is_always_valid(words, seed):
    s = Sentence.from_surfaces(words)
    assert is_valid_sequence(tag(random_model(np.random.default_rng(seed), s), s))


# ------------------------------------------------------------------- entities

def test_decode_examples():
    s = Sentence.from_surfaces(["a", "b", "c"])
    assert decode_entities(["B-0", "I-0", "O"], s) == [TermEntity(0, 0, 2)]
    assert decode_entities(["O", "O", "O"], s) == []
    with pytest.raises(LengthMismatch):
        decode_entities(["O"], s)


def test_decode_dangling_inside_warns():
    s = Sentence.from_surfaces(["a", "b", "c"], 4)
    warnings = []
    assert decode_entities(["O", "I-3", "I-3"], s, warnings) == [TermEntity(3, 1, 3, 4)]
    assert warnings == ["sentence 4: dangling I-3 at token 1 treated as B-3"]


def test_adjacent_entities_of_same_term_stay_separate():
    s = Sentence.from_surfaces(["a", "b", "c"])
    assert decode_entities(["B-1", "B-1", "I-1"], s) == [TermEntity(1, 0, 1), TermEntity(1, 1, 3)]


@st.composite
def entity_sets(draw):
    n = draw(st.integers(1, 30))
    cuts = sorted(draw(st.sets(st.integers(0, n), max_size=12)))
    ents = []
    for a, b in zip(cuts[::2], cuts[1::2]):
        if b > a:
            ents.append(TermEntity(draw(st.integers(0, NUM_TERMS - 1)), a, b))
    return n, ents


@settings(max_examples=500)
@given(entity_sets())
def test_decode_encode_round_trip(case):
    n, ents = case
    labels = encode_labels(ents, n)
    assert is_valid_sequence(labels)
    assert decode_entities(labels, Sentence.from_surfaces(["w"] * n)) == ents


def test_encode_rejects_overlap_and_overflow():
    with pytest.raises(ValueError):
        encode_labels([TermEntity(0, 0, 2), TermEntity(1, 1, 3)], 4)
    with pytest.raises(ValueError):
        encode_labels([TermEntity(0, 2, 5)], 4)


def test_entity_invariants():
    with pytest.raises(ValueError):
        TermEntity(23, 0, 1)
    with pytest.raises(ValueError):
        TermEntity(0, 2, 2)


# ------------------------------------------------------------------- metrics

def test_perfect_predictions(model):
    s = Sentence.from_text("You may redistribute the software.")
    gold = [LabeledSentence(s, tuple(tag(model, s)))]
    m = evaluate(model, gold)
    assert (m.precision, m.recall, m.f1) == (1.0, 1.0, 1.0) or m.tp == 0


def test_no_predictions_convention():
    gold = [ls(["Retain", "notices"], ["B-11", "I-11"])]
    m = evaluate(SequenceModel.zeros(), gold)
    assert (m.precision, m.recall, m.f1, m.fn) == (0.0, 0.0, 0.0, 1)


def test_half_right():
    s = Sentence.from_surfaces(["a", "b", "c", "d"])
    gold = LabeledSentence(s, ("B-0", "O", "B-1", "O"))
    weights = {"stem[0]=a": {"B-0": 5.0}, "stem[0]=d": {"B-2": 5.0}}
    model = SequenceModel(weights, [[0.0] * NUM_LABELS for _ in range(NUM_LABELS)])
    m = evaluate(model, [gold])
    assert (m.tp, m.fp, m.fn) == (1, 1, 1)
    assert (m.precision, m.recall, m.f1) == (0.5, 0.5, 0.5)


def test_empty_testset():
    with pytest.raises(EmptyTestset):
        evaluate(SequenceModel.zeros(), [])


# ------------------------------------------------------------------- training

def test_memorizes_repeated_sentence():
    one = ls(["You", "must", "retain", "the", "copyright", "notice", "."],
             ["O", "O", "O", "B-11", "I-11", "I-11", "O"])
    model = train(TrainingCorpus([one] * 50))
    assert tag(model, one.sentence) == list(one.labels)


def test_empty_corpus_rejected():
    with pytest.raises(EmptyLabeledCorpus):
        train(TrainingCorpus([]))


def test_semi_supervised_with_no_unlabeled_is_noop():
    data = [ls(["Do", "not", "redistribute"], ["O", "O", "B-0"]), ls(["Give", "credit"], ["B-17", "I-17"])]
    a = train(TrainingCorpus(data), TrainConfig(semi_supervised=False))
    b = train(TrainingCorpus(data, []), TrainConfig(semi_supervised=True))
    assert a.to_json() == b.to_json()


def test_training_is_deterministic():
    data = [ls(["Do", "not", "redistribute"], ["O", "O", "B-0"]), ls(["Give", "credit", "."], ["B-17", "I-17", "O"])]
    assert train(TrainingCorpus(data)).to_json() == train(TrainingCorpus(data)).to_json()


def test_l2_shrinks_weights_monotonically():
    data = [ls(["You", "may", "modify", "it"], ["O", "O", "B-1", "O"]), ls(["Retain", "notices"], ["B-11", "I-11"])]
    sizes = [train(TrainingCorpus(data), TrainConfig(l2=l2)).max_abs_weight for l2 in (0.1, 10.0, 1000.0)]
    assert sizes[0] > sizes[1] > sizes[2] and sizes[2] < 0.01


def test_pseudo_labels_need_confidence():
    data = [ls(["Do", "not", "redistribute"], ["O", "O", "B-0"])] * 20
    unl = [Sentence.from_text("Do not redistribute"), Sentence.from_text("zebra quantum")]
    strict = train(TrainingCorpus(data, unl), TrainConfig(semi_supervised=True, pseudo_threshold=1.0))
    plain = train(TrainingCorpus(data), TrainConfig())
    assert strict.to_json() == plain.to_json()


# ----------------------------------------------------------------- serialization

def test_model_json_round_trip(model, tmp_path):
    model.save(tmp_path / "m.json")
    again = SequenceModel.load(tmp_path / "m.json")
    assert again.to_json() == model.to_json()
    doc = json.loads(model.to_json())
    assert doc["template_version"] == TEMPLATE_VERSION and doc["label_alphabet"] == list(LABELS)


def test_model_rejects_bad_files():
    with pytest.raises(TermIdError):
        SequenceModel.from_json(json.dumps({"format": "other"}))
    with pytest.raises(TermIdError):
        SequenceModel({"f": {"B-0": float("nan")}}, [[0.0] * NUM_LABELS] * NUM_LABELS)
    with pytest.raises(TermIdError):
        SequenceModel({}, [[0.0] * 3] * 3)


def test_tsv_round_trip(tmp_path):
    data = [ls(["Do", "not", "redistribute"], ["O", "O", "B-0"]), ls(["Give", "credit"], ["B-17", "I-17"])]
    write_tsv(data, tmp_path / "c.tsv")
    assert (tmp_path / "c.tsv").read_text() == "Do\tO\nnot\tO\nredistribute\tB-0\n\nGive\tB-17\ncredit\tI-17\n"
    back = read_tsv(tmp_path / "c.tsv")
    assert [x.labels for x in back] == [x.labels for x in data]
    assert [[t.surface for t in x.sentence.tokens] for x in back] == [["Do", "not", "redistribute"], ["Give", "credit"]]


@pytest.mark.parametrize("text, line", [
    ("a\tO\nb\tB-99\n", 2),
    ("a\tO\nb O\n", 2),
    ("a\tO\n\nx\tO\ny\tI-3\n", 3),
    ("\tO\n", 1),
])
def test_tsv_errors_carry_line_numbers(tmp_path, text, line):
    (tmp_path / "bad.tsv").write_text(text)
    with pytest.raises(TsvFormatError) as err:
        read_tsv(tmp_path / "bad.tsv")
    assert err.value.lineno == line and f"bad.tsv:{line}:" in str(err.value)


def test_read_unlabeled(tmp_path):
    (tmp_path / "u.txt").write_text("One sentence.\n\nAnother one.\n")
    assert [s.raw for s in read_unlabeled(tmp_path / "u.txt")] == ["One sentence.", "Another one."]


def test_labeled_sentence_validation():
    with pytest.raises(LengthMismatch):
        ls(["a", "b"], ["O"])
    with pytest.raises(ValueError):
        ls(["a", "b"], ["O", "I-0"])


def test_shipped_corpus_size():
    from licscan.pipeline import bundled_model_path
    from pathlib import Path
    corpus = Path(bundled_model_path()).parent / "corpus"
    labeled = read_tsv(corpus / "labeled.tsv")
    assert len(labeled) >= 200
    assert len(read_unlabeled(corpus / "unlabeled.txt")) == 300


def test_self_training_does_not_hurt(split_models):
    base = evaluate(split_models["supervised"], split_models["test"])
    boosted = evaluate(split_models["self_trained"], split_models["test"])
    assert boosted.f1 >= base.f1 - 0.02
