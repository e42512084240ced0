"""Follow one custom license through term identification and attitude inference.

For each sentence the script prints the term entities the sequence model
finds, the part-of-speech tags, the chunk tree, the powerful tokens around
each entity and the attitude they add up to. Conditions ("if you ...") are
listed at the end. A term the model does not find stays unknown and is
later filled in by the default policy.

Run:  python3 demos/02_reading_a_license.py
"""

from licscan import pipeline
from licscan.attitude import AttitudeLexicon, analyze_sentence
from licscan.preprocess import split_sentences
from licscan.term_id import SequenceModel
from licscan.terms import TERMS

TEXT = """\
Copyright (c) 2024 Example Labs.

You may use and modify this software for any purpose.
You may not sell copies of the software.
Redistribution and use in source and binary forms are permitted provided that the above copyright notice is retained.
You may not use the name of the author to endorse products.
You must give appropriate credit to the authors.
"""


def main() -> None:
    model = SequenceModel.load(pipeline.bundled_model_path())
    lexicon = AttitudeLexicon.default()
    conditions = []
    for sentence in split_sentences(TEXT):
        analysis = analyze_sentence(sentence, model, lexicon)
        print(f"[{sentence.index}] {sentence.raw}")
        print("    tags:", " ".join(f"{t.surface}/{g}" for t, g in zip(sentence.tokens, analysis.tags)))
        print("    tree:", analysis.tree.pretty())
        for ev in analysis.evidence:
            ent = next(e for e in analysis.entities if (e.start, e.end) == (ev.start, ev.end))
            pts = ", ".join(f"{w}({p.locality.value[0]})" for p, w in zip(ev.pts, ev.pt_words)) or "none"
            marks = ", ".join(f"{m.entry}:{m.attitude.value}" for m in ev.marks) or "none"
            print(f"    {TERMS[ent.term].name:18} '{ev.text}' -> {ev.attitude.value}")
            print(f"        powerful tokens {pts}; lexicon marks {marks}")
        conditions += analysis.conditions
        print()
    for c in conditions:
        print(f"condition: {TERMS[c.consequent.term].name} holds only if {TERMS[c.antecedent.term].name}")


if __name__ == "__main__":
    main()
