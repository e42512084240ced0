"""Two small projects, two kinds of incompatibility.

The first project ships a BSD-3-Clause license at its root and vendors a
directory whose license forbids redistribution. The second has no project
license, only two component licenses that disagree about giving credit.

Run:  python3 demos/01_running_examples.py
"""

import tempfile
from pathlib import Path

from licscan import pipeline
from licscan.registry import default_db
from licscan.term_id import SequenceModel


def write(root: Path, files: dict[str, str]) -> Path:
    for name, text in files.items():
        path = root / name
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, "utf-8")
    return root


def show(title: str, analysis: pipeline.Analysis) -> None:
    report = analysis.report
    print(f"== {title}: {'incompatible' if report.incompatible else 'compatible'}"
          f" ({report.pairs_checked} pair(s) checked)")
    for c in report.conflicts:
        print(f"   {c.rule.value:7} term {c.term:2}  {c.left.ref}: {c.left.attitude.value}"
              f"  vs  {c.right.ref}: {c.right.attitude.value}")
    print()


def main() -> None:
    db = default_db()
    model = SequenceModel.load(pipeline.bundled_model_path())
    options = pipeline.AnalyzeOptions(db=db)

    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        # a permissive project license over a component that says "do not redistribute"
        a = write(tmp / "tool", {
            "LICENSE": db["BSD-3-Clause"].canonical_text,
            "vendor/nodist/LICENSE": "Do Not Redistribute.\n",
            "main.py": "print('hello')\n",
        })
        show("project license vs component license", pipeline.analyze(a, model, options))

        # no root license: the two component licenses are compared with each other
        b = write(tmp / "synth", {
            "lib_a/LICENSE": "Do not email me about it or make an obvious acknowledgement to me via url links.\n",
            "lib_b/LICENSE": "You must give credit to the original author of the work.\n",
        })
        analysis = pipeline.analyze(b, model, options)
        show("component license vs component license", analysis)

        # each attitude is backed by the sentence and tokens it came from
        for summary in analysis.report.summaries:
            for ev in summary.evidence.get(17, []):
                words = ", ".join(ev.pt_words) or "none"
                print(f"   {summary.license.origin}: '{ev.text}' -> {ev.attitude.value} (powerful tokens: {words})")


if __name__ == "__main__":
    main()
