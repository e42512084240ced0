"""What silence in a license means.

A license that never mentions a right is read, by default, as withholding
it. This script builds a project whose component licenses are short custom
notices and analyzes it under both readings of absent rights.

Run:  python3 demos/04_default_policy.py
"""

import tempfile
from pathlib import Path

from licscan import pipeline
from licscan.compat import DefaultPolicy
from licscan.registry import default_db
from licscan.term_id import SequenceModel
from licscan.terms import Attitude

COMPONENTS = {
    "vendor/a/LICENSE": "You may use this code for any purpose.\n",
    "vendor/b/LICENSE": "Feel free to copy and modify this file.\n",
    "vendor/c/LICENSE": "You must keep this notice in all copies.\n",
}


def main() -> None:
    db = default_db()
    model = SequenceModel.load(pipeline.bundled_model_path())
    with tempfile.TemporaryDirectory() as tmp:
        root = Path(tmp)
        (root / "LICENSE").write_text(db["MIT"].canonical_text, "utf-8")
        for name, text in COMPONENTS.items():
            (root / name).parent.mkdir(parents=True)
            (root / name).write_text(text, "utf-8")
        for absent_right in (Attitude.CANNOT, Attitude.CAN):
            policy = DefaultPolicy(absent_right, Attitude.CAN)
            report = pipeline.analyze(root, model, pipeline.AnalyzeOptions(policy=policy, db=db)).report
            defaulted = sum(c.left.defaulted or c.right.defaulted for c in report.conflicts)
            print(f"absent rights read as {absent_right.value:6}: {len(report.conflicts):2} conflict(s),"
                  f" {defaulted} involving an unmentioned term")


if __name__ == "__main__":
    main()
