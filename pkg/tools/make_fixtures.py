"""Generate the synthetic test fixtures under tests/fixtures.

    python3 tools/make_fixtures.py

Writes ``ablation/pNN/`` (20 small projects mixing an official project
license with short custom component licenses) and ``appended_clauses.json``
(official texts with one extra clause before or after them).
"""

import json
import random
import shutil
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
SPDX = ROOT / "src" / "licscan" / "data" / "spdx" / "texts"
OUT = ROOT / "tests" / "fixtures"

PROJECT_LICENSES = ["MIT", "BSD-2-Clause", "BSD-3-Clause", "Apache-2.0", "ISC", "Zlib", "X11", "0BSD"]

# short in-repo component licenses; most terms go unmentioned
CUSTOM = [
    "You may use this code for any purpose.",
    "Permission is granted to copy and modify this file.",
    "You may not sell this software.",
    "You must give credit to the original author.",
    "Do not redistribute this file.",
    "Please email me if you use this code.",
    "You may modify the code but you must state the changes.",
    "This code may be used in commercial products.",
    "You must retain this notice in all copies.",
    "The author grants you the right to redistribute the work.",
    "Do not use the name of the author to promote products.",
    "You may copy this file as long as you include this notice.",
]

CLAUSES = [
    ("MIT", "after", "The software may not be used for military purposes."),
    ("Apache-2.0", "before", "Additional terms: do not email the authors about support."),
    ("BSD-3-Clause", "after", "You must give credit to the original authors in any publication."),
    ("ISC", "after", "Commercial use of this software requires a separate agreement."),
    ("BSD-2-Clause", "before", "Portions of this file were contributed by third parties."),
    ("Zlib", "after", "Please send bug reports to the maintainers."),
    ("X11", "after", "You may not sell this software on its own."),
    ("0BSD", "before", "This exception applies to the documentation only."),
    ("Unlicense", "after", "Contributors ask that you cite the project in academic work."),
    ("BSL-1.0", "after", "The name of the project shall not be used to endorse derived products."),
]


def spdx_text(spdx_id: str) -> str:
    return (SPDX / f"{spdx_id}.txt").read_text(encoding="utf-8")


def ablation(rng: random.Random) -> None:
    base = OUT / "ablation"
    if base.exists():
        shutil.rmtree(base)
    for k in range(1, 21):
        proj = base / f"p{k:02d}"
        proj.mkdir(parents=True)
        (proj / "LICENSE").write_text(spdx_text(rng.choice(PROJECT_LICENSES)), encoding="utf-8")
        for j, text in enumerate(rng.sample(CUSTOM, rng.randint(1, 3))):
            comp = proj / "vendor" / f"lib{j}"
            comp.mkdir(parents=True)
            (comp / "LICENSE").write_text(text + "\n", encoding="utf-8")


def clauses() -> None:
    cases = [
        {"spdx_id": sid, "position": pos, "clause": clause, "expected_residual": clause}
        for sid, pos, clause in CLAUSES
    ]
    (OUT / "appended_clauses.json").write_text(json.dumps(cases, indent=2) + "\n", encoding="utf-8")


def main() -> None:
    ablation(random.Random(0))
    clauses()
    print(f"wrote fixtures under {OUT}")


if __name__ == "__main__":
    main()
