"""Regenerate src/licscan/data/spdx from the ``spdx-license-list`` npm package.

    npm pack spdx-license-list && tar xzf spdx-license-list-*.tgz
    python tools/build_spdx_db.py package/spdx-full.json
"""

import json
import sys
from pathlib import Path

OUT = Path(__file__).resolve().parents[1] / "src" / "licscan" / "data" / "spdx"

# id -> extra aliases (names and common short forms seen in package metadata)
SELECTED = {
    "0BSD": ["Zero-Clause BSD", "BSD Zero Clause License"],
    "AFL-3.0": ["Academic Free License 3.0", "AFL 3.0"],
    "AGPL-3.0-only": ["AGPL-3.0", "AGPLv3", "GNU Affero General Public License v3", "AGPL 3"],
    "Apache-2.0": ["Apache License", "Apache License, Version 2.0", "Apache 2", "Apache2", "ASL 2.0",
                   "Apache Software License", "Apache Software License 2.0"],
    "Artistic-2.0": ["Artistic License 2.0"],
    "Beerware": ["Beerware License"],
    "BSD-2-Clause": ["Simplified BSD License", "FreeBSD License", "BSD 2-Clause License", "BSD-2"],
    "BSD-3-Clause": ["BSD License", "BSD", "New BSD License", "Modified BSD License", "BSD 3-Clause License",
                     "BSD-3", "Revised BSD License"],
    "BSD-4-Clause": ["Original BSD License", "BSD 4-Clause License"],
    "BSL-1.0": ["Boost Software License", "Boost"],
    "CC-BY-3.0": ["Creative Commons Attribution 3.0", "CC BY 3.0"],
    "CC-BY-4.0": ["Creative Commons Attribution 4.0", "CC BY 4.0"],
    "CC-BY-NC-4.0": ["CC BY-NC 4.0"],
    "CC-BY-SA-4.0": ["CC BY-SA 4.0"],
    "CC0-1.0": ["CC0", "Creative Commons Zero", "CC0 1.0 Universal"],
    "CDDL-1.0": ["CDDL"],
    "EPL-2.0": ["Eclipse Public License 2.0", "EPL 2.0"],
    "EUPL-1.2": ["EUPL 1.2"],
    "GPL-2.0-only": ["GPL-2.0", "GPLv2", "GPL 2", "GNU General Public License v2", "GNU GPL v2"],
    "GPL-3.0-only": ["GPL-3.0", "GPLv3", "GPL 3", "GNU General Public License v3", "GNU GPL v3"],
    "ISC": ["ISC License (ISCL)", "ISCL"],
    "JSON": ["JSON License"],
    "LGPL-2.1-only": ["LGPL-2.1", "LGPLv2.1", "GNU Lesser General Public License v2.1"],
    "LGPL-3.0-only": ["LGPL-3.0", "LGPLv3", "GNU Lesser General Public License v3"],
    "MIT": ["MIT License", "Expat", "Expat License"],
    "MIT-0": ["MIT No Attribution"],
    "MPL-2.0": ["Mozilla Public License 2.0", "MPL 2.0", "MPLv2"],
    "MS-PL": ["Microsoft Public License"],
    "NCSA": ["University of Illinois/NCSA Open Source License"],
    "OFL-1.1": ["SIL Open Font License 1.1", "OFL"],
    "PostgreSQL": ["PostgreSQL License"],
    "PSF-2.0": ["Python Software Foundation License", "PSF", "PSFL"],
    "Python-2.0": ["Python License 2.0"],
    "Sleepycat": ["Sleepycat License"],
    "Unlicense": ["The Unlicense", "Public Domain (Unlicense)"],
    "UPL-1.0": ["Universal Permissive License 1.0"],
    "Vim": ["Vim License"],
    "WTFPL": ["Do What The F*ck You Want To Public License"],
    "X11": ["X11 License"],
    "Zlib": ["zlib License", "zlib/libpng License"],
    "ZPL-2.1": ["Zope Public License 2.1"],
}


def main(src: str) -> None:
    data = json.loads(Path(src).read_text("utf-8"))
    texts = OUT / "texts"
    texts.mkdir(parents=True, exist_ok=True)
    index = []
    for spdx_id, aliases in sorted(SELECTED.items()):
        entry = data[spdx_id]
        fname = f"{spdx_id}.txt"
        (texts / fname).write_text(entry["licenseText"].strip() + "\n", "utf-8")
        index.append({"id": spdx_id, "name": entry["name"], "aliases": aliases, "file": f"texts/{fname}",
                      "urls": [entry["url"]] if entry.get("url") else []})
    (OUT / "index.json").write_text(json.dumps(index, indent=1) + "\n", "utf-8")
    print(f"wrote {len(index)} licenses to {OUT}")


if __name__ == "__main__":
    main(sys.argv[1])
