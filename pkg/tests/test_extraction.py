import json

import pytest

from licscan.extraction import (
    Kind, LicenseInstance, PackageRef, Role, RootNotFound, ScanConfig, collect_package_refs, extract_declared,
    extract_inline, is_declared_name, leading_comment, parse_dependency_table, parse_requirements, scan_project,
)
from _support import PROJECTS

MIT_HEADER = """# Copyright (c) 2020 Example
#
# Permission is hereby granted, free of charge, to any person obtaining a copy
# of this software, to deal in the Software without restriction.

"""


def write(path, text, mode="w"):
    path.parent.mkdir(parents=True, exist_ok=True)
    if mode == "wb":
        path.write_bytes(text)
    else:
        path.write_text(text, encoding="utf-8")
    return path


# ------------------------------------------------------------------ declared

@pytest.mark.parametrize("name, ok", [
    ("LICENSE", True), ("COPYING", True), ("license.MD", True), ("Licence.txt", True), ("NOTICE.rst", True),
    ("LICENSES_OF_OTHERS.doc", False), ("LICENSE.doc", False), ("README", False),
])
def test_declared_names(name, ok):
    assert is_declared_name(name) is ok


def test_root_file_is_project_license(tmp_path):
    write(tmp_path / "COPYING", "Some license text.")
    write(tmp_path / "vendor" / "x" / "license.MD", "Other text.")
    found = {i.origin: i for i in extract_declared(tmp_path)}
    assert found["COPYING"].role is Role.PL and found["COPYING"].kind is Kind.DECLARED
    assert found["vendor/x/license.MD"].role is Role.CL


def test_non_matching_file_ignored(tmp_path):
    write(tmp_path / "LICENSES_OF_OTHERS.doc", "text")
    assert extract_declared(tmp_path) == []


def test_empty_license_file_warns(tmp_path):
    write(tmp_path / "LICENSE", "   \n")
    warnings = []
    assert extract_declared(tmp_path, None, warnings) == []
    assert warnings == ["LICENSE: empty license file"]


# -------------------------------------------------------------------- inline

def test_inline_header_with_cue(tmp_path):
    f = write(tmp_path / "src" / "mod.py", MIT_HEADER)
    [inst] = extract_inline(f, tmp_path)
    assert inst.kind is Kind.INLINE and inst.role is Role.CL and inst.scope == "src/mod.py"
    assert inst.text.startswith("Copyright (c) 2020 Example") and "import" not in inst.text


def test_inline_header_without_cue(tmp_path):
    f = write(tmp_path / "a.py", "# TODO: refactor\nx = 1\n")
    assert extract_inline(f, tmp_path) == []


def test_license_mid_file_not_inline(tmp_path):
    f = write(tmp_path / "a.c", "int x;\n/* Permission is hereby granted, see license. */\n")
    assert extract_inline(f, tmp_path) == []


def test_block_comment_styles():
    c = "/*\n * Copyright 2020 A\n * Licensed under the MIT license.\n */\nint main() {}\n"
    assert leading_comment(c, ".c") == "Copyright 2020 A\nLicensed under the MIT license."
    js = "// Copyright X\n// license: MIT\nvar a;\n"
    assert leading_comment(js, ".js") == "Copyright X\nlicense: MIT"
    py = '#!/usr/bin/env python\n"""Copyright A.\n\nLicensed as you like.\n"""\nimport os\n'
    assert "Licensed as you like." in leading_comment(py, ".py")


def test_unknown_extension_skipped(tmp_path):
    f = write(tmp_path / "notes.xyz", "# Copyright license\n")
    assert extract_inline(f, tmp_path) == []


# ----------------------------------------------------------------- manifests

def test_requirements_lines():
    warnings = []
    refs = parse_requirements("requests==2.28.1\n# comment\nnumpy>=1.0\nflask[async]==2.0 ; python_version>'3'\n!!bad\n",
                              "requirements.txt", warnings)
    assert refs == [
        PackageRef("requests", "2.28.1", "requirements.txt"),
        PackageRef("numpy", None, "requirements.txt"),
        PackageRef("flask", "2.0", "requirements.txt"),
    ]
    assert warnings == ["requirements.txt:5: malformed requirement '!!bad', skipped"]


def test_dependency_table():
    text = '[package]\nname = "x"\n[dependencies]\nserde = "1.0"\ntokio = { version = "1.2", features = ["full"] }\nlocal = { path = "../l" }\n???\n'
    warnings = []
    refs = parse_dependency_table(text, "Cargo.toml", warnings)
    assert refs == [
        PackageRef("serde", "1.0", "Cargo.toml"), PackageRef("tokio", "1.2", "Cargo.toml"),
        PackageRef("local", None, "Cargo.toml"),
    ]
    assert len(warnings) == 1 and "Cargo.toml:7" in warnings[0]


def test_package_ref_validation():
    with pytest.raises(ValueError):
        PackageRef("", None, "x")
    with pytest.raises(ValueError):
        PackageRef("a", "1..2", "x")


def test_collect_package_refs(tmp_path):
    write(tmp_path / "requirements.txt", "requests==2.28.1\n")
    write(tmp_path / "sub" / "Cargo.toml", '[dependencies]\nserde = "1.0"\n')
    refs = collect_package_refs(tmp_path)
    assert [(r.name, r.version, r.source_file) for r in refs] == [
        ("requests", "2.28.1", "requirements.txt"), ("serde", "1.0", "sub/Cargo.toml"),
    ]


def test_import_scanning_is_opt_in(tmp_path):
    write(tmp_path / "main.py", "import os\nimport yaml\nfrom helper import x\n")
    write(tmp_path / "helper.py", "x = 1\n")
    assert collect_package_refs(tmp_path) == []
    refs = collect_package_refs(tmp_path, ScanConfig(scan_imports=True))
    assert [r.name for r in refs] == ["yaml"]


# ---------------------------------------------------------------------- scan

def test_empty_directory(tmp_path):
    scan = scan_project(tmp_path)
    assert scan.instances == [] and scan.warnings == [] and scan.package_refs == []


def test_missing_root(tmp_path):
    with pytest.raises(RootNotFound):
        scan_project(tmp_path / "nope")


def test_redistribution_fixture_has_two_instances():
    scan = scan_project(PROJECTS / "redistribution_clash")
    assert [(i.origin, i.role) for i in scan.instances] == [("LICENSE", Role.PL), ("vendor/nodist/LICENSE", Role.CL)]


def test_undecodable_file_warns(tmp_path):
    write(tmp_path / "LICENSE", "Fine text.")
    write(tmp_path / "lib" / "bad.py", b"# license \xff\xfe\n", mode="wb")
    scan = scan_project(tmp_path)
    assert len(scan.instances) == 1
    assert scan.warnings == ["lib/bad.py: not valid UTF-8, skipped"]


def test_metadata_reference_and_spdx_tag(tmp_path):
    write(tmp_path / "pyproject.toml", '[project]\nname = "x"\nlicense = "Apache License 2.0"\n')
    write(tmp_path / "src" / "a.rs", "// SPDX-License-Identifier: MIT\nfn main() {}\n")
    write(tmp_path / "src" / "b.rs", "// SPDX-License-Identifier: Nope-License\nfn main() {}\n")
    scan = scan_project(tmp_path)
    assert [(i.origin, i.kind, i.spdx_id) for i in scan.instances] == [
        ("pyproject.toml", Kind.REFERENCED, "Apache-2.0"), ("src/a.rs", Kind.REFERENCED, "MIT"),
    ]
    assert scan.warnings == ["src/b.rs: unresolved license reference 'Nope-License'"]


def test_dedup_keeps_first_origin(tmp_path):
    write(tmp_path / "a" / "LICENSE", "Same text.")
    write(tmp_path / "b" / "LICENSE", "Same  text.\n")
    scan = scan_project(tmp_path)
    assert [i.origin for i in scan.instances] == ["a/LICENSE"]
    assert scan.warnings == ["duplicate declared license text: b/LICENSE same as a/LICENSE"]


def test_multiple_root_licenses_all_pl(tmp_path):
    write(tmp_path / "LICENSE", "One.")
    write(tmp_path / "COPYING", "Two.")
    scan = scan_project(tmp_path)
    assert all(i.role is Role.PL for i in scan.instances) and len(scan.instances) == 2
    assert scan.warnings == ["multiple project license files: COPYING, LICENSE"]


def test_instance_invariants():
    with pytest.raises(ValueError):
        LicenseInstance(Kind.INLINE, "a.py", "text", Role.CL)  # inline needs scope
    with pytest.raises(ValueError):
        LicenseInstance(Kind.DECLARED, "LICENSE", "   ", Role.PL)


def test_scan_is_deterministic_and_sorted(tmp_path):
    for k in range(8):
        write(tmp_path / f"d{k}" / "LICENSE", f"License number {k}.")
        write(tmp_path / f"d{k}" / "m.py", f"# Copyright {k} license\nx = {k}\n")
    a, b = scan_project(tmp_path), scan_project(tmp_path, ScanConfig(max_workers=1))
    assert a == b
    origins = [i.origin for i in a.instances]
    assert origins == sorted(origins)


def test_scan_config_from_json(tmp_path):
    cfg = write(tmp_path / "cfg.json", json.dumps({"declared_names": ["EULA"], "scan_imports": True}))
    config = ScanConfig.from_json(cfg)
    assert config.declared_names == ["EULA"] and config.scan_imports
    bad = write(tmp_path / "bad.json", json.dumps({"nonsense": 1}))
    with pytest.raises(ValueError):
        ScanConfig.from_json(bad)
