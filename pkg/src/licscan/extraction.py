"""Collect declared, inline and referenced licenses from a project tree."""

from __future__ import annotations

import enum
import json
import logging
import os
import re
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING

from licscan.preprocess import fold_text

if TYPE_CHECKING:
    from licscan.registry import PackageResolver, SpdxDb

log = logging.getLogger(__name__)


class RootNotFound(FileNotFoundError):
    pass


class Kind(str, enum.Enum):
    DECLARED = "Declared"
    REFERENCED = "Referenced"
    INLINE = "Inline"


class Role(str, enum.Enum):
    PL = "PL"
    CL = "CL"


@dataclass(frozen=True)
class LicenseInstance:
    kind: Kind
    origin: str  # posix path relative to the scan root, or a registry id
    text: str
    role: Role
    scope: str | None = None
    spdx_id: str | None = None

    def __post_init__(self):
        if not self.text.strip():
            raise ValueError(f"{self.origin}: empty license text")
        if self.kind is Kind.INLINE and not self.scope:
            raise ValueError(f"{self.origin}: inline license without scope")


@dataclass(frozen=True)
class PackageRef:
    name: str
    version: str | None
    source_file: str

    def __post_init__(self):
        if not self.name:
            raise ValueError("empty package name")
        if self.version is not None and not _VERSION.fullmatch(self.version):
            raise ValueError(f"bad version {self.version!r}")


_VERSION = re.compile(r"[A-Za-z0-9]+(?:[.+!_-][A-Za-z0-9]+)*")


@dataclass
class ScanConfig:
    declared_names: list[str] = field(default_factory=lambda: ["LICENSE", "LICENCE", "COPYING", "COPYRIGHT", "NOTICE"])
    declared_extensions: list[str] = field(default_factory=lambda: ["", ".txt", ".md", ".rst"])
    source_extensions: list[str] = field(
        default_factory=lambda: [".py", ".rs", ".c", ".h", ".cc", ".cpp", ".hpp", ".js", ".ts", ".go", ".java", ".sh", ".rb"]
    )
    manifest_globs: list[str] = field(default_factory=lambda: ["requirements*.txt", "Cargo.toml"])
    metadata_files: list[str] = field(default_factory=lambda: ["pyproject.toml", "setup.cfg", "setup.py", "package.json", "Cargo.toml"])
    scan_imports: bool = False
    skip_dirs: list[str] = field(default_factory=lambda: [".git", ".hg", ".svn", "__pycache__", ".tox", ".venv"])
    max_workers: int = 4

    @classmethod
    def from_json(cls, path: str | os.PathLike) -> ScanConfig:
        data = json.loads(Path(path).read_text("utf-8"))
        known = cls.__dataclass_fields__
        unknown = set(data) - set(known)
        if unknown:
            raise ValueError(f"unknown ScanConfig keys: {sorted(unknown)}")
        return cls(**data)


@dataclass
class ProjectScan:
    root: str
    instances: list[LicenseInstance] = field(default_factory=list)
    package_refs: list[PackageRef] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def project_licenses(self) -> list[LicenseInstance]:
        return [i for i in self.instances if i.role is Role.PL]

    @property
    def component_licenses(self) -> list[LicenseInstance]:
        return [i for i in self.instances if i.role is Role.CL]


def _walk(root: Path, config: ScanConfig):
    """Yield files under ``root`` in sorted order, skipping VCS/cache directories."""
    skip = set(config.skip_dirs)
    for dirpath, dirnames, filenames in os.walk(root):
        dirnames[:] = sorted(d for d in dirnames if d not in skip)
        for name in sorted(filenames):
            yield Path(dirpath) / name


def _rel(path: Path, root: Path) -> str:
    return path.relative_to(root).as_posix()


def _read(path: Path, root: Path, warnings: list[str]) -> str | None:
    try:
        return path.read_bytes().decode("utf-8")
    except UnicodeDecodeError:
        warnings.append(f"{_rel(path, root)}: not valid UTF-8, skipped")
    except OSError as exc:
        warnings.append(f"{_rel(path, root)}: unreadable ({exc.strerror or exc}), skipped")
    return None


def is_declared_name(filename: str, config: ScanConfig | None = None) -> bool:
    config = config or ScanConfig()
    stem, dot, ext = filename.rpartition(".")
    if not dot:
        stem, ext = filename, ""
    else:
        ext = "." + ext
    names = {n.upper() for n in config.declared_names}
    exts = {e.lower() for e in config.declared_extensions}
    return stem.upper() in names and ext.lower() in exts


def extract_declared(root: str | os.PathLike, config: ScanConfig | None = None, warnings: list[str] | None = None) -> list[LicenseInstance]:
    """License files anywhere in the tree; the ones at the root are project licenses."""
    config = config or ScanConfig()
    root = Path(root)
    warnings = warnings if warnings is not None else []
    out = []
    for path in _walk(root, config):
        if not is_declared_name(path.name, config):
            continue
        text = _read(path, root, warnings)
        if text is None:
            continue
        text = fold_text(text).strip()
        if not text:
            warnings.append(f"{_rel(path, root)}: empty license file")
            continue
        role = Role.PL if path.parent == root else Role.CL
        out.append(LicenseInstance(Kind.DECLARED, _rel(path, root), text, role))
    return out


# ------------------------------------------------------------------------- inline

_CUE = re.compile(r"\b(licen[cs]|copyright|permission|warrant|redistribut)", re.I)
_SPDX_TAG = re.compile(r"SPDX-License-Identifier:\s*([^\s*/#]+(?:\s+(?:AND|OR|WITH)\s+[^\s*/#]+)*)")
_HASH_EXT = {".py", ".sh", ".rb", ".pl", ".r", ".toml", ".yaml", ".yml"}


def leading_comment(text: str, suffix: str) -> str:
    """Comment text before the first line of code, with comment markers removed."""
    lines = text.splitlines()
    out: list[str] = []
    i, n = 0, len(lines)
    hash_style = suffix in _HASH_EXT
    while i < n:
        s = lines[i].strip()
        if not s:
            out.append("")
            i += 1
        elif hash_style and s.startswith("#"):
            out.append(s.lstrip("#!").strip() if not s.startswith("#!") else "")
            i += 1
        elif not hash_style and s.startswith("//"):
            out.append(s[2:].lstrip("/!").strip())
            i += 1
        elif not hash_style and s.startswith("/*"):
            body = s[2:].lstrip("*!")
            while True:
                end = body.find("*/")
                if end >= 0:
                    out.append(body[:end].strip().lstrip("*").strip())
                    rest = body[end + 2 :].strip()
                    i += 1
                    if rest:
                        return "\n".join(out).strip()
                    break
                out.append(body.strip().lstrip("*").strip())
                i += 1
                if i >= n:
                    break
                body = lines[i].strip()
        elif suffix == ".py" and s[:3] in ('"""', "'''") and not "".join(out).strip():
            quote = s[:3]
            body = s[3:]
            while True:
                end = body.find(quote)
                if end >= 0:
                    out.append(body[:end].strip())
                    i += 1
                    break
                out.append(body.strip())
                i += 1
                if i >= n:
                    break
                body = lines[i].strip()
        else:
            break
    return "\n".join(out).strip()


def extract_inline(
    file: str | os.PathLike, root: str | os.PathLike | None = None, config: ScanConfig | None = None,
    warnings: list[str] | None = None,
) -> list[LicenseInstance]:
    """Inline license in the leading comment block of a source file, if it carries a license cue."""
    config = config or ScanConfig()
    path = Path(file)
    root = Path(root) if root is not None else path.parent
    warnings = warnings if warnings is not None else []
    if path.suffix.lower() not in {e.lower() for e in config.source_extensions}:
        return []
    text = _read(path, root, warnings)
    if text is None:
        return []
    block = fold_text(leading_comment(text, path.suffix.lower()))
    block = "\n".join(line for line in block.splitlines() if not _SPDX_TAG.search(line)).strip()
    if not block or not _CUE.search(block):
        return []
    rel = _rel(path, root)
    return [LicenseInstance(Kind.INLINE, rel, block, Role.CL, scope=rel)]


def spdx_tags(file: str | os.PathLike, root: str | os.PathLike, config: ScanConfig | None = None,
              warnings: list[str] | None = None) -> list[str]:
    """SPDX-License-Identifier expressions in the leading comment of a source file."""
    config = config or ScanConfig()
    path = Path(file)
    if path.suffix.lower() not in {e.lower() for e in config.source_extensions}:
        return []
    text = _read(path, Path(root), warnings if warnings is not None else [])
    if text is None:
        return []
    return _SPDX_TAG.findall(leading_comment(text, path.suffix.lower()))


# ----------------------------------------------------------------------- manifests

_REQ_LINE = re.compile(
    r"^(?P<name>[A-Za-z0-9](?:[A-Za-z0-9._-]*[A-Za-z0-9])?)\s*(?:\[[^\]]*\])?\s*"
    r"(?P<spec>(?:(?:==|>=|<=|~=|!=|<|>|===)\s*[^,;\s]+\s*,?\s*)*)\s*(?:;.*)?$"
)
_TABLE_ENTRY = re.compile(r"^(?P<name>[A-Za-z0-9_-]+)\s*=\s*(?P<value>.+)$")


def parse_requirements(text: str, source: str, warnings: list[str]) -> list[PackageRef]:
    refs = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split(" #", 1)[0].strip()
        if not line or line.startswith("#") or line.startswith("-"):
            continue
        m = _REQ_LINE.match(line)
        if not m:
            warnings.append(f"{source}:{lineno}: malformed requirement {line!r}, skipped")
            continue
        pin = re.match(r"^===?\s*([^,\s]+)\s*$", m.group("spec") or "")
        version = pin.group(1) if pin and "*" not in pin.group(1) else None
        try:
            refs.append(PackageRef(m.group("name"), version, source))
        except ValueError as exc:
            warnings.append(f"{source}:{lineno}: {exc}, skipped")
    return refs


def parse_dependency_table(text: str, source: str, warnings: list[str]) -> list[PackageRef]:
    """``name = "1.0"`` / ``name = { version = "1.0" }`` lines under ``[dependencies]``."""
    refs = []
    section = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            section = line.strip("[] ")
            continue
        if section != "dependencies":
            continue
        m = _TABLE_ENTRY.match(line)
        if not m:
            warnings.append(f"{source}:{lineno}: malformed dependency {line!r}, skipped")
            continue
        value = m.group("value").strip()
        version = None
        quoted = re.fullmatch(r"[\"']([^\"']*)[\"']", value)
        if quoted:
            version = quoted.group(1)
        else:
            inner = re.search(r"version\s*=\s*[\"']([^\"']*)[\"']", value)
            if inner:
                version = inner.group(1)
            elif not value.startswith("{"):
                warnings.append(f"{source}:{lineno}: malformed dependency {line!r}, skipped")
                continue
        if version is not None:
            version = version.lstrip("=^~ ") or None
            if version and not _VERSION.fullmatch(version):
                version = None
        refs.append(PackageRef(m.group("name"), version, source))
    return refs


_IMPORT = re.compile(r"^\s*(?:from\s+([A-Za-z_]\w*)[\w.]*\s+import|import\s+([A-Za-z_]\w*))", re.M)


def _import_refs(root: Path, config: ScanConfig, warnings: list[str]) -> list[PackageRef]:
    files = [p for p in _walk(root, config) if p.suffix == ".py"]
    local = {p.stem for p in files} | {p.parent.name for p in files}
    stdlib = set(getattr(sys, "stdlib_module_names", ()))
    refs: dict[str, PackageRef] = {}
    for path in files:
        text = _read(path, root, warnings)
        if text is None:
            continue
        for m in _IMPORT.finditer(text):
            name = m.group(1) or m.group(2)
            if name in stdlib or name in local or name == "__future__" or name in refs:
                continue
            refs[name] = PackageRef(name, None, _rel(path, root))
    return list(refs.values())


def collect_package_refs(root: str | os.PathLike, config: ScanConfig | None = None,
                         warnings: list[str] | None = None) -> list[PackageRef]:
    config = config or ScanConfig()
    root = Path(root)
    warnings = warnings if warnings is not None else []
    refs: list[PackageRef] = []
    for path in _walk(root, config):
        if not any(path.match(g) for g in config.manifest_globs):
            continue
        text = _read(path, root, warnings)
        if text is None:
            continue
        rel = _rel(path, root)
        if "[dependencies]" in text:
            refs.extend(parse_dependency_table(text, rel, warnings))
        elif path.suffix == ".txt":
            refs.extend(parse_requirements(text, rel, warnings))
    if config.scan_imports:
        seen = {r.name.lower() for r in refs}
        refs.extend(r for r in _import_refs(root, config, warnings) if r.name.lower() not in seen)
    return refs


_META_PATTERNS = {
    "pyproject.toml": [re.compile(r"^\s*license\s*=\s*[\"']([^\"']+)[\"']", re.M),
                       re.compile(r"^\s*license\s*=\s*\{\s*text\s*=\s*[\"']([^\"']+)[\"']", re.M)],
    "setup.cfg": [re.compile(r"^\s*license\s*=\s*(.+?)\s*$", re.M)],
    "setup.py": [re.compile(r"\blicense\s*=\s*[\"']([^\"']+)[\"']")],
    "package.json": [re.compile(r"\"license\"\s*:\s*\"([^\"]+)\"")],
    "Cargo.toml": [re.compile(r"^\s*license\s*=\s*[\"']([^\"']+)[\"']", re.M)],
}


def metadata_references(root: str | os.PathLike, config: ScanConfig | None = None,
                        warnings: list[str] | None = None) -> list[tuple[str, str]]:
    """(origin, mention) pairs for license names declared in project metadata files."""
    config = config or ScanConfig()
    root = Path(root)
    warnings = warnings if warnings is not None else []
    out = []
    for path in _walk(root, config):
        if path.name not in config.metadata_files or path.name not in _META_PATTERNS:
            continue
        text = _read(path, root, warnings)
        if text is None:
            continue
        for pat in _META_PATTERNS[path.name]:
            for m in pat.finditer(text):
                out.append((_rel(path, root), m.group(1).strip()))
    return out


# ---------------------------------------------------------------------- scanning


def _dedup(instances: list[LicenseInstance], warnings: list[str]) -> list[LicenseInstance]:
    seen: dict[tuple[Kind, str], LicenseInstance] = {}
    out = []
    for inst in sorted(instances, key=lambda i: (i.origin, i.kind.value)):
        key = (inst.kind, " ".join(inst.text.split()))
        first = seen.get(key)
        if first is not None:
            warnings.append(f"duplicate {inst.kind.value.lower()} license text: {inst.origin} same as {first.origin}")
            continue
        seen[key] = inst
        out.append(inst)
    return out


def scan_project(
    root: str | os.PathLike,
    config: ScanConfig | None = None,
    db: SpdxDb | None = None,
    resolver: PackageResolver | None = None,
) -> ProjectScan:
    """Extract every license in the tree at ``root``.

    Referenced licenses come from metadata mentions, SPDX tags and (when a
    ``resolver`` is given) package manifests.
    """
    from licscan.registry import default_db, resolve_reference

    config = config or ScanConfig()
    root_path = Path(root)
    if not root_path.is_dir():
        raise RootNotFound(str(root))
    db = db or default_db()
    warnings: list[str] = []

    instances = extract_declared(root_path, config, warnings)
    sources = [p for p in _walk(root_path, config) if p.suffix.lower() in {e.lower() for e in config.source_extensions}]

    def per_file(path: Path) -> tuple[list[LicenseInstance], list[str], list[str]]:
        w: list[str] = []
        found = extract_inline(path, root_path, config, w)
        tags = spdx_tags(path, root_path, config, [])
        return found, tags, w

    with ThreadPoolExecutor(max_workers=max(1, config.max_workers)) as pool:
        results = list(pool.map(per_file, sources))
    mentions = metadata_references(root_path, config, warnings)
    for path, (found, tags, w) in zip(sources, results):
        instances.extend(found)
        warnings.extend(w)
        mentions.extend((_rel(path, root_path), t) for t in tags)

    for origin, mention in mentions:
        inst = resolve_reference(mention, db, origin)
        if inst is None:
            warnings.append(f"{origin}: unresolved license reference {mention!r}")
        else:
            instances.append(inst)

    refs = collect_package_refs(root_path, config, warnings)
    if resolver is not None:
        for ref in refs:
            inst = resolver.resolve(ref)
            if inst is not None:
                instances.append(inst)
        warnings.extend(resolver.warnings)
        resolver.warnings.clear()

    instances = _dedup(instances, warnings)
    pls = [i for i in instances if i.role is Role.PL]
    if len(pls) > 1:
        warnings.append("multiple project license files: " + ", ".join(i.origin for i in pls))
    return ProjectScan(str(root_path), instances, refs, warnings)
