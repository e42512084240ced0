"""Resolution of referenced licenses: SPDX names/URLs and package metadata."""

from __future__ import annotations

import json
import logging
import os
import re
import threading
import urllib.error
import urllib.parse
import urllib.request
from dataclasses import dataclass, field
from datetime import datetime, timezone
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Protocol

from licscan.extraction import Kind, LicenseInstance, PackageRef, Role
from licscan.preprocess import comparison_form, fold_text

log = logging.getLogger(__name__)

SPDX_DB_ENV = "LIDETECT_SPDX_DB"
MAX_REFERENCE_LEN = 200


class RegistryError(Exception):
    pass


class RemoteUnavailable(RegistryError):
    pass


@dataclass(frozen=True)
class SpdxEntry:
    id: str
    name: str
    canonical_text: str
    aliases: tuple[str, ...] = ()
    urls: tuple[str, ...] = ()


_DROP_WORDS = {"the", "license", "licence", "version", "v", "public"}


def _ref_key(text: str) -> str:
    """Loose lookup key: 'Apache License, Version 2.0' -> 'apache 2.0'."""
    text = text.casefold().replace("licence", "license")
    text = re.sub(r"(?<=[a-z])v(?=\d)", " ", text)  # GPLv3 -> gpl 3
    words = re.findall(r"[a-z0-9]+(?:\.[0-9]+)*|\+", text.replace("-", " ").replace("_", " "))
    words = [w for w in words if w not in _DROP_WORDS]
    # "2" and "2.0" name the same version
    words = [w[:-2] if re.fullmatch(r"\d+\.0", w) else w for w in words]
    return " ".join(words)


def _url_key(url: str) -> str:
    parts = urllib.parse.urlsplit(url.strip().casefold())
    host = parts.netloc.removeprefix("www.")
    path = re.sub(r"\.(html?|txt|php)$", "", parts.path.rstrip("/"))
    return host + path


_URL_PATTERNS = [
    re.compile(r"^opensource\.org/licenses?/([^/]+)$"),
    re.compile(r"^spdx\.org/licenses/([^/]+)$"),
    re.compile(r"^choosealicense\.com/licenses/([^/]+)$"),
    re.compile(r"^tldrlegal\.com/license/([^/]+)$"),
    re.compile(r"^creativecommons\.org/licenses/([a-z-]+)/(\d\.\d)(?:/.*)?$"),
    re.compile(r"^gnu\.org/licenses/(?:old-licenses/)?([a-z]+-\d\.\d)(?:\.[a-z]+)?$"),
    re.compile(r"^apache\.org/licenses/license-(\d\.\d)$"),
]


class SpdxDb:
    """Official license texts keyed by SPDX id, with name/alias/URL lookup tables."""

    def __init__(self, entries: dict[str, SpdxEntry]):
        self.entries = dict(sorted(entries.items()))
        self._keys: dict[str, str] = {}
        self._urls: dict[str, str] = {}
        for e in self.entries.values():
            if not e.canonical_text.strip():
                raise RegistryError(f"{e.id}: empty canonical text")
            for key in {_ref_key(e.id), _ref_key(e.name), *(_ref_key(a) for a in e.aliases)}:
                owner = self._keys.setdefault(key, e.id)
                if owner != e.id:
                    raise RegistryError(f"alias {key!r} of {e.id} collides with {owner}")
            for url in e.urls:
                self._urls[_url_key(url)] = e.id
        self._forms: dict[str, str] = {}
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, spdx_id: str) -> bool:
        return spdx_id in self.entries

    def __getitem__(self, spdx_id: str) -> SpdxEntry:
        return self.entries[spdx_id]

    def comparison_form(self, spdx_id: str) -> str:
        form = self._forms.get(spdx_id)
        if form is None:
            form = comparison_form(self.entries[spdx_id].canonical_text)[0]
            with self._lock:
                self._forms[spdx_id] = form
        return form

    def lookup(self, ref_text: str) -> str | None:
        """SPDX id for a short name, alias or URL mention."""
        text = ref_text.strip().strip("\"'<>()[]")
        if not text:
            return None
        if re.match(r"^(https?://|www\.)", text, re.I):
            return self._lookup_url(text if "://" in text else "https://" + text)
        return self._keys.get(_ref_key(text))

    def _lookup_url(self, url: str) -> str | None:
        key = _url_key(url)
        if key in self._urls:
            return self._urls[key]
        for pat in _URL_PATTERNS:
            m = pat.match(key)
            if not m:
                continue
            if pat.pattern.startswith("^apache"):
                return self._keys.get(_ref_key(f"apache {m.group(1)}"))
            if pat.pattern.startswith("^creativecommons"):
                return self._keys.get(_ref_key(f"cc {m.group(1)} {m.group(2)}"))
            return self._keys.get(_ref_key(m.group(1)))
        return None

    @classmethod
    def load(cls, path: str | os.PathLike) -> SpdxDb:
        """Load a directory holding ``index.json`` and the text files it names."""
        root = Path(path)
        index = json.loads((root / "index.json").read_text("utf-8"))
        entries = {}
        for item in index:
            if item["id"] in entries:
                raise RegistryError(f"duplicate SPDX id {item['id']}")
            text = fold_text((root / item["file"]).read_text("utf-8")).strip()
            entries[item["id"]] = SpdxEntry(
                item["id"], item["name"], text, tuple(item.get("aliases", ())), tuple(item.get("urls", ()))
            )
        return cls(entries)


@lru_cache(maxsize=1)
def _bundled() -> SpdxDb:
    with resources.as_file(resources.files("licscan.data").joinpath("spdx")) as path:
        return SpdxDb.load(path)


def default_db(path: str | os.PathLike | None = None) -> SpdxDb:
    """The SPDX db at ``path``, else ``$LIDETECT_SPDX_DB``, else the bundled one."""
    path = path or os.environ.get(SPDX_DB_ENV)
    return SpdxDb.load(path) if path else _bundled()


def resolve_reference(ref_text: str, db: SpdxDb, origin: str = "") -> LicenseInstance | None:
    """Map a license name/URL mention to a Referenced instance carrying the official text."""
    if len(ref_text) > MAX_REFERENCE_LEN:
        return None
    spdx_id = db.lookup(ref_text)
    if spdx_id is None:
        return None
    return LicenseInstance(
        Kind.REFERENCED, origin or f"spdx:{spdx_id}", db[spdx_id].canonical_text, Role.CL, spdx_id=spdx_id
    )


# ------------------------------------------------------------------ package index


def _norm_pkg(name: str) -> str:
    return re.sub(r"[-_.]+", "-", name).lower()


@dataclass
class SnapshotEntry:
    license_expr: str | None
    retrieved_at: str


@dataclass
class PackageIndexSnapshot:
    """Offline cache of package-index license metadata.

    Keys are normalized package names, optionally suffixed ``==version``.
    """

    entries: dict[str, SnapshotEntry] = field(default_factory=dict)

    @staticmethod
    def key(name: str, version: str | None = None) -> str:
        return _norm_pkg(name) + (f"=={version}" if version else "")

    def get(self, name: str, version: str | None = None) -> SnapshotEntry | None:
        if version:
            hit = self.entries.get(self.key(name, version))
            if hit is not None:
                return hit
        return self.entries.get(self.key(name))

    def put(self, name: str, version: str | None, license_expr: str | None, retrieved_at: str | None = None) -> None:
        stamp = retrieved_at or datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")
        self.entries[self.key(name, version)] = SnapshotEntry(license_expr, stamp)

    def to_json(self) -> str:
        data = {k: {"license_expr": e.license_expr, "retrieved_at": e.retrieved_at} for k, e in sorted(self.entries.items())}
        return json.dumps(data, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> PackageIndexSnapshot:
        data = json.loads(text)
        return cls({k: SnapshotEntry(v.get("license_expr"), v["retrieved_at"]) for k, v in data.items()})

    @classmethod
    def load(cls, path: str | os.PathLike) -> PackageIndexSnapshot:
        return cls.from_json(Path(path).read_text("utf-8"))

    def save(self, path: str | os.PathLike) -> None:
        Path(path).write_text(self.to_json(), "utf-8")


class RemoteLookup(Protocol):
    def request(self, name: str, version: str | None) -> dict | None:
        """Return ``{"license_expr": ...}`` or ``{"text": ...}``, or None when unknown."""


class PyPIRemote:
    """Package-index JSON API client (``{base}/{name}[/{version}]/json``)."""

    def __init__(self, base_url: str = "https://pypi.org/pypi", timeout: float = 10.0):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout

    def request(self, name: str, version: str | None) -> dict | None:
        parts = [urllib.parse.quote(name)] + ([urllib.parse.quote(version)] if version else [])
        url = f"{self.base_url}/{'/'.join(parts)}/json"
        try:
            with urllib.request.urlopen(url, timeout=self.timeout) as resp:
                payload = json.load(resp)
        except urllib.error.HTTPError as exc:
            if exc.code == 404:
                return None
            raise RemoteUnavailable(f"{url}: HTTP {exc.code}") from exc
        except (urllib.error.URLError, TimeoutError, OSError, ValueError) as exc:
            raise RemoteUnavailable(f"{url}: {exc}") from exc
        return license_from_metadata(payload.get("info", {}))


def license_from_metadata(info: dict) -> dict | None:
    """Pick the license statement out of package-index ``info`` metadata."""
    expr = (info.get("license_expression") or "").strip()
    if expr:
        return {"license_expr": expr}
    lic = (info.get("license") or "").strip()
    if lic and lic.upper() not in ("UNKNOWN", "NONE"):
        return {"text": lic} if len(lic) > MAX_REFERENCE_LEN or "\n" in lic else {"license_expr": lic}
    for c in info.get("classifiers") or ():
        if c.startswith("License ::") and c.count("::") >= 2:
            return {"license_expr": c.rsplit("::", 1)[1].strip()}
    return None


_EXPR_OPS = re.compile(r"\s(AND|OR|WITH)\s|[()]")


class PackageResolver:
    """Snapshot-first package license lookup with at most one remote call per key."""

    def __init__(self, snapshot: PackageIndexSnapshot, db: SpdxDb, remote: RemoteLookup | None = None):
        self.snapshot = snapshot
        self.db = db
        self.remote = remote
        self.warnings: list[str] = []
        self._asked: set[str] = set()
        self._lock = threading.Lock()
        self.remote_calls = 0

    def resolve(self, ref: PackageRef) -> LicenseInstance | None:
        origin = f"pypi:{_norm_pkg(ref.name)}" + (f"=={ref.version}" if ref.version else "")
        entry = self.snapshot.get(ref.name, ref.version)
        if entry is None and self.remote is not None:
            entry = self._ask_remote(ref)
        if entry is None or not entry.license_expr:
            self.warnings.append(f"{origin}: no license found for package")
            return None
        expr = entry.license_expr
        if len(expr) > MAX_REFERENCE_LEN or "\n" in expr:
            return LicenseInstance(Kind.REFERENCED, origin, fold_text(expr).strip(), Role.CL)
        if _EXPR_OPS.search(expr):
            self.warnings.append(f"{origin}: compound license expression {expr!r} not resolved")
            return None
        inst = resolve_reference(expr, self.db, origin)
        if inst is None:
            self.warnings.append(f"{origin}: unknown license {expr!r}")
        return inst

    def _ask_remote(self, ref: PackageRef) -> SnapshotEntry | None:
        key = PackageIndexSnapshot.key(ref.name, ref.version)
        with self._lock:
            if key in self._asked:
                return None
            self._asked.add(key)
        self.remote_calls += 1
        try:
            found = self.remote.request(ref.name, ref.version)
        except RemoteUnavailable as exc:
            self.warnings.append(f"remote lookup unavailable: {exc}")
            return None
        if not found:
            return None
        expr = found.get("license_expr") or found.get("text")
        with self._lock:
            self.snapshot.put(ref.name, ref.version, expr)
        return self.snapshot.get(ref.name, ref.version)


def resolve_package(
    ref: PackageRef,
    snapshot: PackageIndexSnapshot,
    remote: RemoteLookup | None = None,
    db: SpdxDb | None = None,
    warnings: list[str] | None = None,
) -> LicenseInstance | None:
    resolver = PackageResolver(snapshot, db or default_db(), remote)
    inst = resolver.resolve(ref)
    if warnings is not None:
        warnings.extend(resolver.warnings)
    return inst
