"""Dataset manifests, signature files and the bundled fixtures."""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Optional, Sequence

from .detection import LabeledTrace
from .errors import ManifestError
from .filtering import FilterConfig, apply_filter, tokenize
from .ingest import PCAP_MAGIC, PCAP_MAGIC_SWAPPED, PCAPNG_MAGIC, parse_pcap, read_token_csv
from .mining import MiningParams, Signature
from .model import EventClass

BUNDLED_PREFIX = "bundled:"
BUNDLED = {
    "oslo": "oslo/manifest.json",
    "drammen": "drammen/manifest.json",
    "reference": "reference_signatures.json",
}


@dataclass(frozen=True)
class ManifestEntry:
    path: str
    event: EventClass
    environment: str
    id: str


@dataclass(frozen=True)
class DatasetManifest:
    entries: tuple[ManifestEntry, ...]
    base_dir: Path
    filter_config: Optional[FilterConfig] = None
    mining_params: Optional[MiningParams] = None

    def resolve(self, entry: ManifestEntry) -> Path:
        p = Path(entry.path)
        return p if p.is_absolute() else self.base_dir / p

    def events(self) -> list[EventClass]:
        return [e for e in EventClass if any(x.event == e for x in self.entries)]


def data_path(relative: str) -> Path:
    return Path(str(resources.files("sizesig") / "data" / relative))


def resolve_path(location: str | Path) -> Path:
    """Expand ``bundled:oslo``, ``bundled:drammen`` and ``bundled:reference``."""
    s = str(location)
    if s.startswith(BUNDLED_PREFIX):
        name = s[len(BUNDLED_PREFIX):]
        if name not in BUNDLED:
            raise ManifestError(f"unknown bundled dataset {name!r}; choose from {sorted(BUNDLED)}")
        return data_path(BUNDLED[name])
    return Path(s)


def parse_manifest(doc: dict, base_dir: Path) -> DatasetManifest:
    try:
        raw_entries = doc["entries"]
    except (KeyError, TypeError):
        raise ManifestError("manifest must be an object with an 'entries' list") from None
    entries = []
    seen = set()
    for i, e in enumerate(raw_entries):
        try:
            entry = ManifestEntry(
                path=str(e["path"]),
                event=EventClass.parse(e["event"]),
                environment=str(e["environment"]),
                id=str(e["id"]),
            )
        except (KeyError, ValueError, TypeError) as exc:
            raise ManifestError(f"entry {i}: {exc}") from None
        if entry.id in seen:
            raise ManifestError(f"duplicate trace id {entry.id!r}")
        seen.add(entry.id)
        entries.append(entry)
    defaults = doc.get("defaults") or {}
    try:
        fc = FilterConfig.from_dict(defaults["filter"]) if defaults.get("filter") else None
        mp = MiningParams.from_dict(defaults["mining"]) if defaults.get("mining") else None
    except (ValueError, KeyError) as exc:
        raise ManifestError(f"bad defaults: {exc}") from None
    return DatasetManifest(tuple(entries), base_dir, fc, mp)


def load_manifest(path: str | Path) -> DatasetManifest:
    p = resolve_path(path)
    try:
        doc = json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ManifestError(f"{p}: invalid JSON: {exc}") from None
    return parse_manifest(doc, p.parent)


def _looks_like_pcap(head: bytes) -> bool:
    if len(head) < 4:
        return False
    magic = int.from_bytes(head[:4], "little")
    return magic in (PCAP_MAGIC, PCAP_MAGIC_SWAPPED, PCAPNG_MAGIC)


def load_trace(manifest: DatasetManifest, entry: ManifestEntry) -> LabeledTrace:
    path = manifest.resolve(entry)
    raw = path.read_bytes()
    if _looks_like_pcap(raw[:4]):
        config = manifest.filter_config
        if config is None or config.profile is None:
            raise ManifestError(f"{path}: pcap entries need defaults.filter.profile in the manifest")
        trace = parse_pcap(raw, config.profile, source_label=str(path))
        tokens = tokenize(apply_filter(trace, config)[0])
    else:
        tokens = read_token_csv(raw.decode("utf-8"))
    return LabeledTrace(tuple(tokens), entry.event, entry.environment, entry.id)


def load_traces(manifest: DatasetManifest) -> list[LabeledTrace]:
    return [load_trace(manifest, e) for e in manifest.entries]


def dump_signatures(signatures: Sequence[Signature]) -> str:
    return json.dumps([s.to_dict() for s in signatures], indent=2) + "\n"


def parse_signatures(text: str) -> list[Signature]:
    if not text.strip():
        return []
    doc = json.loads(text)
    if isinstance(doc, dict):
        doc = doc.get("signatures", [])
    return [Signature.from_dict(d) for d in doc]


def load_signatures(path: str | Path) -> list[Signature]:
    return parse_signatures(resolve_path(path).read_text(encoding="utf-8"))


def bundled_traces(name: str) -> list[LabeledTrace]:
    return load_traces(load_manifest(BUNDLED_PREFIX + name))


def reference_signatures() -> list[Signature]:
    return load_signatures(BUNDLED_PREFIX + "reference")
