"""Enrolment store: labelled edge maps persisted as a manifest plus grid files.

Directory layout::

    manifest        version line, edge-params line, one ``entry`` line per
                    print, closing ``checksum`` line
    e-<hash>.edge   one EDGE grid file per entry

Saves go through temp files and ``os.replace`` with the manifest written
last, so an interrupted save leaves the previous store readable. There is no
support for concurrent writers.
"""

from __future__ import annotations

import hashlib
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from types import MappingProxyType
from typing import Mapping
from urllib.parse import quote, unquote

from .edges import EdgeMap, EdgeParams, detect_edges, dump_edge_map, load_edge_map
from .errors import (
    CorruptManifest,
    DuplicateLabel,
    EmptyLabel,
    MalformedHeader,
    ParamsMismatch,
    TruncatedPayload,
    VersionMismatch,
)
from .imaging import GrayImage, write_pgm
from .matching import DEFAULT_THRESHOLD, MatchReport
from .matching import identify as _identify

VERSION = "SPARSEPRINT-GALLERY-1"
MANIFEST = "manifest"


def digest64(data: bytes) -> str:
    return hashlib.blake2b(data, digest_size=8).hexdigest()


@dataclass(frozen=True)
class GalleryEntry:
    label: str
    edge_map: EdgeMap
    image_digest: str
    params_digest: str


@dataclass(frozen=True)
class Gallery:
    edge_params: EdgeParams = EdgeParams()
    entries: Mapping[str, GalleryEntry] = field(default_factory=dict)

    def __post_init__(self) -> None:
        want = self.edge_params.digest()
        for label, entry in self.entries.items():
            if label != entry.label:
                raise ValueError(f"entry keyed {label!r} carries label {entry.label!r}")
            if entry.params_digest != want:
                raise ParamsMismatch(f"entry {label!r} was enrolled with other edge params")
        object.__setattr__(self, "entries", MappingProxyType(dict(sorted(self.entries.items()))))

    def __reduce__(self):
        # mappingproxy does not pickle; rebuild from a plain dict
        return (Gallery, (self.edge_params, dict(self.entries)))

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, label: object) -> bool:
        return label in self.entries

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Gallery):
            return NotImplemented
        return self.edge_params == other.edge_params and dict(self.entries) == dict(other.entries)

    def labels(self) -> list[str]:
        return list(self.entries)


def enroll(g: Gallery, label: str, img: GrayImage) -> Gallery:
    """Return a new gallery with ``img``'s edge map stored under ``label``."""
    if not label or not label.strip():
        raise EmptyLabel("label must be a non-empty string")
    if label in g.entries:
        raise DuplicateLabel(f"label {label!r} is already enrolled")
    entry = GalleryEntry(
        label=label,
        edge_map=detect_edges(img, g.edge_params),
        image_digest=digest64(write_pgm(img)),
        params_digest=g.edge_params.digest(),
    )
    return Gallery(g.edge_params, {**g.entries, label: entry})


def identify(
    g: Gallery,
    probe: EdgeMap,
    probe_params: EdgeParams,
    threshold: float = DEFAULT_THRESHOLD,
) -> MatchReport:
    if probe_params.digest() != g.edge_params.digest():
        raise ParamsMismatch(
            f"probe detected with [{probe_params.describe()}], "
            f"gallery uses [{g.edge_params.describe()}]"
        )
    return _identify(probe, ((e.label, e.edge_map) for e in g.entries.values()), threshold)


def _edge_filename(label: str) -> str:
    return f"e-{digest64(label.encode('utf-8'))}.edge"


def dumps(g: Gallery) -> dict[str, bytes]:
    """Serialise to a ``{filename: content}`` mapping (manifest included)."""
    files: dict[str, bytes] = {}
    lines = [VERSION, f"params {g.edge_params.describe()} digest={g.edge_params.digest()}"]
    for entry in g.entries.values():
        name = _edge_filename(entry.label)
        blob = dump_edge_map(entry.edge_map)
        files[name] = blob
        lines.append(" ".join([
            "entry",
            quote(entry.label, safe=""),
            str(entry.edge_map.height),
            str(entry.edge_map.width),
            entry.image_digest,
            entry.params_digest,
            name,
            digest64(blob),
        ]))
    body = ("\n".join(lines) + "\n").encode("utf-8")
    files[MANIFEST] = body + f"checksum {digest64(body)}\n".encode("ascii")
    return files


def loads(files: Mapping[str, bytes]) -> Gallery:
    try:
        raw = files[MANIFEST]
    except KeyError:
        raise CorruptManifest("no manifest") from None
    first = raw.split(b"\n", 1)[0]
    if first != VERSION.encode():
        if first.startswith(b"SPARSEPRINT-GALLERY-"):
            raise VersionMismatch(f"unsupported gallery version {first.decode(errors='replace')}")
        raise CorruptManifest("manifest does not start with a gallery version line")
    body, sep, tail = raw.rstrip(b"\n").rpartition(b"\n")
    body += sep
    if not tail.startswith(b"checksum ") or tail[9:].decode("ascii", "replace") != digest64(body):
        raise CorruptManifest("manifest checksum does not match its contents")

    lines = body.decode("utf-8").splitlines()
    if len(lines) < 2 or not lines[1].startswith("params "):
        raise CorruptManifest("missing edge-params line")
    params_text, _, params_digest = lines[1][len("params "):].rpartition(" digest=")
    try:
        params = EdgeParams.parse(params_text)
    except MalformedHeader as exc:
        raise CorruptManifest(str(exc)) from exc
    if params.digest() != params_digest:
        raise CorruptManifest("edge-params digest mismatch")

    entries = {}
    for line in lines[2:]:
        parts = line.split(" ")
        if len(parts) != 8 or parts[0] != "entry":
            raise CorruptManifest(f"bad entry line {line!r}")
        _, qlabel, h, w, image_digest, entry_params, name, blob_digest = parts
        label = unquote(qlabel)
        blob = files.get(name)
        if blob is None or digest64(blob) != blob_digest:
            raise CorruptManifest(f"edge file for {label!r} is missing or altered")
        try:
            em = load_edge_map(blob)
        except (MalformedHeader, TruncatedPayload) as exc:
            raise CorruptManifest(f"edge file for {label!r}: {exc}") from exc
        if em.shape != (int(h), int(w)):
            raise CorruptManifest(f"edge map for {label!r} has shape {em.shape}")
        if entry_params != params_digest:
            raise CorruptManifest(f"entry {label!r} enrolled with other edge params")
        if label in entries:
            raise CorruptManifest(f"duplicate label {label!r}")
        entries[label] = GalleryEntry(label, em, image_digest, entry_params)
    return Gallery(params, entries)


def save(g: Gallery, directory: str | os.PathLike) -> None:
    root = Path(directory)
    root.mkdir(parents=True, exist_ok=True)
    files = dumps(g)
    manifest = files.pop(MANIFEST)
    for name, blob in files.items():
        _atomic_write(root / name, blob)
    _atomic_write(root / MANIFEST, manifest)
    for stale in root.glob("e-*.edge"):
        if stale.name not in files:
            stale.unlink()


def load(directory: str | os.PathLike) -> Gallery:
    root = Path(directory)
    if not (root / MANIFEST).is_file():
        raise FileNotFoundError(f"no gallery manifest in {root}")
    files = {p.name: p.read_bytes() for p in root.glob("e-*.edge")}
    files[MANIFEST] = (root / MANIFEST).read_bytes()
    return loads(files)


def open_or_create(directory: str | os.PathLike, edge_params: EdgeParams) -> Gallery:
    """Load an existing store, or start an empty one with ``edge_params``."""
    if (Path(directory) / MANIFEST).is_file():
        return load(directory)
    return Gallery(edge_params)


def _atomic_write(path: Path, data: bytes) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
