"""Text codec for boolean grids (mask and edge-map files).

Layout: one header line ``<TAG> <H> <W> [fields...]`` followed by H lines of
W characters drawn from ``{0, 1}``. LF line endings throughout.
"""

from __future__ import annotations

import numpy as np

from .errors import MalformedHeader, TruncatedPayload


def dump_grid(tag: str, bits: np.ndarray, fields: list[str] = ()) -> bytes:
    bits = np.asarray(bits, dtype=bool)
    h, w = bits.shape
    header = " ".join([tag, str(h), str(w), *fields])
    rows = ["".join("1" if b else "0" for b in row) for row in bits]
    return ("\n".join([header, *rows]) + "\n").encode("ascii")


def load_grid(data: bytes, tag: str) -> tuple[np.ndarray, list[str]]:
    """Parse a grid file, returning the boolean array and any extra header fields."""
    try:
        text = data.decode("ascii")
    except UnicodeDecodeError as exc:
        raise MalformedHeader(f"{tag} file is not ASCII") from exc
    lines = text.split("\n")
    head = lines[0].split()
    if len(head) < 3 or head[0] != tag:
        raise MalformedHeader(f"expected a {tag} header, got {lines[0][:40]!r}")
    try:
        h, w = int(head[1]), int(head[2])
    except ValueError as exc:
        raise MalformedHeader(f"bad {tag} dimensions") from exc
    if h < 1 or w < 1:
        raise MalformedHeader(f"bad {tag} dimensions {h}x{w}")
    rows = lines[1:1 + h]
    if len(rows) < h or any(len(r) != w for r in rows):
        raise TruncatedPayload(f"{tag} grid shorter than {h}x{w}")
    flat = "".join(rows)
    if set(flat) - {"0", "1"}:
        raise MalformedHeader(f"{tag} grid may only contain 0/1")
    bits = np.frombuffer(flat.encode("ascii"), dtype=np.uint8).reshape(h, w) == ord("1")
    return bits, head[3:]
