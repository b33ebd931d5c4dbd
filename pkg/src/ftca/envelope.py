"""Self-describing text envelope for models that cross the domain boundary.

Layout (UTF-8, LF newlines, extension `.ftcamodel`):

    ftca-envelope 1
    kind: <statistical-generator | gan-generator | tca-mapping>
    feature-names: a,b,c
    label-names: x,y
    norm: <column> <minmax|zscore> <p1> <p2> <ok|degenerate>   (repeated)
    meta: <key> <value>                                        (repeated)
    payload-crc32: <unsigned decimal>
    payload:
    array <name> <rows> <cols>
    <cols numbers per row, %.17g, space separated>
    ...
    end

The CRC-32 covers exactly the bytes between the "payload:" line and the
"end" line. 17 significant digits make every float64 round-trip exactly, so
a deserialized model reproduces the original sample-for-sample.
"""

from __future__ import annotations

import zlib

import numpy as np

from .data import ColumnStats, FeatureSchema, NormalizationStats
from .errors import ChecksumError, EnvelopeError, TruncatedError, VersionError

FORMAT_VERSION = 1
MAGIC = "ftca-envelope"
FILE_EXTENSION = ".ftcamodel"


class EnvelopeDoc:
    """Parsed or under-construction envelope content."""

    def __init__(self, kind: str, schema: FeatureSchema):
        self.kind = kind
        self.schema = schema
        self.norm: list[ColumnStats] = []
        self.meta: dict[str, str] = {}
        self.arrays: dict[str, np.ndarray] = {}

    def set_norm(self, stats: NormalizationStats | None) -> None:
        self.norm = list(stats.columns) if stats is not None else []

    def norm_stats(self) -> NormalizationStats | None:
        return NormalizationStats(tuple(self.norm)) if self.norm else None

    def add_array(self, name: str, values: np.ndarray) -> None:
        arr = np.asarray(values, dtype=float)
        if arr.ndim == 1:
            arr = arr[None, :]
        if arr.ndim != 2:
            raise EnvelopeError(f"array {name!r} must be 1-D or 2-D")
        self.arrays[name] = arr

    def array(self, name: str) -> np.ndarray:
        if name not in self.arrays:
            raise EnvelopeError(f"envelope is missing array {name!r}")
        return self.arrays[name]

    def meta_value(self, key: str) -> str:
        if key not in self.meta:
            raise EnvelopeError(f"envelope is missing meta field {key!r}")
        return self.meta[key]


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def encode_envelope(doc: EnvelopeDoc) -> bytes:
    header = [f"{MAGIC} {FORMAT_VERSION}", f"kind: {doc.kind}"]
    header.append("feature-names: " + ",".join(doc.schema.feature_names))
    header.append("label-names: " + ",".join(doc.schema.label_names))
    for c in doc.norm:
        flag = "degenerate" if c.degenerate else "ok"
        header.append(f"norm: {c.name} {c.method} {_fmt(c.p1)} {_fmt(c.p2)} {flag}")
    for key in sorted(doc.meta):
        header.append(f"meta: {key} {doc.meta[key]}")

    payload_lines: list[str] = []
    for name, arr in doc.arrays.items():
        payload_lines.append(f"array {name} {arr.shape[0]} {arr.shape[1]}")
        for row in arr:
            payload_lines.append(" ".join(_fmt(v) for v in row))
    payload = "".join(line + "\n" for line in payload_lines)
    crc = zlib.crc32(payload.encode("utf-8")) & 0xFFFFFFFF
    header.append(f"payload-crc32: {crc}")
    text = "\n".join(header) + "\npayload:\n" + payload + "end\n"
    return text.encode("utf-8")


def decode_envelope(blob: bytes) -> EnvelopeDoc:
    try:
        text = blob.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise EnvelopeError(f"envelope is not valid UTF-8: {exc}") from None

    head, sep, rest = text.partition("\npayload:\n")
    lines = head.split("\n")
    first = lines[0].split()
    if len(first) != 2 or first[0] != MAGIC:
        raise EnvelopeError(f"not an ftca envelope: {lines[0]!r}")
    try:
        version = int(first[1])
    except ValueError:
        raise EnvelopeError(f"bad version field {first[1]!r}") from None
    if version != FORMAT_VERSION:
        raise VersionError(f"unsupported envelope version {version}")
    if not sep:
        raise TruncatedError("envelope has no payload section")
    if not rest.endswith("end\n"):
        raise TruncatedError("envelope payload is not terminated by 'end'")
    payload = rest[: -len("end\n")]

    fields: dict[str, str] = {}
    norm: list[ColumnStats] = []
    meta: dict[str, str] = {}
    for line in lines[1:]:
        if not line:
            continue
        key, _, value = line.partition(": ")
        if key == "norm":
            parts = value.split()
            if len(parts) != 5:
                raise EnvelopeError(f"bad norm line: {line!r}")
            name, method, p1, p2, flag = parts
            try:
                norm.append(ColumnStats(name, method, float(p1), float(p2), flag == "degenerate"))
            except ValueError:
                raise EnvelopeError(f"bad norm parameters: {line!r}") from None
        elif key == "meta":
            mkey, _, mval = value.partition(" ")
            meta[mkey] = mval
        else:
            fields[key] = value

    for required in ("kind", "feature-names", "payload-crc32"):
        if required not in fields:
            raise EnvelopeError(f"envelope is missing header field {required!r}")
    try:
        declared_crc = int(fields["payload-crc32"])
    except ValueError:
        raise EnvelopeError("bad payload-crc32 field") from None
    actual_crc = zlib.crc32(payload.encode("utf-8")) & 0xFFFFFFFF
    if actual_crc != declared_crc:
        raise ChecksumError(f"payload CRC-32 {actual_crc} != declared {declared_crc}")

    features = tuple(n for n in fields["feature-names"].split(",") if n)
    labels = tuple(n for n in fields.get("label-names", "").split(",") if n)
    doc = EnvelopeDoc(fields["kind"], FeatureSchema(features, labels))
    doc.norm = norm
    doc.meta = meta

    plines = payload.split("\n")
    i = 0
    while i < len(plines):
        line = plines[i]
        if not line:
            i += 1
            continue
        parts = line.split()
        if len(parts) != 4 or parts[0] != "array":
            raise EnvelopeError(f"expected an array header, got {line!r}")
        name = parts[1]
        try:
            rows, cols = int(parts[2]), int(parts[3])
        except ValueError:
            raise EnvelopeError(f"bad array shape in {line!r}") from None
        if i + 1 + rows > len(plines):
            raise TruncatedError(f"array {name!r} declares {rows} rows but payload ends early")
        arr = np.empty((rows, cols))
        for r in range(rows):
            cells = plines[i + 1 + r].split()
            if len(cells) != cols:
                raise TruncatedError(
                    f"array {name!r} row {r} has {len(cells)} values, expected {cols}"
                )
            try:
                arr[r] = [float(c) for c in cells]
            except ValueError:
                raise EnvelopeError(f"non-numeric value in array {name!r} row {r}") from None
        doc.arrays[name] = arr
        i += 1 + rows
    return doc
