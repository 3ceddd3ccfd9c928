"""File formats: matrices, dataset manifests, and model persistence.

Two matrix formats are supported.  ``text-csv`` is UTF-8, one row per
line, comma-separated decimal floats, no header (written with 17
significant digits, so values round-trip).  ``binary-v1`` is bit-exact:

    magic "CLAM" | version 0x01 | rows u64 LE | cols u64 LE
    | rows*cols float64 LE, row-major

Models persist in the ``CLAZ`` container:

    magic "CLAZ" | version 0x01 | lambda f64 LE | n_sources u64 LE
    | n_sources x (length u64 LE, UTF-8 name) | n_sources x beta f64 LE
    | A_s as binary-v1 block | fused W_s as binary-v1 block

A dataset manifest is a key-value text file with one ``[semantic_space]``
section per space; all paths are relative to the manifest's directory.
"""

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataset import SemanticSpace, ZslDataset
from .errors import (
    DimensionError,
    FileFormatError,
    ParseError,
    ValidationError,
)
from .model import ClaModel

__all__ = [
    "load_matrix",
    "save_matrix",
    "detect_format",
    "load_labels",
    "save_labels",
    "DatasetManifest",
    "load_manifest",
    "save_manifest",
    "load_dataset",
    "save_dataset",
    "save_model",
    "load_model",
]

MATRIX_MAGIC = b"CLAM"
MODEL_MAGIC = b"CLAZ"
FORMAT_VERSION = 1
FORMATS = ("text-csv", "binary-v1")


def detect_format(path):
    """``text-csv`` for .csv paths, ``binary-v1`` otherwise."""
    return "text-csv" if Path(path).suffix.lower() == ".csv" else "binary-v1"


def load_matrix(path, fmt=None):
    """Load a matrix in the given format (inferred from the suffix if None)."""
    path = Path(path)
    fmt = fmt or detect_format(path)
    if fmt not in FORMATS:
        raise ValidationError(f"unknown matrix format {fmt!r}, expected {FORMATS}")
    if fmt == "text-csv":
        m = _load_csv(path)
    else:
        m = _load_binary(path)
    if not np.all(np.isfinite(m)):
        raise ValidationError(f"{path} contains non-finite values")
    return m


def save_matrix(m, path, fmt=None):
    path = Path(path)
    m = np.ascontiguousarray(np.asarray(m, dtype=np.float64))
    if m.ndim != 2:
        raise DimensionError(f"can only save 2-D matrices, got ndim={m.ndim}")
    if not np.all(np.isfinite(m)):
        raise ValidationError("refusing to save non-finite values")
    fmt = fmt or detect_format(path)
    if fmt == "text-csv":
        lines = [",".join(f"{v:.17g}" for v in row) for row in m]
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    elif fmt == "binary-v1":
        with open(path, "wb") as fh:
            fh.write(_matrix_bytes(m))
    else:
        raise ValidationError(f"unknown matrix format {fmt!r}, expected {FORMATS}")


def _load_csv(path):
    rows = []
    width = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            cells = line.split(",")
            if width is None:
                width = len(cells)
            elif len(cells) != width:
                raise ParseError(
                    f"{path}: line {lineno} has {len(cells)} cells, "
                    f"expected {width}",
                    line=lineno,
                )
            try:
                rows.append([float(c) for c in cells])
            except ValueError as exc:
                raise ParseError(f"{path}: line {lineno}: {exc}", line=lineno)
    if not rows:
        raise ParseError(f"{path}: empty matrix file", line=1)
    return np.asarray(rows, dtype=np.float64)


def _matrix_bytes(m):
    header = MATRIX_MAGIC + bytes([FORMAT_VERSION])
    header += struct.pack("<QQ", m.shape[0], m.shape[1])
    return header + m.astype("<f8").tobytes(order="C")


def _parse_matrix_block(buf, offset, origin):
    if len(buf) < offset + 21:
        raise FileFormatError(f"{origin}: truncated matrix header")
    magic = buf[offset : offset + 4]
    if magic != MATRIX_MAGIC:
        raise FileFormatError(
            f"{origin}: bad matrix magic {magic!r}, expected {MATRIX_MAGIC!r}"
        )
    version = buf[offset + 4]
    if version != FORMAT_VERSION:
        raise FileFormatError(
            f"{origin}: unsupported matrix format version {version}"
        )
    rows, cols = struct.unpack_from("<QQ", buf, offset + 5)
    start = offset + 21
    nbytes = rows * cols * 8
    if len(buf) < start + nbytes:
        raise FileFormatError(
            f"{origin}: truncated matrix payload ({rows}x{cols})"
        )
    data = np.frombuffer(buf[start : start + nbytes], dtype="<f8")
    return data.reshape(rows, cols).copy(), start + nbytes


def _load_binary(path):
    buf = Path(path).read_bytes()
    m, end = _parse_matrix_block(buf, 0, str(path))
    if end != len(buf):
        raise FileFormatError(f"{path}: {len(buf) - end} trailing bytes")
    return m


def load_labels(path):
    """Load an integer label vector stored as a 1-row or 1-column matrix."""
    m = load_matrix(path)
    if 1 not in m.shape:
        raise DimensionError(f"{path}: label file must be a single row or column")
    flat = m.ravel()
    labels = flat.astype(np.int64)
    if not np.all(flat == labels):
        raise ValidationError(f"{path}: labels must be integers")
    return labels


def save_labels(labels, path):
    save_matrix(np.asarray(labels, dtype=np.float64)[None, :], path)


@dataclass(frozen=True)
class DatasetManifest:
    """Declared dataset layout; all paths relative to the manifest file."""

    k_seen: int
    k_unseen: int
    feature_dim: int
    seen_features: str
    seen_labels: str
    unseen_features: str
    semantic_spaces: tuple  # of (name, seen_path, unseen_path)
    unseen_truth: str | None = None


_REQUIRED_KEYS = (
    "k_seen",
    "k_unseen",
    "feature_dim",
    "seen_features",
    "seen_labels",
    "unseen_features",
)


def load_manifest(path):
    path = Path(path)
    top = {}
    spaces = []
    current = top
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if line == "[semantic_space]":
                current = {}
                spaces.append(current)
                continue
            if "=" not in line:
                raise ParseError(
                    f"{path}: line {lineno}: expected key = value", line=lineno
                )
            key, value = (part.strip() for part in line.split("=", 1))
            current[key] = value
    missing = [k for k in _REQUIRED_KEYS if k not in top]
    if missing:
        raise ValidationError(f"{path}: manifest missing keys {missing}")
    if not spaces:
        raise ValidationError(f"{path}: manifest declares no semantic_space")
    parsed_spaces = []
    for i, sec in enumerate(spaces):
        for key in ("name", "seen", "unseen"):
            if key not in sec:
                raise ValidationError(
                    f"{path}: semantic_space #{i + 1} missing '{key}'"
                )
        parsed_spaces.append((sec["name"], sec["seen"], sec["unseen"]))
    try:
        k_seen = int(top["k_seen"])
        k_unseen = int(top["k_unseen"])
        feature_dim = int(top["feature_dim"])
    except ValueError as exc:
        raise ValidationError(f"{path}: {exc}")
    return DatasetManifest(
        k_seen=k_seen,
        k_unseen=k_unseen,
        feature_dim=feature_dim,
        seen_features=top["seen_features"],
        seen_labels=top["seen_labels"],
        unseen_features=top["unseen_features"],
        semantic_spaces=tuple(parsed_spaces),
        unseen_truth=top.get("unseen_truth"),
    )


def save_manifest(manifest, path):
    lines = [
        f"k_seen = {manifest.k_seen}",
        f"k_unseen = {manifest.k_unseen}",
        f"feature_dim = {manifest.feature_dim}",
        f"seen_features = {manifest.seen_features}",
        f"seen_labels = {manifest.seen_labels}",
        f"unseen_features = {manifest.unseen_features}",
    ]
    if manifest.unseen_truth is not None:
        lines.append(f"unseen_truth = {manifest.unseen_truth}")
    for name, seen, unseen in manifest.semantic_spaces:
        lines += [
            "",
            "[semantic_space]",
            f"name = {name}",
            f"seen = {seen}",
            f"unseen = {unseen}",
        ]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_dataset(manifest_path):
    """Load and shape-check a dataset described by a manifest file."""
    manifest_path = Path(manifest_path)
    manifest = (
        manifest_path
        if isinstance(manifest_path, DatasetManifest)
        else load_manifest(manifest_path)
    )
    base = Path(manifest_path).parent
    d, k_s, k_u = manifest.feature_dim, manifest.k_seen, manifest.k_unseen

    x_s = load_matrix(base / manifest.seen_features)
    if x_s.shape[0] != d:
        raise DimensionError(
            f"{base / manifest.seen_features}: expected {d} rows, got "
            f"{x_s.shape[0]}"
        )
    labels = load_labels(base / manifest.seen_labels)
    x_u = load_matrix(base / manifest.unseen_features)
    if x_u.shape[0] != d:
        raise DimensionError(
            f"{base / manifest.unseen_features}: expected {d} rows, got "
            f"{x_u.shape[0]}"
        )
    spaces = []
    for name, seen_rel, unseen_rel in manifest.semantic_spaces:
        seen = load_matrix(base / seen_rel)
        unseen = load_matrix(base / unseen_rel)
        if seen.shape[1] != k_s:
            raise DimensionError(
                f"{base / seen_rel}: expected {k_s} columns, got {seen.shape[1]}"
            )
        if unseen.shape[1] != k_u:
            raise DimensionError(
                f"{base / unseen_rel}: expected {k_u} columns, got "
                f"{unseen.shape[1]}"
            )
        if seen.shape[0] != unseen.shape[0]:
            raise DimensionError(
                f"{base / unseen_rel}: semantic dimension {unseen.shape[0]} "
                f"does not match seen matrix ({seen.shape[0]})"
            )
        spaces.append(SemanticSpace(name=name, seen=seen, unseen=unseen))
    truth = None
    if manifest.unseen_truth is not None:
        truth = load_labels(base / manifest.unseen_truth)
    return ZslDataset(
        seen_features=x_s,
        seen_labels=labels,
        unseen_features=x_u,
        semantic_spaces=tuple(spaces),
        k_seen=k_s,
        k_unseen=k_u,
        unseen_truth=truth,
    )


def save_dataset(dataset, out_dir, manifest_name="manifest.txt"):
    """Write a dataset tree: binary features, CSV labels, and a manifest."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    save_matrix(dataset.seen_features, out / "seen_features.clam")
    save_labels(dataset.seen_labels, out / "seen_labels.csv")
    save_matrix(dataset.unseen_features, out / "unseen_features.clam")
    spaces = []
    for space in dataset.semantic_spaces:
        seen_rel = f"{space.name}_seen.clam"
        unseen_rel = f"{space.name}_unseen.clam"
        save_matrix(space.seen, out / seen_rel)
        save_matrix(space.unseen, out / unseen_rel)
        spaces.append((space.name, seen_rel, unseen_rel))
    truth_rel = None
    if dataset.unseen_truth is not None:
        truth_rel = "unseen_truth.csv"
        save_labels(dataset.unseen_truth, out / truth_rel)
    manifest = DatasetManifest(
        k_seen=dataset.k_seen,
        k_unseen=dataset.k_unseen,
        feature_dim=dataset.feature_dim,
        seen_features="seen_features.clam",
        seen_labels="seen_labels.csv",
        unseen_features="unseen_features.clam",
        semantic_spaces=tuple(spaces),
        unseen_truth=truth_rel,
    )
    save_manifest(manifest, out / manifest_name)
    return out / manifest_name


def save_model(model, path):
    """Persist a trained model to the CLAZ container (bit-exact)."""
    names = [n.encode("utf-8") for n in model.source_names]
    if len(names) != model.beta.size:
        raise ValidationError("model beta length does not match source names")
    parts = [MODEL_MAGIC, bytes([FORMAT_VERSION])]
    parts.append(struct.pack("<d", model.lam))
    parts.append(struct.pack("<Q", len(names)))
    for name in names:
        parts.append(struct.pack("<Q", len(name)))
        parts.append(name)
    parts.append(np.asarray(model.beta, dtype="<f8").tobytes())
    parts.append(_matrix_bytes(np.ascontiguousarray(model.a_s)))
    parts.append(_matrix_bytes(np.ascontiguousarray(model.fused_w_s)))
    Path(path).write_bytes(b"".join(parts))


def load_model(path):
    path = Path(path)
    buf = path.read_bytes()
    if len(buf) < 21:
        raise FileFormatError(f"{path}: truncated model file")
    magic = buf[:4]
    if magic != MODEL_MAGIC:
        raise FileFormatError(
            f"{path}: bad model magic {magic!r}, expected {MODEL_MAGIC!r}"
        )
    if buf[4] != FORMAT_VERSION:
        raise FileFormatError(
            f"{path}: unsupported model version {buf[4]} (supported: "
            f"{FORMAT_VERSION})"
        )
    lam = struct.unpack_from("<d", buf, 5)[0]
    (n_sources,) = struct.unpack_from("<Q", buf, 13)
    offset = 21
    names = []
    for _ in range(n_sources):
        if len(buf) < offset + 8:
            raise FileFormatError(f"{path}: truncated source name table")
        (nlen,) = struct.unpack_from("<Q", buf, offset)
        offset += 8
        if len(buf) < offset + nlen:
            raise FileFormatError(f"{path}: truncated source name")
        names.append(buf[offset : offset + nlen].decode("utf-8"))
        offset += nlen
    nbytes = n_sources * 8
    if len(buf) < offset + nbytes:
        raise FileFormatError(f"{path}: truncated beta vector")
    beta = np.frombuffer(buf[offset : offset + nbytes], dtype="<f8").copy()
    offset += nbytes
    a_s, offset = _parse_matrix_block(buf, offset, str(path))
    w_s, offset = _parse_matrix_block(buf, offset, str(path))
    if offset != len(buf):
        raise FileFormatError(f"{path}: {len(buf) - offset} trailing bytes")
    return ClaModel(
        a_s=a_s,
        fused_w_s=w_s,
        lam=lam,
        source_names=tuple(names),
        beta=beta,
    )
