"""File formats: CSV matrices and label files, binary PPM images, manifests.

Matrices are written one feature per row, comma-separated, with 17 significant
digits so float64 values round-trip exactly.  Images are binary PPM ("P6",
maxval 255) only.  Every command drops a JSON manifest next to its outputs so
a result can be regenerated from the manifest alone.
"""

import json
from pathlib import Path

import numpy as np

from . import linalg
from .classify import LabelPartition


def write_matrix_csv(path, m) -> None:
    m = linalg.as_matrix(m, "matrix")
    lines = [",".join(format(v, ".17g") for v in row) for row in m]
    Path(path).write_text("\n".join(lines) + "\n")


def read_matrix_csv(path) -> np.ndarray:
    """Parse a matrix CSV; one optional leading '#' header line is skipped."""
    path = Path(path)
    rows = []
    width = None
    with path.open() as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                if lineno == 1:
                    continue
                raise ValueError(f"{path}:{lineno}: '#' lines only allowed as header")
            fields = line.split(",")
            if width is None:
                width = len(fields)
            elif len(fields) != width:
                raise ValueError(
                    f"{path}:{lineno}: expected {width} fields, got {len(fields)}"
                )
            try:
                rows.append([float(v) for v in fields])
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
    if not rows:
        raise ValueError(f"{path}: no data rows")
    m = np.asarray(rows, dtype=np.float64)
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{path}: non-finite values")
    return m


def write_labels(path, indices) -> None:
    """Write ground-truth inlier indices, 0-based, sorted, one per line."""
    idx = np.unique(np.asarray(indices, dtype=np.intp))
    Path(path).write_text("".join(f"{i}\n" for i in idx))


def read_labels(path) -> np.ndarray:
    path = Path(path)
    values = []
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        try:
            values.append(int(line))
        except ValueError:
            raise ValueError(f"{path}:{lineno}: not an integer: {line!r}") from None
    idx = np.asarray(sorted(values), dtype=np.intp)
    if idx.size and idx[0] < 0:
        raise ValueError(f"{path}: negative index")
    if np.unique(idx).size != idx.size:
        raise ValueError(f"{path}: duplicate indices")
    return idx


def write_partition_csv(path, partition: LabelPartition) -> None:
    """Write one 'index,label' line per point, label G (inlier) or B."""
    mask = partition.inlier_mask()
    lines = [f"{i},{'G' if mask[i] else 'B'}" for i in range(partition.n)]
    Path(path).write_text("\n".join(lines) + "\n")


def read_partition_csv(path) -> LabelPartition:
    path = Path(path)
    entries = {}
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != 2 or parts[1] not in ("G", "B"):
            raise ValueError(f"{path}:{lineno}: expected 'index,G|B', got {line!r}")
        try:
            i = int(parts[0])
        except ValueError:
            raise ValueError(f"{path}:{lineno}: bad index {parts[0]!r}") from None
        if i in entries:
            raise ValueError(f"{path}:{lineno}: duplicate index {i}")
        entries[i] = parts[1]
    n = len(entries)
    if n == 0:
        raise ValueError(f"{path}: empty partition")
    if sorted(entries) != list(range(n)):
        raise ValueError(f"{path}: indices must cover 0..{n - 1} exactly once")
    mask = np.array([entries[i] == "G" for i in range(n)])
    return LabelPartition.from_inlier_mask(mask)


# --- binary PPM (P6, maxval 255) ---


def _next_token(data: bytes, pos: int) -> tuple[bytes, int]:
    # Skip whitespace and '#' comment lines between header tokens.
    while pos < len(data):
        c = data[pos : pos + 1]
        if c.isspace():
            pos += 1
        elif c == b"#":
            while pos < len(data) and data[pos : pos + 1] != b"\n":
                pos += 1
        else:
            break
    start = pos
    while pos < len(data) and not data[pos : pos + 1].isspace():
        pos += 1
    if start == pos:
        raise ValueError("unexpected end of PPM header")
    return data[start:pos], pos


def read_ppm(path) -> np.ndarray:
    """Read a binary PPM into a (height, width, 3) uint8 array."""
    path = Path(path)
    data = path.read_bytes()
    try:
        magic, pos = _next_token(data, 0)
        if magic != b"P6":
            raise ValueError(f"bad magic {magic!r}, expected b'P6'")
        fields = []
        for _ in range(3):
            token, pos = _next_token(data, pos)
            fields.append(int(token))
        width, height, maxval = fields
        if width < 1 or height < 1:
            raise ValueError(f"bad dimensions {width}x{height}")
        if maxval != 255:
            raise ValueError(f"maxval must be 255, got {maxval}")
        # Exactly one whitespace byte separates the header from the payload.
        if pos >= len(data) or not data[pos : pos + 1].isspace():
            raise ValueError("missing whitespace after maxval")
        payload = data[pos + 1 :]
        expected = 3 * width * height
        if len(payload) != expected:
            raise ValueError(
                f"payload is {len(payload)} bytes, expected {expected}"
            )
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from None
    return np.frombuffer(payload, dtype=np.uint8).reshape(height, width, 3)


def write_ppm(path, img: np.ndarray) -> None:
    img = np.asarray(img, dtype=np.uint8)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError(f"image must have shape (h, w, 3), got {img.shape}")
    height, width = img.shape[:2]
    header = f"P6\n{width} {height}\n255\n".encode()
    Path(path).write_bytes(header + img.tobytes())


def image_to_points(img: np.ndarray) -> np.ndarray:
    """Pixels as a 3-by-(w*h) float matrix, one RGB column per pixel (row-major)."""
    img = np.asarray(img)
    return img.reshape(-1, 3).T.astype(np.float64)


def luminance(img: np.ndarray) -> np.ndarray:
    """Rec. 601 luma of an RGB image as uint8, shape (h, w)."""
    rgb = np.asarray(img, dtype=np.float64)
    luma = 0.299 * rgb[..., 0] + 0.587 * rgb[..., 1] + 0.114 * rgb[..., 2]
    return np.clip(np.rint(luma), 0, 255).astype(np.uint8)


def write_manifest(path, payload: dict) -> None:
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def read_manifest(path) -> dict:
    return json.loads(Path(path).read_text())
