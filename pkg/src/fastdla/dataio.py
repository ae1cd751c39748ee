"""Image patches, binary matrix files and CSV training reports.

Patch convention: the image is cropped to whole patches (top-left anchored),
patches are scanned left to right then top to bottom, and every patch is
vectorized column by column.  Pixel values are divided by 255 and then each
patch has its mean removed.
"""

from __future__ import annotations

import csv
import os
import struct
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

MATRIX_MAGIC = b"FDLM"
REPORT_HEADER = ("step", "objective", "rel_error_pct")


class PGMError(ValueError):
    pass


class MatrixFormatError(ValueError):
    pass


@dataclass
class PatchDataset:
    patch_side: int
    y: np.ndarray              # (patch_side**2, N)
    means: np.ndarray          # (N,)
    image_shape: tuple[int, int]   # (height, width) before cropping

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def N(self) -> int:
        return self.y.shape[1]


def atomic_write(path, data: bytes) -> None:
    """Write through a temporary file in the same directory, then rename."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# -- PGM ------------------------------------------------------------------

def _header_tokens(buf: bytes, count: int) -> tuple[list[bytes], int]:
    tokens, pos = [], 0
    while len(tokens) < count:
        while pos < len(buf) and buf[pos:pos + 1].isspace():
            pos += 1
        if pos >= len(buf):
            raise PGMError("truncated PGM header")
        if buf[pos:pos + 1] == b"#":
            while pos < len(buf) and buf[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(buf) and not buf[pos:pos + 1].isspace() and buf[pos:pos + 1] != b"#":
            pos += 1
        tokens.append(buf[start:pos])
    return tokens, pos + 1  # exactly one whitespace byte ends the header


def parse_pgm(buf: bytes) -> np.ndarray:
    tokens, pos = _header_tokens(buf, 4)
    if tokens[0] != b"P5":
        raise PGMError(f"bad magic {tokens[0]!r}, expected P5")
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError as exc:
        raise PGMError("non-integer PGM header field") from exc
    if width < 1 or height < 1:
        raise PGMError("PGM dimensions must be positive")
    if not 0 < maxval <= 255:
        raise PGMError(f"maxval {maxval} not supported (must be <= 255)")
    payload = buf[pos:pos + width * height]
    if len(payload) < width * height:
        raise PGMError("truncated PGM payload")
    return np.frombuffer(payload, dtype=np.uint8).reshape(height, width).copy()


def read_pgm(path) -> np.ndarray:
    """Binary 8-bit PGM as a ``(height, width)`` uint8 array."""
    return parse_pgm(Path(path).read_bytes())


def encode_pgm(image) -> bytes:
    img = np.asarray(image)
    if img.ndim != 2:
        raise ValueError("PGM images are 2-D")
    if img.dtype != np.uint8:
        if img.min() < 0 or img.max() > 255:
            raise ValueError("PGM samples must lie in [0, 255]")
        img = img.astype(np.uint8)
    h, w = img.shape
    return f"P5\n{w} {h}\n255\n".encode("ascii") + np.ascontiguousarray(img).tobytes()


def write_pgm(path, image) -> None:
    atomic_write(path, encode_pgm(image))


# -- patches --------------------------------------------------------------

def extract_patches(image, patch_side: int = 8) -> PatchDataset:
    img = np.asarray(image)
    if img.ndim != 2:
        raise ValueError("expected a grayscale image")
    if img.size and (np.any(img != np.round(img)) or img.min() < 0 or img.max() > 255):
        raise ValueError("expected 8-bit samples (integers in [0, 255])")
    h, w = img.shape
    if patch_side < 1 or h < patch_side or w < patch_side:
        raise ValueError(f"image {h}x{w} is smaller than one {patch_side}x{patch_side} patch")
    rows, cols = h // patch_side, w // patch_side
    crop = img[:rows * patch_side, :cols * patch_side].astype(np.int64)
    # blocks[r, c, a, b] = crop[r*ps + a, c*ps + b]
    blocks = crop.reshape(rows, patch_side, cols, patch_side).transpose(0, 2, 1, 3)
    # column-major within a patch: index a + b*ps
    raw = blocks.transpose(0, 1, 3, 2).reshape(rows * cols, patch_side * patch_side).T
    # center in integers so flat patches come out exactly zero
    size = patch_side * patch_side
    sums = raw.sum(axis=0)
    y = (size * raw - sums).astype(float) / (size * 255.0)
    means = sums / (size * 255.0)
    return PatchDataset(patch_side, y, means, (h, w))


def reassemble_patches(ds: PatchDataset) -> np.ndarray:
    """Rebuild the cropped 8-bit image from patches and their stored means."""
    ps = ds.patch_side
    h, w = ds.image_shape
    rows, cols = h // ps, w // ps
    vals = (ds.y + ds.means) * 255.0
    blocks = vals.T.reshape(rows, cols, ps, ps).transpose(0, 1, 3, 2)
    img = blocks.transpose(0, 2, 1, 3).reshape(rows * ps, cols * ps)
    return np.clip(np.rint(img), 0, 255).astype(np.uint8)


def concat_patches(datasets: list[PatchDataset]) -> np.ndarray:
    return np.concatenate([d.y for d in datasets], axis=1)


# -- FDLM matrices --------------------------------------------------------

def encode_matrix(m) -> bytes:
    a = np.asarray(m, dtype="<f8")
    if a.ndim != 2 or a.shape[0] == 0 or a.shape[1] == 0:
        raise MatrixFormatError(f"cannot store a matrix of shape {a.shape}")
    rows, cols = a.shape
    return MATRIX_MAGIC + struct.pack("<II", rows, cols) + a.tobytes(order="F")


def decode_matrix(buf: bytes) -> np.ndarray:
    if buf[:4] != MATRIX_MAGIC:
        raise MatrixFormatError("bad magic, expected FDLM")
    if len(buf) < 12:
        raise MatrixFormatError("truncated header")
    rows, cols = struct.unpack("<II", buf[4:12])
    if rows == 0 or cols == 0:
        raise MatrixFormatError("empty matrix")
    if len(buf) != 12 + 8 * rows * cols:
        raise MatrixFormatError(f"size mismatch: {rows}x{cols} needs {8 * rows * cols} "
                                f"payload bytes, found {len(buf) - 12}")
    return np.frombuffer(buf, dtype="<f8", offset=12).reshape((rows, cols), order="F").astype(float)


def write_matrix(path, m) -> None:
    atomic_write(path, encode_matrix(m))


def read_matrix(path) -> np.ndarray:
    return decode_matrix(Path(path).read_bytes())


# -- reports --------------------------------------------------------------

def report_rows(report) -> list[tuple[int, float, float]]:
    pct = report.rel_error_pct
    return [(k, obj, pct[k]) for k, obj in enumerate(report.objective)]


def encode_report_csv(report) -> bytes:
    lines = [",".join(REPORT_HEADER)]
    for k, obj, pct in report_rows(report):
        lines.append(f"{k},{obj!r},{pct!r}")
    return ("\n".join(lines) + "\n").encode("utf-8")


def export_report_csv(report, path) -> None:
    atomic_write(path, encode_report_csv(report))


def read_report_csv(path) -> list[tuple[int, float, float]]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != REPORT_HEADER:
            raise ValueError(f"unexpected report header {header}")
        return [(int(a), float(b), float(c)) for a, b, c in reader]
