"""File formats.

MVI layout (all little-endian)::

    offset  size  field
    0       4     magic b"MVI1"
    4       1     kind tag (0 Euclidean, 1 S1, 2 S2, 3 SO3, 4 SPD)
    5       2     dim_param, uint16 (n for Euclidean/SPD, else 0)
    7       4     height, uint32
    11      4     width, uint32
    15      ...   height * width * elem_len float64, row-major pixels,
                  row-major matrix entries

Grayscale images and masks are binary 8-bit PGM (P5); renders are PPM (P6).
Contours are text: one ``x y`` vertex per line, polylines separated by a
blank line.
"""

import struct

import numpy as np

from .errors import (
    BadMagicError,
    FormatError,
    PixelInvariantError,
    TruncatedError,
    UnsupportedFormatError,
)
from .geometry import manifold_from_tag
from .image import ManifoldImage

MVI_MAGIC = b"MVI1"
_HEADER = struct.Struct("<4sBHII")


def encode_mvi(img):
    m = img.manifold
    header = _HEADER.pack(MVI_MAGIC, m.tag, m.dim_param, img.height, img.width)
    return header + np.ascontiguousarray(img.data, dtype="<f8").tobytes()


def decode_mvi(buf):
    if len(buf) < _HEADER.size:
        if not buf.startswith(MVI_MAGIC[: len(buf)]):
            raise BadMagicError("not an MVI file")
        raise TruncatedError(f"header needs {_HEADER.size} bytes, got {len(buf)}")
    magic, tag, dim, height, width = _HEADER.unpack_from(buf)
    if magic != MVI_MAGIC:
        raise BadMagicError(f"bad magic {magic!r}")
    try:
        m = manifold_from_tag(tag, dim)
    except ValueError as exc:
        raise FormatError(str(exc)) from None
    if height < 1 or width < 1:
        raise FormatError(f"invalid dimensions {height}x{width}")
    expected = height * width * m.elem_len * 8
    payload = buf[_HEADER.size:]
    if len(payload) < expected:
        raise TruncatedError(f"payload has {len(payload)} bytes, header implies {expected}")
    if len(payload) > expected:
        raise FormatError(f"{len(payload) - expected} trailing bytes after payload")
    data = np.frombuffer(payload, dtype="<f8").astype(float)
    data = data.reshape((height, width) + m.point_shape)
    ok = m.is_point(data)
    if not np.all(ok):
        r, c = (int(v) for v in np.argwhere(~ok)[0])
        raise PixelInvariantError(
            f"pixel ({r}, {c}) is not a valid {m.name} point", pixel=(r, c)
        )
    return ManifoldImage(m, data)


def write_mvi(img, path):
    with open(path, "wb") as fh:
        fh.write(encode_mvi(img))


def read_mvi(path):
    with open(path, "rb") as fh:
        return decode_mvi(fh.read())


# ---------------------------------------------------------------- netpbm


def _pnm_header(buf, magic):
    """Parse a binary netpbm header; returns (width, height, maxval, offset)."""
    if len(buf) < 2 or buf[:1] != b"P":
        raise BadMagicError("not a netpbm file")
    if buf[:2] != magic:
        raise UnsupportedFormatError(f"unsupported netpbm variant {buf[:2]!r}, need {magic!r}")
    fields = []
    pos = 2
    n = len(buf)
    while len(fields) < 3:
        while pos < n and buf[pos:pos + 1].isspace():
            pos += 1
        if pos < n and buf[pos:pos + 1] == b"#":
            while pos < n and buf[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < n and not buf[pos:pos + 1].isspace() and buf[pos:pos + 1] != b"#":
            pos += 1
        if start == pos:
            raise FormatError("malformed netpbm header")
        token = buf[start:pos]
        if not token.isdigit():
            raise FormatError(f"malformed netpbm header token {token!r}")
        fields.append(int(token))
    if pos >= n or not buf[pos:pos + 1].isspace():
        raise FormatError("malformed netpbm header")
    width, height, maxval = fields
    if width < 1 or height < 1 or not 0 < maxval < 256:
        raise FormatError(f"unsupported netpbm geometry {width}x{height} maxval {maxval}")
    return width, height, maxval, pos + 1


def decode_pgm_bytes(buf):
    """Raw 8-bit samples of a P5 file as a ``(H, W)`` uint8 array."""
    width, height, _, off = _pnm_header(buf, b"P5")
    need = width * height
    if len(buf) - off < need:
        raise TruncatedError(f"PGM payload has {len(buf) - off} bytes, needs {need}")
    return np.frombuffer(buf, dtype=np.uint8, count=need, offset=off).reshape(height, width).copy()


def read_pgm_u8(path):
    with open(path, "rb") as fh:
        return decode_pgm_bytes(fh.read())


def read_pgm(path):
    """Read a P5 PGM, mapping samples to ``[0, 1]`` by ``maxval``."""
    with open(path, "rb") as fh:
        buf = fh.read()
    _, _, maxval, _ = _pnm_header(buf, b"P5")
    return decode_pgm_bytes(buf).astype(float) / maxval


def _to_u8(grid):
    grid = np.asarray(grid)
    if grid.dtype == np.uint8:
        return grid
    if grid.dtype == bool:
        return np.where(grid, 255, 0).astype(np.uint8)
    return np.clip(np.rint(np.asarray(grid, dtype=float) * 255.0), 0, 255).astype(np.uint8)


def write_pgm(grid, path):
    """Write a P5 PGM.

    ``uint8`` arrays are written verbatim, boolean masks as ``{0, 255}`` and
    float arrays in ``[0, 1]`` are scaled to ``0..255``.
    """
    data = _to_u8(grid)
    if data.ndim != 2:
        raise FormatError("PGM needs a 2-D array")
    h, w = data.shape
    with open(path, "wb") as fh:
        fh.write(b"P5\n%d %d\n255\n" % (w, h))
        fh.write(np.ascontiguousarray(data).tobytes())


def write_mask(mask, path):
    write_pgm(np.asarray(mask, dtype=bool), path)


def read_mask(path):
    return read_pgm_u8(path) > 127


def write_ppm(rgb, path):
    rgb = np.asarray(rgb, dtype=np.uint8)
    if rgb.ndim != 3 or rgb.shape[2] != 3:
        raise FormatError("PPM needs an (H, W, 3) array")
    h, w, _ = rgb.shape
    with open(path, "wb") as fh:
        fh.write(b"P6\n%d %d\n255\n" % (w, h))
        fh.write(np.ascontiguousarray(rgb).tobytes())


def read_ppm(path):
    with open(path, "rb") as fh:
        buf = fh.read()
    width, height, _, off = _pnm_header(buf, b"P6")
    need = width * height * 3
    if len(buf) - off < need:
        raise TruncatedError("PPM payload truncated")
    return np.frombuffer(buf, dtype=np.uint8, count=need, offset=off).reshape(height, width, 3).copy()


# ---------------------------------------------------------------- contours


def write_contours(polylines, path):
    """Write polylines of ``(x, y)`` vertices as blank-line separated blocks."""
    blocks = []
    for line in polylines:
        blocks.append("\n".join(f"{x:.6f} {y:.6f}" for x, y in np.asarray(line, dtype=float)))
    with open(path, "w") as fh:
        fh.write("\n\n".join(blocks))
        if blocks:
            fh.write("\n")


def read_contours(path):
    with open(path) as fh:
        text = fh.read()
    out = []
    for block in text.strip().split("\n\n"):
        rows = [r.split() for r in block.strip().splitlines() if r.strip()]
        if rows:
            out.append(np.array(rows, dtype=float))
    return out


def write_manifest(entries, path):
    """``key=value`` lines in insertion order."""
    with open(path, "w") as fh:
        for key, value in entries.items():
            fh.write(f"{key}={value}\n")


def read_manifest(path):
    out = {}
    with open(path) as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line:
                key, _, value = line.partition("=")
                out[key] = value
    return out
