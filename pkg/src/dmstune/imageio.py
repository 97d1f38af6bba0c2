"""Grayscale image readers/writers (PGM P5 and 8-bit PNG).

Intensities map linearly to [0, 1] on read; values are clamped to
[0, 1] on write.
"""

import re

import numpy as np
from PIL import Image as PILImage

__all__ = ["read_image", "write_image", "read_pgm", "write_pgm", "read_png", "write_png"]


def read_pgm(path):
    """Read a binary (P5) PGM, 8- or 16-bit, as floats in [0, 1]."""
    with open(path, "rb") as fh:
        data = fh.read()
    # header: magic, width, height, maxval; comments start with '#'
    tokens = []
    pos = 0
    while len(tokens) < 4:
        m = re.match(rb"\s*(#[^\n]*\n|\S+)", data[pos:])
        if m is None:
            raise ValueError(f"{path}: truncated PGM header")
        tok = m.group(1)
        pos += m.end()
        if not tok.startswith(b"#"):
            tokens.append(tok)
    if tokens[0] != b"P5":
        raise ValueError(f"{path}: not a binary PGM (P5) file")
    width, height, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    dtype = np.dtype(">u2") if maxval > 255 else np.uint8
    # raster starts after the single whitespace byte following maxval
    raw = np.frombuffer(data, dtype=dtype, count=width * height, offset=pos + 1)
    return raw.reshape(height, width).astype(float) / maxval


def write_pgm(path, image, bitdepth=8):
    """Write floats in [0, 1] (clamped) as a binary PGM."""
    if bitdepth not in (8, 16):
        raise ValueError("bitdepth must be 8 or 16")
    maxval = 2**bitdepth - 1
    arr = np.clip(np.asarray(image, dtype=float), 0.0, 1.0)
    quant = np.rint(arr * maxval).astype(np.dtype(">u2") if bitdepth == 16 else np.uint8)
    h, w = arr.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n{maxval}\n".encode())
        fh.write(quant.tobytes())


def read_png(path):
    img = PILImage.open(path).convert("L")
    return np.asarray(img, dtype=float) / 255.0


def write_png(path, image):
    arr = np.clip(np.asarray(image, dtype=float), 0.0, 1.0)
    quant = np.rint(arr * 255).astype(np.uint8)
    PILImage.fromarray(quant, mode="L").save(path)


def read_image(path):
    path = str(path)
    if path.endswith(".pgm"):
        return read_pgm(path)
    if path.endswith(".png"):
        return read_png(path)
    raise ValueError(f"unsupported image format: {path}")


def write_image(path, image, bitdepth=8):
    path = str(path)
    if path.endswith(".pgm"):
        write_pgm(path, image, bitdepth=bitdepth)
    elif path.endswith(".png"):
        write_png(path, image)
    else:
        raise ValueError(f"unsupported image format: {path}")
