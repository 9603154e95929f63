"""Minimal Netpbm codecs: P5/P6 for frames and samples, P7 (PAM) for RGBA templates."""

from __future__ import annotations

import os
from typing import BinaryIO, Iterator, Union

import numpy as np

PathLike = Union[str, os.PathLike]


class PnmError(ValueError):
    pass


def _token(stream: BinaryIO) -> bytes:
    tok = b""
    while True:
        c = stream.read(1)
        if not c:
            return tok
        if c == b"#":
            stream.readline()
            if tok:
                return tok
            continue
        if c.isspace():
            if tok:
                return tok
            continue
        tok += c


def _read_pnm_body(stream: BinaryIO, magic: bytes) -> np.ndarray:
    try:
        width, height, maxval = (int(_token(stream)) for _ in range(3))
    except ValueError as exc:
        raise PnmError(f"bad {magic.decode()} header") from exc
    if maxval != 255:
        raise PnmError(f"only 8-bit images supported, maxval={maxval}")
    channels = 3 if magic == b"P6" else 1
    n = width * height * channels
    raw = stream.read(n)
    if len(raw) != n:
        raise PnmError("truncated pixel data")
    arr = np.frombuffer(raw, dtype=np.uint8)
    if channels == 3:
        return arr.reshape(height, width, 3).copy()
    return arr.reshape(height, width).copy()


def _read_pam_body(stream: BinaryIO) -> np.ndarray:
    header = {}
    while True:
        line = stream.readline()
        if not line:
            raise PnmError("PAM header not terminated")
        line = line.strip()
        if not line or line.startswith(b"#"):
            continue
        if line == b"ENDHDR":
            break
        key, _, value = line.partition(b" ")
        header[key.decode()] = value.strip().decode()
    try:
        width, height = int(header["WIDTH"]), int(header["HEIGHT"])
        depth, maxval = int(header["DEPTH"]), int(header["MAXVAL"])
    except (KeyError, ValueError) as exc:
        raise PnmError("incomplete PAM header") from exc
    if maxval != 255:
        raise PnmError(f"only 8-bit PAM supported, maxval={maxval}")
    n = width * height * depth
    raw = stream.read(n)
    if len(raw) != n:
        raise PnmError("truncated pixel data")
    return np.frombuffer(raw, dtype=np.uint8).reshape(height, width, depth).copy()


def _read_after_magic(stream: BinaryIO, magic: bytes) -> np.ndarray:
    if magic in (b"P5", b"P6"):
        return _read_pnm_body(stream, magic)
    if magic == b"P7":
        return _read_pam_body(stream)
    raise PnmError(f"unsupported magic {magic!r}")


def read_image(stream: BinaryIO) -> np.ndarray:
    """Read one P5, P6 or P7 image from an open binary stream."""
    return _read_after_magic(stream, stream.read(2))


def iter_images(stream: BinaryIO) -> Iterator[np.ndarray]:
    """Yield images from a concatenated stream (e.g. P6 frames on stdin)."""
    while True:
        c = stream.read(1)
        while c and c.isspace():
            c = stream.read(1)
        if not c:
            return
        yield _read_after_magic(stream, c + stream.read(1))


def encode(img: np.ndarray) -> bytes:
    img = np.ascontiguousarray(img, dtype=np.uint8)
    if img.ndim == 2:
        h, w = img.shape
        return b"P5\n%d %d\n255\n" % (w, h) + img.tobytes()
    h, w, d = img.shape
    if d == 3:
        return b"P6\n%d %d\n255\n" % (w, h) + img.tobytes()
    if d == 4:
        head = b"P7\nWIDTH %d\nHEIGHT %d\nDEPTH 4\nMAXVAL 255\nTUPLTYPE RGBA\nENDHDR\n" % (w, h)
        return head + img.tobytes()
    raise PnmError(f"cannot encode {d}-channel image")


def load(path: PathLike) -> np.ndarray:
    with open(path, "rb") as fh:
        return read_image(fh)


def save(path: PathLike, img: np.ndarray) -> None:
    with open(path, "wb") as fh:
        fh.write(encode(img))
