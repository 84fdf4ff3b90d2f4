"""File formats: grayscale rasters, pyramid dumps, key=value files, detections.

Rasters are 8- or 16-bit grayscale PGM (ASCII ``P2`` or binary ``P5``) or
PNG. Float images are written as 16-bit with an affine map
``value = offset + scale * code`` recorded in the file (a PGM comment or a
PNG ``tEXt`` chunk) so :func:`read_image` recovers intensities to within
``scale / 2``. Files without the record read back as raw integer codes.

PNG is handled with ``zlib`` directly: grayscale, bit depth 8 or 16,
non-interlaced, all five scanline filters on input.
"""

from __future__ import annotations

import csv
import io
import json
import os
import struct
import zlib
from pathlib import Path

import numpy as np

from .detector import Detection
from .multipliers import TrigMultiplierSpec

__all__ = [
    "read_image",
    "write_image",
    "quantize",
    "write_pyramid_dump",
    "read_pyramid_dump",
    "read_keyvalue",
    "write_keyvalue",
    "spec_to_text",
    "spec_from_text",
    "detections_to_csv",
    "detections_from_csv",
    "detections_to_json",
    "DETECTION_FIELDS",
]

DETECTION_FIELDS = ("x", "y", "radius", "score", "scale", "t_star")
_PNG_SIG = b"\x89PNG\r\n\x1a\n"
_SCALE_KEY = "scalesteer-scaling"
PYR_MAGIC = b"WPYR"
PYR_COMPLEX = 1     # flags bit 0: source raster was complex


# ---------------------------------------------------------------------------
# quantization


def quantize(image, bits: int = 16):
    """Map a float image onto ``[0, 2**bits - 1]``.

    Returns
    -------
    codes : ndarray of uint8 or uint16
    offset, scale : float
        ``image ~= offset + scale * codes``. A constant image gets scale 1.
    """
    f = np.asarray(image, dtype=float)
    if not np.all(np.isfinite(f)):
        raise ValueError("image has non-finite values")
    top = 2 ** bits - 1
    lo, hi = (float(f.min()), float(f.max())) if f.size else (0.0, 0.0)
    scale = (hi - lo) / top if hi > lo else 1.0
    codes = np.rint((f - lo) / scale).clip(0, top)
    return codes.astype(np.uint16 if bits == 16 else np.uint8), lo, scale


def _is_integral(a) -> bool:
    return np.issubdtype(np.asarray(a).dtype, np.integer)


# ---------------------------------------------------------------------------
# PGM


def _pgm_tokens(data: bytes):
    # header tokens with comments; returns (tokens, comments, offset after last token)
    tokens, comments, i = [], [], 2
    while len(tokens) < 3:
        while i < len(data) and data[i:i + 1].isspace():
            i += 1
        if data[i:i + 1] == b"#":
            j = data.index(b"\n", i)
            comments.append(data[i + 1:j].decode("ascii", "replace").strip())
            i = j + 1
            continue
        j = i
        while j < len(data) and not data[j:j + 1].isspace():
            j += 1
        tokens.append(int(data[i:j]))
        i = j
    return tokens, comments, i


def _read_pgm(data: bytes):
    magic = data[:2]
    if magic not in (b"P2", b"P5"):
        raise ValueError("not a PGM file")
    (w, h, maxval), comments, i = _pgm_tokens(data)
    if not 0 < maxval < 65536:
        raise ValueError(f"bad PGM maxval {maxval}")
    if magic == b"P5":
        dt = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
        raw = np.frombuffer(data, dtype=dt, count=w * h, offset=i + 1)
    else:
        raw = np.array(data[i:].split()[:w * h], dtype=np.int64)
    if raw.size != w * h:
        raise ValueError("truncated PGM raster")
    meta = {}
    for c in comments:
        k, sep, v = c.partition("=")
        if sep:
            meta[k.strip()] = v.strip()
    return raw.reshape(h, w).astype(np.uint16 if maxval > 255 else np.uint8), meta


def _write_pgm(path, codes, meta: dict, ascii_: bool = False):
    h, w = codes.shape
    maxval = 65535 if codes.dtype == np.uint16 else 255
    head = [b"P2" if ascii_ else b"P5"]
    head += [f"# {k}={v}".encode("ascii") for k, v in meta.items()]
    head.append(f"{w} {h}\n{maxval}".encode("ascii"))
    with open(path, "wb") as fh:
        fh.write(b"\n".join(head) + b"\n")
        if ascii_:
            for row in codes:
                fh.write((" ".join(map(str, row.tolist())) + "\n").encode("ascii"))
        else:
            fh.write(codes.astype(">u2" if maxval > 255 else "u1").tobytes())


# ---------------------------------------------------------------------------
# PNG


def _chunk(tag: bytes, body: bytes) -> bytes:
    return struct.pack(">I", len(body)) + tag + body + struct.pack(">I", zlib.crc32(tag + body))


def _write_png(path, codes, meta: dict):
    h, w = codes.shape
    depth = 16 if codes.dtype == np.uint16 else 8
    raw = codes.astype(">u2" if depth == 16 else "u1").reshape(h, -1).view(np.uint8)
    rows = np.hstack([np.zeros((h, 1), np.uint8), raw.reshape(h, -1)])   # filter type 0
    out = [_PNG_SIG, _chunk(b"IHDR", struct.pack(">IIBBBBB", w, h, depth, 0, 0, 0, 0))]
    for k, v in meta.items():
        out.append(_chunk(b"tEXt", f"{k}\0{v}".encode("latin-1")))
    out.append(_chunk(b"IDAT", zlib.compress(rows.tobytes(), 9)))
    out.append(_chunk(b"IEND", b""))
    with open(path, "wb") as fh:
        fh.write(b"".join(out))


def _paeth(a, b, c):
    p = a + b - c
    pa, pb, pc = abs(p - a), abs(p - b), abs(p - c)
    if pa <= pb and pa <= pc:
        return a
    return b if pb <= pc else c


def _unfilter(data: bytes, h: int, stride: int, bpp: int) -> np.ndarray:
    out = np.zeros((h, stride), dtype=np.uint8)
    prev = np.zeros(stride, dtype=np.int64)
    pos = 0
    for y in range(h):
        ftype = data[pos]
        line = np.frombuffer(data, np.uint8, stride, pos + 1).astype(np.int64)
        pos += stride + 1
        if ftype == 0:
            cur = line
        elif ftype == 2:
            cur = (line + prev) & 0xFF
        elif ftype in (1, 3, 4):
            # these depend on the already-decoded left neighbour: go bytewise
            cur = np.zeros(stride, dtype=np.int64)
            for i in range(stride):
                a = cur[i - bpp] if i >= bpp else 0
                c = prev[i - bpp] if i >= bpp else 0
                if ftype == 1:
                    pred = a
                elif ftype == 3:
                    pred = (a + prev[i]) >> 1
                else:
                    pred = _paeth(a, prev[i], c)
                cur[i] = (line[i] + pred) & 0xFF
        else:
            raise ValueError(f"bad PNG filter type {ftype}")
        out[y] = cur
        prev = cur
    return out


def _read_png(data: bytes):
    pos, idat, meta, hdr = 8, [], {}, None
    while pos < len(data):
        n, tag = struct.unpack(">I4s", data[pos:pos + 8])
        body = data[pos + 8:pos + 8 + n]
        pos += 12 + n
        if tag == b"IHDR":
            hdr = struct.unpack(">IIBBBBB", body)
        elif tag == b"IDAT":
            idat.append(body)
        elif tag == b"tEXt":
            k, _, v = body.partition(b"\0")
            meta[k.decode("latin-1")] = v.decode("latin-1")
        elif tag == b"IEND":
            break
    if hdr is None:
        raise ValueError("PNG without IHDR")
    w, h, depth, ctype, _, _, interlace = hdr
    if ctype != 0 or depth not in (8, 16) or interlace:
        raise ValueError("only non-interlaced 8/16-bit grayscale PNG is supported "
                         f"(color type {ctype}, depth {depth}, interlace {interlace})")
    bpp = depth // 8
    rows = _unfilter(zlib.decompress(b"".join(idat)), h, w * bpp, bpp)
    if depth == 16:
        return rows.view(">u2").reshape(h, w).astype(np.uint16), meta
    return rows.reshape(h, w), meta


# ---------------------------------------------------------------------------
# public raster API


def _scaling_record(offset: float, scale: float) -> str:
    return f"offset={offset!r};scale={scale!r}"


def _parse_scaling(text: str):
    kv = dict(p.split("=", 1) for p in text.split(";"))
    return float(kv["offset"]), float(kv["scale"])


def write_image(path, image, bits: int = 16, ascii_pgm: bool = False):
    """Write ``image`` as PNG or PGM, chosen by suffix.

    Integer arrays within the bit range are stored verbatim; anything else
    is quantized by :func:`quantize` and the scaling is embedded.
    """
    path = Path(path)
    if bits not in (8, 16):
        raise ValueError("bits must be 8 or 16")
    a = np.asarray(image)
    if a.ndim != 2:
        raise ValueError(f"expected a 2-D image, got shape {a.shape}")
    meta = {}
    if _is_integral(a) and a.size and 0 <= a.min() and a.max() < 2 ** bits:
        codes = a.astype(np.uint16 if bits == 16 else np.uint8)
    else:
        codes, off, sc = quantize(a, bits)
        meta[_SCALE_KEY] = _scaling_record(off, sc)
    suffix = path.suffix.lower()
    if suffix == ".png":
        _write_png(path, codes, meta)
    elif suffix in (".pgm", ".pnm"):
        _write_pgm(path, codes, meta, ascii_pgm)
    else:
        raise ValueError(f"unknown image format {suffix!r} (use .png or .pgm)")


def read_image(path) -> np.ndarray:
    """Read a grayscale PNG or PGM as float64, undoing any embedded scaling."""
    data = Path(path).read_bytes()
    if data.startswith(_PNG_SIG):
        codes, meta = _read_png(data)
    elif data[:2] in (b"P2", b"P5"):
        codes, meta = _read_pgm(data)
    else:
        raise ValueError(f"{path}: not a PNG or PGM file")
    out = codes.astype(float)
    if _SCALE_KEY in meta:
        off, sc = _parse_scaling(meta[_SCALE_KEY])
        out = off + sc * out
    return out


# ---------------------------------------------------------------------------
# pyramid dump


def write_pyramid_dump(directory, pyramid) -> list[Path]:
    """One file per channel, ``s{scale}_n{channel}.wpyr``.

    Layout: magic ``WPYR``, u32 rows, u32 cols, u32 flags (little-endian),
    then row-major complex64 (real, imag) pairs.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for i, s in enumerate(pyramid.scales):
        for n in range(pyramid.n_channels):
            ch = np.asarray(pyramid.channels[i, n])
            flags = PYR_COMPLEX if np.iscomplexobj(ch) else 0
            p = directory / f"s{s}_n{n}.wpyr"
            with open(p, "wb") as fh:
                fh.write(PYR_MAGIC + struct.pack("<III", ch.shape[0], ch.shape[1], flags))
                fh.write(ch.astype("<c8").tobytes())
            paths.append(p)
    return paths


def read_pyramid_dump(path):
    """Return (raster, flags); the raster is complex64."""
    data = Path(path).read_bytes()
    if data[:4] != PYR_MAGIC:
        raise ValueError(f"{path}: bad magic {data[:4]!r}")
    rows, cols, flags = struct.unpack("<III", data[4:16])
    arr = np.frombuffer(data, dtype="<c8", offset=16)
    if arr.size != rows * cols:
        raise ValueError(f"{path}: expected {rows * cols} values, found {arr.size}")
    return arr.reshape(rows, cols), flags


# ---------------------------------------------------------------------------
# key=value


def read_keyvalue(source) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment. Values stay strings."""
    text = Path(source).read_text() if isinstance(source, (str, os.PathLike)) else source.read()
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        k, sep, v = line.partition("=")
        if not sep or not k.strip():
            raise ValueError(f"line {lineno}: expected key=value, got {line!r}")
        out[k.strip()] = v.strip()
    return out


def write_keyvalue(path, values: dict):
    with open(path, "w") as fh:
        for k, v in values.items():
            fh.write(f"{k}={v}\n")


def spec_to_text(spec: TrigMultiplierSpec, epsilon: float = 0.125,
                 eps_prime: float = 0.45) -> str:
    """Lossless key=value form of a multiplier family and its window settings."""
    alpha = ",".join(repr(a) for a in spec.alpha)
    return (f"alpha={alpha}\nsigma={spec.sigma!r}\nn_max={spec.n_max}\n"
            f"epsilon={float(epsilon)!r}\neps_prime={float(eps_prime)!r}\n")


def spec_from_text(text: str):
    """Inverse of :func:`spec_to_text`; returns (spec, epsilon, eps_prime)."""
    kv = read_keyvalue(io.StringIO(text))
    alpha = tuple(float(a) for a in kv["alpha"].split(","))
    spec = TrigMultiplierSpec(alpha, float(kv["sigma"]), int(kv["n_max"]))
    return spec, float(kv.get("epsilon", 0.125)), float(kv.get("eps_prime", 0.45))


# ---------------------------------------------------------------------------
# detections


def detections_to_csv(dets) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(DETECTION_FIELDS)
    for d in dets:
        w.writerow([repr(float(d.x)), repr(float(d.y)), repr(float(d.radius)),
                    repr(float(d.score)), int(d.scale), repr(float(d.t_star))])
    return buf.getvalue()


def detections_from_csv(text: str) -> list[Detection]:
    rows = list(csv.DictReader(io.StringIO(text)))
    return [Detection(float(r["x"]), float(r["y"]), float(r["radius"]), float(r["score"]),
                      int(r["scale"]), float(r["t_star"])) for r in rows]


def detections_to_json(dets) -> str:
    recs = [{"x": float(d.x), "y": float(d.y), "radius": float(d.radius),
             "score": float(d.score), "scale": int(d.scale), "t_star": float(d.t_star)}
            for d in dets]
    return json.dumps(recs, indent=1) + "\n"
