"""Image input handling: decoding, validation, grayscale conversion, content
digests, and dominant-color extraction.

Images travel through the system as encoded PNG or JPEG bytes so the exact
payload submitted to a backend (and its digest) is always reproducible.
"""

from __future__ import annotations

import enum
import hashlib
import io
from dataclasses import dataclass

import numpy as np
from PIL import Image

from .affect import Color

__all__ = [
    "ImageInput",
    "ImageSource",
    "ImageError",
    "dominant_colors",
    "MAX_DIMENSION",
]

MAX_DIMENSION = 4096


class ImageError(ValueError):
    """Undecodable, unsupported, or oversized image payload."""


class ImageSource(enum.Enum):
    FILE = "file"
    CAMERA = "camera"
    DATASET = "dataset"


@dataclass(frozen=True)
class ImageInput:
    """Validated encoded image: PNG or JPEG bytes plus pixel dimensions."""

    data: bytes
    width: int
    height: int
    source: ImageSource = ImageSource.FILE
    format: str = "PNG"

    @classmethod
    def from_bytes(cls, data: bytes, source: ImageSource = ImageSource.FILE) -> "ImageInput":
        try:
            with Image.open(io.BytesIO(data)) as im:
                fmt = im.format or ""
                width, height = im.size
                im.load()
        except Exception as exc:
            raise ImageError(f"cannot decode image: {exc}") from exc
        if fmt not in ("PNG", "JPEG"):
            raise ImageError(f"unsupported image format {fmt!r} (need PNG or JPEG)")
        if max(width, height) > MAX_DIMENSION:
            raise ImageError(
                f"image {width}x{height} exceeds max dimension {MAX_DIMENSION}"
            )
        return cls(data, width, height, source, fmt)

    @classmethod
    def from_file(cls, path, source: ImageSource = ImageSource.FILE) -> "ImageInput":
        with open(path, "rb") as fh:
            return cls.from_bytes(fh.read(), source)

    def digest(self) -> str:
        """Stable content hash of the encoded bytes."""
        return hashlib.sha256(self.data).hexdigest()

    def pixels(self) -> np.ndarray:
        """Decode to an (H, W, 3) uint8 RGB array."""
        with Image.open(io.BytesIO(self.data)) as im:
            return np.asarray(im.convert("RGB"), dtype=np.uint8)

    def to_grayscale(self) -> "ImageInput":
        """Luma-only copy (ITU-R BT.601 weights); every pixel ends up with
        HSV saturation exactly 0.

        Re-encoded as PNG: a lossy re-encode could leak chroma back in.
        """
        with Image.open(io.BytesIO(self.data)) as im:
            gray = im.convert("L")
        buf = io.BytesIO()
        gray.save(buf, format="PNG")
        return ImageInput(buf.getvalue(), self.width, self.height, self.source, "PNG")


def dominant_colors(image: ImageInput, k: int = 5) -> list[Color]:
    """The k most common colors after 3-bit-per-channel quantization.

    Pixels are histogrammed into 512 bins (bin index r>>5, g>>5, b>>5 packed
    big-endian); the k most populous bins win, ties broken by ascending bin
    index, and each reports the mean color of its member pixels, ordered by
    count descending.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    px = image.pixels().reshape(-1, 3).astype(np.int64)
    bins = (px[:, 0] >> 5) * 64 + (px[:, 1] >> 5) * 8 + (px[:, 2] >> 5)
    counts = np.bincount(bins, minlength=512)
    sums_r = np.bincount(bins, weights=px[:, 0], minlength=512)
    sums_g = np.bincount(bins, weights=px[:, 1], minlength=512)
    sums_b = np.bincount(bins, weights=px[:, 2], minlength=512)
    occupied = np.flatnonzero(counts)
    # sort by (count desc, bin index asc)
    order = sorted(occupied.tolist(), key=lambda b: (-int(counts[b]), b))
    out = []
    for b in order[:k]:
        n = int(counts[b])
        out.append(
            Color(
                int(np.floor(sums_r[b] / n + 0.5)),
                int(np.floor(sums_g[b] / n + 0.5)),
                int(np.floor(sums_b[b] / n + 0.5)),
            )
        )
    return out
