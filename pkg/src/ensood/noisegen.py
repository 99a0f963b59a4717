"""Synthetic "Noise" OOD images.

Per image: ``sigma = z**2`` with ``z ~ N(0, 1)``; a random side length
``s`` in {2, ..., 256}; every pixel/channel value drawn from
``N(0.5, sigma**2)``, clipped to [0, 1] and quantized to {0..255}; then the
square image is Lanczos-resampled to ``target_size``.
"""

from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Optional

import numpy as np

from .core import InvalidInputError
from .rng import DOMAIN_NOISE, check_seed, stream

LANCZOS_A = 3
MIN_SIDE, MAX_SIDE = 2, 256


@dataclass
class NoiseImage:
    pixels: np.ndarray  # (height, width, 3) uint8
    sigma: Optional[float] = None
    source_side: Optional[int] = None

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim != 3 or px.shape[2] != 3:
            raise InvalidInputError("pixels must have shape (height, width, 3)")
        self.pixels = px.astype(np.uint8, copy=False)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    channels = 3


@dataclass(frozen=True)
class NoiseGenConfig:
    n_images: int = 10_000
    seed: int = 0
    target_size: int = 256

    def __post_init__(self):
        if self.n_images < 1:
            raise InvalidInputError("n_images must be >= 1")
        if self.target_size < 1:
            raise InvalidInputError("target_size must be >= 1")
        check_seed(self.seed)


def image_stream(seed: int, index: int) -> np.random.Generator:
    return stream(seed, DOMAIN_NOISE, index)


def sample_sigma(rng, size=None):
    """Square of a unit gaussian draw."""
    z = rng.standard_normal(size)
    return z * z


def sample_side(rng) -> int:
    return int(rng.integers(MIN_SIDE, MAX_SIDE + 1))


def noise_field(rng, sigma: float, side: int) -> np.ndarray:
    """Unclipped intensities ``0.5 + sigma * z`` of shape (side, side, 3)."""
    return 0.5 + sigma * rng.standard_normal((side, side, 3))


def quantize(x) -> np.ndarray:
    """Clip to [0, 1] and round half up onto {0..255}."""
    x = np.clip(np.asarray(x, dtype=np.float64), 0.0, 1.0)
    return np.floor(255.0 * x + 0.5).astype(np.uint8)


def lanczos_kernel(x, a: int = LANCZOS_A) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    return np.where(np.abs(x) < a, np.sinc(x) * np.sinc(x / a), 0.0)


@lru_cache(maxsize=1024)
def _weights_cached(src: int, dst: int, a: int) -> np.ndarray:
    w = lanczos_weights(src, dst, a)
    w.setflags(write=False)
    return w


def lanczos_weights(src: int, dst: int, a: int = LANCZOS_A) -> np.ndarray:
    """(dst, src) resampling matrix with normalized rows and clamped edges."""
    scale = src / dst
    fscale = max(scale, 1.0)
    support = a * fscale
    w = np.zeros((dst, src), dtype=np.float64)
    for i in range(dst):
        center = (i + 0.5) * scale
        lo = int(np.floor(center - support))
        hi = int(np.ceil(center + support))
        j = np.arange(lo, hi + 1)
        k = lanczos_kernel((j + 0.5 - center) / fscale, a)
        np.add.at(w[i], np.clip(j, 0, src - 1), k)
    return w / w.sum(axis=1, keepdims=True)


def lanczos_resize(img, target: int, a: int = LANCZOS_A):
    """Separable Lanczos resampling of a square or rectangular RGB image.

    Accepts a :class:`NoiseImage` or an (H, W, 3) array and returns the same
    kind. Returns the input unchanged when it already has the target size.
    """
    if isinstance(img, NoiseImage):
        out = lanczos_resize(img.pixels, target, a)
        return NoiseImage(out, img.sigma, img.source_side)
    px = np.asarray(img)
    h, w = px.shape[:2]
    if target < 1 or h < 1 or w < 1:
        raise InvalidInputError("image and target sizes must be >= 1")
    if h == target and w == target:
        return px.copy()
    wy = _weights_cached(h, target, a)
    wx = _weights_cached(w, target, a)
    rows = np.tensordot(wy, px.astype(np.float64), axes=(1, 0))  # (T, w, 3)
    res = np.tensordot(rows, wx, axes=(1, 1)).transpose(0, 2, 1)  # (T, T, 3)
    return np.floor(np.clip(res, 0.0, 255.0) + 0.5).astype(np.uint8)


def make_noise_image(sigma: float, side: int, field: np.ndarray, target_size: int = 256) -> NoiseImage:
    q = quantize(field)
    return NoiseImage(lanczos_resize(q, target_size), float(sigma), int(side))


def generate_noise_image(rng, target_size: int = 256) -> NoiseImage:
    sigma = float(sample_sigma(rng))
    side = sample_side(rng)
    return make_noise_image(sigma, side, noise_field(rng, sigma, side), target_size)


def generate_indexed(seed: int, index: int, target_size: int = 256) -> NoiseImage:
    return generate_noise_image(image_stream(seed, index), target_size)


def write_ppm(img) -> bytes:
    """Binary P6 encoding of an RGB image."""
    px = img.pixels if isinstance(img, NoiseImage) else np.asarray(img, dtype=np.uint8)
    h, w = px.shape[:2]
    return f"P6\n{w} {h}\n255\n".encode("ascii") + np.ascontiguousarray(px, dtype=np.uint8).tobytes()


def read_ppm(data: bytes) -> np.ndarray:
    """Inverse of :func:`write_ppm` (accepts the canonical header only)."""
    parts = data.split(b"\n", 3)
    if len(parts) < 4 or parts[0] != b"P6" or parts[2] != b"255":
        raise InvalidInputError("not a canonical 8-bit P6 file")
    w, h = (int(t) for t in parts[1].split())
    payload = parts[3]
    if len(payload) != w * h * 3:
        raise InvalidInputError("P6 payload has the wrong length")
    return np.frombuffer(payload, dtype=np.uint8).reshape(h, w, 3).copy()


def write_dataset(config: NoiseGenConfig, out_dir, threads: int = 1) -> Path:
    """Write ``noise_<index>.ppm`` files plus ``manifest.csv`` (index, sigma, side)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    def one(i):
        img = generate_indexed(config.seed, i, config.target_size)
        (out / f"noise_{i}.ppm").write_bytes(write_ppm(img))
        return img.sigma, img.source_side

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            meta = list(pool.map(one, range(config.n_images)))
    else:
        meta = [one(i) for i in range(config.n_images)]

    sidecar = out / "manifest.csv"
    with open(sidecar, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["index", "sigma", "side"])
        for i, (sigma, side) in enumerate(meta):
            wr.writerow([i, f"{sigma:.17g}", side])
    return sidecar
