"""Image ingestion and minibatch assembly.

Reads the CIFAR-10 binary layout (3073-byte records: 1 label byte followed by
32x32 R, G and B planes) and can synthesize a deterministic stand-in image
set so the whole pipeline runs without any download. Labels are carried for
round-trip fidelity but nothing downstream ever reads them: scoring consumes
Minibatch, which has no label field.
"""

from __future__ import annotations

import hashlib
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError, LabelOutOfRange, MalformedFile, NotEnoughImages

__all__ = [
    "DATA_DIR_ENV",
    "ImageSet",
    "Minibatch",
    "draw_minibatch",
    "load_cifar_bin",
    "resolve_image_set",
    "save_cifar_bin",
    "synth_images",
]

DATA_DIR_ENV = "RBFLEX_DATA_DIR"

_RECORD_BYTES = 3073
_PLANE = 32 * 32


@dataclass
class ImageSet:
    """Images in [0, 1], shape (count, 3, H, W); labels optional and unused."""

    images: np.ndarray
    labels: list[int] | None
    source: str  # "cifar-bin" | "synthetic"


@dataclass
class Minibatch:
    images: np.ndarray          # (N, 3, H, W)
    fingerprint: int            # 64-bit hash of source identity + indices

    @property
    def size(self) -> int:
        return self.images.shape[0]


def _hash64(text: str) -> int:
    return int.from_bytes(hashlib.blake2b(text.encode(), digest_size=8).digest(), "big")


# --------------------------------------------------------------------------
# CIFAR-10 binary format
# --------------------------------------------------------------------------

def load_cifar_bin(paths: list[str | Path]) -> ImageSet:
    """Load one or more .bin files of 3073-byte records, scaled into [0, 1]."""
    if not paths:
        raise DataError("no data files given")
    images = []
    labels: list[int] = []
    for path in paths:
        raw = Path(path).read_bytes()
        if len(raw) == 0 or len(raw) % _RECORD_BYTES != 0:
            raise MalformedFile(f"{path}: {len(raw)} bytes is not a multiple of {_RECORD_BYTES}")
        arr = np.frombuffer(raw, dtype=np.uint8).reshape(-1, _RECORD_BYTES)
        file_labels = arr[:, 0]
        if file_labels.max(initial=0) > 9:
            raise LabelOutOfRange(f"{path}: label {int(file_labels.max())} > 9")
        pixels = arr[:, 1:].reshape(-1, 3, 32, 32).astype(np.float64) / 255.0
        images.append(pixels)
        labels.extend(int(v) for v in file_labels)
    return ImageSet(images=np.ascontiguousarray(np.concatenate(images)), labels=labels,
                    source="cifar-bin")


def save_cifar_bin(image_set: ImageSet, path: str | Path) -> None:
    """Write the set back to the binary record layout (exact round-trip).

    Requires 32x32 images; pixel floats are mapped back with round(v * 255).
    """
    imgs = image_set.images
    if imgs.shape[2:] != (32, 32) or imgs.shape[1] != 3:
        raise DataError(f"binary layout requires (3, 32, 32) images, got {imgs.shape[1:]}")
    count = imgs.shape[0]
    labels = image_set.labels or [0] * count
    rec = np.empty((count, _RECORD_BYTES), dtype=np.uint8)
    rec[:, 0] = np.asarray(labels, dtype=np.uint8)
    rec[:, 1:] = np.round(imgs * 255.0).astype(np.uint8).reshape(count, 3 * _PLANE)
    Path(path).write_bytes(rec.tobytes())


# --------------------------------------------------------------------------
# synthetic fallback
# --------------------------------------------------------------------------

def synth_images(count: int, height: int = 32, width: int = 32, seed: int = 0) -> ImageSet:
    """Deterministic pseudo-random images mixing noise, gradients and blocks.

    Each image also gets its own exposure factor so global brightness varies
    across the set the way it does in photographic data. Images are mutually
    distinct (checked at generation time) and clipped into [0, 1]. Labels are
    pseudo-random in 0..9, present only so that format round-trips can be
    exercised.
    """
    if count < 1:
        raise DataError("count must be >= 1")
    rng = np.random.default_rng(int(seed))
    yy = np.linspace(0.0, 1.0, height)[:, None]
    xx = np.linspace(0.0, 1.0, width)[None, :]

    imgs = np.empty((count, 3, height, width))
    for i in range(count):
        noise = rng.uniform(0.0, 1.0, size=(3, height, width))
        angle = rng.uniform(0.0, 2.0 * np.pi)
        gradient = 0.5 + 0.5 * (np.cos(angle) * (xx - 0.5) + np.sin(angle) * (yy - 0.5))
        blocks = rng.uniform(0.0, 1.0, size=(3, 4, 4))
        blocks = np.repeat(np.repeat(blocks, (height + 3) // 4, axis=1),
                           (width + 3) // 4, axis=2)[:, :height, :width]
        w_noise, w_grad, w_block = rng.dirichlet([2.0, 2.0, 2.0])
        exposure = rng.uniform(0.25, 1.0)
        imgs[i] = exposure * (w_noise * noise + w_grad * gradient[None, :, :] + w_block * blocks)

    np.clip(imgs, 0.0, 1.0, out=imgs)
    digests = {hashlib.blake2b(imgs[i].tobytes(), digest_size=16).digest() for i in range(count)}
    if len(digests) != count:
        raise DataError("synthetic generator produced duplicate images")
    labels = [int(v) for v in rng.integers(0, 10, size=count)]
    return ImageSet(images=np.ascontiguousarray(imgs), labels=labels, source="synthetic")


# --------------------------------------------------------------------------
# minibatches
# --------------------------------------------------------------------------

def draw_minibatch(image_set: ImageSet, n: int, seed: int) -> Minibatch:
    """Draw N images uniformly without replacement, deterministic under seed.

    Selected indices are kept in ascending order, so drawing the whole set
    returns it in index order. The fingerprint hashes the source identity and
    the chosen indices.
    """
    total = image_set.images.shape[0]
    if n < 2:
        raise NotEnoughImages("pairwise similarity needs a minibatch of at least 2")
    if n > total:
        raise NotEnoughImages(f"asked for {n} of {total} images")
    rng = np.random.default_rng(int(seed))
    idx = np.sort(rng.choice(total, size=n, replace=False))
    shape = image_set.images.shape
    fp = _hash64(f"{image_set.source}|{shape[0]}x{shape[2]}x{shape[3]}|" +
                 ",".join(str(int(i)) for i in idx))
    return Minibatch(images=np.ascontiguousarray(image_set.images[idx]), fingerprint=fp)


# --------------------------------------------------------------------------
# source resolution (CLI/harness entry)
# --------------------------------------------------------------------------

def resolve_image_set(data: str | None, *, synth_count: int = 256,
                      synth_hw: tuple[int, int] = (32, 32), synth_seed: int = 0) -> ImageSet:
    """Turn a --data argument into an ImageSet.

    "synthetic" (or None with no RBFLEX_DATA_DIR set) builds the fallback
    set; anything else is a directory searched for *.bin files, or a single
    .bin file.
    """
    if data is None:
        data = os.environ.get(DATA_DIR_ENV) or "synthetic"
    if data == "synthetic":
        h, w = synth_hw
        return synth_images(synth_count, h, w, seed=synth_seed)
    p = Path(data)
    if p.is_file():
        return load_cifar_bin([p])
    if p.is_dir():
        files = sorted(p.glob("*.bin"))
        if not files:
            raise DataError(f"no .bin files under {p}")
        return load_cifar_bin(files)
    raise DataError(f"data source {data!r} not found")
