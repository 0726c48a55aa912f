"""Performance counters and image error measures."""
from __future__ import annotations

from dataclasses import dataclass, fields
from typing import Optional

import numpy as np


@dataclass(frozen=True)
class MetricsCounters:
    rays: int = 0
    c_int: int = 0   # classical ray/primitive intersection calls
    eval: int = 0    # oracle evaluations
    cpix: int = 0    # pixels updated by neighbour gathering
    iterations: int = 0

    @property
    def int_total(self) -> int:
        return self.c_int + self.eval

    @property
    def int_per_ray(self) -> float:
        return self.int_total / self.rays if self.rays else 0.0

    def __add__(self, other: "MetricsCounters") -> "MetricsCounters":
        return merge(self, other)

    def as_dict(self) -> dict:
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d["int"] = self.int_total
        d["int_per_ray"] = round(self.int_per_ray, 6)
        return d


def merge(a: MetricsCounters, b: MetricsCounters) -> MetricsCounters:
    return MetricsCounters(*(getattr(a, f.name) + getattr(b, f.name) for f in fields(a)))


@dataclass(frozen=True)
class ImageError:
    nrmse: float
    dpix: int
    dpix_pct: float
    tie_mask: Optional[np.ndarray] = None


def _check_shapes(reference: np.ndarray, candidate: np.ndarray) -> None:
    if reference.shape != candidate.shape:
        raise ValueError(f"image shapes differ: {reference.shape} vs {candidate.shape}")


def nrmse(reference: np.ndarray, candidate: np.ndarray,
          tie_mask: Optional[np.ndarray] = None) -> float:
    """RMS of the 8-bit channel differences divided by the reference mean.

    Pixels set in ``tie_mask`` are left out of both the error and the mean.
    """
    reference = np.asarray(reference)
    candidate = np.asarray(candidate)
    _check_shapes(reference, candidate)
    if tie_mask is not None:
        keep = ~np.asarray(tie_mask, dtype=bool)
        reference, candidate = reference[keep], candidate[keep]
        if reference.size == 0:
            return 0.0
    diff = reference.astype(float) - candidate.astype(float)
    rmse = float(np.sqrt(np.mean(diff ** 2)))
    mean = float(np.mean(reference.astype(float)))
    if mean == 0.0:
        return 0.0 if rmse == 0.0 else float("inf")
    return rmse / mean


def dpix(reference: np.ndarray, candidate: np.ndarray,
         tie_mask: Optional[np.ndarray] = None) -> tuple[int, float]:
    """Number (and percentage) of pixels whose RGB values differ, ignoring masked pixels."""
    reference = np.asarray(reference)
    candidate = np.asarray(candidate)
    _check_shapes(reference, candidate)
    differ = np.any(reference != candidate, axis=-1)
    if tie_mask is not None:
        differ &= ~np.asarray(tie_mask, dtype=bool)
    count = int(np.count_nonzero(differ))
    return count, 100.0 * count / differ.size


def image_error(reference: np.ndarray, candidate: np.ndarray,
                tie_mask: Optional[np.ndarray] = None) -> ImageError:
    count, pct = dpix(reference, candidate, tie_mask)
    return ImageError(nrmse=nrmse(reference, candidate), dpix=count, dpix_pct=pct,
                      tie_mask=tie_mask)
