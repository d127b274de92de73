"""Exact periodic convolutions on power-of-two grids.

All spatial convolutions are circular.  FFT convention: forward transforms
are unnormalized and inverses divide by the grid size (numpy's default), so
Parseval reads ||x||^2 = ||x_hat||^2 / (H*W).

Subsampling by 2^r is done in the frequency domain by folding the spectrum
(mean over the 2^r x 2^r aliases), which equals taking every 2^r-th spatial
sample.  Filters stored on the full grid are moved to a subsampled grid by
taking every 2^r-th frequency bin, which equals spatially periodizing the
filter; the frequency response at surviving bins is untouched, so unit DC
gain and frame bounds survive resolution changes exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError


@dataclass
class Plane:
    """A 2D grid plus how many dyadic subsamplings separate it from the
    original sampling grid."""

    data: np.ndarray
    scale_log2: int = 0

    def __post_init__(self):
        self.data = np.asarray(self.data)
        if self.data.ndim != 2:
            raise ParameterError(f"plane must be 2D, got shape {self.data.shape}")
        if self.data.shape[0] < 1 or self.data.shape[1] < 1:
            raise ParameterError(f"empty plane of shape {self.data.shape}")
        if not np.all(np.isfinite(self.data)):
            raise ParameterError("plane contains non-finite values")

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]


def fold_spectrum(F: np.ndarray, k: int) -> np.ndarray:
    """Mean-fold a (..., H, W) spectrum onto the (H/k, W/k) grid.

    Returns the spectrum of the signal subsampled by k along both axes.
    """
    if k == 1:
        return F
    H, W = F.shape[-2], F.shape[-1]
    if H % k or W % k:
        raise ParameterError(f"grid {H}x{W} not divisible by {k}")
    shape = F.shape[:-2] + (k, H // k, k, W // k)
    return F.reshape(shape).mean(axis=(-4, -2))


def subsample_filter(F: np.ndarray, k: int) -> np.ndarray:
    """Frequency response of a filter spatially periodized to the H/k grid
    (every k-th bin of the full-grid response)."""
    if k == 1:
        return F
    if F.shape[0] % k or F.shape[1] % k:
        raise ParameterError(f"filter grid {F.shape} not divisible by {k}")
    return F[::k, ::k]


def conv2d_fft(image: Plane, filt: np.ndarray, subsample_log2: int = 0) -> Plane:
    """Circular convolution with a frequency-domain filter, evaluated on the
    grid subsampled by 2^subsample_log2.  Output is complex."""
    x = image.data
    if filt.shape != x.shape:
        raise ParameterError(f"filter shape {filt.shape} != image shape {x.shape}")
    if subsample_log2 < 0:
        raise ParameterError("subsample_log2 must be >= 0")
    k = 1 << subsample_log2
    if x.shape[0] % k or x.shape[1] % k:
        raise ParameterError(f"image {x.shape} not divisible by stride {k}")
    prod = np.fft.fft2(x) * filt
    out = np.fft.ifft2(fold_spectrum(prod, k))
    return Plane(out, image.scale_log2 + subsample_log2)


def conv2d_direct(image: Plane, filt: np.ndarray, subsample_log2: int = 0) -> Plane:
    """Brute-force periodic convolution with a spatial-domain filter.

    Testing oracle; quadratic cost, intended for grids up to ~64x64.
    """
    x = image.data
    if filt.shape != x.shape:
        raise ParameterError(f"filter shape {filt.shape} != image shape {x.shape}")
    k = 1 << subsample_log2
    H, W = x.shape
    if H % k or W % k:
        raise ParameterError(f"image {x.shape} not divisible by stride {k}")
    U, V = np.meshgrid(np.arange(H), np.arange(W), indexing="ij")
    out = np.zeros((H // k, W // k), dtype=np.result_type(x, filt))
    for a in range(0, H, k):
        for b in range(0, W, k):
            out[a // k, b // k] = np.sum(x * filt[(a - U) % H, (b - V) % W])
    return Plane(out, image.scale_log2 + subsample_log2)


def circular_conv1d_angle(stack: np.ndarray, filt: np.ndarray) -> np.ndarray:
    """Circular convolution along axis 0 (the orientation axis) of a
    (K, H, W) stack, independently at each spatial location."""
    if stack.shape[0] != filt.shape[0]:
        raise ParameterError(
            f"orientation axis {stack.shape[0]} != filter length {filt.shape[0]}")
    fh = np.fft.fft(filt)
    return np.fft.ifft(np.fft.fft(stack, axis=0) * fh[:, None, None], axis=0)


def modulus(p: Plane) -> Plane:
    return Plane(np.abs(p.data), p.scale_log2)


def rot90_periodic(A: np.ndarray) -> np.ndarray:
    """Rotate a periodic square grid by 90 degrees: out[a, b] = A[b, -a mod N].

    Maps the sampling lattice onto itself, so it commutes exactly with
    circular convolution by a correspondingly rotated filter.  Works on both
    spatial and frequency-domain grids.
    """
    if A.shape[0] != A.shape[1]:
        raise ParameterError("periodic rotation needs a square grid")
    N = A.shape[0]
    neg = (N - np.arange(N)) % N
    return A[:, neg].T
