"""Two-layer scattering cascade: S0/U1/S1/U2/S2 with average pooling, plus
the max-pooling variant.

Layer 2 factorizes the separable wavelet as: spatial convolution with
psi_{j2,theta2} (with dyadic subsampling), then circular convolution along
the orientation axis with each angular filter, then a single modulus.  The
scale axis j1 is left untransformed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .conv_engine import Plane, fold_spectrum, subsample_filter
from .errors import ParameterError
from .filterbank import (DEFAULT_SIGMA_PHI, MorletParams, build_filter_bank)

ANGULAR_AVG = "avg"   # band label of the angular lowpass path


def stride_log2(j) -> int:
    """Dyadic subsampling exponent for a scale-j wavelet output: 2^{j-1},
    clamped to 1 at the finest scales (and floored for Q=2)."""
    return max(0, math.floor(j - 1))


@dataclass(frozen=True)
class ScatteringConfig:
    N: int = 128
    J: int = 5
    K1: int = 8
    K2: int = 8
    Q: int = 1
    j1_set: tuple = None
    j2_rule: str = "inclusive"       # "inclusive": j2 >= j1; "strict": j2 > j1
    l2_set: tuple = (0, 1, 2)
    family: str = "morlet"
    pooling: str = "average"         # average | max | max_overlap
    pool_window_log2: int = 5
    output_stride_log2: int = None   # defaults to J - 1
    color: str = "gray"              # gray | yuv
    morlet: MorletParams = MorletParams()
    sigma_phi: float = DEFAULT_SIGMA_PHI

    def __post_init__(self):
        if self.N < 1 or self.N & (self.N - 1):
            raise ParameterError(f"N must be a power of two, got {self.N}")
        if self.Q not in (1, 2):
            raise ParameterError(f"Q must be 1 or 2, got {self.Q}")
        if 2**self.J > self.N:
            raise ParameterError(f"2^J = {2**self.J} exceeds N = {self.N}")
        if self.j1_set is None:
            step = 1.0 / self.Q
            js = tuple(k * step for k in range(self.J * self.Q))
            if self.Q == 1:
                js = tuple(int(j) for j in js)
            object.__setattr__(self, "j1_set", js)
        else:
            object.__setattr__(self, "j1_set", tuple(self.j1_set))
        if self.output_stride_log2 is None:
            object.__setattr__(self, "output_stride_log2", self.J - 1)
        if self.j2_rule not in ("inclusive", "strict"):
            raise ParameterError(f"unknown j2 rule {self.j2_rule!r}")
        if self.pooling not in ("average", "max", "max_overlap"):
            raise ParameterError(f"unknown pooling mode {self.pooling!r}")
        if self.color not in ("gray", "yuv"):
            raise ParameterError(f"unknown color mode {self.color!r}")
        if self.family not in ("morlet", "haar"):
            raise ParameterError(f"unknown wavelet family {self.family!r}")
        object.__setattr__(self, "l2_set", tuple(self.l2_set))
        for j in self.j1_set:
            if not 0 <= j <= self.J:
                raise ParameterError(f"j1 = {j} outside [0, J = {self.J}]")
        for l2 in self.l2_set:
            if not 0 <= l2 <= self.J:
                raise ParameterError(f"l2 = {l2} outside [0, J = {self.J}]")
        if not 0 <= self.output_stride_log2 <= self.J:
            raise ParameterError(
                f"output stride 2^{self.output_stride_log2} outside [1, 2^J]")
        max_stride = max((stride_log2(j) for js in
                          ([self.j1_set] + [self.j2_list(j) for j in self.j1_set])
                          for j in js), default=0)
        if self.output_stride_log2 < max_stride:
            raise ParameterError(
                f"output stride 2^{self.output_stride_log2} finer than the "
                f"coarsest wavelet stride 2^{max_stride}")
        if self.pooling != "average":
            if 2**self.pool_window_log2 > self.N:
                raise ParameterError(
                    f"pooling window 2^{self.pool_window_log2} exceeds "
                    f"N = {self.N}")
            need = max_stride + (1 if self.pooling == "max_overlap" else 0)
            if self.pool_window_log2 < need:
                raise ParameterError(
                    f"pooling window 2^{self.pool_window_log2} too small for "
                    f"the coarsest wavelet stride 2^{max_stride}")

    def j2_list(self, j1) -> tuple:
        """Admissible second-layer scales for a first-layer scale j1."""
        step = 1.0 / self.Q
        lo = j1 if self.j2_rule == "inclusive" else j1 + step
        out = []
        j2 = lo
        while j2 <= self.J + 1e-9:
            out.append(int(j2) if self.Q == 1 else j2)
            j2 += step
        return tuple(out)

    @property
    def channels(self) -> int:
        return 3 if self.color == "yuv" else 1


@dataclass
class Layer1Tensor:
    """Post-modulus first-layer coefficients, one (K1, M, M) stack per j1."""
    slices: dict      # j1 -> (K1, M_j, M_j) nonnegative
    strides: dict     # j1 -> dyadic stride exponent


@dataclass
class Layer2Tensor:
    """Post-modulus second-layer coefficients keyed by (j1, j2, k2, band);
    each value keeps the orientation output axis: (K1, M, M)."""
    maps: dict
    strides: dict
    order: tuple      # deterministic key order


@dataclass(frozen=True)
class PathEntry:
    order: int
    channel: int
    shape: tuple
    j1: object = None
    t1: int = None
    j2: object = None
    t2: int = None
    band: object = None


@dataclass
class ScatteringFeatures:
    values: np.ndarray
    paths: tuple


def _fmt_scale(j):
    return f"{j:g}"


def path_line(e: PathEntry) -> str:
    parts = [str(e.order), f"ch={e.channel}"]
    if e.order >= 1:
        parts += [f"j1={_fmt_scale(e.j1)}", f"t1={e.t1}"]
    if e.order == 2:
        parts += [f"j2={_fmt_scale(e.j2)}", f"t2={e.t2}", f"b={e.band}"]
    parts.append(f"shape={e.shape[0]}x{e.shape[1]}")
    return " ".join(parts)


class ScatteringTransform:
    """Precomputed filter banks and per-resolution filter tables for one
    configuration.  Immutable after construction; safe to share across
    threads."""

    def __init__(self, config: ScatteringConfig):
        self.config = config
        self.bank1, self.angular, self.bank2 = build_filter_bank(config)
        cfg = config
        self._psi1 = {j1: np.stack([self.bank1.psi[(j1, k)] for k in range(cfg.K1)])
                      for j1 in cfg.j1_set}
        # layer-2 filters viewed at each input resolution they will meet
        self._psi2 = {}
        for j1 in cfg.j1_set:
            s_in = stride_log2(j1)
            for j2 in cfg.j2_list(j1):
                for k2 in range(cfg.K2):
                    key = (j2, k2, s_in)
                    if key not in self._psi2:
                        self._psi2[key] = subsample_filter(
                            self.bank2.psi[(j2, k2)], 1 << s_in)
        self._phi_at = {}
        for s in {0} | {stride_log2(j) for j in cfg.j1_set} | \
                {stride_log2(j2) for j1 in cfg.j1_set for j2 in cfg.j2_list(j1)}:
            self._phi_at[s] = subsample_filter(self.bank1.phi, 1 << s)
        self._bands = list(cfg.l2_set) + [ANGULAR_AVG]
        self._band_hat = {l2: np.fft.fft(v) for l2, v in self.angular.psi_b.items()}
        self._band_hat[ANGULAR_AVG] = np.fft.fft(self.angular.phi_b)

    # ---- cascade stages ----

    def _check_input(self, x: Plane):
        if x.data.shape != (self.config.N, self.config.N):
            raise ParameterError(
                f"input shape {x.data.shape} != configured "
                f"{(self.config.N, self.config.N)}")

    def layer0(self, x: Plane) -> np.ndarray:
        """x * phi_J on the output grid (the S0 block)."""
        self._check_input(x)
        S = self.config.output_stride_log2
        prod = np.fft.fft2(x.data) * self.bank1.phi
        return np.fft.ifft2(fold_spectrum(prod, 1 << S)).real

    def layer1(self, x: Plane) -> Layer1Tensor:
        self._check_input(x)
        xhat = np.fft.fft2(x.data)
        slices, strides = {}, {}
        for j1 in self.config.j1_set:
            s = stride_log2(j1)
            prod = fold_spectrum(xhat[None] * self._psi1[j1], 1 << s)
            out = np.fft.ifft2(prod, axes=(1, 2))
            if self.config.family == "haar":
                out = out.real   # hermitian filters keep real signals real
            slices[j1] = np.abs(out)
            strides[j1] = s
        return Layer1Tensor(slices=slices, strides=strides)

    def layer2(self, U1: Layer1Tensor) -> Layer2Tensor:
        cfg = self.config
        maps, strides, order = {}, {}, []
        for j1 in cfg.j1_set:
            stack = U1.slices[j1]
            s_in = U1.strides[j1]
            xhat = np.fft.fft2(stack, axes=(1, 2))
            for j2 in cfg.j2_list(j1):
                s_out = stride_log2(j2)
                r = 1 << (s_out - s_in)
                for k2 in range(cfg.K2):
                    prod = fold_spectrum(xhat * self._psi2[(j2, k2, s_in)], r)
                    Y = np.fft.ifft2(prod, axes=(1, 2))
                    yhat = np.fft.fft(Y, axis=0)
                    for band in self._bands:
                        Z = np.fft.ifft(yhat * self._band_hat[band][:, None, None],
                                        axis=0)
                        key = (j1, j2, k2, band)
                        maps[key] = np.abs(Z)
                        strides[key] = s_out
                        order.append(key)
        return Layer2Tensor(maps=maps, strides=strides, order=tuple(order))

    # ---- pooling ----

    def _pool_avg(self, stack: np.ndarray, s: int) -> np.ndarray:
        """Average-pool slices at stride 2^s down to the output grid:
        convolve with phi_J at the slice's resolution, then subsample."""
        r = self.config.output_stride_log2 - s
        if r < 0:
            raise ParameterError(
                f"slice stride 2^{s} coarser than output grid (config invariant)")
        prod = np.fft.fft2(stack, axes=(-2, -1)) * self._phi_at[s]
        return np.fft.ifft2(fold_spectrum(prod, 1 << r), axes=(-2, -1)).real

    def pool_average(self, T):
        """Pool a layer tensor to S blocks; returns a list of
        (index tuple, 2D block) in deterministic order."""
        out = []
        if isinstance(T, Layer1Tensor):
            for j1 in self.config.j1_set:
                pooled = self._pool_avg(T.slices[j1], T.strides[j1])
                for k in range(self.config.K1):
                    out.append(((j1, k), pooled[k]))
        elif isinstance(T, Layer2Tensor):
            for key in T.order:
                pooled = self._pool_avg(T.maps[key], T.strides[key])
                j1, j2, k2, band = key
                for t1 in range(self.config.K1):
                    out.append(((j1, t1, j2, k2, band), pooled[t1]))
        else:
            raise ParameterError(f"cannot pool {type(T).__name__}")
        return out

    def _pool_max(self, plane: np.ndarray, s: int) -> np.ndarray:
        cfg = self.config
        w = cfg.pool_window_log2
        if 2**w > cfg.N:
            raise ParameterError(f"pooling window 2^{w} exceeds grid {cfg.N}")
        m = 1 << (w - s)    # window size in samples at this resolution
        M = plane.shape[-1]
        if m > M:
            raise ParameterError(f"pooling window 2^{w} exceeds slice extent")
        if cfg.pooling == "max":
            shape = plane.shape[:-2] + (M // m, m, M // m, m)
            return plane.reshape(shape).max(axis=(-3, -1))
        if m < 2:
            raise ParameterError(
                "overlapping max pooling needs windows of at least 2 samples")
        win = np.lib.stride_tricks.sliding_window_view(plane, (m, m), axis=(-2, -1))
        return win[..., ::m // 2, ::m // 2, :, :].max(axis=(-2, -1))

    def pool_max(self, T, window_log2: int = None, overlapping: bool = None):
        """Max-pool a layer tensor (or the raw input plane for order 0) with
        windows of 2^window_log2 original pixels."""
        cfg = self.config
        if window_log2 is not None and window_log2 != cfg.pool_window_log2:
            raise ParameterError("window must match config.pool_window_log2")
        if overlapping is not None:
            want = "max_overlap" if overlapping else "max"
            if want != cfg.pooling:
                raise ParameterError("overlap flag must match config.pooling")
        out = []
        if isinstance(T, Plane):
            out.append(((), self._pool_max(T.data, T.scale_log2)))
        elif isinstance(T, Layer1Tensor):
            for j1 in cfg.j1_set:
                pooled = self._pool_max(T.slices[j1], T.strides[j1])
                for k in range(cfg.K1):
                    out.append(((j1, k), pooled[k]))
        elif isinstance(T, Layer2Tensor):
            for key in T.order:
                pooled = self._pool_max(T.maps[key], T.strides[key])
                j1, j2, k2, band = key
                for t1 in range(cfg.K1):
                    out.append(((j1, t1, j2, k2, band), pooled[t1]))
        else:
            raise ParameterError(f"cannot pool {type(T).__name__}")
        return out

    # ---- assembly ----

    def _channel_blocks(self, x: Plane):
        cfg = self.config
        U1 = self.layer1(x)
        U2 = self.layer2(U1)
        if cfg.pooling == "average":
            s0 = [((), self.layer0(x))]
            s1 = self.pool_average(U1)
            s2 = self.pool_average(U2)
        else:
            s0 = self.pool_max(x)
            s1 = self.pool_max(U1)
            s2 = self.pool_max(U2)
        return s0, s1, s2

    def scatter(self, x) -> ScatteringFeatures:
        cfg = self.config
        if cfg.color == "yuv":
            if not isinstance(x, (tuple, list)) or len(x) != 3:
                raise ParameterError("yuv scattering expects three planes")
            channels = list(x)
        else:
            if isinstance(x, (tuple, list)):
                raise ParameterError("gray scattering expects a single plane")
            channels = [x]
        values, paths = [], []
        for c, plane in enumerate(channels):
            s0, s1, s2 = self._channel_blocks(plane)
            for _, block in s0:
                paths.append(PathEntry(order=0, channel=c, shape=block.shape))
                values.append(block.ravel())
            for (j1, t1), block in s1:
                paths.append(PathEntry(order=1, channel=c, shape=block.shape,
                                       j1=j1, t1=t1))
                values.append(block.ravel())
            for (j1, t1, j2, t2, band), block in s2:
                paths.append(PathEntry(order=2, channel=c, shape=block.shape,
                                       j1=j1, t1=t1, j2=j2, t2=t2, band=band))
                values.append(block.ravel())
        return ScatteringFeatures(values=np.concatenate(values),
                                  paths=tuple(paths))


_transform_cache: dict = {}


def get_transform(config: ScatteringConfig) -> ScatteringTransform:
    """Shared per-config transform cache (bank construction is the expensive
    part; transforms are immutable)."""
    if config not in _transform_cache:
        if len(_transform_cache) > 8:
            _transform_cache.clear()
        _transform_cache[config] = ScatteringTransform(config)
    return _transform_cache[config]


def scatter(x, config: ScatteringConfig) -> ScatteringFeatures:
    return get_transform(config).scatter(x)


def _block_shape(config: ScatteringConfig) -> tuple:
    if config.pooling == "average":
        n = config.N >> config.output_stride_log2
    else:
        n = config.N >> config.pool_window_log2
        if config.pooling == "max_overlap":
            n = 2 * n - 1
    return (n, n)


def _cells(config: ScatteringConfig) -> int:
    h, w = _block_shape(config)
    return h * w


def enumerate_paths(config: ScatteringConfig) -> tuple:
    """Path table for a configuration, in the exact order scatter() emits
    blocks; lets feature files be described without scattering an image."""
    shape = _block_shape(config)
    bands = tuple(config.l2_set) + (ANGULAR_AVG,)
    paths = []
    for c in range(config.channels):
        paths.append(PathEntry(order=0, channel=c, shape=shape))
        for j1 in config.j1_set:
            for t1 in range(config.K1):
                paths.append(PathEntry(order=1, channel=c, shape=shape,
                                       j1=j1, t1=t1))
        for j1 in config.j1_set:
            for j2 in config.j2_list(j1):
                for k2 in range(config.K2):
                    for band in bands:
                        for t1 in range(config.K1):
                            paths.append(PathEntry(
                                order=2, channel=c, shape=shape,
                                j1=j1, t1=t1, j2=j2, t2=k2, band=band))
    return tuple(paths)


def count_features(config: ScatteringConfig) -> int:
    """Closed-form feature count: path enumeration x output cells x
    channels."""
    n_order1 = len(config.j1_set) * config.K1
    n_order2 = sum(len(config.j2_list(j1)) for j1 in config.j1_set) \
        * config.K2 * (len(config.l2_set) + 1) * config.K1
    blocks = 1 + n_order1 + n_order2
    return blocks * _cells(config) * config.channels
