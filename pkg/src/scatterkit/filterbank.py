"""Construction and normalization of the spatial and angular filter banks.

All 2D filters live in the frequency domain on the full N x N grid, built by
periodizing closed-form frequency responses over the 2pi lattice so that
grid values are exact samples of a periodic response.  Resolution changes
happen later by frequency subsampling (see conv_engine).

Slant convention: the Gaussian envelope of a Morlet has spatial standard
deviation `sigma` along the oscillation and `sigma * slant` across it, so
its frequency response is exp(-sigma^2 [(w1 - xi)^2 + slant^2 w2^2] / 2) in
rotated coordinates.  slant <= 1 widens the response across the oscillation,
which is what closes the angular gaps between orientation channels.

Normalization: the lowpass keeps exact unit DC gain; the wavelets of a bank
share one scalar chosen as the largest value keeping the Littlewood-Paley
sum <= 1, which makes the upper frame bound exactly 1 (attained both at DC
and at the binding frequency).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateBankError, ParameterError

DEGENERATE_LOWER_BOUND = 0.2
DEFAULT_SIGMA_PHI = 0.4


@dataclass(frozen=True)
class MorletParams:
    sigma: float = 0.8   # envelope std in pixels at scale j=0
    xi: float = 3 * math.pi / 4   # center frequency, rad/pixel at j=0
    slant: float = 0.5   # envelope aspect ratio (across / along oscillation)

    def __post_init__(self):
        if not self.sigma > 0:
            raise ParameterError(f"sigma must be > 0, got {self.sigma}")
        if not 0 < self.xi < math.pi:
            raise ParameterError(f"xi must be in (0, pi), got {self.xi}")
        if not 0 < self.slant <= 1:
            raise ParameterError(f"slant must be in (0, 1], got {self.slant}")


@dataclass
class SpatialFilterBank:
    psi: dict           # (j, k) -> frequency-domain grid (N x N)
    phi: np.ndarray     # frequency-domain lowpass, phi[0, 0] == 1
    normalization: float
    grid_size: int
    J: int
    K1: int
    j_set: tuple
    angles: tuple       # angle of each k index
    family: str = "morlet"
    bounds: tuple = None   # (A, B) recorded by build_filter_bank


@dataclass
class AngularFilterBank:
    psi_b: dict         # l2 -> complex circular filter, length K1
    phi_b: np.ndarray   # uniform averaging filter, length K1
    K1: int
    octaves: tuple
    normalization: float = 1.0


def _check_power_of_two(N):
    if N < 1 or N & (N - 1):
        raise ParameterError(f"grid size must be a power of two, got {N}")


def _freq_grid(N):
    w = 2 * np.pi * np.fft.fftfreq(N)
    return np.meshgrid(w, w, indexing="ij")


def _periodization_span(sigma, center):
    # exp(-sigma^2 d^2 / 2) < 1e-16 once d > sqrt(2 * 36.8) / sigma; one
    # extra lattice period covers the offset of the bump center.
    halfwidth = math.sqrt(2 * 36.8) / sigma + abs(center)
    return max(1, math.ceil(halfwidth / (2 * np.pi)))


def _gabor_env_hat(N, sigma, xi, theta, slant):
    """Periodized frequency response of an oriented Gaussian bump at radius
    xi in direction theta (all quantities at the working scale)."""
    w1, w2 = _freq_grid(N)
    c, s = math.cos(theta), math.sin(theta)
    P = _periodization_span(sigma, xi)
    acc = np.zeros((N, N))
    for p1 in range(-P, P + 1):
        for p2 in range(-P, P + 1):
            u1 = w1 + 2 * np.pi * p1
            u2 = w2 + 2 * np.pi * p2
            wt1 = c * u1 + s * u2
            wt2 = -s * u1 + c * u2
            acc += np.exp(-sigma**2 * ((wt1 - xi) ** 2 + (slant * wt2) ** 2) / 2)
    return acc


def _morlet_hat(N, j, theta, params):
    """Frequency response of the Morlet at scale 2^j and orientation theta,
    with the Gaussian correction that zeroes the mean exactly."""
    sigma_j = params.sigma * 2.0**j
    xi_j = params.xi / 2.0**j
    env_xi = _gabor_env_hat(N, sigma_j, xi_j, theta, params.slant)
    env_0 = _gabor_env_hat(N, sigma_j, 0.0, theta, params.slant)
    beta = env_xi[0, 0] / env_0[0, 0]
    return env_xi - beta * env_0


def make_morlet_2d(j1, k, params: MorletParams, N: int, K1: int = 8):
    """Morlet wavelet dilated by 2^j1 and rotated to the k-th of K1 angles
    spread over the full circle.  Returned in the frequency domain."""
    _check_power_of_two(N)
    if not 0 <= k < K1:
        raise ParameterError(f"angle index {k} outside [0, {K1})")
    if j1 < 0 or 2.0**j1 > N:
        raise ParameterError(f"scale index {j1} invalid for grid {N}")
    if (2 * j1) != int(2 * j1):
        raise ParameterError(f"scale index must be integer or half-integer, got {j1}")
    theta = 2 * np.pi * k / K1
    return _morlet_hat(N, j1, theta, params)


def make_gaussian_lowpass(J: int, N: int, sigma_phi: float = DEFAULT_SIGMA_PHI):
    """Frequency response of the Gaussian lowpass at scale 2^J, normalized
    to exact unit DC gain."""
    _check_power_of_two(N)
    if 2**J > N:
        raise ParameterError(f"2^J = {2**J} exceeds grid size {N}")
    env = _gabor_env_hat(N, sigma_phi * 2.0**J, 0.0, 0.0, 1.0)
    return env / env[0, 0]


def _haar_psi_hat(j, k, N, K1):
    """Frequency response of a real Haar filter at scale 2^j.

    K1=2: gradients across the two axes.  K1=4 adds the two diagonals,
    ordered by angle (0, 45, 90, 135 degrees).  The +/- split runs over a
    2^{j+1} x 2^{j+1} support, so the mean is exactly zero.
    """
    if j != int(j):
        raise ParameterError(f"haar scales must be integers, got {j}")
    j = int(j)
    size = 2 ** (j + 1)
    if size > N:
        raise ParameterError(f"haar support 2^{j + 1} exceeds grid {N}")
    u0, u1 = np.meshgrid(np.arange(size), np.arange(size), indexing="ij")
    if K1 == 2:
        coord = (u1, u0)[k]
    elif K1 == 4:
        coord = (u1, (u0 + u1) % size, u0, (u0 - u1) % size)[k]
    else:
        raise ParameterError(f"haar family supports K1 in {{2, 4}}, got {K1}")
    cell = np.where(coord < size // 2, 1.0, -1.0) / size**2
    spatial = np.zeros((N, N))
    spatial[:size, :size] = cell
    return np.fft.fft2(spatial)


def neg_freq(A):
    """Grid values at negated frequencies: out[m] = A[-m mod N] per axis."""
    return np.roll(A[::-1, ::-1], (1, 1), axis=(0, 1))


def _wavelet_scale(psis, phi):
    """Largest scalar s such that the symmetrized Littlewood-Paley sum of
    {s * psi} with phi stays <= 1; makes the bound exactly 1."""
    Psi = np.zeros(phi.shape)
    for p in psis:
        Psi += np.abs(p) ** 2
    sym = 0.5 * (Psi + neg_freq(Psi))
    num = 1.0 - phi**2
    mask = sym > 1e-30
    if not np.any(mask):
        return 0.0
    return math.sqrt(np.min(num[mask] / sym[mask]))


def littlewood_paley_scan(bank: SpatialFilterBank):
    """Frame-bound scan: LP(w) = |phi(w)|^2 + 1/2 sum_j,k (|psi(w)|^2 +
    |psi(-w)|^2).  Returns (A, B, LP grid)."""
    LP = bank.phi.astype(np.float64) ** 2
    acc = np.zeros_like(LP)
    for p in bank.psi.values():
        acc += np.abs(p) ** 2
    LP += 0.5 * (acc + neg_freq(acc))
    return float(LP.min()), float(LP.max()), LP


def _assemble_spatial_bank(N, J, K1, j_set, family, params, sigma_phi,
                           angle_span):
    phi = make_gaussian_lowpass(J, N, sigma_phi)
    psi = {}
    for j in j_set:
        for k in range(K1):
            if family == "morlet":
                theta = angle_span * k / K1
                psi[(j, k)] = _morlet_hat(N, j, theta, params)
            else:
                psi[(j, k)] = _haar_psi_hat(j, k, N, K1)
    s = _wavelet_scale(list(psi.values()), phi)
    for key in psi:
        psi[key] = psi[key] * s
    if family == "morlet":
        angles = tuple(angle_span * k / K1 for k in range(K1))
    else:
        angles = tuple(np.pi * k / K1 for k in range(K1))
    bank = SpatialFilterBank(psi=psi, phi=phi, normalization=s, grid_size=N,
                             J=J, K1=K1, j_set=tuple(j_set), angles=angles,
                             family=family)
    A, B, _ = littlewood_paley_scan(bank)
    bank.bounds = (A, B)
    return bank


def make_haar_bank(J: int, K1: int, N: int,
                   sigma_phi: float = DEFAULT_SIGMA_PHI) -> SpatialFilterBank:
    """Normalized bank of real Haar filters at scales 2^0 .. 2^{J-1}."""
    _check_power_of_two(N)
    if K1 not in (2, 4):
        raise ParameterError(f"haar family supports K1 in {{2, 4}}, got {K1}")
    return _assemble_spatial_bank(N, J, K1, range(J), "haar", None, sigma_phi,
                                  np.pi)


def make_angular_bank(K1: int, octaves=(0, 1, 2),
                      params: MorletParams | None = None) -> AngularFilterBank:
    """1D periodic Morlets on Z/K1 at scales 2^l2, plus the uniform
    averaging filter.  Normalized so that, over the K1 circular frequency
    bins, |phi_b|^2 + sum_l |psi_b_l|^2 <= 1 without symmetrization (the
    inputs of this stage are complex)."""
    if K1 < 4:
        raise ParameterError(f"angular bank needs K1 >= 4, got {K1}")
    params = params or MorletParams()
    octaves = tuple(octaves)
    psi_b = {}
    for l2 in octaves:
        if 2**l2 >= K1:
            raise ParameterError(f"angular scale 2^{l2} must be < K1 = {K1}")
        sigma_l = params.sigma * 2.0**l2
        xi_l = params.xi / 2.0**l2
        P = math.ceil(math.sqrt(2 * 36.8) * sigma_l / K1)
        t = np.arange(K1, dtype=np.float64)
        g_xi = np.zeros(K1, dtype=np.complex128)
        g_0 = np.zeros(K1)
        for p in range(-P, P + 1):
            tp = t + p * K1
            env = np.exp(-(tp**2) / (2 * sigma_l**2))
            g_xi += env * np.exp(1j * xi_l * tp)
            g_0 += env
        beta = g_xi.sum() / g_0.sum()
        psi_b[l2] = g_xi - beta * g_0
    phi_b = np.full(K1, 1.0 / K1)
    Dphi = np.fft.fft(phi_b)
    acc = np.zeros(K1)
    for v in psi_b.values():
        acc += np.abs(np.fft.fft(v)) ** 2
    num = 1.0 - np.abs(Dphi) ** 2
    mask = acc > 1e-30
    s = math.sqrt(np.min(num[mask] / acc[mask])) if np.any(mask) else 0.0
    for l2 in psi_b:
        psi_b[l2] = psi_b[l2] * s
    return AngularFilterBank(psi_b=psi_b, phi_b=phi_b, K1=K1, octaves=octaves,
                             normalization=s)


def build_filter_bank(config):
    """Build the layer-1 spatial bank, the angular bank, and the layer-2
    spatial bank for a ScatteringConfig.  Each spatial bank is normalized to
    upper frame bound exactly 1 and checked against frequency holes."""
    family = config.family
    params = config.morlet
    if family == "morlet":
        span1 = 2 * np.pi          # layer 1: full circle, theta = 2 pi k / K1
        span2 = np.pi              # layer 2: half circle, theta = pi k / K2
    elif family == "haar":
        span1 = span2 = np.pi
        if config.K1 not in (2, 4) or config.K2 not in (2, 4):
            raise ParameterError("haar family supports K1, K2 in {2, 4}")
    else:
        raise ParameterError(f"unknown wavelet family {family!r}")

    bank1 = _assemble_spatial_bank(config.N, config.J, config.K1,
                                   config.j1_set, family, params,
                                   config.sigma_phi, span1)
    j2_all = sorted({j2 for j1 in config.j1_set for j2 in config.j2_list(j1)})
    bank2 = _assemble_spatial_bank(config.N, config.J, config.K2, j2_all,
                                   family, params, config.sigma_phi, span2)
    # The strict j2 rule drops the finest octave from bank2 by design, so
    # its lower bound is only meaningful under the inclusive rule.
    checked = [(bank1, "layer-1")]
    if config.j2_rule == "inclusive":
        checked.append((bank2, "layer-2"))
    for bank, name in checked:
        if bank.bounds[0] < DEGENERATE_LOWER_BOUND:
            raise DegenerateBankError(
                f"{name} bank is degenerate: lower frame bound "
                f"{bank.bounds[0]:.4f} < {DEGENERATE_LOWER_BOUND} "
                f"(parameters leave frequency holes)")
    if config.l2_set:
        angular = make_angular_bank(config.K1, config.l2_set, params)
    else:
        angular = AngularFilterBank(psi_b={}, phi_b=np.full(config.K1, 1.0 / config.K1),
                                    K1=config.K1, octaves=())
    return bank1, angular, bank2
