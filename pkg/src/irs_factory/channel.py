"""Link budget, fading channels, IRS phase configuration and per-draw metrics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0
THERMAL_NOISE_DBM_HZ = -174.0


def db_to_linear(x):
    return 10.0 ** (np.asarray(x, dtype=float) / 10.0)


def linear_to_db(x):
    return 10.0 * np.log10(x)


@dataclass(frozen=True)
class RadioConfig:
    frequency: float = 28e9
    tx_gain_dbi: float = 24.0
    rx_gain_dbi: float = 10.0
    tx_power_dbm: float = 30.0
    noise_figure_db: float = 9.0
    bandwidth_hz: float = 400e6
    blocklength_S: float = 200.0
    decode_error_eps: float = 1e-9
    rate_threshold_R: float = 0.1
    # "Hz" is the physical noise floor; "MHz" plugs the MHz figure into the log
    bandwidth_unit: str = "Hz"

    def __post_init__(self):
        if self.frequency <= 0 or self.bandwidth_hz <= 0:
            raise ValueError("frequency and bandwidth must be positive")
        if not 0 < self.decode_error_eps < 0.5:
            raise ValueError("decoding error probability must lie in (0, 0.5)")
        if self.blocklength_S <= 0:
            raise ValueError("blocklength must be positive")
        if self.rate_threshold_R < 0:
            raise ValueError("rate threshold must be non-negative")
        if self.bandwidth_unit not in ("Hz", "MHz"):
            raise ValueError(f"unknown bandwidth unit {self.bandwidth_unit!r}")

    @property
    def wavelength_mu(self) -> float:
        return SPEED_OF_LIGHT / self.frequency

    @property
    def element_spacing(self) -> float:
        return self.wavelength_mu / 2

    @property
    def tx_gain_GT(self) -> float:
        return float(db_to_linear(self.tx_gain_dbi))

    @property
    def rx_gain_GR(self) -> float:
        return float(db_to_linear(self.rx_gain_dbi))

    @property
    def noise_power_dbm(self) -> float:
        z = self.bandwidth_hz if self.bandwidth_unit == "Hz" else self.bandwidth_hz / 1e6
        return noise_power(self.noise_figure_db, z)

    @property
    def rho(self) -> float:
        """Transmit SNR, linear."""
        return float(db_to_linear(transmit_snr(self.tx_power_dbm, self.noise_power_dbm)))


def noise_power(sigma_db: float, bandwidth: float) -> float:
    """Noise power in dBm for a noise figure (dB) over ``bandwidth``."""
    if bandwidth <= 0:
        raise ValueError("bandwidth must be positive")
    return THERMAL_NOISE_DBM_HZ + sigma_db + 10.0 * math.log10(bandwidth)


def transmit_snr(pt_dbm: float, pw_dbm: float) -> float:
    return pt_dbm - pw_dbm


def path_loss_direct(d0, GT, GR, mu):
    d0 = np.asarray(d0, dtype=float)
    if np.any(d0 <= 0):
        raise ValueError("distance must be positive")
    return GT * GR * mu**2 / (4 * math.pi * d0) ** 2


def path_loss_indirect(Dm, dm, phi, l, GT, GR, mu):
    """Free-space loss of the BS-IRS-UE path for one reflecting element."""
    Dm = np.asarray(Dm, dtype=float)
    dm = np.asarray(dm, dtype=float)
    if np.any(Dm <= 0) or np.any(dm <= 0):
        raise ValueError("distances must be positive")
    return GT * GR * mu**2 / (4 * math.pi) ** 3 * (l / (Dm * dm)) ** 2 * np.cos(phi) ** 2


def steering_vector(delta_h, delta_v, Nh, Nv, l, mu):
    """Unit-modulus planar-array response, row-vectorised over (a, b).

    Element (a, b) (zero-based here) sits at ``l*a`` along the wall and
    ``l*b`` upward; the returned vector is ordered with a as the slow index.
    """
    a = np.arange(Nh)[:, None]
    b = np.arange(Nv)[None, :]
    phase = 2 * math.pi * l * math.sin(delta_v) * (a * math.cos(delta_h) + b * math.sin(delta_h)) / mu
    return np.exp(1j * phase).ravel()


def rician_factor(dm, is_los):
    """Linear K factor of an IRS-UE link; NLOS links are pure Rayleigh."""
    k_db = 7.34 - 0.046 * np.asarray(dm, dtype=float)
    return np.where(is_los, 10.0 ** (k_db / 10.0), 0.0)


def complex_gaussian(rng: np.random.Generator, size):
    """Circularly-symmetric CN(0, 1) samples."""
    return (rng.standard_normal(size) + 1j * rng.standard_normal(size)) * math.sqrt(0.5)


def sample_ru_channel(K: float, los_steering, rng: np.random.Generator):
    if K < 0:
        raise ValueError("Rician factor must be non-negative")
    los_steering = np.asarray(los_steering)
    if math.isinf(K):
        return los_steering.astype(complex)
    w = complex_gaussian(rng, los_steering.shape)
    return math.sqrt(K / (1 + K)) * los_steering + math.sqrt(1 / (1 + K)) * w


def rician_magnitude_sums(K: float, n_elements: int, n_draws: int, rng: np.random.Generator) -> np.ndarray:
    """Draws of sum_n |f_n| for ``n_elements`` i.i.d. unit-power Rician entries.

    The magnitude of a unit-modulus LOS term plus circular noise does not
    depend on the LOS phase, so the steering vector drops out here. Rayleigh
    magnitudes come from sqrt(Exp(1)), which is cheaper than two normals.
    """
    if n_elements == 0:
        return np.zeros(n_draws)
    shape = (n_draws, n_elements)
    if K == 0:
        mag = rng.standard_exponential(shape, dtype=np.float32)
        np.sqrt(mag, out=mag)
    else:
        scale = np.float32(math.sqrt(0.5 / (1 + K)))
        re = rng.standard_normal(shape, dtype=np.float32)
        im = rng.standard_normal(shape, dtype=np.float32)
        re *= scale
        re += np.float32(math.sqrt(K / (1 + K)))
        im *= scale
        re *= re
        im *= im
        re += im
        mag = np.sqrt(re, out=re)
    return mag.sum(axis=1, dtype=np.float64)


def rayleigh_magnitudes(n: int, rng: np.random.Generator) -> np.ndarray:
    return np.sqrt(rng.standard_exponential(n))


@dataclass
class ChannelRealization:
    """One joint draw of all small-scale channels and blockage counts.

    ``f_ru[m]`` and ``F_br[m]`` are length N/M vectors for IRS m;
    ``block_counts`` is ``(B_0, [B_1..B_M])``.
    """

    f_bu: complex
    f_ru: list
    F_br: list
    block_counts: tuple
    rician_K: np.ndarray
    phases_theta: list = field(default_factory=list)


def optimal_phases(f_bu, f_ru, F_br):
    """Phase shifts that align every cascaded path with the direct channel."""
    ref = np.angle(f_bu) if f_bu != 0 else 0.0
    out = []
    for fr, Fb in zip(f_ru, F_br):
        fr = np.asarray(fr)
        Fb = np.asarray(Fb)
        theta = ref - np.angle(fr) - np.angle(Fb)
        theta = np.where((fr == 0) | (Fb == 0), ref, theta)
        out.append(theta)
    return out


def combined_channel(real: ChannelRealization, beta0, betam, omega, v) -> complex:
    """f_0 + f_Xi by explicit complex products, using the stored phases."""
    b0, bm = real.block_counts
    total = math.sqrt(beta0 * omega * v**b0) * real.f_bu
    for m, (fr, Fb, th) in enumerate(zip(real.f_ru, real.F_br, real.phases_theta)):
        total += math.sqrt(betam[m] * v ** bm[m]) * np.sum(fr * np.exp(1j * th) * Fb)
    return complex(total)


def received_snr(real: ChannelRealization, rho, beta0, betam, omega, v) -> float:
    """Received SNR after coherent combining, magnitude-sum form."""
    b0, bm = real.block_counts
    amp = math.sqrt(beta0 * omega * v**b0) * abs(real.f_bu)
    for m, fr in enumerate(real.f_ru):
        amp += math.sqrt(betam[m] * v ** bm[m]) * np.abs(fr).sum()
    return rho * amp**2


def q_function(x):
    return 0.5 * math.erfc(x / math.sqrt(2.0))


def q_inverse(eps: float) -> float:
    """x with Q(x) = eps for eps in (0, 0.5).

    Bisection to bracket, then Newton steps on log Q for a tight relative fit
    deep in the tail.
    """
    if not 0 < eps < 0.5:
        raise ValueError(f"eps must lie in (0, 0.5), got {eps}")
    lo, hi = 0.0, 1.0
    while q_function(hi) > eps:
        lo, hi = hi, 2 * hi
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if q_function(mid) > eps:
            lo = mid
        else:
            hi = mid
    x = 0.5 * (lo + hi)
    log_eps = math.log(eps)
    for _ in range(20):
        q = q_function(x)
        pdf = math.exp(-0.5 * x * x) / math.sqrt(2 * math.pi)
        step = (math.log(q) - log_eps) * q / pdf
        x += step
        if abs(step) < 1e-15 * max(1.0, x):
            break
    return x


_QINV_CACHE: dict[float, float] = {}


def _qinv_cached(eps: float) -> float:
    if eps not in _QINV_CACHE:
        _QINV_CACHE[eps] = q_inverse(eps)
    return _QINV_CACHE[eps]


def fb_capacity(gamma, S, eps):
    """Finite-blocklength rate (bit/s/Hz) at SNR ``gamma``.

    Raw normal-approximation value; it goes negative for very low SNR.
    """
    gamma = np.asarray(gamma, dtype=float)
    if np.any(gamma < 0):
        raise ValueError("SNR must be non-negative")
    if S <= 0:
        raise ValueError("blocklength must be positive")
    disp = np.sqrt(np.maximum(1.0 / S - 1.0 / (S * (1.0 + gamma) ** 2), 0.0))
    return np.log2(1.0 + gamma) - disp * _qinv_cached(eps) / math.log(2.0)


def achievable_rate(gamma, S, eps):
    """Finite-blocklength rate floored at zero."""
    return np.maximum(fb_capacity(gamma, S, eps), 0.0)


def outage_indicator(power, R, rho):
    """True where |f_0 + f_Xi|^2 is below the rate-R threshold."""
    if R < 0:
        raise ValueError("rate threshold must be non-negative")
    return np.asarray(power) < (2.0**R - 1.0) / rho


def draw_realization(geom, deployment, wavelength, counts, rng: np.random.Generator) -> ChannelRealization:
    """Full complex draw of every channel for fixed blockage counts.

    ``geom`` is a :class:`~irs_factory.geometry.LinkGeometry`; an IRS link is
    LOS exactly when its count is zero. Phases come back already configured.
    """
    b0, bm = counts
    f_bu = complex(complex_gaussian(rng, ()))
    nh, nv, l = deployment.grid_Nh, deployment.grid_Nv, deployment.element_spacing_l
    K = rician_factor(geom.dm, np.asarray(bm) == 0)
    f_ru, F_br = [], []
    for m in range(deployment.num_irs_M):
        F_br.append(np.conj(steering_vector(*geom.aoa_br[m], nh, nv, l, wavelength)))
        los = steering_vector(*geom.aod_ru[m], nh, nv, l, wavelength)
        f_ru.append(sample_ru_channel(float(K[m]), los, rng))
    real = ChannelRealization(f_bu, f_ru, F_br, (b0, list(bm)), K)
    real.phases_theta = optimal_phases(f_bu, f_ru, F_br)
    return real
