"""Monte Carlo estimation of the expected SNR, FB rate and outage per UE.

Two estimators are provided:

``geometric``
    drops real screen fields, counts the screens crossing every link and then
    draws fading for that blockage state. Correlation between links that
    share screens is kept.
``enumerated``
    walks through all 2**M LOS/NLOS patterns of the IRS links, treats links
    as independent and weights the per-pattern averages by their
    probabilities.

Randomness is keyed by (estimator, UE coordinates, task index) through
``numpy.random.SeedSequence`` so the output depends only on the seed and the
configuration, never on how the work is split across processes.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import analytic, blockage, channel
from .blockage import BlockageModel
from .channel import RadioConfig
from .geometry import (FactoryLayout, IrsDeployment, in_blind_spot, link_geometry,
                       make_deployment, ue_grid)

log = logging.getLogger(__name__)

MODES = ("geometric", "enumerated")
MAX_ENUMERATED_IRS = 20
DESK_SAMPLES = 100_000
FULL_SCALE_SAMPLES = 10_000_000
CENSOR_EVENTS = 10
# cap on float32 magnitudes held at once
_CHUNK_ELEMENTS = 4_000_000

_TAG_GEOMETRIC = 0
_TAG_ENUMERATED = 1


def split_samples(n: int) -> tuple[int, int]:
    """Split a realisation budget into (blockage drops, fading draws per drop).

    Keeps the 2500:4000 proportion of the full-scale protocol, so ``10**7``
    maps to exactly 2500 x 4000 and ``10**5`` to 250 x 400.
    """
    if n < 1:
        raise ValueError("sample budget must be positive")
    drops = max(1, round(math.sqrt(n * 2500 / 4000)))
    draws = math.ceil(n / drops)
    return drops, draws


@dataclass(frozen=True)
class ScenarioConfig:
    layout: FactoryLayout = field(default_factory=FactoryLayout)
    blockage: BlockageModel = field(default_factory=BlockageModel)
    radio: RadioConfig = field(default_factory=RadioConfig)
    num_irs_M: int = 8
    total_elements_N: int = 960
    irs_height_h: float = 4.0
    mode: str = "geometric"
    n_blockage_drops: int = 250
    n_fading_draws: int = 400
    master_seed: int = 20240901
    ue_grid_resolution: float = 2.0

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.n_blockage_drops < 1 or self.n_fading_draws < 1:
            raise ValueError("need at least one blockage drop and one fading draw")
        if self.num_irs_M < 0:
            raise ValueError("number of IRSs must be non-negative")
        if self.num_irs_M and self.total_elements_N % self.num_irs_M:
            raise ValueError("total elements must divide evenly over the IRSs")
        if self.mode == "enumerated" and self.num_irs_M > MAX_ENUMERATED_IRS:
            raise ValueError(f"enumerated mode supports at most {MAX_ENUMERATED_IRS} IRSs")
        if self.num_irs_M and not (self.blockage.max_height_TB <= self.irs_height_h <= self.layout.height_TF):
            raise ValueError("IRS height must lie in [T_B, T_F] so BS-IRS links stay clear")
        if not 0 <= self.master_seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        if self.blockage.min_height != self.layout.ue_height_TU:
            raise ValueError("blockage minimum height must equal the UE height")

    @property
    def deployment(self) -> IrsDeployment:
        return make_deployment(self.layout, self.num_irs_M, self.total_elements_N,
                               self.irs_height_h, self.radio.element_spacing)

    @property
    def n_samples(self) -> int:
        return self.n_blockage_drops * self.n_fading_draws

    def with_samples(self, n: int) -> "ScenarioConfig":
        drops, draws = split_samples(n)
        return replace(self, n_blockage_drops=drops, n_fading_draws=draws)


@dataclass(frozen=True)
class PointMetrics:
    ue: tuple
    snr_mean: float
    snr_se: float
    fbcap_mean: float
    fbcap_se: float
    outage: float
    outage_se: float
    n_samples: int
    outage_events: int

    @property
    def snr_db(self) -> float:
        return float(10 * np.log10(self.snr_mean)) if self.snr_mean > 0 else -math.inf

    @property
    def snr_se_db(self) -> float:
        """Delta-method standard error of ``snr_db``."""
        return 10 / math.log(10) * self.snr_se / self.snr_mean if self.snr_mean > 0 else math.inf

    @property
    def outage_censored(self) -> bool:
        """Too few outage events to resolve the probability."""
        return self.outage_events < CENSOR_EVENTS

    @property
    def outage_floor(self) -> float:
        return CENSOR_EVENTS / self.n_samples


METRICS = ("snr_db", "fbcap_mean", "outage")


@dataclass
class MetricsReport:
    config: ScenarioConfig
    points: list

    def values(self, metric: str) -> np.ndarray:
        return np.array([getattr(p, metric) for p in self.points], dtype=float)

    def aggregates(self) -> dict:
        """Mean / min / max of each per-UE metric over the grid (SNR in dB)."""
        out = {}
        for metric in METRICS:
            vals = self.values(metric)
            out[metric] = {"mean": float(vals.mean()), "min": float(vals.min()), "max": float(vals.max())}
        return out

    def cdf(self, metric: str) -> tuple[np.ndarray, np.ndarray]:
        vals = np.sort(self.values(metric))
        return vals, np.arange(1, vals.size + 1) / vals.size


# --------------------------------------------------------------------------
# shared per-UE quantities

@dataclass(frozen=True)
class _PointSetup:
    ue: np.ndarray
    key: tuple
    a0_sq: float            # beta0 * omega
    beta_m: np.ndarray
    dm: np.ndarray
    e_b0: float
    e_bm: np.ndarray
    endpoints: np.ndarray   # BS then IRSs
    n_per_irs: int


def _setup(config: ScenarioConfig, ue) -> _PointSetup:
    layout, radio, model = config.layout, config.radio, config.blockage
    ue = np.asarray(ue, dtype=float)
    if not in_blind_spot(layout, ue):
        raise ValueError(f"UE {tuple(ue)} is not inside the blind spot")
    dep = config.deployment
    g = link_geometry(layout, dep, ue)
    GT, GR, mu = radio.tx_gain_GT, radio.rx_gain_GR, radio.wavelength_mu
    beta0 = float(channel.path_loss_direct(g.d0, GT, GR, mu))
    if dep.num_irs_M:
        beta_m = np.atleast_1d(channel.path_loss_indirect(
            g.Dm, g.dm, g.incident_angle_phi, dep.element_spacing_l, GT, GR, mu))
    else:
        beta_m = np.zeros(0)
    e_b0 = blockage.expected_blockers(model, g.d2d0, layout.height_TF)
    e_bm = np.array([blockage.expected_blockers(model, d, dep.irs_height_h) for d in g.d2dm])
    endpoints = np.vstack([layout.bs_position[None, :], dep.positions])
    key = (int(round(ue[0] * 1000)), int(round(ue[1] * 1000)))
    return _PointSetup(ue, key, beta0 * model.shelf_loss_omega, beta_m, g.dm, e_b0, e_bm,
                       endpoints, dep.elements_per_irs)


def _rng(tag: int, config: ScenarioConfig, key: tuple, index: int) -> np.random.Generator:
    ss = np.random.SeedSequence(config.master_seed, spawn_key=(tag, *key, index))
    return np.random.Generator(np.random.PCG64(ss))


def _magnitude_sums(K: np.ndarray, n: int, draws: int, rng: np.random.Generator) -> np.ndarray:
    """(draws, M) array of per-IRS sums of element magnitudes."""
    M = K.size
    out = np.empty((draws, M))
    if M == 0:
        return out
    nlos = np.flatnonzero(K == 0)
    if nlos.size:
        block = rng.standard_exponential((draws, nlos.size, n), dtype=np.float32)
        np.sqrt(block, out=block)
        out[:, nlos] = block.sum(axis=2, dtype=np.float64)
    for m in np.flatnonzero(K > 0):
        out[:, m] = channel.rician_magnitude_sums(float(K[m]), n, draws, rng)
    return out


def _draw_metrics(amp: np.ndarray, radio: RadioConfig):
    rho = radio.rho
    gamma = rho * amp**2
    cap = channel.achievable_rate(gamma, radio.blocklength_S, radio.decode_error_eps)
    out = channel.outage_indicator(amp**2, radio.rate_threshold_R, rho)
    return gamma, cap, out


# --------------------------------------------------------------------------
# geometric estimator

def _geometric_drop(config: ScenarioConfig, st: _PointSetup, drop: int):
    model, radio = config.blockage, config.radio
    rng = _rng(_TAG_GEOMETRIC, config, st.key, drop)
    fld = blockage.sample_field(model, config.layout, rng)
    counts = blockage.count_links(fld, st.endpoints, st.ue)
    b0, bm = int(counts[0]), counts[1:]
    K = channel.rician_factor(st.dm, bm == 0) if bm.size else np.zeros(0)
    draws = config.n_fading_draws
    v = model.penetration_v

    amp = math.sqrt(st.a0_sq * v**b0) * channel.rayleigh_magnitudes(draws, rng)
    if bm.size:
        sums = _magnitude_sums(K, st.n_per_irs, draws, rng)
        amp += sums @ np.sqrt(st.beta_m * v**bm)
    return _draw_metrics(amp, radio)


def estimate_point_geometric(config: ScenarioConfig, ue, fading: str = "magnitude") -> PointMetrics:
    """Blockage-drop x fading-draw average at one UE.

    ``fading="complex"`` draws every complex channel, configures the IRS
    phases and sums the cascaded products explicitly; it is much slower and
    exists to cross-check the magnitude shortcut.
    """
    st = _setup(config, ue)
    nd, nf = config.n_blockage_drops, config.n_fading_draws
    drop_fn = _complex_drop if fading == "complex" else _geometric_drop
    means = np.empty((nd, 3))
    events = 0
    for d in range(nd):
        g, c, o = drop_fn(config, st, d)
        means[d] = g.mean(), c.mean(), o.mean()
        events += int(o.sum())
    if nd > 1:
        # fading draws inside a drop share the blockage state, so the
        # spread of the per-drop means carries the error
        se = means.std(axis=0, ddof=1) / math.sqrt(nd)
    else:
        se = np.array([x.std(ddof=1) / math.sqrt(nf) if nf > 1 else math.nan
                       for x in (g, c, o.astype(float))])
    snr, cap, out = means.mean(axis=0)
    return PointMetrics(tuple(float(x) for x in st.ue), float(snr), float(se[0]), float(cap),
                        float(se[1]), float(out), float(se[2]), nd * nf, events)


def _complex_drop(config: ScenarioConfig, st: _PointSetup, drop: int):
    model, radio = config.blockage, config.radio
    rng = _rng(_TAG_GEOMETRIC, config, st.key, drop)
    fld = blockage.sample_field(model, config.layout, rng)
    counts = blockage.count_links(fld, st.endpoints, st.ue)
    b0, bm = int(counts[0]), counts[1:]
    dep = config.deployment
    geom = link_geometry(config.layout, dep, st.ue)
    amps = np.empty(config.n_fading_draws)
    for k in range(config.n_fading_draws):
        real = channel.draw_realization(geom, dep, radio.wavelength_mu, (b0, bm), rng)
        amps[k] = abs(channel.combined_channel(real, st.a0_sq / model.shelf_loss_omega,
                                               st.beta_m, model.shelf_loss_omega, model.penetration_v))
    return _draw_metrics(amps, radio)


# --------------------------------------------------------------------------
# enumerated estimator

def case_allocation(zeta: np.ndarray, n_total: int) -> np.ndarray:
    """Realisations per blockage case: proportional to probability, at least one."""
    return np.maximum(1, np.ceil(zeta * n_total).astype(np.int64))


def estimate_point_enumerated(config: ScenarioConfig, ue) -> PointMetrics:
    """Probability-weighted sum of per-case conditional averages.

    Links are independent here: LOS links carry no blockers and Rician
    fading, NLOS links carry a zero-truncated Poisson number of blockers and
    Rayleigh fading. The direct link's count is Poisson in every case.
    """
    M = config.num_irs_M
    if M > MAX_ENUMERATED_IRS:
        raise ValueError(f"enumerated mode supports at most {MAX_ENUMERATED_IRS} IRSs")
    st = _setup(config, ue)
    model, radio = config.blockage, config.radio
    v = model.penetration_v
    p = blockage.los_probability(st.e_bm)
    masks, zeta = blockage.all_case_probabilities(p)
    alloc = case_allocation(zeta, config.n_samples)
    alloc[zeta == 0] = 0
    case_of = np.repeat(np.arange(zeta.size), alloc)
    n = case_of.size

    per_irs = max(st.n_per_irs, 1)
    chunk = max(1, _CHUNK_ELEMENTS // (per_irs * max(M, 1)))
    gamma = np.empty(n)
    cap = np.empty(n)
    out = np.empty(n, dtype=bool)
    K_los = channel.rician_factor(st.dm, True) if M else np.zeros(0)
    for ci, start in enumerate(range(0, n, chunk)):
        rng = _rng(_TAG_ENUMERATED, config, st.key, ci)
        sl = slice(start, min(start + chunk, n))
        rows = sl.stop - sl.start
        los = masks[case_of[sl]]
        b0 = rng.poisson(st.e_b0, rows)
        amp = np.sqrt(st.a0_sq * v**b0) * channel.rayleigh_magnitudes(rows, rng)
        for m in range(M):
            bm = np.zeros(rows, dtype=np.int64)
            nl = ~los[:, m]
            if nl.any():
                bm[nl] = blockage.sample_blocked_count(st.e_bm[m], rng, size=int(nl.sum()))
            sums = np.empty(rows)
            if nl.any():
                sums[nl] = channel.rician_magnitude_sums(0.0, st.n_per_irs, int(nl.sum()), rng)
            if (~nl).any():
                sums[~nl] = channel.rician_magnitude_sums(float(K_los[m]), st.n_per_irs, int((~nl).sum()), rng)
            amp += np.sqrt(st.beta_m[m] * v**bm) * sums
        gamma[sl], cap[sl], out[sl] = _draw_metrics(amp, radio)

    weights = zeta[case_of] / alloc[case_of]
    est = []
    ses = []
    for vals in (gamma, cap, out.astype(float)):
        est.append(float(np.sum(weights * vals)))
        s1 = np.bincount(case_of, vals, minlength=zeta.size)
        s2 = np.bincount(case_of, vals**2, minlength=zeta.size)
        with np.errstate(invalid="ignore", divide="ignore"):
            mean_c = s1 / alloc
            var_c = (s2 - alloc * mean_c**2) / (alloc - 1)
        pooled = float(np.var(vals))
        var_c = np.where(alloc > 1, np.maximum(var_c, 0.0), pooled)
        ok = alloc > 0
        ses.append(float(math.sqrt(np.sum(zeta[ok] ** 2 * var_c[ok] / alloc[ok]))))
    return PointMetrics(tuple(float(x) for x in st.ue), est[0], ses[0], est[1], ses[1],
                        est[2], ses[2], n, int(out.sum()))


# --------------------------------------------------------------------------
# grids

def estimate_point(config: ScenarioConfig, ue) -> PointMetrics:
    if config.mode == "enumerated":
        return estimate_point_enumerated(config, ue)
    return estimate_point_geometric(config, ue)


def _point_task(args):
    config, ue = args
    return estimate_point(config, ue)


def run_grid(config: ScenarioConfig, points=None, workers: int = 1) -> MetricsReport:
    """Estimate every UE point; the output does not depend on ``workers``."""
    if points is None:
        points = ue_grid(config.layout, config.ue_grid_resolution)
    points = [tuple(map(float, p)) for p in np.asarray(points)]
    tasks = [(config, ue) for ue in points]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_point_task, tasks))
    else:
        results = []
        for i, t in enumerate(tasks):
            results.append(_point_task(t))
            log.debug("point %d/%d done", i + 1, len(tasks))
    return MetricsReport(config, results)


@dataclass(frozen=True)
class ComparisonRow:
    ue: tuple
    analytic_snr: float
    analytic_snr_assembled: float
    mc_snr: float
    mc_snr_se: float
    analytic_cap_bound: float
    mc_fbcap: float
    mc_fbcap_se: float

    @property
    def analytic_snr_db(self) -> float:
        return float(10 * np.log10(self.analytic_snr))

    @property
    def mc_snr_db(self) -> float:
        return float(10 * np.log10(self.mc_snr))

    @property
    def snr_gap_db(self) -> float:
        return self.analytic_snr_db - self.mc_snr_db

    @property
    def cap_gap(self) -> float:
        return self.analytic_cap_bound - self.mc_fbcap


def compare_analytic(config: ScenarioConfig, points=None, workers: int = 1) -> list:
    """Pair the closed-form values with Monte Carlo estimates at each UE."""
    if config.num_irs_M < 1:
        raise ValueError("the closed form needs at least one IRS")
    report = run_grid(config, points, workers)
    dep = config.deployment
    rows = []
    for pm in report.points:
        inp = analytic.analytic_inputs(config.layout, dep, config.blockage, config.radio, pm.ue)
        snr = analytic.expected_snr_void(inp)
        rows.append(ComparisonRow(
            ue=pm.ue, analytic_snr=snr,
            analytic_snr_assembled=analytic.expected_snr_void_assembled(inp),
            mc_snr=pm.snr_mean, mc_snr_se=pm.snr_se,
            analytic_cap_bound=analytic.fb_capacity_bound(snr, inp.S, inp.eps),
            mc_fbcap=pm.fbcap_mean, mc_fbcap_se=pm.fbcap_se,
        ))
    return rows
