"""Closed-form expected SNR and capacity bound for very dense blockages.

When every IRS-UE link is almost surely blocked, all reflected channels are
Rayleigh and the blockage losses decouple from the fading, so the expected
SNR reduces to Poisson moments of ``v**B`` times Rayleigh moments.

Two routes to the same number are kept on purpose:

* :func:`expected_snr_void` writes the expression out in the raw scene
  parameters (densities, heights, distances, gains);
* :func:`expected_snr_void_assembled` builds it from path-loss factors and
  blockage moments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import blockage, channel
from .blockage import BlockageModel
from .channel import RadioConfig
from .geometry import FactoryLayout, IrsDeployment, link_geometry


@dataclass(frozen=True)
class AnalyticInputs:
    rho: float
    beta0: float
    betam: np.ndarray
    omega: float
    v: float
    E_B0: float
    E_Bm: np.ndarray
    N: int
    M: int
    l: float
    mu: float
    GT: float
    GR: float
    d0: float
    d2d0: float
    Dm: np.ndarray
    dm: np.ndarray
    d2dm: np.ndarray
    phi: np.ndarray
    S: float
    eps: float
    # raw scene parameters, only read by the expanded expression
    lambda_B: float
    R_B: float
    T_B: float
    T_U: float
    T_F: float
    h: float

    def __post_init__(self):
        if not (0 < self.v <= 1 and 0 < self.omega <= 1):
            raise ValueError("v and omega must lie in (0, 1]")
        if self.beta0 <= 0 or np.any(np.asarray(self.betam) <= 0):
            raise ValueError("path-loss factors must be positive")


def analytic_inputs(layout: FactoryLayout, deployment: IrsDeployment, model: BlockageModel,
                    radio: RadioConfig, ue) -> AnalyticInputs:
    g = link_geometry(layout, deployment, ue)
    GT, GR, mu = radio.tx_gain_GT, radio.rx_gain_GR, radio.wavelength_mu
    l = deployment.element_spacing_l
    h = deployment.irs_height_h
    beta0 = float(channel.path_loss_direct(g.d0, GT, GR, mu))
    betam = np.atleast_1d(channel.path_loss_indirect(g.Dm, g.dm, g.incident_angle_phi, l, GT, GR, mu))
    e_b0 = blockage.expected_blockers(model, g.d2d0, layout.height_TF)
    e_bm = np.array([blockage.expected_blockers(model, d, h) for d in g.d2dm])
    return AnalyticInputs(
        rho=radio.rho, beta0=beta0, betam=betam, omega=model.shelf_loss_omega,
        v=model.penetration_v, E_B0=e_b0, E_Bm=e_bm,
        N=deployment.total_elements_N, M=deployment.num_irs_M, l=l, mu=mu, GT=GT, GR=GR,
        d0=g.d0, d2d0=g.d2d0, Dm=g.Dm, dm=g.dm, d2dm=g.d2dm, phi=g.incident_angle_phi,
        S=radio.blocklength_S, eps=radio.decode_error_eps,
        lambda_B=model.density_lambdaB, R_B=model.width_RB, T_B=model.max_height_TB,
        T_U=model.min_height, T_F=layout.height_TF, h=h,
    )


def blockage_moment(E_B, v, sqrt_flag=False):
    """E[v**B] (or E[sqrt(v**B)]) for B ~ Poisson(E_B)."""
    E_B = np.asarray(E_B, dtype=float)
    if np.any(E_B < 0):
        raise ValueError("expected count must be non-negative")
    base = math.sqrt(v) if sqrt_flag else v
    return np.exp(-E_B * (1.0 - base))


def expected_snr_void(inp: AnalyticInputs, printed_self_term: bool = False) -> float:
    """Expected SNR with no LOS IRS link, expanded in the scene parameters.

    ``printed_self_term`` swaps the per-IRS self term's ``pi*N/(4M)`` for the
    bare ``N/M`` that appears in the published closed form; the default is
    the value implied by the Rayleigh moments.
    """
    N, M, l = inp.N, inp.M, inp.l
    sq = math.sqrt(inp.v)
    direct_rate = (inp.T_B - inp.T_U) * inp.lambda_B * inp.R_B / ((inp.T_F - inp.T_U) * math.pi)
    irs_rate = (inp.T_B - inp.T_U) * inp.lambda_B * inp.R_B / ((inp.h - inp.T_U) * math.pi)

    total = inp.omega / inp.d0**2 * math.exp(-direct_rate * inp.d2d0 * (1 - inp.v))
    if M:
        x = np.cos(inp.phi) / (inp.Dm * inp.dm)
        decay_sq = np.exp(-irs_rate * inp.d2dm * (1 - sq))
        decay = np.exp(-irs_rate * inp.d2dm * (1 - inp.v))

        total += (N * l * math.sqrt(math.pi * inp.omega) / (4 * M * inp.d0)
                  * math.exp(-direct_rate * inp.d2d0 * (1 - sq)) * np.sum(x * decay_sq))

        y = x * decay_sq
        total += N**2 * l**2 / (16 * M**2) * (np.sum(y) ** 2 - np.sum(y**2))

        per_irs = N / M if printed_self_term else math.pi * N / (4 * M)
        total += N * l**2 / (4 * math.pi * M) * (1 - math.pi / 4 + per_irs) * np.sum(x**2 * decay)

    return float(inp.rho * inp.GT * inp.GR * inp.mu**2 / (16 * math.pi**2) * total)


def expected_snr_void_assembled(inp: AnalyticInputs) -> float:
    """Same quantity built from path losses, Poisson moments and Rayleigh moments."""
    n = inp.N / inp.M if inp.M else 0.0
    mean_abs = math.sqrt(math.pi) / 2  # E|f| for CN(0, 1)
    mean_sq = 1.0                      # E|f|^2
    sum_sq = n * mean_sq + n * (n - 1) * mean_abs**2  # E[(sum_n |f_n|)^2]

    a0 = inp.beta0 * inp.omega
    out = a0 * blockage_moment(inp.E_B0, inp.v) * mean_sq
    if inp.M:
        root_b = np.sqrt(inp.betam)
        m0 = blockage_moment(inp.E_B0, inp.v, sqrt_flag=True)
        mm = blockage_moment(inp.E_Bm, inp.v, sqrt_flag=True)
        out += 2 * math.sqrt(a0) * mean_abs * n * mean_abs * np.sum(root_b * m0 * mm)
        for m in range(inp.M):
            for p in range(inp.M):
                if p != m:
                    out += root_b[m] * root_b[p] * mm[m] * mm[p] * (n * mean_abs) ** 2
        out += np.sum(inp.betam * blockage_moment(inp.E_Bm, inp.v)) * sum_sq
    return float(inp.rho * out)


def fb_capacity_bound(E_gamma_void: float, S: float, eps: float) -> float:
    """Jensen upper bound on the expected finite-blocklength rate."""
    if E_gamma_void < 0:
        raise ValueError("expected SNR must be non-negative")
    return float(channel.achievable_rate(E_gamma_void, S, eps))
