"""Random screen blockages: sampling, link intersection counts and statistics.

Blockages are vertical rectangular screens of width ``R_B`` whose bottom-line
centres form a Poisson point process over the factory floor. A screen blocks
a link when its 2D footprint crosses the link's floor projection and it is at
least as tall as the link at the crossing point.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .geometry import FactoryLayout


@dataclass(frozen=True)
class BlockageModel:
    density_lambdaB: float = 0.2
    width_RB: float = 2.5
    max_height_TB: float = 1.7
    min_height: float = 0.5
    penetration_v: float = 0.01
    shelf_loss_omega: float = 0.01

    def __post_init__(self):
        if self.density_lambdaB < 0:
            raise ValueError("blockage density must be non-negative")
        if self.width_RB <= 0:
            raise ValueError("blockage width must be positive")
        if not self.min_height < self.max_height_TB:
            raise ValueError("need min_height < T_B")
        for name in ("penetration_v", "shelf_loss_omega"):
            val = getattr(self, name)
            if not 0 < val <= 1:
                raise ValueError(f"{name} must lie in (0, 1], got {val}")


@dataclass(frozen=True)
class BlockageField:
    """One realised set of screens; arrays share a common length."""

    center_x: np.ndarray
    center_y: np.ndarray
    orientation: np.ndarray
    height: np.ndarray
    width: float

    def __len__(self):
        return self.center_x.size

    def to_csv(self, path):
        with open(Path(path), "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["center_x", "center_y", "orientation_rad", "height_m"])
            for row in zip(self.center_x, self.center_y, self.orientation, self.height):
                writer.writerow([repr(float(v)) for v in row])


def sample_field(model: BlockageModel, layout: FactoryLayout, rng: np.random.Generator) -> BlockageField:
    n = rng.poisson(model.density_lambdaB * layout.length_L * layout.width_W)
    cx = rng.uniform(0.0, layout.length_L, n)
    cy = rng.uniform(0.0, layout.width_W, n)
    theta = rng.uniform(0.0, math.pi, n)
    height = rng.uniform(model.min_height, model.max_height_TB, n)
    return BlockageField(cx, cy, theta, height, model.width_RB)


def count_intersections(field: BlockageField, endpoint_a, ue) -> int:
    """Number of screens blocking the link from ``endpoint_a`` down to ``ue``."""
    if len(field) == 0:
        return 0
    a = np.asarray(endpoint_a, dtype=float)
    u = np.asarray(ue, dtype=float)
    if a[2] <= u[2]:
        raise ValueError("the elevated endpoint must be above the UE")
    return int(blocked_mask(field, a, u).sum())


def count_links(field: BlockageField, endpoints, ue) -> np.ndarray:
    """Blocking counts for several links that share the same UE end."""
    ends = np.atleast_2d(np.asarray(endpoints, dtype=float))
    u = np.asarray(ue, dtype=float)
    if len(field) == 0 or ends.shape[0] == 0:
        return np.zeros(ends.shape[0], dtype=np.int64)
    return np.array([blocked_mask(field, a, u).sum() for a in ends], dtype=np.int64)


def blocked_mask(field: BlockageField, a, u) -> np.ndarray:
    """Per-screen flags: True where the screen blocks the link a -> u."""
    a = np.asarray(a, dtype=float)
    u = np.asarray(u, dtype=float)
    # Solve a + t (u - a) = c + s e on the floor; t is the horizontal fraction from a.
    dx, dy = u[0] - a[0], u[1] - a[1]
    ex = np.cos(field.orientation)
    ey = np.sin(field.orientation)
    det = ex * dy - ey * dx
    rx = field.center_x - a[0]
    ry = field.center_y - a[1]
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (ex * ry - ey * rx) / det
        s = (dx * ry - dy * rx) / det
    half = field.width / 2
    hit = (det != 0) & (t >= 0) & (t <= 1) & (np.abs(s) <= half)
    link_z = a[2] + t * (u[2] - a[2])
    return hit & (field.height >= link_z)


def expected_blockers(model: BlockageModel, d2d: float, top_height: float) -> float:
    """Mean number of screens blocking a link of floor length ``d2d``.

    ``top_height`` is the elevated endpoint: the ceiling for the BS link, the
    IRS height for IRS links.
    """
    if d2d < 0:
        raise ValueError("horizontal distance must be non-negative")
    tu = model.min_height
    if top_height <= tu:
        raise ValueError("link top must be above the UE height")
    eta = (model.max_height_TB - tu) / (top_height - tu)
    return eta * model.density_lambdaB * model.width_RB * d2d / math.pi


def los_probability(expected_count):
    return np.exp(-np.asarray(expected_count, dtype=float))


def case_probability(los_set, p) -> float:
    """Probability of the LOS/NLOS pattern where exactly ``los_set`` is LOS.

    ``los_set`` holds zero-based link indices or is a boolean mask over links.
    """
    p = np.asarray(p, dtype=float)
    mask = np.zeros(p.size, dtype=bool)
    los_set = np.asarray(los_set)
    if los_set.dtype == bool:
        mask[:] = los_set
    elif los_set.size:
        mask[los_set.astype(int)] = True
    return float(np.prod(np.where(mask, p, 1.0 - p)))


def all_case_probabilities(p) -> tuple[np.ndarray, np.ndarray]:
    """Enumerate every blockage case.

    Returns ``(masks, zeta)`` where ``masks[c, m]`` is True when link m is LOS
    in case c (case index read as a bitmask, bit m) and ``zeta[c]`` is its
    probability.
    """
    p = np.asarray(p, dtype=float)
    M = p.size
    codes = np.arange(2**M, dtype=np.int64)
    masks = ((codes[:, None] >> np.arange(M)) & 1).astype(bool)
    zeta = np.prod(np.where(masks, p, 1.0 - p), axis=1) if M else np.ones(1)
    return masks, zeta


def sample_blocked_count(expected_count, rng: np.random.Generator, size=None):
    """Poisson counts conditioned on being at least one.

    Inverse-CDF sampling of the truncated law, so small means cost no
    rejections.
    """
    mu = np.asarray(expected_count, dtype=float)
    if np.any(mu <= 0):
        raise ValueError("a blocked link needs a positive expected count")
    shape = np.broadcast(mu, np.empty(size if size is not None else ())).shape
    mu = np.broadcast_to(mu, shape)
    # conditional pmf accumulated from k = 1; -expm1 keeps tiny means accurate
    norm = -np.expm1(-mu)
    target = rng.random(shape)
    k = np.ones(shape, dtype=np.int64)
    pmf = mu * np.exp(-mu) / norm
    cdf = pmf.copy()
    todo = cdf <= target
    while np.any(todo):
        k = np.where(todo, k + 1, k)
        pmf = np.where(todo, pmf * mu / k, pmf)
        cdf = np.where(todo, cdf + pmf, cdf)
        # stop if the float CDF saturates just below the target
        todo = todo & (cdf <= target) & (pmf > 0)
    return k if shape else int(k)
