"""Factory scene: room layout, IRS wall placement and per-link geometry.

Coordinates are metres. The room spans ``[0, L] x [0, W] x [0, T_F]``; the
base station hangs from the ceiling centre and the fixed shelf sits in the
plane ``x = X_U``. UEs live in the blind spot ``0 < x < X_U`` behind it.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

# Wall identifiers for the three walls around the blind spot.
WALL_X0 = "x=0"
WALL_YW = "y=W"
WALL_Y0 = "y=0"

# element grids listed for N = 960
TABLE_GRIDS = {1: (32, 30), 4: (16, 15), 8: (12, 10), 12: (10, 8), 16: (10, 6)}
TABLE_TOTAL_ELEMENTS = 960

MAX_ASPECT = 4.0


@dataclass(frozen=True)
class FactoryLayout:
    length_L: float = 40.0
    width_W: float = 50.0
    height_TF: float = 5.0
    shelf_x_XU: float = 19.5
    ue_height_TU: float = 0.5

    def __post_init__(self):
        if min(self.length_L, self.width_W, self.height_TF) <= 0:
            raise ValueError("room dimensions must be positive")
        if not 0 < self.shelf_x_XU < self.length_L / 2:
            raise ValueError("shelf must satisfy 0 < X_U < L/2")
        if not 0 < self.ue_height_TU < self.height_TF:
            raise ValueError("UE height must satisfy 0 < T_U < T_F")

    @property
    def bs_position(self) -> np.ndarray:
        return np.array([self.length_L / 2, self.width_W / 2, self.height_TF])

    @property
    def aspect_tau(self) -> float:
        return self.width_W / self.shelf_x_XU


class ElementGrid(NamedTuple):
    nh: int
    nv: int
    from_table: bool
    skewed: bool = False


@dataclass(frozen=True)
class IrsDeployment:
    num_irs_M: int
    total_elements_N: int
    irs_height_h: float
    grid_Nh: int
    grid_Nv: int
    element_spacing_l: float
    positions: np.ndarray = field(repr=False)
    wall_of: tuple[str, ...] = ()

    @property
    def elements_per_irs(self) -> int:
        return self.total_elements_N // self.num_irs_M if self.num_irs_M else 0


@dataclass(frozen=True)
class LinkGeometry:
    """Distances (m) and angles (rad) for one UE location.

    Per-IRS arrays have length M. ``aoa_br`` / ``aod_ru`` have shape (M, 2)
    with columns (horizontal, vertical) in the wall-local frame.
    """

    d0: float
    d2d0: float
    dm: np.ndarray
    Dm: np.ndarray
    d2dm: np.ndarray
    incident_angle_phi: np.ndarray
    aoa_br: np.ndarray
    aod_ru: np.ndarray


def wall_counts(M: int, tau: float) -> tuple[int, int, int]:
    """Split M IRSs over the three walls, returning ``(n_W, n_L1, n_L2)``."""
    if M < 1:
        raise ValueError(f"need at least one IRS, got M={M}")
    if tau <= 0:
        raise ValueError(f"aspect ratio must be positive, got {tau}")
    if tau >= 1:
        n_l1 = n_l2 = int(math.floor(M / (tau + 2)))
        n_w = M - 2 * n_l1
    else:
        n_w = int(math.floor(tau * M / (2 + tau)))
        rest = M - n_w
        n_l1 = (rest + 1) // 2
        n_l2 = rest // 2
    return n_w, n_l1, n_l2


def irs_positions(layout: FactoryLayout, M: int, h: float) -> tuple[np.ndarray, tuple[str, ...]]:
    """Even placement along the x=0, y=W and y=0 walls, all at height h.

    Returns an (M, 3) array and the wall id of each row.
    """
    if not 0 < h <= layout.height_TF:
        raise ValueError(f"IRS height {h} outside (0, T_F]")
    n_w, n_l1, n_l2 = wall_counts(M, layout.aspect_tau)
    L, W = layout.length_L, layout.width_W
    pts = []
    walls = []
    for m in range(1, n_w + 1):
        pts.append((0.0, m * W / (n_w + 1), h))
        walls.append(WALL_X0)
    for m in range(1, n_l1 + 1):
        pts.append((m * L / (2 * (n_l1 + 1)), W, h))
        walls.append(WALL_YW)
    for m in range(1, n_l2 + 1):
        pts.append((m * L / (2 * (n_l2 + 1)), 0.0, h))
        walls.append(WALL_Y0)
    return np.array(pts, dtype=float).reshape(-1, 3), tuple(walls)


def element_grid(M: int, N: int) -> ElementGrid:
    """Horizontal x vertical element counts for an IRS holding N/M elements.

    Known configurations come straight from the deployment table; anything
    else takes the factor pair of N/M with the smallest difference.
    """
    if M < 1 or N % M:
        raise ValueError(f"N={N} is not divisible by M={M}")
    if N == TABLE_TOTAL_ELEMENTS and M in TABLE_GRIDS:
        return ElementGrid(*TABLE_GRIDS[M], from_table=True)
    per = N // M
    nv = max(d for d in range(1, math.isqrt(per) + 1) if per % d == 0)
    nh = per // nv
    skewed = nh / nv > MAX_ASPECT
    if skewed:
        warnings.warn(f"element grid {nh}x{nv} for N/M={per} is strongly elongated", stacklevel=2)
    return ElementGrid(nh, nv, from_table=False, skewed=skewed)


def make_deployment(layout: FactoryLayout, M: int, N: int, h: float, spacing: float) -> IrsDeployment:
    if M == 0:
        return IrsDeployment(0, N, h, 0, 0, spacing, np.zeros((0, 3)), ())
    grid = element_grid(M, N)
    pos, walls = irs_positions(layout, M, h)
    return IrsDeployment(M, N, h, grid.nh, grid.nv, spacing, pos, walls)


# wall-local frames: (a-axis along the wall, b-axis up, inward normal)
_FRAMES = {
    WALL_X0: (np.array([0.0, 1.0, 0.0]), np.array([0.0, 0.0, 1.0]), np.array([1.0, 0.0, 0.0])),
    WALL_YW: (np.array([1.0, 0.0, 0.0]), np.array([0.0, 0.0, 1.0]), np.array([0.0, -1.0, 0.0])),
    WALL_Y0: (np.array([1.0, 0.0, 0.0]), np.array([0.0, 0.0, 1.0]), np.array([0.0, 1.0, 0.0])),
}


def local_angles(wall: str, direction: np.ndarray) -> tuple[float, float]:
    """(horizontal, vertical) angles of a direction seen from an IRS on ``wall``.

    The vertical angle is the polar angle from the inward normal, the
    horizontal one is the azimuth in the wall plane measured from the a-axis.
    """
    a_ax, b_ax, n_ax = _FRAMES[wall]
    u = direction / np.linalg.norm(direction)
    ua, ub, un = float(u @ a_ax), float(u @ b_ax), float(u @ n_ax)
    vertical = math.acos(max(-1.0, min(1.0, un)))
    horizontal = math.atan2(ub, ua)
    return horizontal, vertical


def in_blind_spot(layout: FactoryLayout, ue) -> bool:
    x, y, z = ue
    return 0 < x < layout.shelf_x_XU and 0 < y < layout.width_W and math.isclose(z, layout.ue_height_TU)


def link_geometry(layout: FactoryLayout, deployment: IrsDeployment, ue) -> LinkGeometry:
    ue = np.asarray(ue, dtype=float)
    if not in_blind_spot(layout, ue):
        raise ValueError(f"UE {tuple(ue)} is not inside the blind spot")
    bs = layout.bs_position
    d0 = float(np.linalg.norm(bs - ue))
    d2d0 = float(np.linalg.norm((bs - ue)[:2]))

    q = deployment.positions
    to_ue = ue - q
    to_bs = bs - q
    dm = np.linalg.norm(to_ue, axis=1)
    Dm = np.linalg.norm(to_bs, axis=1)
    d2dm = np.linalg.norm(to_ue[:, :2], axis=1)

    M = len(q)
    phi = np.empty(M)
    aoa = np.empty((M, 2))
    aod = np.empty((M, 2))
    for m, wall in enumerate(deployment.wall_of):
        aoa[m] = local_angles(wall, to_bs[m])
        aod[m] = local_angles(wall, to_ue[m])
        phi[m] = aoa[m, 1]
    return LinkGeometry(d0, d2d0, dm, Dm, d2dm, phi, aoa, aod)


def ue_grid(layout: FactoryLayout, resolution: float) -> np.ndarray:
    """Cell-centred UE sample points over the blind spot, x-major order."""
    if resolution <= 0:
        raise ValueError("grid resolution must be positive")
    xs = np.arange(resolution / 2, layout.shelf_x_XU, resolution)
    ys = np.arange(resolution / 2, layout.width_W, resolution)
    xs = xs[xs < layout.shelf_x_XU]
    ys = ys[ys < layout.width_W]
    if xs.size == 0 or ys.size == 0:
        raise ValueError(f"resolution {resolution} leaves no UE point in the blind spot")
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    pts = np.column_stack([gx.ravel(), gy.ravel(), np.full(gx.size, layout.ue_height_TU)])
    return pts


def subgrid(points: np.ndarray, nx: int, ny: int) -> np.ndarray:
    """Pick an evenly spread nx-by-ny subset of a full UE grid.

    Uses the midpoint of each of nx (ny) equal index strata so the subset
    stays away from the edges the same way the full grid does.
    """
    xs = np.unique(points[:, 0])
    ys = np.unique(points[:, 1])
    if nx > xs.size or ny > ys.size:
        raise ValueError("subgrid larger than grid")
    ix = ((np.arange(nx) + 0.5) * xs.size / nx).astype(int)
    iy = ((np.arange(ny) + 0.5) * ys.size / ny).astype(int)
    keep_x, keep_y = xs[ix], ys[iy]
    mask = np.isin(points[:, 0], keep_x) & np.isin(points[:, 1], keep_y)
    return points[mask]
