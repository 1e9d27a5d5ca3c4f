"""Achievability check for the source-channel rate region with time sharing.

For input laws ``p_{X|Q=q}`` restricted to a grid, the three constraints are
linear in ``p_Q``, so the best mixture is a linear program (scipy HiGHS).
A Caratheodory step then trims the optimal mixture to at most three atoms
without changing any constraint value. The check is one-sided: a grid
witness proves feasibility, an infeasible answer is only the best the grid
could do.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import linprog

from ..prob import Pmf
from .channel import WiretapChannel

MARGIN = 1e-9
DEFAULT_GRID = 64


@dataclass(frozen=True)
class FeasibilityResult:
    """``slacks`` are ``(I_XY - H_c - H_p, I_XY - I_XZ - H_c, H_p - I_XZ)``,
    all conditioned on ``Q`` and evaluated at the witness."""

    feasible: bool
    slacks: tuple[float, float, float]
    witness_q: Pmf | None = None
    witness_x_given_q: np.ndarray | None = None

    @property
    def min_slack(self) -> float:
        return min(self.slacks)


def grid_points(k: int, resolution: int) -> np.ndarray:
    """All pmfs on ``k`` letters with entries in multiples of ``1/resolution``."""
    return _grid_points(k, resolution) / resolution


@lru_cache(maxsize=16)
def _grid_points(k: int, resolution: int) -> np.ndarray:
    if k == 1:
        return np.array([[resolution]], dtype=float)
    rows = []
    for first in range(resolution + 1):
        rest = _grid_points(k - 1, resolution - first)
        rows.append(np.column_stack([np.full(len(rest), first), rest]))
    return np.vstack(rows)


def _mi_rows(px: np.ndarray, w: np.ndarray) -> np.ndarray:
    """``I(X;Out)`` for every input law row of ``px`` through kernel ``w``."""
    out = px @ w
    with np.errstate(divide="ignore", invalid="ignore"):
        h_out = -np.where(out > 0, out * np.log2(out), 0.0).sum(axis=1)
        hw = -np.where(w > 0, w * np.log2(w), 0.0).sum(axis=1)
    return np.maximum(h_out - px @ hw, 0.0)


def _grid_values(ch: WiretapChannel, resolution: int):
    pts = grid_points(ch.x_size, resolution)
    return pts, _mi_rows(pts, ch.p_y_given_x), _mi_rows(pts, ch.p_z_given_x)


def _slacks(h_c: float, h_p: float, iy: float, iz: float) -> tuple[float, float, float]:
    return (iy - h_c - h_p, iy - iz - h_c, h_p - iz)


def caratheodory_reduce(weights: np.ndarray, features: np.ndarray, tol: float = 1e-13) -> np.ndarray:
    """Shrink the support of ``weights`` to ``features.shape[1] + 1`` atoms or
    fewer while keeping ``weights @ features`` and ``weights.sum()``."""
    w = np.where(weights > tol, weights, 0.0)
    w = w / w.sum()
    cap = features.shape[1] + 1
    while np.count_nonzero(w) > cap:
        s = np.flatnonzero(w)
        mat = np.vstack([features[s].T, np.ones(len(s))])
        lam = np.linalg.svd(mat)[2][-1]
        if not np.any(lam > 0):
            lam = -lam
        pos = lam > 0
        theta = np.min(w[s][pos] / lam[pos])
        w[s] = w[s] - theta * lam
        w[np.abs(w) < tol] = 0.0
        w = np.maximum(w, 0.0)
        w /= w.sum()
    return w


def _witness(pts, iy, iz, weights):
    w = caratheodory_reduce(weights, np.column_stack([iy, iz]))
    s = np.flatnonzero(w)
    return Pmf(w[s] / w[s].sum()), pts[s], float(w[s] @ iy[s] / w[s].sum()), float(w[s] @ iz[s] / w[s].sum())


def region_feasible(h_c: float, h_p: float, ch: WiretapChannel, grid: int = DEFAULT_GRID) -> FeasibilityResult:
    """Test ``H_c + H_p < I(X;Y|Q)``, ``H_c < I(X;Y|Q) - I(X;Z|Q)``, ``H_p > I(X;Z|Q)``.

    ``grid`` is the number of steps per coordinate (64 means resolution
    1/64). Feasible when the best achievable minimum slack exceeds 1e-9.
    """
    if h_c < 0 or h_p < 0:
        raise ValueError("source entropies must be nonnegative")
    pts, iy, iz = _grid_values(ch, grid)
    P = len(pts)
    # variables: w_1..w_P, t ; maximize t
    c = np.zeros(P + 1)
    c[-1] = -1.0
    a_ub = np.zeros((3, P + 1))
    a_ub[0, :P], a_ub[0, -1] = -iy, 1.0
    a_ub[1, :P], a_ub[1, -1] = -(iy - iz), 1.0
    a_ub[2, :P], a_ub[2, -1] = iz, 1.0
    b_ub = np.array([-(h_c + h_p), -h_c, h_p])
    a_eq = np.zeros((1, P + 1))
    a_eq[0, :P] = 1.0
    bounds = [(0, None)] * P + [(None, None)]
    res = linprog(c, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=[1.0], bounds=bounds, method="highs")
    if res.status != 0:
        raise RuntimeError(f"region LP failed: {res.message}")
    q, px, y_avg, z_avg = _witness(pts, iy, iz, res.x[:P])
    slacks = _slacks(h_c, h_p, y_avg, z_avg)
    feasible = min(slacks) > MARGIN
    if not feasible:
        return FeasibilityResult(False, slacks)
    return FeasibilityResult(True, slacks, q, px)


def max_confidential_rate(ch: WiretapChannel, h_p: float, grid: int = DEFAULT_GRID) -> tuple[float, FeasibilityResult]:
    """Supremum of ``H_c`` admitted by the region for public entropy ``h_p``.

    Solves the LP with the strict inequalities relaxed; any ``H_c`` below
    the returned value by more than the margin is feasible on this grid.
    """
    pts, iy, iz = _grid_values(ch, grid)
    P = len(pts)
    c = np.zeros(P + 1)
    c[-1] = -1.0
    a_ub = np.zeros((3, P + 1))
    a_ub[0, :P], a_ub[0, -1] = -iy, 1.0
    a_ub[1, :P], a_ub[1, -1] = -(iy - iz), 1.0
    a_ub[2, :P] = iz
    b_ub = np.array([-h_p, 0.0, h_p])
    a_eq = np.zeros((1, P + 1))
    a_eq[0, :P] = 1.0
    bounds = [(0, None)] * P + [(0, None)]
    res = linprog(c, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=[1.0], bounds=bounds, method="highs")
    if res.status != 0:
        return 0.0, FeasibilityResult(False, (-np.inf, -np.inf, -np.inf))
    q, px, y_avg, z_avg = _witness(pts, iy, iz, res.x[:P])
    best = max(0.0, min(y_avg - h_p, y_avg - z_avg))
    return best, FeasibilityResult(True, _slacks(best, h_p, y_avg, z_avg), q, px)
