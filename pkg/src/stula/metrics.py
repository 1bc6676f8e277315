"""Distances between sample sets and grid references.

KL and TV use a histogram of the samples on the reference grid; W2 uses the
exact quantile coupling in one dimension and random projections in higher
dimension (reported as ``sliced``).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError, InvalidParameterError, MissingMetadataError
from .potentials import PotentialSpec, values
from .reference import GridDensity


@dataclass
class MetricReport:
    metric: str
    value: float
    variant: str
    n_samples: int | None = None
    grid_cells: tuple[int, ...] | None = None
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "metric": self.metric,
            "value": float(self.value),
            "variant": self.variant,
            "n_samples": self.n_samples,
            "grid_cells": list(self.grid_cells) if self.grid_cells is not None else None,
            "diagnostics": {k: (float(v) if isinstance(v, (float, np.floating)) else v)
                            for k, v in self.diagnostics.items()},
        }


@dataclass
class Histogram:
    """Sample frequencies on a reference grid; out-of-box samples are clipped to edge cells."""

    mass: np.ndarray
    n_samples: int
    out_of_box: int
    box: tuple[tuple[float, float], ...]
    n_cells: tuple[int, ...]


def histogram(samples, grid: GridDensity) -> Histogram:
    X = np.asarray(samples, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, 1) if grid.dim == 1 else X.reshape(1, -1)
    if X.ndim != 2 or X.shape[1] != grid.dim:
        raise InvalidInputError(f"samples must have shape (n, {grid.dim}), got {X.shape}")
    if X.shape[0] == 0:
        raise InvalidInputError("empty sample set")
    X = X[np.all(np.isfinite(X), axis=1)]
    idx = []
    outside = np.zeros(X.shape[0], dtype=bool)
    for k in range(grid.dim):
        lo, hi = grid.box[k]
        n = grid.n_cells[k]
        i = np.floor((X[:, k] - lo) / (hi - lo) * n).astype(np.int64)
        outside |= (i < 0) | (i >= n)
        idx.append(np.clip(i, 0, n - 1))
    flat = np.ravel_multi_index(tuple(idx), grid.n_cells)
    counts = np.bincount(flat, minlength=int(np.prod(grid.n_cells))).reshape(grid.n_cells)
    return Histogram(counts / X.shape[0], int(X.shape[0]), int(outside.sum()), grid.box, grid.n_cells)


def _masses(a, b: GridDensity) -> tuple[np.ndarray, dict, int | None]:
    if isinstance(a, Histogram):
        if a.n_cells != b.n_cells or not np.allclose(a.box, b.box, rtol=0, atol=1e-12):
            raise InvalidInputError("histogram was binned on a different grid")
        return a.mass, {"out_of_box": a.out_of_box}, a.n_samples
    if isinstance(a, GridDensity):
        if not a.same_grid(b):
            raise InvalidInputError("grid mismatch between densities")
        return a.cell_mass, {}, None
    arr = np.asarray(a, dtype=float)
    if arr.shape != b.cell_mass.shape:
        raise InvalidInputError(f"cell-mass array shape {arr.shape} does not match grid {b.cell_mass.shape}")
    return arr, {}, None


def tv_distance(a, b: GridDensity) -> MetricReport:
    """Total variation ``0.5 * sum |a_i - b_i|`` over grid cells."""
    pa, diag, n = _masses(a, b)
    tv = min(0.5 * float(np.abs(pa - b.cell_mass).sum()), 1.0)
    return MetricReport("tv", tv, "histogram" if n else "grid", n, b.n_cells, diag)


def kl_divergence(a, b: GridDensity) -> MetricReport:
    """``sum a_i log(a_i / b_i)`` with ``0 log 0 = 0``.

    Diagnostics carry the number of empty cells and the leading-order
    finite-sample bias ``(occupied - 1) / (2 n)`` of the plug-in estimator.
    """
    pa, diag, n = _masses(a, b)
    pb = b.cell_mass
    pos = pa > 0
    if np.any(pb[pos] <= 0):
        raise InvalidInputError("reference has zero mass where samples do not")
    kl = float(np.sum(pa[pos] * (np.log(pa[pos]) - np.log(pb[pos]))))
    diag = dict(diag)
    diag["empty_cells"] = int((~pos).sum())
    if n:
        diag["bias_estimate"] = (int(pos.sum()) - 1) / (2.0 * n)
    return MetricReport("kl", max(kl, 0.0), "histogram" if n else "grid", n, b.n_cells, diag)


# --------------------------------------------------------------------------
# Wasserstein-2


def _quantile_pieces_samples(x: np.ndarray):
    s = np.sort(x)
    n = s.size
    u = np.arange(n + 1) / n
    return u, s, s


def _quantile_pieces_grid(g: GridDensity):
    if g.dim != 1:
        raise InvalidInputError("grid quantiles need a 1-D grid")
    m = g.cell_mass.reshape(-1)
    e = g.edges(0)
    keep = m > 0
    c = np.concatenate([[0.0], np.cumsum(m[keep])])
    c /= c[-1]
    return c, e[:-1][keep], e[1:][keep]


def _w2_pieces(pa, pb) -> float:
    br = np.union1d(pa[0], pb[0])
    br = br[(br >= 0) & (br <= 1)]
    u0, u1 = br[:-1], br[1:]
    keep = u1 > u0
    u0, u1 = u0[keep], u1[keep]
    mid = 0.5 * (u0 + u1)
    # both quantile functions are affine on each sub-interval; use interior points
    # of the piece containing ``mid`` to avoid picking up the neighbour at a jump
    def ends(p):
        u, left, right = p
        k = np.clip(np.searchsorted(u, mid, side="right") - 1, 0, left.size - 1)
        w = u[k + 1] - u[k]
        slope = np.where(w > 0, (right[k] - left[k]) / np.where(w > 0, w, 1.0), 0.0)
        return left[k] + slope * (u0 - u[k]), left[k] + slope * (u1 - u[k])

    a0, a1 = ends(pa)
    b0, b1 = ends(pb)
    d0, d1 = a0 - b0, a1 - b1
    return float(np.sqrt(max(np.sum((u1 - u0) * (d0 * d0 + d0 * d1 + d1 * d1) / 3.0), 0.0)))


def _as_1d(x) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 2 and arr.shape[1] == 1:
        arr = arr[:, 0]
    if arr.ndim != 1:
        raise InvalidInputError("w2_1d needs one-dimensional samples")
    if arr.size < 2:
        raise InvalidInputError("need at least 2 samples")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError("non-finite samples")
    return arr


def w2_1d(samples_a, samples_b) -> MetricReport:
    """Exact W2 between 1-D empirical measures (or an empirical measure and a grid)."""
    a = _as_1d(samples_a)
    pa = _quantile_pieces_samples(a)
    if isinstance(samples_b, GridDensity):
        pb = _quantile_pieces_grid(samples_b)
        n_b, variant = None, "quantile-coupling-grid"
    else:
        b = _as_1d(samples_b)
        pb = _quantile_pieces_samples(b)
        n_b, variant = b.size, "quantile-coupling"
    value = _w2_pieces(pa, pb)
    return MetricReport("w2", value, variant, a.size, None, {"n_samples_b": n_b} if n_b else {})


def sliced_w2(samples_a, samples_b, n_projections: int, seed: int) -> MetricReport:
    """Root-mean-square of 1-D W2 over uniformly random directions."""
    if n_projections < 8:
        raise InvalidParameterError("n_projections must be >= 8")
    A = np.asarray(samples_a, dtype=float)
    B = np.asarray(samples_b, dtype=float)
    if A.ndim != 2 or B.ndim != 2 or A.shape[1] != B.shape[1]:
        raise InvalidInputError("samples must be (n, d) arrays of equal d")
    if A.shape[1] < 2:
        raise InvalidInputError("sliced W2 is for dim >= 2; use w2_1d")
    rng = np.random.default_rng(seed)
    dirs = rng.standard_normal((n_projections, A.shape[1]))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    vals = np.array([w2_1d(A @ v, B @ v).value for v in dirs])
    return MetricReport("w2", float(np.sqrt(np.mean(vals**2))), "sliced", A.shape[0], None,
                        {"projections": n_projections, "n_samples_b": B.shape[0]})


# --------------------------------------------------------------------------
# excess risk


def _u_star(p: PotentialSpec) -> float:
    if p.known_minimum is None:
        raise MissingMetadataError(f"potential {p.name!r} has no known minimum value")
    return float(p.known_minimum[1])


def excess_risk(samples, p: PotentialSpec) -> MetricReport:
    """Sample mean of ``u`` minus the known minimum; standard error assumes independent draws."""
    u_star = _u_star(p)
    u = values(p, samples)
    n = u.size
    se = float(u.std(ddof=1) / np.sqrt(n)) if n > 1 else float("nan")
    return MetricReport("excess_risk", float(u.mean() - u_star), "sample-mean", n, None, {"std_error": se})


def excess_risk_quadrature(grid: GridDensity, p: PotentialSpec) -> float:
    """``sum_i mass_i u(mid_i) - u*`` on the reference grid."""
    u_star = _u_star(p)
    u = values(p, grid.mesh())
    return float(np.sum(grid.cell_mass.reshape(-1) * u) - u_star)


def moment_summary(samples) -> dict:
    X = np.asarray(samples, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    n2 = np.sum(X * X, axis=1)
    return {
        "mean": X.mean(axis=0).tolist(),
        "mean_sq_norm": float(n2.mean()),
        "mean_quartic_norm": float((n2 * n2).mean()),
        "n": int(X.shape[0]),
    }
