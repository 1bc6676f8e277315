"""Grid discretization of the Gibbs density ``exp(-beta u) / Z`` for d <= 2."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .errors import BoxTooSmallError, InvalidInputError, InvalidParameterError
from .potentials import PotentialSpec

TAIL_RATIO = 1e-12
# beta * (u - min u) at the box edge chosen by auto_box; exp(-32) ~ 1.3e-14
_AUTO_BOX_LEVEL = 32.0


@dataclass(frozen=True, eq=False)
class GridDensity:
    """Cell masses of a Gibbs density on an axis-aligned box (midpoint rule)."""

    dim: int
    box: tuple[tuple[float, float], ...]
    n_cells: tuple[int, ...]
    cell_mass: np.ndarray
    log_unnormalized: np.ndarray
    log_normalizer: float
    beta: float
    potential: str

    @property
    def normalizer(self) -> float:
        """``Z`` such that ``cell_mass = exp(log_unnormalized) * cell_volume / Z``."""
        return float(np.exp(self.log_normalizer))

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple((hi - lo) / n for (lo, hi), n in zip(self.box, self.n_cells))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    def edges(self, axis: int) -> np.ndarray:
        lo, hi = self.box[axis]
        return np.linspace(lo, hi, self.n_cells[axis] + 1)

    def midpoints(self, axis: int) -> np.ndarray:
        e = self.edges(axis)
        return 0.5 * (e[1:] + e[:-1])

    def mesh(self) -> np.ndarray:
        """Cell midpoints as ``(n_total, dim)``, C order over cells."""
        axes = [self.midpoints(k) for k in range(self.dim)]
        grids = np.meshgrid(*axes, indexing="ij")
        return np.stack([g.reshape(-1) for g in grids], axis=1)

    def log_density(self) -> np.ndarray:
        return self.log_unnormalized - self.log_normalizer

    def same_grid(self, other: "GridDensity") -> bool:
        return self.dim == other.dim and self.n_cells == other.n_cells and np.allclose(self.box, other.box, rtol=0, atol=1e-12)

    def sample(self, n: int, seed: int) -> np.ndarray:
        """Exact draws from the piecewise-uniform grid law."""
        rng = np.random.default_rng(seed)
        flat = self.cell_mass.reshape(-1)
        idx = rng.choice(flat.size, size=n, p=flat / flat.sum())
        multi = np.unravel_index(idx, self.n_cells)
        out = np.empty((n, self.dim))
        for k in range(self.dim):
            lo = self.box[k][0]
            h = self.spacing[k]
            out[:, k] = lo + (multi[k] + rng.random(n)) * h
        return out

    def to_csv(self, path) -> None:
        """Write one row per cell: axis indices, midpoints, mass, log-density."""
        from .harness.tables import write_grid_csv

        write_grid_csv(self, path)


def _normalize_box(box, dim: int) -> tuple[tuple[float, float], ...]:
    arr = np.asarray(box, dtype=float)
    if arr.shape == (2,):
        arr = np.tile(arr, (dim, 1))
    if arr.shape != (dim, 2) or not np.all(arr[:, 1] > arr[:, 0]):
        raise InvalidInputError(f"box must be {dim} (lo, hi) pairs with lo < hi, got {box!r}")
    return tuple((float(lo), float(hi)) for lo, hi in arr)


def _normalize_cells(n_cells, dim: int) -> tuple[int, ...]:
    cells = (int(n_cells),) * dim if np.ndim(n_cells) == 0 else tuple(int(c) for c in n_cells)
    if len(cells) != dim:
        raise InvalidInputError(f"need {dim} cell counts, got {n_cells!r}")
    return cells


def check_tails(grid: GridDensity) -> None:
    """Raise :class:`BoxTooSmallError` naming the first edge carrying mass."""
    logd = grid.log_unnormalized
    peak = logd.max()
    limit = peak + np.log(TAIL_RATIO)
    names = ("lower", "upper")
    for axis in range(grid.dim):
        for side, sl in enumerate((0, -1)):
            edge_vals = np.take(logd, sl, axis=axis)
            if edge_vals.max() > limit:
                coord = grid.box[axis][side]
                ratio = float(np.exp(edge_vals.max() - peak))
                raise BoxTooSmallError(
                    f"box too small for {grid.potential!r} at beta={grid.beta:g}: axis {axis} {names[side]} "
                    f"edge (x{axis}={coord:g}) has density ratio {ratio:.3g} > {TAIL_RATIO:g}; widen the box",
                    edge=f"axis{axis}:{names[side]}",
                )


def grid_reference(p: PotentialSpec, beta: float, box, n_cells, require_tail_containment: bool = True,
                   min_cells: int = 32) -> GridDensity:
    """Cell masses of ``pi_beta`` on ``box`` by the midpoint rule.

    ``require_tail_containment=False`` skips the boundary check (useful only
    for potentials that are flat on a bounded box).
    """
    if p.dim > 2:
        raise InvalidInputError("grid references are limited to dim <= 2")
    if not beta > 0:
        raise InvalidParameterError("beta must be positive")
    box = _normalize_box(box, p.dim)
    cells = _normalize_cells(n_cells, p.dim)
    if min(cells) < min_cells:
        raise InvalidParameterError(f"need at least {min_cells} cells per axis, got {cells}")
    axes = []
    for (lo, hi), n in zip(box, cells):
        e = np.linspace(lo, hi, n + 1)
        axes.append(0.5 * (e[1:] + e[:-1]))
    pts = np.stack([g.reshape(-1) for g in np.meshgrid(*axes, indexing="ij")], axis=1)
    logu = -beta * np.asarray(p.u(pts), dtype=float)
    if not np.all(np.isfinite(logu)):
        raise InvalidInputError(f"potential {p.name!r} is not finite on the box")
    logu = logu.reshape(cells)
    vol = float(np.prod([(hi - lo) / n for (lo, hi), n in zip(box, cells)]))
    log_z = float(logsumexp(logu) + np.log(vol))
    mass = np.exp(logu - logsumexp(logu))
    grid = GridDensity(p.dim, box, cells, mass, logu, log_z, float(beta), p.name)
    if require_tail_containment:
        check_tails(grid)
    return grid


def auto_box(p: PotentialSpec, beta: float, search: float = 25.0, probe: int | None = None,
             level: float = _AUTO_BOX_LEVEL) -> tuple[tuple[float, float], ...]:
    """Smallest probed box outside which ``beta (u - min u) > level``.

    Probes a regular grid on ``[-search, search]^d``; the result is padded by
    two probe spacings plus 5% of its width on every side.
    """
    if p.non_confining:
        raise InvalidInputError(f"potential {p.name!r} is not confining; pass an explicit box")
    if p.dim > 2:
        raise InvalidInputError("auto_box supports dim <= 2")
    probe = probe or (40001 if p.dim == 1 else 1201)
    ax = np.linspace(-search, search, probe)
    pts = np.stack([g.reshape(-1) for g in np.meshgrid(*([ax] * p.dim), indexing="ij")], axis=1)
    with np.errstate(over="ignore", invalid="ignore"):
        e = beta * np.asarray(p.u(pts), dtype=float)
    e = np.where(np.isfinite(e), e, np.inf)
    inside = (e - e.min() <= level).reshape((probe,) * p.dim)
    step = ax[1] - ax[0]
    box = []
    for axis in range(p.dim):
        other = tuple(k for k in range(p.dim) if k != axis)
        hit = np.nonzero(inside.any(axis=other) if other else inside)[0]
        lo, hi = ax[hit[0]], ax[hit[-1]]
        pad = 2 * step + 0.05 * (hi - lo)
        if hit[0] == 0 or hit[-1] == probe - 1:
            raise InvalidInputError(f"density of {p.name!r} at beta={beta:g} reaches the search window; increase search")
        box.append((float(lo - pad), float(hi + pad)))
    return tuple(box)
