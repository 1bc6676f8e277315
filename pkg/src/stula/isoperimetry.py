"""Spectral gaps of the discretized Langevin generator and critical-point geometry.

The generator ``Lf = (1/beta) Laplacian f - <grad f, grad u>`` is replaced by
a reversible random walk on the reference grid: neighbouring cells ``i, j``
at spacing ``s`` are joined with conductance
``w_ij = sqrt(pi_i pi_j) / (beta s^2)`` and ``-L`` becomes the pencil
``(W, diag(pi))``.  With the ``1/beta`` inside the conductances the reported
gap is the Poincare constant in ``var(f) <= (1/rho)(1/beta) int |grad f|^2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.linalg import eigh_tridiagonal
from scipy.sparse.linalg import ArpackNoConvergence, eigsh

from .errors import InvalidInputError, InvalidParameterError, NumericalFailureError
from .potentials import EVIDENCE_LABEL, PotentialSpec, gradients, hessian_at, probe_points
from .reference import GridDensity, grid_reference

DEFAULT_CELLS_1D = 2048
DEFAULT_CELLS_2D = 128
DEFAULT_K = 6


@dataclass(frozen=True, eq=False)
class DiscreteGenerator:
    """Reversible grid walk approximating ``-L``.

    ``symmetric`` is ``diag(pi)^{-1/2} W diag(pi)^{-1/2}``; its off-diagonal
    entries are exactly ``-1/(beta s^2)`` so it is assembled from
    log-density differences without forming tiny masses.
    """

    potential: PotentialSpec
    grid: GridDensity
    symmetric: sp.csr_matrix

    @property
    def beta(self) -> float:
        return self.grid.beta

    @property
    def mass(self) -> np.ndarray:
        return self.grid.cell_mass.reshape(-1)

    def dirichlet_matrix(self) -> sp.csr_matrix:
        """``W``: graph Laplacian with conductances ``w_ij`` (rows sum to zero)."""
        r = sp.diags(np.sqrt(self.mass))
        return (r @ self.symmetric @ r).tocsr()

    def apply(self, f: np.ndarray) -> np.ndarray:
        """``(-L f)_i = (1/pi_i) sum_j w_ij (f_i - f_j)``."""
        r = np.sqrt(self.mass)
        return (self.symmetric @ (r * f)) / r


def discretize_generator(p: PotentialSpec, beta: float, box, n_cells) -> DiscreteGenerator:
    grid = grid_reference(p, beta, box, n_cells)
    logd = grid.log_unnormalized
    n_total = logd.size
    flat_idx = np.arange(n_total).reshape(grid.n_cells)
    rows, cols, vals = [], [], []
    diag = np.zeros(grid.n_cells)
    for axis in range(grid.dim):
        s = grid.spacing[axis]
        c = 1.0 / (beta * s * s)
        lo = [slice(None)] * grid.dim
        hi = [slice(None)] * grid.dim
        lo[axis] = slice(0, -1)
        hi[axis] = slice(1, None)
        lo, hi = tuple(lo), tuple(hi)
        half = 0.5 * (logd[hi] - logd[lo])
        # diagonal: sum_j w_ij / pi_i = c * sum_j sqrt(pi_j / pi_i)
        diag[lo] += c * np.exp(half)
        diag[hi] += c * np.exp(-half)
        i, j = flat_idx[lo].reshape(-1), flat_idx[hi].reshape(-1)
        rows += [i, j]
        cols += [j, i]
        vals += [np.full(i.size, -c)] * 2
    rows.append(np.arange(n_total))
    cols.append(np.arange(n_total))
    vals.append(diag.reshape(-1))
    S = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n_total, n_total))
    return DiscreteGenerator(p, grid, S)


@dataclass
class SpectrumResult:
    beta: float
    box: tuple[tuple[float, float], ...]
    n_cells: tuple[int, ...]
    eigenvalues: np.ndarray
    gap: float
    converged: bool
    refined_gap: float | None = None
    solver: str = ""
    diagnostics: dict = field(default_factory=dict)


def _smallest_eigs(S: sp.csr_matrix, dim: int, k: int) -> tuple[np.ndarray, str]:
    n = S.shape[0]
    k = min(k, n - 1)
    if dim == 1:
        d = S.diagonal()
        e = S.diagonal(1)
        vals = eigh_tridiagonal(d, e, eigvals_only=True, select="i", select_range=(0, k - 1))
        return np.sort(vals), "tridiagonal"
    try:
        vals, vecs = eigsh(S, k=k, sigma=-1e-2, which="LM", tol=1e-12, maxiter=10000)
    except ArpackNoConvergence as exc:
        res = [float(np.linalg.norm(S @ v - lam * v)) for lam, v in zip(exc.eigenvalues, exc.eigenvectors.T)]
        raise NumericalFailureError("eigensolver did not converge", residuals=res) from None
    order = np.argsort(vals)
    vals, vecs = vals[order], vecs[:, order]
    res = np.linalg.norm(S @ vecs - vecs * vals, axis=0)
    if np.any(res > 1e-6 * max(1.0, abs(vals).max())):
        raise NumericalFailureError("eigenpairs failed the residual check", residuals=res.tolist())
    return vals, "shift-invert-lanczos"


def spectral_gap(op: DiscreteGenerator, k: int = DEFAULT_K, refine: bool = True, rel_tol: float = 0.05) -> SpectrumResult:
    """Smallest ``k`` eigenvalues of ``-L``; the gap is the second one.

    With ``refine`` the grid is doubled once and ``converged`` records whether
    the gap moved by less than ``rel_tol``.
    """
    if k < 2:
        raise InvalidParameterError("need k >= 2 to report a gap")
    vals, solver = _smallest_eigs(op.symmetric, op.grid.dim, k)
    gap = float(vals[1])
    refined = None
    converged = True
    if refine:
        fine = discretize_generator(op.potential, op.beta, op.grid.box, tuple(2 * c for c in op.grid.n_cells))
        fvals, _ = _smallest_eigs(fine.symmetric, fine.grid.dim, 2)
        refined = float(fvals[1])
        converged = abs(refined - gap) <= rel_tol * abs(refined)
    return SpectrumResult(op.beta, op.grid.box, op.grid.n_cells, vals, gap, bool(converged), refined, solver)


def spectrum(p: PotentialSpec, beta: float, box=None, n_cells=None, k: int = DEFAULT_K, refine: bool = True) -> SpectrumResult:
    """Convenience wrapper choosing the default resolution and an automatic box."""
    from .reference import auto_box

    if n_cells is None:
        n_cells = DEFAULT_CELLS_1D if p.dim == 1 else DEFAULT_CELLS_2D
    if box is None:
        box = auto_box(p, beta)
    return spectral_gap(discretize_generator(p, beta, box, n_cells), k=k, refine=refine)


def kramers_gap(p: PotentialSpec, beta: float, minima, saddle) -> float:
    """Two-well Eyring-Kramers estimate of the gap of a 1-D potential.

    Sum of the escape rates ``sqrt(u''(m)|u''(s)|)/(2 pi) exp(-beta(u(s)-u(m)))``
    out of both wells.
    """
    if p.dim != 1:
        raise InvalidInputError("kramers_gap is one-dimensional")
    s = np.atleast_1d(np.asarray(saddle, dtype=float))
    us = float(p.u(s.reshape(1, 1))[0])
    hs = abs(float(hessian_at(p, s)[0, 0]))
    rate = 0.0
    for m in minima:
        m = np.atleast_1d(np.asarray(m, dtype=float))
        um = float(p.u(m.reshape(1, 1))[0])
        hm = float(hessian_at(p, m)[0, 0])
        rate += math.sqrt(hm * hs) / (2 * math.pi) * math.exp(-beta * (us - um))
    return rate


def log_gap_slope(betas, gaps) -> float:
    """Least-squares slope of ``log(gap)`` against ``beta``."""
    return float(np.polyfit(np.asarray(betas, float), np.log(np.asarray(gaps, float)), 1)[0])


# --------------------------------------------------------------------------
# critical points


@dataclass
class CriticalPoint:
    location: np.ndarray
    residual: float
    eigenvalues: np.ndarray
    classification: str
    morse_margin: float

    def to_dict(self) -> dict:
        return {
            "location": self.location.tolist(),
            "residual": self.residual,
            "eigenvalues": self.eigenvalues.tolist(),
            "classification": self.classification,
            "morse_margin": self.morse_margin,
        }


def seed_grid(box, n_per_axis: int) -> np.ndarray:
    box = np.asarray(box, dtype=float).reshape(-1, 2)
    axes = [np.linspace(lo, hi, n_per_axis) for lo, hi in box]
    return np.stack([g.reshape(-1) for g in np.meshgrid(*axes, indexing="ij")], axis=1)


def _grad(p: PotentialSpec, x: np.ndarray) -> np.ndarray:
    with np.errstate(all="ignore"):
        return gradients(p, x)[0]


def _newton(p: PotentialSpec, x0: np.ndarray, tol: float, max_iter: int):
    """Newton on ``h`` with backtracking on ``|h|``.

    When the Newton direction cannot reduce ``|h|`` (singular Hessian, or a
    non-root local minimum of ``|h|``) the iteration takes a backtracked
    descent step on ``u`` instead, and keeps descending until the Hessian is
    positive definite; this avoids cycling back into the stall.  Convergence
    is only declared on a small Newton step.
    """
    x = x0.astype(float).copy()
    g = _grad(p, x)
    descending = False
    for _ in range(max_iter):
        gn = float(np.linalg.norm(g))
        if gn == 0.0:
            return x, 0.0, True
        H = hessian_at(p, x)
        if descending and np.linalg.eigvalsh(H)[0] <= 0:
            step = None
        else:
            step = np.linalg.solve(H, -g) if np.linalg.cond(H) < 1e12 else None
        xn = None
        if step is not None and np.all(np.isfinite(step)):
            t = 1.0
            while t >= 1e-4:
                cand = x + t * step
                gc = _grad(p, cand)
                if np.all(np.isfinite(gc)) and np.linalg.norm(gc) <= (1 - 1e-4 * t) * gn:
                    xn, gnew = cand, gc
                    break
                t *= 0.5
            if xn is not None and np.linalg.norm(t * step) <= tol * (1 + np.linalg.norm(xn)):
                return xn, float(np.linalg.norm(gnew)), True
        if xn is None:
            descending = True
            with np.errstate(all="ignore"):
                u0 = float(p.u(x[None])[0])
                alpha = 1.0
                while alpha >= 1e-12:
                    cand = x - alpha * g
                    uc = float(p.u(cand[None])[0])
                    if math.isfinite(uc) and uc <= u0 - 1e-4 * alpha * gn * gn:
                        xn, gnew = cand, _grad(p, cand)
                        break
                    alpha *= 0.5
            if xn is None:
                return x, gn, False
        x, g = xn, gnew
        if not np.all(np.isfinite(g)) or np.linalg.norm(x) > 1e12:
            return x, float("inf"), False
    return x, float(np.linalg.norm(g)), False


def find_critical_points(p: PotentialSpec, seeds, tol: float = 1e-10, residual_tol: float = 1e-8,
                         degenerate_tol: float = 1e-6, max_iter: int = 200) -> tuple[list[CriticalPoint], int]:
    """Newton iteration on ``h`` from every seed, deduplicated and classified.

    Returns the points sorted lexicographically by location and the number of
    seeds that failed to converge.
    """
    if p.dim > 3:
        raise InvalidInputError("critical point search supports dim <= 3")
    seeds = np.asarray(seeds, dtype=float).reshape(-1, p.dim)
    found: list[np.ndarray] = []
    resid: list[float] = []
    failed = 0
    for s in seeds:
        x, r, ok = _newton(p, s, tol, max_iter)
        if not ok or r > residual_tol:
            failed += 1
            continue
        if any(np.linalg.norm(x - y) < 10 * tol * (1 + np.linalg.norm(y)) for y in found):
            continue
        found.append(x)
        resid.append(r)
    pts = []
    for x, r in zip(found, resid):
        ev = np.linalg.eigvalsh(hessian_at(p, x))
        margin = float(np.min(np.abs(ev)))
        if margin < degenerate_tol:
            cls = "degenerate"
        elif np.all(ev > 0):
            cls = "minimum"
        elif np.all(ev < 0):
            cls = "maximum"
        else:
            cls = "saddle"
        pts.append(CriticalPoint(x, r, ev, cls, margin))
    pts.sort(key=lambda c: tuple(c.location))
    return pts, failed


@dataclass
class MorseReport:
    l_star: float
    saddle_max_eigenvalue_bound: float | None
    passed: bool
    n_points: int

    def to_dict(self) -> dict:
        return {"l_star": self.l_star, "saddle_max_eigenvalue_bound": self.saddle_max_eigenvalue_bound,
                "pass": self.passed, "n_points": self.n_points}


def morse_report(p: PotentialSpec, points: list[CriticalPoint]) -> MorseReport:
    """Uniform Morse margin ``l*`` and the non-minimum curvature condition."""
    if not points:
        raise InvalidInputError("no critical points supplied")
    l_star = min(c.morse_margin for c in points)
    nonmin = [c for c in points if c.classification != "minimum"]
    bound = max((float(c.eigenvalues.min()) for c in nonmin), default=None)
    ok = all(c.classification != "degenerate" for c in points)
    ok = ok and all(float(c.eigenvalues.min()) <= -l_star for c in nonmin)
    return MorseReport(float(l_star), bound, bool(ok), len(points))


# --------------------------------------------------------------------------
# curvature assumptions


@dataclass
class CurvatureReport:
    K_estimate: float
    C_prime_estimate: float
    c_H: float
    R: float
    n_samples: int
    label: str = EVIDENCE_LABEL

    def to_dict(self) -> dict:
        return {"K_estimate": self.K_estimate, "C_prime_estimate": self.C_prime_estimate,
                "c_H": self.c_H, "R": self.R, "n_samples": self.n_samples, "label": self.label}


def check_C_assumptions(p: PotentialSpec, n_samples: int, radius: float, seed: int) -> CurvatureReport:
    """Sampled Hessian lower bound, Hessian-vs-gradient ratio and gradient floor on ``|x| = R``."""
    if n_samples < 1000:
        raise InvalidParameterError("need at least 1000 samples")
    X = probe_points(p.dim, n_samples, radius, seed)
    G = np.linalg.norm(gradients(p, X), axis=1)
    min_eig = np.inf
    ratio = 0.0
    for x, g in zip(X, G):
        H = hessian_at(p, x)
        ev = np.linalg.eigvalsh(H)
        min_eig = min(min_eig, float(ev[0]))
        ratio = max(ratio, float(np.max(np.abs(ev))) / (1.0 + g))
    rng = np.random.default_rng(seed + 1)
    S = rng.standard_normal((n_samples, p.dim))
    S /= np.linalg.norm(S, axis=1, keepdims=True)
    if p.dim > 1:
        ang = np.linspace(0, 2 * np.pi, 721)[:-1]
        ring = np.zeros((ang.size, p.dim))
        ring[:, 0], ring[:, 1] = np.cos(ang), np.sin(ang)
        S = np.concatenate([S, ring])
    else:
        S = np.array([[1.0], [-1.0]])
    c_h = float(np.min(np.linalg.norm(gradients(p, radius * S), axis=1)))
    return CurvatureReport(max(0.0, -min_eig), ratio, c_h, float(radius), len(X))
