"""Target potentials, their regularity constants and sampled assumption checks.

A potential is stored with batch callables: ``u`` maps an ``(n, d)`` array to
``(n,)`` values and ``h`` (the gradient) maps ``(n, d)`` to ``(n, d)``.  The
catalog gradients are numba-compilable so the chain kernels can call them
directly; user-supplied potentials with plain numpy callables still work but
run on the numpy path.
"""

from __future__ import annotations

import functools
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from ._accel import maybe_njit
from .errors import (
    InvalidInputError,
    InvalidParameterError,
    MissingMetadataError,
    NonFiniteError,
)

EVIDENCE_LABEL = "sampled evidence"
_FD_EPS = np.finfo(float).eps ** (1.0 / 3.0)


@dataclass(frozen=True, eq=False)
class PotentialSpec:
    """A target potential ``u`` with gradient ``h`` and declared constants.

    ``growth`` is ``(L, l)`` with ``|h(x)| <= L (1 + |x|^{2l})``;
    ``local_lipschitz`` is ``(L', l')`` with
    ``|h(x) - h(y)| <= L' (1 + |x| + |y|)^{l'} |x - y|``;
    ``dissipativity`` is ``(a, b)`` with ``<h(x), x> >= a|x|^2 - b``.
    """

    name: str
    dim: int
    u: Callable[[np.ndarray], np.ndarray]
    h: Callable[[np.ndarray], np.ndarray]
    hessian: Callable[[np.ndarray], np.ndarray] | None = None
    growth: tuple[float, float] | None = None
    local_lipschitz: tuple[float, float] | None = None
    dissipativity: tuple[float, float] | None = None
    known_minimum: tuple[np.ndarray, float] | None = None
    non_confining: bool = False
    # x, steps -> per-coordinate direction (-1, 0, +1) that moves away from a
    # nearby non-smooth surface; 0 means a central stencil is safe.
    kink: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None
    metadata: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self):
        if self.dim < 1:
            raise InvalidParameterError(f"dim must be positive, got {self.dim}")

    @property
    def a(self) -> float:
        if self.dissipativity is None:
            raise MissingMetadataError(f"potential {self.name!r} declares no dissipativity constants")
        return self.dissipativity[0]

    @property
    def b(self) -> float:
        if self.dissipativity is None:
            raise MissingMetadataError(f"potential {self.name!r} declares no dissipativity constants")
        return self.dissipativity[1]

    @property
    def L(self) -> float:
        if self.growth is None:
            raise MissingMetadataError(f"potential {self.name!r} declares no growth constants")
        return self.growth[0]

    @property
    def l(self) -> float:  # noqa: E743
        if self.growth is None:
            raise MissingMetadataError(f"potential {self.name!r} declares no growth constants")
        return self.growth[1]

    def __repr__(self) -> str:
        return f"PotentialSpec(name={self.name!r}, dim={self.dim})"


# --------------------------------------------------------------------------
# evaluation


def _as_point(p: PotentialSpec, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        x = x.reshape(1)
    if x.shape != (p.dim,):
        raise InvalidInputError(f"expected a point of length {p.dim}, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise InvalidInputError(f"non-finite input point {x}")
    return x


def as_batch(p: PotentialSpec, X) -> np.ndarray:
    """Coerce ``X`` to a contiguous float ``(n, dim)`` array."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1 and p.dim == 1:
        X = X.reshape(-1, 1)
    elif X.ndim == 1 and X.shape[0] == p.dim:
        X = X.reshape(1, -1)
    if X.ndim != 2 or X.shape[1] != p.dim:
        raise InvalidInputError(f"expected points of dimension {p.dim}, got shape {X.shape}")
    return np.ascontiguousarray(X)


def evaluate(p: PotentialSpec, x) -> tuple[float, np.ndarray]:
    """Return ``(u(x), h(x))`` at a single finite point."""
    x = _as_point(p, x)
    X = x.reshape(1, -1)
    val = float(np.asarray(p.u(X))[0])
    grad = np.array(p.h(X)[0], dtype=float)
    if not (math.isfinite(val) and np.all(np.isfinite(grad))):
        raise NonFiniteError(f"potential {p.name!r} overflowed at x={x}", x=x)
    return val, grad


def values(p: PotentialSpec, X) -> np.ndarray:
    return np.asarray(p.u(as_batch(p, X)), dtype=float)


def gradients(p: PotentialSpec, X) -> np.ndarray:
    return np.asarray(p.h(as_batch(p, X)), dtype=float)


def fd_steps(x: np.ndarray) -> np.ndarray:
    return _FD_EPS * (1.0 + np.abs(x))


def hessian_fd(p: PotentialSpec, x) -> np.ndarray:
    """Finite-difference Hessian from the gradient, symmetrized.

    Central differences, switching to second-order one-sided stencils when
    the potential reports a nearby kink along a coordinate.
    """
    x = _as_point(p, x)
    d = p.dim
    steps = fd_steps(x)
    away = np.zeros(d) if p.kink is None else np.asarray(p.kink(x, steps), dtype=float)
    cols = []
    for j in range(d):
        s = steps[j]
        e = np.zeros(d)
        e[j] = 1.0
        if away[j] == 0:
            pts = np.stack([x + s * e, x - s * e])
            g = p.h(pts)
            cols.append((g[0] - g[1]) / (2 * s))
        else:
            s = s * away[j]
            pts = np.stack([x, x + s * e, x + 2 * s * e])
            g = p.h(pts)
            cols.append((-3 * g[0] + 4 * g[1] - g[2]) / (2 * s))
    H = np.array(cols).T
    return 0.5 * (H + H.T)


def hessian_at(p: PotentialSpec, x) -> np.ndarray:
    """Symmetric Hessian; analytic when the potential provides one."""
    if p.hessian is None:
        H = hessian_fd(p, x)
    else:
        x = _as_point(p, x)
        H = np.asarray(p.hessian(x), dtype=float).reshape(p.dim, p.dim)
        H = 0.5 * (H + H.T)
    if not np.all(np.isfinite(H)):
        raise NonFiniteError(f"non-finite Hessian of {p.name!r} at x={x}", x=np.asarray(x))
    return H


# --------------------------------------------------------------------------
# sampled assumption checks


@dataclass
class AssumptionReport:
    """Outcome of a sampled check; never a proof."""

    name: str
    holds: bool
    worst_margin: float
    witness: np.ndarray
    n_tested: int
    constants: dict = field(default_factory=dict)
    label: str = EVIDENCE_LABEL

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "holds": bool(self.holds),
            "worst_margin": float(self.worst_margin),
            "witness": np.asarray(self.witness).tolist(),
            "n_tested": int(self.n_tested),
            "constants": {k: float(v) for k, v in self.constants.items()},
            "label": self.label,
        }


def probe_points(dim: int, n_samples: int, radius: float, seed: int) -> np.ndarray:
    """Uniform draws in the ball plus a deterministic radial grid.

    The grid covers the origin and 64 radii along every signed axis and the
    all-ones diagonals.
    """
    if n_samples < 1:
        raise InvalidParameterError("n_samples must be >= 1")
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((n_samples, dim))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    rad = radius * rng.random(n_samples) ** (1.0 / dim)
    uniform = g * rad[:, None]

    dirs = [np.eye(dim), -np.eye(dim)]
    if dim > 1:
        diag = np.ones(dim) / math.sqrt(dim)
        dirs.append(np.stack([diag, -diag]))
    dirs = np.concatenate(dirs)
    radii = np.linspace(0.0, radius, 64)
    grid = (radii[:, None, None] * dirs[None, :, :]).reshape(-1, dim)
    return np.concatenate([np.zeros((1, dim)), grid, uniform])


def _pairs(dim: int, n_pairs: int, radius: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Independent pairs for half the budget, close pairs for the rest."""
    rng = np.random.default_rng(seed)
    X = probe_points(dim, n_pairs, radius, int(rng.integers(1 << 62)))[-n_pairs:]
    Y = probe_points(dim, n_pairs, radius, int(rng.integers(1 << 62)))[-n_pairs:]
    half = n_pairs // 2
    Y[:half] = X[:half] + 1e-2 * rng.standard_normal((half, dim)) * (1 + np.abs(X[:half]))
    return X, Y


def _report(name, margins, points, constants, n_tested) -> AssumptionReport:
    k = int(np.argmin(margins))
    worst = float(margins[k])
    return AssumptionReport(name, bool(worst >= 0.0), worst, np.asarray(points[k]), n_tested, constants)


def verify_dissipativity(p: PotentialSpec, n_samples: int, radius: float, seed: int,
                         a: float | None = None, b: float | None = None) -> AssumptionReport:
    """Check ``<h(x), x> >= a|x|^2 - b`` on probe points.

    ``a``/``b`` default to the declared constants.
    """
    if a is None or b is None:
        da, db = p.a, p.b
        a = da if a is None else a
        b = db if b is None else b
    X = probe_points(p.dim, n_samples, radius, seed)
    H = gradients(p, X)
    margins = np.sum(H * X, axis=1) - a * np.sum(X * X, axis=1) + b
    return _report("dissipativity", margins, X, {"a": a, "b": b}, len(X))


def verify_growth(p: PotentialSpec, n_samples: int, radius: float, seed: int) -> AssumptionReport:
    """Check the drift part of the growth bound ``|h(x)| <= L(1+|x|^{2l})``."""
    L, l = p.L, p.l
    X = probe_points(p.dim, n_samples, radius, seed)
    H = gradients(p, X)
    margins = L * (1.0 + np.sum(X * X, axis=1) ** l) - np.linalg.norm(H, axis=1)
    return _report("growth", margins, X, {"L": L, "l": l}, len(X))


def verify_local_lipschitz(p: PotentialSpec, n_pairs: int, radius: float, seed: int) -> AssumptionReport:
    """Check ``|h(x)-h(y)| <= L'(1+|x|+|y|)^{l'}|x-y|`` on sampled pairs."""
    if p.local_lipschitz is None:
        raise MissingMetadataError(f"potential {p.name!r} declares no local Lipschitz constants")
    Lp, lp = p.local_lipschitz
    X, Y = _pairs(p.dim, n_pairs, radius, seed)
    lhs = np.linalg.norm(gradients(p, X) - gradients(p, Y), axis=1)
    nx, ny = np.linalg.norm(X, axis=1), np.linalg.norm(Y, axis=1)
    margins = Lp * (1.0 + nx + ny) ** lp * np.linalg.norm(X - Y, axis=1) - lhs
    return _report("local_lipschitz", margins, np.stack([X, Y], axis=1), {"L_prime": Lp, "l_prime": lp}, n_pairs)


def verify_convexity_at_infinity(p: PotentialSpec, c1: float, c2: float, c3: float, r: float, l: float,
                                 n_pairs: int, seed: int, radius: float = 10.0) -> AssumptionReport:
    """Check the convexity-at-infinity inequality on sampled pairs.

    ``<h(x)-h(y), x-y> >= (c1(|x|^{2r}+|y|^{2r}) - c2(|x|^l+|y|^l) - c3)|x-y|^2``.
    The witness is the ``(x, y)`` pair with the smallest margin.
    """
    if min(c1, c2, c3, r, l) <= 0:
        raise InvalidParameterError("convexity constants must be positive")
    if not 2 * r > l:
        raise InvalidParameterError(f"need 2r > l, got r={r}, l={l}")
    X, Y = _pairs(p.dim, n_pairs, radius, seed)
    D = X - Y
    lhs = np.sum((gradients(p, X) - gradients(p, Y)) * D, axis=1)
    nx, ny = np.linalg.norm(X, axis=1), np.linalg.norm(Y, axis=1)
    coef = c1 * (nx ** (2 * r) + ny ** (2 * r)) - c2 * (nx**l + ny**l) - c3
    margins = lhs - coef * np.sum(D * D, axis=1)
    return _report("convexity_at_infinity", margins, np.stack([X, Y], axis=1),
                   {"c1": c1, "c2": c2, "c3": c3, "r": r, "l": l}, n_pairs)


# --------------------------------------------------------------------------
# catalog gradients (numba-compilable batch kernels)


def _make_quadratic(m: float, c: float):
    @maybe_njit(cache=False)
    def grad(X):
        return m * (X - c)

    return grad


@maybe_njit
def _zero_grad(X):
    return np.zeros_like(X)


@maybe_njit
def _double_well_grad(X):
    return X * X * X - X


@maybe_njit
def _quartic_grad(X):
    s = np.sum(X * X, axis=1)
    return s.reshape((X.shape[0], 1)) * X


@maybe_njit
def _example1_grad(X):
    G = np.empty_like(X)
    x = X[:, 0]
    y = X[:, 1]
    G[:, 0] = x * x + 2.0 * y - 6.0
    G[:, 1] = 2.0 * y + 2.0 * x - 3.0
    return G


@maybe_njit
def _ex2_dx(x):
    ax = np.abs(x)
    return np.where(ax >= 1.0, np.sign(x) * (ax - 1.0) ** 5, 0.0) - 2.0 * x - 4.0


@maybe_njit
def _example2_grad(X):
    G = np.empty_like(X)
    G[:, 0] = _ex2_dx(X[:, 0])
    G[:, 1] = X[:, 1] - 1.0
    return G


@maybe_njit
def _example2_x_grad(X):
    G = np.empty_like(X)
    G[:, 0] = _ex2_dx(X[:, 0])
    return G


def _make_regularized_grad(base, c: float, r: float):
    @maybe_njit(cache=False)
    def grad(X):
        G = base(X)
        s = np.sum(X * X, axis=1) ** r
        return G + (c * s).reshape((X.shape[0], 1)) * X

    return grad


def _ex2_u_x(x):
    ax = np.abs(x)
    return np.where(ax >= 1.0, (ax - 1.0) ** 6 / 6.0, 0.0) - x * x - 4.0 * x


def _ex2_uxx(x: float) -> float:
    ax = abs(x)
    return (5.0 * (ax - 1.0) ** 4 if ax >= 1.0 else 0.0) - 2.0


def _ex2_kink(x, steps):
    away = np.zeros_like(x)
    dist = abs(x[0]) - 1.0
    if abs(dist) < 2.0 * steps[0]:
        side = 1.0 if dist >= 0 else -1.0
        away[0] = side * (1.0 if x[0] >= 0 else -1.0)
    return away


def _ex2_x_constants(a: float) -> tuple[float, float, float]:
    """(b_x, x_min, u_x_min) for the x-part of ``example2`` under split constant ``a``."""
    # a x^2 - x u_x(x) is bounded above; find its maximum on a dense grid then polish
    def excess(x):
        return a * x * x - x * float(_ex2_dx(np.array([x]))[0])

    grid = np.linspace(-12.0, 12.0, 240001)
    vals = a * grid**2 - grid * _ex2_dx(grid)
    k = int(np.argmax(vals))
    res = minimize_scalar(lambda t: -excess(t), bounds=(grid[max(k - 1, 0)], grid[min(k + 1, grid.size - 1)]),
                          method="bounded", options={"xatol": 1e-12})
    b_x = max(float(vals[k]), -float(res.fun))
    x_min = brentq(lambda t: float(_ex2_dx(np.array([t]))[0]), 2.0, 3.0, xtol=1e-14)
    return b_x, x_min, float(_ex2_u_x(np.array([x_min]))[0])


def _sup_ratio(num: Callable[[np.ndarray], np.ndarray], den: Callable[[np.ndarray], np.ndarray]) -> float:
    """Supremum over ``r >= 0`` of ``num(r) / den(r)``: grid search, then a bounded polish."""
    r = np.linspace(0.0, 100.0, 200001)
    q = num(r) / den(r)
    k = int(np.argmax(q))
    lo, hi = r[max(k - 1, 0)], r[min(k + 1, r.size - 1)]
    res = minimize_scalar(lambda t: -float(num(np.array([t]))[0] / den(np.array([t]))[0]),
                          bounds=(lo, hi), method="bounded", options={"xatol": 1e-12})
    # tiny inflation keeps sampled checks off the exact supremum
    return max(float(q[k]), -float(res.fun)) * (1.0 + 1e-9)


# --------------------------------------------------------------------------
# catalog constructors


def quadratic(d: int = 1, curvature: float = 1.0, center: float = 0.0) -> PotentialSpec:
    """``u(x) = m|x - c|^2 / 2`` with ``c`` the same in every coordinate."""
    m, c = float(curvature), float(center)
    if m <= 0:
        raise InvalidParameterError("curvature must be positive")

    def u(X):
        return 0.5 * m * np.sum((X - c) ** 2, axis=1)

    def hess(x):
        return m * np.eye(d)

    if c == 0.0:
        diss = (m, 0.0)
        growth = (m, 0.5)
    else:
        diss = (0.5 * m, 0.5 * m * c * c * d)
        growth = (m * max(1.0, abs(c) * math.sqrt(d)), 0.5)
    name = "quadratic" if (m == 1.0 and c == 0.0) else f"quadratic(m={m:g},c={c:g})"
    return PotentialSpec(
        name=name, dim=d, u=u, h=_make_quadratic(m, c), hessian=hess,
        growth=growth, local_lipschitz=(m, 0.5), dissipativity=diss,
        known_minimum=(np.full(d, c), 0.0),
    )


def constant(d: int = 1) -> PotentialSpec:
    """``u = 0``; not normalizable on R^d, only meaningful on a bounded box."""

    def u(X):
        return np.zeros(X.shape[0])

    return PotentialSpec(
        name="constant", dim=d, u=u, h=_zero_grad, hessian=lambda x: np.zeros((d, d)),
        growth=(1e-12, 0.5), local_lipschitz=(1e-12, 0.5), dissipativity=None,
        non_confining=True,
    )


def double_well() -> PotentialSpec:
    """``u(x) = x^4/4 - x^2/2``; minima at +-1, barrier 1/4."""

    def u(X):
        x = X[:, 0]
        return 0.25 * x**4 - 0.5 * x**2

    def hess(x):
        return np.array([[3.0 * x[0] ** 2 - 1.0]])

    return PotentialSpec(
        name="double_well", dim=1, u=u, h=_double_well_grad, hessian=hess,
        growth=(2.0, 1.5), local_lipschitz=(1.0, 2.0), dissipativity=(1.0, 1.0),
        known_minimum=(np.array([1.0]), -0.25),
    )


def quartic(d: int = 1) -> PotentialSpec:
    """``u(x) = |x|^4 / 4``, the canonical case where plain ULA explodes."""

    def u(X):
        return 0.25 * np.sum(X * X, axis=1) ** 2

    def hess(x):
        return float(x @ x) * np.eye(d) + 2.0 * np.outer(x, x)

    return PotentialSpec(
        name="quartic", dim=d, u=u, h=_quartic_grad, hessian=hess,
        growth=(1.0, 1.5), local_lipschitz=(3.0, 2.0), dissipativity=(1.0, 0.25),
        known_minimum=(np.zeros(d), 0.0),
    )


def example1() -> PotentialSpec:
    """``g(x, y) = x^3/3 + y^2 + 2xy - 6x - 3y + 4``.

    Unbounded below, so ``exp(-beta g)`` is not a probability density; only
    used for critical-point and Morse analysis.
    """

    def u(X):
        x, y = X[:, 0], X[:, 1]
        return x**3 / 3.0 + y**2 + 2 * x * y - 6 * x - 3 * y + 4

    def hess(p):
        return np.array([[2.0 * p[0], 2.0], [2.0, 2.0]])

    L = _sup_ratio(lambda r: r**2 + 6 * r + 9, lambda r: 1 + r**2)
    return PotentialSpec(
        name="example1", dim=2, u=u, h=_example1_grad, hessian=hess,
        growth=(L, 1.0), local_lipschitz=(6.0, 1.0), dissipativity=None,
        non_confining=True,
    )


_EX2_A = 0.5


def example2() -> PotentialSpec:
    """``u(x, y) = (|x|-1)^6/6 * 1{|x|>=1} - x^2 - 4x + y^2/2 - y``."""
    b_x, x_min, ux_min = _ex2_x_constants(_EX2_A)
    b_y = 1.0 / (4.0 * (1.0 - _EX2_A))

    def u(X):
        y = X[:, 1]
        return _ex2_u_x(X[:, 0]) + 0.5 * y * y - y

    def hess(p):
        return np.array([[_ex2_uxx(p[0]), 0.0], [0.0, 1.0]])

    L = _sup_ratio(lambda r: r**5 + 3 * r + 5, lambda r: 1 + r**5)
    return PotentialSpec(
        name="example2", dim=2, u=u, h=_example2_grad, hessian=hess,
        growth=(L, 2.5), local_lipschitz=(7.0, 4.0), dissipativity=(_EX2_A, b_x + b_y),
        known_minimum=(np.array([x_min, 1.0]), ux_min - 0.5), kink=_ex2_kink,
    )


def example2_xmarginal() -> PotentialSpec:
    """The x-part of ``example2`` as a 1-D potential."""
    b_x, x_min, ux_min = _ex2_x_constants(_EX2_A)

    def u(X):
        return _ex2_u_x(X[:, 0])

    def hess(p):
        return np.array([[_ex2_uxx(p[0])]])

    L = _sup_ratio(lambda r: r**5 + 2 * r + 4, lambda r: 1 + r**5)
    return PotentialSpec(
        name="example2_xmarginal", dim=1, u=u, h=_example2_x_grad, hessian=hess,
        growth=(L, 2.5), local_lipschitz=(7.0, 4.0), dissipativity=(_EX2_A, b_x),
        known_minimum=(np.array([x_min]), ux_min), kink=_ex2_kink,
    )


# --------------------------------------------------------------------------
# high-order regularization


def regularize(g: PotentialSpec, eta: float, r: float) -> PotentialSpec:
    """Return ``u = g + eta |x|^{2r+2}``.

    The result carries the convexity-at-infinity constants
    ``(c1, c2, c3) = (eta (r+1), L, L)`` in ``metadata["convexity_at_infinity"]``,
    where ``L`` is ``g``'s local Lipschitz constant rewritten for the
    ``(1 + |x|^l + |y|^l)`` form.
    """
    if not (eta > 0 and r > 0):
        raise InvalidParameterError(f"eta and r must be positive, got eta={eta}, r={r}")
    eta, r = float(eta), float(r)
    c = 2.0 * eta * (r + 1.0)

    Lp_g, lp_g = g.local_lipschitz if g.local_lipschitz is not None else (0.0, 1.0)
    if not r > lp_g / 2.0:
        warnings.warn(f"regularize: r={r} does not exceed l/2={lp_g / 2} for {g.name!r}", stacklevel=2)

    def u(X):
        return np.asarray(g.u(X)) + eta * np.sum(X * X, axis=1) ** (r + 1.0)

    hess = None
    if g.hessian is not None:
        g_hess = g.hessian

        def hess(x):
            n2 = float(x @ x)
            extra = c * n2**r * np.eye(g.dim)
            if n2 > 0:
                extra += 2.0 * c * r * n2 ** (r - 1.0) * np.outer(x, x)
            return np.asarray(g_hess(x)) + extra

    # growth: |x|^{2l_g} and |x|^{2r+1} are both <= 1 + |x|^{2 l_new}
    L_g, l_g = g.growth if g.growth is not None else (0.0, 0.5)
    l_new = max(l_g, r + 0.5)
    growth = (2.0 * L_g + c, l_new)
    lip = (Lp_g + c * (2.0 * r + 1.0), max(lp_g, 2.0 * r))

    if g.dissipativity is not None:
        diss = g.dissipativity
        diss_source = "inherited"
    else:
        # a = 1; b from the power term alone when g is flat, else sampled
        t_star = (1.0 / (c * (r + 1.0))) ** (1.0 / r)
        b_pow = t_star - c * t_star ** (r + 1.0)
        diss, diss_source = (1.0, b_pow), "power term"
        if not np.allclose(g.h(probe_points(g.dim, 256, 5.0, 1)), 0.0):
            X = probe_points(g.dim, 20000, 50.0, 12345)
            H = np.asarray(g.h(X)) + c * (np.sum(X * X, axis=1) ** r)[:, None] * X
            b = float(np.max(np.sum(X * X, axis=1) - np.sum(H * X, axis=1)))
            diss, diss_source = (1.0, max(b, 0.0) * 1.05 + 1e-9), EVIDENCE_LABEL

    # (1+|x|+|y|)^{l'} <= 3^{max(l'-1, 0)} (1 + |x|^{l'} + |y|^{l'})
    L_conv = Lp_g * 3.0 ** max(lp_g - 1.0, 0.0)
    meta = dict(g.metadata)
    meta.update({
        "base": g.name,
        "eta": eta,
        "r": r,
        "dissipativity_source": diss_source,
        "convexity_at_infinity": {"c1": eta * (r + 1.0), "c2": L_conv, "c3": L_conv, "r": r, "l": lp_g},
    })
    name = f"regularized:{g.name}:{eta:g}:{r:g}"
    return PotentialSpec(
        name=name, dim=g.dim, u=u, h=_make_regularized_grad(g.h, c, r), hessian=hess,
        growth=growth, local_lipschitz=lip, dissipativity=diss, known_minimum=None,
        non_confining=False, kink=g.kink, metadata=meta,
    )


# --------------------------------------------------------------------------
# registry

CATALOG: dict[str, Callable[[], PotentialSpec]] = {
    "quadratic": quadratic,
    "double_well": double_well,
    "example1": example1,
    "example2": example2,
    "example2_xmarginal": example2_xmarginal,
    "quartic": quartic,
    "constant": constant,
}


@functools.lru_cache(maxsize=None)
def get_potential(pid: str) -> PotentialSpec:
    """Resolve a catalog id, including ``regularized:<id>:<eta>:<r>``."""
    if pid.startswith("regularized:"):
        parts = pid.split(":")
        if len(parts) != 4:
            raise InvalidInputError(f"malformed regularized id {pid!r}; expected regularized:<id>:<eta>:<r>")
        _, base, eta, r = parts
        try:
            eta_f, r_f = float(eta), float(r)
        except ValueError as exc:
            raise InvalidInputError(f"malformed regularized id {pid!r}: {exc}") from None
        return regularize(get_potential(base), eta_f, r_f)
    try:
        return CATALOG[pid]()
    except KeyError:
        raise InvalidInputError(f"unknown potential id {pid!r}; known: {sorted(CATALOG)}") from None


def is_valid_id(pid: str) -> bool:
    try:
        get_potential(pid)
    except (InvalidInputError, InvalidParameterError):
        return False
    return True
