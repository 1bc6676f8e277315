"""Split tamed ULA (sTULA) and the ULA / TULA baselines.

sTULA splits the drift as ``h(x) = a x + f(x)`` with ``a`` the declared
dissipativity constant and tames only ``f``::

    h_lam(x) = a x + f(x) / (1 + sqrt(lam) |x|^{2l})
    x_{n+1}  = x_n - lam h_lam(x_n) + sqrt(2 lam / beta) xi_{n+1}

Chains advance in a single compiled kernel when numba is active and the
potential's gradient is compiled; otherwise a vectorized numpy loop with the
same arithmetic is used.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import rng
from ._accel import NUMBA_ENABLED, is_compiled, maybe_njit
from .errors import DivergenceError, InvalidInputError, InvalidParameterError, StepsizeError
from .potentials import PotentialSpec, as_batch

SCHEMES = {"stula": 0, "ula": 1, "tula": 2}
# |theta| > 1e150 counts as divergence
_LIMIT_SQ = 1e300


@dataclass(frozen=True)
class InitialLaw:
    """Point mass at ``mean`` or an isotropic Gaussian ``N(mean, scale^2 I)``."""

    kind: str = "point"
    mean: tuple[float, ...] | float = 0.0
    scale: float = 0.0

    def __post_init__(self):
        if self.kind not in ("point", "gaussian"):
            raise InvalidParameterError(f"init kind must be 'point' or 'gaussian', got {self.kind!r}")
        if self.kind == "gaussian" and not self.scale > 0:
            raise InvalidParameterError("gaussian init needs scale > 0")

    @classmethod
    def point(cls, x0) -> "InitialLaw":
        return cls("point", _as_tuple(x0), 0.0)

    @classmethod
    def gaussian(cls, mean, scale: float) -> "InitialLaw":
        return cls("gaussian", _as_tuple(mean), float(scale))

    def mean_vector(self, dim: int) -> np.ndarray:
        m = np.asarray(self.mean, dtype=float).reshape(-1)
        if m.size == 1:
            return np.full(dim, float(m[0]))
        if m.size != dim:
            raise InvalidInputError(f"init mean has length {m.size}, potential dimension is {dim}")
        return m

    def second_moment(self, dim: int) -> float:
        m = self.mean_vector(dim)
        return float(m @ m) + (dim * self.scale**2 if self.kind == "gaussian" else 0.0)


def _as_tuple(x) -> tuple[float, ...] | float:
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0:
        return float(arr)
    return tuple(float(v) for v in arr.reshape(-1))


@dataclass(frozen=True)
class ChainConfig:
    beta: float
    lam: float
    n_steps: int
    n_chains: int = 1
    seed: int = 1
    burn_in: int | None = None
    thin: int = 1
    init: InitialLaw = field(default_factory=InitialLaw)
    scheme: str = "stula"
    noise: bool = True
    allow_large_step: bool = False

    def __post_init__(self):
        if not self.beta > 0:
            raise InvalidParameterError(f"beta must be positive, got {self.beta}")
        if not self.lam > 0:
            raise InvalidParameterError(f"lambda must be positive, got {self.lam}")
        if self.n_steps < 1 or self.n_chains < 1:
            raise InvalidParameterError("n_steps and n_chains must be >= 1")
        if self.thin < 1:
            raise InvalidParameterError("thin must be >= 1")
        if self.scheme not in SCHEMES:
            raise InvalidParameterError(f"scheme must be one of {sorted(SCHEMES)}, got {self.scheme!r}")
        if not 0 <= self.burn_in_steps <= self.n_steps:
            raise InvalidParameterError(f"burn_in must lie in [0, n_steps], got {self.burn_in}")

    @property
    def burn_in_steps(self) -> int:
        return self.n_steps // 2 if self.burn_in is None else int(self.burn_in)

    @property
    def collect_steps(self) -> np.ndarray:
        """Iterations whose states are kept as samples."""
        return np.arange(self.burn_in_steps + self.thin, self.n_steps + 1, self.thin)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["init"] = asdict(self.init)
        return d


@dataclass
class SampleBatch:
    """Result of :func:`run_chains`.

    ``samples`` holds collected post-burn-in states of chains that never
    diverged, ordered by collection step then chain index.
    ``moment_trace[n]`` is the mean over live chains of ``(|x_n|^2, |x_n|^4)``.
    """

    dim: int
    samples: np.ndarray
    moment_trace: np.ndarray
    diverged: bool
    first_nonfinite_step: int | None
    n_diverged: int
    final_states: np.ndarray
    snapshot_steps: np.ndarray
    snapshots: np.ndarray
    chain_alive: np.ndarray

    @property
    def mean_sq(self) -> np.ndarray:
        return self.moment_trace[:, 0]

    @property
    def mean_quartic(self) -> np.ndarray:
        return self.moment_trace[:, 1]

    def snapshot(self, step: int) -> np.ndarray:
        """States of all live chains at a recorded ``step``."""
        k = int(np.searchsorted(self.snapshot_steps, step))
        if k >= len(self.snapshot_steps) or self.snapshot_steps[k] != step:
            raise InvalidInputError(f"step {step} was not recorded")
        return self.snapshots[k][self.chain_alive]


# --------------------------------------------------------------------------
# drift


def lambda_max(p: PotentialSpec) -> float:
    """Largest admissible sTULA stepsize.

    ``min{1, 1/(4(2a+4L)^2), 1/(4a)}``: the algorithmic cap together with the
    second-moment requirement ``lam < 1/(4a)``.
    """
    a, L = p.a, p.L
    return min(1.0, 1.0 / (4.0 * (2.0 * a + 4.0 * L) ** 2), 1.0 / (4.0 * a))


@maybe_njit
def _drift(X, G, scheme, a, l, sqrt_lam, lam):
    if scheme == 1:
        return G.copy()
    n = X.shape[0]
    if scheme == 2:
        gn = np.sqrt(np.sum(G * G, axis=1))
        return G / (1.0 + lam * gn).reshape((n, 1))
    n2 = np.sum(X * X, axis=1)
    denom = 1.0 + sqrt_lam * n2**l
    aX = a * X
    return aX + (G - aX) / denom.reshape((n, 1))


def _scheme_constants(p: PotentialSpec, scheme: str) -> tuple[float, float]:
    if scheme == "stula":
        return p.a, p.l
    return 0.0, 1.0


def tamed_drift(p: PotentialSpec, lam: float, x, scheme: str = "stula") -> np.ndarray:
    """Drift used by ``scheme``; for sTULA ``a x + (h(x) - a x)/(1 + sqrt(lam)|x|^{2l})``.

    Accepts one point or an ``(n, d)`` batch and returns the same shape.
    """
    if not lam > 0:
        raise InvalidParameterError(f"lambda must be positive, got {lam}")
    single = np.ndim(x) < 2
    X = as_batch(p, np.reshape(x, (1, -1)) if single else x)
    if not np.all(np.isfinite(X)):
        raise InvalidInputError("non-finite state")
    a, l = _scheme_constants(p, scheme)
    D = _drift(X, np.ascontiguousarray(p.h(X), dtype=float), SCHEMES[scheme], a, l, math.sqrt(lam), lam)
    return D[0] if single else D


def step(scheme: str, p: PotentialSpec, beta: float, lam: float, state, noise) -> np.ndarray:
    """One update ``x - lam * drift(x) + sqrt(2 lam / beta) * noise``.

    A non-finite result is returned as is; callers decide what divergence means.
    """
    if scheme not in SCHEMES:
        raise InvalidParameterError(f"unknown scheme {scheme!r}")
    x = np.asarray(state, dtype=float).reshape(-1)
    z = np.asarray(noise, dtype=float).reshape(-1)
    if x.shape != (p.dim,) or z.shape != (p.dim,):
        raise InvalidInputError("state and noise must have length dim")
    if not np.all(np.isfinite(x)):
        raise InvalidInputError("non-finite state")
    with np.errstate(over="ignore", invalid="ignore"):
        D = tamed_drift(p, lam, x.reshape(1, -1), scheme)[0]
        return x - lam * D + math.sqrt(2.0 * lam / beta) * z


def second_moment_bound(p: PotentialSpec, beta: float, init_second_moment: float) -> float:
    """Uniform-in-time bound ``E|x_0|^2 + 2(2 C_h^2 + 2d/beta + 2b)/a`` with ``C_h = L + a``."""
    a, b = p.a, p.b
    c_h = p.L + a
    return init_second_moment + 2.0 * (2.0 * c_h**2 + 2.0 * p.dim / beta + 2.0 * b) / a


# --------------------------------------------------------------------------
# kernels


# the gradient enters as a first-class function, which defeats on-disk caching
@maybe_njit(cache=False)
def _advance_compiled(X, keys, alive, first_bad, n_steps, grad, scheme, a, l, sqrt_lam, lam, scale,
                      slots, samples, snap_slots, snaps, moments):
    n, d = X.shape
    for k in range(n_steps):
        D = _drift(X, grad(X), scheme, a, l, sqrt_lam, lam)
        cnt = 0
        s2 = 0.0
        s4 = 0.0
        for i in range(n):
            if not alive[i]:
                continue
            nrm = 0.0
            for j in range(d):
                z = 0.0
                if scale != 0.0:
                    z = rng.normal_at(keys[i], k * d + j)
                v = X[i, j] - lam * D[i, j] + scale * z
                X[i, j] = v
                nrm += v * v
            if not nrm <= _LIMIT_SQ:
                alive[i] = False
                first_bad[i] = k + 1
                for j in range(d):
                    X[i, j] = np.nan
                continue
            cnt += 1
            s2 += nrm
            s4 += nrm * nrm
        if cnt > 0:
            moments[k + 1, 0] = s2 / cnt
            moments[k + 1, 1] = s4 / cnt
        else:
            moments[k + 1, 0] = np.nan
            moments[k + 1, 1] = np.nan
        if slots[k] >= 0:
            samples[slots[k]] = X
        if snap_slots[k] >= 0:
            snaps[snap_slots[k]] = X


def _advance_numpy(X, keys, alive, first_bad, n_steps, grad, scheme, a, l, sqrt_lam, lam, scale,
                   slots, samples, snap_slots, snaps, moments, block=4096):
    n, d = X.shape
    k0 = 0
    with np.errstate(all="ignore"):
        while k0 < n_steps:
            B = min(block, n_steps - k0)
            if scale != 0.0:
                Z = rng.normals(keys, k0 * d, B * d).reshape(n, B, d)
            for b in range(B):
                k = k0 + b
                D = _drift(X, np.asarray(grad(X), dtype=float), scheme, a, l, sqrt_lam, lam)
                if scale != 0.0:
                    Xn = X - lam * D + scale * Z[:, b, :]
                else:
                    Xn = X - lam * D + 0.0
                X[alive] = Xn[alive]
                nrm = np.sum(X * X, axis=1)
                bad = alive & ~(nrm <= _LIMIT_SQ)
                if bad.any():
                    alive[bad] = False
                    first_bad[bad] = k + 1
                    X[bad] = np.nan
                live = nrm[alive]
                if live.size:
                    moments[k + 1, 0] = np.sum(live) / live.size
                    moments[k + 1, 1] = np.sum(live * live) / live.size
                else:
                    moments[k + 1] = np.nan
                if slots[k] >= 0:
                    samples[slots[k]] = X
                if snap_slots[k] >= 0:
                    snaps[snap_slots[k]] = X
            k0 += B


def uses_compiled_kernel(p: PotentialSpec) -> bool:
    return NUMBA_ENABLED and is_compiled(p.h)


def initial_states(p: PotentialSpec, cfg: ChainConfig, keys: np.ndarray) -> np.ndarray:
    mean = cfg.init.mean_vector(p.dim)
    X = np.tile(mean, (cfg.n_chains, 1))
    if cfg.init.kind == "gaussian":
        X = X + cfg.init.scale * rng.normals(rng.init_keys(keys), 0, p.dim)
    return np.ascontiguousarray(X)


def check_stepsize(p: PotentialSpec, cfg: ChainConfig) -> None:
    if cfg.scheme == "stula" and not cfg.allow_large_step:
        lm = lambda_max(p)
        if cfg.lam > lm:
            raise StepsizeError(
                f"lambda={cfg.lam} exceeds lambda_max={lm:.6g} for {p.name!r}; "
                "set allow_large_step to run anyway"
            )


def run_chains(p: PotentialSpec, cfg: ChainConfig, record_at=None, backend: str | None = None) -> SampleBatch:
    """Run ``cfg.n_chains`` independent chains for ``cfg.n_steps`` iterations.

    ``record_at`` lists iterations at which the states of every chain are
    stored (for law-vs-time estimates).  ``backend`` forces ``"numba"`` or
    ``"numpy"``; by default the compiled kernel is used when available.

    Raises :class:`DivergenceError` (carrying the batch) if every chain
    diverges.
    """
    if p.dissipativity is None and cfg.scheme == "stula":
        raise InvalidInputError(f"potential {p.name!r} has no dissipativity constant; sTULA needs one")
    check_stepsize(p, cfg)
    n, d, N = cfg.n_chains, p.dim, cfg.n_steps
    keys = rng.chain_keys(cfg.seed, n)
    X = initial_states(p, cfg, keys)
    if not np.all(np.isfinite(X)):
        raise InvalidInputError("non-finite initial state")

    collect = cfg.collect_steps
    slots = np.full(N, -1, dtype=np.int64)
    slots[collect - 1] = np.arange(collect.size)
    samples = np.empty((collect.size, n, d))

    rec = np.unique(np.asarray([] if record_at is None else record_at, dtype=np.int64))
    if rec.size and (rec[0] < 0 or rec[-1] > N):
        raise InvalidInputError("record_at steps must lie in [0, n_steps]")
    snap_slots = np.full(N, -1, dtype=np.int64)
    snaps = np.empty((rec.size, n, d))
    for s, st in enumerate(rec):
        if st == 0:
            snaps[s] = X
        else:
            snap_slots[st - 1] = s

    moments = np.empty((N + 1, 2))
    n0 = np.sum(X * X, axis=1)
    moments[0] = (n0.mean(), (n0 * n0).mean())

    alive = np.ones(n, dtype=np.bool_)
    first_bad = np.full(n, -1, dtype=np.int64)
    a, l = _scheme_constants(p, cfg.scheme)
    scale = math.sqrt(2.0 * cfg.lam / cfg.beta) if cfg.noise else 0.0
    args = (X, keys, alive, first_bad, N, p.h, SCHEMES[cfg.scheme], float(a), float(l),
            math.sqrt(cfg.lam), float(cfg.lam), scale, slots, samples, snap_slots, snaps, moments)

    use = backend or ("numba" if uses_compiled_kernel(p) else "numpy")
    if use == "numba":
        if not uses_compiled_kernel(p):
            raise InvalidParameterError("numba backend unavailable for this potential")
        _advance_compiled(*args)
    elif use == "numpy":
        _advance_numpy(*args)
    else:
        raise InvalidParameterError(f"unknown backend {backend!r}")

    dead = first_bad[first_bad >= 0]
    batch = SampleBatch(
        dim=d,
        samples=samples[:, alive, :].reshape(-1, d),
        moment_trace=moments,
        diverged=bool(dead.size),
        first_nonfinite_step=int(dead.min()) if dead.size else None,
        n_diverged=int(dead.size),
        final_states=X,
        snapshot_steps=rec,
        snapshots=snaps,
        chain_alive=alive,
    )
    if not alive.any():
        raise DivergenceError(
            f"all {n} chains diverged; first non-finite state at step {batch.first_nonfinite_step}",
            batch=batch, first_nonfinite_step=batch.first_nonfinite_step,
        )
    return batch


# --------------------------------------------------------------------------
# sampled drift inequalities


def check_drift_bounds(p: PotentialSpec, lam: float, n_samples: int, radius: float, seed: int,
                       X: np.ndarray | None = None) -> list:
    """Sampled margins of the three sTULA drift inequalities at stepsize ``lam``.

    * growth: ``|h_lam(x)| <= a|x| + (L + a)/sqrt(lam)``
    * dissipativity: ``<h_lam(x), x> >= (a/2)|x|^2 - b``
    * taming error: ``|h_lam(x) - h(x)| <= sqrt(lam)(|h(x)| + a|x|)|x|^{2l}``

    Margins are ``(rhs - lhs) / (1 + |rhs| + |lhs|)`` so that roundoff at
    large radius does not read as a violation.
    """
    from .potentials import _report, probe_points

    if X is None:
        X = probe_points(p.dim, n_samples, radius, seed)
    a, b, L, l = p.a, p.b, p.L, p.l
    H = np.asarray(p.h(X), dtype=float)
    D = tamed_drift(p, lam, X)
    nx = np.linalg.norm(X, axis=1)
    sq = math.sqrt(lam)

    def rel(lhs, rhs):
        return (rhs - lhs) / (1.0 + np.abs(rhs) + np.abs(lhs))

    consts = {"a": a, "b": b, "L": L, "l": l, "lambda": lam}
    # zero-vs-zero comparisons near the origin round to -1e-18; tolerate that
    tol = 1e-12
    lhs = np.linalg.norm(D, axis=1)
    out = [_report("tamed_growth", rel(lhs, a * nx + (L + a) / sq), X, consts, len(X))]
    lhs = 0.5 * a * nx**2 - b
    out.append(_report("tamed_dissipativity", rel(lhs, np.sum(D * X, axis=1)), X, consts, len(X)))
    lhs = np.linalg.norm(D - H, axis=1)
    out.append(_report("taming_error", rel(lhs, sq * (np.linalg.norm(H, axis=1) + a * nx) * nx ** (2 * l)),
                       X, consts, len(X)))
    for r in out:
        r.holds = bool(r.worst_margin >= -tol)
    return out
