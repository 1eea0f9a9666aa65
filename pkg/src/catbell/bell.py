"""Correlation-model interface, CHSH combination and the Bell maximiser.

Every model in this package has a correlation function that is linear in
``(sin theta, cos theta)``::

    C(beta, theta) = a(beta) sin(theta) + b(beta) cos(theta)

so for fixed displacements the CHSH function is maximised over both spin
angles in closed form, ``max B = |u + v| + |u - v|`` with ``u = (a, b)(beta)``
and ``v = (a, b)(beta')``. The numerical search therefore only runs over the
displacements.
"""
from __future__ import annotations

import abc
import logging
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize
from scipy.stats import qmc

from .errors import NoCrossingError
from .phasespace import CatState, MeasurementSetting

log = logging.getLogger(__name__)

TSIRELSON = 2.0 * np.sqrt(2.0)

# Sign of the cos(theta) sinh(4 D Re beta) term for the pure cat state, fixed by
# the truncated-Fock oracle under the conventions in `phasespace`.
CANONICAL_SIGN = +1


@dataclass(frozen=True)
class BellSettings:
    unprimed: MeasurementSetting
    primed: MeasurementSetting


class CorrelationModel(abc.ABC):
    """C(beta, theta; t) for one open-system channel.

    Subclasses implement :meth:`parts`, returning the coefficients of
    ``sin(theta)`` and ``cos(theta)``. ``t`` is the model's dynamical parameter,
    named by :attr:`parameter`.
    """

    parameter = "t"
    real_beta = False

    @abc.abstractmethod
    def parts(self, beta, t):
        """Return ``(a, b)`` arrays shaped like ``beta``."""

    def correlation(self, theta, beta, t):
        a, b = self.parts(np.asarray(beta, dtype=complex), t)
        out = a * np.sin(theta) + b * np.cos(theta)
        return out[()] if np.ndim(out) == 0 else out

    def evaluate(self, setting: MeasurementSetting, t) -> float:
        return float(self.correlation(setting.theta, setting.beta, t))

    def describe(self) -> dict:
        return {"channel": type(self).__name__}


class ZeroModel(CorrelationModel):
    """C == 0; useful as a degenerate test case."""

    def parts(self, beta, t):
        z = np.zeros(np.shape(beta))
        return z, z.copy()

    def describe(self):
        return {"channel": "zero"}


def pure_state_parts(beta, D: float, coherence=1.0):
    """sin/cos coefficients of the pure-state correlation, with an optional
    decoherence factor on the interference (sin theta) term."""
    beta = np.asarray(beta, dtype=complex)
    env = np.exp(-2.0 * np.abs(beta) ** 2)
    a = env * np.cos(4.0 * D * beta.imag) * coherence
    b = CANONICAL_SIGN * env * np.exp(-2.0 * D * D) * np.sinh(4.0 * D * beta.real)
    return a, b


def pure_state_correlation(theta, beta, D: float):
    a, b = pure_state_parts(beta, D)
    out = a * np.sin(theta) + b * np.cos(theta)
    return out[()] if np.ndim(out) == 0 else out


class PureStateModel(CorrelationModel):
    """The unevolved cat state; ``t`` is ignored."""

    def __init__(self, cat: CatState = CatState()):
        self.cat = cat

    def parts(self, beta, t=0.0):
        return pure_state_parts(beta, self.cat.D)

    def describe(self):
        return {"channel": "pure", "D": self.cat.D}


def bell_value(model: CorrelationModel, s: BellSettings, t) -> float:
    u, p = s.unprimed, s.primed
    return (
        model.evaluate(MeasurementSetting(p.theta, p.beta), t)
        + model.evaluate(MeasurementSetting(u.theta, p.beta), t)
        + model.evaluate(MeasurementSetting(p.theta, u.beta), t)
        - model.evaluate(MeasurementSetting(u.theta, u.beta), t)
    )


@dataclass(frozen=True)
class OptimizerConfig:
    """Multi-start Nelder-Mead over the displacement box.

    ``beta_box`` bounds both Re and Im of beta and beta'. ``theta_box`` is
    kept for completeness of the search-space description; the spin angles are
    optimised analytically and always lie in [-pi, pi]. Every restart runs to
    ``coarse_tol``; the best ``polish`` of them are then refined to ``tol``.
    """

    restarts: int = 16
    simplex_scale: float = 0.25
    tol: float = 1e-9
    beta_box: float = 2.5
    theta_box: float = np.pi
    grid_points: int = 7
    sobol_points: int = 512
    seed: int = 0
    max_iter: int = 4000
    coarse_tol: float = 1e-5
    polish: int = 3

    def __post_init__(self):
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.polish < 1:
            raise ValueError("polish must be >= 1")
        if not (self.tol > 0 and self.coarse_tol > 0):
            raise ValueError("tolerance must be > 0")
        if not self.beta_box > 0:
            raise ValueError("beta_box must be > 0")
        if self.grid_points < 2:
            raise ValueError("grid_points must be >= 2")


@dataclass
class BellResult:
    max_bell: float
    settings: BellSettings
    converged: bool
    n_converged: int = 0
    x: np.ndarray = field(default=None, repr=False)


def _unpack(x, real_beta):
    x = np.asarray(x, dtype=float)
    if real_beta:
        return x[..., 0] + 0j, x[..., 1] + 0j
    return x[..., 0] + 1j * x[..., 1], x[..., 2] + 1j * x[..., 3]


def _chsh_max(model, t, real_beta):
    def f(x):
        b1, b2 = _unpack(x, real_beta)
        shape = b1.shape
        a, b = model.parts(np.concatenate([b1.reshape(-1), b2.reshape(-1)]), t)
        n = b1.size
        a1, a2 = a[:n], a[n:]
        c1, c2 = b[:n], b[n:]
        val = np.hypot(a1 + a2, c1 + c2) + np.hypot(a1 - a2, c1 - c2)
        return val.reshape(shape)

    return f


def _seed_points(dim, cfg: OptimizerConfig):
    box = cfg.beta_box
    axis = np.linspace(-box, box, cfg.grid_points)
    grid = np.stack(np.meshgrid(*([axis] * dim), indexing="ij"), axis=-1).reshape(-1, dim)
    sobol = qmc.Sobol(dim, scramble=False)
    if cfg.seed:
        sobol.fast_forward(cfg.seed)
    pts = sobol.random(cfg.sobol_points) * 2 * box - box
    return grid, pts


def settings_from_x(model, t, x, real_beta) -> BellSettings:
    b1, b2 = _unpack(np.asarray(x), real_beta)
    b1, b2 = complex(b1), complex(b2)
    a, b = model.parts(np.array([b1, b2]), t)
    u = np.array([a[0], b[0]])
    v = np.array([a[1], b[1]])
    theta_p = float(np.arctan2(*(v + u)))
    theta = float(np.arctan2(*(v - u)))
    return BellSettings(MeasurementSetting(theta, b1), MeasurementSetting(theta_p, b2))


def maximize_bell(model: CorrelationModel, t, cfg: OptimizerConfig = OptimizerConfig(),
                  extra_seeds: Sequence[np.ndarray] = ()) -> BellResult:
    """Best |B| found by multi-start derivative-free search.

    Start points are the ``cfg.restarts`` best points of a coarse regular grid
    and an unscrambled Sobol sequence over the box (plus any ``extra_seeds``),
    so the result is never below the best grid value.
    """
    real_beta = bool(getattr(model, "real_beta", False))
    dim = 2 if real_beta else 4
    f = _chsh_max(model, t, real_beta)
    grid, sobol = _seed_points(dim, cfg)
    cands = [grid, sobol]
    if len(extra_seeds):
        cands.append(np.clip(np.atleast_2d(np.asarray(extra_seeds, dtype=float)), -cfg.beta_box, cfg.beta_box))
    cands = np.concatenate(cands)
    vals = f(cands)
    order = np.argsort(-vals, kind="stable")
    starts = []
    for idx in order:
        x = cands[idx]
        if any(np.max(np.abs(x - s)) < 1e-12 for s in starts):
            continue
        starts.append(x)
        if len(starts) >= cfg.restarts:
            break

    best_val = float(vals[order[0]])
    best_x = cands[order[0]].copy()
    if best_val <= 0.0:
        # identically-zero objective: nothing to refine
        return BellResult(0.0, settings_from_x(model, t, best_x, real_beta), True, 0, best_x)

    bounds = [(-cfg.beta_box, cfg.beta_box)] * dim

    def run(x0, tol, scale):
        simplex = np.vstack([x0] + [x0 + scale * e for e in np.eye(dim)])
        simplex = np.clip(simplex, -cfg.beta_box, cfg.beta_box)
        return minimize(
            lambda x: -float(f(x)), x0, method="Nelder-Mead", bounds=bounds,
            options={"xatol": tol, "fatol": tol * 1e-3, "maxiter": cfg.max_iter, "initial_simplex": simplex},
        )

    coarse = [run(x0, cfg.coarse_tol, cfg.simplex_scale) for x0 in starts]
    ranked = sorted(range(len(coarse)), key=lambda k: (coarse[k].fun, k))
    n_conv = 0
    for k in ranked[:cfg.polish]:
        res = run(np.asarray(coarse[k].x), cfg.tol, max(100 * cfg.coarse_tol, 1e-3))
        n_conv += bool(res.success)
        for r in (coarse[k], res):
            if -r.fun > best_val:
                best_val = float(-r.fun)
                best_x = np.asarray(r.x)
    converged = n_conv > 0
    if not converged:
        warnings.warn(f"maximize_bell: no restart converged at t={t}", RuntimeWarning, stacklevel=2)
    return BellResult(best_val, settings_from_x(model, t, best_x, real_beta), converged, n_conv, best_x)


def max_bell_curve(model: CorrelationModel, grid, cfg: OptimizerConfig = OptimizerConfig(),
                   warm_start: bool = True) -> list[BellResult]:
    """maximize_bell along a parameter grid, optionally seeding each point with
    the previous optimum (deterministic for a fixed grid order)."""
    out = []
    prev = None
    for t in grid:
        seeds = [prev] if (warm_start and prev is not None) else ()
        r = maximize_bell(model, t, cfg, extra_seeds=seeds)
        prev = r.x
        out.append(r)
    return out


def violation_windows(model: CorrelationModel, t_grid, cfg: OptimizerConfig = OptimizerConfig(),
                      resolution: float = 1e-3, values=None) -> list[tuple[float, float]]:
    """Maximal sub-intervals of ``t_grid`` where maxB > 2.

    Interior endpoints are refined by bisection to ``resolution``; an interval
    touching the end of the grid keeps the grid end as its endpoint.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or t_grid.size == 0 or np.any(np.diff(t_grid) <= 0):
        raise ValueError("t_grid must be nonempty and strictly increasing")
    if values is None:
        results = max_bell_curve(model, t_grid, cfg)
        values = np.array([r.max_bell for r in results])
        xs = [r.x for r in results]
    else:
        values = np.asarray(values, dtype=float)
        xs = [None] * len(values)
    above = values > 2.0

    def refine(lo, hi, seed):
        # invariant: exactly one of lo/hi is violating
        lo_above = above_at(lo, seed)
        while hi - lo > resolution:
            mid = 0.5 * (lo + hi)
            if above_at(mid, seed) == lo_above:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)

    def above_at(t, seed):
        seeds = [seed] if seed is not None else ()
        return maximize_bell(model, t, cfg, extra_seeds=seeds).max_bell > 2.0

    windows = []
    i = 0
    n = len(t_grid)
    while i < n:
        if not above[i]:
            i += 1
            continue
        j = i
        while j + 1 < n and above[j + 1]:
            j += 1
        start = t_grid[0] if i == 0 else refine(t_grid[i - 1], t_grid[i], xs[i])
        end = t_grid[-1] if j == n - 1 else refine(t_grid[j], t_grid[j + 1], xs[j])
        windows.append((float(start), float(end)))
        i = j + 1
    return windows


def parameter_threshold(family: Callable[[float], CorrelationModel], t, lo: float, hi: float,
                        cfg: OptimizerConfig = OptimizerConfig(), tol: float = 1e-3,
                        n_check: int = 5) -> float:
    """Root of maxB(param) = 2 on [lo, hi] by bisection to absolute ``tol``."""
    if not hi > lo:
        raise ValueError("empty parameter range")

    def g(param):
        return maximize_bell(family(param), t, cfg).max_bell - 2.0

    probe = np.linspace(lo, hi, max(n_check, 2))
    vals = np.array([g(x) for x in probe])
    d = np.diff(vals)
    if np.any(d > 1e-7) and np.any(d < -1e-7):
        warnings.warn("maxB is not monotone over the parameter range; bisection may pick any crossing",
                      RuntimeWarning, stacklevel=2)
    if np.sign(vals[0]) == np.sign(vals[-1]):
        raise NoCrossingError(f"maxB - 2 has the same sign at {lo} and {hi}")
    # narrow the bracket using the probe samples
    k = int(np.nonzero(np.sign(vals[:-1]) != np.sign(vals[1:]))[0][0])
    a, b = probe[k], probe[k + 1]
    ga = vals[k]
    while b - a > tol:
        m = 0.5 * (a + b)
        gm = g(m)
        if np.sign(gm) == np.sign(ga):
            a, ga = m, gm
        else:
            b = m
    return float(0.5 * (a + b))
