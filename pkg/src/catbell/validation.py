"""Cross-validation of every closed-form correlation against the Fock oracle.

Each comparison produces one report line::

    channel  point  closed  oracle  diff  PASS|FAIL
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import oracle
from .bell import pure_state_correlation
from .brownian import BrownianModel, BrownianParams
from .markov import AdParams, PdParams, corr_ad_cv, corr_ad_spin, corr_pd_cv, corr_pd_spin
from .phasespace import CatState
from .postmarkov import PostMarkovModel, PostMarkovParams
from .spinstar import SpinStarParams, corr_spinstar

log = logging.getLogger(__name__)

CHANNELS = ("pure", "ad_spin", "ad_cv", "pd_spin", "pd_cv", "spinstar", "postmarkov", "brownian")

TOLERANCES = {
    "pure": 1e-10,
    "ad_spin": 1e-10,
    "ad_cv": 1e-10,
    "pd_spin": 1e-10,
    "pd_cv": 1e-7,
    "spinstar": 1e-10,
    "postmarkov": 1e-10,
    "brownian": 1e-5,
}


@dataclass
class Comparison:
    channel: str
    point: dict
    closed: float
    oracle: float
    tol: float

    @property
    def diff(self) -> float:
        return abs(self.closed - self.oracle)

    @property
    def passed(self) -> bool:
        return bool(self.diff <= self.tol)

    def line(self) -> str:
        pt = " ".join(f"{k}={_fmt(v)}" for k, v in self.point.items())
        return (f"{self.channel:<11s} {pt:<60s} closed={self.closed:+.12e} oracle={self.oracle:+.12e} "
                f"diff={self.diff:.2e} {'PASS' if self.passed else 'FAIL'}")


def _fmt(v):
    if isinstance(v, complex):
        return f"{v.real:+.4f}{v.imag:+.4f}j"
    if isinstance(v, float):
        return f"{v:.4f}"
    return str(v)


@dataclass
class ValidationReport:
    comparisons: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.comparisons)

    def failures(self):
        return [c for c in self.comparisons if not c.passed]

    def lines(self):
        return [c.line() for c in self.comparisons]

    def summary(self) -> str:
        by = {}
        for c in self.comparisons:
            n, f, worst = by.get(c.channel, (0, 0, 0.0))
            by[c.channel] = (n + 1, f + (not c.passed), max(worst, c.diff))
        return "\n".join(f"{ch:<11s} n={n:3d} failed={f:2d} max_diff={w:.2e}" for ch, (n, f, w) in by.items())


def _settings(rng, n, real_beta, box=1.5):
    theta = rng.uniform(-np.pi, np.pi, n)
    re = rng.uniform(-box, box, n)
    im = np.zeros(n) if real_beta else rng.uniform(-box, box, n)
    return [(float(t), complex(r, i)) for t, r, i in zip(theta, re, im)]


def validate_channel(channel: str, n_points: int = 50, seed: int = 0, D: float = 2.0,
                     N: int = 40) -> list[Comparison]:
    if channel not in CHANNELS:
        raise KeyError(f"unknown channel {channel!r}")
    rng = np.random.default_rng([seed, CHANNELS.index(channel)])
    tol = TOLERANCES[channel]
    out = []
    base = oracle.truncated_cat(D, N)

    def compare(rho, point, closed, theta, beta):
        val = oracle.expectation_sigma_parity(rho, theta, beta)
        out.append(Comparison(channel, point, float(closed), val, tol))

    if channel == "pure":
        for theta, beta in _settings(rng, n_points, False):
            compare(base, {"theta": theta, "beta": beta}, pure_state_correlation(theta, beta, D), theta, beta)
        return out

    if channel in ("ad_spin", "ad_cv", "pd_spin", "pd_cv"):
        # a handful of channel strengths, several settings each
        n_t = 10
        per = -(-n_points // n_t)
        kind, target = channel.split("_")
        for prob in rng.uniform(0.0, 0.98, n_t):
            prob = float(prob)
            if kind == "ad":
                param = AdParams.from_probability(prob).eta
            else:
                param = PdParams.from_probability(prob).tau_pd
            rho = oracle.evolve_kraus(base, kind, target, param)
            real = channel != "pd_cv"
            for theta, beta in _settings(rng, per, real):
                if channel == "ad_spin":
                    closed = corr_ad_spin(beta.real, theta, param, D)
                elif channel == "ad_cv":
                    closed = corr_ad_cv(beta.real, theta, param, D)
                elif channel == "pd_spin":
                    closed = corr_pd_spin(beta.real, theta, param, D)
                else:
                    closed = corr_pd_cv(beta, theta, param, D, method="series")
                compare(rho, {"P": prob, "theta": theta, "beta": beta}, closed, theta, beta)
        return out

    if channel == "spinstar":
        n_t = 10
        per = -(-n_points // n_t)
        for k in range(n_t):
            n_spins = int(rng.integers(1, 7))
            tau = float(rng.uniform(0, np.pi))
            rho = oracle.apply_spin_map(base, oracle.spinstar_map(tau, n_spins))
            for theta, beta in _settings(rng, per, False):
                closed = corr_spinstar(theta, beta, tau, SpinStarParams(n_spins), D)
                compare(rho, {"N_s": n_spins, "tau_s": tau, "theta": theta, "beta": beta}, closed, theta, beta)
        return out

    if channel == "postmarkov":
        n_t = 10
        per = -(-n_points // n_t)
        for k in range(n_t):
            p = PostMarkovParams(gamma0=1.0, gamma=float(10 ** rng.uniform(-1.5, 1.5)),
                                 nbar=float(rng.uniform(0, 3)))
            tau = float(rng.uniform(0, 4))
            model = PostMarkovModel(p, CatState(D))
            rho = oracle.apply_spin_map(base, oracle.postmarkov_map(tau / p.gamma0, p))
            for theta, beta in _settings(rng, per, False):
                closed = model.correlation(theta, beta, tau)
                compare(rho, {"g0/g": p.gamma0 / p.gamma, "nbar": p.nbar, "tau_sl": tau, "theta": theta,
                              "beta": beta}, closed, theta, beta)
        return out

    # Brownian: chained RK4 segments over sorted random times for each figure regime
    N_bm = max(N, 60)
    rho0 = oracle.truncated_cat(D, N_bm)
    regimes = [BrownianParams(g=0.3, x=10.0, kT=25.0), BrownianParams(g=0.05, x=0.2, kT=25.0)]
    n_t = 5
    per = -(-n_points // (n_t * len(regimes)))
    for p in regimes:
        model = BrownianModel(p, CatState(D))
        taus = np.sort(rng.uniform(0.05, 2.0, n_t))
        h_max = oracle.stable_step(p, N_bm, float(taus[-1]) / p.omega_c)
        rho, t_prev = rho0, 0.0
        for tau in taus:
            t = float(tau) / p.omega_c
            steps = max(1, int(np.ceil((t - t_prev) / h_max)))
            rho = oracle.evolve_brownian_rk4(rho, p, t, steps, t_start=t_prev)
            t_prev = t
            for theta, beta in _settings(rng, per, False):
                closed = model.correlation(theta, beta, float(tau))
                compare(rho, {"x": p.x, "g": p.g, "tau": float(tau), "theta": theta, "beta": beta},
                        closed, theta, beta)
    return out


def run_validation(channels=None, n_points: int = 50, seed: int = 0, D: float = 2.0) -> ValidationReport:
    channels = CHANNELS if not channels else tuple(channels)
    report = ValidationReport()
    for ch in channels:
        log.info("validating %s", ch)
        report.comparisons.extend(validate_channel(ch, n_points, seed, D))
    return report
