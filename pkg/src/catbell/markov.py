"""Markovian benchmark channels: amplitude and phase damping on either subsystem.

Channel strengths are parameterised by the probabilities plotted on the
benchmark axis, ``P_AD = sqrt(1 - eta)`` and ``P_PD = sqrt(1 - exp(-tau_pd^2))``.

The closed forms below accept complex ``beta``; for real ``beta`` they reduce to
the usual real-displacement expressions and the channel models search a real
``beta`` box.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln
from scipy.stats import poisson

from .bell import CANONICAL_SIGN, CorrelationModel
from .errors import TruncationError
from .phasespace import (
    CatState,
    coherent_amplitudes,
    displaced_parity_stack,
    laguerre_table,
)


@dataclass(frozen=True)
class AdParams:
    eta: float

    def __post_init__(self):
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError(f"eta must lie in [0, 1], got {self.eta}")

    @property
    def probability(self) -> float:
        return float(np.sqrt(1.0 - self.eta))

    @classmethod
    def from_probability(cls, prob: float) -> "AdParams":
        _check_prob(prob)
        return cls(1.0 - prob * prob)


@dataclass(frozen=True)
class PdParams:
    tau_pd: float

    def __post_init__(self):
        if not self.tau_pd >= 0.0:
            raise ValueError(f"tau_pd must be >= 0, got {self.tau_pd}")

    @property
    def probability(self) -> float:
        return float(np.sqrt(-np.expm1(-self.tau_pd ** 2)))

    @classmethod
    def from_probability(cls, prob: float) -> "PdParams":
        _check_prob(prob)
        if prob == 1.0:
            return cls(np.inf)
        return cls(float(np.sqrt(-np.log1p(-prob * prob))))


def _check_prob(prob):
    if not 0.0 <= prob <= 1.0:
        raise ValueError(f"probability must lie in [0, 1], got {prob}")


@dataclass(frozen=True)
class PdCvTruncation:
    """Cutoffs for the phase-damped CV sums.

    ``k_max=None`` picks the Kraus-index cutoff from the Poisson tail of the
    largest diagonal weight, so the k-sum is converged to ``tol`` for every
    retained Fock pair.
    """

    n_max: int = 40
    k_max: int | None = None
    tol: float = 1e-9
    np_max: int = 500

    def __post_init__(self):
        if self.n_max < 1:
            raise ValueError("n_max must be >= 1")
        if self.k_max is not None and self.k_max < 0:
            raise ValueError("k_max must be >= 0")
        if not self.tol > 0:
            raise ValueError("tol must be > 0")

    def check(self, D: float):
        need = int(np.ceil(D * D + 10 * D))
        if self.n_max < need:
            raise TruncationError(f"n_max={self.n_max} below D^2 + 10 D = {need}")


# -- Kraus operators ---------------------------------------------------------

def ad_kraus(d: int, k: int, eta: float) -> np.ndarray:
    """k-th amplitude-damping Kraus operator on levels 0..d-1 (loses k quanta)."""
    if d < 1 or not 0 <= k < d:
        raise IndexError(f"Kraus index {k} out of range for d={d}")
    AdParams(eta)
    out = np.zeros((d, d))
    n = np.arange(k, d)
    logb = 0.5 * (gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1))
    with np.errstate(divide="ignore", invalid="ignore"):
        le = np.log(eta) if eta > 0 else -np.inf
        l1 = np.log1p(-eta) if eta < 1 else -np.inf
        logv = logb + np.where(n - k == 0, 0.0, 0.5 * (n - k) * le) + (0.0 if k == 0 else 0.5 * k * l1)
    out[n - k, n] = np.exp(logv)
    return out


def ad_kraus_set(d: int, eta: float) -> list[np.ndarray]:
    return [ad_kraus(d, k, eta) for k in range(d)]


def pd_kraus_diagonal(d: int, k, tau_pd: float) -> np.ndarray:
    """Diagonals of phase-damping Kraus operators, shape ``(len(k), d)``."""
    k = np.atleast_1d(np.asarray(k))
    n = np.arange(d)
    if np.isinf(tau_pd):
        # every excited level fully dephased; only |0> survives in k = 0
        out = np.zeros((k.size, d))
        out[k == 0, 0] = 1.0
        return out
    x = (n * tau_pd)[None, :]
    kk = k[:, None].astype(float)
    with np.errstate(divide="ignore", invalid="ignore"):
        logv = -0.5 * x * x + np.where(kk == 0, 0.0, kk * np.log(x)) - 0.5 * gammaln(kk + 1)
    return np.exp(logv)


def pd_kraus(d: int, k: int, tau_pd: float) -> np.ndarray:
    """k-th phase-damping Kraus operator on levels 0..d-1 (diagonal)."""
    if d < 1 or k < 0:
        raise IndexError(f"Kraus index {k} out of range for d={d}")
    PdParams(tau_pd)
    return np.diag(pd_kraus_diagonal(d, [k], tau_pd)[0])


def pd_kmax(d: int, tau_pd: float, tol: float = 1e-14) -> int:
    """Smallest Kraus cutoff whose omitted Poisson weight is below ``tol`` on every level."""
    if tau_pd == 0 or np.isinf(tau_pd) or d <= 1:
        return 0
    mu = ((d - 1) * tau_pd) ** 2
    return int(poisson.isf(tol, mu)) + 1


def pd_kraus_set(d: int, tau_pd: float, k_max: int | None = None) -> list[np.ndarray]:
    k_max = pd_kmax(d, tau_pd) if k_max is None else k_max
    diag = pd_kraus_diagonal(d, np.arange(k_max + 1), tau_pd)
    return [np.diag(row) for row in diag]


def completeness_residual(ops) -> float:
    """max |sum_k A_k^dag A_k - 1| over matrix entries."""
    ops = list(ops)
    d = ops[0].shape[1]
    acc = np.zeros((d, d), dtype=complex)
    for a in ops:
        acc += a.conj().T @ a
    return float(np.abs(acc - np.eye(d)).max())


# -- closed-form correlations ------------------------------------------------

def _cos_part(beta, D):
    """(1/2)[(pi/2)W_|D>(beta) - (pi/2)W_|-D>(beta)] components."""
    beta = np.asarray(beta, dtype=complex)
    up = np.exp(-2.0 * np.abs(beta - D) ** 2)
    dn = np.exp(-2.0 * np.abs(beta + D) ** 2)
    if CANONICAL_SIGN < 0:
        up, dn = dn, up
    return up, dn


def ad_spin_parts(beta, eta, D):
    beta = np.asarray(beta, dtype=complex)
    up, dn = _cos_part(beta, D)
    a = np.sqrt(eta) * np.exp(-2.0 * np.abs(beta) ** 2) * np.cos(4.0 * D * beta.imag)
    b = 0.5 * ((2.0 * eta - 1.0) * up - dn)
    return a, b


def ad_cv_parts(beta, eta, D):
    beta = np.asarray(beta, dtype=complex)
    Ds = np.sqrt(eta) * D
    up, dn = _cos_part(beta, Ds)
    a = np.exp(-2.0 * np.abs(beta) ** 2 - 2.0 * D * D * (1.0 - eta)) * np.cos(4.0 * Ds * beta.imag)
    b = 0.5 * (up - dn)
    return a, b


def pd_spin_parts(beta, tau_pd, D):
    beta = np.asarray(beta, dtype=complex)
    up, dn = _cos_part(beta, D)
    a = np.exp(-2.0 * np.abs(beta) ** 2 - 0.5 * tau_pd ** 2) * np.cos(4.0 * D * beta.imag)
    b = 0.5 * (up - dn)
    return a, b


def _combine(parts, theta):
    a, b = parts
    out = a * np.sin(theta) + b * np.cos(theta)
    return out[()] if np.ndim(out) == 0 else out


def corr_ad_spin(beta, theta, eta, D):
    """Correlation with amplitude damping on the spin (|down> is the ground level)."""
    AdParams(eta)
    return _combine(ad_spin_parts(beta, eta, D), theta)


def corr_ad_cv(beta, theta, eta, D):
    """Correlation with amplitude damping on the oscillator."""
    AdParams(eta)
    return _combine(ad_cv_parts(beta, eta, D), theta)


def corr_pd_spin(beta, theta, tau_pd, D):
    """Correlation with phase damping on the spin."""
    PdParams(tau_pd)
    return _combine(pd_spin_parts(beta, tau_pd, D), theta)


# -- phase damping on the oscillator -----------------------------------------

def _pd_cv_ksum(n_max: int, tau_pd: float, k_max: int | None, tol: float) -> np.ndarray:
    """K[n, m] = sum_k tau^2k (nm)^k / k! exp(-(n^2 + m^2) tau^2 / 2), summed term by term."""
    n = np.arange(n_max)
    if tau_pd == 0:
        return np.ones((n_max, n_max))
    if np.isinf(tau_pd):
        return np.eye(n_max)
    nm = np.outer(n, n).astype(float) * tau_pd ** 2
    base = -0.5 * tau_pd ** 2 * (n[:, None] ** 2 + n[None, :] ** 2).astype(float)
    if k_max is None:
        k_max = int(poisson.isf(tol * 1e-3, max(nm.max(), 1e-300))) + 1
    out = np.zeros((n_max, n_max))
    with np.errstate(divide="ignore"):
        lognm = np.log(nm)
    chunk = 256
    for k0 in range(0, k_max + 1, chunk):
        k = np.arange(k0, min(k0 + chunk, k_max + 1), dtype=float)[:, None, None]
        with np.errstate(invalid="ignore"):
            lt = np.where(k == 0, 0.0, k * lognm[None]) - gammaln(k + 1) + base[None]
        out += np.exp(lt).sum(axis=0)
    return out


def _pd_cv_blocks(theta_part: str, D: float, tau_pd: float, trunc: PdCvTruncation, ksum=None):
    """Coefficient matrix M[n, m] of |n><m| in Tr_spin[sigma-part rho], without the 1/2."""
    n = trunc.n_max
    c = coherent_amplitudes(D, n).real
    sgn = (-1.0) ** np.arange(n)
    if ksum is None:
        ksum = np.exp(-0.5 * tau_pd ** 2 * (np.arange(n)[:, None] - np.arange(n)[None, :]) ** 2) \
            if np.isfinite(tau_pd) else np.eye(n)
    amp = np.outer(c, c) * ksum
    if theta_part == "sin":
        ang = sgn[None, :] + sgn[:, None]
    else:
        ang = CANONICAL_SIGN * (1.0 - np.outer(sgn, sgn))
    return amp * ang


def pd_cv_dense_parts(beta, tau_pd, D, trunc: PdCvTruncation = PdCvTruncation()):
    """sin/cos coefficients for PD on the oscillator via dense displaced-parity matrices."""
    beta = np.asarray(beta, dtype=complex)
    A = 0.5 * _pd_cv_blocks("sin", D, tau_pd, trunc)
    B = 0.5 * _pd_cv_blocks("cos", D, tau_pd, trunc)
    P = displaced_parity_stack(beta.reshape(-1), trunc.n_max)  # P[b, m, k] = <m|Pi|k>
    # Tr[Pi X] = sum_{n,m} X[n, m] <m|Pi|n>
    a = np.einsum("nm,bmn->b", A, P).real
    b = np.einsum("nm,bmn->b", B, P).real
    return a.reshape(beta.shape), b.reshape(beta.shape)


def _log_abs_pow(z: complex, k):
    k = np.asarray(k, dtype=float)
    if z == 0:
        return np.where(k == 0, 0.0, -np.inf)
    with np.errstate(invalid="ignore"):
        return np.where(k == 0, 0.0, k * np.log(abs(z)))


def pd_cv_pair_term(np_: int, beta: complex, n_max: int, table=None, lg=None) -> np.ndarray:
    """G[m, n] = <m|D|2n'><2n'|D^dag|n> - <m|D|2n'+1><2n'+1|D^dag|n> assembled from
    the four index-region closed forms (S1..S4)."""
    beta = complex(beta)
    x = abs(beta) ** 2
    e = 2 * np_
    if table is None:
        table = laguerre_table(n_max, n_max + e + 2, x)
    if lg is None:
        lg = gammaln(np.arange(n_max + e + 3) + 1.0)
    m = np.arange(n_max)[:, None] * np.ones((1, n_max), dtype=int)
    n = np.arange(n_max)[None, :] * np.ones((n_max, 1), dtype=int)
    out = np.zeros((n_max, n_max), dtype=complex)
    ang = np.angle(beta)
    L = lambda p, l: table[p, l]  # noqa: E731

    # S1: m >= 2n'+1, n <= 2n'
    r = (m >= e + 1) & (n <= e)
    if r.any():
        mm, nn = m[r], n[r]
        k = mm - nn
        logp = 0.5 * (lg[nn] - lg[mm]) + _log_abs_pow(beta, k) - x
        pref = np.exp(logp + 1j * k * ang) * (-1.0) ** (e - nn)
        out[r] = pref * (L(e, mm - e) * L(nn, e - nn) + L(e + 1, mm - e - 1) * L(nn, e + 1 - nn))
    # S2: m, n <= 2n'
    r = (m <= e) & (n <= e)
    if r.any():
        mm, nn = m[r], n[r]
        logp = 0.5 * (lg[mm] + lg[nn]) - lg[e] + _log_abs_pow(beta, e - mm) + _log_abs_pow(beta, e - nn) - x
        phase = (e - mm) * (np.pi - ang) + (e - nn) * (np.pi + ang)
        pref = np.exp(logp + 1j * phase)
        out[r] = pref * (L(mm, e - mm) * L(nn, e - nn)
                         - x / (e + 1) * L(mm, e + 1 - mm) * L(nn, e + 1 - nn))
    # S3: m, n >= 2n'+1; the |beta|^-2 factor is folded into the prefactor
    r = (m >= e + 1) & (n >= e + 1)
    if r.any():
        mm, nn = m[r], n[r]
        phase = (mm - e) * ang - (nn - e) * ang
        common = -0.5 * (lg[mm] + lg[nn]) - x
        even = np.exp(common + lg[e] + _log_abs_pow(beta, mm - e) + _log_abs_pow(beta, nn - e) + 1j * phase)
        odd = np.exp(common + lg[e + 1] + _log_abs_pow(beta, mm - e - 1) + _log_abs_pow(beta, nn - e - 1)
                     + 1j * phase)
        out[r] = even * L(e, mm - e) * L(e, nn - e) - odd * L(e + 1, mm - e - 1) * L(e + 1, nn - e - 1)
    # S4: n >= 2n'+1, m <= 2n'
    r = (n >= e + 1) & (m <= e)
    if r.any():
        mm, nn = m[r], n[r]
        k = nn - mm
        logp = 0.5 * (lg[mm] - lg[nn]) + _log_abs_pow(beta, k) - x
        pref = np.exp(logp - 1j * k * ang) * (-1.0) ** (e - mm)
        out[r] = pref * (L(mm, e - mm) * L(e, nn - e) + L(mm, e + 1 - mm) * L(e + 1, nn - e - 1))
    return out


def corr_pd_cv(beta, theta, tau_pd, D, trunc: PdCvTruncation = PdCvTruncation(), method: str = "series"):
    """Correlation with phase damping on the oscillator.

    ``method="series"`` evaluates the truncated k-sum and the n'-sum over the
    region-wise displaced-Fock closed forms term by term; ``method="dense"``
    uses the summed k-series and dense displaced-parity matrices.
    """
    PdParams(tau_pd)
    trunc.check(D)
    if method == "dense":
        return _combine(pd_cv_dense_parts(beta, tau_pd, D, trunc), theta)
    if method != "series":
        raise ValueError(f"unknown method {method!r}")
    beta = complex(beta)
    ksum = _pd_cv_ksum(trunc.n_max, tau_pd, trunc.k_max, trunc.tol)
    omega = 0.5 * (np.sin(theta) * _pd_cv_blocks("sin", D, tau_pd, trunc, ksum)
                   + np.cos(theta) * _pd_cv_blocks("cos", D, tau_pd, trunc, ksum))
    n = trunc.n_max
    lmax = n + 2 * trunc.np_max + 2
    x = abs(beta) ** 2
    table = laguerre_table(n, min(lmax, n + 64), x)
    lg = gammaln(np.arange(lmax + 1) + 1.0)
    total = 0j
    small = 0
    for np_ in range(trunc.np_max):
        need = n + 2 * np_ + 2
        if need >= table.shape[1]:
            table = laguerre_table(n, min(lmax, need + 64), x)
        G = pd_cv_pair_term(np_, beta, n, table, lg)
        # Tr[Pi X] = sum_{n,m} X[n, m] <m|Pi|n>
        inc = np.sum(omega * G.T)
        total += inc
        if 2 * np_ > n and abs(inc) < trunc.tol * 1e-3:
            small += 1
            if small >= 2:
                return float(total.real)
        else:
            small = 0
    raise TruncationError(f"n' sum not converged within {trunc.np_max} terms at beta={beta}")


# -- correlation models ------------------------------------------------------

class _ProbabilityModel(CorrelationModel):
    parameter = "P"
    real_beta = True

    def __init__(self, cat: CatState = CatState()):
        self.cat = cat


class AdSpinModel(_ProbabilityModel):
    """Amplitude damping on the spin; parameter ``P_AD``."""

    def parts(self, beta, t):
        return ad_spin_parts(beta, AdParams.from_probability(t).eta, self.cat.D)

    def describe(self):
        return {"channel": "ad_spin", "D": self.cat.D}


class AdCvModel(_ProbabilityModel):
    """Amplitude damping on the oscillator; parameter ``P_AD``."""

    def parts(self, beta, t):
        return ad_cv_parts(beta, AdParams.from_probability(t).eta, self.cat.D)

    def describe(self):
        return {"channel": "ad_cv", "D": self.cat.D}


class PdSpinModel(_ProbabilityModel):
    """Phase damping on the spin; parameter ``P_PD``."""

    def parts(self, beta, t):
        return pd_spin_parts(beta, PdParams.from_probability(t).tau_pd, self.cat.D)

    def describe(self):
        return {"channel": "pd_spin", "D": self.cat.D}


class PdCvModel(_ProbabilityModel):
    """Phase damping on the oscillator; parameter ``P_PD``.

    The optimiser uses the dense route; ``corr_pd_cv(..., method="series")``
    is the term-by-term check.
    """

    def __init__(self, cat: CatState = CatState(), trunc: PdCvTruncation = PdCvTruncation()):
        super().__init__(cat)
        trunc.check(cat.D)
        self.trunc = trunc

    def parts(self, beta, t):
        return pd_cv_dense_parts(beta, PdParams.from_probability(t).tau_pd, self.cat.D, self.trunc)

    def describe(self):
        return {"channel": "pd_cv", "D": self.cat.D, "n_max": self.trunc.n_max}
