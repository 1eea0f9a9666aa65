"""Coherent-state, Fock-state and displaced-parity primitives.

Conventions used throughout the package:

* ``D(beta) = exp(beta a^dag - conj(beta) a)`` and the displaced parity
  ``Pi(beta) = D(beta) (-1)^n D(beta)^dag``.
* Quadratures ``q = (a + a^dag)/sqrt(2)``, ``p = -i (a - a^dag)/sqrt(2)`` and the
  phase-space point ``z = (q, p)`` maps to ``alpha = (q + i p)/sqrt(2)``.
* Characteristic (Weyl) function ``chi(z) = Tr[rho D(alpha)]``.
* Wigner function normalised to unit integral over the complex plane, so that
  ``<Pi(beta)> = (pi/2) W(beta)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import lgamma

import numpy as np

from .errors import NonIntegrableKernelError, TruncationError

UP, DOWN = 0, 1
SPIN_LABELS = (UP, DOWN)


@dataclass(frozen=True)
class CatState:
    """The qubit-oscillator superposition (|up, D> + |down, -D>)/sqrt(2)."""

    D: float = 2.0

    def __post_init__(self):
        if not np.isfinite(self.D) or self.D < 0:
            raise ValueError(f"cat amplitude must be finite and >= 0, got {self.D}")

    def amplitude(self, label: int) -> float:
        return self.D if label == UP else -self.D

    def blocks(self):
        """Yield ``(i, j, xi_i, xi_j, weight)`` for the four blocks |i><j| (x) |xi_i><xi_j|."""
        for i in SPIN_LABELS:
            for j in SPIN_LABELS:
                yield i, j, self.amplitude(i), self.amplitude(j), 0.5


@dataclass(frozen=True)
class MeasurementSetting:
    theta: float
    beta: complex

    def __post_init__(self):
        if not (np.isfinite(self.theta) and np.isfinite(complex(self.beta))):
            raise ValueError("measurement setting must be finite")


@dataclass(frozen=True)
class GaussianKernel:
    """``scale * exp(-z^T quad z + lin . z)`` on the phase-space point ``z = (q, p)``."""

    quad: np.ndarray
    lin: np.ndarray
    scale: complex

    def __post_init__(self):
        quad = np.asarray(self.quad, dtype=float)
        if quad.shape != (2, 2):
            raise ValueError("quad must be 2x2")
        if not np.allclose(quad, quad.T, rtol=0, atol=1e-13 * max(1.0, np.abs(quad).max())):
            raise ValueError("quad must be symmetric")
        quad = 0.5 * (quad + quad.T)
        object.__setattr__(self, "quad", quad)
        object.__setattr__(self, "lin", np.asarray(self.lin, dtype=complex).reshape(2))
        object.__setattr__(self, "scale", complex(self.scale))
        # 2x2 inverse and determinant, reused by every Wigner evaluation
        det = quad[0, 0] * quad[1, 1] - quad[0, 1] ** 2
        object.__setattr__(self, "_det", float(det))
        object.__setattr__(self, "_min_eig", float(np.linalg.eigvalsh(quad).min()))
        if det != 0:
            inv = np.array([[quad[1, 1], -quad[0, 1]], [-quad[0, 1], quad[0, 0]]]) / det
        else:
            inv = np.full((2, 2), np.nan)
        object.__setattr__(self, "_inv", inv)

    def __call__(self, q, p):
        q = np.asarray(q, dtype=float)
        p = np.asarray(p, dtype=float)
        Q = self.quad
        expo = -(Q[0, 0] * q * q + 2 * Q[0, 1] * q * p + Q[1, 1] * p * p)
        expo = expo + self.lin[0] * q + self.lin[1] * p
        return self.scale * np.exp(expo)


def coherent_overlap(xi1, xi2):
    """<xi1|xi2> for coherent states; broadcasts over arrays."""
    xi1 = np.asarray(xi1, dtype=complex)
    xi2 = np.asarray(xi2, dtype=complex)
    out = np.exp(-0.5 * np.abs(xi1) ** 2 - 0.5 * np.abs(xi2) ** 2 + np.conj(xi1) * xi2)
    return out[()] if out.ndim == 0 else out


def displaced_parity_coherent(beta, xi1, xi2):
    """Tr[Pi(beta) |xi1><xi2|].

    Uses ``D(beta) (-1)^n D(beta)^dag = D(2 beta) (-1)^n``, so the trace reduces
    to a phase times the overlap ``<xi2|2 beta - xi1>``.
    """
    beta = np.asarray(beta, dtype=complex)
    xi1 = np.asarray(xi1, dtype=complex)
    xi2 = np.asarray(xi2, dtype=complex)
    phase = np.exp(np.conj(beta) * xi1 - beta * np.conj(xi1))
    out = phase * coherent_overlap(xi2, 2 * beta - xi1)
    out = np.asarray(out)
    return out[()] if out.ndim == 0 else out


def laguerre(p: int, l, x):
    """Associated Laguerre polynomial L_p^(l)(x) by the three-term recurrence in p.

    ``l`` and ``x`` broadcast; ``p`` must be a nonnegative integer.
    """
    if p < 0:
        raise ValueError("laguerre order must be >= 0")
    l = np.asarray(l, dtype=float)
    x = np.asarray(x, dtype=float)
    prev = np.ones(np.broadcast(l, x).shape)
    if p == 0:
        return prev[()] if prev.ndim == 0 else prev
    cur = 1.0 + l - x
    for k in range(1, p):
        prev, cur = cur, ((2 * k + 1 + l - x) * cur - (k + l) * prev) / (k + 1)
    cur = np.asarray(cur, dtype=float)
    return cur[()] if cur.ndim == 0 else cur


def laguerre_table(pmax: int, lmax: int, x) -> np.ndarray:
    """Table ``T[p, l] = L_p^(l)(x)`` for ``0 <= p <= pmax`` and ``0 <= l <= lmax``.

    ``x`` may be an array, in which case its shape is appended to the table's.
    """
    x = np.asarray(x, dtype=float)
    l = np.arange(lmax + 1, dtype=float).reshape((-1,) + (1,) * x.ndim)
    table = np.empty((pmax + 1, lmax + 1) + x.shape)
    table[0] = 1.0
    if pmax >= 1:
        table[1] = 1.0 + l - x
    for k in range(1, pmax):
        table[k + 1] = ((2 * k + 1 + l - x) * table[k] - (k + l) * table[k - 1]) / (k + 1)
    return table


def _log_pow(beta: complex, k):
    """Return (log|beta|^k, k*arg(beta)) with the convention 0^0 = 1."""
    k = np.asarray(k)
    r = abs(beta)
    if r == 0.0:
        logmag = np.where(k == 0, 0.0, -np.inf)
    else:
        logmag = k * np.log(r)
    return logmag, k * np.angle(beta)


def displaced_fock_element(s: int, r: int, beta) -> complex:
    """<s|D(beta)|r> via the Laguerre closed form; adjoint relation for s < r."""
    if s < 0 or r < 0:
        raise ValueError("Fock indices must be >= 0")
    beta = complex(beta)
    if s < r:
        return complex(np.conj(displaced_fock_element(r, s, -beta)))
    x = abs(beta) ** 2
    logmag, phase = _log_pow(beta, s - r)
    logmag = float(logmag) + 0.5 * (lgamma(r + 1) - lgamma(s + 1)) - 0.5 * x
    return complex(np.exp(logmag + 1j * float(phase)) * laguerre(r, s - r, x))


def displaced_fock_matrix(beta, rows: int, cols: int | None = None) -> np.ndarray:
    """Dense block ``M[s, r] = <s|D(beta)|r>`` for ``s < rows``, ``r < cols``.

    Every entry is exact (no truncation of the operator itself); only the
    index range is limited.
    """
    cols = rows if cols is None else cols
    beta = complex(beta)
    s = np.arange(rows)[:, None]
    r = np.arange(cols)[None, :]
    lo = np.minimum(s, r)
    hi = np.maximum(s, r)
    x = abs(beta) ** 2
    table = laguerre_table(max(min(rows, cols) - 1, 0), max(rows, cols) - 1, x)
    lag = table[lo, hi - lo]
    # s >= r: sqrt(r!/s!) beta^(s-r);  s < r: sqrt(s!/r!) (-conj beta)^(r-s)
    base = np.where(s >= r, beta, -np.conj(beta))
    k = hi - lo
    lg = np.array([lgamma(n + 1) for n in range(max(rows, cols))])
    logfac = 0.5 * (lg[lo] - lg[hi])
    if abs(beta) == 0.0:
        logmag = np.where(k == 0, 0.0, -np.inf)
    else:
        logmag = k * np.log(abs(beta))
    phase = k * np.angle(base)
    return np.exp(logmag + logfac - 0.5 * x + 1j * phase) * lag


def displaced_parity_fock(m: int, n: int, beta, tol: float = 1e-12, max_terms: int = 500) -> complex:
    """<m|D(beta)(-1)^n D(beta)^dag|n> as a sum over the parity eigenbasis.

    Stops once two consecutive increments fall below ``tol`` in modulus (after
    the sum has passed both ``m`` and ``n``); raises if ``max_terms`` is hit first.
    """
    if m < 0 or n < 0:
        raise ValueError("Fock indices must be >= 0")
    beta = complex(beta)
    total = 0j
    small = 0
    for k in range(max_terms):
        term = (-1) ** k * displaced_fock_element(m, k, beta) * np.conj(displaced_fock_element(n, k, beta))
        total += term
        if k > max(m, n) and abs(term) < tol:
            small += 1
            if small >= 2:
                return complex(total)
        else:
            small = 0
    raise TruncationError(f"parity sum for ({m}, {n}) at beta={beta} not converged in {max_terms} terms")


def displaced_parity_matrix(beta, n: int) -> np.ndarray:
    """Dense ``P[m, k] = <m|Pi(beta)|k>`` for ``m, k < n`` via Pi(beta) = D(2 beta)(-1)^n."""
    sign = (-1.0) ** np.arange(n)
    return displaced_fock_matrix(2 * complex(beta), n, n) * sign[None, :]


def displaced_parity_stack(betas, n: int) -> np.ndarray:
    """``displaced_parity_matrix`` for a 1-D array of displacements, shape ``(B, n, n)``."""
    betas = 2.0 * np.asarray(betas, dtype=complex).reshape(-1)
    x = np.abs(betas) ** 2
    s = np.arange(n)[:, None]
    r = np.arange(n)[None, :]
    lo = np.minimum(s, r)
    k = np.abs(s - r)
    table = laguerre_table(max(n - 1, 0), max(n - 1, 0), x)  # (p, l, B)
    lag = np.moveaxis(table[lo, k], -1, 0)
    lg = np.array([lgamma(i + 1) for i in range(n)])
    logfac = 0.5 * (lg[lo] - lg[np.maximum(s, r)])
    with np.errstate(divide="ignore", invalid="ignore"):
        logr = np.log(np.abs(betas))[:, None, None]
        logmag = np.where(k == 0, 0.0, k * logr)
    ang = np.angle(betas)[:, None, None]
    # s >= r uses beta, s < r uses -conj(beta)
    phase = np.where(s >= r, k * ang, k * (np.pi - ang))
    out = np.exp(logmag + logfac - 0.5 * x[:, None, None] + 1j * phase) * lag
    return out * ((-1.0) ** np.arange(n))[None, None, :]


def coherent_block_kernel(xi_i, xi_j) -> GaussianKernel:
    """Characteristic function of the operator |xi_i><xi_j| as a Gaussian kernel."""
    xi_i = complex(xi_i)
    xi_j = complex(xi_j)
    s2 = np.sqrt(2.0)
    lin = np.array([(np.conj(xi_j) - xi_i) / s2, 1j * (np.conj(xi_j) + xi_i) / s2])
    return GaussianKernel(quad=0.25 * np.eye(2), lin=lin, scale=coherent_overlap(xi_j, xi_i))


def wigner_from_kernel(k: GaussianKernel, beta):
    """Wigner function of the operator whose characteristic function is ``k``.

    Closed-form complex Gaussian integral; broadcasts over ``beta``.
    """
    if k._min_eig <= 0:
        raise NonIntegrableKernelError(
            f"kernel quadratic form not positive definite (eigenvalues {np.linalg.eigvalsh(k.quad)})")
    beta = np.asarray(beta, dtype=complex)
    s2 = np.sqrt(2.0)
    w0 = k.lin[0] + 1j * s2 * beta.imag
    w1 = k.lin[1] - 1j * s2 * beta.real
    Qi = k._inv
    form = Qi[0, 0] * w0 * w0 + 2 * Qi[0, 1] * w0 * w1 + Qi[1, 1] * w1 * w1
    parity = k.scale / (4.0 * np.sqrt(k._det)) * np.exp(0.25 * form)
    out = (2.0 / np.pi) * parity
    return out[()] if out.ndim == 0 else out


def coherent_amplitudes(xi, n: int) -> np.ndarray:
    """Fock amplitudes <k|xi> for k < n."""
    xi = complex(xi)
    k = np.arange(n)
    lg = np.array([lgamma(i + 1) for i in range(n)])
    logmag, phase = _log_pow(xi, k)
    return np.exp(logmag - 0.5 * lg - 0.5 * abs(xi) ** 2 + 1j * phase)
