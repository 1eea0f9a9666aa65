"""Quantum Brownian motion of the oscillator in the weak-coupling, high-temperature
regime with an Ohmic bath of cutoff ``omega_c``.

Time-local master equation (frequency renormalisation dropped)::

    d rho/dt = -i omega_O [a^dag a, rho] - Delta [q, [q, rho]] + Xi [q, [p, rho]]
               - i gamma [q, {p, rho}]

Internally ``omega_O = 1`` unless set otherwise; the model's dynamical
parameter is the cutoff-scaled time ``tau = omega_c t``. The Weyl function of
every CV block evolves as ``chi_t(z) = exp(-z^T Wbar z) chi_0(e^{-Gamma/2} R^T z)``
and stays Gaussian, so block Wigner functions are closed-form Gaussian
integrals.
"""
from __future__ import annotations

import threading
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad_vec

from .bell import CorrelationModel
from .errors import QuadratureError
from .phasespace import (
    SPIN_LABELS,
    CatState,
    GaussianKernel,
    coherent_block_kernel,
    wigner_from_kernel,
)


@dataclass(frozen=True)
class BrownianParams:
    g: float = 0.3
    x: float = 10.0
    kT: float = 25.0
    omega_O: float = 1.0
    include_gamma_integral: bool = False

    def __post_init__(self):
        if not (self.g > 0 and self.x > 0 and self.kT > 0 and self.omega_O > 0):
            raise ValueError("g, x, kT and omega_O must all be > 0")

    @property
    def omega_c(self) -> float:
        return self.x * self.omega_O


@dataclass(frozen=True)
class BrownianCoefficients:
    delta: float
    xi: float
    gamma: float


def coefficient_arrays(tau, p: BrownianParams):
    """(Delta, Xi, gamma) at cutoff-scaled times ``tau``; broadcasts."""
    tau = np.asarray(tau, dtype=float)
    x = p.x
    pre = p.g ** 2 * p.omega_O * x * x / (2.0 * (1.0 + x * x))
    e = np.exp(-tau)
    c = np.cos(tau / x)
    s = np.sin(tau / x)
    a = (x, 1.0, 1.0)
    b = (-1.0, x, x)
    f = (p.kT, p.kT, 1.0)
    return tuple(pre * f[j] * (a[j] - e * (a[j] * c + b[j] * s)) for j in range(3))


def coefficients(tau: float, p: BrownianParams) -> BrownianCoefficients:
    if tau < 0:
        raise ValueError("tau must be >= 0")
    d, xi, g = coefficient_arrays(tau, p)
    return BrownianCoefficients(float(d), float(xi), float(g))


def asymptotic_coefficients(p: BrownianParams) -> BrownianCoefficients:
    x = p.x
    pre = p.g ** 2 * p.omega_O * x * x / (2.0 * (1.0 + x * x))
    return BrownianCoefficients(pre * x * p.kT, pre * p.kT, pre)


def gamma_integral(t, p: BrownianParams):
    """Gamma(t) = 2 int_0^t gamma(s) ds in closed form (t in 1/omega_O units)."""
    t = np.asarray(t, dtype=float)
    x = p.x
    c, w = p.omega_c, p.omega_O
    pre = p.g ** 2 * w * x * x / (2.0 * (1.0 + x * x))
    e = np.exp(-c * t)
    den = c * c + w * w
    icos = (c - e * (c * np.cos(w * t) - w * np.sin(w * t))) / den
    isin = (w - e * (c * np.sin(w * t) + w * np.cos(w * t))) / den
    return 2.0 * pre * (t - icos - x * isin)


def rotation(angle) -> np.ndarray:
    """R = cos(angle) 1 + i sin(angle) sigma_y."""
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, s], [-s, c]])


@dataclass(frozen=True)
class PropagatedState:
    t: float
    angle: float
    wbar: np.ndarray
    big_gamma: float = 0.0

    @property
    def R(self) -> np.ndarray:
        return rotation(self.angle)


@dataclass(frozen=True)
class QuadratureConfig:
    epsabs: float = 1e-12
    epsrel: float = 1e-10
    limit: int = 4000


def _integrand(s, p: BrownianParams):
    d, xi, _ = coefficient_arrays(p.omega_c * s, p)
    M = np.array([[2.0 * d, -xi], [-xi, 0.0]])
    R = rotation(p.omega_O * s)
    out = R.T @ M @ R
    if p.include_gamma_integral:
        out = out * np.exp(gamma_integral(s, p))
    return np.array([out[0, 0], out[0, 1], out[1, 1]])


def propagate(t: float, p: BrownianParams, quadrature: QuadratureConfig = QuadratureConfig()) -> PropagatedState:
    """Rotation angle, Wbar(t) and Gamma(t) at physical time ``t``."""
    if t < 0:
        raise ValueError("t must be >= 0")
    angle = p.omega_O * t
    R = rotation(angle)
    if t == 0:
        return PropagatedState(0.0, 0.0, np.zeros((2, 2)), 0.0)
    # split at rotation half-periods so each panel sees a bounded number of oscillations
    period = np.pi / p.omega_O
    pts = np.arange(period, t, period)
    res = quad_vec(lambda s: _integrand(s, p), 0.0, t, epsabs=quadrature.epsabs, epsrel=quadrature.epsrel,
                   limit=quadrature.limit, points=pts if pts.size else None, full_output=True)
    val, err, info = res
    if not info.success:
        raise QuadratureError(f"Wbar quadrature failed at t={t}: {info.message}")
    I = np.array([[val[0], val[1]], [val[1], val[2]]])
    big_gamma = float(gamma_integral(t, p)) if p.include_gamma_integral else 0.0
    W = 0.5 * np.exp(-big_gamma) * R @ I @ R.T
    W = 0.5 * (W + W.T)
    return PropagatedState(float(t), float(angle), W, big_gamma)


def evolved_block_kernel(i: int, j: int, st: PropagatedState, cat: CatState) -> GaussianKernel:
    """Weyl-function kernel of the evolved CV block |xi_i><xi_j|."""
    k0 = coherent_block_kernel(cat.amplitude(i), cat.amplitude(j))
    shrink = np.exp(-st.big_gamma)
    quad = shrink * k0.quad + st.wbar
    lin = np.exp(-0.5 * st.big_gamma) * (st.R @ k0.lin)
    return GaussianKernel(quad=quad, lin=lin, scale=k0.scale)


class BrownianModel(CorrelationModel):
    """Cat state with its oscillator undergoing Brownian motion; parameter ``tau = omega_c t``."""

    parameter = "tau"

    def __init__(self, p: BrownianParams = BrownianParams(), cat: CatState = CatState(),
                 quadrature: QuadratureConfig = QuadratureConfig()):
        self.p = p
        self.cat = cat
        self.quadrature = quadrature
        self._cache: dict[float, PropagatedState] = {}
        self._kernels: dict[float, dict] = {}
        self._lock = threading.Lock()

    def state(self, tau: float) -> PropagatedState:
        key = float(tau)
        st = self._cache.get(key)
        if st is None:
            st = propagate(key / self.p.omega_c, self.p, self.quadrature)
            with self._lock:
                self._cache.setdefault(key, st)
        return st

    def kernels(self, tau: float) -> dict:
        key = float(tau)
        ks = self._kernels.get(key)
        if ks is None:
            st = self.state(key)
            ks = {(i, j): evolved_block_kernel(i, j, st, self.cat) for i in SPIN_LABELS for j in SPIN_LABELS}
            with self._lock:
                self._kernels.setdefault(key, ks)
        return ks

    def block_parities(self, beta, tau):
        """(pi/2) W^{ij}(beta) for the four evolved blocks, keyed by (i, j)."""
        return {ij: 0.5 * np.pi * wigner_from_kernel(k, beta) for ij, k in self.kernels(tau).items()}

    def parts(self, beta, t):
        beta = np.asarray(beta, dtype=complex)
        P = self.block_parities(beta, t)
        up, dn = SPIN_LABELS
        a = 0.5 * (P[up, dn] + P[dn, up]).real
        b = 0.5 * (P[up, up] - P[dn, dn]).real
        return a, b

    def describe(self):
        return {"channel": "brownian", "g": self.p.g, "x": self.p.x, "kT": self.p.kT, "D": self.cat.D}
