"""Post-Markovian (memory-kernel) dissipation of the qubit.

The qubit obeys ``d rho/dt = L int_0^t k(t') exp(L t') rho(t - t') dt'`` with the
thermal amplitude-damping Liouvillian ``L`` and the exponential kernel
``k(t) = gamma exp(-gamma t)``. In the damping basis of ``L`` the equation
decouples into four scalar Volterra equations whose Laplace-domain solution
inverts in closed form.

Conventions: ``|up>`` (index 0) is the excited, sigma_z = +1 level;
``sigma_+ = |up><down|``, ``sigma_- = |down><up|``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bell import CorrelationModel
from .phasespace import SPIN_LABELS, UP, CatState, displaced_parity_coherent

SIGMA_Z = np.diag([1.0, -1.0]).astype(complex)
SIGMA_PLUS = np.array([[0, 1], [0, 0]], dtype=complex)
SIGMA_MINUS = SIGMA_PLUS.T.copy()


@dataclass(frozen=True)
class PostMarkovParams:
    gamma0: float = 1.0
    gamma: float = 0.1
    nbar: float = 0.0

    def __post_init__(self):
        if not (self.gamma0 > 0 and self.gamma > 0):
            raise ValueError("gamma0 and gamma must be > 0")
        if not self.nbar >= 0:
            raise ValueError("nbar must be >= 0")

    @classmethod
    def from_ratio(cls, ratio: float, nbar: float = 0.0, gamma0: float = 1.0) -> "PostMarkovParams":
        """Build from the memory ratio ``gamma0/gamma``."""
        return cls(gamma0=gamma0, gamma=gamma0 / ratio, nbar=nbar)


@dataclass(frozen=True)
class DampingBasis:
    Q: tuple
    lam: np.ndarray


def liouvillian(rho, p: PostMarkovParams) -> np.ndarray:
    """Thermal amplitude-damping Liouvillian applied to a 2x2 operator."""
    rho = np.asarray(rho, dtype=complex)
    sp, sm = SIGMA_PLUS, SIGMA_MINUS
    n = p.nbar

    def diss(c):
        cd = c.conj().T
        cdc = cd @ c
        return c @ rho @ cd - 0.5 * (cdc @ rho + rho @ cdc)

    return p.gamma0 * (n + 1) * diss(sm) + p.gamma0 * n * diss(sp)


def liouvillian_matrix(p: PostMarkovParams) -> np.ndarray:
    """4x4 matrix of the Liouvillian on row-major vec(rho)."""
    cols = []
    for k in range(4):
        e = np.zeros(4, dtype=complex)
        e[k] = 1.0
        cols.append(liouvillian(e.reshape(2, 2), p).reshape(4))
    return np.array(cols).T


def damping_basis(p: PostMarkovParams) -> DampingBasis:
    n = p.nbar
    q1 = 0.5 * (np.eye(2) - SIGMA_Z / (2 * n + 1))
    lam = np.array([0.0, -2 * p.gamma0 * (n + 0.5), -p.gamma0 * (n + 0.5), -p.gamma0 * (n + 0.5)])
    return DampingBasis(Q=(q1, SIGMA_Z.copy(), SIGMA_PLUS.copy(), SIGMA_MINUS.copy()), lam=lam)


def basis_coefficients(X, p: PostMarkovParams) -> np.ndarray:
    """Coefficients ``c`` with ``X = sum_k c_k Q_k``."""
    X = np.asarray(X, dtype=complex)
    tr = X[0, 0] + X[1, 1]
    c2 = X[0, 0] - tr * p.nbar / (2 * p.nbar + 1)
    return np.array([tr, c2, X[0, 1], X[1, 0]])


def kernel_coefficient(k: int, t, p: PostMarkovParams):
    """xi_k(t) = alpha_k(t)/alpha_k(0) for basis index ``k`` in 1..4.

    Inverse Laplace transform of ``1/(s - lam k~(s - lam))`` for the exponential
    kernel, ``[gamma e^{lam t} + lam e^{-gamma t}]/(gamma + lam)``, written in a
    form that stays accurate near the double pole ``gamma + lam = 0``.
    """
    if k not in (1, 2, 3, 4):
        raise IndexError(f"basis index must be 1..4, got {k}")
    lam = damping_basis(p).lam[k - 1]
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("t must be >= 0")
    g = p.gamma
    d = g + lam
    if lam == 0:
        out = np.ones_like(t)
    elif d == 0:
        out = (1.0 + g * t) * np.exp(-g * t)
    else:
        dt = d * t
        with np.errstate(over="ignore", invalid="ignore"):
            stable = np.exp(-g * t) * (1.0 + g * t * np.where(dt == 0, 1.0, np.expm1(dt) / np.where(dt == 0, 1.0, dt)))
            direct = (g * np.exp(lam * t) + lam * np.exp(-g * t)) / d
        out = np.where(np.abs(dt) < 1.0, stable, direct)
    return out[()] if out.ndim == 0 else out


def kernel_coefficients(t, p: PostMarkovParams) -> np.ndarray:
    return np.array([kernel_coefficient(k, t, p) for k in (1, 2, 3, 4)])


def evolve_operator(X, t: float, p: PostMarkovParams) -> np.ndarray:
    """Lambda_t(X) for any 2x2 operator (the map is linear)."""
    c = basis_coefficients(X, p) * kernel_coefficients(t, p)
    Q = damping_basis(p).Q
    return sum(ck * qk for ck, qk in zip(c, Q))


def evolve_spin_block(i: int, j: int, t: float, p: PostMarkovParams) -> np.ndarray:
    """Lambda_t(|i><j|)."""
    X = np.zeros((2, 2), dtype=complex)
    X[i, j] = 1.0
    return evolve_operator(X, t, p)


def choi_matrix(t: float, p: PostMarkovParams) -> np.ndarray:
    """sum_ij |i><j| (x) Lambda_t(|i><j|)."""
    C = np.zeros((4, 4), dtype=complex)
    for i in SPIN_LABELS:
        for j in SPIN_LABELS:
            C[2 * i:2 * i + 2, 2 * j:2 * j + 2] = evolve_spin_block(i, j, t, p)
    return C


class PostMarkovModel(CorrelationModel):
    """Cat state with its spin under memory-kernel dissipation.

    Parameter ``tau_sl = gamma0 t``.
    """

    parameter = "tau_sl"

    def __init__(self, p: PostMarkovParams = PostMarkovParams(), cat: CatState = CatState()):
        self.p = p
        self.cat = cat
        self._factors: dict[float, dict] = {}

    def spin_factors(self, t: float) -> dict:
        """(sin, cos) coefficients of Tr[sigma(theta) Lambda(|i><j|)] per block, cached by t."""
        key = float(t)
        f = self._factors.get(key)
        if f is None:
            f = {}
            for i in SPIN_LABELS:
                for j in SPIN_LABELS:
                    L = evolve_spin_block(i, j, key / self.p.gamma0, self.p)
                    # Tr[sigma(theta) L] = sin (L_ud + L_du) + cos (L_uu - L_dd)
                    f[i, j] = (L[0, 1] + L[1, 0], L[UP, UP] - L[1 - UP, 1 - UP])
            self._factors[key] = f
        return f

    def parts(self, beta, t):
        beta = np.asarray(beta, dtype=complex)
        a = np.zeros(beta.shape)
        b = np.zeros(beta.shape)
        for (i, j), (s_part, c_part) in self.spin_factors(t).items():
            cv = displaced_parity_coherent(beta, self.cat.amplitude(i), self.cat.amplitude(j))
            a = a + 0.5 * (s_part * cv).real
            b = b + 0.5 * (c_part * cv).real
        return a, b

    def describe(self):
        return {"channel": "postmarkov", "gamma0": self.p.gamma0, "gamma": self.p.gamma,
                "nbar": self.p.nbar, "D": self.cat.D}
