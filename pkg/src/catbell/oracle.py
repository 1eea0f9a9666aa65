"""Brute-force truncated-Fock reference calculations.

Everything here is deliberately simple: dense matrices on the joint
qubit (x) oscillator space, operators built from matrix exponentials or
explicit operator sums, and plain fixed-step integrators. None of it shares
code paths with the closed-form correlation functions beyond the channel
definitions (Kraus operators, master-equation coefficients).

Joint basis index: ``spin * N + n`` with spin 0 = up, 1 = down.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .brownian import BrownianParams, coefficient_arrays
from .errors import CompletenessError, CutoffError, StepCountError
from .markov import ad_kraus_set, completeness_residual, pd_kraus_diagonal, pd_kmax
from .postmarkov import PostMarkovParams, liouvillian_matrix

log = logging.getLogger(__name__)


@dataclass
class FockOperator:
    """Dense operator on {up, down} (x) {|0>, ..., |N-1>}."""

    matrix: np.ndarray
    N: int

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=complex)
        if self.matrix.shape != (2 * self.N, 2 * self.N):
            raise ValueError(f"expected shape {(2 * self.N,) * 2}, got {self.matrix.shape}")

    def block(self, i: int, j: int) -> np.ndarray:
        N = self.N
        return self.matrix[i * N:(i + 1) * N, j * N:(j + 1) * N]

    @classmethod
    def from_blocks(cls, blocks) -> "FockOperator":
        return cls(np.block([[blocks[0][0], blocks[0][1]], [blocks[1][0], blocks[1][1]]]), blocks[0][0].shape[0])

    def trace(self) -> complex:
        return complex(np.trace(self.matrix))

    def hermiticity_error(self) -> float:
        return float(np.abs(self.matrix - self.matrix.conj().T).max())

    def min_eigenvalue(self) -> float:
        h = 0.5 * (self.matrix + self.matrix.conj().T)
        return float(np.linalg.eigvalsh(h).min())

    def cv_marginal(self) -> np.ndarray:
        return self.block(0, 0) + self.block(1, 1)

    def spin_marginal(self) -> np.ndarray:
        return np.array([[np.trace(self.block(i, j)) for j in range(2)] for i in range(2)])


# -- single-mode operators ---------------------------------------------------

def destroy(N: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, N, dtype=float)), 1).astype(complex)


def quadratures(N: int):
    a = destroy(N)
    ad = a.conj().T
    return (a + ad) / np.sqrt(2.0), -1j * (a - ad) / np.sqrt(2.0)


def displacement(beta, N: int, pad: int = 60) -> np.ndarray:
    """D(beta) restricted to the first N levels, from expm on an N + pad space."""
    K = N + pad
    a = destroy(K)
    Dm = expm(complex(beta) * a.conj().T - np.conj(complex(beta)) * a)
    return Dm[:N, :N]


def parity_operator(beta, N: int, pad: int = 60) -> np.ndarray:
    """D(beta)(-1)^n D(beta)^dag on the first N levels, built in an N + pad space."""
    K = N + pad
    a = destroy(K)
    Dm = expm(complex(beta) * a.conj().T - np.conj(complex(beta)) * a)
    P = (Dm * ((-1.0) ** np.arange(K))[None, :]) @ Dm.conj().T
    return P[:N, :N]


def coherent_vector(xi, N: int) -> np.ndarray:
    """Fock amplitudes of |xi> by the recursion c_{n+1} = xi c_n / sqrt(n+1)."""
    c = np.empty(N, dtype=complex)
    c[0] = np.exp(-0.5 * abs(xi) ** 2)
    for n in range(N - 1):
        c[n + 1] = c[n] * xi / np.sqrt(n + 1)
    return c


def truncated_cat(D: float, N: int, tol: float = 1e-10) -> FockOperator:
    """(|up, D> + |down, -D>)/sqrt 2 on N Fock levels, renormalised after truncation."""
    if N <= D * D + 10 * D:
        raise CutoffError(f"N={N} must exceed D^2 + 10 D = {D * D + 10 * D}")
    up = coherent_vector(D, N)
    dn = coherent_vector(-D, N)
    deficit = 1.0 - np.vdot(up, up).real
    if deficit > tol:
        raise CutoffError(f"coherent tail {deficit:.3e} beyond N={N} exceeds {tol}")
    psi = np.concatenate([up, dn]) / np.sqrt(2.0)
    psi = psi / np.linalg.norm(psi)
    return FockOperator(np.outer(psi, psi.conj()), N)


def sigma_theta(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, s], [s, -c]], dtype=complex)


def expectation_sigma_parity(rho: FockOperator, theta: float, beta, pad: int = 60) -> float:
    """Tr[(sigma(theta) (x) Pi(beta)) rho]."""
    P = parity_operator(beta, rho.N, pad)
    sig = sigma_theta(theta)
    val = 0j
    for i in range(2):
        for j in range(2):
            val += sig[j, i] * np.trace(P @ rho.block(i, j))
    if abs(val.imag) > 1e-8:
        log.warning("imaginary part %.3e in sigma-parity expectation", val.imag)
    return float(val.real)


def expectation_sigma_parity_many(rho: FockOperator, settings, pad: int = 60) -> np.ndarray:
    """Vector of expectations for a list of ``(theta, beta)`` pairs."""
    return np.array([expectation_sigma_parity(rho, th, b, pad) for th, b in settings])


# -- Markovian channels ------------------------------------------------------

# spin label -> channel level; |1> is up (excited), |0> is down
_SPIN_TO_LEVEL = np.array([1, 0])


def _spin_operator(level_op: np.ndarray) -> np.ndarray:
    idx = _SPIN_TO_LEVEL
    return level_op[np.ix_(idx, idx)]


def evolve_kraus(rho: FockOperator, channel: str, target: str, param: float,
                 k_max: int | None = None, tol: float = 1e-10) -> FockOperator:
    """Operator-sum evolution; ``param`` is eta for AD and tau_pd for PD."""
    channel = channel.lower()
    target = target.lower()
    if channel not in ("ad", "pd") or target not in ("spin", "cv"):
        raise ValueError(f"unknown channel/target {channel}/{target}")
    d = 2 if target == "spin" else rho.N

    if channel == "ad":
        ops = ad_kraus_set(d, param)
        res = completeness_residual(ops)
        if res > tol:
            raise CompletenessError(f"AD Kraus completeness residual {res:.3e}")
        if target == "spin":
            ops = [_spin_operator(A) for A in ops]
            return _apply_spin_ops(rho, ops)
        return _apply_cv_ops(rho, ops)

    # phase damping: every Kraus operator is diagonal, so the operator sum acts
    # entrywise with weight G[n, m] = sum_k d_k(n) d_k(m)
    k_max = pd_kmax(d, param) if k_max is None else k_max
    diag = pd_kraus_diagonal(d, np.arange(k_max + 1), param)
    res = float(np.abs(np.sum(diag ** 2, axis=0) - 1.0).max())
    if res > tol:
        raise CompletenessError(f"PD Kraus completeness residual {res:.3e} (k_max={k_max})")
    G = diag.T @ diag
    if target == "spin":
        G = G[np.ix_(_SPIN_TO_LEVEL, _SPIN_TO_LEVEL)]
        blocks = [[G[i, j] * rho.block(i, j) for j in range(2)] for i in range(2)]
    else:
        blocks = [[G * rho.block(i, j) for j in range(2)] for i in range(2)]
    return FockOperator.from_blocks(blocks)


def _apply_spin_ops(rho: FockOperator, ops) -> FockOperator:
    out = np.zeros_like(rho.matrix)
    eye = np.eye(rho.N)
    for A in ops:
        K = np.kron(A, eye)
        out += K @ rho.matrix @ K.conj().T
    return FockOperator(out, rho.N)


def _apply_cv_ops(rho: FockOperator, ops) -> FockOperator:
    out = np.zeros_like(rho.matrix)
    for A in ops:
        K = np.kron(np.eye(2), A)
        out += K @ rho.matrix @ K.conj().T
    return FockOperator(out, rho.N)


def apply_spin_map(rho: FockOperator, spin_map) -> FockOperator:
    """Apply a linear map on the qubit factor; ``spin_map(i, j)`` returns the image of |i><j|."""
    N = rho.N
    out = np.zeros((2 * N, 2 * N), dtype=complex)
    for i in range(2):
        for j in range(2):
            out += np.kron(spin_map(i, j), rho.block(i, j))
    return FockOperator(out, N)


# -- Brownian motion ---------------------------------------------------------

def _brownian_rhs(blocks, s, p: BrownianParams, q, pq, damping):
    """Interaction-picture right-hand side on each CV block."""
    d, xi, g = coefficient_arrays(p.omega_c * s, p)
    w = p.omega_O * s
    qs = q * np.cos(w) + pq * np.sin(w)
    ps = pq * np.cos(w) - q * np.sin(w)
    out = []
    for X in blocks:
        qX = qs @ X - X @ qs
        pX = ps @ X - X @ ps
        r = -d * (qs @ qX - qX @ qs) + xi * (qs @ pX - pX @ qs)
        if damping == "full":
            apx = ps @ X + X @ ps
            r = r - 1j * g * (qs @ apx - apx @ qs)
        elif damping == "secular":
            apx = ps @ X + X @ ps
            aqx = qs @ X + X @ qs
            r = r - 0.5j * g * ((qs @ apx - apx @ qs) - (ps @ aqx - aqx @ ps))
        out.append(r)
    return out


def stable_step(p: BrownianParams, N: int, t_end: float, safety: float = 2.0,
                max_phase: float = 0.02) -> float:
    """RK4 step below the stability limit of the truncated Brownian generator.

    The double commutators have spectral radius up to ``8 N`` times their rate
    on N Fock levels; RK4 is stable for ``h |lambda| < 2.78``. The step is also
    capped at ``max_phase`` radians of free rotation, which the rotating-frame
    quadratures must resolve.
    """
    s = np.linspace(0.0, max(t_end, 1e-12), 2001)
    d, xi, g = coefficient_arrays(p.omega_c * s, p)
    rate = 8.0 * N * (np.abs(d) + np.abs(xi) + np.abs(g)).max()
    return min(safety / (rate + 1.0), max_phase / p.omega_O)


def evolve_brownian_rk4(rho: FockOperator, p: BrownianParams, t_end: float, steps: int,
                        damping: str = "none", check: bool = False, tol: float = 1e-7,
                        t_start: float = 0.0) -> FockOperator:
    """Classic RK4 on the Brownian master equation acting on the oscillator.

    Integrates in the frame rotating with ``omega_O a^dag a`` and rotates back
    at the end. ``damping`` selects the gamma term: ``"none"`` (matches the
    Gamma = 0 closed form), ``"secular"`` (matches ``include_gamma_integral``)
    or ``"full"`` (the plain ``-i gamma [q, {p, .}]`` term). With ``check``, the
    run is repeated at half the step and ``StepCountError`` is raised if the
    two differ by more than ``tol``. ``rho`` is the state at ``t_start``; the
    coefficients depend on absolute time, so segments can be chained.
    """
    if damping not in ("none", "secular", "full"):
        raise ValueError(f"unknown damping mode {damping!r}")
    if steps < 1:
        raise StepCountError("steps must be >= 1")
    N = rho.N
    q, pq = quadratures(N)
    n = np.arange(N)
    dn = n[:, None] - n[None, :]
    to_frame = np.exp(1j * p.omega_O * t_start * dn)
    blocks = [rho.block(i, j) * to_frame for i in range(2) for j in range(2)]
    h = (t_end - t_start) / steps
    sym_dev = 0.0
    for k in range(steps):
        s = t_start + k * h
        k1 = _brownian_rhs(blocks, s, p, q, pq, damping)
        k2 = _brownian_rhs([b + 0.5 * h * k for b, k in zip(blocks, k1)], s + 0.5 * h, p, q, pq, damping)
        k3 = _brownian_rhs([b + 0.5 * h * k for b, k in zip(blocks, k2)], s + 0.5 * h, p, q, pq, damping)
        k4 = _brownian_rhs([b + h * k for b, k in zip(blocks, k3)], s + h, p, q, pq, damping)
        blocks = [b + h / 6.0 * (a1 + 2 * a2 + 2 * a3 + a4) for b, a1, a2, a3, a4 in zip(blocks, k1, k2, k3, k4)]
        # enforce rho_ij = rho_ji^dag
        b00, b01, b10, b11 = blocks
        sym_dev = max(sym_dev, float(np.abs(b01 - b10.conj().T).max()))
        b00 = 0.5 * (b00 + b00.conj().T)
        b11 = 0.5 * (b11 + b11.conj().T)
        b01 = 0.5 * (b01 + b10.conj().T)
        blocks = [b00, b01, b01.conj().T, b11]
    if sym_dev > 1e-10:
        log.info("RK4 Hermiticity symmetrisation removed deviation up to %.3e", sym_dev)
    phase = np.exp(-1j * p.omega_O * t_end * dn)
    blocks = [b * phase for b in blocks]
    out = FockOperator.from_blocks([[blocks[0], blocks[1]], [blocks[2], blocks[3]]])
    if check:
        fine = evolve_brownian_rk4(rho, p, t_end, 2 * steps, damping, t_start=t_start)
        diff = float(np.abs(fine.matrix - out.matrix).max())
        if diff > tol:
            raise StepCountError(f"RK4 with {steps} steps differs from {2 * steps} steps by {diff:.3e}")
        return fine
    return out


# -- spin star ---------------------------------------------------------------

def spinstar_map(tau_s: float, n_spins: int, max_spins: int = 8):
    """Exact reduced map of the central spin from the full unitary on 2^(n+1) levels."""
    if n_spins > max_spins:
        raise ValueError(f"exact spin-star oracle limited to {max_spins} environment spins")
    sz = np.diag([1.0, -1.0])
    dim_env = 2 ** n_spins
    H = np.zeros((2 * dim_env, 2 * dim_env))
    for k in range(n_spins):
        ops = [np.eye(2)] * n_spins
        ops[k] = sz
        env = ops[0]
        for o in ops[1:]:
            env = np.kron(env, o)
        H += np.kron(sz, env)
    U = expm(-1j * tau_s * H)
    env_state = np.eye(dim_env) / dim_env

    def image(i, j):
        X = np.zeros((2, 2), dtype=complex)
        X[i, j] = 1.0
        R = U @ np.kron(X, env_state) @ U.conj().T
        return np.einsum("iaja->ij", R.reshape(2, dim_env, 2, dim_env))

    images = {(i, j): image(i, j) for i in range(2) for j in range(2)}
    return lambda i, j: images[i, j]


def trace_distance_direct(tau_s: float, n_spins: int) -> float:
    """Tr|rho_+ - rho_-|/2 for sigma_x eigenstates evolved by the reduced spin-star map."""
    c = np.cos(2 * tau_s) ** n_spins
    plus = np.array([[0.5, 0.5 * c], [0.5 * c, 0.5]])
    minus = np.array([[0.5, -0.5 * c], [-0.5 * c, 0.5]])
    return float(0.5 * np.abs(np.linalg.eigvalsh(plus - minus)).sum())


# -- post-Markovian ----------------------------------------------------------

def postmarkov_map(t: float, p: PostMarkovParams):
    """Exact spin map of the memory-kernel master equation.

    With ``Y(t) = int_0^t gamma e^{(L - gamma)(t - s)} rho(s) ds`` the equation
    becomes the linear system ``rho' = L Y``, ``Y' = gamma rho + (L - gamma) Y``,
    solved with a single matrix exponential.
    """
    L = liouvillian_matrix(p)
    I4 = np.eye(4)
    G = np.block([[np.zeros((4, 4)), L], [p.gamma * I4, L - p.gamma * I4]])
    E = expm(G * t)[:4, :4]

    def image(i, j):
        X = np.zeros(4, dtype=complex)
        X[2 * i + j] = 1.0
        return (E @ X).reshape(2, 2)

    images = {(i, j): image(i, j) for i in range(2) for j in range(2)}
    return lambda i, j: images[i, j]


def _volterra_run(alpha0, lam, gamma, t_end, n_steps):
    """Implicit trapezoidal scheme for alpha' = int_0^t gamma lam e^{(lam-gamma)u} alpha(t-u) du."""
    h = t_end / n_steps
    mu = lam - gamma
    e = np.exp(mu * h)
    c = gamma * lam
    a = np.array(alpha0, dtype=complex)
    I = np.zeros_like(a)  # I_n = int_0^{t_n} e^{mu (t_n - s)} alpha(s) ds
    beta = c * I
    for _ in range(n_steps):
        # alpha_{n+1} = alpha_n + h/2 (beta_n + beta_{n+1})
        # beta_{n+1} = c (e I_n + h/2 (e alpha_n + alpha_{n+1}))
        rhs = a + 0.5 * h * beta + 0.5 * h * c * (e * I + 0.5 * h * e * a)
        a_new = rhs / (1.0 - 0.25 * h * h * c)
        I = e * I + 0.5 * h * (e * a + a_new)
        beta = c * I
        a = a_new
    return a


def evolve_volterra(alpha0, p: PostMarkovParams, t_end: float, step: float | None = None,
                    tol: float = 1e-10, max_halvings: int = 14) -> np.ndarray:
    """Damping-basis coefficients at ``t_end`` from a discretised Volterra solve.

    Step halving with Richardson extrapolation of the second-order scheme until
    successive extrapolants agree to ``tol``.
    """
    from .postmarkov import damping_basis

    alpha0 = np.asarray(alpha0, dtype=complex)
    if t_end == 0:
        return alpha0.copy()
    lam = damping_basis(p).lam
    if step is None:
        step = min(1.0 / p.gamma, 1.0 / p.gamma0) / 200.0
    n = max(1, int(np.ceil(t_end / step)))
    prev_run = _volterra_run(alpha0, lam, p.gamma, t_end, n)
    prev_ext = None
    for _ in range(max_halvings):
        n *= 2
        run = _volterra_run(alpha0, lam, p.gamma, t_end, n)
        ext = (4.0 * run - prev_run) / 3.0
        if prev_ext is not None and np.abs(ext - prev_ext).max() < tol:
            return ext
        prev_run, prev_ext = run, ext
    raise StepCountError(f"Volterra solve not converged after {max_halvings} halvings")
