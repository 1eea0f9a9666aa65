"""Pure dephasing of the qubit by a star of environment spins.

The star is prepared maximally mixed and coupled through ``A sigma_z sigma_z^(k)``,
so the qubit coherence is multiplied by ``[cos(2 tau_s)]^N_s`` with
``tau_s = A t`` while the populations are untouched.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bell import CorrelationModel, pure_state_parts
from .phasespace import CatState


@dataclass(frozen=True)
class SpinStarParams:
    n_spins: int = 2

    def __post_init__(self):
        if int(self.n_spins) != self.n_spins or self.n_spins < 1:
            raise ValueError(f"n_spins must be an integer >= 1, got {self.n_spins}")


def decoherence_factor(tau_s, n_spins: int):
    """[cos(2 tau_s)]^n_spins, evaluated as sign * exp(n log|cos|) so that large
    stars do not flush to zero before the true value underflows."""
    SpinStarParams(n_spins)
    c = np.cos(2.0 * np.asarray(tau_s, dtype=float))
    with np.errstate(divide="ignore"):
        mag = np.exp(n_spins * np.log(np.abs(c)))
    sign = np.where(c < 0, (-1.0) ** (n_spins % 2), 1.0)
    out = sign * mag
    return out[()] if out.ndim == 0 else out


def trace_distance(tau_s, n_spins: int):
    """Trace distance between the evolved sigma_x eigenstates |+> and |->."""
    return np.abs(decoherence_factor(tau_s, n_spins))


def corr_spinstar(theta, beta, tau_s, p: SpinStarParams, D: float):
    a, b = pure_state_parts(beta, D, coherence=decoherence_factor(tau_s, p.n_spins))
    out = a * np.sin(theta) + b * np.cos(theta)
    return out[()] if np.ndim(out) == 0 else out


class SpinStarModel(CorrelationModel):
    """Cat state with its spin dephased by the star; parameter ``tau_s``."""

    parameter = "tau_s"

    def __init__(self, p: SpinStarParams = SpinStarParams(), cat: CatState = CatState()):
        self.p = p
        self.cat = cat

    def parts(self, beta, t):
        return pure_state_parts(beta, self.cat.D, coherence=decoherence_factor(t, self.p.n_spins))

    def describe(self):
        return {"channel": "spinstar", "n_spins": self.p.n_spins, "D": self.cat.D}
