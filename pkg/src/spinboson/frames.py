"""Unitary map between the physical frame and the simulated-model frame.

The composite map is ``Gamma(t) = U_b0^†(t) T^†(i eta/2) U_a0(t)`` with

* ``U_a0(t) = exp(i (t - t0) delta_0 sigma_x / 2)``,
* ``U_b0(t) = exp(-i (t - t0) ((nu - nu_tilde) a^†a - omega_tilde sigma_z / 2))``,
* ``T(alpha)`` the spin-dependent displacement.

States map as ``rho_sim = Gamma rho_phys Gamma^†``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .model import SystemParams
from .operators import SIGMA_X, SIGMA_Z, dag, displacement, embed


class TruncationWarning(UserWarning):
    pass


@dataclass(frozen=True)
class FrameSpec:
    delta0: float
    nu: float
    nu_tilde: float
    omega_tilde: float
    eta: float
    t0: float = 0.0

    @classmethod
    def from_params(cls, p: SystemParams) -> "FrameSpec":
        return cls(p.delta0, p.nu, p.nu_tilde, p.omega_tilde, p.eta, p.t0)


def T_operator(alpha: complex, N: int) -> np.ndarray:
    """Spin-dependent displacement, block ``[[D^†, D], [-D^†, D]] / sqrt 2``."""
    return _T_cached(complex(alpha), int(N)).copy()


@lru_cache(maxsize=32)
def _T_cached(alpha: complex, N: int) -> np.ndarray:
    D = displacement(alpha, N)
    Dd = dag(D)
    T = np.block([[Dd, D], [-Dd, D]]) / np.sqrt(2)
    T.setflags(write=False)
    return T


def leakage(rho: np.ndarray, top: int = 4) -> float:
    """Population in the ``top`` highest Fock levels (summed over spin)."""
    N = rho.shape[0] // 2
    d = np.real(np.diagonal(rho))
    return float(d[N - top:N].sum() + d[2 * N - top:].sum())


class FrameMap:
    """``Gamma(t)`` for one frame specification and truncation.

    ``T`` is built once; the two rotations are diagonal or 2x2 and are
    applied in closed form.
    """

    def __init__(self, spec: FrameSpec, N: int):
        self.spec = spec
        self.N = N
        self.T = _T_cached(complex(0.5j * spec.eta), int(N))
        self.Tdag = dag(self.T)
        m = np.arange(N)
        # diagonal of H_b0 in the (e, g) ⊗ Fock basis
        self._hb0 = np.concatenate([
            (spec.nu - spec.nu_tilde) * m - spec.omega_tilde / 2,
            (spec.nu - spec.nu_tilde) * m + spec.omega_tilde / 2,
        ])
        self._sx = embed(SIGMA_X, None, N)
        self._I = np.eye(2 * N, dtype=complex)

    def U_a0(self, t: float) -> np.ndarray:
        th = (t - self.spec.t0) * self.spec.delta0 / 2
        return np.cos(th) * self._I + 1j * np.sin(th) * self._sx

    def U_b0_diag(self, t: float) -> np.ndarray:
        return np.exp(-1j * (t - self.spec.t0) * self._hb0)

    def U_b0(self, t: float) -> np.ndarray:
        return np.diag(self.U_b0_diag(t))

    def gamma(self, t: float) -> np.ndarray:
        ub_dag = np.conj(self.U_b0_diag(t))
        return ub_dag[:, None] * (self.Tdag @ self.U_a0(t))

    def generator(self) -> np.ndarray:
        """``i dGamma/dt Gamma^†`` (time independent)."""
        return -np.diag(self._hb0).astype(complex) + self.spec.delta0 / 2 * embed(SIGMA_Z, None, self.N)

    def to_simulated(self, rho: np.ndarray, t: float, *, warn_leak: float = 1e-3) -> np.ndarray:
        _warn_if_leaky(rho, warn_leak)
        G = self.gamma(t)
        return G @ rho @ dag(G)

    def from_simulated(self, rho: np.ndarray, t: float, *, warn_leak: float = 1e-3) -> np.ndarray:
        _warn_if_leaky(rho, warn_leak)
        G = self.gamma(t)
        return dag(G) @ rho @ G

    def transform(self, F: np.ndarray, t: float) -> np.ndarray:
        """``Gamma F Gamma^†`` for an operator on the composite space."""
        G = self.gamma(t)
        return G @ F @ dag(G)


def _warn_if_leaky(rho, tol):
    lk = leakage(rho)
    if lk > tol:
        warnings.warn(f"state has {lk:.2e} population at the Fock truncation edge", TruncationWarning, stacklevel=3)


def Gamma(t: float, f: FrameSpec, N: int) -> np.ndarray:
    return FrameMap(f, N).gamma(t)


def to_simulated_frame(rho_G: np.ndarray, t: float, f: FrameSpec, N: int) -> np.ndarray:
    return FrameMap(f, N).to_simulated(rho_G, t)


def from_simulated_frame(rho_n: np.ndarray, t: float, f: FrameSpec, N: int) -> np.ndarray:
    return FrameMap(f, N).from_simulated(rho_n, t)
