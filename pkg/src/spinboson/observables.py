"""States and scalar figures of merit on density matrices."""

from __future__ import annotations

import logging

import numpy as np

from .errors import InvalidDimensionError, InvalidStateError, NotPSDError
from .operators import SPIN_STATES, dag, displacement, fock_ket, herm_sqrt

log = logging.getLogger(__name__)


def validate_density_matrix(rho: np.ndarray, trace_tol: float = 1e-8) -> np.ndarray:
    """Return ``rho`` as a complex array after checking it is a state."""
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise InvalidDimensionError(f"density matrix must be square, got {rho.shape}")
    tr = np.trace(rho)
    if abs(tr - 1) > trace_tol:
        raise InvalidStateError(f"trace {tr:.12g} deviates from 1 by more than {trace_tol}")
    if np.max(np.abs(rho - dag(rho))) > 1e-10:
        raise InvalidStateError("density matrix is not Hermitian")
    wmin = np.linalg.eigvalsh(0.5 * (rho + dag(rho)))[0]
    if wmin < -1e-8:
        raise InvalidStateError(f"density matrix has negative eigenvalue {wmin:.3e}")
    return rho


def ket2dm(psi: np.ndarray) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    return np.outer(psi, psi.conj())


def purity(rho: np.ndarray) -> float:
    # Tr(rho^2) = sum |rho_ij|^2 for Hermitian rho
    return float(np.real(np.vdot(rho, rho)))


def fidelity(rho: np.ndarray, sigma: np.ndarray) -> float:
    """Uhlmann fidelity ``(Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2``, clipped to [0, 1]."""
    if rho.shape != sigma.shape:
        raise InvalidDimensionError(f"shape mismatch {rho.shape} vs {sigma.shape}")
    try:
        s = herm_sqrt(rho, neg_tol=1e-6)
        inner = s @ sigma @ s
        w = np.linalg.eigvalsh(0.5 * (inner + dag(inner)))
    except NotPSDError as exc:
        raise NotPSDError(f"fidelity input is not a state: {exc}") from exc
    if w[0] < -1e-6 * max(1.0, w[-1]):
        raise NotPSDError(f"fidelity input is not a state (eigenvalue {w[0]:.2e})")
    F = float(np.sum(np.sqrt(np.clip(w, 0.0, None))) ** 2)
    return min(max(F, 0.0), 1.0)


def expect(op: np.ndarray, rho: np.ndarray) -> complex:
    # Tr(op rho) without forming the product
    return complex(np.sum(op * rho.T))


def thermal_state(nbar: float, N: int, tail_tol: float = 1e-8) -> np.ndarray:
    """Boson thermal state ``sum_k nbar^k / (nbar+1)^(k+1) |k><k|`` on ``N`` levels.

    The truncated distribution is renormalized; a tail heavier than
    ``tail_tol`` is logged.
    """
    if nbar < 0:
        raise InvalidStateError(f"mean occupation must be >= 0, got {nbar}")
    k = np.arange(N)
    if nbar == 0:
        p = (k == 0).astype(float)
    else:
        p = nbar**k / (nbar + 1.0) ** (k + 1)
    tail = 1.0 - p.sum()
    if tail > tail_tol:
        log.warning("thermal state nbar=%g loses %.2e beyond N=%d; renormalized", nbar, tail, N)
    return np.diag(p / p.sum()).astype(complex)


def coherent_ket(alpha: complex, N: int) -> np.ndarray:
    if abs(alpha) ** 2 > N / 4:
        raise InvalidDimensionError(f"|alpha|^2 = {abs(alpha) ** 2:.3g} exceeds N/4 for N={N}")
    return displacement(alpha, N)[:, 0].copy()


def coherent_state(alpha: complex, N: int) -> np.ndarray:
    return ket2dm(coherent_ket(alpha, N))


def fock_state(m: int, N: int) -> np.ndarray:
    return ket2dm(fock_ket(m, N))


def spin_state(label: str) -> np.ndarray:
    try:
        return ket2dm(SPIN_STATES[label])
    except KeyError:
        raise InvalidStateError(f"unknown spin state {label!r}; expected one of {sorted(SPIN_STATES)}") from None


def product_state(spin: str, boson: np.ndarray) -> np.ndarray:
    """``rho_spin ⊗ rho_boson`` in the package's spin-first ordering."""
    return np.kron(spin_state(spin), boson)
