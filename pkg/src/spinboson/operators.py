"""Truncated Fock-space and spin-1/2 operator algebra.

Operators are plain complex ``numpy`` arrays. Composite operators act on
spin ⊗ boson with the spin factor first, so the basis index of
``|s, m>`` is ``s * N + m`` where ``s = 0`` is the excited state ``|e>``
(``sigma_z = +1``) and ``s = 1`` the ground state ``|g>``.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

from .errors import InvalidDimensionError, NotPSDError, TruncationError

SPIN_DIM = 2

# spin basis (|e>, |g>)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
SIGMA_PLUS = np.array([[0, 1], [0, 0]], dtype=complex)
SIGMA_MINUS = np.array([[0, 0], [1, 0]], dtype=complex)
SPIN_I = np.eye(2, dtype=complex)

SPIN_STATES = {
    "e": np.array([1, 0], dtype=complex),
    "g": np.array([0, 1], dtype=complex),
    "+": np.array([1, 1], dtype=complex) / np.sqrt(2),
    "-": np.array([1, -1], dtype=complex) / np.sqrt(2),
}


def _check_dim(N: int, minimum: int = 2) -> None:
    if int(N) != N or N < minimum:
        raise InvalidDimensionError(f"Fock truncation must be an integer >= {minimum}, got {N}")


def fock_annihilate(N: int) -> np.ndarray:
    """Lowering operator ``a`` on the lowest ``N`` Fock states."""
    _check_dim(N)
    return np.diag(np.sqrt(np.arange(1, N, dtype=float)), k=1).astype(complex)


def fock_create(N: int) -> np.ndarray:
    return fock_annihilate(N).T.copy()


def number_op(N: int) -> np.ndarray:
    _check_dim(N)
    return np.diag(np.arange(N, dtype=float)).astype(complex)


def fock_ket(m: int, N: int) -> np.ndarray:
    if not 0 <= m < N:
        raise InvalidDimensionError(f"Fock level {m} outside truncation N={N}")
    v = np.zeros(N, dtype=complex)
    v[m] = 1.0
    return v


def basis_ket(spin: str, m: int, N: int) -> np.ndarray:
    """Composite ket ``|spin> ⊗ |m>``."""
    return np.kron(SPIN_STATES[spin], fock_ket(m, N))


def embed(spin_part: np.ndarray | None, boson_part: np.ndarray | None, N: int | None = None) -> np.ndarray:
    """Kronecker product ``spin_part ⊗ boson_part``.

    Either factor may be ``None`` (identity); ``N`` is then needed when the
    boson factor is missing.
    """
    if spin_part is None:
        spin_part = SPIN_I
    if boson_part is None:
        if N is None:
            raise InvalidDimensionError("embed needs N when the boson factor is omitted")
        boson_part = np.eye(N, dtype=complex)
    spin_part = np.asarray(spin_part)
    boson_part = np.asarray(boson_part)
    if spin_part.shape != (SPIN_DIM, SPIN_DIM):
        raise InvalidDimensionError(f"spin factor must be 2x2, got {spin_part.shape}")
    if boson_part.ndim != 2 or boson_part.shape[0] != boson_part.shape[1]:
        raise InvalidDimensionError(f"boson factor must be square, got {boson_part.shape}")
    if N is not None and boson_part.shape[0] != N:
        raise InvalidDimensionError(f"boson factor has dimension {boson_part.shape[0]}, expected {N}")
    return np.kron(spin_part, boson_part)


def boson_dim(op: np.ndarray) -> int:
    d = op.shape[0]
    if d % SPIN_DIM:
        raise InvalidDimensionError(f"dimension {d} is not spin ⊗ boson")
    return d // SPIN_DIM


def dag(A: np.ndarray) -> np.ndarray:
    return A.conj().T


def is_hermitian(A: np.ndarray, rtol: float = 1e-12) -> bool:
    scale = max(np.max(np.abs(A)), 1e-300)
    return bool(np.max(np.abs(A - dag(A))) <= rtol * scale)


def is_unitary(U: np.ndarray, atol: float = 1e-10) -> bool:
    return bool(np.max(np.abs(dag(U) @ U - np.eye(U.shape[0]))) <= atol)


def expm_hermitian(H: np.ndarray, t: float = 1.0) -> np.ndarray:
    """``exp(-i H t)`` for Hermitian ``H`` via eigendecomposition."""
    w, V = np.linalg.eigh(H)
    return (V * np.exp(-1j * w * t)) @ dag(V)


def expm(A: np.ndarray) -> np.ndarray:
    """Matrix exponential.

    Anti-Hermitian generators (every physical propagator here) go through a
    Hermitian eigendecomposition so the result is unitary to machine
    precision; anything else falls back to scaling-and-squaring Padé.
    """
    A = np.asarray(A, dtype=complex)
    scale = max(np.max(np.abs(A)), 1e-300)
    if np.max(np.abs(A + dag(A))) <= 1e-12 * scale:
        # A = -i H with H = i A Hermitian
        return expm_hermitian(1j * A)
    return scipy.linalg.expm(A)


def displacement(alpha: complex, N: int) -> np.ndarray:
    """``D(alpha) = exp(alpha a^† - alpha^* a)`` on the truncated space."""
    _check_dim(N)
    a = fock_annihilate(N)
    return expm(alpha * dag(a) - np.conj(alpha) * a)


def squeeze(z: float, N: int, leak_tol: float = 1e-6) -> np.ndarray:
    """``S[z] = exp((z/2)((a^†)^2 - a^2))``.

    Raises :class:`TruncationError` when the squeezed vacuum puts more than
    ``leak_tol`` population in the top four Fock levels.
    """
    _check_dim(N, 4)
    a = fock_annihilate(N)
    S = expm(0.5 * z * (dag(a) @ dag(a) - a @ a))
    leak = float(np.sum(np.abs(S[N - 4:, 0]) ** 2))
    if leak >= leak_tol:
        raise TruncationError(f"squeezed vacuum leaks {leak:.2e} into the top Fock levels (z={z}, N={N})")
    return S


def herm_sqrt(A: np.ndarray, neg_tol: float = 1e-8) -> np.ndarray:
    """Principal square root of a Hermitian positive-semidefinite matrix.

    Eigenvalues down to ``-neg_tol * max(1, ||A||)`` are clipped to zero.
    """
    A = 0.5 * (A + dag(A))
    w, V = np.linalg.eigh(A)
    floor = -neg_tol * max(1.0, float(np.max(np.abs(w))))
    if w[0] < floor:
        raise NotPSDError(f"matrix has eigenvalue {w[0]:.3e} below {floor:.1e}")
    w = np.clip(w, 0.0, None)
    return (V * np.sqrt(w)) @ dag(V)


def parity(N: int) -> np.ndarray:
    """Spin-boson parity ``sigma_z exp(i pi a^† a)``.

    With the spin driving along ``sigma_z`` and the coupling through
    ``sigma_x``, this is the operator that commutes with the unbiased model.
    """
    return embed(SIGMA_Z, np.diag((-1.0) ** np.arange(N)).astype(complex))


def interior_projector(N: int, keep: int) -> np.ndarray:
    """Diagonal projector onto the lowest ``keep`` Fock levels (both spin states)."""
    p = np.zeros(N)
    p[:keep] = 1.0
    return np.diag(np.kron(np.ones(2), p)).astype(complex)


def interior_max_diff(A: np.ndarray, B: np.ndarray, keep: int) -> float:
    """Largest entry of ``A - B`` restricted to the lowest ``keep`` Fock levels."""
    N = boson_dim(A)
    idx = np.concatenate([np.arange(keep), N + np.arange(keep)])
    return float(np.max(np.abs((A - B)[np.ix_(idx, idx)])))
