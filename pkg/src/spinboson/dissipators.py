"""Jump operators in the physical frame and their images in the simulated frame."""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from .errors import ConfigError
from .frames import FrameMap, FrameSpec
from .operators import (
    SIGMA_MINUS,
    SIGMA_PLUS,
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    dag,
    displacement,
    embed,
    fock_annihilate,
    number_op,
)

log = logging.getLogger(__name__)

Jump = Union[np.ndarray, Callable[[float], np.ndarray]]

KINDS = ("sd", "se", "sa", "bl", "bh", "bd")
_ALIASES = {
    "spin_dephasing": "sd",
    "spont_emission": "se",
    "spont_absorption": "sa",
    "boson_leak": "bl",
    "boson_heat": "bh",
    "boson_dephasing": "bd",
}


def canonical_kind(kind: str) -> str:
    k = _ALIASES.get(kind, kind)
    if k not in KINDS:
        raise ConfigError(f"unknown channel kind {kind!r}; expected one of {KINDS + tuple(_ALIASES)}")
    return k


@dataclass(frozen=True)
class Channel:
    """Lindblad channel ``rate * D_F``.

    ``jump`` is either a matrix or a callable ``t -> matrix``. Channels
    produced in a diagonalizing basis carry ``transition=(j, k)`` and the
    basis matrix so the engine can apply whole families of them at once;
    their ``jump`` is left as ``None`` and built on demand by :meth:`at`.
    """

    rate: float
    jump: Jump | None
    label: str = ""
    transition: tuple[int, int] | None = None
    basis: np.ndarray | None = None

    def __post_init__(self):
        if self.rate < 0:
            raise ConfigError(f"channel {self.label!r} has negative rate {self.rate}")

    @property
    def time_dependent(self) -> bool:
        return callable(self.jump)

    def at(self, t: float) -> np.ndarray:
        if self.jump is None:
            j, k = self.transition
            return np.outer(self.basis[:, j], self.basis[:, k].conj())
        return self.jump(t) if callable(self.jump) else self.jump


def dissipator(F: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """``F rho F^† - {F^† F, rho} / 2``."""
    Fd = dag(F)
    FdF = Fd @ F
    return F @ rho @ Fd - 0.5 * (FdF @ rho + rho @ FdF)


def standard_jump(kind: str, N: int) -> np.ndarray:
    kind = canonical_kind(kind)
    a = fock_annihilate(N)
    if kind == "sd":
        return embed(SIGMA_Z, None, N)
    if kind == "se":
        return embed(SIGMA_MINUS, None, N)
    if kind == "sa":
        return embed(SIGMA_PLUS, None, N)
    if kind == "bl":
        return embed(None, a)
    if kind == "bh":
        return embed(None, dag(a))
    return embed(None, number_op(N))


def transformed_jump_numeric(F: np.ndarray, t: float, f: FrameSpec, N: int) -> np.ndarray:
    """``Gamma(t) F Gamma^†(t)``."""
    return FrameMap(f, N).transform(F, t)


class ClosedFormJump:
    """Closed-form image of a standard jump operator under ``Gamma(t)``.

    Calling the instance with ``t`` returns the matrix. The displaced
    spin-flip factor ``X(t) = D(i eta e^{i(nu - nu_tilde) t}) e^{-i(delta_0 + omega_tilde) t}``
    is obtained from ``D(i eta)`` by a diagonal phase conjugation.
    """

    def __init__(self, kind: str, f: FrameSpec, N: int, *, keep_constant: bool = False):
        self.kind = canonical_kind(kind)
        self.f = f
        self.N = N
        self.keep_constant = keep_constant
        self._m = np.arange(N)
        self._D = displacement(1j * f.eta, N)
        self._a = fock_annihilate(N)
        self._sz = embed(SIGMA_Z, None, N)
        self._sp = SIGMA_PLUS
        self._n = embed(None, number_op(N))

    def X(self, t: float) -> np.ndarray:
        tau = t - self.f.t0
        ph = np.exp(1j * (self.f.nu - self.f.nu_tilde) * tau * self._m)
        Dt = ph[:, None] * self._D * np.conj(ph)[None, :]
        return Dt * np.exp(-1j * (self.f.delta0 + self.f.omega_tilde) * tau)

    def linear_terms(self):
        """Boson images as ``[(c(t), M), ...]`` with ``F(t) = sum c(t) M``; ``None`` for spin kinds."""
        k, f = self.kind, self.f
        if k in ("sd", "se", "sa"):
            return None
        w = f.nu - f.nu_tilde
        A = embed(None, self._a)
        rot = lambda t: np.exp(-1j * w * (t - f.t0))  # noqa: E731
        if k == "bl":
            return [(rot, A), (lambda t: 1.0, -0.5j * f.eta * self._sz)]
        if k == "bh":
            return [(lambda t: np.conj(rot(t)), dag(A)), (lambda t: 1.0, 0.5j * f.eta * self._sz)]
        static = self._n + (f.eta**2 / 4 * np.eye(2 * self.N) if self.keep_constant else 0)
        B = 0.5j * f.eta * self._sz @ A
        return [(lambda t: 1.0, static), (rot, B), (lambda t: np.conj(rot(t)), dag(B))]

    def __call__(self, t: float) -> np.ndarray:
        k, f = self.kind, self.f
        tau = t - f.t0
        if k in ("sd", "se", "sa"):
            up = embed(SIGMA_PLUS, self.X(t))
            if k == "sd":
                return up + dag(up)
            s = -1.0 if k == "se" else 1.0
            return 0.5 * (-self._sz + s * (up - dag(up)))
        rot = np.exp(-1j * (f.nu - f.nu_tilde) * tau)
        a_t = embed(None, self._a * rot)
        if k == "bl":
            return a_t - 0.5j * f.eta * self._sz
        if k == "bh":
            return dag(a_t) + 0.5j * f.eta * self._sz
        quad = 1j * a_t
        out = self._n + 0.5 * f.eta * self._sz @ (quad + dag(quad))
        if self.keep_constant:
            out = out + f.eta**2 / 4 * np.eye(2 * self.N)
        return out


def transformed_jump_closed_form(kind: str, t: float, f: FrameSpec, N: int, *, keep_constant: bool = False) -> np.ndarray:
    """Closed-form ``Gamma F Gamma^†`` for a standard channel.

    The additive constant ``eta^2/4`` of the boson-dephasing image is
    dropped unless ``keep_constant`` is set; it does not change the
    dissipator.
    """
    return ClosedFormJump(kind, f, N, keep_constant=keep_constant)(t)


def approx_dissipator(kind: str, f: FrameSpec, N: int, rate: float = 1.0) -> list[Channel]:
    """Static channels approximating the transformed dissipator of ``kind``
    at lowest order in ``eta`` after dropping fast-rotating cross terms."""
    kind = canonical_kind(kind)
    a = fock_annihilate(N)
    sz = embed(SIGMA_Z, None, N)
    q = f.eta**2 / 4
    if kind == "sd":
        spec = [(1.0, embed(SIGMA_X, None, N), "sx")]
    elif kind in ("se", "sa"):
        spec = [
            (0.25, sz, "sz"),
            (0.25, embed(SIGMA_MINUS, None, N), "sm"),
            (0.25, embed(SIGMA_PLUS, None, N), "sp"),
        ]
    elif kind == "bl":
        spec = [(1.0, embed(None, a), "a"), (q, sz, "sz")]
    elif kind == "bh":
        spec = [(1.0, embed(None, dag(a)), "ad"), (q, sz, "sz")]
    else:
        spec = [
            (1.0, embed(None, number_op(N)), "n"),
            (q, embed(SIGMA_Z, a), "a_sz"),
            (q, embed(SIGMA_Z, dag(a)), "ad_sz"),
        ]
    return [Channel(rate * mult, op, f"{kind}~{lab}") for mult, op, lab in spec if mult > 0]


@dataclass(frozen=True)
class EngineeredSource:
    """Physical-frame jump realizing a target jump in the simulated frame.

    ``static`` is False when no time-independent representative exists; the
    jump is then a callable of ``t``.
    """

    jump: Jump
    static: bool


def engineered_source(target, f: FrameSpec, N: int, *, samples: int = 7, tol: float = 1e-9) -> EngineeredSource:
    """Jump ``F`` such that ``Gamma F Gamma^†`` reproduces the target channel.

    ``target='se'`` uses the closed form ``D(i eta)(sigma_z - i sigma_y)/2``.
    Any other target (a kind name or an operator) is pulled back numerically
    as ``Gamma^† F_target Gamma`` and accepted as static when it only picks
    up a global phase over ``samples`` probe times.
    """
    if isinstance(target, str) and canonical_kind(target) == "se":
        return EngineeredSource(0.5 * embed(SIGMA_Z - 1j * SIGMA_Y, displacement(1j * f.eta, N)), True)
    Ft = standard_jump(target, N) if isinstance(target, str) else np.asarray(target)
    fm = FrameMap(f, N)

    def pulled(t):
        G = fm.gamma(t)
        return dag(G) @ Ft @ G

    ref = pulled(f.t0)
    i0 = np.unravel_index(np.argmax(np.abs(ref)), ref.shape)
    # probe times spread over several fast periods
    for t in f.t0 + np.linspace(0.37, 11.3, samples) / max(f.nu, 1e-12):
        Fp = pulled(t)
        phase = Fp[i0] / ref[i0] if abs(ref[i0]) > 0 else 1.0
        if abs(abs(phase) - 1) > tol or np.max(np.abs(Fp - phase * ref)) > tol * max(1.0, np.max(np.abs(ref))):
            log.info("engineered source for %r is time dependent", target)
            return EngineeredSource(pulled, False)
    return EngineeredSource(ref, True)


def flat_rate(gamma: float) -> Callable[[float], float]:
    return lambda omega: gamma


def ohmic_rate(gamma: float, omega_ref: float, cutoff: float = math.inf) -> Callable[[float], float]:
    """``gamma * (omega / omega_ref) * exp(-omega / cutoff)`` for ``omega > 0``, else 0."""

    def rate(omega):
        if omega <= 0:
            return 0.0
        return gamma * omega / omega_ref * math.exp(-omega / cutoff)

    return rate


def dressed_basis(H: np.ndarray, N: int, decimals: int = 10):
    """Eigenpairs of ``H`` in ascending energy; ties broken by descending
    ``<sigma_z>`` then descending ``<a^†a>``. Returns ``(E, V, degenerate)``."""
    E, V = np.linalg.eigh(H)
    sz = np.real(np.einsum("ik,ij,jk->k", V.conj(), embed(SIGMA_Z, None, N), V))
    nn = np.real(np.einsum("ik,ij,jk->k", V.conj(), embed(None, number_op(N)), V))
    scale = max(1.0, float(np.max(np.abs(E))))
    key_e = np.round(E / scale, decimals)
    order = np.lexsort((-np.round(nn, 8), -np.round(sz, 8), key_e))
    E, V = E[order], V[:, order]
    degenerate = bool(np.any(np.diff(key_e[order]) == 0))
    return E, V, degenerate


def dressed_dissipators(H: np.ndarray, gamma_sd, gamma_bl, N: int) -> list[Channel]:
    """Zero-temperature spin-dephasing and boson-leak channels in the
    eigenbasis of a time-independent ``H``.

    ``gamma_sd`` and ``gamma_bl`` map a transition frequency to a rate.
    """
    E, V, degenerate = dressed_basis(H, N)
    if degenerate:
        warnings.warn("dressed basis has degenerate levels; channels follow the chosen eigenbasis", stacklevel=2)
    Vd = dag(V)
    sz = Vd @ embed(SIGMA_Z, None, N) @ V
    x = Vd @ embed(None, fock_annihilate(N) + dag(fock_annihilate(N))) @ V
    d = len(E)
    A = V @ np.diag(math.sqrt(gamma_sd(0.0)) * np.real(np.diag(sz))) @ Vd
    channels = [Channel(1.0, A, "dressed_sd_diag")]
    for j in range(d):
        for k in range(d):
            if j == k:
                continue
            w = E[k] - E[j]
            r = gamma_sd(w) * abs(sz[j, k]) ** 2
            if k > j:
                r += gamma_bl(w) * abs(x[j, k]) ** 2
            if r <= 0:
                continue
            channels.append(Channel(float(r), None, f"dressed_{j}<-{k}", transition=(j, k), basis=V))
    return channels
