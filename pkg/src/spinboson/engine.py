"""Fixed-step RK4 integration of Lindblad master equations.

The state is propagated in the interaction picture of a static reference
Hamiltonian ``H0``: with ``H0 = V diag(E) V^†`` the integrator carries
``rho_I(t) = e^{i H0 t} rho(t) e^{-i H0 t}`` expressed in the eigenbasis of
``H0``. The fast free rotation is then applied exactly as elementwise phases
and RK4 only has to resolve the residual Hamiltonian and the dissipator.
``picture='lab'`` switches this off (``E = 0``, ``V = I``) and integrates
the full generator directly.
"""

from __future__ import annotations

import logging
import math
import time
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .dissipators import Channel
from .errors import ConfigError, InvalidDimensionError, NumericalQualityError
from .frames import TruncationWarning, leakage
from .observables import expect, purity
from .operators import dag

log = logging.getLogger(__name__)

TRACE_TOL = 1e-6
POSITIVITY_TOL = 1e-6
LEAK_FLAG = 1e-4
LEAK_WARN = 1e-3


class StabilityWarning(UserWarning):
    pass


@dataclass
class EvolutionProblem:
    """Everything needed to evolve one density matrix.

    The Hamiltonian is ``H0 + sum_k c_k(t) op_k + H_t(t)``; any of the three
    parts may be absent. ``observables`` maps names to operators whose
    expectation values are recorded at every sample time.
    """

    H0: np.ndarray | None
    channels: Sequence[Channel]
    rho0: np.ndarray
    t_grid: np.ndarray
    dt: float
    H_terms: Sequence[tuple[Callable[[float], float], np.ndarray]] = ()
    H_t: Callable[[float], np.ndarray] | None = None
    observables: dict = field(default_factory=dict)
    picture: str = "interaction"
    store_states: bool = False
    name: str = ""

    def __post_init__(self):
        self.rho0 = np.asarray(self.rho0, dtype=complex)
        d = self.rho0.shape[0]
        if self.rho0.shape != (d, d):
            raise InvalidDimensionError(f"initial state must be square, got {self.rho0.shape}")
        if self.H0 is None:
            self.H0 = np.zeros((d, d), dtype=complex)
        if self.H0.shape != (d, d):
            raise InvalidDimensionError(f"H0 has shape {self.H0.shape}, state has dimension {d}")
        self.t_grid = np.asarray(self.t_grid, dtype=float)
        if self.t_grid.ndim != 1 or len(self.t_grid) < 1:
            raise ConfigError("t_grid must be a non-empty 1-d array")
        if np.any(np.diff(self.t_grid) <= 0):
            raise ConfigError("t_grid must be strictly increasing")
        if not self.dt > 0:
            raise ConfigError(f"dt must be positive, got {self.dt}")
        if self.picture not in ("interaction", "lab"):
            raise ConfigError(f"picture must be 'interaction' or 'lab', got {self.picture!r}")
        for ch in self.channels:
            if ch.jump is not None and not ch.time_dependent and np.shape(ch.jump) != (d, d):
                raise InvalidDimensionError(f"channel {ch.label!r} has shape {np.shape(ch.jump)}")

    @property
    def dim(self) -> int:
        return self.rho0.shape[0]

    def hamiltonian(self, t: float) -> np.ndarray:
        H = np.array(self.H0, dtype=complex)
        for c, op in self.H_terms:
            H += c(t) * op
        if self.H_t is not None:
            H += self.H_t(t)
        return H


@dataclass
class Trajectory:
    times: np.ndarray
    expectations: dict
    purity: np.ndarray
    leakage: np.ndarray
    trace_dev: np.ndarray
    min_eig: np.ndarray
    states: list | None = None
    flags: list = field(default_factory=list)
    wall_time: float = 0.0
    steps: int = 0
    name: str = ""
    leak_warned: bool = False

    @property
    def valid(self) -> bool:
        return bool(np.all(self.trace_dev <= TRACE_TOL) and np.all(self.min_eig >= -POSITIVITY_TOL))

    @property
    def quality(self) -> str:
        return "ok" if not self.flags else ";".join(sorted(set(self.flags)))

    @property
    def final_state(self) -> np.ndarray | None:
        return None if not self.states else self.states[-1]


def lindblad_rhs(H: np.ndarray, channels, rho: np.ndarray, t: float = 0.0) -> np.ndarray:
    """``-i[H, rho] + sum_k gamma_k D_{F_k}[rho]`` with channels evaluated at ``t``.

    ``channels`` is a sequence of :class:`Channel` or of ``(rate, F)`` pairs.
    """
    X = -1j * (H @ rho)
    out = X + dag(X)
    for ch in channels:
        if isinstance(ch, Channel):
            rate, F = ch.rate, ch.at(t)
        else:
            rate, F = ch
        if rate == 0:
            continue
        Fd = dag(F)
        FdF = Fd @ F
        out += rate * (F @ rho @ Fd - 0.5 * (FdF @ rho + rho @ FdF))
    return out


class _Generator:
    """Right-hand side of the interaction-picture equation in the ``H0`` eigenbasis."""

    def __init__(self, prob: EvolutionProblem):
        d = prob.dim
        if prob.picture == "interaction":
            H0 = 0.5 * (prob.H0 + dag(prob.H0))
            self.E, self.V = np.linalg.eigh(H0)
            resid_static = np.zeros((d, d), dtype=complex)
        else:
            self.E = np.zeros(d)
            self.V = np.eye(d, dtype=complex)
            resid_static = np.array(prob.H0, dtype=complex)
        V, Vd = self.V, dag(self.V)
        self.to_eig = lambda A: Vd @ A @ V
        self.terms = [(c, self.to_eig(op)) for c, op in prob.H_terms]
        self.H_t = prob.H_t

        K = np.zeros((d, d), dtype=complex)
        self.static_jumps = []  # (rate, F_hat, F_hat^†)
        self.dynamic = []  # (rate, t -> F_hat(t))
        groups = {}  # basis id -> [U_hat, rate matrix]
        for ch in prob.channels:
            if ch.rate == 0:
                continue
            if ch.transition is not None and ch.basis is not None:
                key = id(ch.basis)
                if key not in groups:
                    groups[key] = [Vd @ ch.basis, np.zeros((d, d))]
                j, k = ch.transition
                groups[key][1][j, k] += ch.rate
            elif ch.time_dependent:
                lin = getattr(ch.jump, "linear_terms", lambda: None)()
                if lin is None:
                    self.dynamic.append((ch.rate, lambda t, ch=ch: self.to_eig(ch.at(t))))
                else:
                    parts = [(c, self.to_eig(M)) for c, M in lin]
                    self.dynamic.append((ch.rate, lambda t, parts=parts: sum(c(t) * M for c, M in parts)))
            else:
                F = self.to_eig(np.asarray(ch.jump, dtype=complex))
                Fd = dag(F)
                self.static_jumps.append((ch.rate, F, Fd))
                K += ch.rate * (Fd @ F)
        self.transition_groups = []
        for U, R in groups.values():
            # sum_{jk} r_jk B_jk^† B_jk = U diag(sum_j r_jk) U^†
            K += (U * R.sum(axis=0)) @ dag(U)
            self.transition_groups.append((U, dag(U), R))
        self.H_static = self.to_eig(resid_static) - 0.5j * K

    def residual_hamiltonian(self, t: float) -> np.ndarray:
        """Hermitian residual (eigenbasis) at ``t``, used for the stability check."""
        H = 0.5 * (self.H_static + dag(self.H_static))
        for c, op in self.terms:
            H = H + c(t) * op
        if self.H_t is not None:
            H = H + self.to_eig(self.H_t(t))
        return H

    def phases(self, t: float) -> np.ndarray:
        p = np.exp(1j * self.E * t)
        return np.outer(p, p.conj())

    def __call__(self, t: float, rho_I: np.ndarray) -> np.ndarray:
        phi = self.phases(t)
        rho = phi.conj() * rho_I
        Heff = self.H_static
        if self.terms or self.H_t is not None:
            Heff = Heff.copy()
            for c, op in self.terms:
                Heff += c(t) * op
            if self.H_t is not None:
                Heff += self.to_eig(self.H_t(t))
        jump_part = np.zeros_like(rho)
        for rate, jump in self.dynamic:
            F = jump(t)
            Fd = dag(F)
            Heff = Heff - 0.5j * rate * (Fd @ F)
            jump_part += rate * (F @ rho @ Fd)
        X = -1j * (Heff @ rho)
        out = X + dag(X) + jump_part
        for rate, F, Fd in self.static_jumps:
            out += rate * (F @ rho @ Fd)
        for U, Ud, R in self.transition_groups:
            pops = np.real(np.sum(U.conj() * (rho @ U), axis=0))
            out += (U * (R @ pops)) @ Ud
        return phi * out

    def to_lab(self, t: float, rho_I: np.ndarray) -> np.ndarray:
        rho = self.phases(t).conj() * rho_I
        return self.V @ rho @ dag(self.V)

    def from_lab(self, t: float, rho: np.ndarray) -> np.ndarray:
        return self.phases(t) * self.to_eig(rho)


def _rk4_step(f, t, y, h):
    k1 = f(t, y)
    k2 = f(t + h / 2, y + (h / 2) * k1)
    k3 = f(t + h / 2, y + (h / 2) * k2)
    k4 = f(t + h, y + h * k3)
    return y + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)


def evolve(prob: EvolutionProblem, *, stability_limit: float = 0.1) -> Trajectory:
    """Integrate ``prob`` with fixed-step RK4 and record samples on ``t_grid``.

    Each interval between sample times is split into the fewest equal steps
    no longer than ``dt``. After every step the state is replaced by its
    Hermitian part (the rotating-frame phases preserve hermiticity). The
    trace is never renormalized; a deviation above
    ``1e-6`` aborts with :class:`NumericalQualityError` carrying the partial
    trajectory.
    """
    start = time.perf_counter()
    gen = _Generator(prob)
    ts = prob.t_grid

    worst = 0.0
    for t in ts[:: max(1, len(ts) // 20)]:
        H = gen.residual_hamiltonian(t)
        worst = max(worst, float(np.max(np.sum(np.abs(H), axis=1))))
    if prob.dt * worst > stability_limit:
        warnings.warn(
            f"{prob.name or 'evolution'}: dt*||H_residual|| = {prob.dt * worst:.3g} exceeds {stability_limit}",
            StabilityWarning,
            stacklevel=2,
        )

    n = len(ts)
    traj = Trajectory(
        times=ts.copy(),
        expectations={k: np.full(n, np.nan, dtype=complex) for k in prob.observables},
        purity=np.full(n, np.nan),
        leakage=np.full(n, np.nan),
        trace_dev=np.full(n, np.nan),
        min_eig=np.full(n, np.nan),
        states=[] if prob.store_states else None,
        name=prob.name,
    )

    y = gen.from_lab(ts[0], prob.rho0)
    steps = 0
    for i, t_s in enumerate(ts):
        if i > 0:
            t_prev = ts[i - 1]
            span = t_s - t_prev
            m = max(1, math.ceil(span / prob.dt - 1e-9))
            h = span / m
            for s in range(m):
                y = _rk4_step(gen, t_prev + s * h, y, h)
                # the right-hand side is the Lindblad action only on Hermitian
                # input; round-off in the anti-Hermitian part would otherwise
                # grow under the commutator with the decay operator
                y = 0.5 * (y + y.conj().T)
            steps += m
        rho = gen.to_lab(t_s, y)
        _record(traj, i, rho, prob)
        if traj.trace_dev[i] > TRACE_TOL:
            traj.flags.append("trace")
            traj.wall_time = time.perf_counter() - start
            traj.steps = steps
            raise NumericalQualityError(
                f"{prob.name or 'evolution'}: trace deviation {traj.trace_dev[i]:.3e} at t={t_s:.6g}",
                trajectory=traj,
            )
    traj.wall_time = time.perf_counter() - start
    traj.steps = steps
    for k, v in traj.expectations.items():
        if np.max(np.abs(v.imag), initial=0.0) <= 1e-12 * max(1.0, np.max(np.abs(v.real), initial=0.0)):
            traj.expectations[k] = v.real.copy()
    return traj


def _record(traj: Trajectory, i: int, rho: np.ndarray, prob: EvolutionProblem) -> None:
    herm = 0.5 * (rho + dag(rho))
    traj.trace_dev[i] = abs(np.trace(rho) - 1.0)
    traj.purity[i] = purity(herm)
    traj.min_eig[i] = np.linalg.eigvalsh(herm)[0]
    for k, op in prob.observables.items():
        traj.expectations[k][i] = expect(op, rho)
    if traj.min_eig[i] < -POSITIVITY_TOL:
        traj.flags.append("positivity")
    if rho.shape[0] % 2 == 0 and rho.shape[0] >= 16:
        lk = leakage(rho)
        traj.leakage[i] = lk
        if lk > LEAK_FLAG:
            traj.flags.append("leakage")
        if lk > LEAK_WARN and not traj.leak_warned:
            traj.leak_warned = True
            warnings.warn(f"{prob.name or 'evolution'}: Fock-edge population {lk:.2e} at t={traj.times[i]:.6g}",
                          TruncationWarning, stacklevel=3)
    if traj.states is not None:
        traj.states.append(herm.copy())
