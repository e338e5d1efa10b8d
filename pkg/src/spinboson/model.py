"""Physical Hamiltonian of the driven, linearly coupled spin-boson system and
the multi-boson / nonlinear target Hamiltonians it maps onto.

Frequencies are in units of the physical boson frequency ``nu`` (default 1).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import eval_genlaguerre

from .errors import ConfigError, UnstablePotentialError
from .operators import (
    SIGMA_PLUS,
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    dag,
    embed,
    fock_annihilate,
    number_op,
    squeeze,
)

log = logging.getLogger(__name__)

TARGET_KINDS = ("Hn", "Hn_eta", "nJCM", "n_antiJCM", "nQRM", "naJCM_eta")


@dataclass(frozen=True)
class DrivingTerm:
    """Spin driving with amplitude ``amplitude`` at detuning ``detuning``."""

    amplitude: float
    detuning: float


@dataclass(frozen=True)
class SystemParams:
    """Parameters of the physical Hamiltonian and the simulated model.

    ``drivings[0]`` is mandatory; its detuning is the spin bias ``delta_0``.
    ``red`` and ``blue`` list the sideband orders selected by the drivings
    (``sigma^+ a^n`` and ``sigma^+ (a^†)^n`` respectively).

    ``bias_correction`` is added to the ``sigma_x`` coefficient of the
    physical Hamiltonian only; the frame map keeps the nominal ``delta_0``.
    It exists to cancel the second-order AC-Stark shift of the carrier and
    is zero unless explicitly requested.
    """

    eta: float
    drivings: tuple[DrivingTerm, ...]
    nu_tilde: float
    omega_tilde: float
    nu: float = 1.0
    red: tuple[int, ...] = ()
    blue: tuple[int, ...] = ()
    t0: float = 0.0
    bias_correction: float = 0.0

    def __post_init__(self):
        if not self.drivings:
            raise ConfigError("at least one driving (index 0) is required")
        if self.nu <= 0:
            raise ConfigError(f"nu must be positive, got {self.nu}")
        if self.nu_tilde < 0:
            raise ConfigError(f"nu_tilde must be non-negative, got {self.nu_tilde}")
        if not np.isreal(self.eta):
            raise ConfigError("eta must be real")
        object.__setattr__(self, "drivings", tuple(self.drivings))
        object.__setattr__(self, "red", tuple(int(n) for n in self.red))
        object.__setattr__(self, "blue", tuple(int(n) for n in self.blue))
        for n in self.red:
            self.driving_for(n, +1)
        for m in self.blue:
            self.driving_for(m, -1)

    @property
    def delta0(self) -> float:
        return self.drivings[0].detuning

    @property
    def n_d(self) -> int:
        return len(self.drivings) - 1

    def Delta(self, j: int) -> float:
        return self.drivings[j].detuning - self.delta0

    def driving_for(self, n: int, sign: int) -> DrivingTerm:
        """Driving tuned to the order-``n`` sideband (``sign=+1`` red, ``-1`` blue)."""
        target = sideband_frequency(n, sign, self.nu, self.nu_tilde, self.omega_tilde)
        for d in self.drivings:
            if abs(d.detuning - target) <= 1e-12 * self.nu:
                return d
        kind = "red" if sign > 0 else "blue"
        raise ConfigError(f"no driving matches the {kind} sideband n={n} (needs detuning {target!r})")


@dataclass(frozen=True)
class TargetModel:
    kind: str
    n: int
    g: float
    phi: float
    nu_tilde: float
    omega_tilde: float

    def __post_init__(self):
        if self.kind not in TARGET_KINDS:
            raise ConfigError(f"unknown target kind {self.kind!r}")

    @property
    def nonlinear(self) -> bool:
        return self.kind in ("Hn_eta", "naJCM_eta")


def sideband_frequency(n: int, sign: int, nu: float, nu_tilde: float, omega_tilde: float) -> float:
    """Driving detuning ``±n(nu_tilde - nu) - omega_tilde`` that makes the
    order-``n`` red (``+``) or blue (``-``) sideband resonant."""
    if n < 1:
        raise ConfigError(f"sideband order must be >= 1, got {n}")
    s = 1 if sign > 0 else -1
    return s * n * (nu_tilde - nu) - omega_tilde


def effective_coupling(n: int, amplitude: float, eta: float) -> tuple[float, float]:
    """Lamb-Dicke coupling ``eta^n Omega / (2 n!)`` and its phase ``n pi / 2``."""
    if n < 1:
        raise ConfigError(f"sideband order must be >= 1, got {n}")
    return eta**n * amplitude / (2 * math.factorial(n)), n * math.pi / 2


def f_n_diagonal(n: int, eta: float, N: int) -> np.ndarray:
    """Diagonal entries ``<m|f_n(a^†a)|m>`` for ``m < N``.

    Uses the generalized-Laguerre closed form of the normal-ordered series,
    ``e^{-eta^2/2} (i eta)^n m!/(m+n)! L_m^{(n)}(eta^2)``.
    """
    m = np.arange(N)
    lag = eval_genlaguerre(m, n, eta**2)
    # m!/(m+n)! = 1/((m+1)(m+2)...(m+n))
    ratio = np.ones(N)
    for k in range(1, n + 1):
        ratio = ratio / (m + k)
    return np.exp(-(eta**2) / 2) * (1j * eta) ** n * ratio * lag


def f_n_operator(n: int, eta: float, N: int) -> np.ndarray:
    """Fock-number dependent coupling modulation ``f_n(a^†a)`` (boson space)."""
    if n < 0:
        raise ConfigError(f"f_n order must be >= 0, got {n}")
    return np.diag(f_n_diagonal(n, eta, N))


def hg_terms(p: SystemParams, N: int, *, a2: float = 0.0, quadrature: str = "p"):
    """Physical Hamiltonian split as ``H(t) = static + sum_k c_k(t) op_k``.

    Returns ``(static, [(coef_fn, op), ...])``. ``quadrature='p'`` couples
    through ``i(a - a^†)``; ``'x'`` through ``(a + a^†)`` (the rotated form
    in which an ``A^2`` term ``a2 (a + a^†)^2`` is naturally written).
    """
    a = fock_annihilate(N)
    ad = dag(a)
    if quadrature == "p":
        coupling = 1j * p.eta * p.nu / 2 * embed(SIGMA_X, a - ad)
    elif quadrature == "x":
        coupling = p.eta * p.nu / 2 * embed(SIGMA_X, a + ad)
    else:
        raise ConfigError(f"quadrature must be 'p' or 'x', got {quadrature!r}")
    sz = embed(SIGMA_Z, None, N)
    sy = embed(SIGMA_Y, None, N)
    static = (
        p.nu * embed(None, ad @ a)
        + (p.delta0 + p.bias_correction) / 2 * embed(SIGMA_X, None, N)
        + p.drivings[0].amplitude / 2 * sz
        + coupling
    )
    if a2:
        static = static + a2 * embed(None, (a + ad) @ (a + ad))
    driven = []
    for j in range(1, len(p.drivings)):
        om, Dj = p.drivings[j].amplitude, p.Delta(j)
        if om == 0:
            continue
        driven.append((lambda t, om=om, Dj=Dj: 0.5 * om * math.cos(Dj * t), sz))
        driven.append((lambda t, om=om, Dj=Dj: 0.5 * om * math.sin(Dj * t), sy))
    return static, driven


def build_HG(p: SystemParams, t: float, N: int, **kwargs) -> np.ndarray:
    """Physical Hamiltonian at time ``t``."""
    static, driven = hg_terms(p, N, **kwargs)
    H = static.copy()
    for coef, op in driven:
        H = H + coef(t) * op
    return H


def _free_part(nu_tilde: float, omega_tilde: float, N: int) -> np.ndarray:
    return nu_tilde * embed(None, number_op(N)) + omega_tilde / 2 * embed(SIGMA_Z, None, N)


def _check_nontrivial(p: SystemParams) -> None:
    if not p.red and not p.blue:
        log.warning("no sideband selected: target reduces to the free Hamiltonian")


def build_Hn(p: SystemParams, N: int, *, debye_waller: bool = False) -> np.ndarray:
    """Multi-boson model in the Lamb-Dicke limit.

    Couplings follow ``eta^n Omega / (2 n!)``; ``debye_waller=True`` multiplies
    them by ``exp(-eta^2/2)``, which is the constant ``f_n`` reduces to at
    small Fock numbers.
    """
    _check_nontrivial(p)
    a = fock_annihilate(N)
    ad = dag(a)
    H = _free_part(p.nu_tilde, p.omega_tilde, N)
    dw = math.exp(-p.eta**2 / 2) if debye_waller else 1.0
    for m in p.blue:
        g, phi = effective_coupling(m, p.driving_for(m, -1).amplitude, p.eta)
        term = dw * g * np.exp(1j * phi) * embed(SIGMA_PLUS, np.linalg.matrix_power(ad, m))
        H = H + term + dag(term)
    for n in p.red:
        g, phi = effective_coupling(n, p.driving_for(n, +1).amplitude, p.eta)
        term = dw * g * np.exp(1j * phi) * embed(SIGMA_PLUS, np.linalg.matrix_power(a, n))
        H = H + term + dag(term)
    return H


def build_Hn_eta(p: SystemParams, N: int, *, f_override=None) -> np.ndarray:
    """Nonlinear multi-boson model with Fock-dependent couplings ``f_n``.

    ``f_override(n)`` may return the boson-space matrix to use in place of
    ``f_n(a^†a)``; it is how the Lamb-Dicke reduction is checked.
    """
    _check_nontrivial(p)
    a = fock_annihilate(N)
    ad = dag(a)
    fn = f_override or (lambda k: f_n_operator(k, p.eta, N))
    H = _free_part(p.nu_tilde, p.omega_tilde, N)
    for m in p.blue:
        om = p.driving_for(m, -1).amplitude
        term = om / 2 * embed(SIGMA_PLUS, np.linalg.matrix_power(ad, m) @ fn(m))
        H = H + term + dag(term)
    for n in p.red:
        om = p.driving_for(n, +1).amplitude
        term = om / 2 * embed(SIGMA_PLUS, fn(n) @ np.linalg.matrix_power(a, n))
        H = H + term + dag(term)
    return H


def build_target(p: SystemParams, model: TargetModel, N: int) -> np.ndarray:
    if model.nonlinear:
        return build_Hn_eta(p, N)
    return build_Hn(p, N)


def stark_bias_correction(p: SystemParams) -> float:
    """Offset to ``delta_0`` cancelling the carrier AC-Stark shift.

    With a single driving the spin splitting in the physical frame is
    ``sqrt(delta_0^2 + Omega_0^2)`` rather than ``|delta_0|``; the returned
    offset restores ``|delta_0|``. Multiple drivings are left uncorrected
    (symmetric red/blue carriers shift in opposite directions).
    """
    if p.n_d > 0:
        return 0.0
    d0, om = p.delta0, p.drivings[0].amplitude
    if om >= abs(d0):
        raise ConfigError("carrier amplitude exceeds the bias; no Stark correction exists")
    return math.copysign(math.sqrt(d0 * d0 - om * om), d0) - d0


@dataclass(frozen=True)
class A2Removal:
    z_s: float
    params: SystemParams
    constant: float


def remove_A2(p: SystemParams, D: float) -> A2Removal:
    """Squeezing that absorbs an ``A^2`` term ``D (a + a^†)^2``.

    The renormalized parameters refer to the ``(a + a^†)`` coupling form and
    carry no sideband selection, since the drivings no longer match it.
    """
    arg = 1 + 4 * D / p.nu
    if arg <= 0:
        raise UnstablePotentialError(f"1 + 4D/nu = {arg} <= 0: the boson potential is unbounded")
    if D == 0:
        return A2Removal(0.0, p, 0.0)
    z = -0.25 * math.log(arg)
    # the renormalized nu moves every sideband; drivings must be retuned by the caller
    new = replace(p, eta=p.eta * math.exp(3 * z), nu=p.nu * math.exp(-2 * z), red=(), blue=())
    return A2Removal(z, new, -p.nu * math.exp(-z) * math.sinh(z))


def squeezed_frame(H: np.ndarray, z: float, N: int) -> np.ndarray:
    """``S^†[z] H S[z]`` on spin ⊗ boson."""
    S = embed(None, squeeze(z, N))
    return dag(S) @ H @ S
