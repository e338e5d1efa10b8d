"""Scenario configuration, the paired physical/target evolution and CSV output.

A scenario file is an INI document with four sections::

    [model]        kind, n, eta / g_over_nu_tilde / amplitude_over_nu_tilde, ...
    [dissipation]  one line per channel: ``<kind> = <rate over nu_tilde> <mode>``
    [initial]      frame, boson, spin
    [run]          scale, N, dt, t_end, samples, observables, ...

All frequencies are ratios to the simulated boson frequency ``nu_tilde``
except ``dt`` (units of ``1/nu``); the physical boson frequency is ``nu = 1``
and ``scale = nu / nu_tilde``.
"""

from __future__ import annotations

import configparser
import csv
import io
import logging
import math
import os
import re
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .dissipators import (
    Channel,
    ClosedFormJump,
    approx_dissipator,
    canonical_kind,
    dressed_dissipators,
    engineered_source,
    flat_rate,
    ohmic_rate,
    standard_jump,
)
from .engine import EvolutionProblem, Trajectory, evolve
from .errors import ConfigError, NumericalQualityError
from .frames import FrameMap, FrameSpec
from .model import (
    DrivingTerm,
    SystemParams,
    TargetModel,
    build_Hn,
    build_Hn_eta,
    effective_coupling,
    f_n_diagonal,
    hg_terms,
    sideband_frequency,
    stark_bias_correction,
)
from .observables import coherent_state, fidelity, fock_state, spin_state, thermal_state
from .operators import SIGMA_X, SIGMA_Y, SIGMA_Z, basis_ket, embed, fock_annihilate, number_op, parity

log = logging.getLogger(__name__)

MODES = ("exact_transformed", "approx_static", "dressed", "engineered")
INFIDELITY_FLOOR = 1e-6
DEFAULT_DT = 2 * math.pi / 50
MIN_SCALE = 50

_NUM = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)?\s*\*?\s*(pi)?\s*(?:/\s*(\d+(?:\.\d*)?))?\s*$")


def parse_number(text) -> float:
    """Parse ``'0.5'``, ``'1/4'``, ``'20pi'``, ``'20*pi'`` or ``'pi/2'``."""
    if isinstance(text, (int, float)):
        return float(text)
    m = _NUM.match(str(text))
    if not m or (m.group(1) is None and m.group(2) is None):
        raise ConfigError(f"cannot parse number {text!r}")
    v = float(m.group(1)) if m.group(1) is not None else 1.0
    if m.group(2):
        v *= math.pi
    if m.group(3):
        v /= float(m.group(3))
    return v


def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(x)
    return str(x)


@dataclass(frozen=True)
class ChannelSpec:
    kind: str
    rate: float  # over nu_tilde
    mode: str = "exact_transformed"

    def __post_init__(self):
        object.__setattr__(self, "kind", canonical_kind(self.kind))
        if self.mode not in MODES:
            raise ConfigError(f"unknown dissipation mode {self.mode!r}; expected one of {MODES}")
        if self.rate < 0:
            raise ConfigError(f"rate for {self.kind} must be >= 0")


@dataclass(frozen=True)
class InitialSpec:
    boson: str = "fock 0"
    spin: str = "e"
    frame: str = "simulated"

    def __post_init__(self):
        if self.frame not in ("simulated", "physical"):
            raise ConfigError(f"initial frame must be 'simulated' or 'physical', got {self.frame!r}")
        if self.spin not in ("e", "g", "+", "-"):
            raise ConfigError(f"initial spin must be one of e, g, +, -; got {self.spin!r}")
        self._parsed()

    def _parsed(self) -> tuple[str, complex]:
        parts = self.boson.split()
        if len(parts) != 2 or parts[0] not in ("fock", "coherent", "thermal"):
            raise ConfigError(f"boson state must be 'fock m', 'coherent alpha' or 'thermal nbar', got {self.boson!r}")
        kind, arg = parts
        try:
            if kind == "fock":
                return kind, int(arg)
            if kind == "coherent":
                return kind, complex(arg.replace("i", "j"))
            return kind, parse_number(arg)
        except ValueError:
            raise ConfigError(f"bad boson state argument {arg!r}") from None

    def boson_state(self, N: int) -> np.ndarray:
        kind, arg = self._parsed()
        if kind == "fock":
            return fock_state(arg, N)
        if kind == "coherent":
            return coherent_state(arg, N)
        return thermal_state(arg, N)

    def density_matrix(self, N: int) -> np.ndarray:
        return np.kron(spin_state(self.spin), self.boson_state(N))


@dataclass(frozen=True)
class ScenarioConfig:
    """One scenario. Frequencies are ratios to ``nu_tilde`` unless noted."""

    name: str = "custom"
    kind: str = "nJCM"
    n: int = 1
    eta: float | None = None
    g_over_nu_tilde: float | None = None
    amplitude_over_nu_tilde: float | None = None
    coupling_convention: str = "lamb_dicke"
    omega_tilde_over_nu_tilde: float = 0.0
    amplitude_ratio: float = 1.0
    red: tuple = ()
    blue: tuple = ()
    bias: str = "none"
    channels: tuple = ()
    spectrum: str = "flat"
    cutoff_over_nu: float = math.inf
    initial: InitialSpec = field(default_factory=InitialSpec)
    scale: float = 200.0
    paper_scale: float | None = None
    N: int = 20
    dt: float | None = None  # units of 1/nu
    t_end: float = 20 * math.pi  # units of 1/nu_tilde
    samples: int = 201
    observables: tuple = ("sz", "n")
    picture: str = "interaction"
    linear_reference: bool = False

    def __post_init__(self):
        if self.kind not in ("Hn", "Hn_eta", "nJCM", "n_antiJCM", "nQRM", "naJCM_eta"):
            raise ConfigError(f"unknown model kind {self.kind!r}")
        if self.n < 1:
            raise ConfigError("n must be >= 1")
        if self.scale < MIN_SCALE:
            raise ConfigError(
                f"scale = nu/nu_tilde = {self.scale:g} violates the hierarchy nu_tilde <= nu/{MIN_SCALE}"
            )
        given = [x is not None for x in (self.eta, self.g_over_nu_tilde, self.amplitude_over_nu_tilde)]
        if sum(given) != 2:
            raise ConfigError("exactly two of eta, g_over_nu_tilde and amplitude_over_nu_tilde must be set")
        if self.coupling_convention not in ("lamb_dicke", "fn"):
            raise ConfigError("coupling_convention must be 'lamb_dicke' or 'fn'")
        if self.bias not in ("none", "stark"):
            raise ConfigError("bias must be 'none' or 'stark'")
        if self.spectrum not in ("flat", "ohmic"):
            raise ConfigError("spectrum must be 'flat' or 'ohmic'")
        if self.picture not in ("interaction", "lab"):
            raise ConfigError("picture must be 'interaction' or 'lab'")
        if self.N < 8:
            raise ConfigError("N must be >= 8 (the leakage monitor watches the top four levels)")
        if self.samples < 2 or self.t_end <= 0:
            raise ConfigError("need samples >= 2 and t_end > 0")
        if self.dt is not None and self.dt <= 0:
            raise ConfigError("dt must be positive")
        for obs in self.observables:
            _observable(obs, 8)

    # ---- derived physical quantities -------------------------------------------------

    @property
    def nu_tilde(self) -> float:
        return 1.0 / self.scale

    @property
    def step(self) -> float:
        return DEFAULT_DT if self.dt is None else self.dt

    def sidebands(self) -> tuple[tuple[int, ...], tuple[int, ...]]:
        k, n = self.kind, self.n
        if k == "nJCM":
            return (n,), ()
        if k in ("n_antiJCM", "naJCM_eta"):
            return (), (n,)
        if k == "nQRM":
            return (n,), (n,)
        red, blue = tuple(self.red), tuple(self.blue)
        if not red and not blue:
            red = (n,)
        return red, blue

    def _coupling_factor(self, eta: float, order: int) -> float:
        """``g / Omega`` for the chosen convention."""
        if self.coupling_convention == "lamb_dicke":
            return effective_coupling(order, 1.0, eta)[0]
        return abs(f_n_diagonal(order, eta, 1)[0]) / 2

    def resolve(self) -> tuple[float, float, float]:
        """``(eta, g / nu_tilde, Omega / nu_tilde)`` from the two given values."""
        n = self.n
        eta, g, amp = self.eta, self.g_over_nu_tilde, self.amplitude_over_nu_tilde
        if amp is None:
            amp = g / self._coupling_factor(eta, n)
        elif g is None:
            g = amp * self._coupling_factor(eta, n)
        elif self.coupling_convention == "lamb_dicke":
            eta = (2 * math.factorial(n) * g / amp) ** (1.0 / n)
        else:
            eta = _solve_fn_eta(n, 2 * g / amp)
        return float(eta), float(g), float(amp)

    def system_params(self) -> SystemParams:
        eta, _, amp = self.resolve()
        nt = self.nu_tilde
        wt = self.omega_tilde_over_nu_tilde * nt
        red, blue = self.sidebands()
        drivings = []
        for n in red:
            drivings.append((sideband_frequency(n, +1, 1.0, nt, wt), n, +1))
        for m in blue:
            drivings.append((sideband_frequency(m, -1, 1.0, nt, wt), m, -1))
        terms = []
        seen = set()
        for j, (det, _, _) in enumerate(drivings):
            if det in seen:
                continue
            seen.add(det)
            Om = amp * nt * (1.0 if j == 0 else self.amplitude_ratio)
            terms.append(DrivingTerm(Om, det))
        p = SystemParams(eta=eta, drivings=tuple(terms), nu_tilde=nt, omega_tilde=wt, red=red, blue=blue)
        if self.bias == "stark":
            p = replace(p, bias_correction=stark_bias_correction(p))
        return p

    def target_model(self) -> TargetModel:
        _, g, _ = self.resolve()
        return TargetModel(self.kind, self.n, g * self.nu_tilde, self.n * math.pi / 2, self.nu_tilde,
                           self.omega_tilde_over_nu_tilde * self.nu_tilde)

    @property
    def nonlinear(self) -> bool:
        return self.kind in ("Hn_eta", "naJCM_eta")

    def t_grid(self) -> np.ndarray:
        return np.linspace(0.0, self.t_end / self.nu_tilde, self.samples)

    # ---- (de)serialization ---------------------------------------------------------

    @classmethod
    def from_ini(cls, text: str, name: str | None = None) -> "ScenarioConfig":
        cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
        try:
            cp.read_string(text)
        except configparser.Error as exc:
            raise ConfigError(f"malformed scenario file: {exc}") from exc
        known = {"model", "dissipation", "initial", "run"}
        extra = set(cp.sections()) - known
        if extra:
            raise ConfigError(f"unknown section(s) {sorted(extra)}")
        kw: dict = {}
        m = cp["model"] if cp.has_section("model") else {}
        r = cp["run"] if cp.has_section("run") else {}
        allowed_model = {"name", "kind", "n", "eta", "g_over_nu_tilde", "amplitude_over_nu_tilde",
                         "coupling_convention", "omega_tilde_over_nu_tilde", "amplitude_ratio",
                         "red", "blue", "bias"}
        allowed_run = {"scale", "paper_scale", "n", "dt", "t_end", "samples", "observables", "picture",
                       "linear_reference"}
        for key in m:
            if key not in allowed_model:
                raise ConfigError(f"unknown [model] key {key!r}")
        for key in r:
            if key not in allowed_run:
                raise ConfigError(f"unknown [run] key {key!r}")
        try:
            for key in ("name", "kind", "coupling_convention", "bias"):
                if key in m:
                    kw[key] = m[key].strip()
            if "n" in m:
                kw["n"] = int(m["n"])
            for key in ("eta", "g_over_nu_tilde", "amplitude_over_nu_tilde", "omega_tilde_over_nu_tilde",
                        "amplitude_ratio"):
                if key in m:
                    kw[key] = parse_number(m[key])
            for key in ("red", "blue"):
                if key in m and m[key].strip():
                    kw[key] = tuple(int(x) for x in m[key].replace(",", " ").split())
            chans = []
            if cp.has_section("dissipation"):
                d = cp["dissipation"]
                for key in d:
                    if key == "spectrum":
                        kw["spectrum"] = d[key].strip()
                    elif key == "cutoff_over_nu":
                        kw["cutoff_over_nu"] = parse_number(d[key])
                    else:
                        parts = d[key].split()
                        if not 1 <= len(parts) <= 2:
                            raise ConfigError(f"dissipation line {key!r} must be '<rate> [mode]'")
                        mode = parts[1] if len(parts) == 2 else "exact_transformed"
                        chans.append(ChannelSpec(key, parse_number(parts[0]), mode))
            kw["channels"] = tuple(chans)
            if cp.has_section("initial"):
                i = cp["initial"]
                for key in i:
                    if key not in ("boson", "spin", "frame"):
                        raise ConfigError(f"unknown [initial] key {key!r}")
                kw["initial"] = InitialSpec(**{k: i[k].strip() for k in i})
            if "scale" in r:
                kw["scale"] = parse_number(r["scale"])
            if "paper_scale" in r:
                kw["paper_scale"] = parse_number(r["paper_scale"])
            if "n" in r:
                kw["N"] = int(r["n"])
            if "dt" in r and r["dt"].strip() != "auto":
                kw["dt"] = parse_number(r["dt"])
            if "t_end" in r:
                kw["t_end"] = parse_number(r["t_end"])
            if "samples" in r:
                kw["samples"] = int(r["samples"])
            if "observables" in r:
                kw["observables"] = tuple(x.strip() for x in r["observables"].split(",") if x.strip())
            if "picture" in r:
                kw["picture"] = r["picture"].strip()
            if "linear_reference" in r:
                kw["linear_reference"] = r.getboolean("linear_reference")
        except ValueError as exc:
            raise ConfigError(f"bad value in scenario file: {exc}") from exc
        if name is not None and "name" not in kw:
            kw["name"] = name
        return cls(**kw)

    @classmethod
    def from_file(cls, path) -> "ScenarioConfig":
        path = Path(path)
        try:
            text = path.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read scenario file {path}: {exc}") from exc
        return cls.from_ini(text, name=path.stem)

    def to_ini(self) -> str:
        lines = ["[model]", f"name = {self.name}", f"kind = {self.kind}", f"n = {self.n}"]
        for key in ("eta", "g_over_nu_tilde", "amplitude_over_nu_tilde"):
            v = getattr(self, key)
            if v is not None:
                lines.append(f"{key} = {_fmt(v)}")
        lines += [
            f"coupling_convention = {self.coupling_convention}",
            f"omega_tilde_over_nu_tilde = {_fmt(self.omega_tilde_over_nu_tilde)}",
        ]
        if self.amplitude_ratio != 1.0:
            lines.append(f"amplitude_ratio = {_fmt(self.amplitude_ratio)}")
        if self.red:
            lines.append("red = " + " ".join(map(str, self.red)))
        if self.blue:
            lines.append("blue = " + " ".join(map(str, self.blue)))
        lines.append(f"bias = {self.bias}")
        lines += ["", "[dissipation]"]
        for ch in self.channels:
            lines.append(f"{ch.kind} = {_fmt(ch.rate)} {ch.mode}")
        if self.spectrum != "flat":
            lines.append(f"spectrum = {self.spectrum}")
            lines.append(f"cutoff_over_nu = {_fmt(self.cutoff_over_nu)}")
        lines += ["", "[initial]", f"frame = {self.initial.frame}", f"boson = {self.initial.boson}",
                  f"spin = {self.initial.spin}", "", "[run]", f"scale = {_fmt(self.scale)}"]
        if self.paper_scale is not None:
            lines.append(f"paper_scale = {_fmt(self.paper_scale)}")
        lines += [
            f"N = {self.N}",
            f"dt = {'auto' if self.dt is None else _fmt(self.dt)}",
            f"t_end = {_fmt(self.t_end)}",
            f"samples = {self.samples}",
            "observables = " + ", ".join(self.observables),
            f"picture = {self.picture}",
            f"linear_reference = {'true' if self.linear_reference else 'false'}",
        ]
        return "\n".join(lines) + "\n"

    def with_overrides(self, **kw) -> "ScenarioConfig":
        names = {f.name for f in fields(self)}
        rates = {k[5:]: v for k, v in kw.items() if k.startswith("rate_")}
        for k in kw:
            if k not in names and not k.startswith("rate_"):
                raise ConfigError(f"unknown scenario field {k!r}")
        base = {k: v for k, v in kw.items() if k in names}
        cfg = replace(self, **base)
        if rates:
            chans = []
            for ch in cfg.channels:
                chans.append(replace(ch, rate=float(rates.pop(ch.kind, ch.rate))))
            if rates:
                raise ConfigError(f"no channel of kind {sorted(rates)} to override")
            cfg = replace(cfg, channels=tuple(chans))
        return cfg


def _solve_fn_eta(n: int, ratio: float) -> float:
    """Smallest ``eta`` with ``|f_n(0)| = ratio``."""
    from scipy.optimize import brentq

    def h(e):
        return abs(f_n_diagonal(n, e, 1)[0]) - ratio

    peak = math.sqrt(n)  # |f_n(0)| ~ eta^n e^{-eta^2/2} peaks at eta = sqrt(n)
    if h(peak) < 0:
        raise ConfigError(f"coupling ratio {ratio:g} unreachable for n={n}")
    return brentq(h, 1e-12, peak)


# ---- observables ------------------------------------------------------------------------


def _observable(name: str, N: int) -> np.ndarray:
    a = fock_annihilate(N)
    table = {
        "sz": lambda: embed(SIGMA_Z, None, N),
        "sx": lambda: embed(SIGMA_X, None, N),
        "sy": lambda: embed(SIGMA_Y, None, N),
        "n": lambda: embed(None, number_op(N)),
        "x": lambda: embed(None, a + a.conj().T),
        "parity": lambda: parity(N),
    }
    base = name[5:] if name.startswith("phys:") else name
    if base in table:
        return table[base]()
    m = re.fullmatch(r"pop:(\d+)([eg])", base)
    if m:
        level = int(m.group(1))
        if level >= N:
            return np.zeros((2 * N, 2 * N), dtype=complex)
        k = basis_ket(m.group(2), level, N)
        return np.outer(k, k.conj())
    raise ConfigError(f"unknown observable {name!r}")


# ---- building the two problems ------------------------------------------------------------


@dataclass
class Built:
    params: SystemParams
    target: TargetModel
    frame: FrameSpec
    rho_G0: np.ndarray
    rho_T0: np.ndarray
    H_T: np.ndarray
    H_lin: np.ndarray | None
    channels_G: list
    channels_T: list


def _rate_fn(cfg: ScenarioConfig, gamma: float):
    if cfg.spectrum == "flat":
        return flat_rate(gamma)
    return ohmic_rate(gamma, 1.0, cfg.cutoff_over_nu)


def build(cfg: ScenarioConfig) -> Built:
    N = cfg.N
    p = cfg.system_params()
    f = FrameSpec.from_params(p)
    fm = FrameMap(f, N)
    rho0 = cfg.initial.density_matrix(N)
    if cfg.initial.frame == "simulated":
        rho_T0, rho_G0 = rho0, fm.from_simulated(rho0, p.t0)
    else:
        rho_G0, rho_T0 = rho0, fm.to_simulated(rho0, p.t0)
    H_T = build_Hn_eta(p, N) if cfg.nonlinear else build_Hn(p, N)
    H_lin = build_Hn(p, N, debye_waller=True) if cfg.linear_reference else None

    nt = cfg.nu_tilde
    ch_G, ch_T = [], []
    dressed = {}
    for spec in cfg.channels:
        g = spec.rate * nt
        if g == 0:
            continue
        if spec.mode == "engineered":
            src = engineered_source(spec.kind, f, N)
            ch_G.append(Channel(g, src.jump, f"{spec.kind}~source"))
            ch_T.append(Channel(g, standard_jump(spec.kind, N), spec.kind))
            continue
        if spec.mode == "dressed":
            if spec.kind not in ("sd", "bl"):
                raise ConfigError("dressed mode supports spin dephasing and boson leakage only")
            dressed[spec.kind] = g
        else:
            ch_G.append(Channel(g, standard_jump(spec.kind, N), spec.kind))
        if spec.mode == "approx_static":
            ch_T.extend(approx_dissipator(spec.kind, f, N, rate=g))
        else:
            ch_T.append(Channel(g, ClosedFormJump(spec.kind, f, N), f"{spec.kind}~exact"))
    if dressed:
        static, driven = hg_terms(p, N)
        if driven:
            raise ConfigError("dressed dissipation needs a time-independent physical Hamiltonian (one driving)")
        ch_G.extend(dressed_dissipators(static, _rate_fn(cfg, dressed.get("sd", 0.0)),
                                        _rate_fn(cfg, dressed.get("bl", 0.0)), N))
    return Built(p, cfg.target_model(), f, rho_G0, rho_T0, H_T, H_lin, ch_G, ch_T)


def _problem(cfg: ScenarioConfig, side: str, b: Built | None = None) -> EvolutionProblem:
    b = b or build(cfg)
    N = cfg.N
    obs = {k: _observable(k, N) for k in cfg.observables}
    common = dict(t_grid=cfg.t_grid(), dt=cfg.step, store_states=True, picture=cfg.picture)
    if side == "G":
        static, driven = hg_terms(b.params, N)
        return EvolutionProblem(static, b.channels_G, b.rho_G0, H_terms=driven, name=f"{cfg.name}:G",
                                observables={k: v for k, v in obs.items() if k.startswith("phys:")}, **common)
    H = b.H_T if side == "T" else b.H_lin
    if not any(ch.time_dependent for ch in b.channels_T):
        common["dt"] = max(cfg.step, _static_dt(H, b.channels_T))
    return EvolutionProblem(H, b.channels_T, b.rho_T0, name=f"{cfg.name}:{side}",
                            observables={k: v for k, v in obs.items() if not k.startswith("phys:")}, **common)


def _static_dt(H: np.ndarray, channels) -> float:
    """Step resolving the fastest scale of a time-independent generator.

    Nothing in such a problem oscillates at the physical boson frequency,
    so the step only has to resolve the spread of the target spectrum and
    the decay rates, with the same 50 steps per period used for ``nu``.
    """
    E = np.linalg.eigvalsh(H)
    lam = E[-1] - E[0]
    for ch in channels:
        if ch.jump is not None:
            lam += ch.rate * np.linalg.norm(ch.jump, 2) ** 2
    return 2 * math.pi / (50 * max(lam, 1e-300))


def evolve_side(cfg: ScenarioConfig, side: str) -> Trajectory:
    """Evolve one of the paired problems: ``'G'`` (physical), ``'T'`` (target) or ``'L'`` (linear reference)."""
    return evolve(_problem(cfg, side))


# ---- running -------------------------------------------------------------------------------

BASE_COLUMNS = ("t", "fidelity", "infidelity", "purity_G", "purity_target", "leakage_G", "leakage_target",
                "trace_dev_G", "trace_dev_target")


@dataclass
class ScenarioResult:
    config: ScenarioConfig
    columns: dict
    traj_G: Trajectory
    traj_T: Trajectory
    traj_L: Trajectory | None
    quality: str
    wall_time: float

    @property
    def max_infidelity(self) -> float:
        return float(np.max(self.columns["infidelity"]))

    @property
    def final_fidelity(self) -> float:
        return float(self.columns["fidelity"][-1])

    def simulated_states(self) -> list:
        """``Gamma rho_G Gamma^†`` at every sample."""
        fm = FrameMap(FrameSpec.from_params(self.config.system_params()), self.config.N)
        return [fm.to_simulated(r, t, warn_leak=np.inf) for r, t in zip(self.traj_G.states, self.traj_G.times)]

    def summary(self) -> dict:
        c = self.columns
        return {
            "name": self.config.name,
            "scale": self.config.scale,
            "max_infidelity": self.max_infidelity,
            "final_fidelity": self.final_fidelity,
            "final_purity_G": float(c["purity_G"][-1]),
            "final_purity_target": float(c["purity_target"][-1]),
            "wall_time_s": self.wall_time,
            "quality": self.quality,
        }

    def write_csv(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            fh.write(self.to_csv())
        return path

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        names = list(self.columns) + ["quality"]
        w.writerow(names)
        n = len(self.columns["t"])
        for i in range(n):
            row = [_num17(self.columns[k][i]) for k in self.columns]
            w.writerow(row + [self.quality])
        return buf.getvalue()


def _num17(x) -> str:
    if np.iscomplexobj(x) and abs(np.imag(x)) > 0:
        return f"{np.real(x):.17g}{np.imag(x):+.17g}j"
    return f"{float(np.real(x)):.17g}"


def run_scenario(cfg: ScenarioConfig, *, workers: int = 1, out: str | os.PathLike | None = None,
                 echo: bool = False) -> ScenarioResult:
    """Evolve the physical and target problems and compare them through ``Gamma``.

    With ``workers > 1`` the trajectories run in separate processes.
    """
    start = time.perf_counter()
    sides = ["G", "T"] + (["L"] if cfg.linear_reference else [])
    if workers > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(sides))) as ex:
            futs = {s: ex.submit(evolve_side, cfg, s) for s in sides}
            trajs = {s: _collect(fut) for s, fut in futs.items()}
    else:
        b = build(cfg)
        trajs = {s: evolve(_problem(cfg, s, b)) for s in sides}
    tG, tT, tL = trajs["G"], trajs["T"], trajs.get("L")

    fm = FrameMap(FrameSpec.from_params(cfg.system_params()), cfg.N)
    sim = [fm.to_simulated(r, t, warn_leak=np.inf) for r, t in zip(tG.states, tG.times)]
    F = np.array([fidelity(a, b) for a, b in zip(tT.states, sim)])
    cols = {
        "t": tG.times * cfg.nu_tilde,
        "fidelity": F,
        "infidelity": np.maximum(1.0 - F, INFIDELITY_FLOOR),
    }
    if tL is not None:
        FL = np.array([fidelity(a, b) for a, b in zip(tL.states, sim)])
        cols["fidelity_linear"] = FL
        cols["infidelity_linear"] = np.maximum(1.0 - FL, INFIDELITY_FLOOR)
    cols.update({
        "purity_G": tG.purity,
        "purity_target": tT.purity,
        "leakage_G": tG.leakage,
        "leakage_target": tT.leakage,
        "trace_dev_G": tG.trace_dev,
        "trace_dev_target": tT.trace_dev,
    })
    for name in cfg.observables:
        op = _observable(name, cfg.N)
        if name.startswith("phys:"):
            cols[name] = tG.expectations[name]
            continue
        cols[f"{name}_target"] = tT.expectations[name]
        vals = np.array([np.sum(op * s.T) for s in sim])
        cols[f"{name}_sim"] = vals.real if np.allclose(vals.imag, 0, atol=1e-12) else vals

    flags = sorted(set(tG.flags) | set(tT.flags) | (set(tL.flags) if tL else set()))
    res = ScenarioResult(cfg, cols, tG, tT, tL, "ok" if not flags else ";".join(flags),
                         time.perf_counter() - start)
    if out is not None:
        res.write_csv(Path(out) / f"{cfg.name}.csv")
    if echo:
        print(format_summary(res.summary()))
    return res


def _collect(fut):
    return fut.result()


def format_summary(s: dict) -> str:
    return (f"{s['name']}: scale={s['scale']:g} max_infidelity={s['max_infidelity']:.3e} "
            f"final_fidelity={s['final_fidelity']:.6f} purity_G={s['final_purity_G']:.6f} "
            f"purity_target={s['final_purity_target']:.6f} wall={s['wall_time_s']:.1f}s quality={s['quality']}")


def _axis_value(cfg: ScenarioConfig, axis: str, value: float) -> ScenarioConfig:
    if axis.startswith("rate_") or axis in {f.name for f in fields(cfg)}:
        if axis in ("N", "samples", "n"):
            value = int(value)
        return cfg.with_overrides(**{axis: value})
    raise ConfigError(f"sweep axis {axis!r} is not a numeric scenario field")


def _point(args):
    cfg, out = args
    return run_scenario(cfg, out=out)


def run_sweep(cfg: ScenarioConfig, axis: str, values, *, workers: int = 1,
              out: str | os.PathLike | None = None) -> tuple[list[ScenarioResult], list[dict]]:
    """Run ``cfg`` once per value of ``axis``; returns the results and a summary table."""
    values = [parse_number(v) for v in values]
    if not values:
        raise ConfigError("sweep needs at least one value")
    cfgs = [replace(_axis_value(cfg, axis, v), name=f"{cfg.name}_{axis}={v:g}") for v in values]
    jobs = [(c, out) for c in cfgs]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_point, jobs))
    else:
        results = [_point(j) for j in jobs]
    table = [{"value": v, "max_infidelity": r.max_infidelity, "final_fidelity": r.final_fidelity,
              "quality": r.quality} for v, r in zip(values, results)]
    if out is not None:
        _write_table(Path(out) / f"{cfg.name}_sweep_{axis}.csv", table)
    return results, table


def rwa_convergence(cfg: ScenarioConfig, scales, *, workers: int = 1,
                    out: str | os.PathLike | None = None) -> tuple[list[dict], bool | None]:
    """Maximum infidelity per hierarchy factor and whether it strictly decreases.

    The monotonicity verdict is ``None`` for a single scale.
    """
    scales = [parse_number(s) for s in scales]
    if any(b <= a for a, b in zip(scales, scales[1:])):
        raise ConfigError("scales must be strictly ascending")
    _, table = run_sweep(cfg, "scale", scales, workers=workers, out=out)
    rows = [{"scale": r["value"], "max_infidelity": r["max_infidelity"], "quality": r["quality"]} for r in table]
    mono = None
    if len(rows) > 1:
        vals = [r["max_infidelity"] for r in rows]
        mono = all(b < a for a, b in zip(vals, vals[1:]))
    if out is not None:
        _write_table(Path(out) / f"{cfg.name}_convergence.csv", rows)
    return rows, mono


def _write_table(path: Path, rows: list[dict]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: (_num17(v) if isinstance(v, float) else v) for k, v in r.items()})


def quality_failed(quality: str) -> bool:
    return any(flag in quality.split(";") for flag in ("trace", "positivity", "leakage"))


__all__ = [
    "ChannelSpec",
    "InitialSpec",
    "ScenarioConfig",
    "ScenarioResult",
    "build",
    "evolve_side",
    "format_summary",
    "parse_number",
    "quality_failed",
    "run_scenario",
    "run_sweep",
    "rwa_convergence",
    "NumericalQualityError",
]
