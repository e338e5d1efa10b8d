"""Built-in scenarios.

Each preset fixes the dimensionless ratios (couplings, rates and the spin
frequency in units of ``nu_tilde``, and ``eta`` where it is independent) so
that changing ``scale = nu / nu_tilde`` is a one-knob operation.
``paper_scale`` records the hierarchy used in the original figures.
"""

from __future__ import annotations

import math

from .errors import ConfigError
from .scenario import ChannelSpec, InitialSpec, ScenarioConfig

_PRESETS = {
    # one-boson JCM: g = nu_tilde/2 at eta = 0.05, hence Omega_0 = 20 nu_tilde
    "fig2_1JCM": dict(
        kind="nJCM", n=1, eta=0.05, g_over_nu_tilde=0.5, omega_tilde_over_nu_tilde=1.0, bias="stark",
        channels=(ChannelSpec("bl", 0.5, "approx_static"), ChannelSpec("sd", 1 / 40, "approx_static")),
        initial=InitialSpec("fock 0", "e", "simulated"),
        paper_scale=2000.0, N=20, t_end=20 * math.pi, samples=401,
    ),
    "fig2_2JCM": dict(
        kind="nJCM", n=2, eta=math.sqrt(0.02), g_over_nu_tilde=0.1, omega_tilde_over_nu_tilde=2.0, bias="stark",
        channels=(ChannelSpec("bl", 0.5, "approx_static"), ChannelSpec("sd", 1 / 40, "approx_static")),
        initial=InitialSpec("fock 0", "e", "simulated"),
        paper_scale=2000.0, N=20, t_end=20 * math.pi, samples=401,
    ),
    # Omega_0 = Omega_1 = 50 nu_tilde; eta follows from the coupling
    "fig3_1QRM": dict(
        kind="nQRM", n=1, g_over_nu_tilde=1.25, amplitude_over_nu_tilde=50.0, omega_tilde_over_nu_tilde=0.0,
        channels=(ChannelSpec("bl", 1 / 50, "approx_static"), ChannelSpec("sd", 1 / 100, "approx_static")),
        initial=InitialSpec("coherent 0.5", "e", "simulated"),
        paper_scale=5000.0, N=40, t_end=4 * math.pi,
        observables=("sz", "n"),
    ),
    "fig3_2QRM": dict(
        kind="nQRM", n=2, g_over_nu_tilde=0.1, amplitude_over_nu_tilde=50.0, omega_tilde_over_nu_tilde=2.0,
        channels=(ChannelSpec("bl", 1 / 50, "approx_static"), ChannelSpec("sd", 1 / 100, "approx_static")),
        initial=InitialSpec("thermal 0.25", "+", "simulated"),
        paper_scale=5000.0, N=20, t_end=10 * math.pi,
    ),
    # nu_tilde = Omega_0 |f_1(0)| / 4, i.e. g = Omega_0 |f_1(0)| / 2 = 2 nu_tilde
    "fig4_1aJCM": dict(
        kind="naJCM_eta", n=1, eta=0.8, g_over_nu_tilde=2.0, coupling_convention="fn",
        omega_tilde_over_nu_tilde=1.0, bias="stark",
        channels=(ChannelSpec("bl", 0.5, "exact_transformed"),),
        initial=InitialSpec("thermal 0.75", "g", "physical"),
        paper_scale=1000.0, N=30, t_end=10 * math.pi, linear_reference=True,
    ),
    # Omega_0 ~ nu/130 at the original hierarchy: g = Omega_0 |f_1(0)| / 2 = 2 nu_tilde
    "fig5_blockade": dict(
        kind="naJCM_eta", n=1, eta=0.639, g_over_nu_tilde=2.0, coupling_convention="fn",
        omega_tilde_over_nu_tilde=1.0, bias="stark",
        channels=(ChannelSpec("se", 4.0, "engineered"),),
        initial=InitialSpec("fock 0", "g", "simulated"),
        paper_scale=1000.0, N=32, t_end=40 * math.pi,
        observables=("sz", "n", "pop:8g"),
    ),
    # beyond-Lamb-Dicke spin dephasing: nu_tilde = Omega_0 |f_1(0)| / 2
    "appD_sd": dict(
        kind="Hn_eta", n=1, red=(1,), eta=0.8, g_over_nu_tilde=1.0, coupling_convention="fn",
        omega_tilde_over_nu_tilde=1.0, bias="stark",
        channels=(ChannelSpec("sd", 1.0, "exact_transformed"), ChannelSpec("bl", 0.5, "exact_transformed")),
        initial=InitialSpec("fock 0", "+", "physical"),
        paper_scale=100.0, scale=100.0, N=24, t_end=10 * math.pi,
    ),
    "appD_se": dict(
        kind="Hn_eta", n=1, red=(1,), eta=0.8, g_over_nu_tilde=1.0, coupling_convention="fn",
        omega_tilde_over_nu_tilde=1.0, bias="stark",
        channels=(ChannelSpec("se", 1.0, "exact_transformed"), ChannelSpec("bl", 0.5, "exact_transformed")),
        initial=InitialSpec("fock 0", "e", "physical"),
        paper_scale=100.0, scale=100.0, N=24, t_end=10 * math.pi,
    ),
}

PRESET_NAMES = tuple(_PRESETS)


def preset_config(name: str, scale: float | None = None) -> ScenarioConfig:
    try:
        kw = dict(_PRESETS[name])
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(PRESET_NAMES)}") from None
    if scale is not None:
        kw["scale"] = float(scale)
    return ScenarioConfig(name=name, **kw)


def preset(name: str, scale: float | None = None):
    """``(SystemParams, TargetModel, channel specs, initial-state spec)`` of a built-in scenario."""
    cfg = preset_config(name, scale)
    return cfg.system_params(), cfg.target_model(), list(cfg.channels), cfg.initial
