"""Acceptance criteria 1-12, one test per criterion.

Each test records what it measured through the ``criterion`` fixture; the
values are printed as one PASS/FAIL line per criterion at the end of the
session (see conftest.py). Tolerances are the ones stated for acceptance;
the long scenario runs carry the ``slow`` marker and run at scale 200
unless noted.
"""

import math
import os
import warnings
from dataclasses import replace

import numpy as np
import pytest
from scipy.signal import argrelmax

from spinboson.dissipators import (
    KINDS,
    Channel,
    ClosedFormJump,
    dissipator,
    engineered_source,
    standard_jump,
    transformed_jump_numeric,
)
from spinboson.engine import EvolutionProblem, evolve
from spinboson.frames import FrameMap, FrameSpec
from spinboson.model import DrivingTerm, SystemParams, build_HG, f_n_diagonal, hg_terms, remove_A2, squeezed_frame
from spinboson.observables import coherent_state, expect, fidelity, product_state
from spinboson.operators import SIGMA_Y, SIGMA_Z, dag, displacement, embed, fock_annihilate, interior_max_diff, number_op
from spinboson.presets import preset_config
from spinboson.scenario import ChannelSpec, build, evolve_side, run_scenario

SKIP_PAPER_SCALE = os.environ.get("SPINBOSON_SKIP_PAPER_SCALE", "") not in ("", "0")
quiet = pytest.mark.filterwarnings("ignore::spinboson.frames.TruncationWarning")


def red_frame(eta, nt=0.005):
    return FrameSpec(delta0=(nt - 1.0) - nt, nu=1.0, nu_tilde=nt, omega_tilde=nt, eta=eta)


def random_low_state(rng, N, levels=6):
    idx = np.concatenate([np.arange(levels), N + np.arange(levels)])
    G = rng.normal(size=(len(idx),) * 2) + 1j * rng.normal(size=(len(idx),) * 2)
    rho = np.zeros((2 * N, 2 * N), complex)
    rho[np.ix_(idx, idx)] = G @ dag(G) / np.trace(G @ dag(G))
    return rho


def test_criterion_01_transformed_jump_oracle(criterion):
    N, keep = 30, 18
    rng = np.random.default_rng(2024)
    worst = 0.0
    for eta in (0.05, 0.4, 0.8):
        f = red_frame(eta)
        for kind in KINDS:
            F = standard_jump(kind, N)
            cf = ClosedFormJump(kind, f, N, keep_constant=True)
            for t in rng.uniform(0, 5000, 20):
                worst = max(worst, interior_max_diff(cf(t), transformed_jump_numeric(F, t, f, N), keep))
    criterion(1, worst <= 1e-8, f"max interior deviation {worst:.2e} (6 kinds x 3 eta x 20 t, N=30)")
    assert worst <= 1e-8


def test_criterion_02_engineered_emission(criterion):
    N, keep = 30, 18
    rng = np.random.default_rng(11)
    worst = 0.0
    sm = standard_jump("se", N)
    for eta in (0.1, 0.639, 0.8):
        f = red_frame(eta, nt=1e-3)
        fm = FrameMap(f, N)
        # the source written out by hand, compared with the library's pullback
        src = 0.5 * embed(np.eye(2), displacement(1j * eta, N)) @ embed(SIGMA_Z - 1j * SIGMA_Y, None, N)
        lib = engineered_source("se", f, N)
        worst = max(worst, interior_max_diff(lib.jump, src, keep))
        for t in rng.uniform(0, 5000, 10):
            rho = random_low_state(rng, N)
            img = fm.transform(src, t)
            worst = max(worst, interior_max_diff(dissipator(img, rho), dissipator(sm, rho), keep))
    criterion(2, worst <= 1e-8, f"max superaction deviation {worst:.2e} (eta 0.1, 0.639, 0.8; 10 states each)")
    assert worst <= 1e-8


def _series_f1(eta, N):
    a = fock_annihilate(N)
    out = np.zeros((N, N), complex)
    Ak = np.eye(N, dtype=complex)
    for k in range(N):
        out += (1j * eta) ** (2 * k) / (math.factorial(k) * math.factorial(k + 1)) * Ak
        Ak = dag(a) @ Ak @ a
    return math.exp(-(eta**2) / 2) * (1j * eta) * np.diag(out)


def test_criterion_03_blockade_root(criterion):
    eta = 0.639
    oracle = _series_f1(eta, 60)
    fn = f_n_diagonal(1, eta, 60)
    agree = np.max(np.abs(fn - oracle))
    ratio = abs(fn[8]) / abs(fn[0])
    ok = ratio <= 1e-3 and agree <= 1e-10
    criterion(3, ok, f"|f1(8)|/|f1(0)| = {ratio:.4e} at eta=0.639 (series oracle agrees to {agree:.1e}; exact root 0.63983)")
    assert agree <= 1e-10
    assert ratio <= 1e-3


def _fig2_bl_only(scale):
    cfg = preset_config("fig2_1JCM", scale)
    return replace(cfg, channels=tuple(c for c in cfg.channels if c.kind == "bl"), samples=201)


@pytest.mark.slow
@quiet
def test_criterion_04_njcm_reproduction(criterion):
    res = run_scenario(_fig2_bl_only(200))
    mi = res.max_infidelity
    criterion(4, mi <= 5e-2, f"scale 200: max infidelity {mi:.3e} (bound 5e-2), wall {res.wall_time:.0f}s")
    assert mi <= 5e-2


@pytest.mark.slow
@pytest.mark.skipif(SKIP_PAPER_SCALE, reason="SPINBOSON_SKIP_PAPER_SCALE is set")
@quiet
def test_criterion_04_paper_scale(criterion):
    res = run_scenario(_fig2_bl_only(2000))
    mi = res.max_infidelity
    criterion("4p", mi <= 1e-2, f"scale 2000: max infidelity {mi:.3e} (bound 1e-2), wall {res.wall_time:.0f}s")
    assert mi <= 1e-2


@pytest.mark.slow
@quiet
def test_criterion_05_qrm_collapse_revival(criterion):
    res = run_scenario(preset_config("fig3_1QRM", 200))
    c = res.columns
    t = c["t"]
    window = t <= 4 * math.pi + 1e-9
    peaks = argrelmax(c["n_sim"][window])[0]
    fmin = float(np.min(c["fidelity"][window]))
    ok = len(peaks) >= 2 and fmin >= 0.9
    where = ", ".join(f"{t[i]:.2f}" for i in peaks)
    criterion(5, ok, f"<a^+a> maxima at t*nu_tilde = [{where}], min fidelity {fmin:.4f}")
    assert len(peaks) >= 2
    assert fmin >= 0.9


@pytest.mark.slow
@quiet
def test_criterion_06_nonlinear_steady_state(criterion):
    res = run_scenario(preset_config("fig4_1aJCM", 200))
    c = res.columns
    dp = abs(c["purity_G"][-1] - c["purity_target"][-1])
    inf_nl = 1 - c["fidelity"][-1]
    inf_lin = 1 - c["fidelity_linear"][-1]
    transient = np.max(c["infidelity_linear"]) / np.max(c["infidelity"])
    ok = dp <= 1e-6 and inf_nl <= 1e-3 and inf_lin >= 10 * inf_nl
    criterion(
        6, ok,
        f"|dpurity| = {dp:.2e} (bound 1e-6); final infidelity nonlinear {inf_nl:.2e}, linear {inf_lin:.2e} "
        f"(ratio {inf_lin / inf_nl:.2f}, needs >= 10); max-over-time ratio {transient:.1f}",
    )
    assert inf_nl <= 1e-3
    assert dp <= 1e-6
    assert inf_lin >= 10 * inf_nl


@pytest.mark.slow
@quiet
def test_criterion_07_fock_state_preparation(criterion):
    res = run_scenario(preset_config("fig5_blockade", 200))
    c = res.columns
    pop = c["pop:8g_sim"][-1]
    fmin = float(np.min(c["fidelity"]))
    ok = pop >= 0.99 and fmin >= 0.995
    criterion(7, ok, f"pop(8,g) at 40pi/nu_tilde = {pop:.4f} (target model {c['pop:8g_target'][-1]:.4f}); "
                     f"min fidelity {fmin:.4f}; quality {res.quality}")
    assert pop >= 0.99
    assert fmin >= 0.995


def _sd_final(eta, mode):
    cfg = preset_config("appD_sd")
    cfg = replace(cfg, eta=eta, channels=(ChannelSpec("sd", 1.0, mode),), samples=3)
    return evolve_side(cfg, "T").states[-1]


@pytest.mark.slow
def test_criterion_08_spin_dephasing_two_sided(criterion):
    F_big = fidelity(_sd_final(0.8, "approx_static"), _sd_final(0.8, "exact_transformed"))
    F_small = fidelity(_sd_final(0.05, "approx_static"), _sd_final(0.05, "exact_transformed"))
    ok = F_big <= 0.9 and F_small >= 0.99
    criterion(8, ok, f"approx vs exact final fidelity: eta=0.8 -> {F_big:.4f} (<= 0.9), eta=0.05 -> {F_small:.6f} (>= 0.99)")
    assert F_big <= 0.9
    assert F_small >= 0.99


@pytest.mark.slow
@quiet
def test_criterion_09_rwa_convergence(criterion):
    scales = (100, 200, 500)
    mi = [run_scenario(preset_config("fig2_1JCM", s)).max_infidelity for s in scales]
    ok = all(b < a for a, b in zip(mi, mi[1:]))
    criterion(9, ok, "max infidelity " + ", ".join(f"{s}: {m:.3e}" for s, m in zip(scales, mi)))
    assert ok


def _damped_cavity(dt, picture):
    N, gamma, alpha = 25, 0.5, 1.5
    n = embed(None, number_op(N))
    ts = np.linspace(0, 4, 5)
    prob = EvolutionProblem(n, [Channel(gamma, embed(None, fock_annihilate(N)))], product_state("g", coherent_state(alpha, N)),
                            ts, dt, observables={"n": n}, picture=picture)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        traj = evolve(prob)
    exact = alpha**2 * np.exp(-gamma * ts)
    return np.max(np.abs(traj.expectations["n"] - exact) / exact), traj


def test_criterion_10_engine_properties(criterion):
    err, traj = _damped_cavity(0.05, "interaction")
    drift = float(np.max(traj.trace_dev))
    mineig = float(np.min(traj.min_eig))
    e1, _ = _damped_cavity(0.2, "lab")
    e2, _ = _damped_cavity(0.1, "lab")
    order = math.log2(e1 / e2)
    ok = drift <= 1e-6 and mineig >= -1e-6 and err <= 1e-6 and 3.5 <= order <= 4.5
    criterion(10, ok, f"trace drift {drift:.1e}, min eigenvalue {mineig:.1e}, <n> rel. error {err:.1e}, RK4 order {order:.2f}")
    assert drift <= 1e-6 and mineig >= -1e-6
    assert err <= 1e-6
    assert 3.5 <= order <= 4.5


def test_criterion_11_A2_removal(criterion):
    N = 60
    p = SystemParams(eta=0.3, drivings=(DrivingTerm(0.2, -0.5),), nu_tilde=0.01, omega_tilde=0.01)
    worst = 0.0
    for D in (0.0, 0.1, 0.25):
        r = remove_A2(p, D)
        Hs = squeezed_frame(build_HG(p, 0.0, N, a2=D, quadrature="x"), r.z_s, N)
        E_sq = np.linalg.eigvalsh(Hs)[: N // 2]
        E_ren = np.linalg.eigvalsh(build_HG(r.params, 0.0, N, quadrature="x"))[: N // 2] + r.constant
        worst = max(worst, float(np.max(np.abs(E_sq - E_ren))))
    criterion(11, worst <= 1e-6, f"max eigenvalue mismatch {worst:.1e} nu over the lowest N/2 (D = 0, 0.1, 0.25)")
    assert worst <= 1e-6


def _liouvillian_steady(H, channels):
    """Null-space oracle for a static generator (explicit jumps only)."""
    d = H.shape[0]
    I = np.eye(d)
    L = -1j * (np.kron(H, I) - np.kron(I, H.T))
    for ch in channels:
        F = ch.at(0.0)
        FdF = dag(F) @ F
        L += ch.rate * (np.kron(F, F.conj()) - 0.5 * np.kron(FdF, I) - 0.5 * np.kron(I, FdF.T))
    L[0, :] = 0
    L[0, np.arange(d) * (d + 1)] = 1
    rhs = np.zeros(d * d, complex)
    rhs[0] = 1
    return np.linalg.solve(L, rhs).reshape(d, d)


@pytest.mark.slow
@quiet
def test_criterion_12_dressed_vs_bare(criterion):
    base = replace(preset_config("fig4_1aJCM", 200), observables=("phys:n",), samples=11, linear_reference=False)
    n_final = {}
    for mode in ("exact_transformed", "dressed"):
        cfg = replace(base, channels=(ChannelSpec("bl", 0.5, mode),))
        n_final[mode] = evolve_side(cfg, "G").expectations["phys:n"][-1]
    diff = abs(n_final["dressed"] - n_final["exact_transformed"])
    # cross-check that the evolved bare value is stationary
    bare = build(replace(base, channels=(ChannelSpec("bl", 0.5, "exact_transformed"),)))
    H, _ = hg_terms(bare.params, base.N)
    rho_ss = _liouvillian_steady(H, bare.channels_G)
    n_ss = expect(embed(None, number_op(base.N)), rho_ss).real
    criterion(
        12, diff <= 5e-2,
        f"steady <a^+a>: bare {n_final['exact_transformed']:.5f}, dressed {n_final['dressed']:.5f}, |diff| {diff:.2e} "
        f"(null-space oracle for bare {n_ss:.5f})",
    )
    assert abs(n_final["exact_transformed"] - n_ss) <= 1e-2
    assert diff <= 5e-2
