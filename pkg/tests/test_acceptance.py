"""The nine acceptance criteria, each at its stated tolerance and time limit."""

import math
import time

import numpy as np
import pytest

from cosmoent.cosmology import (
    MODE_A,
    MODE_ABAR,
    MODE_B,
    MODE_BBAR,
    BogoliubovData,
    ExpansionModel,
    InitialState,
    bogoliubov,
    fock_amplitudes,
    fock_cutoff,
    frequencies,
    log_bogoliubov_moduli_via_gamma,
    log_theta,
    out_state,
)
from cosmoent.entanglement import (
    EofSettings,
    entanglement_a_abar_closed,
    entanglement_ab_closed,
    gaussian_renyi2_eof_numeric,
    is_ppt_separable,
    one_to_three_entanglement,
    residual_breakdown,
    residual_closed,
)
from cosmoent.figures import figure_config, run_sweep
from cosmoent.inverse import (
    FitProblem,
    ParameterPoint,
    fit_parameters,
    sensitivity,
    synthetic_observations,
)
from cosmoent.phasespace import ModePartition, partial_trace, symplectic_eigenvalues

LN_COSH_2 = math.log(math.cosh(2.0))


def state_grid(n_s=11, n_t=10, t2_max=0.95):
    """The (s, theta) grid shared by criteria 3, 5 and 6."""
    return [(float(s), math.sqrt(t2)) for s in np.linspace(0.0, 2.0, n_s) for t2 in np.linspace(0.0, t2_max, n_t)]


def test_criterion_1_asymptotic_limit(record_criterion):
    t0 = time.perf_counter()
    model = ExpansionModel(epsilon=1.0, sigma_rate=1.0, mass=1.0)
    ks = np.geomspace(1.0, 1e3, 40)
    values = [entanglement_ab_closed(1.0, bogoliubov(frequencies(k, model), model).theta) for k in ks]
    gap = abs(values[-1] - LN_COSH_2)
    approaching = all(b >= a for a, b in zip(values, values[1:]))
    dt = time.perf_counter() - t0
    ok = gap < 1e-6 and approaching and dt < 1.0
    record_criterion(1, "E_AB(k) -> ln cosh 2", ok, dt, f"gap at k=1e3: {gap:.2e}")
    assert ok


def test_criterion_2_bogoliubov_consistency(record_criterion):
    t0 = time.perf_counter()
    worst_unit, worst_alpha, worst_beta, worst_log_beta = 0.0, 0.0, 0.0, 0.0
    # 100 x 100 log-grid in (k, sigma) with m = epsilon = 1
    for k in np.geomspace(1e-2, 1e2, 100):
        for sig in np.geomspace(1e-2, 1e2, 100):
            model = ExpansionModel(epsilon=1.0, sigma_rate=float(sig), mass=1.0)
            mode = frequencies(float(k), model)
            bog = bogoliubov(mode, model)
            a2, b2 = bog.alpha_mod**2, bog.beta_mod**2
            worst_unit = max(worst_unit, abs(a2 - b2 - 1.0))
            la, lb = log_bogoliubov_moduli_via_gamma(mode, model)
            worst_alpha = max(worst_alpha, abs(math.expm1(la - math.log(a2))))
            if b2 > 1e-300:
                worst_beta = max(worst_beta, abs(math.exp(lb) / b2 - 1.0))
            else:
                # |beta|^2 underflows: compare logarithms instead
                lt = log_theta(mode, model)
                ref = 2 * lt - math.log1p(-math.exp(2 * lt))
                worst_log_beta = max(worst_log_beta, abs(lb - ref) / abs(ref))
    dt = time.perf_counter() - t0
    ok = worst_unit <= 1e-12 and worst_alpha <= 1e-10 and worst_beta <= 1e-10 and worst_log_beta <= 1e-10 and dt < 5.0
    detail = (
        f"unitarity {worst_unit:.1e}, alpha {worst_alpha:.1e}, beta {worst_beta:.1e}, "
        f"ln beta (underflow region) {worst_log_beta:.1e}"
    )
    record_criterion(2, "Bogoliubov consistency on 1e4 grid", ok, dt, detail)
    assert ok


def test_criterion_3_purity_and_physicality(record_criterion):
    t0 = time.perf_counter()
    worst_det, worst_nu = 0.0, math.inf
    for s, theta in state_grid(21, 20):
        cm4 = out_state(InitialState(s), BogoliubovData.from_theta(theta))
        worst_det = max(worst_det, abs(cm4.det - 1.0))
        for pair in ((MODE_A, MODE_B), (MODE_A, MODE_BBAR), (MODE_ABAR, MODE_B), (MODE_ABAR, MODE_BBAR)):
            worst_nu = min(worst_nu, min(symplectic_eigenvalues(partial_trace(cm4, pair))))
    dt = time.perf_counter() - t0
    ok = worst_det <= 1e-9 and worst_nu >= 1.0 - 1e-9 and dt < 10.0
    record_criterion(3, "out-state pure, reductions physical", ok, dt, f"|det-1| {worst_det:.1e}, min nu {worst_nu:.12f}")
    assert ok


def test_criterion_4_closed_forms_vs_minimizer(record_criterion):
    t0 = time.perf_counter()
    rng = np.random.default_rng(20240601)
    worst = 0.0
    for _ in range(20):
        s, t2 = rng.uniform(0.0, 2.0), rng.uniform(0.0, 0.5)
        theta = math.sqrt(t2)
        cm4 = out_state(InitialState(s), BogoliubovData.from_theta(theta))
        e_ab = gaussian_renyi2_eof_numeric(partial_trace(cm4, [MODE_A, MODE_B])).value
        e_aa = gaussian_renyi2_eof_numeric(partial_trace(cm4, [MODE_A, MODE_ABAR])).value
        worst = max(worst, abs(e_ab - entanglement_ab_closed(s, theta)), abs(e_aa - entanglement_a_abar_closed(theta)))
    dt = time.perf_counter() - t0
    ok = worst <= 1e-4 and dt < 120.0
    record_criterion(4, "closed forms vs numerical minimizer (20 points)", ok, dt, f"max |diff| {worst:.1e}")
    assert ok


def test_criterion_5_zero_entanglement_witnesses(record_criterion):
    t0 = time.perf_counter()
    # The witness short-circuit is off so the search itself must find zero.
    search_only = EofSettings(use_witness=False)
    all_ppt, worst = True, 0.0
    for s, theta in state_grid(6, 6, 0.9):
        cm4 = out_state(InitialState(s), BogoliubovData.from_theta(theta))
        for pair in ((MODE_A, MODE_BBAR), (MODE_ABAR, MODE_B)):
            red = partial_trace(cm4, pair)
            all_ppt &= is_ppt_separable(red)
            worst = max(worst, gaussian_renyi2_eof_numeric(red, search_only).value)
    dt = time.perf_counter() - t0
    ok = all_ppt and worst < 1e-6 and dt < 60.0
    record_criterion(5, "A-Bbar and Abar-B separable", ok, dt, f"PPT everywhere: {all_ppt}, max minimizer value {worst:.1e}")
    assert ok


def test_criterion_6_monogamy(record_criterion):
    t0 = time.perf_counter()
    worst_res, worst_identity = math.inf, 0.0
    for s, theta in state_grid(21, 20):
        b = residual_breakdown(InitialState(s), BogoliubovData.from_theta(theta))
        worst_res = min(worst_res, b.value, b.via_a, b.via_abar)
        cm4 = out_state(InitialState(s), BogoliubovData.from_theta(theta))
        lhs = one_to_three_entanglement(cm4, ModePartition([MODE_ABAR])) - entanglement_a_abar_closed(theta)
        worst_identity = max(worst_identity, abs(lhs - residual_closed(s, theta)))
    dt = time.perf_counter() - t0
    ok = worst_res >= -1e-9 and worst_identity <= 1e-10 and dt < 10.0
    record_criterion(6, "residual >= 0 and Abar-probe identity", ok, dt, f"min residual {worst_res:.1e}, identity {worst_identity:.1e}")
    assert ok


def _monotone(y, sign):
    return bool(np.all(sign * np.diff(y) >= -1e-12 * np.maximum(1.0, np.abs(y[1:]))))


def test_criterion_7_figure_shapes(record_criterion):
    t0 = time.perf_counter()
    failures = []
    t = run_sweep(figure_config("fig1a"))
    if not all(_monotone(t.curve(i), -1) for i in range(4)):
        failures.append("fig1a not decreasing in sigma")
    if not np.all(np.diff(t.rows[:, 1:], axis=1) >= 0):
        failures.append("fig1a curves not ordered in k")
    t = run_sweep(figure_config("fig2a"))
    if not all(_monotone(t.curve(i), +1) for i in range(4)):
        failures.append("fig2a not increasing in sigma")
    t = run_sweep(figure_config("fig1b"))
    for i in range(4):
        y = t.curve(i)
        j = int(np.argmin(y))
        if not (0 < j < len(y) - 1 and y[j] < y[0] and y[j] < y[-1]):
            failures.append(f"fig1b curve {i} has no interior minimum")
        if abs(y[0] - LN_COSH_2) >= 1e-3 or abs(y[-1] - LN_COSH_2) >= 1e-3:
            failures.append(f"fig1b curve {i} tails")
    if t.x[0] != pytest.approx(1e-3) or t.x[-1] != pytest.approx(1e3):
        failures.append("fig1b mass range")
    for name in ("fig3a", "fig3d"):
        t = run_sweep(figure_config(name))
        if not all(_monotone(t.curve(i), +1) for i in range(4)):
            failures.append(f"{name} not increasing in sigma")
    for name in ("fig3b", "fig3e"):
        t = run_sweep(figure_config(name))
        if not all(_monotone(t.curve(i), +1) for i in range(4)):
            failures.append(f"{name} not increasing in epsilon")
    for name in ("fig4a", "fig4b"):
        if np.any(run_sweep(figure_config(name)).rows[:, 1:] < 0):
            failures.append(f"{name} negative")
    dt = time.perf_counter() - t0
    ok = not failures and dt < 30.0
    record_criterion(7, "figure shapes", ok, dt, "; ".join(failures))
    assert ok, failures


def test_criterion_8_fock_cross_check(record_criterion):
    t0 = time.perf_counter()
    worst_norm, worst_mean = 0.0, 0.0
    for t2 in np.linspace(0.0, 0.95, 96):
        theta = math.sqrt(t2)
        n_max = fock_cutoff(theta)
        assert theta == 0.0 or theta ** (2 * n_max) < 1e-14
        p = fock_amplitudes(theta, n_max) ** 2
        worst_norm = max(worst_norm, abs(p.sum() - 1.0))
        want = t2 / (1.0 - t2)
        if want > 0:
            worst_mean = max(worst_mean, abs(np.dot(np.arange(n_max + 1), p) / want - 1.0))
    dt = time.perf_counter() - t0
    ok = worst_norm <= 1e-10 and worst_mean <= 1e-8 and dt < 1.0
    record_criterion(8, "Fock amplitudes", ok, dt, f"norm {worst_norm:.1e}, mean rel {worst_mean:.1e}")
    assert ok


def test_criterion_9_inverse_round_trip(record_criterion):
    t0 = time.perf_counter()
    rng = np.random.default_rng(31415)
    requests = [("E_AAbar", k) for k in (0.5, 1.0, 2.0)] + [("residual", k) for k in (0.5, 1.0, 2.0)]
    worst = 0.0
    for _ in range(10):
        eps, sig = np.exp(rng.uniform(math.log(0.2), math.log(5.0), 2))
        truth = {"mass": 1.0, "s": 1.0, "epsilon": eps, "sigma_rate": sig}
        problem = FitProblem(
            synthetic_observations(truth, requests),
            known={"mass": 1.0, "s": 1.0},
            unknown={"epsilon": (0.1, 10.0), "sigma_rate": (0.1, 10.0)},
        )
        est = fit_parameters(problem).estimates
        worst = max(worst, abs(est["epsilon"] / eps - 1.0), abs(est["sigma_rate"] / sig - 1.0))

    # monotonicity claims at interior points
    sign_failures = []
    for k in (0.5, 1.0, 2.0):
        for eps in (0.5, 1.0, 2.0):
            for sig in (0.5, 1.0, 2.0):
                p = ParameterPoint(k=k, mass=1.0, epsilon=eps, sigma_rate=sig, s=1.0)
                d = sensitivity(p, "E_AB")
                if not (d.d_epsilon < 0 and d.d_sigma_rate < 0):
                    sign_failures.append(("E_AB", k, eps, sig))
                for q in ("E_AAbar", "residual"):
                    d = sensitivity(p, q)
                    if not (d.d_epsilon > 0 and d.d_sigma_rate > 0):
                        sign_failures.append((q, k, eps, sig))
    dt = time.perf_counter() - t0
    ok = worst <= 1e-3 and not sign_failures and dt < 60.0
    record_criterion(9, "inverse round trip and sensitivity signs", ok, dt, f"max rel error {worst:.1e}, sign failures {len(sign_failures)}")
    assert ok, sign_failures
