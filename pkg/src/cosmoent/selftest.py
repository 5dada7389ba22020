"""Runtime invariant suites behind ``cosmoent selftest``."""

from __future__ import annotations

import contextlib
import math
import time
from dataclasses import dataclass
from typing import Callable, Iterator
from unittest import mock

import numpy as np

from . import entanglement as ent
from .cosmology import (
    MODE_A,
    MODE_ABAR,
    MODE_B,
    MODE_BBAR,
    BogoliubovData,
    ExpansionModel,
    InitialState,
    bogoliubov,
    bogoliubov_moduli_via_gamma,
    fock_amplitudes,
    fock_cutoff,
    frequencies,
    log_bogoliubov_moduli_via_gamma,
    log_theta,
    out_state,
)
from .figures import figure_config, run_sweep
from .inverse import FitProblem, ParameterPoint, fit_parameters, sensitivity, synthetic_observations
from .phasespace import partial_trace, symplectic_eigenvalues

LN_COSH_2 = math.log(math.cosh(2.0))


class SuiteFailure(AssertionError):
    pass


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise SuiteFailure(message)


def _theta_grid(n: int) -> Iterator[tuple[float, float]]:
    for s in np.linspace(0.0, 2.0, n):
        for t2 in np.linspace(0.0, 0.9, n):
            yield float(s), math.sqrt(t2)


def suite_bogoliubov(quick: bool) -> None:
    n = 20 if quick else 100
    for k in np.geomspace(1e-2, 1e2, n):
        for sig in np.geomspace(0.1, 10.0, n):
            model = ExpansionModel(epsilon=1.0, sigma_rate=float(sig), mass=1.0)
            mode = frequencies(float(k), model)
            bog = bogoliubov(mode, model)
            a2, b2 = bog.alpha_mod**2, bog.beta_mod**2
            _require(abs(a2 - b2 - 1.0) <= 1e-12 * a2, f"|alpha|^2 - |beta|^2 = {a2 - b2!r} at k={k}, sigma={sig}")
            la, lb = log_bogoliubov_moduli_via_gamma(mode, model)
            ga, gb = bogoliubov_moduli_via_gamma(mode, model)
            _require(abs(ga / a2 - 1.0) <= 1e-10, f"gamma-route |alpha|^2 mismatch at k={k}, sigma={sig}")
            if b2 > 1e-300:
                _require(abs(gb / b2 - 1.0) <= 1e-10, f"gamma-route |beta|^2 mismatch at k={k}, sigma={sig}")
            else:
                lt = log_theta(mode, model)
                ref = 2 * lt - math.log1p(-math.exp(2 * lt))
                _require(abs(lb - ref) <= 1e-10 * abs(ref), f"gamma-route ln|beta|^2 mismatch at k={k}, sigma={sig}")


def suite_purity(quick: bool) -> None:
    for s, theta in _theta_grid(6 if quick else 15):
        cm4 = out_state(InitialState(s), BogoliubovData.from_theta(theta))
        _require(abs(cm4.det - 1.0) <= 1e-9 * max(1.0, np.abs(cm4.data).max() ** 2), f"det = {cm4.det!r} at s={s}")
        for pair in ((MODE_A, MODE_B), (MODE_A, MODE_BBAR), (MODE_ABAR, MODE_B), (MODE_ABAR, MODE_BBAR)):
            nu = symplectic_eigenvalues(partial_trace(cm4, pair))
            _require(min(nu) >= 1.0 - 1e-9, f"unphysical reduction {pair} at s={s}, theta={theta}")


def suite_witnesses(quick: bool) -> None:
    for s, theta in _theta_grid(4 if quick else 10):
        cm4 = out_state(InitialState(s), BogoliubovData.from_theta(theta))
        for pair in ((MODE_A, MODE_BBAR), (MODE_ABAR, MODE_B)):
            red = partial_trace(cm4, pair)
            _require(ent.is_ppt_separable(red), f"pair {pair} not PPT at s={s}, theta={theta}")
            eof = ent.gaussian_renyi2_eof_numeric(red)
            _require(eof.value < 1e-6, f"pair {pair} has entanglement {eof.value!r}")


def suite_closed_forms(quick: bool) -> None:
    rng = np.random.default_rng(2024)
    budget = ent.EofSettings(starts=8) if quick else ent.EofSettings()
    for _ in range(2 if quick else 20):
        s, t2 = rng.uniform(0.0, 2.0), rng.uniform(0.0, 0.5)
        theta = math.sqrt(t2)
        cm4 = out_state(InitialState(s), BogoliubovData.from_theta(theta))
        e_ab = ent.gaussian_renyi2_eof_numeric(partial_trace(cm4, [MODE_A, MODE_B]), budget).value
        _require(abs(e_ab - ent.entanglement_ab_closed(s, theta)) <= 1e-4, f"A-B closed form off at s={s}, t2={t2}")
        e_aa = ent.gaussian_renyi2_eof_numeric(partial_trace(cm4, [MODE_A, MODE_ABAR]), budget).value
        _require(abs(e_aa - ent.entanglement_a_abar_closed(theta)) <= 1e-4, f"A-Abar closed form off at s={s}, t2={t2}")


def suite_monogamy(quick: bool) -> None:
    for s, theta in _theta_grid(5 if quick else 12):
        b = ent.residual_breakdown(InitialState(s), BogoliubovData.from_theta(theta))
        _require(b.value >= -1e-9, f"negative residual {b.value!r} at s={s}, theta={theta}")
        _require(abs(b.via_abar - b.closed) <= 1e-10, f"Abar-probe identity off at s={s}, theta={theta}")


def suite_asymptotics(quick: bool) -> None:
    model = ExpansionModel(epsilon=1.0, sigma_rate=1.0, mass=1.0)
    bog = bogoliubov(frequencies(1e3, model), model)
    gap = abs(ent.entanglement_ab_closed(1.0, bog.theta) - LN_COSH_2)
    _require(gap < 1e-6, f"E_AB(k=1e3) differs from ln cosh 2 by {gap!r}")


def suite_fock(quick: bool) -> None:
    for t2 in np.linspace(0.0, 0.9, 10 if quick else 50):
        theta = math.sqrt(t2)
        amps = fock_amplitudes(theta, fock_cutoff(theta))
        p = amps**2
        _require(abs(p.sum() - 1.0) <= 1e-10, f"Fock norm {p.sum()!r} at theta^2={t2}")
        mean = float(np.dot(np.arange(len(p)), p))
        want = t2 / (1.0 - t2)
        _require(abs(mean - want) <= 1e-8 * max(want, 1e-300), f"Fock mean {mean!r} != {want!r}")


def _monotone(y: np.ndarray, sign: int) -> bool:
    d = sign * np.diff(y)
    return bool(np.all(d >= -1e-12 * np.maximum(1.0, np.abs(y[1:]))))


def suite_figures(quick: bool) -> None:
    count = 8 if quick else None
    t = run_sweep(figure_config("fig1a", count=count))
    for i in range(t.rows.shape[1] - 1):
        _require(_monotone(t.curve(i), -1), f"fig1a curve {i} not decreasing in sigma")
    _require(bool(np.all(np.diff(t.rows[:, 1:], axis=1) >= 0)), "fig1a curves not ordered in k")
    t = run_sweep(figure_config("fig2a", count=count))
    for i in range(t.rows.shape[1] - 1):
        _require(_monotone(t.curve(i), +1), f"fig2a curve {i} not increasing in sigma")
    t = run_sweep(figure_config("fig1b", count=count))
    tails = np.abs(t.rows[[0, -1], 1:] - LN_COSH_2)
    _require(bool(np.all(tails < 1e-3)), "fig1b tails do not approach ln cosh 2")
    for name in ("fig3a", "fig3b", "fig3d", "fig3e"):
        t = run_sweep(figure_config(name, count=count))
        for i in range(t.rows.shape[1] - 1):
            _require(_monotone(t.curve(i), +1), f"{name} curve {i} not increasing")
    for name in ("fig4a", "fig4b"):
        t = run_sweep(figure_config(name, count=count))
        _require(bool(np.all(t.rows[:, 1:] >= 0.0)), f"{name} has negative residual")


def suite_inverse(quick: bool) -> None:
    rng = np.random.default_rng(99)
    requests = [("E_AAbar", k) for k in (0.5, 1.0, 2.0)] + [("residual", k) for k in (0.5, 1.0, 2.0)]
    for _ in range(2 if quick else 10):
        eps, sig = np.exp(rng.uniform(math.log(0.2), math.log(5.0), 2))
        truth = {"mass": 1.0, "s": 1.0, "epsilon": eps, "sigma_rate": sig}
        problem = FitProblem(
            synthetic_observations(truth, requests),
            known={"mass": 1.0, "s": 1.0},
            unknown={"epsilon": (0.1, 10.0), "sigma_rate": (0.1, 10.0)},
        )
        est = fit_parameters(problem).estimates
        for name, want in (("epsilon", eps), ("sigma_rate", sig)):
            _require(abs(est[name] / want - 1.0) <= 1e-3, f"fit of {name}: {est[name]!r} vs {want!r}")
    point = ParameterPoint(k=1.0, mass=1.0, epsilon=1.0, sigma_rate=1.0, s=1.0)
    d = sensitivity(point, "E_AB")
    _require(d.d_epsilon < 0 and d.d_sigma_rate < 0, "E_AB should fall with epsilon and sigma")
    d = sensitivity(point, "E_AAbar")
    _require(d.d_epsilon > 0 and d.d_sigma_rate > 0, "E_AAbar should grow with epsilon and sigma")
    _require(d.ratio > 1.0, "E_AAbar should be more sensitive to sigma than to epsilon")


SUITES: dict[str, Callable[[bool], None]] = {
    "bogoliubov": suite_bogoliubov,
    "purity": suite_purity,
    "witnesses": suite_witnesses,
    "closed_forms": suite_closed_forms,
    "monogamy": suite_monogamy,
    "asymptotics": suite_asymptotics,
    "fock": suite_fock,
    "figures": suite_figures,
    "inverse": suite_inverse,
}


@dataclass(frozen=True)
class SuiteOutcome:
    name: str
    passed: bool
    seconds: float
    detail: str = ""


@contextlib.contextmanager
def injected_fault(enabled: bool):
    """Flip the sign of the closed-form residual for the duration."""
    if not enabled:
        yield
        return
    original = ent.residual_closed
    with mock.patch.object(ent, "residual_closed", lambda s, theta: -original(s, theta)):
        yield


def run_selftest(quick: bool = False, fault: bool = False, only: tuple[str, ...] = ()) -> list[SuiteOutcome]:
    outcomes = []
    with injected_fault(fault):
        for name, suite in SUITES.items():
            if only and name not in only:
                continue
            t0 = time.perf_counter()
            try:
                suite(quick)
            except (SuiteFailure, ArithmeticError, ValueError) as exc:
                outcomes.append(SuiteOutcome(name, False, time.perf_counter() - t0, f"{type(exc).__name__}: {exc}"))
            else:
                outcomes.append(SuiteOutcome(name, True, time.perf_counter() - t0))
    return outcomes
