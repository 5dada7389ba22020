"""Recover expansion parameters from entanglement observations.

The forward model is the closed-form chain ``(k, m, epsilon, sigma, s) ->
theta -> entanglement``, vectorized over parameter arrays so the grid scan
costs a handful of numpy passes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np
from scipy.optimize import least_squares

from ._simplex import batched_nelder_mead

PARAMETERS = ("mass", "s", "epsilon", "sigma_rate")
QUANTITIES = ("E_AB", "E_AAbar", "residual")
_ALIASES = {
    "E_AB": "E_AB",
    "E_AAbar": "E_AAbar",
    "E_AĀ": "E_AAbar",
    "E_AA": "E_AAbar",
    "residual": "residual",
    "E_res": "residual",
}
_PARAM_ALIASES = {"m": "mass", "sigma": "sigma_rate", "eps": "epsilon"}
_BAD_FIT = 1e300
_BAD_RESIDUAL = 1e150


class FitError(ValueError):
    pass


def canonical_quantity(name: str) -> str:
    try:
        return _ALIASES[name.strip()]
    except KeyError:
        raise FitError(f"unknown quantity {name!r}; expected one of {', '.join(QUANTITIES)}") from None


def canonical_parameter(name: str) -> str:
    name = _PARAM_ALIASES.get(name.strip(), name.strip())
    if name not in PARAMETERS:
        raise FitError(f"unknown parameter {name!r}; expected one of {', '.join(PARAMETERS)}")
    return name


# -- vectorized forward model -------------------------------------------------


def _log_sinh(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    big = x > 20.0
    small = np.where(big, 1.0, x)
    with np.errstate(divide="ignore"):
        return np.where(big, x + np.log1p(-np.exp(-2.0 * np.where(big, x, 20.0))) - math.log(2.0), np.log(np.sinh(small)))


def theta_squared(k, mass, epsilon, sigma_rate) -> np.ndarray:
    """``theta^2`` for broadcast parameter arrays."""
    k, mass, epsilon, sigma_rate = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (k, mass, epsilon, sigma_rate)))
    m2 = mass * mass
    w_in = np.sqrt(k * k + m2)
    w_out = np.sqrt(k * k + m2 * (1.0 + 2.0 * epsilon))
    w_minus = m2 * epsilon / (w_out + w_in)
    w_plus = 0.5 * (w_out + w_in)
    with np.errstate(divide="ignore", invalid="ignore"):
        lt = _log_sinh(np.pi * w_minus / sigma_rate) - _log_sinh(np.pi * w_plus / sigma_rate)
    lt = np.where(w_minus > 0, lt, -np.inf)
    return np.exp(2.0 * lt)


def _e_ab_parts(s, t2):
    """``E_AB`` split as ``ln cosh 2s + delta(theta)``, both cancellation-free.

    Expanding the closed form gives ``-num/den = [cosh 2s + t2 (1 - e^{2s})
    + t2^2 e^{2s}] / [(1 - t2)(1 + t2 e^{2s})]``. On the separable branch
    both parts are zero.
    """
    s, t2 = np.broadcast_arrays(np.asarray(s, dtype=float), np.asarray(t2, dtype=float))
    e2 = np.exp(2 * s)
    ch2 = np.cosh(2 * s)
    base = np.logaddexp(2 * s, -2 * s) - math.log(2.0)
    delta = np.log1p(t2 * (1.0 - e2) / ch2 + t2 * t2 * e2 / ch2) - np.log1p(-t2) - np.log1p(t2 * e2)
    # PPT boundary of the A-B state: nu_pt = (e^{-2s} + t2) / (1 - t2) >= 1
    separable = (np.exp(-2 * s) + t2 >= 1.0 - t2) | (base + delta <= 0.0)
    return np.where(separable, 0.0, base), np.where(separable, 0.0, delta)


def _e_ab(s, t2):
    base, delta = _e_ab_parts(s, t2)
    return base + delta


def forward_model(quantity: str, k, mass, epsilon, sigma_rate, s) -> np.ndarray:
    """Closed-form entanglement for broadcast parameter arrays."""
    q = canonical_quantity(quantity)
    t2 = theta_squared(k, mass, epsilon, sigma_rate)
    s = np.asarray(s, dtype=float)
    if q == "E_AAbar":
        return (np.log1p(t2) - np.log1p(-t2)) * np.ones_like(s)
    if q == "E_AB":
        return _e_ab(s, t2)
    # The probe-Abar slack never exceeds the probe-A one (equal at s = 0), so
    # the minimum is this branch; it is also free of cancellation.
    return np.log1p(t2 * np.cosh(2 * s)) - np.log1p(t2)


# -- fitting ---------------------------------------------------------------------


@dataclass(frozen=True)
class Observation:
    k: float
    quantity: str
    value: float
    weight: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "quantity", canonical_quantity(self.quantity))
        if not (math.isfinite(self.k) and self.k > 0):
            raise FitError(f"observation momentum must be > 0, got {self.k!r}")
        if not (math.isfinite(self.value) and self.value >= 0):
            raise FitError(f"observed value must be >= 0, got {self.value!r}")
        if not (math.isfinite(self.weight) and self.weight >= 0):
            raise FitError(f"weight must be >= 0, got {self.weight!r}")


@dataclass(frozen=True)
class FitProblem:
    observations: tuple[Observation, ...]
    known: Mapping[str, float]
    unknown: Mapping[str, tuple[float, float]]

    def __post_init__(self):
        object.__setattr__(self, "observations", tuple(self.observations))
        known = {canonical_parameter(k): float(v) for k, v in self.known.items()}
        unknown = {canonical_parameter(k): (float(lo), float(hi)) for k, (lo, hi) in self.unknown.items()}
        object.__setattr__(self, "known", known)
        object.__setattr__(self, "unknown", unknown)
        if not self.observations:
            raise FitError("no observations")
        if not unknown:
            raise FitError("at least one parameter must be unknown")
        overlap = set(known) & set(unknown)
        if overlap:
            raise FitError(f"parameters both known and unknown: {sorted(overlap)}")
        missing = set(PARAMETERS) - set(known) - set(unknown)
        if missing:
            raise FitError(f"parameters neither known nor unknown: {sorted(missing)}")
        for name, (lo, hi) in unknown.items():
            if not (0 < lo < hi and math.isfinite(hi)):
                raise FitError(f"bounds for {name} must satisfy 0 < lo < hi < inf, got ({lo}, {hi})")

    @property
    def unknown_names(self) -> tuple[str, ...]:
        return tuple(p for p in PARAMETERS if p in self.unknown)


@dataclass(frozen=True)
class FitSettings:
    """Search budget for :func:`fit_parameters`.

    The grid scan feeds up to ``max_starts`` simplex searches (the best cell
    along every axis line of the grid); the ``polish`` best distinct
    outcomes are then refined by bounded least squares.
    """

    grid: int = 32
    max_grid_points: int = 1 << 20
    max_starts: int = 64
    simplex_iter: int = 300
    polish: int = 2
    tol: float = 1e-15
    degeneracy_tol: float = 1e-12


@dataclass(frozen=True)
class FitResult:
    estimates: dict[str, float]
    rss: float
    converged: bool
    degenerate: bool
    evaluations: int
    residuals: tuple[tuple[Observation, float], ...] = field(default=(), repr=False)


class _Objective:
    """Weighted residuals as a function of log-parameters, batched over rows."""

    def __init__(self, problem: FitProblem):
        self.problem = problem
        self.names = problem.unknown_names
        obs = problem.observations
        self.k = np.array([o.k for o in obs])
        self.values = np.array([o.value for o in obs])
        self.sqrt_w = np.sqrt(np.array([o.weight for o in obs]))
        self.quantities = [o.quantity for o in obs]
        self.calls = 0

    def params(self, log_x: np.ndarray) -> dict[str, np.ndarray]:
        log_x = np.atleast_2d(log_x)
        out = {name: np.full(len(log_x), v) for name, v in self.problem.known.items()}
        for i, name in enumerate(self.names):
            out[name] = np.exp(log_x[:, i])
        return out

    def model(self, log_x: np.ndarray) -> np.ndarray:
        p = self.params(log_x)
        cols = []
        for j, q in enumerate(self.quantities):
            cols.append(forward_model(q, self.k[j], p["mass"], p["epsilon"], p["sigma_rate"], p["s"]))
        return np.stack(cols, axis=-1)

    def residuals(self, log_x: np.ndarray) -> np.ndarray:
        log_x = np.atleast_2d(log_x)
        self.calls += len(log_x)
        with np.errstate(all="ignore"):
            r = self.sqrt_w * (self.model(log_x) - self.values)
        return np.where(np.isfinite(r), r, _BAD_RESIDUAL)

    def __call__(self, log_x: np.ndarray) -> np.ndarray:
        r = self.residuals(log_x)
        with np.errstate(over="ignore"):
            return np.minimum(np.sum(r * r, axis=-1), _BAD_FIT)


def _axis_line_minima(rss: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Flat indices of cells that are the best along some axis line, best first."""
    grid = rss.reshape(shape)
    picks = set()
    for axis in range(len(shape)):
        arg = np.expand_dims(np.argmin(grid, axis=axis), axis)
        idx = np.indices(arg.shape)
        idx[axis] = arg
        picks.update(np.ravel_multi_index(tuple(i.ravel() for i in idx), shape).tolist())
    picks = np.array(sorted(picks))
    return picks[np.argsort(rss[picks], kind="stable")]


def fit_parameters(problem: FitProblem, budget: FitSettings = FitSettings()) -> FitResult:
    """Least-squares fit of the unknown parameters, searched in log space.

    A log-spaced grid scan over the box picks starting cells. The best cells
    along each grid line seed a batch of simplex searches, and the best
    distinct simplex outcomes are polished with bounded least squares.
    """
    obj = _Objective(problem)
    names = obj.names
    dim = len(names)
    per_dim = max(2, min(budget.grid, int(budget.max_grid_points ** (1.0 / dim))))
    shape = (per_dim,) * dim
    lo = np.log([problem.unknown[n][0] for n in names])
    hi = np.log([problem.unknown[n][1] for n in names])
    axes = [np.linspace(a, b, per_dim) for a, b in zip(lo, hi)]
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, dim)
    rss = obj(mesh)
    best = int(np.argmin(rss))
    best_rss = float(rss[best])

    # Degenerate: near-optimal cells that are not neighbours of the best one.
    degenerate = len(problem.observations) < dim
    near = np.flatnonzero(rss <= best_rss + budget.degeneracy_tol)
    if len(near) > 1:
        idx = np.array(np.unravel_index(near, shape)).T
        best_idx = np.array(np.unravel_index(best, shape))
        if np.any(np.max(np.abs(idx - best_idx), axis=1) > 1):
            degenerate = True

    if best_rss >= _BAD_FIT:
        return FitResult({}, math.inf, converged=False, degenerate=degenerate, evaluations=obj.calls)

    starts = mesh[_axis_line_minima(rss, shape)[: budget.max_starts]]

    def boxed(x):
        inside = np.clip(x, lo, hi)
        return obj(inside) + 1e6 * np.sum((x - inside) ** 2, axis=-1)

    step = (hi - lo) / (per_dim - 1)
    simplex = batched_nelder_mead(boxed, starts, step, max_iter=budget.simplex_iter)

    candidate, polished = None, []
    for i in np.argsort(simplex.fun, kind="stable"):
        x0 = np.clip(simplex.x[i], lo, hi)
        if any(np.max(np.abs(x0 - p)) < 1e-3 for p in polished):
            continue
        polished.append(x0)
        fit = least_squares(
            lambda x: obj.residuals(x)[0],
            x0,
            bounds=(lo, hi),
            xtol=budget.tol,
            ftol=budget.tol,
            gtol=budget.tol,
        )
        if candidate is None or fit.cost < candidate.cost:
            candidate = fit
        if len(polished) >= budget.polish:
            break

    x = np.clip(candidate.x, lo, hi)
    final_rss = float(obj(x)[0])
    estimates = {n: float(np.exp(v)) for n, v in zip(names, x)}
    pred = obj.model(x)[0]
    residuals = tuple((o, float(p - o.value)) for o, p in zip(problem.observations, pred))
    return FitResult(
        estimates=estimates,
        rss=final_rss,
        converged=bool(candidate.status > 0) and final_rss < _BAD_FIT,
        degenerate=degenerate,
        evaluations=obj.calls,
        residuals=residuals,
    )


def synthetic_observations(
    truth: Mapping[str, float],
    requests: Sequence[tuple[str, float]],
    relative_weights: bool = True,
) -> list[Observation]:
    """Noiseless observations from the forward model at ``truth``.

    With ``relative_weights`` each weight is ``1/value^2`` so that every
    observation counts on a relative scale.
    """
    truth = {canonical_parameter(k): v for k, v in truth.items()}
    out = []
    for quantity, k in requests:
        v = float(forward_model(quantity, k, truth["mass"], truth["epsilon"], truth["sigma_rate"], truth["s"]))
        w = 1.0 / (v * v) if relative_weights and v > 0 else 1.0
        out.append(Observation(k=k, quantity=quantity, value=v, weight=w))
    return out


# -- sensitivity -------------------------------------------------------------------


@dataclass(frozen=True)
class ParameterPoint:
    k: float
    mass: float
    epsilon: float
    sigma_rate: float
    s: float

    def evaluate(self, quantity: str, **override: float) -> float:
        p = {**self.__dict__, **override}
        return float(forward_model(quantity, p["k"], p["mass"], p["epsilon"], p["sigma_rate"], p["s"]))

    def varying_part(self, quantity: str, **override: float) -> float:
        """The quantity minus any term that does not depend on theta.

        ``E_AB`` sits on top of ``ln cosh 2s``; differencing only the
        theta-dependent part keeps tiny derivatives above rounding noise.
        """
        if canonical_quantity(quantity) != "E_AB":
            return self.evaluate(quantity, **override)
        p = {**self.__dict__, **override}
        t2 = theta_squared(p["k"], p["mass"], p["epsilon"], p["sigma_rate"])
        return float(_e_ab_parts(p["s"], t2)[1])


@dataclass(frozen=True)
class Sensitivity:
    quantity: str
    d_epsilon: float
    d_sigma_rate: float
    boundary: bool
    richardson_ok: bool

    @property
    def ratio(self) -> float:
        """``|dE/dsigma| / |dE/depsilon|``; nan when both vanish."""
        if self.d_epsilon == 0.0:
            return math.inf if self.d_sigma_rate != 0.0 else math.nan
        return abs(self.d_sigma_rate) / abs(self.d_epsilon)


def _on_separable_branch(point: ParameterPoint, **override: float) -> bool:
    p = {**point.__dict__, **override}
    t2 = float(theta_squared(p["k"], p["mass"], p["epsilon"], p["sigma_rate"]))
    return math.exp(-2 * p["s"]) + t2 >= 1.0 - t2


def _derivative(point: ParameterPoint, quantity: str, name: str, rel_step: float) -> tuple[float, bool, bool]:
    x = getattr(point, name)
    h = rel_step * x

    def f(v: float) -> float:
        return point.varying_part(quantity, **{name: v})

    boundary = False
    if canonical_quantity(quantity) != "E_AAbar":
        here = _on_separable_branch(point)
        boundary = (
            _on_separable_branch(point, **{name: x - h}) != here
            or _on_separable_branch(point, **{name: x + h}) != here
        )

    def diff(step: float) -> float:
        if not boundary:
            return (f(x + step) - f(x - step)) / (2 * step)
        # one-sided, on whichever side stays on the current branch
        here = _on_separable_branch(point)
        if _on_separable_branch(point, **{name: x + step}) == here:
            return (-3 * f(x) + 4 * f(x + step / 2) - f(x + step)) / step
        return (3 * f(x) - 4 * f(x - step / 2) + f(x - step)) / step

    d1, d2 = diff(h), diff(h / 2)
    scale = max(abs(d1), abs(d2))
    ok = scale == 0.0 or abs(d1 - d2) <= 1e-4 * scale
    return d2, boundary, ok


def sensitivity(point: ParameterPoint, quantity: str, rel_step: float = 1e-5) -> Sensitivity:
    """Central finite-difference derivatives in epsilon and sigma_rate."""
    q = canonical_quantity(quantity)
    de, be, oke = _derivative(point, q, "epsilon", rel_step)
    ds, bs, oks = _derivative(point, q, "sigma_rate", rel_step)
    return Sensitivity(q, de, ds, boundary=be or bs, richardson_ok=oke and oks)
