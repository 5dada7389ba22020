"""Renyi-2 Gaussian entanglement of the four-mode out-state.

Closed forms for the pairwise and 1->3 splits, a PPT (Simon) witness, a
numerical minimizer over pure Gaussian decompositions that serves as an
independent check, and the monogamy bookkeeping built on top of them.
All values are in nats.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
from scipy.stats import qmc

from ._simplex import batched_nelder_mead
from .cosmology import (
    MODE_A,
    MODE_ABAR,
    MODE_B,
    MODE_BBAR,
    BogoliubovData,
    ExpansionModel,
    InitialState,
    bogoliubov_for,
    out_state,
)
from .phasespace import (
    PHYSICALITY_TOL,
    CovarianceMatrix,
    ModePartition,
    PhaseSpaceError,
    partial_trace,
    partial_transpose,
    symplectic_eigenvalues_of,
    williamson,
)

CKW_SLACK = 1e-9
PURITY_TOL = 1e-6
RESIDUAL_TIE_TOL = 1e-12


class ConsistencyError(ArithmeticError):
    """Two routes to the same quantity disagree, or an invariant fails."""


def _check_theta(theta: float) -> None:
    if not 0.0 <= theta < 1.0:
        raise ValueError(f"theta must lie in [0, 1), got {theta!r}")


# -- pure states and closed forms ------------------------------------------


def pure_bipartite_entanglement(cm: CovarianceMatrix, partition: ModePartition) -> float:
    """Entanglement of a pure state: Renyi-2 entropy of one side."""
    if not cm.is_pure(PURITY_TOL):
        raise ValueError(f"state is not pure (det = {cm.det:.12g}); use gaussian_renyi2_eof_numeric")
    partition.validate(cm.n_modes, strict=True)
    reduced = partial_trace(cm, partition.party_modes)
    return max(0.0, 0.5 * math.log(reduced.det))


def reduced_ab_state(s: float, theta: float) -> CovarianceMatrix:
    """(A, B) reduction of the out-state, written out blockwise."""
    t2 = theta * theta
    c, sh = math.cosh(2 * s), math.sinh(2 * s)
    z = np.diag([1.0, -1.0])
    return CovarianceMatrix(
        np.block([[(c + t2) * np.eye(2), sh * z], [sh * z, (c + t2) * np.eye(2)]]) / (1.0 - t2)
    )


def entanglement_ab_formula(s: float, theta: float) -> float:
    """The A-B closed form as an unclamped expression.

    Valid only on the entangled branch; on separable states it still
    returns a positive number.
    """
    _check_theta(theta)
    t2 = theta * theta
    ch2, sh2 = math.cosh(2 * s), math.sinh(2 * s)
    ch, sh = math.cosh(s), math.sinh(s)
    num = ch2 * (t2 * t2 - t2 + 1.0) + t2 * (sh2 * (t2 - 1.0) + 1.0)
    den = (t2 - 1.0) * (ch + sh) * (ch * (t2 + 1.0) + sh * (t2 - 1.0))
    return math.log(-num / den)


def entanglement_ab_closed(s: float, theta: float) -> float:
    """A-B entanglement, set to zero where the state is PPT-separable."""
    raw = entanglement_ab_formula(s, theta)
    if is_ppt_separable(reduced_ab_state(s, theta)):
        return 0.0
    return max(0.0, raw)


def ab_clamp_active(s: float, theta: float) -> bool:
    """True when the A-B formula is positive but the state is separable."""
    return is_ppt_separable(reduced_ab_state(s, theta)) and entanglement_ab_formula(s, theta) > 0.0


def entanglement_a_abar_closed(theta: float) -> float:
    """``ln[(1 + theta^2) / (1 - theta^2)]``, independent of s."""
    _check_theta(theta)
    t2 = theta * theta
    return math.log1p(t2) - math.log1p(-t2)


def residual_closed(s: float, theta: float) -> float:
    """``ln[(theta^2 cosh 2s + 1) / (1 + theta^2)]``."""
    _check_theta(theta)
    t2 = theta * theta
    return math.log1p(t2 * math.cosh(2 * s)) - math.log1p(t2)


def one_to_three_entanglement(cm4: CovarianceMatrix, probe: ModePartition) -> float:
    """Entanglement between one mode and the other three of a pure state."""
    if cm4.n_modes != 4:
        raise PhaseSpaceError(f"expected a four-mode state, got {cm4.n_modes}")
    if len(probe.party_modes) != 1:
        raise PhaseSpaceError("probe must be a single mode")
    return pure_bipartite_entanglement(cm4, probe)


# -- separability witness ---------------------------------------------------


def smallest_pt_symplectic_eigenvalue(cm2: CovarianceMatrix) -> float:
    if cm2.n_modes != 2:
        raise PhaseSpaceError(f"PPT witness needs a two-mode state, got {cm2.n_modes} modes")
    return float(symplectic_eigenvalues_of(partial_transpose(cm2, ModePartition([1])))[-1])


def is_ppt_separable(cm2: CovarianceMatrix) -> bool:
    """Simon criterion for 1x1-mode Gaussian states."""
    return smallest_pt_symplectic_eigenvalue(cm2) >= 1.0 - PHYSICALITY_TOL


# -- numerical entanglement of formation ------------------------------------


@dataclass(frozen=True)
class EofSettings:
    """Budget for :func:`gaussian_renyi2_eof_numeric`.

    Each start runs one simplex search per penalty weight; the weight grows
    by ``penalty_growth`` at every restart.
    """

    starts: int = 16
    restarts: int = 3
    penalty: float = 1e2
    penalty_growth: float = 10.0
    max_iter: int = 600
    xtol: float = 1e-9
    ftol: float = 1e-13
    feasibility_tol: float = 1e-9
    zero_tol: float = 1e-12
    use_witness: bool = True


@dataclass(frozen=True)
class PureDecompositionCandidate:
    """Pure two-mode state ``(L_A + L_B) TMSV(r) (L_A + L_B)^T``.

    Local factors are ``R(phi) Sq(z) R(psi)``; parameters are ordered
    ``(r, phi_A, z_A, psi_A, phi_B, z_B, psi_B)``.
    """

    params: tuple[float, ...]

    @property
    def gamma(self) -> np.ndarray:
        return _candidate_cms(np.asarray(self.params, dtype=float)[None])[0]

    def is_feasible(self, sigma: np.ndarray, tol: float = 1e-9) -> bool:
        return bool(np.linalg.eigvalsh(np.asarray(sigma) - self.gamma)[0] >= -tol)


@dataclass(frozen=True)
class EofResult:
    value: float
    converged: bool
    certified_separable: bool = False
    nfev: int = 0
    feasible_starts: int = 0
    gamma: Optional[np.ndarray] = field(default=None, repr=False, compare=False)

    def __float__(self) -> float:
        return self.value


def _local_symplectics(phi, z, psi) -> np.ndarray:
    c1, s1, c2, s2 = np.cos(phi), np.sin(phi), np.cos(psi), np.sin(psi)
    a, b = np.exp(-z), np.exp(z)
    out = np.empty(np.shape(phi) + (2, 2))
    out[..., 0, 0] = c1 * a * c2 - s1 * b * s2
    out[..., 0, 1] = c1 * a * s2 + s1 * b * c2
    out[..., 1, 0] = -s1 * a * c2 - c1 * b * s2
    out[..., 1, 1] = -s1 * a * s2 + c1 * b * c2
    return out


def _candidate_cms(p: np.ndarray) -> np.ndarray:
    """Batch of pure CMs for an ``(N, 7)`` parameter array."""
    r = np.abs(p[:, 0])
    ch, sh = np.cosh(2 * r)[:, None, None], np.sinh(2 * r)[:, None, None]
    la = _local_symplectics(p[:, 1], p[:, 2], p[:, 3])
    lb = _local_symplectics(p[:, 4], p[:, 5], p[:, 6])
    g = np.empty((len(p), 4, 4))
    g[:, :2, :2] = ch * la @ la.transpose(0, 2, 1)
    g[:, 2:, 2:] = ch * lb @ lb.transpose(0, 2, 1)
    off = sh * (la * np.array([1.0, -1.0])) @ lb.transpose(0, 2, 1)
    g[:, :2, 2:] = off
    g[:, 2:, :2] = off.transpose(0, 2, 1)
    return g


def _single_mode_pure(z: np.ndarray, phi: np.ndarray) -> np.ndarray:
    c, s = np.cos(phi), np.sin(phi)
    e_minus, e_plus = np.exp(-2 * z), np.exp(2 * z)
    out = np.empty(np.shape(z) + (2, 2))
    out[..., 0, 0] = c * c * e_minus + s * s * e_plus
    out[..., 1, 1] = s * s * e_minus + c * c * e_plus
    out[..., 0, 1] = out[..., 1, 0] = c * s * (e_plus - e_minus)
    return out


_PARAM_LO = np.array([0.0, 0.0, -1.5, 0.0, 0.0, -1.5, 0.0])
_PARAM_HI = np.array([2.0, np.pi, 1.5, np.pi, np.pi, 1.5, np.pi])
_PARAM_STEP = np.array([0.2, 0.5, 0.3, 0.5, 0.5, 0.3, 0.5])


def gaussian_renyi2_eof_numeric(cm2: CovarianceMatrix, budget: EofSettings = EofSettings()) -> EofResult:
    """Infimum of ``0.5 ln det gamma_A`` over pure ``gamma <= cm2``, by search.

    The search runs in the Williamson frame of ``cm2`` (``cm2 = S D S^T``),
    where the constraint reads ``gamma' <= D``. Modes with symplectic
    eigenvalue 1 must then be vacuum in ``gamma'``; without that reduction
    the feasible set has no interior and a penalty search cannot land on it.
    Starts come from an unscrambled Halton sequence, so results are
    deterministic.
    """
    if cm2.n_modes != 2:
        raise PhaseSpaceError(f"expected a two-mode state, got {cm2.n_modes} modes")
    if budget.use_witness and is_ppt_separable(cm2):
        return EofResult(0.0, converged=True, certified_separable=True)

    frame, nu = williamson(cm2)
    s = frame.data
    mixed = np.flatnonzero(nu > 1.0 + budget.feasibility_tol)
    d_diag = np.diag(np.repeat(nu, 2))

    def entanglement_of(frame_cms: np.ndarray) -> np.ndarray:
        a_block = (s @ frame_cms @ s.T)[:, :2, :2]
        det = a_block[:, 0, 0] * a_block[:, 1, 1] - a_block[:, 0, 1] * a_block[:, 1, 0]
        return 0.5 * np.log(det)

    # The frame vacuum is always dominated by D: a guaranteed upper bound.
    vacuum = np.eye(4)[None]
    bound = float(entanglement_of(vacuum)[0])
    if len(mixed) == 0:
        return EofResult(max(0.0, bound), converged=True, gamma=s @ s.T)

    halton = qmc.Halton(d=7, scramble=False).random(budget.starts + 1)[1:]

    if len(mixed) == 1:
        i = int(mixed[0])
        z_max = 0.5 * math.log(nu[i])

        def build(p: np.ndarray) -> np.ndarray:
            g = np.repeat(vacuum, len(p), axis=0)
            g[:, 2 * i : 2 * i + 2, 2 * i : 2 * i + 2] = _single_mode_pure(z_max * np.tanh(p[:, 0]), p[:, 1])
            return g

        x0 = (halton[:, :2] - 0.5) * np.array([4.0, np.pi])
        res = batched_nelder_mead(
            lambda p: entanglement_of(build(p)), x0, np.array([0.5, 0.5]),
            max_iter=budget.max_iter * budget.restarts, xtol=budget.xtol, ftol=budget.ftol,
        )
        best = int(np.argmin(res.fun))
        value = min(bound, float(res.fun[best]))
        gamma = s @ build(res.x[best : best + 1])[0] @ s.T
        return EofResult(
            max(0.0, value), converged=bool(res.converged.any()), nfev=res.nfev,
            feasible_starts=budget.starts, gamma=gamma,
        )

    x = _PARAM_LO + halton * (_PARAM_HI - _PARAM_LO)
    nfev = 0
    converged = np.zeros(budget.starts, dtype=bool)
    weight = budget.penalty
    for restart in range(budget.restarts):
        lam = weight

        def penalized(p: np.ndarray) -> np.ndarray:
            g = _candidate_cms(p)
            v = np.maximum(0.0, -np.linalg.eigvalsh(d_diag - g)[:, 0])
            return entanglement_of(g) + lam * (v + v * v)

        res = batched_nelder_mead(
            penalized, x, _PARAM_STEP / 3.0**restart,
            max_iter=budget.max_iter, xtol=budget.xtol, ftol=budget.ftol,
        )
        x, nfev, converged = res.x, nfev + res.nfev, res.converged
        weight *= budget.penalty_growth
        # entanglement is non-negative: a feasible zero cannot be improved on
        g = _candidate_cms(x)
        at_zero = (np.linalg.eigvalsh(d_diag - g)[:, 0] >= -budget.feasibility_tol) & (
            entanglement_of(g) <= budget.zero_tol
        )
        if at_zero.any():
            converged = converged | at_zero
            break

    g = _candidate_cms(x)
    violation = np.linalg.eigvalsh(d_diag - g)[:, 0]
    values = entanglement_of(g)
    feasible = violation >= -budget.feasibility_tol
    if not feasible.any():
        return EofResult(max(0.0, bound), converged=False, nfev=nfev, gamma=s @ s.T)
    j = int(np.flatnonzero(feasible)[np.argmin(values[feasible])])
    value = min(bound, float(values[j]))
    return EofResult(
        max(0.0, value), converged=bool(converged[feasible].any()), nfev=nfev,
        feasible_starts=int(feasible.sum()), gamma=s @ g[j] @ s.T,
    )


# -- four-mode bookkeeping --------------------------------------------------


def _pair_entanglement(cm4: CovarianceMatrix, i: int, j: int, budget: EofSettings) -> float:
    pair = partial_trace(cm4, [i, j])
    if is_ppt_separable(pair):
        return 0.0
    return gaussian_renyi2_eof_numeric(pair, budget).value


@dataclass(frozen=True)
class ResidualBreakdown:
    via_a: float
    via_abar: float
    closed: float

    @property
    def value(self) -> float:
        """Smaller of the two probe slacks.

        Both branches are differences of determinant-based entropies and
        carry rounding noise near 1e-16. Near-ties go to the Abar branch,
        reported through its closed form (checked against it on
        construction), which keeps the value non-negative.
        """
        tie = RESIDUAL_TIE_TOL * max(1.0, abs(self.via_abar))
        return self.via_a if self.via_a < self.via_abar - tie else self.closed


def residual_breakdown(
    init: InitialState, bog: BogoliubovData, budget: EofSettings = EofSettings()
) -> ResidualBreakdown:
    """Monogamy slack for probes A and Abar, plus the closed form."""
    cm4 = out_state(init, bog)
    s, theta = init.s, bog.theta
    e_ab = entanglement_ab_closed(s, theta)
    e_aabar = entanglement_a_abar_closed(theta)
    e_abbar = _pair_entanglement(cm4, MODE_A, MODE_BBAR, budget)
    e_abar_b = _pair_entanglement(cm4, MODE_ABAR, MODE_B, budget)
    e_abar_bbar = _pair_entanglement(cm4, MODE_ABAR, MODE_BBAR, budget)
    e_a_rest = one_to_three_entanglement(cm4, ModePartition([MODE_A]))
    e_abar_rest = one_to_three_entanglement(cm4, ModePartition([MODE_ABAR]))
    for name, v in (("e_ab", e_ab), ("e_a_abar", e_aabar), ("e_a_rest", e_a_rest), ("e_abar_rest", e_abar_rest)):
        if v < -CKW_SLACK:
            raise ConsistencyError(f"{name} = {v} < 0")
    out = ResidualBreakdown(
        via_a=e_a_rest - e_ab - e_aabar - e_abbar,
        via_abar=e_abar_rest - e_aabar - e_abar_b - e_abar_bbar,
        closed=residual_closed(s, theta),
    )
    if abs(out.via_abar - out.closed) > 1e-10 * max(1.0, abs(out.closed)):
        raise ConsistencyError(f"Abar-probe residual {out.via_abar!r} != closed form {out.closed!r}")
    return out


def residual_entanglement(init: InitialState, bog: BogoliubovData, budget: EofSettings = EofSettings()) -> float:
    return residual_breakdown(init, bog, budget).value


@dataclass(frozen=True)
class EntanglementReport:
    e_ab: float
    e_abar_bbar: float
    e_a_bbar: float
    e_abar_b: float
    e_a_abar: float
    e_a_rest: float
    e_abar_rest: float
    residual: float
    residual_via_a: float
    residual_via_abar: float
    residual_closed: float
    ab_clamped: bool
    s: float
    theta: float
    k: Optional[float] = None
    mass: Optional[float] = None
    epsilon: Optional[float] = None
    sigma_rate: Optional[float] = None

    VALUE_FIELDS = (
        "e_ab", "e_abar_bbar", "e_a_bbar", "e_abar_b", "e_a_abar",
        "e_a_rest", "e_abar_rest", "residual",
    )

    def as_dict(self) -> dict:
        return asdict(self)

    def check(self) -> None:
        for name in self.VALUE_FIELDS:
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ConsistencyError(f"{name} is not finite: {v!r}")
            if v < -CKW_SLACK:
                raise ConsistencyError(f"{name} = {v!r} is negative")
        if self.e_a_rest - (self.e_ab + self.e_a_abar + self.e_a_bbar) < -CKW_SLACK:
            raise ConsistencyError("monogamy violated for probe A")
        if self.e_abar_rest - (self.e_a_abar + self.e_abar_bbar + self.e_abar_b) < -CKW_SLACK:
            raise ConsistencyError("monogamy violated for probe Abar")


def full_report(
    init: InitialState,
    bog: BogoliubovData,
    k: Optional[float] = None,
    model: Optional[ExpansionModel] = None,
    budget: EofSettings = EofSettings(),
) -> EntanglementReport:
    cm4 = out_state(init, bog)
    s, theta = init.s, bog.theta
    res = residual_breakdown(init, bog, budget)
    report = EntanglementReport(
        e_ab=entanglement_ab_closed(s, theta),
        e_abar_bbar=_pair_entanglement(cm4, MODE_ABAR, MODE_BBAR, budget),
        e_a_bbar=_pair_entanglement(cm4, MODE_A, MODE_BBAR, budget),
        e_abar_b=_pair_entanglement(cm4, MODE_ABAR, MODE_B, budget),
        e_a_abar=entanglement_a_abar_closed(theta),
        e_a_rest=one_to_three_entanglement(cm4, ModePartition([MODE_A])),
        e_abar_rest=one_to_three_entanglement(cm4, ModePartition([MODE_ABAR])),
        residual=res.value,
        residual_via_a=res.via_a,
        residual_via_abar=res.via_abar,
        residual_closed=res.closed,
        ab_clamped=ab_clamp_active(s, theta),
        s=s,
        theta=theta,
        k=k,
        mass=None if model is None else model.mass,
        epsilon=None if model is None else model.epsilon,
        sigma_rate=None if model is None else model.sigma_rate,
    )
    report.check()
    return report


def report_for(k: float, mass: float, epsilon: float, sigma_rate: float, s: float) -> EntanglementReport:
    model = ExpansionModel(epsilon=epsilon, sigma_rate=sigma_rate, mass=mass)
    return full_report(InitialState(s), bogoliubov_for(k, model), k=k, model=model)
