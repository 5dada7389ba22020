"""Particle creation in a tanh-profile 1+1 expanding universe.

The conformal scale factor ``a(eta)^2 = 1 + epsilon (1 + tanh(sigma eta))``
turns an in-vacuum mode pair ``(k, -k)`` into a two-mode squeezed state of
the out-region modes. Everything downstream depends on the single ratio
``theta = |beta_k / alpha_k|``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .phasespace import CovarianceMatrix, SymplecticTransform, apply, direct_sum, direct_sum_transforms

# Canonical mode order of the four-mode out-state.
MODE_A, MODE_ABAR, MODE_B, MODE_BBAR = 0, 1, 2, 3
MODE_NAMES = ("A", "Abar", "B", "Bbar")

_LOG2 = math.log(2.0)
_LOGPI = math.log(math.pi)


@dataclass(frozen=True)
class ExpansionModel:
    epsilon: float
    sigma_rate: float
    mass: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.epsilon) and self.epsilon > 0):
            raise ValueError(f"epsilon must be > 0, got {self.epsilon!r}")
        if not (math.isfinite(self.sigma_rate) and self.sigma_rate > 0):
            raise ValueError(f"sigma_rate must be > 0, got {self.sigma_rate!r}")
        if not (math.isfinite(self.mass) and self.mass >= 0):
            raise ValueError(f"mass must be >= 0, got {self.mass!r}")

    def scale_factor_sq(self, eta: float) -> float:
        return 1.0 + self.epsilon * (1.0 + math.tanh(self.sigma_rate * eta))


@dataclass(frozen=True)
class ModeSpec:
    k: float
    omega_in: float
    omega_out: float
    omega_plus: float
    omega_minus: float


@dataclass(frozen=True)
class BogoliubovData:
    alpha_mod: float
    beta_mod: float
    theta: float
    r: float
    mean_particles: float

    @classmethod
    def from_theta(cls, theta: float) -> "BogoliubovData":
        """Build the data directly from ``theta`` (used by sweeps over theta)."""
        theta = float(theta)
        if not 0.0 <= theta < 1.0:
            raise ValueError(f"theta must lie in [0, 1), got {theta!r}")
        t2 = theta * theta
        one_minus = -math.expm1(math.log(t2)) if t2 > 0 else 1.0
        alpha_sq = 1.0 / one_minus
        beta_sq = t2 / one_minus
        return cls(
            alpha_mod=math.sqrt(alpha_sq),
            beta_mod=math.sqrt(beta_sq),
            theta=theta,
            r=math.atanh(theta),
            mean_particles=beta_sq,
        )


@dataclass(frozen=True)
class InitialState:
    s: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.s) and self.s >= 0):
            raise ValueError(f"squeezing s must be >= 0, got {self.s!r}")


def frequencies(k: float, model: ExpansionModel) -> ModeSpec:
    if not (math.isfinite(k) and k > 0):
        raise ValueError(f"momentum k must be > 0, got {k!r}")
    m2 = model.mass**2
    w_in = math.sqrt(k * k + m2)
    w_out = math.sqrt(k * k + m2 * (1.0 + 2.0 * model.epsilon))
    # w_out - w_in without cancellation
    half_diff = m2 * model.epsilon / (w_out + w_in)
    return ModeSpec(
        k=k,
        omega_in=w_in,
        omega_out=w_out,
        omega_plus=0.5 * (w_out + w_in),
        omega_minus=half_diff,
    )


def log_sinh(x: float) -> float:
    """``ln sinh(x)`` for ``x > 0`` without overflow."""
    if x > 20.0:
        return x + math.log1p(-math.exp(-2.0 * x)) - _LOG2
    return math.log(math.sinh(x))


def log_theta(mode: ModeSpec, model: ExpansionModel) -> float:
    """``ln theta``; ``-inf`` when no particles are created."""
    if mode.omega_minus == 0.0:
        return -math.inf
    a = math.pi * mode.omega_plus / model.sigma_rate
    b = math.pi * mode.omega_minus / model.sigma_rate
    return log_sinh(b) - log_sinh(a)


def bogoliubov(mode: ModeSpec, model: ExpansionModel) -> BogoliubovData:
    """Bogoliubov moduli from ``theta = sinh(pi w-/sigma) / sinh(pi w+/sigma)``."""
    lt = log_theta(mode, model)
    theta = math.exp(lt)
    if not theta < 1.0:
        raise ArithmeticError(f"theta = {theta!r} >= 1 for {mode}")
    return BogoliubovData.from_theta(theta)


def bogoliubov_for(k: float, model: ExpansionModel) -> BogoliubovData:
    return bogoliubov(frequencies(k, model), model)


def log_abs_gamma_sq_imag(x: float) -> float:
    """``ln |Gamma(i x)|^2 = ln(pi / (x sinh(pi x)))`` for real ``x != 0``."""
    x = abs(x)
    return _LOGPI - math.log(x) - log_sinh(math.pi * x)


def log_abs_gamma_sq_one_plus_imag(x: float) -> float:
    """``ln |Gamma(1 + i x)|^2 = ln(pi x / sinh(pi x))``; 0 at ``x = 0``."""
    x = abs(x)
    if x == 0.0:
        return 0.0
    return _LOGPI + math.log(x) - log_sinh(math.pi * x)


def log_bogoliubov_moduli_via_gamma(mode: ModeSpec, model: ExpansionModel) -> tuple[float, float]:
    """``(ln |alpha|^2, ln |beta|^2)`` from the gamma-function coefficients.

    Each ``|Gamma|^2`` factor is reduced with the reflection identities and
    kept in log form. ``ln |beta|^2 = -inf`` when ``w- = 0``: the pole of
    ``Gamma(i w-/sigma)`` in the denominator makes beta vanish.
    """
    sig = model.sigma_rate
    x_in = mode.omega_in / sig
    x_out = mode.omega_out / sig
    x_plus = mode.omega_plus / sig
    x_minus = mode.omega_minus / sig
    # |Gamma(1 - ix)| = |Gamma(1 + ix)| and |Gamma(-ix)| = |Gamma(ix)| for real x
    common = math.log(mode.omega_out / mode.omega_in) + log_abs_gamma_sq_one_plus_imag(x_in)
    numer = common + log_abs_gamma_sq_imag(x_out)
    log_alpha_sq = numer - log_abs_gamma_sq_one_plus_imag(x_plus) - log_abs_gamma_sq_imag(x_plus)
    if x_minus == 0.0:
        return 0.0, -math.inf
    log_beta_sq = numer - log_abs_gamma_sq_one_plus_imag(x_minus) - log_abs_gamma_sq_imag(x_minus)
    return log_alpha_sq, log_beta_sq


def bogoliubov_moduli_via_gamma(mode: ModeSpec, model: ExpansionModel) -> tuple[float, float]:
    """``(|alpha|^2, |beta|^2)`` from the gamma-function route."""
    la, lb = log_bogoliubov_moduli_via_gamma(mode, model)
    return math.exp(la), math.exp(lb)


def fock_amplitudes(theta: float, n_max: int) -> np.ndarray:
    """Amplitudes ``A_n = sqrt(1 - theta^2) theta^n`` of the out-basis pair state."""
    if not 0.0 <= theta < 1.0:
        raise ValueError(f"theta must lie in [0, 1), got {theta!r}")
    if n_max < 0:
        raise ValueError("n_max must be >= 0")
    n = np.arange(n_max + 1)
    return math.sqrt(1.0 - theta * theta) * np.power(theta, n)


def fock_cutoff(theta: float, tol: float = 1e-14) -> int:
    """Smallest ``n`` with ``theta^(2n) < tol``."""
    if theta == 0.0:
        return 0
    return int(math.floor(math.log(tol) / (2.0 * math.log(theta)))) + 1


def squeeze_transform(theta: float) -> SymplecticTransform:
    """Two-mode squeezing ``(1 - theta^2)^(-1/2) [[I, theta Z], [theta Z, I]]``."""
    if not 0.0 <= theta < 1.0:
        raise ValueError(f"theta must lie in [0, 1), got {theta!r}")
    z = np.diag([1.0, -1.0])
    s = np.block([[np.eye(2), theta * z], [theta * z, np.eye(2)]])
    return SymplecticTransform(s / math.sqrt(1.0 - theta * theta))


def in_state(init: InitialState) -> CovarianceMatrix:
    """Two-mode squeezed vacuum shared by A and B."""
    c, sh = math.cosh(2.0 * init.s), math.sinh(2.0 * init.s)
    z = np.diag([1.0, -1.0])
    return CovarianceMatrix(np.block([[c * np.eye(2), sh * z], [sh * z, c * np.eye(2)]]))


def out_state(
    init: InitialState,
    bog: BogoliubovData,
    bog_b: BogoliubovData | None = None,
) -> CovarianceMatrix:
    """Four-mode out-state in the order ``(A, Abar, B, Bbar)``.

    ``bog_b`` lets Bob's mode see a different channel; by default both
    observers share the same momentum and hence the same theta.
    """
    bog_b = bog if bog_b is None else bog_b
    # in-state lives on (A, B, Abar, Bbar); reorder to (A, Abar, B, Bbar)
    sigma = direct_sum(in_state(init), CovarianceMatrix.vacuum(2))
    perm = SymplecticTransform.mode_permutation([0, 2, 1, 3])
    channel = direct_sum_transforms(squeeze_transform(bog.theta), squeeze_transform(bog_b.theta))
    return apply(channel @ perm, sigma)
