"""Covariance-matrix algebra for zero-mean n-mode Gaussian states.

Quadratures are ordered ``(x1, p1, ..., xn, pn)`` and the vacuum covariance
matrix is the identity.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.linalg import schur

SYMMETRY_TOL = 1e-12
PHYSICALITY_TOL = 1e-9
SYMPLECTIC_TOL = 1e-10


class PhaseSpaceError(ValueError):
    """Invalid dimensions, indices or matrix shapes."""


class PhysicalityError(ValueError):
    """A covariance matrix violates the uncertainty relation."""


def symplectic_form(n: int) -> np.ndarray:
    """Block-diagonal symplectic form with blocks ``[[0, 1], [-1, 0]]``."""
    if int(n) != n or n < 1:
        raise PhaseSpaceError(f"number of modes must be a positive integer, got {n!r}")
    return np.kron(np.eye(int(n)), np.array([[0.0, 1.0], [-1.0, 0.0]]))


def _as_square(data, name: str) -> np.ndarray:
    arr = np.array(data, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] % 2:
        raise PhaseSpaceError(f"{name} must be a 2n x 2n matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise FloatingPointError(f"{name} has non-finite entries")
    return arr


def symplectic_eigenvalues_of(matrix: np.ndarray) -> np.ndarray:
    """Symplectic eigenvalues of a raw symmetric matrix, descending.

    No physicality check, so this also works on partially transposed
    matrices. The eigenvalues of ``Omega @ M`` are ``+-i nu``; the real
    matrix ``(Omega M)^2`` has the doubly degenerate eigenvalues ``-nu^2``.
    """
    m = _as_square(matrix, "matrix")
    n = m.shape[0] // 2
    om = symplectic_form(n) @ m
    sq = -(om @ om)
    ev = np.sort(np.linalg.eigvals(sq).real)[::-1]
    # Each nu^2 appears twice; average the pairs to absorb splitting noise.
    nu2 = 0.5 * (ev[0::2] + ev[1::2])
    return np.sqrt(np.clip(nu2, 0.0, None))


@dataclass(frozen=True)
class CovarianceMatrix:
    """Second-moment matrix of a zero-mean Gaussian state.

    The input is symmetrized, then checked against the uncertainty relation
    (every symplectic eigenvalue at least ``1 - 1e-9``).
    """

    data: np.ndarray
    n_modes: int = field(init=False)

    def __post_init__(self):
        arr = _as_square(self.data, "covariance matrix")
        arr = 0.5 * (arr + arr.T)
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)
        object.__setattr__(self, "n_modes", arr.shape[0] // 2)
        nu = symplectic_eigenvalues_of(arr)
        if nu.min() < 1.0 - PHYSICALITY_TOL:
            raise PhysicalityError(
                f"unphysical covariance matrix: smallest symplectic eigenvalue {nu.min():.12g} < 1"
            )

    def __array__(self, dtype=None, copy=None):
        return np.array(self.data, dtype=dtype)

    @property
    def det(self) -> float:
        return float(np.linalg.det(self.data))

    def block(self, i: int, j: int) -> np.ndarray:
        """2x2 block coupling modes ``i`` and ``j``."""
        return self.data[2 * i : 2 * i + 2, 2 * j : 2 * j + 2]

    def is_pure(self, tol: float = 1e-6) -> bool:
        return abs(self.det - 1.0) <= tol

    @classmethod
    def vacuum(cls, n: int) -> "CovarianceMatrix":
        return cls(np.eye(2 * n))

    @classmethod
    def thermal(cls, nu: float | Sequence[float]) -> "CovarianceMatrix":
        nus = np.atleast_1d(np.asarray(nu, dtype=float))
        return cls(np.diag(np.repeat(nus, 2)))


@dataclass(frozen=True)
class SymplecticTransform:
    """Real linear map preserving the symplectic form."""

    data: np.ndarray
    n_modes: int = field(init=False)

    def __post_init__(self):
        arr = _as_square(self.data, "symplectic matrix")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)
        object.__setattr__(self, "n_modes", arr.shape[0] // 2)
        om = symplectic_form(self.n_modes)
        err = np.max(np.abs(arr @ om @ arr.T - om))
        scale = max(1.0, float(np.max(np.abs(arr))) ** 2)
        if err > SYMPLECTIC_TOL * scale:
            raise PhaseSpaceError(f"matrix is not symplectic (|S W S^T - W| = {err:.3g})")

    def __array__(self, dtype=None, copy=None):
        return np.array(self.data, dtype=dtype)

    def __matmul__(self, other: "SymplecticTransform") -> "SymplecticTransform":
        return SymplecticTransform(self.data @ other.data)

    @classmethod
    def identity(cls, n: int) -> "SymplecticTransform":
        return cls(np.eye(2 * n))

    @classmethod
    def mode_permutation(cls, order: Sequence[int]) -> "SymplecticTransform":
        """Transform whose output mode ``i`` is input mode ``order[i]``."""
        order = list(order)
        n = len(order)
        if sorted(order) != list(range(n)):
            raise PhaseSpaceError(f"not a permutation of range({n}): {order}")
        p = np.zeros((2 * n, 2 * n))
        for new, old in enumerate(order):
            p[2 * new, 2 * old] = 1.0
            p[2 * new + 1, 2 * old + 1] = 1.0
        return cls(p)


@dataclass(frozen=True)
class ModePartition:
    """Side A of a bipartition, as an ordered list of mode indices."""

    party_modes: tuple[int, ...]

    def __init__(self, party_modes: Iterable[int]):
        modes = tuple(int(i) for i in party_modes)
        if len(set(modes)) != len(modes):
            raise PhaseSpaceError(f"duplicate mode indices in {modes}")
        if any(i < 0 for i in modes):
            raise PhaseSpaceError(f"negative mode index in {modes}")
        object.__setattr__(self, "party_modes", modes)

    def validate(self, n_modes: int, strict: bool = True) -> None:
        if any(i >= n_modes for i in self.party_modes):
            raise PhaseSpaceError(f"mode index out of range for {n_modes} modes: {self.party_modes}")
        if not self.party_modes:
            raise PhaseSpaceError("partition side is empty")
        if strict and len(self.party_modes) >= n_modes:
            raise PhaseSpaceError("partition side must be a strict subset of the modes")

    def complement(self, n_modes: int) -> tuple[int, ...]:
        return tuple(i for i in range(n_modes) if i not in self.party_modes)


def symplectic_eigenvalues(cm: CovarianceMatrix) -> list[float]:
    """Symplectic eigenvalues of ``cm`` in descending order."""
    return [float(v) for v in symplectic_eigenvalues_of(cm.data)]


def apply(S: SymplecticTransform, cm: CovarianceMatrix) -> CovarianceMatrix:
    """Congruence ``S cm S^T``."""
    if S.n_modes != cm.n_modes:
        raise PhaseSpaceError(f"dimension mismatch: transform on {S.n_modes} modes, state on {cm.n_modes}")
    return CovarianceMatrix(S.data @ cm.data @ S.data.T)


def direct_sum(cm1: CovarianceMatrix, cm2: CovarianceMatrix) -> CovarianceMatrix:
    n1, n2 = cm1.data.shape[0], cm2.data.shape[0]
    out = np.zeros((n1 + n2, n1 + n2))
    out[:n1, :n1] = cm1.data
    out[n1:, n1:] = cm2.data
    return CovarianceMatrix(out)


def direct_sum_transforms(*transforms: SymplecticTransform) -> SymplecticTransform:
    size = sum(t.data.shape[0] for t in transforms)
    out = np.zeros((size, size))
    i = 0
    for t in transforms:
        d = t.data.shape[0]
        out[i : i + d, i : i + d] = t.data
        i += d
    return SymplecticTransform(out)


def _quadrature_indices(modes: Sequence[int]) -> list[int]:
    return [q for i in modes for q in (2 * i, 2 * i + 1)]


def partial_trace(cm: CovarianceMatrix, keep: Sequence[int]) -> CovarianceMatrix:
    """Reduced state on the modes in ``keep`` (in the given order)."""
    keep = list(keep)
    if not keep:
        raise PhaseSpaceError("keep-list is empty")
    ModePartition(keep).validate(cm.n_modes, strict=False)
    idx = _quadrature_indices(keep)
    return CovarianceMatrix(cm.data[np.ix_(idx, idx)])


def partial_transpose(cm: CovarianceMatrix, party: ModePartition) -> np.ndarray:
    """Flip the momentum sign of every mode in ``party``.

    Returns a bare array: the result is generally not a physical state.
    """
    party.validate(cm.n_modes, strict=True)
    flip = np.ones(2 * cm.n_modes)
    for i in party.party_modes:
        flip[2 * i + 1] = -1.0
    return flip[:, None] * cm.data * flip[None, :]


def williamson(cm: CovarianceMatrix) -> tuple[SymplecticTransform, np.ndarray]:
    """Williamson normal form ``cm = S diag(nu1, nu1, ..., nun, nun) S^T``.

    Returns ``(S, nu)`` with ``nu`` ordered as the diagonal blocks of the
    normal form (not sorted).
    """
    w, u = np.linalg.eigh(cm.data)
    half = (u * np.sqrt(w)) @ u.T
    inv_half = (u / np.sqrt(w)) @ u.T
    a = inv_half @ symplectic_form(cm.n_modes) @ inv_half
    t, o = schur(a, output="real")
    for i in range(cm.n_modes):
        if t[2 * i, 2 * i + 1] < 0:
            o[:, [2 * i, 2 * i + 1]] = o[:, [2 * i + 1, 2 * i]]
    t = o.T @ a @ o
    nu = 1.0 / np.array([t[2 * i, 2 * i + 1] for i in range(cm.n_modes)])
    s = half @ o / np.sqrt(np.repeat(nu, 2))[None, :]
    return SymplecticTransform(s), nu


def renyi2_entropy(cm: CovarianceMatrix) -> float:
    """Renyi-2 entropy ``0.5 ln det cm`` in nats."""
    det = cm.det
    if det < 1.0 - PHYSICALITY_TOL:
        raise PhysicalityError(f"det = {det:.12g} < 1")
    return max(0.0, 0.5 * float(np.log(det)))
