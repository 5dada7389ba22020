"""Nelder-Mead simplex search run on a batch of independent starts at once.

Every simplex step evaluates the objective on one stacked array for all
active starts, which keeps vectorized objectives cheap. Coefficients are
the dimension-adaptive ones of Gao and Han (2012).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np


@dataclass
class SimplexResult:
    x: np.ndarray  # (K, d) best vertex per start
    fun: np.ndarray  # (K,)
    nfev: int
    nit: int
    converged: np.ndarray  # (K,) bool


def batched_nelder_mead(
    f: Callable[[np.ndarray], np.ndarray],
    x0: np.ndarray,
    step: np.ndarray,
    max_iter: int = 1000,
    xtol: float = 1e-9,
    ftol: float = 1e-13,
) -> SimplexResult:
    """Minimize ``f`` from each row of ``x0``.

    ``f`` maps an ``(N, d)`` array of points to ``N`` values. A start stops
    once both its vertex spread and its value spread fall below tolerance.
    """
    x0 = np.atleast_2d(np.asarray(x0, dtype=float))
    k, d = x0.shape
    refl, expa = 1.0, 1.0 + 2.0 / d
    contr, shrk = 0.75 - 1.0 / (2.0 * d), 1.0 - 1.0 / d

    sim = np.repeat(x0[:, None, :], d + 1, axis=1)
    sim[:, 1:, :] += np.diag(np.broadcast_to(step, (d,)))[None]
    fs = f(sim.reshape(-1, d)).reshape(k, d + 1)
    nfev = k * (d + 1)
    active = np.ones(k, dtype=bool)

    nit = 0
    for nit in range(1, max_iter + 1):
        order = np.argsort(fs, axis=1, kind="stable")
        sim = np.take_along_axis(sim, order[:, :, None], axis=1)
        fs = np.take_along_axis(fs, order, axis=1)
        x_spread = np.max(np.abs(sim[:, 1:] - sim[:, :1]), axis=(1, 2))
        f_spread = fs[:, -1] - fs[:, 0]
        active &= ~((x_spread <= xtol) & (f_spread <= ftol))
        if not active.any():
            break

        idx = np.flatnonzero(active)
        s, fv = sim[idx], fs[idx]
        centroid = s[:, :-1].mean(axis=1)
        worst = s[:, -1]
        xr = centroid + refl * (centroid - worst)
        fr = f(xr)
        nfev += len(idx)

        expand = fr < fv[:, 0]
        outside = (fr >= fv[:, -2]) & (fr < fv[:, -1])
        inside = fr >= fv[:, -1]
        cand = np.where(
            expand[:, None],
            centroid + expa * (xr - centroid),
            np.where(outside[:, None], centroid + contr * (xr - centroid), centroid - contr * (centroid - worst)),
        )
        need = expand | outside | inside
        fc = np.full(len(idx), np.inf)
        if need.any():
            fc[need] = f(cand[need])
            nfev += int(need.sum())

        new_x, new_f = xr.copy(), fr.copy()
        take = (expand & (fc < fr)) | (outside & (fc <= fr))
        shrink = (outside & (fc > fr)) | (inside & (fc >= fv[:, -1]))
        take |= inside & ~shrink
        new_x[take], new_f[take] = cand[take], fc[take]
        s[:, -1], fv[:, -1] = new_x, new_f

        if shrink.any():
            j = np.flatnonzero(shrink)
            sub = s[j]
            sub[:, 1:] = sub[:, :1] + shrk * (sub[:, 1:] - sub[:, :1])
            fv[j, 1:] = f(sub[:, 1:].reshape(-1, d)).reshape(len(j), d)
            nfev += len(j) * d
            s[j] = sub

        sim[idx], fs[idx] = s, fv

    best = np.argmin(fs, axis=1)
    rows = np.arange(k)
    return SimplexResult(x=sim[rows, best], fun=fs[rows, best], nfev=nfev, nit=nit, converged=~active)
