"""Parameter sweeps behind the published entanglement curves.

Each named figure is a :class:`SweepConfig`: one swept parameter, one
family of curves, everything else fixed at 1. Output is a plain table with
one row per abscissa value and one column per curve.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Mapping, Optional, Sequence

import numpy as np

from . import __version__
from .cosmology import MODE_A, MODE_ABAR, ExpansionModel, InitialState, bogoliubov_for, out_state
from .entanglement import (
    entanglement_a_abar_closed,
    entanglement_ab_closed,
    one_to_three_entanglement,
    residual_entanglement,
)
from .phasespace import ModePartition

PARAMETERS = ("k", "mass", "epsilon", "sigma_rate", "s")
POSITIVE = {"k", "epsilon", "sigma_rate"}
DEFAULT_CURVES = (0.5, 1.0, 2.0, 4.0)
UNIT_POINT = {name: 1.0 for name in PARAMETERS}


class SweepError(ValueError):
    pass


def _point(p: Mapping[str, float]):
    model = ExpansionModel(epsilon=p["epsilon"], sigma_rate=p["sigma_rate"], mass=p["mass"])
    return InitialState(p["s"]), bogoliubov_for(p["k"], model)


def _e_ab(p):
    init, bog = _point(p)
    return entanglement_ab_closed(init.s, bog.theta)


def _e_a_abar(p):
    _, bog = _point(p)
    return entanglement_a_abar_closed(bog.theta)


def _one_to_three(probe: int):
    def f(p):
        init, bog = _point(p)
        return one_to_three_entanglement(out_state(init, bog), ModePartition([probe]))

    return f


def _residual(p):
    init, bog = _point(p)
    return residual_entanglement(init, bog)


QUANTITIES: dict[str, Callable[[Mapping[str, float]], float]] = {
    "e_ab": _e_ab,
    "e_a_abar": _e_a_abar,
    "e_a_rest": _one_to_three(MODE_A),
    "e_abar_rest": _one_to_three(MODE_ABAR),
    "residual": _residual,
}


@dataclass(frozen=True)
class SweepConfig:
    swept: str
    start: float
    stop: float
    count: int
    spacing: str = "log"
    quantity: str = "e_ab"
    curve_param: Optional[str] = None
    curve_values: tuple[float, ...] = ()
    fixed: Mapping[str, float] = field(default_factory=lambda: dict(UNIT_POINT))

    def __post_init__(self):
        object.__setattr__(self, "curve_values", tuple(float(v) for v in self.curve_values))
        object.__setattr__(self, "fixed", {**UNIT_POINT, **dict(self.fixed)})
        if self.swept not in PARAMETERS:
            raise SweepError(f"unknown swept parameter {self.swept!r}")
        if self.quantity not in QUANTITIES:
            raise SweepError(f"unknown quantity {self.quantity!r}")
        if self.count < 2:
            raise SweepError(f"count must be >= 2, got {self.count}")
        if not self.start < self.stop:
            raise SweepError(f"need start < stop, got {self.start} >= {self.stop}")
        if self.spacing not in ("log", "linear"):
            raise SweepError(f"spacing must be 'log' or 'linear', got {self.spacing!r}")
        if self.spacing == "log" and self.start <= 0:
            raise SweepError("log spacing needs a positive range")
        if self.swept in POSITIVE and self.start <= 0:
            raise SweepError(f"{self.swept} must stay positive")
        if self.curve_param is not None:
            if self.curve_param not in PARAMETERS or self.curve_param == self.swept:
                raise SweepError(f"bad curve parameter {self.curve_param!r}")
            if not self.curve_values:
                raise SweepError("curve parameter given without values")

    def abscissa(self) -> np.ndarray:
        if self.spacing == "log":
            return np.geomspace(self.start, self.stop, self.count)
        return np.linspace(self.start, self.stop, self.count)

    def curves(self) -> list[Optional[float]]:
        return list(self.curve_values) if self.curve_param else [None]

    def column_names(self) -> list[str]:
        if self.curve_param is None:
            return [self.swept, self.quantity]
        return [self.swept] + [f"{self.quantity}[{self.curve_param}={v!r}]" for v in self.curve_values]

    def provenance(self) -> str:
        fixed = ", ".join(
            f"{k}={self.fixed[k]!r}" for k in PARAMETERS if k not in (self.swept, self.curve_param)
        )
        curves = f"; curves {self.curve_param} in {list(self.curve_values)}" if self.curve_param else ""
        return (
            f"cosmoent {__version__}; {self.quantity} vs {self.swept} "
            f"({self.spacing}, {self.start!r}..{self.stop!r}, {self.count} points){curves}; fixed {fixed}"
        )


def _sigma_sweep(quantity, curve_param, values=DEFAULT_CURVES):
    return SweepConfig("sigma_rate", 0.05, 10.0, 60, "log", quantity, curve_param, values)


def _mass_sweep(quantity, curve_param=None, values=()):
    return SweepConfig("mass", 1e-3, 1e3, 61, "log", quantity, curve_param, values)


def _epsilon_sweep(quantity, curve_param, values=DEFAULT_CURVES):
    return SweepConfig("epsilon", 0.01, 10.0, 60, "log", quantity, curve_param, values)


FIGURES: dict[str, SweepConfig] = {
    "fig1a": _sigma_sweep("e_ab", "k"),
    "fig1b": _mass_sweep("e_ab", "epsilon", DEFAULT_CURVES),
    "fig2a": _sigma_sweep("e_a_abar", "k"),
    "fig2b": _mass_sweep("e_a_abar", "epsilon", DEFAULT_CURVES),
    "fig3a": _sigma_sweep("e_a_rest", "s"),
    "fig3b": _epsilon_sweep("e_a_rest", "k"),
    "fig3c": _mass_sweep("e_a_rest"),
    "fig3d": _sigma_sweep("e_abar_rest", "s"),
    "fig3e": _epsilon_sweep("e_abar_rest", "k"),
    "fig3f": _mass_sweep("e_abar_rest"),
    "fig4a": _sigma_sweep("residual", "k"),
    "fig4b": _mass_sweep("residual", "epsilon", DEFAULT_CURVES),
}


def figure_config(
    name: str,
    count: Optional[int] = None,
    curves: Optional[Sequence[float]] = None,
) -> SweepConfig:
    """The sweep for a named figure, optionally with fewer points or other curves."""
    try:
        cfg = FIGURES[name]
    except KeyError:
        raise SweepError(f"unknown figure {name!r}; choose from {', '.join(FIGURES)}") from None
    if count is not None:
        cfg = replace(cfg, count=count)
    if curves is not None:
        if cfg.curve_param is None:
            raise SweepError(f"{name} has a single curve")
        cfg = replace(cfg, curve_values=tuple(curves))
    return cfg


@dataclass(frozen=True)
class SweepTable:
    config: SweepConfig
    columns: list[str]
    rows: np.ndarray  # (count, 1 + n_curves)

    def curve(self, i: int) -> np.ndarray:
        return self.rows[:, 1 + i]

    @property
    def x(self) -> np.ndarray:
        return self.rows[:, 0]

    def to_text(self, delimiter: str = ",") -> str:
        buf = io.StringIO()
        buf.write(f"# {self.config.provenance()}\n")
        buf.write(delimiter.join(self.columns) + "\n")
        for row in self.rows:
            # repr gives the shortest string that round-trips
            buf.write(delimiter.join(repr(float(v)) for v in row) + "\n")
        return buf.getvalue()


def run_sweep(cfg: SweepConfig) -> SweepTable:
    fn = QUANTITIES[cfg.quantity]
    xs = cfg.abscissa()
    rows = np.empty((len(xs), 1 + len(cfg.curves())))
    rows[:, 0] = xs
    for j, c in enumerate(cfg.curves()):
        for i, x in enumerate(xs):
            p = dict(cfg.fixed)
            p[cfg.swept] = float(x)
            if cfg.curve_param is not None:
                p[cfg.curve_param] = c
            v = fn(p)
            if not math.isfinite(v):
                raise FloatingPointError(f"{cfg.quantity} is not finite at {p}")
            rows[i, 1 + j] = v
    return SweepTable(cfg, cfg.column_names(), rows)
