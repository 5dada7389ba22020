"""Command-line front end: ``cosmoent report | figure | fit | selftest``.

Exit codes: 0 success, 1 usage error, 2 numeric or physicality error,
3 fit degenerate or not converged.
"""

from __future__ import annotations

import json
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional, Sequence

import click

from . import __version__
from .entanglement import EntanglementReport, report_for
from .figures import FIGURES, SweepError, figure_config, run_sweep
from .inverse import (
    FitError,
    FitProblem,
    FitResult,
    FitSettings,
    Observation,
    canonical_parameter,
    fit_parameters,
)
from .phasespace import PhysicalityError
from .selftest import SUITES, run_selftest

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_FIT = 0, 1, 2, 3
QUICK_COUNT = 8


class ConfigError(click.UsageError):
    pass


@dataclass
class Options:
    out: Optional[Path]
    delimiter: str
    quick: bool


def _emit(opts: Options, text: str) -> None:
    if opts.out is None:
        click.echo(text, nl=False)
    else:
        with open(opts.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.version_option(__version__, prog_name="cosmoent")
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), help="Write tabular output here instead of stdout.")
@click.option("--format", "fmt", type=click.Choice(["csv", "tsv"]), default="csv", show_default=True)
@click.option("--quick", is_flag=True, help="Reduced grids for a fast run.")
@click.pass_context
def cli(ctx: click.Context, out: Optional[Path], fmt: str, quick: bool) -> None:
    """Entanglement of a bosonic field in an expanding 1+1 universe."""
    ctx.obj = Options(out=out, delimiter="," if fmt == "csv" else "\t", quick=quick)


# -- report ---------------------------------------------------------------------


def _format_report(r: EntanglementReport) -> str:
    lines = [f"# cosmoent {__version__}"]
    for name in ("k", "mass", "epsilon", "sigma_rate", "s", "theta"):
        lines.append(f"{name:<18} = {getattr(r, name)!r}")
    for name in r.VALUE_FIELDS + ("residual_via_a", "residual_via_abar", "residual_closed"):
        lines.append(f"{name:<18} = {getattr(r, name)!r}")
    lines.append(f"{'ab_clamped':<18} = {r.ab_clamped}")
    return "\n".join(lines) + "\n"


@cli.command()
@click.option("--k", "k", type=float, default=1.0, show_default=True, help="Momentum.")
@click.option("--m", "--mass", "mass", type=float, default=1.0, show_default=True)
@click.option("--epsilon", type=float, default=1.0, show_default=True, help="Expansion volume.")
@click.option("--sigma", "--sigma-rate", "sigma_rate", type=float, default=1.0, show_default=True, help="Expansion rate.")
@click.option("--s", "s", type=float, default=1.0, show_default=True, help="Initial two-mode squeezing.")
@click.option("--json", "as_json", is_flag=True, help="Machine-readable output.")
@click.pass_obj
def report(opts: Options, k: float, mass: float, epsilon: float, sigma_rate: float, s: float, as_json: bool) -> int:
    """Every entanglement quantity at one parameter point."""
    try:
        r = report_for(k, mass, epsilon, sigma_rate, s)
    except PhysicalityError:
        raise
    except ValueError as exc:
        raise click.UsageError(str(exc)) from exc
    text = json.dumps(r.as_dict(), indent=2) + "\n" if as_json else _format_report(r)
    _emit(opts, text)
    return EXIT_OK


# -- figure ---------------------------------------------------------------------


def _parse_floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise click.BadParameter(f"expected comma-separated numbers, got {text!r}") from None


@cli.command()
@click.argument("name", type=click.Choice(sorted(FIGURES)))
@click.option("--count", type=click.IntRange(min=2), help="Number of abscissa points.")
@click.option("--curves", help="Comma-separated values of the curve parameter.")
@click.pass_obj
def figure(opts: Options, name: str, count: Optional[int], curves: Optional[str]) -> int:
    """Sweep data for one figure panel, one column per curve."""
    if count is None and opts.quick:
        count = QUICK_COUNT
    try:
        cfg = figure_config(name, count=count, curves=_parse_floats(curves) if curves else None)
    except SweepError as exc:
        raise click.UsageError(str(exc)) from exc
    _emit(opts, run_sweep(cfg).to_text(opts.delimiter))
    return EXIT_OK


# -- fit --------------------------------------------------------------------------


@dataclass
class FitConfig:
    problem: FitProblem
    settings: FitSettings
    truth: dict[str, float] = field(default_factory=dict)


def _parse_pair(key: str, value: str) -> tuple[float, float]:
    parts = _numbers(key, value)
    if len(parts) != 2:
        raise ConfigError(f"{key}: expected 'lo, hi', got {value!r}")
    return parts[0], parts[1]


def _numbers(key: str, value: str) -> list[float]:
    try:
        return [float(v) for v in value.split(",")]
    except ValueError:
        raise ConfigError(f"{key}: expected numbers, got {value!r}") from None


def parse_config_lines(lines: Sequence[str], overrides: Sequence[str] = ()) -> dict[str, str]:
    """Flat ``key = value`` lines; ``#`` starts a comment. Later keys win."""
    entries: dict[str, str] = {}
    for lineno, raw in enumerate(list(lines) + list(overrides), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        entries[key] = value
    return entries


def build_fit_config(entries: dict[str, str]) -> FitConfig:
    known: dict[str, float] = {}
    unknown: dict[str, tuple[float, float]] = {}
    truth: dict[str, float] = {}
    raw_obs: list[tuple[str, str]] = []
    weighting = "absolute"
    settings: dict[str, int] = {}
    for key, value in entries.items():
        head, _, tail = key.partition(".")
        try:
            if head == "known" and tail:
                known[canonical_parameter(tail)] = _numbers(key, value)[0]
            elif head == "unknown" and tail:
                unknown[canonical_parameter(tail)] = _parse_pair(key, value)
            elif head == "true" and tail:
                truth[canonical_parameter(tail)] = _numbers(key, value)[0]
            elif head == "obs" and tail:
                raw_obs.append((key, value))
            elif key == "weighting":
                if value not in ("absolute", "relative"):
                    raise ConfigError(f"weighting must be 'absolute' or 'relative', got {value!r}")
                weighting = value
            elif key in ("grid", "max_starts", "polish"):
                settings[key] = int(value)
            else:
                raise ConfigError(f"unknown config key {key!r}")
        except FitError as exc:
            raise ConfigError(f"{key}: {exc}") from None
        except ValueError as exc:
            raise ConfigError(f"{key}: {exc}") from None
    if not raw_obs:
        raise ConfigError("config has no observations (obs.<label> = quantity, k, value[, weight])")
    observations = []
    for key, value in raw_obs:
        parts = [p.strip() for p in value.split(",")]
        if len(parts) not in (3, 4):
            raise ConfigError(f"{key}: expected 'quantity, k, value[, weight]', got {value!r}")
        k, v = _numbers(key, ",".join(parts[1:3]))
        if len(parts) == 4:
            w = _numbers(key, parts[3])[0]
        else:
            w = 1.0 / (v * v) if weighting == "relative" and v > 0 else 1.0
        try:
            observations.append(Observation(k=k, quantity=parts[0], value=v, weight=w))
        except FitError as exc:
            raise ConfigError(f"{key}: {exc}") from None
    try:
        problem = FitProblem(observations, known, unknown)
    except FitError as exc:
        raise ConfigError(str(exc)) from None
    return FitConfig(problem, FitSettings(**settings), truth)


def load_fit_config(path: Path, overrides: Sequence[str] = ()) -> FitConfig:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {str(path)!r}: {exc.strerror}") from None
    return build_fit_config(parse_config_lines(text.splitlines(), overrides))


def example_config_path() -> Path:
    return Path(str(resources.files("cosmoent") / "data" / "example_fit.cfg"))


def _format_fit(cfg: FitConfig, result: FitResult) -> str:
    lines = [f"# cosmoent {__version__} fit"]
    for name, value in result.estimates.items():
        line = f"{name:<12} = {value!r}"
        if name in cfg.truth:
            line += f"   (true {cfg.truth[name]!r}, rel. error {abs(value / cfg.truth[name] - 1):.3g})"
        lines.append(line)
    lines += [
        f"{'rss':<12} = {result.rss!r}",
        f"{'converged':<12} = {result.converged}",
        f"{'degenerate':<12} = {result.degenerate}",
        f"{'evaluations':<12} = {result.evaluations}",
    ]
    return "\n".join(lines) + "\n"


def _residual_table(result: FitResult, delimiter: str) -> str:
    rows = [delimiter.join(["quantity", "k", "observed", "model", "residual", "weight"])]
    for obs, r in result.residuals:
        vals = [obs.quantity] + [repr(float(v)) for v in (obs.k, obs.value, obs.value + r, r, obs.weight)]
        rows.append(delimiter.join(vals))
    return "\n".join(rows) + "\n"


@cli.command()
@click.argument("config", type=click.Path(dir_okay=False, path_type=Path), required=False)
@click.option("--example", is_flag=True, help="Use the bundled synthetic example config.")
@click.option("--set", "overrides", multiple=True, metavar="KEY=VALUE", help="Override a config entry.")
@click.pass_obj
def fit(opts: Options, config: Optional[Path], example: bool, overrides: tuple[str, ...]) -> int:
    """Fit unknown parameters to the observations in CONFIG."""
    if (config is None) == (not example):
        raise click.UsageError("give either CONFIG or --example")
    cfg = load_fit_config(example_config_path() if example else config, overrides)
    result = fit_parameters(cfg.problem, cfg.settings)
    click.echo(_format_fit(cfg, result), nl=False)
    table = _residual_table(result, opts.delimiter)
    if opts.out is None:
        click.echo("")
    _emit(opts, table)
    if result.degenerate or not result.converged:
        click.echo("fit is degenerate or did not converge", err=True)
        return EXIT_FIT
    return EXIT_OK


# -- selftest ---------------------------------------------------------------------


@cli.command()
@click.option("--suite", "suites", multiple=True, type=click.Choice(list(SUITES)), help="Run only these suites.")
@click.option("--inject-fault", is_flag=True, hidden=True)
@click.pass_obj
def selftest(opts: Options, suites: tuple[str, ...], inject_fault: bool) -> int:
    """Run the invariant suites; exit 0 iff all pass."""
    outcomes = run_selftest(quick=opts.quick, fault=inject_fault, only=suites)
    for o in outcomes:
        status = "PASS" if o.passed else "FAIL"
        click.echo(f"{status} {o.name:<14} {o.seconds:8.3f} s  {o.detail}".rstrip())
    failed = [o.name for o in outcomes if not o.passed]
    click.echo(f"{len(outcomes) - len(failed)}/{len(outcomes)} suites passed")
    return EXIT_NUMERIC if failed else EXIT_OK


# -- entry point --------------------------------------------------------------------


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        rv = cli.main(args=list(argv) if argv is not None else None, prog_name="cosmoent", standalone_mode=False)
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.UsageError as exc:
        exc.show()
        return EXIT_USAGE
    except click.ClickException as exc:
        exc.show()
        return EXIT_USAGE
    except click.Abort:
        click.echo("aborted", err=True)
        return EXIT_USAGE
    except (ArithmeticError, FloatingPointError, PhysicalityError) as exc:
        click.echo(f"numeric error: {exc}", err=True)
        return EXIT_NUMERIC
    # --help and --version return None
    return rv if isinstance(rv, int) else EXIT_OK


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
