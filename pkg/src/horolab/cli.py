"""Command line interface: ``horolab <command>``.

Every ``run``-style command writes CSV, SVG and ``manifest.json`` into the
output directory and prints the manifest summary as JSON.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import lie
from .dynamics import DiscrepancyPoint, EscapeRow, fit_discrepancy, fit_escape
from .errors import HorolabError
from .experiments import _asdict, parse_config, read_csv, run
from .horospheres import CountSeries, fit_growth
from .manin import fit_manin
from .plotting import PlotSeries, PlotStyle, emit_plot


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.replace(",", " ").split()]
    except ValueError:
        raise click.BadParameter(f"expected a comma separated list of numbers, got {text!r}") from None


def _echo(obj) -> None:
    click.echo(json.dumps(_asdict(obj), indent=2, sort_keys=True))


def _execute(data: dict) -> None:
    try:
        manifest = run(parse_config(data))
    except HorolabError as exc:
        raise click.ClickException(f"{type(exc).__name__}: {exc}") from None
    _echo(manifest["summary"])


@click.group()
@click.version_option(package_name="artifact")
def main() -> None:
    """Experiments on horospheres in the space of unimodular lattices."""


@main.group()
def cones() -> None:
    """Cone membership of diagonal directions."""


@cones.command("check")
@click.option("--n", "n", type=int, required=True, help="Rank n.")
@click.option("--entries", required=True, help="Comma separated diagonal entries.")
@click.option("--multiplicative", is_flag=True, help="Entries are the positive diagonal of a; take logs.")
def cones_check(n: int, entries: str, multiplicative: bool) -> None:
    vals = _floats(entries)
    if len(vals) != n:
        raise click.BadParameter(f"expected {n} entries, got {len(vals)}", param_hint="--entries")
    try:
        x = lie.CartanVector.from_multiplicative(vals, traceless=False) if multiplicative else lie.CartanVector.diagonal(vals)
    except ValueError as exc:
        raise click.BadParameter(str(exc), param_hint="--entries") from None
    rep = lie.cone_report(x)
    _echo({k: rep[k] for k in ("in_A", "in_C", "in_Cj", "in_Ctilde", "depth", "weights", "roots")})


def _config_command(kind: str):
    @click.command("run")
    @click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), required=True)
    @click.option("--out", type=click.Path(file_okay=False), default=None, help="Override output_dir.")
    @click.option("--seed", type=int, default=None, help="Override seed.")
    def command(config_path: str, out: str | None, seed: int | None) -> None:
        try:
            data = json.loads(Path(config_path).read_text())
        except json.JSONDecodeError as exc:
            raise click.ClickException(f"InvalidConfig: {config_path} is not JSON: {exc}") from None
        if not isinstance(data, dict):
            raise click.ClickException("InvalidConfig: config must be a JSON object")
        data.setdefault("kind", kind)
        if data["kind"] != kind:
            raise click.ClickException(f"InvalidConfig: kind is {data['kind']!r}, expected {kind!r}")
        if out is not None:
            data["output_dir"] = out
        if seed is not None:
            data["seed"] = seed
        _execute(data)

    command.help = f"Run a {kind} experiment from a JSON config."
    return command


for _kind in ("equidist", "nondiv", "growth"):
    _grp = click.Group(_kind, help=f"{_kind} experiments.")
    _grp.add_command(_config_command(_kind))
    main.add_command(_grp)


@main.command("count-horospheres")
@click.option("--n", "n", type=click.IntRange(2, 3), required=True)
@click.option("--a0", default=None, help="Comma separated diagonal of a0 (default identity).")
@click.option("--rmax", type=float, required=True)
@click.option("--grid", type=int, required=True, help="Number of radii R = rmax k / grid.")
@click.option("--out", type=click.Path(file_okay=False), required=True)
@click.option("--fit-rmin", type=float, default=None)
def count_horospheres(n: int, a0: str | None, rmax: float, grid: int, out: str, fit_rmin: float | None) -> None:
    """Count horosphere lifts meeting balls of radius R."""
    diag = _floats(a0) if a0 else [1.0] * n
    if len(diag) != n:
        raise click.BadParameter(f"expected {n} entries", param_hint="--a0")
    _execute(
        {"kind": "count-horospheres", "a0": diag, "rmax": rmax, "grid": grid, "fit_rmin": fit_rmin, "seed": 0, "output_dir": out}
    )


@main.command("count-flags")
@click.option("--variety", type=click.Choice(["p1", "p2", "p3", "flag3"]), required=True)
@click.option("--tmax", type=int, required=True)
@click.option("--grid", type=int, required=True, help="Number of log-spaced height bounds.")
@click.option("--tmin", type=int, default=None)
@click.option("--out", type=click.Path(file_okay=False), required=True)
def count_flags(variety: str, tmax: int, grid: int, tmin: int | None, out: str) -> None:
    """Count rational points of bounded anticanonical height."""
    _execute({"kind": "count-flags", "variety": variety, "tmax": tmax, "grid": grid, "tmin": tmin, "seed": 0, "output_dir": out})


def _load_run(run_dir: str) -> tuple[dict, Path]:
    path = Path(run_dir)
    mf = path / "manifest.json"
    if not mf.exists():
        raise click.ClickException(f"no manifest.json in {run_dir}")
    return json.loads(mf.read_text()), path


@main.command("fit")
@click.argument("run_dir", type=click.Path(exists=True, file_okay=False))
@click.option("--min", "lo", type=float, default=None, help="Lower end of the fit window (R or T).")
@click.option("--max", "hi", type=float, default=None, help="Upper end of the fit window (R or T).")
def fit(run_dir: str, lo: float | None, hi: float | None) -> None:
    """Refit the CSV series of a finished run."""
    manifest, path = _load_run(run_dir)
    kind, cfg = manifest["kind"], manifest["config"]
    try:
        if kind == "equidist":
            _, rows = read_csv(path / "discrepancy.csv")
            pts = [DiscrepancyPoint(r[0], r[1], r[4], r[2], r[3]) for r in rows]
            win, line = fit_discrepancy(pts, manifest["summary"]["depth"])
            res = {"window": [p.t for p in win], "fit": line, "delta_hat": None if line is None else -line.slope}
        elif kind == "nondiv":
            _, rows = read_csv(path / "escape.csv")
            esc = [EscapeRow(*r) for r in rows]
            res = {}
            for t in sorted({e.t for e in esc}):
                try:
                    res[repr(t)] = fit_escape(esc, t)
                except HorolabError as exc:
                    res[repr(t)] = {"error": str(exc)}
        elif kind == "count-horospheres":
            _, rows = read_csv(path / "counts.csv")
            ser = CountSeries(tuple(r[0] for r in rows), tuple(r[1] for r in rows))
            res = fit_growth(ser, lo, hi, n=len(cfg["a0"]))
        elif kind == "count-flags":
            _, rows = read_csv(path / "counts.csv")
            ser = CountSeries(tuple(r[0] for r in rows), tuple(r[1] for r in rows))
            res = fit_manin(ser, manifest["summary"]["picard_rank"] - 1, lo, hi)
        else:
            raise click.ClickException(f"nothing to fit for a {kind} run")
    except HorolabError as exc:
        raise click.ClickException(f"{type(exc).__name__}: {exc}") from None
    _echo(res)


@main.command("plot")
@click.argument("csv_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--x", "xcol", required=True)
@click.option("--y", "ycol", required=True)
@click.option("--yerr", "ecol", default=None)
@click.option("--logx", is_flag=True)
@click.option("--logy", is_flag=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
def plot(csv_path: str, xcol: str, ycol: str, ecol: str | None, logx: bool, logy: bool, out: str) -> None:
    """Plot two columns of a CSV as an SVG."""
    header, rows = read_csv(csv_path)
    try:
        ix, iy = header.index(xcol), header.index(ycol)
        ie = header.index(ecol) if ecol else None
    except ValueError:
        raise click.BadParameter(f"columns are {header}") from None
    keep = [r for r in rows if not logy or r[iy] > 0]
    keep = [r for r in keep if not logx or r[ix] > 0]
    try:
        svg = emit_plot(
            PlotSeries([r[ix] for r in keep], [r[iy] for r in keep], None if ie is None else [r[ie] for r in keep]),
            PlotStyle(Path(csv_path).stem, xcol, ycol, logx, logy),
        )
    except HorolabError as exc:
        raise click.ClickException(f"{type(exc).__name__}: {exc}") from None
    Path(out).write_text(svg)
    click.echo(out)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
