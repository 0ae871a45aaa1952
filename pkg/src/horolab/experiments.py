"""Configuration-driven experiment runner: strict configs, CSV series, SVG plots, manifests.

A run writes its CSV and SVG outputs into the output directory and finally a
``manifest.json`` (atomically) with the config echo, output hashes and summary
statistics. Identical config and seed give byte-identical CSV files.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import tempfile
import time
from pathlib import Path
from typing import Annotated, Any, Literal, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, TypeAdapter, ValidationError, field_validator

from . import __version__, lie
from .dynamics import FlowSpec, discrepancy_series, escape_mass, fit_escape, growth_slope
from .errors import InvalidConfig
from .horospheres import HorosphereSpec, count_lifts, fit_growth
from .lattice import SiegelTransform
from .linalg import bump_function
from .manin import VARIETIES, count_series, fit_manin
from .plotting import PlotSeries, PlotStyle, emit_plot

SEED_MAX = 2**64 - 1


class _Base(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    seed: int = Field(ge=0, le=SEED_MAX)
    output_dir: str


class _FlowConfig(_Base):
    theta: list[float] = Field(min_length=2)
    times: list[float] = Field(min_length=1)

    @field_validator("theta")
    @classmethod
    def _traceless(cls, v: list[float]) -> list[float]:
        if abs(math.fsum(v)) > 1e-12 * max(1.0, max(abs(x) for x in v)):
            raise ValueError("theta entries must sum to 0")
        if not any(v):
            raise ValueError("theta must be nonzero")
        return v

    @field_validator("times")
    @classmethod
    def _nonneg(cls, v: list[float]) -> list[float]:
        if any(t < 0 for t in v):
            raise ValueError("times must be >= 0")
        return v

    def flow(self) -> FlowSpec:
        return FlowSpec(lie.CartanVector(tuple(self.theta)).normalized(), tuple(self.times))


class ConesConfig(_Base):
    kind: Literal["cones"]
    entries: list[float] = Field(min_length=2)
    multiplicative: bool = False


class EquidistConfig(_FlowConfig):
    kind: Literal["equidist"]
    samples: int = Field(ge=2)
    bump_center: list[float]
    bump_radius: float = Field(gt=0)
    bump_order: int = Field(ge=1)
    primitive: bool
    batch_size: int = Field(default=50_000, ge=1)


class NondivConfig(_FlowConfig):
    kind: Literal["nondiv"]
    samples: int = Field(ge=1)
    eps: list[float] = Field(min_length=1)
    batch_size: int = Field(default=50_000, ge=1)

    @field_validator("eps")
    @classmethod
    def _eps(cls, v: list[float]) -> list[float]:
        if any(not 0 < e <= 1 for e in v):
            raise ValueError("eps values must lie in (0, 1]")
        return v


class GrowthConfig(_FlowConfig):
    kind: Literal["growth"]
    j: int = Field(ge=1)
    r: float = Field(ge=0)
    v: list[float] = Field(min_length=1)
    random_points: int = Field(ge=0)


class CountHorospheresConfig(_Base):
    kind: Literal["count-horospheres"]
    a0: list[float] = Field(min_length=2, max_length=3)
    rmax: float = Field(gt=0)
    grid: int = Field(ge=1)
    fit_rmin: float | None = None


class CountFlagsConfig(_Base):
    kind: Literal["count-flags"]
    variety: Literal["p1", "p2", "p3", "flag3"]
    tmax: int = Field(ge=1)
    grid: int = Field(ge=1)
    tmin: int | None = Field(default=None, ge=1)


ExperimentConfig = Annotated[
    Union[ConesConfig, EquidistConfig, NondivConfig, GrowthConfig, CountHorospheresConfig, CountFlagsConfig],
    Field(discriminator="kind"),
]
_ADAPTER = TypeAdapter(ExperimentConfig)


def parse_config(data: dict | str) -> Any:
    """Validate a config mapping (or JSON text); raises InvalidConfig with field-level messages."""
    try:
        if isinstance(data, str):
            return _ADAPTER.validate_json(data)
        return _ADAPTER.validate_python(data)
    except ValidationError as exc:
        msgs = "; ".join(f"{'.'.join(str(p) for p in e['loc'])}: {e['msg']}" for e in exc.errors())
        raise InvalidConfig(msgs) from None


def config_json(cfg) -> str:
    """Canonical JSON of a config (sorted keys, no whitespace)."""
    return json.dumps(cfg.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))


def blob_hash(data: bytes) -> str:
    """Git-style content hash: sha1 of ``b"blob <len>\\0" + data``."""
    return hashlib.sha1(b"blob %d\0" % len(data) + data).hexdigest()


# ---------------------------------------------------------------- CSV


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def csv_bytes(header: list[str], rows: list[list]) -> bytes:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue().encode()


def read_csv(path: str | Path) -> tuple[list[str], list[list[float]]]:
    """Read a CSV written by this tool; numeric cells become int or float."""
    with open(path, newline="") as fh:
        rd = csv.reader(fh)
        header = next(rd)
        rows = [[_parse(c) for c in r] for r in rd]
    return header, rows


def _parse(c: str):
    if c in ("true", "false"):
        return c == "true"
    try:
        return int(c)
    except ValueError:
        return float(c)


def _atomic_write(path: Path, data: bytes) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# ---------------------------------------------------------------- runners


def _asdict(x) -> Any:
    if hasattr(x, "__dataclass_fields__"):
        return {k: _asdict(getattr(x, k)) for k in x.__dataclass_fields__}
    if isinstance(x, (list, tuple)):
        return [_asdict(v) for v in x]
    if isinstance(x, dict):
        return {str(k): _asdict(v) for k, v in x.items()}
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, float) and not math.isfinite(x):
        return None
    return x


def _run_cones(cfg: ConesConfig):
    if cfg.multiplicative:
        x = lie.CartanVector.from_multiplicative(cfg.entries, traceless=False)
    else:
        x = lie.CartanVector.diagonal(cfg.entries)
    rep = lie.cone_report(x)
    rows = [[i + 1, rep["weights"][i], rep["roots"][i], rep["in_Cj"][i]] for i in range(x.n - 1)]
    files = {"cones.csv": csv_bytes(["index", "weight", "root", "in_Cj"], rows)}
    return files, rep


def _run_equidist(cfg: EquidistConfig):
    flow = cfg.flow()
    if len(cfg.bump_center) != flow.n:
        raise InvalidConfig("bump_center: length must equal n")
    phi = SiegelTransform(bump_function(cfg.bump_center, cfg.bump_radius, cfg.bump_order), cfg.primitive)
    ser = discrepancy_series(flow, phi, cfg.samples, cfg.seed, batch=cfg.batch_size)
    rows = [[p.t, p.estimate, p.stderr, p.n_samples, p.signed] for p in ser.points]
    files = {"discrepancy.csv": csv_bytes(["t", "estimate", "stderr", "n_samples", "signed"], rows)}
    pos = [p for p in ser.points if p.estimate > 0]
    fit = None
    if ser.fit is not None:
        fit = (ser.fit.intercept, ser.fit.slope * ser.depth)
    files["discrepancy.svg"] = emit_plot(
        PlotSeries([p.t for p in pos], [p.estimate for p in pos], [p.stderr for p in pos], fit),
        PlotStyle("discrepancy", "t", "|mean - Haar mean|", logy=True),
    ).encode()
    summary = {
        "depth": ser.depth,
        "reference_mean": ser.reference_mean,
        "window": list(ser.window),
        "delta_hat": ser.delta_hat,
        "delta_ci": list(ser.delta_ci) if ser.delta_ci else None,
        "fit": _asdict(ser.fit),
    }
    return files, summary


def _run_nondiv(cfg: NondivConfig):
    flow = cfg.flow()
    rows = escape_mass(flow, cfg.eps, cfg.samples, cfg.seed, batch=cfg.batch_size)
    files = {
        "escape.csv": csv_bytes(
            ["t", "eps", "estimate", "stderr", "n_samples"],
            [[r.t, r.eps, r.fraction, r.stderr, r.n_samples] for r in rows],
        )
    }
    fits, plots = {}, []
    for t in flow.times:
        sel = [r for r in rows if r.t == t and r.fraction > 0]
        try:
            f = fit_escape(rows, t)
            fits[repr(t)] = _asdict(f)
            line = (f.intercept, f.slope)
        except Exception as exc:  # too few nonzero fractions for a fit at this t
            fits[repr(t)] = {"error": str(exc)}
            line = None
        if sel:
            plots.append(PlotSeries([math.log(r.eps) for r in sel], [r.fraction for r in sel], [r.stderr for r in sel], line, f"t={t:g}"))
    if plots:
        files["escape.svg"] = emit_plot(plots, PlotStyle("escape mass", "log eps", "fraction outside K_eps", logy=True)).encode()
    return files, {"kappa_fits": fits}


def _run_growth(cfg: GrowthConfig):
    flow = cfg.flow()
    g = growth_slope(flow, cfg.j, cfg.r, cfg.v, cfg.random_points, cfg.seed)
    rows = [[t, a, b] for t, a, b in zip(g.times, g.log_sup, g.log_nosup)]
    files = {"growth.csv": csv_bytes(["t", "log_sup", "log_nosup"], rows)}
    files["growth.svg"] = emit_plot(
        [PlotSeries(g.times, g.log_sup, label="sup over B_U(r)"), PlotSeries(g.times, g.log_nosup, label="u = e")],
        PlotStyle("representation growth", "t", "log norm"),
    ).encode()
    summary = {k: v for k, v in _asdict(g).items() if k not in ("times", "log_sup", "log_nosup")}
    return files, summary


def _run_horospheres(cfg: CountHorospheresConfig):
    spec = HorosphereSpec(tuple(cfg.a0))
    grid = [cfg.rmax * k / cfg.grid for k in range(1, cfg.grid + 1)]
    ser = count_lifts(spec, grid)
    files = {"counts.csv": csv_bytes(["R", "N"], [[r, c] for r, c in zip(ser.params, ser.counts)])}
    summary: dict = {"certified_bound": ser.meta["bound"]}
    rmin = cfg.fit_rmin if cfg.fit_rmin is not None else 0.4 * cfg.rmax
    fit = None
    try:
        f = fit_growth(ser, r_min=rmin, n=spec.n)
        summary["fit"] = _asdict(f)
        fit = (f.intercept, f.rate)
    except Exception as exc:  # window too short for a fit
        summary["fit"] = {"error": str(exc)}
    pos = [(r, c) for r, c in zip(ser.params, ser.counts) if c > 0]
    files["counts.svg"] = emit_plot(
        PlotSeries([p[0] for p in pos], [p[1] for p in pos], fit=fit), PlotStyle("lifts meeting B(R)", "R", "N(R)", logy=True)
    ).encode()
    return files, summary


def flag_grid(tmax: int, points: int, tmin: int | None = None) -> list[int]:
    """``points`` log-spaced integer bounds from tmin (default ``max(1, tmax / 10^4)``) to tmax."""
    lo = tmin if tmin is not None else max(1, tmax // 10**4)
    if points == 1:
        return [tmax]
    vals = np.exp(np.linspace(math.log(lo), math.log(tmax), points))
    return sorted(set(int(round(v)) for v in vals))


def _run_flags(cfg: CountFlagsConfig):
    grid = flag_grid(cfg.tmax, cfg.grid, cfg.tmin)
    ser = count_series(cfg.variety, grid)
    rows = [[int(T), c, c / T] for T, c in zip(ser.params, ser.counts)]
    files = {"counts.csv": csv_bytes(["T", "N", "N_over_T"], rows)}
    rank = len(lie.RootData(VARIETIES[cfg.variety][0]).simple_roots - set(VARIETIES[cfg.variety][1]))
    summary: dict = {"picard_rank": rank, "exponents": list(ser.meta["exponents"])}
    try:
        summary["fit"] = _asdict(fit_manin(ser, rank - 1))
    except Exception as exc:  # too few points or decades for a fit
        summary["fit"] = {"error": str(exc)}
    files["counts.svg"] = emit_plot(
        PlotSeries([r[0] for r in rows], [r[2] for r in rows]), PlotStyle("N(T)/T", "T", "N(T)/T", logx=True)
    ).encode()
    return files, summary


_RUNNERS = {
    "cones": _run_cones,
    "equidist": _run_equidist,
    "nondiv": _run_nondiv,
    "growth": _run_growth,
    "count-horospheres": _run_horospheres,
    "count-flags": _run_flags,
}


def run(config) -> dict:
    """Run an experiment and return its manifest (also written to ``manifest.json``)."""
    cfg = config if isinstance(config, BaseModel) else parse_config(config)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    files, summary = _RUNNERS[cfg.kind](cfg)
    hashes = {}
    for name in sorted(files):
        _atomic_write(out / name, files[name])
        hashes[name] = hashlib.sha256(files[name]).hexdigest()
    cj = config_json(cfg)
    manifest = {
        "tool": "horolab",
        "version": __version__,
        "kind": cfg.kind,
        "config": json.loads(cj),
        "config_hash": blob_hash(cj.encode()),
        "seed": cfg.seed,
        "outputs": hashes,
        "summary": _asdict(summary),
        "wall_time_s": time.perf_counter() - start,
    }
    _atomic_write(out / "manifest.json", (json.dumps(manifest, indent=2, sort_keys=True) + "\n").encode())
    return manifest
