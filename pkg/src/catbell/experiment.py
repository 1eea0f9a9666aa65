"""Experiment configuration, parameter sweeps and figure presets.

Configs are INI files::

    [experiment]
    channel = spinstar
    D = 2.0
    sweep = tau_s                 ; the channel's dynamical parameter, or a channel field
    grid = linspace(0, 3.141592653589793, 61)
    output = spinstar_n2.csv

    [channel]
    n_spins = 2

    [optimizer]
    restarts = 64

``grid`` accepts ``linspace(a, b, n)``, ``geomspace(a, b, n)`` or an explicit
comma-separated list. When ``sweep`` names a channel field (e.g. ``nbar``), the
dynamical parameter is held at ``t``.
"""
from __future__ import annotations

import configparser
import csv
import io
import logging
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields, replace
from importlib import resources
from pathlib import Path

import numpy as np

from .bell import BellResult, CorrelationModel, OptimizerConfig, PureStateModel, max_bell_curve, maximize_bell
from .brownian import BrownianModel, BrownianParams
from .errors import ConfigError
from .markov import AdCvModel, AdSpinModel, PdCvModel, PdCvTruncation, PdSpinModel
from .phasespace import CatState
from .postmarkov import PostMarkovModel, PostMarkovParams
from .spinstar import SpinStarModel, SpinStarParams, trace_distance

log = logging.getLogger(__name__)

CSV_HEADER = ["sweep_value", "max_bell", "theta", "theta_prime", "re_beta", "im_beta",
              "re_beta_prime", "im_beta_prime", "converged_flag"]

# channel -> (name of the dynamical parameter, accepted channel fields)
CHANNELS = {
    "pure": ("t", {}),
    "ad_spin": ("P", {}),
    "ad_cv": ("P", {}),
    "pd_spin": ("P", {}),
    "pd_cv": ("P", {"n_max": int}),
    "brownian": ("tau", {"g": float, "x": float, "kT": float, "omega_O": float,
                         "include_gamma_integral": bool}),
    "spinstar": ("tau_s", {"n_spins": int}),
    "postmarkov": ("tau_sl", {"gamma0": float, "gamma": float, "nbar": float, "ratio": float}),
}


def build_model(channel: str, params: dict, D: float) -> CorrelationModel:
    """Instantiate the correlation model for ``channel`` with typed ``params``."""
    cat = CatState(D)
    if channel == "pure":
        return PureStateModel(cat)
    if channel == "ad_spin":
        return AdSpinModel(cat)
    if channel == "ad_cv":
        return AdCvModel(cat)
    if channel == "pd_spin":
        return PdSpinModel(cat)
    if channel == "pd_cv":
        return PdCvModel(cat, PdCvTruncation(n_max=int(params.get("n_max", 40))))
    if channel == "brownian":
        return BrownianModel(BrownianParams(**params), cat)
    if channel == "spinstar":
        return SpinStarModel(SpinStarParams(**params), cat)
    if channel == "postmarkov":
        params = dict(params)
        ratio = params.pop("ratio", None)
        if ratio is not None:
            g0 = params.get("gamma0", 1.0)
            return PostMarkovModel(PostMarkovParams.from_ratio(ratio, params.get("nbar", 0.0), g0), cat)
        return PostMarkovModel(PostMarkovParams(**params), cat)
    raise ConfigError(f"unknown channel {channel!r}")


@dataclass(frozen=True)
class ExperimentConfig:
    channel: str
    grid: tuple
    D: float = 2.0
    params: dict = field(default_factory=dict)
    sweep: str | None = None
    t: float = 0.0
    optimizer: OptimizerConfig = OptimizerConfig()
    output: str = "sweep.csv"
    workers: int = 1
    warm_start: bool = False

    @property
    def sweep_name(self) -> str:
        return self.sweep or CHANNELS[self.channel][0]

    @property
    def sweeps_dynamical(self) -> bool:
        return self.sweep_name == CHANNELS[self.channel][0]

    def validate(self):
        if self.channel not in CHANNELS:
            raise ConfigError(f"unknown channel {self.channel!r}; expected one of {sorted(CHANNELS)}")
        g = np.asarray(self.grid, dtype=float)
        if g.ndim != 1 or g.size == 0:
            raise ConfigError("grid must be nonempty")
        if not np.all(np.isfinite(g)) or np.any(np.diff(g) <= 0):
            raise ConfigError("grid must be finite and strictly increasing")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if not self.sweeps_dynamical and self.sweep_name not in CHANNELS[self.channel][1]:
            raise ConfigError(f"channel {self.channel} cannot sweep {self.sweep_name!r}")
        # every grid point must build a valid model
        try:
            for v in (g[0], g[-1]):
                model = self.model_at(float(v))
                model.parts(np.zeros(1, dtype=complex), self.t if not self.sweeps_dynamical else float(v))
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"invalid parameters: {exc}") from exc
        return self

    def model_at(self, value: float | None = None) -> CorrelationModel:
        params = dict(self.params)
        if value is not None and not self.sweeps_dynamical:
            params[self.sweep_name] = value
        return build_model(self.channel, params, self.D)


def parse_grid(text: str) -> tuple:
    text = text.strip()
    m = re.fullmatch(r"(linspace|geomspace)\(([^)]*)\)", text)
    try:
        if m:
            a, b, n = [s.strip() for s in m.group(2).split(",")]
            fn = np.linspace if m.group(1) == "linspace" else np.geomspace
            n = int(n)
            if n < 1:
                raise ConfigError("grid must be nonempty")
            return tuple(float(v) for v in fn(float(eval_number(a)), float(eval_number(b)), n))
        if not text:
            return ()
        return tuple(float(eval_number(v)) for v in text.split(","))
    except ConfigError:
        raise
    except Exception as exc:
        raise ConfigError(f"cannot parse grid {text!r}: {exc}") from exc


_NUM = re.compile(r"^\s*([-+]?[0-9.eE+-]+)?\s*(\*?\s*pi)?\s*(/\s*[0-9.]+)?\s*$")


def eval_number(text: str) -> float:
    """Parse a float, allowing ``pi``, ``2*pi``, ``pi/2`` style values."""
    text = text.strip()
    try:
        return float(text)
    except ValueError:
        pass
    m = _NUM.match(text)
    if not m or not (m.group(1) or m.group(2)):
        raise ConfigError(f"not a number: {text!r}")
    v = float(m.group(1)) if m.group(1) else 1.0
    if m.group(2):
        v *= np.pi
    if m.group(3):
        v /= float(m.group(3).lstrip("/ "))
    return v


def _typed(key, raw, typ):
    if typ is bool:
        if raw.lower() in ("1", "true", "yes", "on"):
            return True
        if raw.lower() in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"{key}: expected a boolean, got {raw!r}")
    try:
        return typ(eval_number(raw)) if typ is not str else raw
    except (ValueError, ConfigError) as exc:
        raise ConfigError(f"{key}: {exc}") from exc


_OPT_FIELDS = {f.name: f.type for f in fields(OptimizerConfig)}


def load_config(source, overrides: dict | None = None) -> ExperimentConfig:
    """Read an INI config from a path, a preset name or an INI string.

    ``overrides`` maps ``"section.key"`` to string values and wins over the file.
    """
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    cp.optionxform = str
    text = _read_source(source)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    for key, val in (overrides or {}).items():
        if "." not in key:
            raise ConfigError(f"override {key!r} must look like section.key")
        sec, k = key.split(".", 1)
        if not cp.has_section(sec):
            cp.add_section(sec)
        cp.set(sec, k, str(val))
    if not cp.has_section("experiment"):
        raise ConfigError("config needs an [experiment] section")
    ex = cp["experiment"]
    channel = ex.get("channel", "").strip()
    if channel not in CHANNELS:
        raise ConfigError(f"unknown channel {channel!r}; expected one of {sorted(CHANNELS)}")
    known = CHANNELS[channel][1]
    params = {}
    if cp.has_section("channel"):
        for k, raw in cp["channel"].items():
            if k not in known:
                raise ConfigError(f"channel {channel} has no parameter {k!r}")
            params[k] = _typed(k, raw, known[k])
    opt = {}
    if cp.has_section("optimizer"):
        for k, raw in cp["optimizer"].items():
            if k not in _OPT_FIELDS:
                raise ConfigError(f"unknown optimizer option {k!r}")
            typ = int if _OPT_FIELDS[k] in ("int", int) else float
            opt[k] = _typed(k, raw, typ)
    try:
        optimizer = OptimizerConfig(**opt)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if "grid" not in ex:
        raise ConfigError("[experiment] needs a grid")
    known_ex = {"channel", "grid", "D", "sweep", "t", "output", "workers", "warm_start"}
    extra = set(ex.keys()) - known_ex
    if extra:
        raise ConfigError(f"unknown [experiment] keys: {sorted(extra)}")
    cfg = ExperimentConfig(
        channel=channel,
        grid=parse_grid(ex["grid"]),
        D=_typed("D", ex.get("D", "2.0"), float),
        params=params,
        sweep=ex.get("sweep") or None,
        t=_typed("t", ex.get("t", "0"), float),
        optimizer=optimizer,
        output=ex.get("output", "sweep.csv"),
        workers=_typed("workers", ex.get("workers", "1"), int),
        warm_start=_typed("warm_start", ex.get("warm_start", "false"), bool),
    )
    return cfg.validate()


def preset_names():
    return sorted(p.name[:-4] for p in resources.files("catbell.presets").iterdir() if p.name.endswith(".ini"))


def _read_source(source) -> str:
    if isinstance(source, Path) or (isinstance(source, str) and "\n" not in source and "[" not in source):
        path = Path(source)
        if path.is_file():
            return path.read_text()
        name = str(source)
        if name.endswith(".ini"):
            name = name[:-4]
        res = resources.files("catbell.presets") / f"{name}.ini"
        if res.is_file():
            return res.read_text()
        raise ConfigError(f"no config file or preset named {source!r}")
    return str(source)


# -- running -----------------------------------------------------------------

def run_points(cfg: ExperimentConfig) -> list[BellResult]:
    grid = [float(v) for v in cfg.grid]
    if cfg.sweeps_dynamical:
        model = cfg.model_at()
        if cfg.warm_start:
            return max_bell_curve(model, grid, cfg.optimizer, warm_start=True)
        jobs = [(model, v) for v in grid]
    else:
        jobs = [(cfg.model_at(v), cfg.t) for v in grid]

    def one(job):
        m, t = job
        return maximize_bell(m, t, cfg.optimizer)

    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            return list(pool.map(one, jobs))
    return [one(j) for j in jobs]


def format_csv(grid, results) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    g = lambda v: format(float(v), ".17g")  # noqa: E731
    for v, r in zip(grid, results):
        u, p = r.settings.unprimed, r.settings.primed
        w.writerow([g(v), g(r.max_bell), g(u.theta), g(p.theta), g(complex(u.beta).real), g(complex(u.beta).imag),
                    g(complex(p.beta).real), g(complex(p.beta).imag), int(bool(r.converged))])
    return buf.getvalue()


def run_sweep(cfg: ExperimentConfig, outdir: str | Path | None = None) -> Path:
    """Run the sweep and write its CSV; returns the output path."""
    results = run_points(cfg)
    out = Path(cfg.output)
    if outdir is not None and not out.is_absolute():
        out = Path(outdir) / out
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="") as fh:
        fh.write(format_csv(cfg.grid, results))
    return out


def with_overrides(cfg: ExperimentConfig, points: int | None = None, restarts: int | None = None,
                   workers: int | None = None) -> ExperimentConfig:
    """Coarser grid / fewer restarts for quick runs; grid endpoints are kept."""
    if points is not None:
        if points < 1:
            raise ConfigError("points must be >= 1")
        g = np.asarray(cfg.grid)
        cfg = replace(cfg, grid=tuple(float(v) for v in np.linspace(g[0], g[-1], points)) if points > 1
                      else (float(g[0]),))
    if restarts is not None:
        try:
            cfg = replace(cfg, optimizer=replace(cfg.optimizer, restarts=restarts))
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    if workers is not None:
        cfg = replace(cfg, workers=workers)
    return cfg.validate()


# -- figures -----------------------------------------------------------------

FIGURES = {
    "fig1": ["fig1_ad_spin", "fig1_ad_cv", "fig1_pd_spin", "fig1_pd_cv"],
    "fig2": ["fig2_x10_g0.3", "fig2_x10_g0.1", "fig2_x10_g0.05", "fig2_x0.2_g0.05"],
    "fig3": ["fig3_spinstar_n2", "fig3_spinstar_n5", "fig3_spinstar_n100",
             "fig3_postmarkov_r0.05", "fig3_postmarkov_r1", "fig3_postmarkov_r10",
             "fig3_inset_r10", "fig3_inset_r14.3"],
}

TRACE_DISTANCE_SPINS = (2, 5, 100)


def write_trace_distance(outdir: Path, n_spins: int, points: int = 301) -> Path:
    tau = np.linspace(0.0, np.pi, points)
    out = Path(outdir) / f"fig3_trace_distance_n{n_spins}.csv"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["sweep_value", "trace_distance"])
    for t, d in zip(tau, trace_distance(tau, n_spins)):
        w.writerow([format(float(t), ".17g"), format(float(d), ".17g")])
    out.write_text(buf.getvalue())
    return out


def gnuplot_script(csvs, title: str) -> str:
    lines = [
        "# gnuplot script; run with: gnuplot -p <this file>",
        "set datafile separator ','",
        "set key autotitle columnhead",
        f"set title '{title}'",
        "set ylabel 'max |B|'",
        "set arrow from graph 0, first 2 to graph 1, first 2 nohead dt 2",
    ]
    mb = [c for c in csvs if "trace_distance" not in c.name]
    td = [c for c in csvs if "trace_distance" in c.name]
    if mb:
        lines.append("plot " + ", \\\n     ".join(f"'{c.name}' using 1:2 with lines title '{c.stem}'" for c in mb))
    if td:
        lines.append("pause -1")
        lines.append("unset arrow")
        lines.append("set ylabel 'trace distance'")
        lines.append("plot " + ", \\\n     ".join(f"'{c.name}' using 1:2 with lines title '{c.stem}'" for c in td))
    return "\n".join(lines) + "\n"


def run_figures(which: str, outdir, points: int | None = None, restarts: int | None = None,
                workers: int | None = None) -> list[Path]:
    if which not in FIGURES:
        raise ConfigError(f"unknown figure {which!r}; expected one of {sorted(FIGURES)}")
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written = []
    for name in FIGURES[which]:
        cfg = with_overrides(load_config(name), points, restarts, workers)
        written.append(run_sweep(cfg, outdir))
        log.info("wrote %s", written[-1])
    if which == "fig3":
        for n in TRACE_DISTANCE_SPINS:
            written.append(write_trace_distance(outdir, n))
    script = outdir / f"{which}.gp"
    script.write_text(gnuplot_script(written, which))
    return written + [script]
