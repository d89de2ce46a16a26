"""Command-line front end: config parsing, sweep orchestration, serialization.

A run is described by one TOML file: a flux block (cosine/sine coefficients
of the potential traces), a scenario name, per-scenario grids, optional
tolerance overrides, a seed, and output paths.  Every run requires a
calibration artifact (written by the `calibrate` subcommand) and verifies
its hash before touching any kernel.  Three files are written per run:

    report.json    checks, constants, trends (machine-readable)
    cells.csv      per-cell raw values under a frozen column schema
    manifest.json  config hash, versions, wall time, CSV schema, tolerances

Report and CSV bytes are a pure function of config + seed: floats serialize
repr-exactly and nothing time- or host-dependent enters them.  The manifest
carries the wall time and environment so timing never leaks into the
comparable artifacts.  Sweeps vectorize across grid cells; all files are
written from the single orchestrating thread.

Exit codes: 0 every check passed, 1 a check failed, 2 invalid config or
missing/corrupt calibration artifact, 3 numerical convergence failure.
"""

import argparse
import json
import math
import os
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import estimates
from .angular import FluxConfig, solve_angular
from .calibration import DRIFT_TOL, load_and_verify, run_calibration
from .errors import ConfigError, ConvergenceError, DomainError
from .estimates import (DECAY_TIMES, TIME_WINDOW, AdmissiblePair, decay_sweep,
                        hardy_check, heat_bound_fit, heat_pair_grid,
                        local_smoothing_check, strichartz_sweep)
from .kernels import (INTEGER_FLUX_TOL, GeometricDistances, PolarPoint,
                      heat_kernel_closed, heat_kernel_series,
                      schrodinger_kernel_closed, schrodinger_kernel_series,
                      stone_check)
from .propagators import annulus_datum, gaussian_datum, lp_packet
from .reporting import EstimateReport, csv_text
from .transforms import RadialGrid

try:
    from importlib import metadata as _metadata
    _VERSION = _metadata.version("abflow")
except Exception:  # not installed; running from a checkout
    _VERSION = "unknown"

_TWO_PI = 2.0 * math.pi
_OUTPUT_ENV = "ABFLOW_OUTPUT_ROOT"
_CSV_SCHEMA_VERSION = 1
_COMPARE = {"le": "<=", "lt": "<", "ge": ">="}


# ---------------------------------------------------------------------------
# typed config tables


class _Table:
    """Reader for one config table that rejects unknown keys."""

    def __init__(self, mapping, where):
        if mapping is None:
            mapping = {}
        if not isinstance(mapping, dict):
            raise ConfigError(f"{where} must be a table")
        self._map = dict(mapping)
        self._where = where

    def _name(self, key):
        return f"{self._where}.{key}" if self._where else key

    def number(self, key, default=None, lo=None, hi=None):
        v = self._map.pop(key, default)
        if v is None:
            raise ConfigError(f"{self._name(key)} is required")
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError(f"{self._name(key)} must be a number")
        v = float(v)
        if lo is not None and v < lo:
            raise ConfigError(f"{self._name(key)} must be >= {lo}, got {v:g}")
        if hi is not None and v > hi:
            raise ConfigError(f"{self._name(key)} must be <= {hi}, got {v:g}")
        return v

    def integer(self, key, default=None, lo=None, hi=None):
        v = self._map.pop(key, default)
        if v is None:
            raise ConfigError(f"{self._name(key)} is required")
        if isinstance(v, bool) or not isinstance(v, int):
            raise ConfigError(f"{self._name(key)} must be an integer")
        if lo is not None and v < lo:
            raise ConfigError(f"{self._name(key)} must be >= {lo}, got {v}")
        if hi is not None and v > hi:
            raise ConfigError(f"{self._name(key)} must be <= {hi}, got {v}")
        return int(v)

    def text(self, key, default=None, choices=None):
        v = self._map.pop(key, default)
        if v is None:
            raise ConfigError(f"{self._name(key)} is required")
        if not isinstance(v, str):
            raise ConfigError(f"{self._name(key)} must be a string")
        if choices is not None and v not in choices:
            raise ConfigError(f"{self._name(key)} must be one of "
                              f"{', '.join(choices)}; got {v!r}")
        return v

    def numbers(self, key, default=None, n_min=1, lo=None):
        v = self._map.pop(key, None)
        if v is None:
            if default is None:
                raise ConfigError(f"{self._name(key)} is required")
            return tuple(float(x) for x in default)
        if isinstance(v, (int, float)) and not isinstance(v, bool):
            v = [v]
        if (not isinstance(v, list) or len(v) < n_min
                or any(isinstance(x, bool) or not isinstance(x, (int, float))
                       for x in v)):
            raise ConfigError(f"{self._name(key)} must be a list of at least "
                              f"{n_min} numbers")
        vals = tuple(float(x) for x in v)
        if lo is not None and any(x < lo for x in vals):
            raise ConfigError(f"{self._name(key)} entries must be >= {lo}")
        return vals

    def integers(self, key, default=None, n_min=1):
        v = self._map.pop(key, None)
        if v is None:
            if default is None:
                raise ConfigError(f"{self._name(key)} is required")
            return tuple(int(x) for x in default)
        if isinstance(v, int) and not isinstance(v, bool):
            v = [v]
        if (not isinstance(v, list) or len(v) < n_min
                or any(isinstance(x, bool) or not isinstance(x, int)
                       for x in v)):
            raise ConfigError(f"{self._name(key)} must be a list of at least "
                              f"{n_min} integers")
        return tuple(int(x) for x in v)

    def raw(self, key, default=None):
        return self._map.pop(key, default)

    def finish(self):
        if self._map:
            keys = ", ".join(sorted(self._map))
            raise ConfigError(f"unknown keys in {self._where or 'config'}: "
                              f"{keys}")


# ---------------------------------------------------------------------------
# run configuration


@dataclass(frozen=True)
class RunConfig:
    """Validated contents of one run config file."""

    path: str
    scenario: str
    label: str
    seed: int
    flux: FluxConfig
    grids: dict
    tolerances: dict
    data: tuple
    output_root: Path
    calibration_path: Path
    raw: dict


def _trig_trace(cos_coeffs, sin_coeffs):
    """Trace from cosine/sine coefficient lists; float when constant."""
    if len(cos_coeffs) == 1 and not any(sin_coeffs):
        return float(cos_coeffs[0])

    def trace(theta):
        th = np.asarray(theta, dtype=float)
        out = np.full(th.shape, cos_coeffs[0], dtype=float)
        for n, c in enumerate(cos_coeffs[1:], start=1):
            if c:
                out = out + c * np.cos(n * th)
        for n, s in enumerate(sin_coeffs, start=1):
            if s:
                out = out + s * np.sin(n * th)
        return out

    return trace


def _build_flux(table):
    t = _Table(table, "flux")
    alpha_cos = t.numbers("alpha")
    alpha_sin = t.numbers("alpha_sin", default=())
    a_cos = t.numbers("a", default=(0.0,))
    a_sin = t.numbers("a_sin", default=())
    grid_size = t.integer("grid_size", default=2048, lo=16)
    t.finish()
    fc = FluxConfig(alpha=_trig_trace(alpha_cos, alpha_sin),
                    a=_trig_trace(a_cos, a_sin), grid_size=grid_size)
    # The sufficient positivity condition sup(a_-) < dist(flux, Z)^2 is
    # conservative inside the library (recorded, not raised), but configs
    # that actually carry a negative part past the gap are rejected here:
    # every scenario downstream assumes it.  a_- == 0 is always safe, in
    # particular at integer flux where the gap closes.
    neg = fc.negative_part_sup
    if neg > 0.0 and neg >= fc.integer_distance ** 2:
        msg = [v for v in fc.violations() if "negative part bound" in v]
        raise ConfigError(msg[0] if msg else
                          "negative part bound violated", violations=msg)
    return fc


def _resolve_output_root(output_table):
    env = os.environ.get(_OUTPUT_ENV)
    if env:
        return Path(env)
    if output_table and "root" in output_table:
        return Path(output_table["root"])
    return Path("runs")


def default_calibration_path(output_table=None):
    """Where the constants artifact lives for a given output block."""
    root = _resolve_output_root(output_table)
    if output_table and "calibration" in output_table:
        return Path(output_table["calibration"])
    return root / "calibration.json"


def load_config(path):
    """Parse and validate a TOML run config."""
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file {path} not found")
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid TOML: {exc}")

    top = _Table(raw, "")
    scenario = top.text("scenario", choices=tuple(SCENARIOS))
    label = top.text("label", default=scenario)
    if not label or any(c not in _LABEL_CHARS for c in label):
        raise ConfigError("label must be non-empty and use only letters, "
                          "digits, '.', '_' or '-'")
    seed = top.integer("seed", default=0, lo=0)
    flux = _build_flux(top.raw("flux"))
    grids = top.raw("grids", {})
    if not isinstance(grids, dict):
        raise ConfigError("grids must be a table")
    tolerances = top.raw("tolerances", {})
    if not isinstance(tolerances, dict):
        raise ConfigError("tolerances must be a table")
    data = top.raw("data", [])
    if not isinstance(data, list) or any(not isinstance(d, dict)
                                         for d in data):
        raise ConfigError("data must be an array of tables")
    output_table = top.raw("output", {})
    out = _Table(output_table, "output")
    out.text("root", default="runs")
    out.text("calibration", default="")
    out.finish()
    top.finish()

    spec = SCENARIOS[scenario]
    if data and not spec.takes_data:
        raise ConfigError(f"scenario {scenario} does not take data entries")

    return RunConfig(
        path=str(path),
        scenario=scenario,
        label=label,
        seed=seed,
        flux=flux,
        grids=dict(grids),
        tolerances=dict(tolerances),
        data=tuple(data),
        output_root=_resolve_output_root(output_table),
        calibration_path=default_calibration_path(output_table),
        raw=raw,
    )


_LABEL_CHARS = set("abcdefghijklmnopqrstuvwxyz"
                   "ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789._-")


# ---------------------------------------------------------------------------
# flux and datum resolution


def _flux_object(cfg, basis_size=64):
    """Cheapest flux description the scenario math accepts.

    Constant purely magnetic traces reduce to a float, constant traces with
    a scalar part stay a FluxConfig, and genuinely angle-dependent traces go
    through the Galerkin spectrum.
    """
    fc = cfg.flux
    if fc.is_constant:
        if fc.a_mean == 0.0:
            return fc.flux
        return fc
    return solve_angular(fc, basis_size=basis_size)


def _require_constant_magnetic(cfg, scenario, why):
    fc = cfg.flux
    if not fc.is_constant or fc.a_mean != 0.0:
        raise ConfigError(f"scenario {scenario} needs a constant alpha trace "
                          f"and a = 0: {why}")
    return fc.flux


def _datum_from_spec(spec, grid, flux, seed, index):
    t = _Table(spec, f"data[{index}]")
    kind = t.text("kind", choices=("gaussian", "annulus", "lp"))
    if kind == "gaussian":
        out = gaussian_datum(grid, flux,
                             k=t.integer("mode", default=0),
                             r0=t.number("r0", default=4.0, lo=0.0),
                             width=t.number("width", default=1.0))
    elif kind == "annulus":
        out = annulus_datum(grid, flux,
                            k=t.integer("mode", default=0),
                            r_in=t.number("r_in", default=2.0, lo=0.0),
                            r_out=t.number("r_out", default=5.0),
                            edge=t.number("edge", default=0.5))
    else:
        lp_seed = seed + t.integer("seed_offset", default=index)
        if lp_seed < 0:
            raise ConfigError(f"data[{index}]: seed + seed_offset must be "
                              f">= 0, got {lp_seed}")
        modes = t.integers("modes", default=(-1, 0, 1))
        out = lp_packet(grid, flux, t.integer("band", default=1, lo=1),
                        seed=lp_seed, modes=modes)
    t.finish()
    return out


def _field_states(cfg, grid, flux, defaults):
    specs = cfg.data if cfg.data else defaults
    return [_datum_from_spec(dict(s), grid, flux, cfg.seed, i)
            for i, s in enumerate(specs)]


def _random_pairs(rng, n, r_lo, r_hi):
    pairs = []
    for _ in range(n):
        r1, r2 = rng.uniform(r_lo, r_hi, size=2)
        th1, th2 = rng.uniform(0.0, _TWO_PI, size=2)
        pairs.append((PolarPoint(float(r1), float(th1)),
                      PolarPoint(float(r2), float(th2))))
    return pairs


# ---------------------------------------------------------------------------
# scenario runners: each returns (report, csv_header, csv_rows)


def _run_kernel(cfg, calib):
    alpha = _require_constant_magnetic(
        cfg, "kernel", "closed-form kernels exist only there")
    g = _Table(cfg.grids, "grids")
    times = g.numbers("times", default=(0.25, 0.5, 1.0, 2.0), lo=1e-6)
    gamma = g.number("gamma", default=0.3, lo=0.05, hi=1.5)
    n_pairs = g.integer("n_pairs", default=8, lo=1)
    r_lo = g.number("r_lo", default=0.5, lo=1e-3)
    r_hi = g.number("r_hi", default=2.2)
    k_max = g.integer("k_max", default=80, lo=8)
    g.finish()
    if r_hi <= r_lo:
        raise ConfigError("grids.r_hi must exceed grids.r_lo")
    tol = _Table(cfg.tolerances, "tolerances")
    heat_rel = tol.number("heat_rel", default=1e-9, lo=0.0)
    schr_rel = tol.number("schrodinger_rel", default=1e-6, lo=0.0)
    free_rel = tol.number("free_rel", default=1e-10, lo=0.0)
    tol.finish()

    heat_closed_tol, heat_series_tol = 1e-11, 1e-9
    schr_closed_tol, schr_series_tol = 1e-9, 1e-6
    rng = np.random.default_rng(cfg.seed)
    pairs = _random_pairs(rng, n_pairs, r_lo, r_hi)
    free_case = abs(alpha - round(alpha)) <= INTEGER_FLUX_TOL
    c_free = calib["constants"]["c_free"]["value"]

    rows = []
    worst = {"heat": 0.0, "schrodinger": 0.0, "free": 0.0}
    for t in times:
        for x, y in pairs:
            hc = complex(heat_kernel_closed(t, x, y, alpha,
                                            tol=heat_closed_tol))
            hs = complex(heat_kernel_series(t, x, y, alpha, k_max=k_max,
                                            tol=heat_series_tol).value)
            rel = abs(hs - hc) / max(abs(hc), 1e-300)
            worst["heat"] = max(worst["heat"], rel)
            rows.append(("heat", float(t), 0.0, x.r, x.theta, y.r, y.theta,
                         hc.real, hc.imag, hs.real, hs.imag, rel))
            tc = t * complex(math.cos(gamma), -math.sin(gamma))
            sc = complex(schrodinger_kernel_closed(tc, x, y, alpha,
                                                   tol=schr_closed_tol))
            ss = complex(schrodinger_kernel_series(tc, x, y, alpha,
                                                   k_max=k_max,
                                                   tol=schr_series_tol).value)
            rel = abs(ss - sc) / max(abs(sc), 1e-300)
            worst["schrodinger"] = max(worst["schrodinger"], rel)
            rows.append(("schrodinger", float(t), gamma, x.r, x.theta,
                         y.r, y.theta, sc.real, sc.imag, ss.real, ss.imag,
                         rel))
            if free_case:
                # integer flux is gauge-equivalent to the free operator;
                # the kernels differ by the pure gauge phase e^{in dtheta}
                d = GeometricDistances.from_points(x, y).d
                n = round(alpha)
                hf = (c_free / t * math.exp(-d * d / (4.0 * t))
                      * complex(math.cos(n * (x.theta - y.theta)),
                                math.sin(n * (x.theta - y.theta))))
                rel = abs(hc - hf) / max(abs(hf), 1e-300)
                worst["free"] = max(worst["free"], rel)
                rows.append(("heat_vs_free", float(t), 0.0, x.r, x.theta,
                             y.r, y.theta, hc.real, hc.imag, hf.real,
                             hf.imag, rel))

    report = EstimateReport(
        name="kernel-agreement",
        grid={"times": list(times), "gamma": gamma, "n_pairs": n_pairs,
              "r_lo": r_lo, "r_hi": r_hi, "k_max": k_max, "alpha": alpha,
              "free_case": free_case},
        tolerances={"heat_rel": heat_rel, "schrodinger_rel": schr_rel,
                    "heat_closed_tol": heat_closed_tol,
                    "heat_series_tol": heat_series_tol,
                    "schrodinger_closed_tol": schr_closed_tol,
                    "schrodinger_series_tol": schr_series_tol},
        constants={"max_heat_rel_err": worst["heat"],
                   "max_schrodinger_rel_err": worst["schrodinger"]},
    )
    report.add_check("heat_closed_vs_series", worst["heat"], heat_rel)
    report.add_check("schrodinger_closed_vs_series", worst["schrodinger"],
                     schr_rel)
    if free_case:
        report.tolerances["free_rel"] = free_rel
        report.constants["max_free_rel_err"] = worst["free"]
        report.constants["c_free_calibrated"] = c_free
        report.add_check("heat_closed_vs_free", worst["free"], free_rel)
    header = ("flow", "t", "gamma", "r1", "theta1", "r2", "theta2",
              "re_a", "im_a", "re_b", "im_b", "rel_err")
    return report, header, rows


def _run_decay(cfg, calib):
    g = _Table(cfg.grids, "grids")
    flow = g.text("flow", default="schrodinger",
                  choices=("schrodinger", "half_wave", "klein_gordon"))
    wave = flow != "schrodinger"
    times = g.numbers("times", default=DECAY_TIMES, n_min=4, lo=1e-3)
    freq_max = g.number("freq_max", default=9.0 if wave else 5.0, lo=0.5)
    span = g.number("span", default=88.0 if wave else 96.0, lo=4.0)
    basis_size = g.integer("basis_size", default=64, lo=1)
    g.finish()
    _Table(cfg.tolerances, "tolerances").finish()
    if list(times) != sorted(times) or times[-1] > TIME_WINDOW[1]:
        raise ConfigError(f"grids.times must increase and stay within "
                          f"t <= {TIME_WINDOW[1]:g}")

    flux = _flux_object(cfg, basis_size)
    grid = RadialGrid.for_bandwidth(span, freq_max)
    if wave:
        defaults = ({"kind": "lp", "band": 1, "seed_offset": 0},
                    {"kind": "lp", "band": 2, "seed_offset": 3})
    else:
        defaults = ({"kind": "gaussian", "mode": 0, "r0": 0.7, "width": 0.9},
                    {"kind": "gaussian", "mode": 1, "r0": 1.0, "width": 1.0})
    data = _field_states(cfg, grid, flux, defaults)

    report = decay_sweep(flow, flux, data, times=times, freq_max=freq_max)
    rows = []
    for i in range(len(data)):
        ratios = report.trends[f"ratio_{i}"]
        running = report.trends[f"running_max_{i}"]
        rows.extend((i, float(t), r, m)
                    for t, r, m in zip(times, ratios, running))
    return report, ("datum", "t", "ratio", "running_max"), rows


def _run_heat_bound(cfg, calib):
    g = _Table(cfg.grids, "grids")
    times = g.numbers("times", default=(0.01, 0.1, 1.0, 10.0), lo=1e-6)
    cs = g.numbers("cs", default=(4.0, 4.5, 8.0), lo=0.1)
    radii = g.numbers("radii", default=(0.1, 0.3, 1.0, 3.0), lo=1e-3)
    angles = g.numbers("angles", default=(0.0, 1.2, 2.4, 3.0), lo=0.0)
    k_max = g.integer("k_max", default=96, lo=8)
    basis_size = g.integer("basis_size", default=64, lo=1)
    g.finish()
    _Table(cfg.tolerances, "tolerances").finish()

    flux = _flux_object(cfg, basis_size)
    if isinstance(flux, FluxConfig):
        # constant a != 0 has no closed form; route through the spectrum
        flux = solve_angular(flux, basis_size=basis_size)
    pairs = heat_pair_grid(radii, angles)
    report = heat_bound_fit(times, pairs, flux, cs=cs, k_max=k_max)
    rows = [(float(c), float(t), report.trends[f"C{c:g}"][i])
            for c in cs for i, t in enumerate(times)]
    return report, ("c", "t", "max_weighted"), rows


def _run_stone(cfg, calib):
    alpha = _require_constant_magnetic(
        cfg, "stone", "the closed-form spectral measure requires it")
    g = _Table(cfg.grids, "grids")
    lams = g.numbers("lams", default=(0.5, 2.0, 8.0), lo=1e-6)
    n_pairs = g.integer("n_pairs", default=10, lo=1)
    r_lo = g.number("r_lo", default=0.5, lo=1e-3)
    r_hi = g.number("r_hi", default=2.5)
    k_max = g.integer("k_max", default=120, lo=8)
    g.finish()
    if r_hi <= r_lo:
        raise ConfigError("grids.r_hi must exceed grids.r_lo")
    tol = _Table(cfg.tolerances, "tolerances")
    mode_rel = tol.number("mode_rel", default=1e-10, lo=0.0)
    closed_rel = tol.number("closed_rel", default=1e-6, lo=0.0)
    tol.finish()

    rng = np.random.default_rng(cfg.seed)
    pairs = _random_pairs(rng, n_pairs, r_lo, r_hi)
    report = EstimateReport(
        name="stone-formula",
        grid={"lams": list(lams), "n_pairs": n_pairs, "r_lo": r_lo,
              "r_hi": r_hi, "k_max": k_max, "alpha": alpha},
        tolerances={"mode_rel": mode_rel, "closed_rel": closed_rel},
    )
    rows = []
    for lam in lams:
        worst_mode = 0.0
        worst_closed = 0.0
        for x, y in pairs:
            rep = stone_check(lam, x, y, alpha, k_max=k_max)
            by_name = {c.name: c.value for c in rep.checks}
            worst_mode = max(worst_mode, by_name["mode_rel_err"])
            worst_closed = max(worst_closed, by_name["closed_rel_err"])
            sv = complex(rep.constants["series"])
            cv = complex(rep.constants["closed"])
            rows.append((float(lam), x.r, x.theta, y.r, y.theta,
                         sv.real, sv.imag, cv.real, cv.imag,
                         by_name["mode_rel_err"], by_name["closed_rel_err"]))
        report.constants[f"max_mode_rel_lam{lam:g}"] = worst_mode
        report.constants[f"max_closed_rel_lam{lam:g}"] = worst_closed
        report.add_check(f"mode_rel_lam{lam:g}", worst_mode, mode_rel)
        report.add_check(f"closed_rel_lam{lam:g}", worst_closed, closed_rel)
    header = ("lam", "r1", "theta1", "r2", "theta2", "re_series",
              "im_series", "re_closed", "im_closed", "mode_rel_err",
              "closed_rel_err")
    return report, header, rows


def _run_strichartz(cfg, calib):
    g = _Table(cfg.grids, "grids")
    exp_raw = g.raw("exponents", [[math.inf, 2.0, 0.0], [8.0, 4.0, 0.0]])
    window = g.numbers("time_window", default=TIME_WINDOW, n_min=2)
    n_time = g.integer("n_time", default=65, lo=9)
    freq_max = g.number("freq_max", default=6.0, lo=0.5)
    span = g.number("span", default=90.0, lo=4.0)
    basis_size = g.integer("basis_size", default=64, lo=1)
    g.finish()
    _Table(cfg.tolerances, "tolerances").finish()
    if (not isinstance(exp_raw, list) or not exp_raw
            or any(not isinstance(e, list) or len(e) != 3 for e in exp_raw)):
        raise ConfigError("grids.exponents must be a list of [q, p, eta] "
                          "triples")
    try:
        exps = [AdmissiblePair.from_exponents(*e) for e in exp_raw]
    except DomainError as exc:
        raise ConfigError(f"grids.exponents: {exc}")
    if len(window) != 2 or not 0.0 <= window[0] < window[1] <= TIME_WINDOW[1]:
        raise ConfigError(f"grids.time_window must be [t0, t1] with "
                          f"0 <= t0 < t1 <= {TIME_WINDOW[1]:g}")

    flux = _flux_object(cfg, basis_size)
    grid = RadialGrid.for_bandwidth(span, freq_max)
    defaults = ({"kind": "gaussian", "mode": 0, "r0": 1.5, "width": 1.0},
                {"kind": "gaussian", "mode": 1, "r0": 2.5, "width": 1.2})
    data = _field_states(cfg, grid, flux, defaults)
    report = strichartz_sweep(exps, flux, data, time_window=window,
                              n_time=n_time, freq_max=freq_max)
    rows = []
    for e in exps:
        key = f"q{e.q:g}_p{e.p:g}_eta{e.eta:g}"
        rows.extend((e.q, e.p, e.eta, i, r)
                    for i, r in enumerate(report.trends[key]))
    return report, ("q", "p", "eta", "datum", "ratio"), rows


def _run_eigs(cfg, calib):
    g = _Table(cfg.grids, "grids")
    basis_size = g.integer("basis_size", default=64, lo=1)
    j_min = g.integer("j_min", default=8, lo=1)
    j_max = g.integer("j_max", default=20)
    k_check = g.integer("k_check", default=8, lo=0)
    g.finish()
    if j_max <= j_min:
        raise ConfigError("grids.j_max must exceed grids.j_min")
    tol = _Table(cfg.tolerances, "tolerances")
    explicit_rel = tol.number("explicit", default=1e-10, lo=0.0)
    residual_bound = tol.number("weighted_residual", default=1.0, lo=0.0)
    tol.finish()

    spectrum = solve_angular(cfg.flux, basis_size=basis_size)
    labels = list(range(j_min, j_max + 1))
    asym = spectrum.asymptotics_check(labels)

    report = EstimateReport(
        name="angular-spectrum",
        grid={"basis_size": basis_size, "j_min": j_min, "j_max": j_max,
              "k_check": k_check, "flux": spectrum.flux,
              "a_mean": spectrum.a_mean},
        tolerances={"weighted_residual": residual_bound},
        constants={"max_weighted_residual":
                   asym["max_weighted_residual"]},
        notes=list(spectrum.condition_violations),
    )
    rows = []
    for j, w in zip(labels, asym["weighted_residuals"]):
        mu = spectrum.order_for_label(j) ** 2
        model = spectrum.asymptotic_eigenvalue(j)
        rows.append((j, mu, float(model), abs(mu - model), w))
    if cfg.flux.is_constant:
        # constant traces diagonalize exactly: eigenvalue of label k is
        # a_mean + (k + reduced_flux)^2, the spectrum's asymptotic model
        report.tolerances["explicit"] = explicit_rel
        worst = 0.0
        for k in range(-k_check, k_check + 1):
            mu = spectrum.order_for_label(k) ** 2
            exact = float(spectrum.asymptotic_eigenvalue(k))
            worst = max(worst, abs(mu - exact) / max(abs(exact), 1.0))
        report.constants["max_explicit_err"] = worst
        report.add_check("explicit_spectrum", worst, explicit_rel)
    report.add_check("weighted_residual_bounded",
                     asym["max_weighted_residual"], residual_bound)
    report.add_check("weighted_residual_decaying",
                     1.0 if asym["decaying"] else 0.0, 0.5, kind="ge")
    header = ("label", "eigenvalue", "model", "residual",
              "weighted_residual")
    return report, header, rows


def _run_hardy(cfg, calib):
    alpha = _require_constant_magnetic(
        cfg, "hardy", "the magnetic Hardy inequality covers that case")
    g = _Table(cfg.grids, "grids")
    freq_max = g.number("freq_max", default=10.0, lo=1.0)
    span = g.number("span", default=24.0, lo=4.0)
    g.finish()
    _Table(cfg.tolerances, "tolerances").finish()

    grid = RadialGrid.for_bandwidth(span, freq_max)
    defaults = ({"kind": "gaussian", "mode": 0, "r0": 3.0, "width": 1.0},
                {"kind": "gaussian", "mode": -1, "r0": 2.0, "width": 0.8},
                {"kind": "gaussian", "mode": 1, "r0": 4.0, "width": 1.2})
    data = _field_states(cfg, grid, alpha, defaults)

    report = EstimateReport(
        name="hardy-family",
        grid={"alpha": alpha, "freq_max": freq_max, "span": span,
              "n_data": len(data)},
        tolerances={"ratio": 1.0},
    )
    rows = []
    for i, state in enumerate(data):
        rep = hardy_check(state, alpha, freq_max=freq_max)
        ratio = rep.constants["ratio"]
        report.constants[f"ratio_{i}"] = ratio
        report.add_check(f"ratio_at_most_one_{i}", ratio, 1.0 + 1e-9)
        rows.append((i, ratio, rep.constants["energy"],
                     rep.constants["weighted_mass"]))
    return report, ("datum", "ratio", "energy", "weighted_mass"), rows


def _run_smoothing(cfg, calib):
    g = _Table(cfg.grids, "grids")
    branch = g.text("branch", default="low", choices=("low", "high"))
    beta = g.number("beta", default=1.2)
    window = g.numbers("time_window", default=TIME_WINDOW, n_min=2)
    n_time = g.integer("n_time", default=257, lo=65)
    freq_max = g.number("freq_max", default=4.0, lo=0.5)
    span = g.number("span", default=32.0, lo=4.0)
    basis_size = g.integer("basis_size", default=64, lo=1)
    g.finish()
    _Table(cfg.tolerances, "tolerances").finish()
    if len(window) != 2 or not 0.0 <= window[0] < window[1] <= TIME_WINDOW[1]:
        raise ConfigError(f"grids.time_window must be [t0, t1] with "
                          f"0 <= t0 < t1 <= {TIME_WINDOW[1]:g}")

    flux = _flux_object(cfg, basis_size)
    grid = RadialGrid.for_bandwidth(span, max(freq_max, 6.0))
    default_pairs = (
        {"v0": {"kind": "gaussian", "mode": 0, "r0": 2.0, "width": 1.0},
         "v1": {"kind": "gaussian", "mode": 0, "r0": 3.0, "width": 1.5}},
        {"v0": {"kind": "gaussian", "mode": 1, "r0": 2.5, "width": 1.0},
         "v1": {"kind": "gaussian", "mode": 1, "r0": 2.0, "width": 1.2}},
    )
    specs = cfg.data if cfg.data else default_pairs
    data = []
    for i, s in enumerate(specs):
        t = _Table(dict(s), f"data[{i}]")
        v0_spec = t.raw("v0")
        v1_spec = t.raw("v1")
        t.finish()
        if not isinstance(v0_spec, dict) or not isinstance(v1_spec, dict):
            raise ConfigError(f"data[{i}] needs v0 and v1 tables for the "
                              f"position and velocity parts")
        data.append((_datum_from_spec(dict(v0_spec), grid, flux, cfg.seed, i),
                     _datum_from_spec(dict(v1_spec), grid, flux, cfg.seed, i)))

    try:
        report = local_smoothing_check(data, beta, branch, flux,
                                       time_window=window, n_time=n_time,
                                       freq_max=freq_max)
    except DomainError as exc:
        raise ConfigError(f"grids.beta: {exc}")
    rows = list(enumerate(report.trends["ratios"]))
    return report, ("datum", "ratio"), rows


@dataclass(frozen=True)
class Scenario:
    name: str
    summary: str
    runner: object
    takes_data: bool = False


SCENARIOS = {
    s.name: s for s in (
        Scenario("kernel",
                 "closed-form vs partial-wave kernel agreement "
                 "(free-kernel comparison at integer flux)", _run_kernel),
        Scenario("decay",
                 "dispersive decay ratios for the schrodinger, half-wave "
                 "or Klein-Gordon flow", _run_decay, takes_data=True),
        Scenario("heat-bound",
                 "Gaussian heat-kernel bound constants C(c) across time "
                 "decades", _run_heat_bound),
        Scenario("stone",
                 "per-mode resolvent jump against the closed-form spectral "
                 "measure", _run_stone),
        Scenario("strichartz",
                 "space-time norm ratios for admissible exponent pairs",
                 _run_strichartz, takes_data=True),
        Scenario("eigs",
                 "angular Galerkin spectrum: explicit values and "
                 "large-label asymptotics", _run_eigs),
        Scenario("hardy",
                 "magnetic Hardy inequality ratios on a datum family",
                 _run_hardy, takes_data=True),
        Scenario("smoothing",
                 "weighted space-time L2 bound for the Klein-Gordon flow",
                 _run_smoothing, takes_data=True),
    )
}


# ---------------------------------------------------------------------------
# artifact writing


def _manifest(cfg, calib_doc_hash, report, header, n_rows, wall_s):
    tolerances = {str(k): float(v) for k, v in report.tolerances.items()}
    tolerances["calibration_drift"] = DRIFT_TOL
    return {
        "format": 1,
        "scenario": cfg.scenario,
        "label": cfg.label,
        "seed": cfg.seed,
        "config_path": cfg.path,
        "config_sha256": _config_hash(cfg.raw),
        "calibration_sha256": calib_doc_hash,
        "versions": {
            "package": _VERSION,
            "python": sys.version.split()[0],
            "numpy": np.__version__,
            "scipy": _scipy_version(),
        },
        "wall_time_s": wall_s,
        "csv": {
            "schema_version": _CSV_SCHEMA_VERSION,
            "columns": list(header),
            "rows": n_rows,
        },
        "tolerances": tolerances,
        "artifacts": {"report": "report.json", "cells": "cells.csv"},
        "checks": {
            "total": len(report.checks),
            "failed": sum(1 for c in report.checks if not c.passed()),
            "passed": bool(report.passed),
        },
    }


def _scipy_version():
    try:
        import scipy
        return scipy.__version__
    except Exception:
        return "unknown"


def _config_hash(raw):
    import hashlib
    text = json.dumps(raw, sort_keys=True, separators=(",", ":"),
                      default=str)
    return hashlib.sha256(text.encode()).hexdigest()


def _calibration_doc_hash(path):
    with open(path) as fh:
        return json.load(fh)["sha256"]


def _print_report(report):
    for c in report.checks:
        flag = "PASS" if c.passed() else "FAIL"
        print(f"[{flag}] {c.name}: {c.value:.6g} "
              f"{_COMPARE[c.kind]} {c.bound:.6g}")
    for note in report.notes:
        print(f"note: {note}")


# ---------------------------------------------------------------------------
# subcommands


def cmd_run(args):
    cfg = load_config(args.config)
    calib = load_and_verify(cfg.calibration_path)
    calib_hash = _calibration_doc_hash(cfg.calibration_path)

    t0 = time.perf_counter()
    report, header, rows = SCENARIOS[cfg.scenario].runner(cfg, calib)
    wall = time.perf_counter() - t0

    outdir = cfg.output_root / cfg.label
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "report.json").write_text(report.to_json())
    (outdir / "cells.csv").write_text(csv_text(header, rows))
    manifest = _manifest(cfg, calib_hash, report, header, len(rows), wall)
    (outdir / "manifest.json").write_text(
        json.dumps(manifest, sort_keys=True, indent=2) + "\n")

    _print_report(report)
    verdict = "PASS" if report.passed else "FAIL"
    print(f"{verdict}: scenario {cfg.scenario} ({len(rows)} cells, "
          f"{wall:.1f}s) -> {outdir}")
    return 0 if report.passed else 1


def cmd_calibrate(args):
    path = Path(args.output) if args.output else default_calibration_path()
    path.parent.mkdir(parents=True, exist_ok=True)
    prior = path.read_bytes() if path.exists() else None
    payload = run_calibration(str(path))
    if prior is not None and prior != path.read_bytes():
        raise ConvergenceError(
            "re-calibration changed the artifact; constants drifted from "
            "the previous run")
    for name, entry in sorted(payload["constants"].items()):
        drift = payload["drift"][name]
        print(f"{name} = {entry['value']:.15g} "
              f"(uncertainty {entry['uncertainty']:.2e}, "
              f"drift {drift:.2e})")
    action = "verified" if prior is not None else "wrote"
    print(f"{action} {path}")
    return 0


def cmd_list_scenarios(args):
    width = max(len(name) for name in SCENARIOS)
    for name, spec in SCENARIOS.items():
        print(f"{name:<{width}}  {spec.summary}")
    return 0


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="abflow",
        description="Verification sweeps for the planar flux operator: "
                    "kernels, spectra and space-time estimates.")
    parser.add_argument("--version", action="version",
                        version=f"abflow {_VERSION}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser(
        "run", help="execute one scenario from a TOML config")
    p_run.add_argument("config", help="path to the run config")
    p_run.set_defaults(fn=cmd_run)

    p_cal = sub.add_parser(
        "calibrate",
        help="measure the kernel constants and write/verify the artifact")
    p_cal.add_argument("--output", default=None,
                       help="artifact path (default: <output root>/"
                            "calibration.json)")
    p_cal.set_defaults(fn=cmd_calibrate)

    p_list = sub.add_parser("list-scenarios", help="print scenario names")
    p_list.set_defaults(fn=cmd_list_scenarios)
    return parser


def main(argv=None):
    args = _build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DomainError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ConvergenceError as exc:
        print(f"convergence failure: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
