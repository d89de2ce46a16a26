"""Measurement and verification of the kernel normalization constants.

The four constants frozen in kernels.py (C_FREE, C_GEO, C_SM, C_DIFF) are
2 pi conventions, not free parameters.  This module re-derives each one from
a first-principles identity that never references the constants themselves:

* c_free  -- the free heat kernel as a plane-wave integral,
             (2 pi)^{-1} int e^{-t rho^2} J_0(rho d) rho d rho,
             evaluated by quadrature and divided by the Gaussian shape;
* c_geo   -- the partial-wave mode sum (angular completeness measure
             e^{i k dth} / 2 pi times radial Weber integrals) in the regime
             r1 r2 / t >> 1 where the diffractive term is exp(-2 r1 r2/t)
             suppressed, divided by the same Gaussian shape;
* c_diff  -- the remainder of that mode sum after subtracting the measured
             geometric term, divided by the diffractive shape whose
             P-integral is pure quadrature;
* c_sm    -- the semigroup identity e^{-tL} = int e^{-t lam^2} dE(lam):
             the free kernel divided by int e^{-t lam^2} lam J_0(lam d) dlam.

run_calibration measures all four with spread-based uncertainties, compares
them to the frozen values, and (optionally) writes a deterministic JSON
artifact carrying a SHA-256 of its own payload; load_and_verify rechecks the
hash and the drift before any run that consumes the constants.
"""

import hashlib
import json
import math

import numpy as np

from ._quad import oscillation_edges, panel_nodes
from .errors import ConfigError, ConvergenceError
from .kernels import (C_DIFF, C_FREE, C_GEO, C_SM, _diffractive_integral,
                      split_flux, wrap_angle)
from .specfun import bessel_j

DRIFT_TOL = 1e-8

FROZEN = {"c_free": C_FREE, "c_geo": C_GEO, "c_sm": C_SM, "c_diff": C_DIFF}


def _weber_quad(nu, t, r1, r2):
    """int_0^inf e^{-t rho^2} J_nu(rho r1) J_nu(rho r2) rho d rho by panels.

    One oscillation period per 16-node panel keeps the per-mode quadrature
    error near 1e-15 relative, so a hundred-mode sum stays below the 1e-8
    calibration drift tolerance.
    """
    rho_max = math.sqrt(60.0 / t)
    edges = oscillation_edges(0.0, rho_max, freq=r1 + r2,
                              periods_per_panel=1.0, max_width=rho_max / 8.0)
    # dyadic refinement toward 0 resolves the rho^{2 nu + 1} fractional
    # power there, which plain panels integrate only to ~1e-7 at nu = 0.3
    sub = edges[1] * 0.5 ** np.arange(12, 0, -1)
    edges = np.concatenate([edges[:1], sub, edges[1:]])
    x, w = panel_nodes(edges)
    vals = np.exp(-t * x * x) * bessel_j(nu, x * r1) * bessel_j(nu, x * r2) * x
    return float(np.sum(w * vals))


def _free_fourier(t, d):
    """Free heat kernel from its plane-wave representation (no constants)."""
    rho_max = math.sqrt(60.0 / t)
    edges = oscillation_edges(0.0, rho_max, freq=max(d, 1e-3), max_width=rho_max / 8.0)
    x, w = panel_nodes(edges)
    vals = np.exp(-t * x * x) * bessel_j(0.0, x * d) * x
    return float(np.sum(w * vals)) / (2.0 * math.pi)


def _mode_sum(t, r1, th1, r2, th2, alpha, k_max):
    """Partial-wave heat kernel with the explicit e^{i k dth}/2 pi measure."""
    dth = th1 - th2
    total = 0.0 + 0.0j
    for k in range(-k_max, k_max + 1):
        nu = abs(k + alpha)
        total += np.exp(-1j * k * dth) / (2.0 * math.pi) * _weber_quad(nu, t, r1, r2)
    return complex(total)


def _gauss_shape(t, d):
    return math.exp(-d * d / (4.0 * t)) / t


def measure_c_free():
    vals = []
    for t, d in ((0.2, 0.7), (0.5, 1.3), (1.1, 0.4)):
        vals.append(_free_fourier(t, d) / _gauss_shape(t, d))
    vals = np.asarray(vals)
    return float(np.mean(vals)), float(np.max(np.abs(vals - np.mean(vals))) + 1e-15)


def measure_c_geo():
    # r1 r2 / t >= 24 makes |D|/|G| < exp(-2 r1 r2 / t) ~ 1e-21
    vals = []
    for (t, r1, r2, dth, alpha) in ((0.15, 1.9, 2.1, 0.0, 0.5),
                                    (0.18, 2.0, 2.2, 0.3, 0.3)):
        d = math.sqrt((r1 - r2) ** 2 + 4.0 * r1 * r2 * math.sin(0.5 * dth) ** 2)
        k_max = int(r1 * r2 / t + 10.0 * math.sqrt(r1 * r2 / t) + 30)
        s = _mode_sum(t, r1, dth, r2, 0.0, alpha, k_max)
        phase = np.exp(1j * alpha * wrap_angle(dth))
        vals.append(complex(s / (_gauss_shape(t, d) * phase)))
    vals = np.asarray(vals)
    mean = complex(np.mean(vals))
    spread = float(np.max(np.abs(vals - mean)))
    return float(mean.real), spread + abs(mean.imag) + 1e-15


def measure_c_diff(c_geo_measured):
    vals = []
    for (t, r1, r2, dth, alpha) in ((0.5, 1.0, 1.2, 0.9, 0.3),
                                    (0.4, 0.9, 1.1, -1.2, 0.45)):
        d = math.sqrt((r1 - r2) ** 2 + 4.0 * r1 * r2 * math.sin(0.5 * dth) ** 2)
        m, abar = split_flux(alpha)
        s = _mode_sum(t, r1, dth, r2, 0.0, alpha, 60)
        g = c_geo_measured * _gauss_shape(t, d) * np.exp(1j * alpha * wrap_angle(dth))
        z = r1 * r2 / (2.0 * t)
        integral, _ = _diffractive_integral(z, dth, abar, 1e-13)
        shape = math.exp(-(r1 + r2) ** 2 / (4.0 * t)) / t * np.exp(1j * m * dth) * integral
        vals.append(complex((s - g) / shape))
    vals = np.asarray(vals)
    mean = complex(np.mean(vals))
    spread = float(np.max(np.abs(vals - mean)))
    return float(mean.real), spread + abs(mean.imag) + 1e-15


def measure_c_sm():
    # semigroup identity: free kernel == int e^{-t lam^2} c_sm lam J0(lam d) dlam
    vals = []
    for t, d in ((0.3, 0.9), (0.7, 1.6)):
        lam_max = math.sqrt(60.0 / t)
        edges = oscillation_edges(0.0, lam_max, freq=d,
                                  periods_per_panel=1.0, max_width=lam_max / 8.0)
        x, w = panel_nodes(edges)
        denom = float(np.sum(w * np.exp(-t * x * x) * x * bessel_j(0.0, x * d)))
        vals.append(_free_fourier(t, d) / denom)
    vals = np.asarray(vals)
    return float(np.mean(vals)), float(np.max(np.abs(vals - np.mean(vals))) + 1e-15)


def measure_constants():
    """Measure all four constants; returns {name: {value, uncertainty}}."""
    c_free, u_free = measure_c_free()
    c_geo, u_geo = measure_c_geo()
    c_diff, u_diff = measure_c_diff(c_geo)
    c_sm, u_sm = measure_c_sm()
    return {
        "c_free": {"value": c_free, "uncertainty": u_free},
        "c_geo": {"value": c_geo, "uncertainty": u_geo},
        "c_sm": {"value": c_sm, "uncertainty": u_sm},
        "c_diff": {"value": c_diff, "uncertainty": u_diff},
    }


def _canonical(payload):
    return json.dumps(payload, sort_keys=True, separators=(",", ":"))


def payload_hash(payload):
    return hashlib.sha256(_canonical(payload).encode()).hexdigest()


def run_calibration(path=None):
    """Measure the constants, check drift against the frozen values, and
    optionally write the deterministic calibration artifact.

    Raises ConvergenceError if any measured constant drifts from its frozen
    value by more than DRIFT_TOL relative.
    """
    measured = measure_constants()
    drift = {}
    for name, frozen in FROZEN.items():
        rel = abs(measured[name]["value"] - frozen) / abs(frozen)
        drift[name] = rel
    payload = {
        "constants": measured,
        "frozen": {k: float(v) for k, v in FROZEN.items()},
        "drift": drift,
        "drift_tol": DRIFT_TOL,
        "format": 1,
    }
    worst = max(drift.values())
    if worst > DRIFT_TOL:
        raise ConvergenceError(
            f"calibrated constants drift {worst:.3e} from frozen values",
            value=worst, bound=DRIFT_TOL)
    if path is not None:
        text = json.dumps({"payload": payload, "sha256": payload_hash(payload)},
                          sort_keys=True, separators=(",", ":")) + "\n"
        with open(path, "w") as fh:
            fh.write(text)
    return payload


def load_and_verify(path):
    """Load a calibration artifact, verify its hash and constant drift."""
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(
            f"calibration file {path} not found; run the calibrate command first")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"calibration file {path} is not valid JSON: {exc}")
    if set(doc) != {"payload", "sha256"}:
        raise ConfigError(f"calibration file {path} has unexpected structure")
    if payload_hash(doc["payload"]) != doc["sha256"]:
        raise ConfigError(f"calibration file {path} failed its hash check")
    for name, frozen in FROZEN.items():
        value = doc["payload"]["constants"][name]["value"]
        if abs(value - frozen) / abs(frozen) > DRIFT_TOL:
            raise ConvergenceError(
                f"calibration constant {name} drifted from the frozen value",
                value=value, bound=frozen)
    return doc["payload"]
