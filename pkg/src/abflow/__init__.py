"""Kernels, dispersive flows and estimate checks for the planar
Schrodinger operator with an Aharonov-Bohm flux and a critical angular
potential.

The operator (i grad + A(x/|x|)/|x|)^2 + a(x/|x|)/|x|^2 scales like the
Laplacian, so none of its dispersive estimates can be perturbative; every
kernel here goes through the angular eigenbasis and Bessel functions of
fractional order.  The package provides:

* closed-form and partial-wave heat / Schrodinger kernels with certified
  truncation bounds (`kernels`),
* the angular Fourier-Galerkin eigensolver (`angular`),
* Hankel transforms, spectral multipliers and Littlewood-Paley windows
  (`transforms`),
* mode-resolved field states, the four multiplier flows, and
  frequency-localized wave kernels (`propagators`),
* measured-constant checks for the decay, Strichartz, Sobolev, Hardy,
  heat-bound and local-smoothing inequalities (`estimates`),
* free-case calibration of the kernel constants (`calibration`) and a
  TOML-driven command line (`cli`).
"""

from .angular import AngularSpectrum, FluxConfig, explicit_eigenpair, solve_angular
from .calibration import load_and_verify, payload_hash, run_calibration
from .errors import ConfigError, ConvergenceError, DomainError
from .estimates import (DECAY_TIMES, RADIUS_WINDOW, TIME_WINDOW,
                        AdmissiblePair, admissible, besov_norm, decay_sweep,
                        hardy_check, heat_bound_fit, heat_pair_grid, l1_norm,
                        local_smoothing_check, localized_decay_sweep,
                        low_decay_sweep, lp_space_norm, sobolev_norm,
                        sobolev_ratio_check, strichartz_sweep)
from .kernels import (GeometricDistances, PolarPoint, coeff_A, coeff_B,
                      heat_kernel_closed, heat_kernel_series,
                      poisson_closed_form, resolvent_mode,
                      schrodinger_kernel_closed, schrodinger_kernel_series,
                      spectral_measure_closed, spectral_measure_series,
                      stone_check)
from .propagators import (FieldState, FlowSpec, annulus_datum,
                          band_kernel_series, band_kernel_sweep, evolve,
                          evolve_many, gaussian_datum, localized_kernel,
                          low_kernel, lp_packet, mode_orders)
from .reporting import Check, EstimateReport, csv_text
from .specfun import (amplitude_pair, bessel_i, bessel_i_scaled, bessel_j,
                      bessel_jp, bessel_y, bessel_yp, hankel_h)
from .transforms import (RadialGrid, RadialProfile, hankel_forward,
                         hankel_inverse, lp_partition, lp_window,
                         mode_multiplier, weber_check)

__version__ = "0.1.0"

__all__ = [
    "AdmissiblePair", "AngularSpectrum", "Check", "ConfigError",
    "ConvergenceError", "DECAY_TIMES", "DomainError", "EstimateReport",
    "FieldState", "FlowSpec", "FluxConfig", "GeometricDistances",
    "PolarPoint", "RADIUS_WINDOW", "RadialGrid", "RadialProfile",
    "TIME_WINDOW", "admissible", "amplitude_pair", "annulus_datum",
    "band_kernel_series", "band_kernel_sweep", "besov_norm", "bessel_i",
    "bessel_i_scaled", "bessel_j", "bessel_jp", "bessel_y", "bessel_yp",
    "coeff_A", "coeff_B", "csv_text", "decay_sweep", "evolve",
    "evolve_many", "explicit_eigenpair", "gaussian_datum", "hankel_forward",
    "hankel_h", "hankel_inverse", "hardy_check", "heat_bound_fit",
    "heat_kernel_closed", "heat_kernel_series", "heat_pair_grid", "l1_norm",
    "load_and_verify", "local_smoothing_check", "localized_decay_sweep",
    "localized_kernel", "low_decay_sweep", "low_kernel", "lp_packet",
    "lp_partition", "lp_space_norm", "lp_window", "mode_multiplier",
    "mode_orders", "payload_hash", "poisson_closed_form", "resolvent_mode",
    "run_calibration", "schrodinger_kernel_closed",
    "schrodinger_kernel_series", "sobolev_norm", "sobolev_ratio_check",
    "solve_angular", "spectral_measure_closed", "spectral_measure_series",
    "stone_check", "strichartz_sweep", "weber_check",
]
