"""Mode-resolved field states and flows generated by the flux operator.

A FieldState stores one radial profile per angular mode; evolution under a
multiplier flow F(L) is mode-by-mode conjugation by the Hankel transform at
that mode's Bessel order.  Four flows are provided: schrodinger e^{-i t mu},
heat e^{-t mu}, half_wave e^{i t sqrt(mu)} and klein_gordon
e^{i t sqrt(1 + mu)}, with mu the operator eigenvalue.

The frequency-localized Klein-Gordon kernels U_j = phi(2^{-j} sqrt(L)) e^{i t
nu(L)} are evaluated by exchanging the band integral with the two-term kernel
representation:

    U_j(t; x, y) = A W(t, d) + int_0^inf B(s) W(t, d_s) ds,
    W(t, u) = int 2 lam e^{i t sqrt(1 + lam^2)} phi(2^{-j} lam) J_0(lam u) dlam,

so the pair enters only through the distances d and d_s.  One Bessel matrix
over (lam, u) serves every time sample of a sweep, and the absence of
stationary phase for u > |t| truncates the s-integral long before the
envelope of B does.
"""

import math
from dataclasses import dataclass

import numpy as np

from ._quad import panel_nodes, phase_subdivide
from .angular import AngularSpectrum
from .errors import DomainError
from .kernels import (C_GEO, INTEGER_FLUX_TOL, GeometricDistances,
                      _alpha_phase, _constant_alpha, _fold_length,
                      _spike_scale, _with_spike_edges, coeff_B, split_flux)
from .specfun import bessel_j, _smoothstep
from .transforms import (RadialGrid, RadialProfile, hankel_forward,
                         hankel_inverse, lp_head, lp_window)

FLOW_KINDS = ("schrodinger", "heat", "half_wave", "klein_gordon")

_TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class FlowSpec:
    """One of the four multiplier flows, normalized as e^{-i t L} for the
    Schrodinger flow and e^{+i t nu(L)} for the wave-type flows."""

    kind: str

    def __post_init__(self):
        if self.kind not in FLOW_KINDS:
            raise DomainError(f"unknown flow kind {self.kind!r}; "
                              f"choose one of {FLOW_KINDS}")

    def multiplier(self, t):
        """Spectral multiplier as a callable of mu = lambda^2 (array)."""
        if self.kind == "schrodinger":
            return lambda mu: np.exp(-1j * t * mu)
        if self.kind == "heat":
            if t < 0.0:
                raise DomainError("heat flow needs t >= 0")
            return lambda mu: np.exp(-t * mu)
        if self.kind == "half_wave":
            return lambda mu: np.exp(1j * t * np.sqrt(mu))
        return lambda mu: np.exp(1j * t * np.sqrt(1.0 + mu))

    def chirp_rate(self, t, rho_max):
        """Largest local frequency the multiplier adds on [0, rho_max].

        Used to size frequency grids: e^{-i t rho^2} oscillates at up to
        2 |t| rho_max, the wave phases at most |t|.
        """
        if self.kind == "schrodinger":
            return 2.0 * abs(t) * rho_max
        if self.kind == "heat":
            return 0.0
        return abs(t)

    @property
    def unitary(self):
        return self.kind != "heat"


def mode_orders(flux, keys):
    """Map mode labels to Bessel orders for the given flux description.

    Constant traces give nu_k = sqrt((k + alpha)^2 + a); an AngularSpectrum
    resolves labels through its eigenvalue table.
    """
    if isinstance(flux, AngularSpectrum):
        return {int(k): flux.order_for_label(int(k)) for k in keys}
    alpha, a0 = _constant_alpha(flux)
    out = {}
    for k in keys:
        mu = (k + alpha) ** 2 + a0
        if mu < 0.0:
            raise DomainError(f"angular eigenvalue below zero on mode {k}")
        out[int(k)] = math.sqrt(mu)
    return out


@dataclass(frozen=True)
class FieldState:
    """Finitely many angular modes, each carrying a radial profile.

    The full field is u(r, theta) = sum_k chi_k(theta) f_k(r) with
    chi_k(theta) = e^{i k theta} / sqrt(2 pi) for constant traces and the
    angular eigenfunction of label k otherwise; either family is orthonormal,
    so the planar mass is the sum of the per-mode masses.
    """

    flux: object
    modes: dict

    def __post_init__(self):
        if not self.modes:
            raise DomainError("a field state needs at least one mode")
        grids = {p.grid.token for p in self.modes.values()}
        if len(grids) != 1:
            raise DomainError("all mode profiles must share one radial grid")

    @property
    def grid(self):
        return next(iter(self.modes.values())).grid

    def order(self, k):
        return mode_orders(self.flux, [k])[int(k)]

    def norm_sq(self):
        """Planar L^2 mass, summed over modes."""
        return sum(p.norm_sq() for p in self.modes.values())

    def angular_factor(self, k, theta):
        if isinstance(self.flux, AngularSpectrum):
            hits = np.nonzero(self.flux.labels == int(k))[0]
            if hits.size != 1:
                raise KeyError(f"label {k} matched {hits.size} eigenvalues")
            return self.flux.eigenfunction(int(hits[0]), theta)
        return np.exp(1j * int(k) * np.asarray(theta, dtype=float)) / math.sqrt(_TWO_PI)

    def evaluate(self, theta):
        """Field values on angles x grid radii; returns (n_theta, n_r)."""
        th = np.atleast_1d(np.asarray(theta, dtype=float))
        out = np.zeros((th.size, len(self.grid)), dtype=complex)
        for k, prof in self.modes.items():
            out += np.outer(self.angular_factor(k, th), prof.values)
        return out

    def sup_norm(self, n_theta=64):
        """Max of |u| over a polar grid, Richardson-extrapolated in theta.

        The radial direction reuses the quadrature nodes (dense enough for
        any profile the grid can represent); the angular grid is refined
        once and the second-order extrapolation (4 M_2 - M_1) / 3 removes
        the leading grid-max bias.
        """
        if len(self.modes) == 1 and not isinstance(self.flux, AngularSpectrum):
            # constant-trace angular factors have modulus (2 pi)^{-1/2}
            ((k, prof),) = self.modes.items()
            return float(np.max(np.abs(prof.values))) / math.sqrt(_TWO_PI)
        th1 = np.linspace(0.0, _TWO_PI, n_theta, endpoint=False)
        th2 = np.linspace(0.0, _TWO_PI, 2 * n_theta, endpoint=False)
        m1 = float(np.max(np.abs(self.evaluate(th1))))
        m2 = float(np.max(np.abs(self.evaluate(th2))))
        return m2 + (m2 - m1) / 3.0

    def truncated(self, rel_tol=1e-12):
        """Drop modes whose mass falls below rel_tol times the total."""
        total = self.norm_sq()
        keep = {k: p for k, p in self.modes.items()
                if p.norm_sq() > rel_tol * total}
        if not keep:
            top = max(self.modes, key=lambda k: self.modes[k].norm_sq())
            keep = {top: self.modes[top]}
        return FieldState(self.flux, keep)

    def parseval_defect(self, grid_rho):
        """Worst relative mismatch of per-mode mass across the transform.

        Checks int |H_nu f|^2 rho drho = int |f|^2 r dr on every mode; values
        above ~1e-8 mean the frequency grid does not hold the profile.
        """
        worst = 0.0
        for k, prof in self.modes.items():
            nu = self.order(k)
            coeffs = hankel_forward(nu, prof.values, prof.grid, grid_rho)
            mass_rho = float(np.real(
                grid_rho.integrate_plane(np.abs(coeffs) ** 2)))
            mass_r = prof.norm_sq()
            worst = max(worst, abs(mass_rho - mass_r) / max(mass_r, 1e-300))
        return worst


def evolution_grid(flow, t_max, freq_max, span, periods_per_panel=2.0):
    """Frequency grid resolving J_nu(rho r) against the flow's chirp.

    The transform kernel oscillates at frequency up to `span`; the
    multiplier adds the flow's own rate at the largest time of interest.
    """
    osc = float(span) + flow.chirp_rate(t_max, freq_max)
    return RadialGrid.for_bandwidth(float(freq_max), osc,
                                    periods_per_panel=periods_per_panel)


def evolve(state, flow, t, grid_rho=None, freq_max=32.0):
    """Apply the flow at time t to every mode of the state."""
    return evolve_many(state, flow, [t], grid_rho, freq_max)[0]


def evolve_many(state, flow, times, grid_rho=None, freq_max=32.0):
    """States at several times, sharing one forward transform per mode."""
    times = [float(t) for t in times]
    if grid_rho is None:
        grid_rho = evolution_grid(flow, max(abs(t) for t in times),
                                  freq_max, state.grid.span)
    snapshots = [dict() for _ in times]
    for k, prof in state.modes.items():
        nu = state.order(k)
        coeffs = hankel_forward(nu, prof.values, prof.grid, grid_rho)
        mu = grid_rho.nodes ** 2
        for i, t in enumerate(times):
            out = hankel_inverse(nu, coeffs * flow.multiplier(t)(mu),
                                 prof.grid, grid_rho)
            snapshots[i][k] = RadialProfile(prof.grid, out)
    return [FieldState(state.flux, modes) for modes in snapshots]


def gaussian_datum(grid, flux, k=0, r0=4.0, width=1.0, normalize=True):
    """Single-mode ring datum e^{-(r - r0)^2 / (2 width^2)} on mode k."""
    if width <= 0.0 or r0 < 0.0:
        raise DomainError("need width > 0 and r0 >= 0")
    prof = RadialProfile.from_function(
        grid, lambda r: np.exp(-(r - r0) ** 2 / (2.0 * width ** 2)))
    state = FieldState(flux, {int(k): prof})
    return _normalized(state) if normalize else state


def annulus_datum(grid, flux, k=0, r_in=2.0, r_out=5.0, edge=0.5,
                  normalize=True):
    """Smooth annulus indicator between r_in and r_out on mode k."""
    if not (0.0 <= r_in < r_out) or edge <= 0.0:
        raise DomainError("need 0 <= r_in < r_out and edge > 0")

    def fn(r):
        return (_smoothstep((r - r_in) / edge)
                * (1.0 - _smoothstep((r - r_out) / edge)))

    state = FieldState(flux, {int(k): RadialProfile.from_function(grid, fn)})
    return _normalized(state) if normalize else state


def lp_packet(grid, flux, j, seed=0, modes=(-1, 0, 1), grid_rho=None,
              normalize=True):
    """Seeded random datum exactly supported in the j-th frequency band.

    Each requested mode receives phi(2^{-j} rho) times a random smooth
    envelope in frequency; the profile is its inverse transform, so
    phi_j(sqrt(L)) acts as the identity on the result (up to the window's
    overlap with its neighbors).
    """
    rng = np.random.default_rng(seed)
    if grid_rho is None:
        grid_rho = RadialGrid.for_bandwidth(2.0 ** (j + 1), grid.span)
    rho = grid_rho.nodes
    window = lp_window(j, rho)
    out = {}
    for k in modes:
        nu = mode_orders(flux, [k])[int(k)]
        coef = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        u = rho / 2.0 ** j
        envelope = sum(c * u ** n for n, c in enumerate(coef))
        vals = hankel_inverse(nu, window * envelope, grid, grid_rho)
        out[int(k)] = RadialProfile(grid, vals)
    state = FieldState(flux, out)
    return _normalized(state) if normalize else state


def _normalized(state):
    mass = state.norm_sq()
    if not mass > 0.0:
        raise DomainError("datum has no mass")
    factor = 1.0 / math.sqrt(mass)
    return FieldState(state.flux,
                      {k: p.scaled(factor) for k, p in state.modes.items()})


# ---------------------------------------------------------------------------
# frequency-localized Klein-Gordon kernels


@dataclass(frozen=True)
class BandKernelSweep:
    """Values of one localized kernel over a time grid and point pairs."""

    j: object
    times: np.ndarray
    pairs: tuple
    values: np.ndarray
    tail_bound: float

    def sup_over_pairs(self):
        """max_pairs |U| for each time; shape (n_times,)."""
        return np.max(np.abs(self.values), axis=1)


def _band_support(j):
    """Frequency support of the band (phi) or lump (psi) multiplier."""
    if j is None:
        return 0.0, 2.0
    return 2.0 ** (j - 1), 2.0 ** (j + 1)


def _band_window(j):
    if j is None:
        return lambda lam: lp_head(0, lam)
    return lambda lam: lp_window(j, lam)


def _lambda_rule(lam_lo, lam_hi, freq, resolution=1.0):
    """Gauss-Legendre nodes resolving e^{i freq lam} on the band support."""
    width = (lam_hi - lam_lo) / 4.0
    if freq > 0.0:
        width = min(width, resolution * _TWO_PI / freq)
    n_panels = max(4, int(math.ceil((lam_hi - lam_lo) / width)))
    edges = np.linspace(lam_lo, lam_hi, n_panels + 1)
    return panel_nodes(edges, 16)


def _fold_rule(geo, dtheta, lam_hi, u_cut, s_env, resolution=1.0):
    """Fold-variable quadrature for int B(s) W(d_s) ds, truncated at
    d_s = u_cut where W has lost its stationary phase."""
    if geo.d_s(0.0) >= u_cut:
        return np.empty(0), np.empty(0), 0.0
    arg = (u_cut ** 2 - geo.r1 ** 2 - geo.r2 ** 2) / (2.0 * geo.r1 * geo.r2)
    s_cut = min(float(s_env), math.acosh(max(arg, 1.0)))
    if s_cut <= 0.0:
        return np.empty(0), np.empty(0), 0.0
    backbone = np.linspace(0.0, s_cut, max(4, int(math.ceil(s_cut)) + 1))
    max_phase = min(resolution, 2.0) * 4.0 * np.pi
    edges = phase_subdivide(backbone, lambda s: lam_hi * float(geo.d_s(s)),
                            max_phase=max_phase)
    edges = _with_spike_edges(edges, _spike_scale(dtheta))
    x, w = panel_nodes(edges, 16)
    return x, w, s_cut


def band_kernel_sweep(j, times, pairs, flux, tol=1e-6, margin=None,
                      resolution=1.0):
    """Localized kernel U_j(t; x, y) on a time grid times point pairs.

    `j` selects the dyadic band phi(2^{-j} sqrt(L)); j = None selects the
    low lump psi(sqrt(L)) supported in [0, 2].  Works for constant flux
    with a == 0 (the regime with a two-term kernel representation).

    The s-integral is truncated once d_s exceeds u_cut = max|t| + margin:
    past that distance the phase t sqrt(1 + lam^2) - lam u has gradient
    bounded away from zero on the whole band and W decays superalgebraically.
    The neglected mass is bounded by |W(u_cut)| int_{s_cut} |B| and returned
    as `tail_bound`.

    `resolution` relaxes the quadrature density by that factor: frequency
    panels hold `resolution` oscillation periods instead of one, and fold
    panels hold up to twice their usual phase.  Sixteen-point panels keep
    roughly six significant digits at resolution 4, which is ample for
    constant sweeps; leave it at 1 when kernel values feed error budgets
    tighter than that.
    """
    alpha, a0 = _constant_alpha(flux)
    if a0 != 0.0:
        raise DomainError("localized kernels require a == 0")
    if not 1.0 <= resolution <= 4.0:
        raise DomainError("resolution must lie in [1, 4]")
    times = np.asarray([float(t) for t in np.atleast_1d(times)])
    pairs = tuple((x, y) for x, y in pairs)
    m, abar = split_flux(alpha)
    lam_lo, lam_hi = _band_support(j)
    window = _band_window(j)

    t_max = float(np.max(np.abs(times))) if times.size else 0.0
    if margin is None:
        # the phase gradient past u = |t| is of order u - |t| against the
        # band bottom, so low bands need more clearance before W has decayed
        margin = min(40.0, 6.0 + 48.0 / max(lam_lo, 1.0))
    u_cut = t_max + margin
    diffract = abs(abar) >= INTEGER_FLUX_TOL
    s_env = _fold_length(max(tol, 1e-12), abar) if diffract else 0.0

    # assemble the pooled distance list: d then the d_s nodes per pair
    u_list = []
    plans = []
    for x, y in pairs:
        geo = GeometricDistances.from_points(x, y)
        dtheta = x.theta - y.theta
        d_idx = len(u_list)
        u_list.append(max(geo.d, 1e-12))
        if diffract:
            s_nodes, s_weights, s_cut = _fold_rule(
                geo, dtheta, lam_hi, max(u_cut, float(geo.d_s(0.0)) + margin),
                s_env, resolution)
        else:
            s_nodes, s_weights, s_cut = np.empty(0), np.empty(0), 0.0
        sl = slice(len(u_list), len(u_list) + s_nodes.size)
        if s_nodes.size:
            u_list.extend(geo.d_s(s_nodes).tolist())
            b_vals = coeff_B(s_nodes, x.theta, y.theta, alpha)
        else:
            b_vals = np.empty(0, dtype=complex)
        a_val = C_GEO * _alpha_phase(alpha, dtheta)
        plans.append((a_val, d_idx, sl, s_weights * b_vals, s_cut))
    u_all = np.asarray(u_list)

    lam, w_lam = _lambda_rule(lam_lo, lam_hi, t_max + float(np.max(u_all)),
                              resolution)
    j0 = bessel_j(0.0, np.outer(lam, u_all))
    base = w_lam * 2.0 * lam * window(lam)
    root = np.sqrt(1.0 + lam * lam)

    values = np.empty((times.size, len(pairs)), dtype=complex)
    w_at_cut = 0.0
    for it, t in enumerate(times):
        wvals = (base * np.exp(1j * t * root)) @ j0
        for ip, (a_val, d_idx, sl, bw, s_cut) in enumerate(plans):
            acc = a_val * wvals[d_idx]
            if bw.size:
                acc = acc + np.sum(bw * wvals[sl])
            values[it, ip] = acc
        if diffract:
            w_at_cut = max(w_at_cut, _w_probe(base, root, lam, t, u_cut))

    # bound the discarded fold tail: |W| at the truncation distance times
    # the remaining envelope of B
    tail = 0.0
    if diffract:
        gamma = min(abs(abar), 1.0 - abs(abar))
        for a_val, d_idx, sl, bw, s_cut in plans:
            if s_cut < s_env:
                env = math.exp(-gamma * s_cut) / gamma / (4.0 * math.pi ** 2)
                tail = max(tail, w_at_cut * env)
    return BandKernelSweep(j=j, times=times, pairs=pairs, values=values,
                           tail_bound=float(tail))


def _w_probe(base, root, lam, t, u):
    return abs(np.sum(base * np.exp(1j * t * root) * bessel_j(0.0, lam * u)))


def localized_kernel(j, t, x, y, flux, tol=1e-6):
    """Single value of the band-j localized Klein-Gordon kernel."""
    sweep = band_kernel_sweep(j, [t], [(x, y)], flux, tol)
    return complex(sweep.values[0, 0])


def low_kernel(t, x, y, flux, tol=1e-6):
    """Single value of the low-frequency lump kernel psi(sqrt(L)) e^{it nu}."""
    sweep = band_kernel_sweep(None, [t], [(x, y)], flux, tol)
    return complex(sweep.values[0, 0])


def band_kernel_series(j, t, x, y, flux, k_max=None):
    """Mode-series oracle for the localized kernels (slow, for checks).

    Sums e^{-i k dtheta} / 2 pi times the radial band integral
    int lam e^{i t nu} window J_nu(lam r1) J_nu(lam r2) dlam over modes,
    the band-filtered spectral density integrated in lam.
    """
    alpha, a0 = _constant_alpha(flux)
    if a0 != 0.0:
        raise DomainError("localized kernels require a == 0")
    lam_lo, lam_hi = _band_support(j)
    window = _band_window(j)
    if k_max is None:
        k_max = int(lam_hi * max(x.r, y.r)) + 40
    lam, w_lam = _lambda_rule(lam_lo, lam_hi, abs(t) + x.r + y.r)
    base = w_lam * lam * window(lam) * np.exp(
        1j * t * np.sqrt(1.0 + lam * lam))
    dtheta = x.theta - y.theta
    acc = 0.0 + 0.0j
    for k in range(-k_max, k_max + 1):
        nu = abs(k + alpha)
        radial = np.sum(base * bessel_j(nu, lam * x.r) * bessel_j(nu, lam * y.r))
        acc += np.exp(-1j * k * dtheta) / _TWO_PI * radial
    return complex(acc)
