"""Closed-form and partial-wave kernels for the planar flux operator.

The operator is (i grad + alpha(theta) x_hat / |x|)^2 + a(theta)/|x|^2 on
R^2.  For constant trace alpha and a == 0 its heat/Schrodinger kernels split
into a geometric free-like term and a diffractive correction,

    K(w; x, y) = G(w; x, y) + D(w; x, y),        w = t (heat), w = i t (unitary),

    G = C_GEO * exp(-d^2/(4 w)) / w * exp(i alpha wrap(th1 - th2)),
    D = C_DIFF * exp(-(r1^2+r2^2)/(4 w)) / w
        * int_0^inf exp(-(r1 r2 / (2 w)) cosh s) P(s, th1 - th2, ab) ds,

where d is the Euclidean distance, wrap folds the angle difference into
(-pi, pi), m = floor(alpha + 1/2) and ab = alpha - m is the reduced flux, and
P is a ratio of trigonometric and hyperbolic factors produced by summing the
partial-wave series over angular momenta (poisson_closed_form below).  The
same two-term shape, with the Gaussian factors replaced by oscillatory
amplitudes, gives the spectral measure.

All quadrature here is Gauss-Legendre on adaptive panels; purely oscillatory
tails are closed with integration by parts (see _quad.osc_tail_correction).
Constants C_GEO, C_FREE, C_SM, C_DIFF are calibrated against the partial-wave
series by calibration.run_calibration and frozen here as module constants.
"""

import math
from dataclasses import dataclass

import numpy as np

from ._quad import integrate_panels, osc_tail_correction, phase_subdivide
from .angular import AngularSpectrum, FluxConfig
from .errors import ConvergenceError, DomainError
from .specfun import amplitude_pair, bessel_i_scaled, bessel_j, hankel_h

# Normalization constants, frozen from the calibration run (see
# calibration.run_calibration): free heat kernel prefactor, geometric-term
# prefactor, spectral-measure mode weight, diffractive-term prefactor.
C_FREE = 1.0 / (4.0 * math.pi)
C_GEO = 1.0 / (4.0 * math.pi)
C_SM = 1.0 / (2.0 * math.pi)
C_DIFF = -1.0 / (4.0 * math.pi ** 2)

# Below this distance to the integer lattice the flux acts as an integer:
# the diffractive term vanishes and the kernel is a gauged free kernel.
INTEGER_FLUX_TOL = 1e-8

# Fold denominators cosh s - cos(phi) smaller than this count as poles.
_POLE_TOL = 1e-14


@dataclass(frozen=True)
class PolarPoint:
    """Point in polar coordinates; radius must be positive."""

    r: float
    theta: float

    def __post_init__(self):
        if not (self.r > 0.0) or not np.isfinite(self.r):
            raise DomainError(f"radius must be positive and finite, got {self.r}")
        if not np.isfinite(self.theta):
            raise DomainError(f"angle must be finite, got {self.theta}")

    @property
    def xy(self):
        return self.r * math.cos(self.theta), self.r * math.sin(self.theta)


@dataclass(frozen=True)
class GeometricDistances:
    """Direct distance d and the diffractive family d_s for a point pair."""

    r1: float
    r2: float
    dtheta: float

    @classmethod
    def from_points(cls, x, y):
        return cls(x.r, y.r, x.theta - y.theta)

    @property
    def d(self):
        # law of cosines, written to stay nonnegative under roundoff
        w = wrap_angle(self.dtheta)
        val = (self.r1 - self.r2) ** 2 + 4.0 * self.r1 * self.r2 * math.sin(0.5 * w) ** 2
        return math.sqrt(val)

    def d_s(self, s):
        s = np.asarray(s, dtype=float)
        return np.sqrt(self.r1 ** 2 + self.r2 ** 2
                       + 2.0 * self.r1 * self.r2 * np.cosh(s))


def wrap_angle(x):
    """Fold an angle into [-pi, pi)."""
    x = np.asarray(x, dtype=float)
    out = x - 2.0 * math.pi * np.round(x / (2.0 * math.pi))
    out = np.where(out >= math.pi, out - 2.0 * math.pi, out)
    if out.ndim == 0:
        return float(out)
    return out


def split_flux(alpha):
    """Reduce flux to (m, ab) with m integer and ab in [-1/2, 1/2)."""
    m = math.floor(alpha + 0.5)
    return m, alpha - m


def _constant_alpha(flux):
    """Accept a float flux or a constant-trace FluxConfig; return (alpha, a)."""
    if isinstance(flux, FluxConfig):
        if not flux.is_constant:
            raise DomainError("closed-form kernels require a constant flux trace; "
                              "use the spectral series for angle-dependent traces")
        return float(flux.flux), float(flux.a_mean)
    alpha = float(flux)
    return alpha, 0.0


def _alpha_phase(alpha, dtheta):
    """Geometric-term phase exp(i alpha wrap(dtheta)).

    On the cut |dtheta| = pi (mod 2 pi) the wrap jumps by 2 pi; the two gauge
    branches exp(+-i alpha pi) are averaged, giving cos(alpha pi).
    """
    w = wrap_angle(dtheta)
    if abs(abs(w) - math.pi) < 1e-12:
        return complex(math.cos(alpha * math.pi))
    return np.exp(1j * alpha * w)


def coeff_A(theta1, theta2, flux):
    """Geometric coefficient of the two-term kernel representation.

    Uses the outgoing angle difference delta = (theta2 - theta1) mod 2 pi and
    switches gauge branch across delta = pi; exactly at the branch cut the two
    one-sided values are averaged.
    """
    alpha, _ = _constant_alpha(flux)
    delta = (theta2 - theta1) % (2.0 * math.pi)
    base = C_GEO * np.exp(1j * alpha * delta)
    if abs(delta - math.pi) < 1e-12:
        return 0.5 * base * (1.0 + np.exp(-2j * math.pi * alpha))
    if delta > math.pi:
        return base * np.exp(-2j * math.pi * alpha)
    return base


def poisson_closed_form(s, dtheta, abar):
    """Closed form of sum_j sin(pi |j+abar|) e^{-s |j+abar|} e^{i j dtheta}.

    Valid for abar in (-1, 1), abar != 0 and s > 0.  Numerator and
    denominator are both scaled by 2 e^{-s} so every exponent is
    nonpositive (no overflow at large s), and the denominator becomes
    (1 - e^{-s})^2 + 4 e^{-s} sin^2(phi/2) with phi = dtheta + pi, which is
    cancellation-free near s = 0.  Inside _POLE_TOL of its zero (s -> 0 at
    the reconnection angle dtheta -> pi) a ConvergenceError is raised.
    """
    if not (-1.0 < abar < 1.0) or abar == 0.0:
        raise DomainError(f"reduced flux must lie in (-1,1) minus 0, got {abar}")
    s = np.asarray(s, dtype=float)
    if np.any(s < 0.0):
        raise DomainError("the fold variable s must be nonnegative")
    phi = np.asarray(dtheta, dtype=float) + math.pi
    em = np.exp(-s)
    denom = (1.0 - em) ** 2 + 4.0 * em * np.sin(0.5 * phi) ** 2
    if np.any(denom < 2.0 * _POLE_TOL):
        raise ConvergenceError(
            "fold denominator vanishes (s ~ 0 at the reconnection angle)",
            value=float(np.min(denom)), bound=2.0 * _POLE_TOL)
    sa = math.sin(math.pi * abs(abar))
    sb = math.sin(math.pi * abar)
    # 2 e^{-s} sinh(ab s) and 2 e^{-s} cosh(ab s), exponents all <= 0
    grow = np.exp((abar - 1.0) * s)
    decay = np.exp(-(abar + 1.0) * s)
    num = ((em - np.cos(phi)) * (grow - decay)
           + 1j * np.sin(phi) * (grow + decay))
    return sa * np.exp(-abs(abar) * s) + sb * num / denom


def _p_factor(s, dtheta, abar):
    """Angular factor of the diffractive integrand (conjugate orientation)."""
    return poisson_closed_form(s, -np.asarray(dtheta, dtype=float), abar)


def coeff_B(s, theta1, theta2, flux):
    """Diffractive coefficient B(s) of the two-term representation."""
    alpha, _ = _constant_alpha(flux)
    m, abar = split_flux(alpha)
    dtheta = theta1 - theta2
    if abs(abar) < INTEGER_FLUX_TOL:
        return np.zeros_like(np.asarray(s, dtype=float), dtype=complex)
    return C_DIFF * np.exp(1j * m * dtheta) * _p_factor(s, dtheta, abar)


def _fold_length(tol, abar):
    """Fold-variable truncation length from the e^{-min(|ab|,1-|ab|) s} envelope."""
    gamma = min(abs(abar), 1.0 - abs(abar))
    return math.ceil(-math.log(tol) / gamma) + 5


def _spike_scale(dtheta):
    """Width of the near-pole feature of P at s = 0.

    The fold denominator vanishes as s^2 + 4 sin^2((pi - dtheta)/2), so for
    angle differences near +-pi the integrand carries a spike of this width.
    """
    return 2.0 * abs(math.sin(0.5 * (math.pi - float(dtheta))))


def _with_spike_edges(edges, delta):
    """Insert dyadically graded edges near 0 resolving a width-delta spike.

    Below width 1e-7 the spike numerator sin(pi - dtheta) is itself
    negligible (exactly zero on the cut, where the integrand is smooth), so
    no refinement is added and nodes stay clear of the fold-denominator
    guard.
    """
    edges = np.asarray(edges, dtype=float)
    cap = edges[-1]
    first = edges[1] if edges.size > 1 else cap
    if delta < 1e-7 or delta >= first:
        return edges
    extra = []
    w = max(delta / 8.0, 1e-14 * cap)
    x = 0.0
    while x + w < first:
        x += w
        extra.append(x)
        w *= 2.0
    return np.unique(np.concatenate([edges, extra]))


def _diffractive_integral(z, dtheta, abar, tol):
    """int_0^inf exp(-z (cosh s - 1)) P(s, dtheta, ab) ds with error bound.

    Two routes.  For Re z away from zero (heat flow, rotated complex time)
    the integrand decays in s and graded Gauss-Legendre panels suffice.  For
    purely imaginary z (unitary flow) the substitution sinh(s/2) = v/sqrt(2)
    turns the phase into the chirp z v^2 / ... exactly: cosh s - 1 = v^2, so
    panels resolve a fixed phase budget and the remaining tail, written in
    u = cosh s, is closed by integration by parts.
    """
    z = complex(z)
    if abs(abar) < INTEGER_FLUX_TOL:
        return 0.0 + 0.0j, 0.0
    s_env = _fold_length(tol, abar)
    delta = _spike_scale(dtheta)

    def f(s):
        return np.exp(-z * (np.cosh(s) - 1.0)) * _p_factor(s, dtheta, abar)

    if z.real > 1e-12 * abs(z):
        # decaying route: stop when either the Gaussian factor or the
        # P-envelope has absorbed the tolerance; acosh(1 + 45/Re z) stays
        # below ~700 for any representable Re z, so cosh never overflows
        s_gauss = math.acosh(1.0 + 45.0 / z.real) + 1.0
        s_max = min(s_env, s_gauss)
        backbone = [0.0]
        w = min(0.5, s_max)
        while backbone[-1] < s_max:
            backbone.append(min(backbone[-1] + w, s_max))
            w = min(2.0 * w, max(s_max / 8.0, 0.5))
        edges = phase_subdivide(np.asarray(backbone),
                               lambda s: abs(z.imag) * math.cosh(min(s, 710.0)))
        edges = _with_spike_edges(edges, delta)
        val = integrate_panels(f, edges)
        return val, tol

    # chirp route: phase zeta * v^2 with zeta = -Im z
    zeta = -z.imag
    v_env = math.sqrt(2.0) * math.sinh(0.5 * min(s_env, 1400.0))
    v_osc = math.sqrt(150.0 / abs(zeta)) if zeta != 0.0 else v_env
    v_cut = min(v_env, v_osc)

    def g_v(v):
        s = 2.0 * np.arcsinh(v / math.sqrt(2.0))
        return (np.exp(1j * zeta * v * v) * _p_factor(s, dtheta, abar)
                * 2.0 / np.sqrt(2.0 + v * v))

    n_chirp = max(1, int(math.ceil(abs(zeta) * v_cut ** 2 / (4.0 * math.pi))))
    edges = np.sqrt(np.linspace(0.0, v_cut ** 2, n_chirp + 1))
    # keep panels from getting wider than the smooth scale of P near v = 0
    edges = phase_subdivide(edges, lambda v: 4.0 * v)
    edges = _with_spike_edges(edges, delta / math.sqrt(2.0))
    val = integrate_panels(g_v, edges)

    if v_cut < v_env:
        # oscillatory tail in u = cosh s: int g(u) e^{i zeta u} du
        u_cut = 1.0 + v_cut ** 2

        def g_u(u):
            u = np.asarray(u, dtype=float)
            s = np.arccosh(u)
            return _p_factor(s, dtheta, abar) / np.sqrt(u * u - 1.0)

        tail = np.exp(-1j * zeta) * osc_tail_correction(g_u, zeta, u_cut)
        val = val + tail
    return val, tol


def _kernel_closed(w, x, y, alpha, tol):
    """Two-term kernel at diffusion variable w (= t for heat, i t unitary)."""
    geo = GeometricDistances.from_points(x, y)
    dtheta = x.theta - y.theta
    m, abar = split_flux(alpha)
    g_term = C_GEO * np.exp(-geo.d ** 2 / (4.0 * w)) / w * _alpha_phase(alpha, dtheta)
    if abs(abar) < INTEGER_FLUX_TOL:
        return g_term
    z = x.r * y.r / (2.0 * w)
    integral, _ = _diffractive_integral(z, dtheta, abar, tol)
    pref = np.exp(-(x.r + y.r) ** 2 / (4.0 * w)) / w
    d_term = C_DIFF * np.exp(1j * m * dtheta) * pref * integral
    return g_term + d_term


def heat_kernel_closed(t, x, y, flux, tol=1e-11):
    """Heat kernel e^{-t L} at positive time for constant flux, a == 0."""
    alpha, a0 = _constant_alpha(flux)
    if a0 != 0.0:
        raise DomainError("closed-form kernels require a == 0; "
                          "use heat_kernel_series with an angular spectrum")
    t = float(t)
    if not t > 0.0:
        raise DomainError(f"heat time must be positive, got {t}")
    return complex(_kernel_closed(t, x, y, alpha, tol))


def schrodinger_kernel_closed(t, x, y, flux, tol=1e-9):
    """Unitary kernel e^{-i t L} at real or lower-half complex time.

    Real t gives the oscillatory chirp route; t = |t| e^{-i gamma} with
    gamma in (0, pi) regularizes the flow and routes through decaying
    quadrature.  Raises DomainError at t = 0 and for Im t > 0.
    """
    alpha, a0 = _constant_alpha(flux)
    if a0 != 0.0:
        raise DomainError("closed-form kernels require a == 0; "
                          "use the spectral series for a != 0")
    t = complex(t)
    if t == 0.0:
        raise DomainError("time must be nonzero")
    if t.imag > 0.0:
        raise DomainError("unitary kernel needs Im t <= 0 (decaying regularization)")
    w = 1j * t
    if t.imag == 0.0:
        w = 1j * t.real  # keep the purely imaginary branch exact
    return complex(_kernel_closed(w, x, y, alpha, tol))


@dataclass(frozen=True)
class SeriesValue:
    """Partial-wave sum with its certified truncation bound."""

    value: complex
    tail_bound: float
    terms: int


def _i_tail_bound(z, nu_next):
    """Tail of sum_{nu >= nu_next} |I_nu(z)| e^{-Re z} via the ratio test."""
    az = 0.5 * abs(z)
    if nu_next <= 0.0:
        return math.inf
    q = az / (nu_next + 1.0)
    if q >= 0.9:
        return math.inf
    # log of (az)^nu / Gamma(nu+1), then the e^{|Re z| - Re z} scale factor
    lead = nu_next * math.log(az) - math.lgamma(nu_next + 1.0) if az > 0.0 else -math.inf
    scale = abs(complex(z).real) - complex(z).real
    return math.exp(lead + scale) / (1.0 - q) if lead > -700.0 else 0.0


def _series_kernel(w, x, y, orders, phases, tol, k_max):
    """Partial-wave kernel sum_k phases[k] I_{orders[k]}(z) with prefactor.

    orders/phases enumerate modes in order of increasing |order| so the
    certified tail bound applies to the discarded remainder.
    """
    w = complex(w)
    z = x.r * y.r / (2.0 * w)
    # exp(-(r1^2+r2^2)/(4w) + Re z) pairs the quadratic exponent with the
    # scaled Bessel normalization; its modulus is the free heat envelope
    pref = np.exp(-(x.r ** 2 + y.r ** 2) / (4.0 * w) + complex(z).real) / (4.0 * math.pi * w)
    vals = bessel_i_scaled(np.asarray(orders, dtype=float), z)
    total = complex(np.sum(np.asarray(phases, dtype=complex) * vals))
    nu_next = float(np.max(np.abs(orders))) + 1.0
    tail = 2.0 * _i_tail_bound(z, nu_next) * abs(pref)
    value = pref * total
    if not np.isfinite(tail) or tail > tol:
        raise ConvergenceError(
            f"partial-wave tail bound {tail:.3e} exceeds tolerance {tol:.3e} "
            f"at k_max={k_max}; increase k_max or reduce r1 r2 / |t|",
            value=complex(value), bound=tail)
    return SeriesValue(complex(value), float(tail), len(orders))


def _constant_orders(alpha, a0, k_max):
    k = np.arange(-k_max, k_max + 1)
    mu = (k + alpha) ** 2 + a0
    if np.any(mu < 0.0):
        raise ConvergenceError("angular eigenvalue below zero for constant trace",
                               value=float(np.min(mu)), bound=0.0)
    order = np.argsort(np.abs(k + alpha), kind="stable")
    return k[order], np.sqrt(mu[order])


def heat_kernel_series(t, x, y, flux, k_max=80, tol=1e-9):
    """Partial-wave heat kernel; flux may be a float, FluxConfig, or spectrum.

    With an AngularSpectrum the modes are its eigenpairs (the only route for
    genuinely angle-dependent traces); otherwise the orders are
    sqrt((k + alpha)^2 + a) for the constant trace.
    """
    t = float(t)
    if not t > 0.0:
        raise DomainError(f"heat time must be positive, got {t}")
    return _dispatch_series(t, x, y, flux, k_max, tol)


def schrodinger_kernel_series(t, x, y, flux, k_max=80, tol=1e-6):
    """Partial-wave unitary kernel at real time or Im t < 0.

    At purely real time the modified Bessel factors reduce to ordinary
    Bessel values, which still decay factorially beyond the turning point,
    but each term is evaluated with ~ r1 r2 / (2|t|) digits of cancellation;
    the special-function layer refuses once that loss passes its envelope.
    Complex t = |t| e^{-i gamma} avoids both issues.
    """
    t = complex(t)
    if t == 0.0:
        raise DomainError("time must be nonzero")
    if t.imag > 0.0:
        raise DomainError("unitary kernel needs Im t <= 0")
    return _dispatch_series(1j * t, x, y, flux, k_max, tol)


def _spectrum_modes(spec, x, y, k_max):
    """Orders and mode weights 2 pi psi(th1) conj(psi(th2)) from a spectrum."""
    sel = np.arange(min(2 * k_max + 1, len(spec.eigenvalues)))
    if np.any(spec.eigenvalues[sel] < 0.0):
        raise ConvergenceError("negative angular eigenvalue",
                               value=float(np.min(spec.eigenvalues)), bound=0.0)
    orders = np.sqrt(spec.eigenvalues[sel])
    phases = np.array([2.0 * math.pi * complex(spec.eigenfunction(i, x.theta))
                       * np.conj(complex(spec.eigenfunction(i, y.theta)))
                       for i in sel])
    return orders, phases


def _dispatch_series(w, x, y, flux, k_max, tol):
    if isinstance(flux, AngularSpectrum):
        orders, phases = _spectrum_modes(flux, x, y, k_max)
        return _series_kernel(w, x, y, orders, phases, tol, k_max)
    alpha, a0 = _constant_alpha(flux)
    k, orders = _constant_orders(alpha, a0, k_max)
    phases = np.exp(-1j * k * (x.theta - y.theta))
    return _series_kernel(w, x, y, orders, phases, tol, k_max)


def spectral_measure_series(lam, x, y, flux, k_max=120):
    """Spectral density (lam/2 pi) sum_k e^{-i k dth} J_nu(lam r1) J_nu(lam r2)."""
    lam = float(lam)
    if not lam > 0.0:
        raise DomainError(f"spectral parameter must be positive, got {lam}")
    if isinstance(flux, AngularSpectrum):
        orders, phases = _spectrum_modes(flux, x, y, k_max)
    else:
        alpha, a0 = _constant_alpha(flux)
        k, orders = _constant_orders(alpha, a0, k_max)
        phases = np.exp(-1j * k * (x.theta - y.theta))
    j1 = np.array([float(bessel_j(float(nu), lam * x.r)) for nu in orders])
    j2 = np.array([float(bessel_j(float(nu), lam * y.r)) for nu in orders])
    return complex(lam / (2.0 * math.pi) * np.sum(phases * j1 * j2))


def _oscillatory_b_integral(lam, geo, dtheta, abar, tol):
    """int_0^inf 2 pi J0(lam d_s) P(s, dth, ab) ds via amplitude splitting.

    On a head interval the integrand is integrated directly on phase-budgeted
    panels; beyond it each half-wave a_pm(lam d_s) e^{pm i lam d_s} tail is
    closed by integration by parts in u = d_s.
    """
    amps = amplitude_pair()
    s_env = _fold_length(tol, abar)

    def head(s):
        return 2.0 * math.pi * bessel_j(0.0, lam * geo.d_s(s)) * _p_factor(s, dtheta, abar)

    # accumulated phase lam * d_s controls panel density
    def phase(s):
        return lam * float(geo.d_s(s))

    # stop the head either when the envelope dies or once d_s has reached
    # target/lam, where a three-term tail closure in u = d_s is accurate
    target = 150.0 + phase(0.0)
    arg = ((target / lam) ** 2 - geo.r1 ** 2 - geo.r2 ** 2) / (2.0 * geo.r1 * geo.r2)
    s_osc = math.acosh(max(arg, 1.0))
    s_cut = min(s_env, max(s_osc, 1.0))
    backbone = np.linspace(0.0, s_cut, max(4, int(math.ceil(s_cut)) + 1))
    edges = phase_subdivide(backbone, phase)
    edges = _with_spike_edges(edges, _spike_scale(dtheta))
    val = integrate_panels(head, edges)

    if s_cut < s_env:
        u_cut = float(geo.d_s(s_cut))

        def s_of_u(u):
            arg = (u * u - geo.r1 ** 2 - geo.r2 ** 2) / (2.0 * geo.r1 * geo.r2)
            return np.arccosh(np.maximum(arg, 1.0))

        def g_plus(u):
            u = np.asarray(u, dtype=float)
            return amps.plus(lam * u) * _p_factor(s_of_u(u), dtheta, abar) \
                * u / (geo.r1 * geo.r2 * np.sinh(np.maximum(s_of_u(u), 1e-12)))

        def g_minus(u):
            u = np.asarray(u, dtype=float)
            return amps.minus(lam * u) * _p_factor(s_of_u(u), dtheta, abar) \
                * u / (geo.r1 * geo.r2 * np.sinh(np.maximum(s_of_u(u), 1e-12)))

        val = val + osc_tail_correction(g_plus, lam, u_cut)
        val = val + osc_tail_correction(g_minus, -lam, u_cut)
    return val


def spectral_measure_closed(lam, x, y, flux, tol=1e-9):
    """Closed-form spectral density via the two-term representation.

    Equals 2 lam [J0(lam d) A + int_0^inf J0(lam d_s) B(s) ds]: the
    half-wave amplitude identity a_+(z) e^{iz} + a_-(z) e^{-iz} = 2 pi J0(z)
    folds the outgoing/incoming pair into a single Bessel factor.
    """
    lam = float(lam)
    if not lam > 0.0:
        raise DomainError(f"spectral parameter must be positive, got {lam}")
    alpha, a0 = _constant_alpha(flux)
    if a0 != 0.0:
        raise DomainError("closed-form spectral measure requires a == 0")
    geo = GeometricDistances.from_points(x, y)
    dtheta = x.theta - y.theta
    m, abar = split_flux(alpha)
    a_coeff = C_GEO * _alpha_phase(alpha, dtheta)
    val = 2.0 * lam * float(bessel_j(0.0, lam * geo.d)) * a_coeff
    if abs(abar) >= INTEGER_FLUX_TOL:
        integral = _oscillatory_b_integral(lam, geo, dtheta, abar, tol)
        val = val + lam / math.pi * C_DIFF * np.exp(1j * m * dtheta) * integral
    return complex(val)


def resolvent_mode(sign, nu, lam, r1, r2):
    """Outgoing/incoming free resolvent mode (pm i pi / 2) J_nu H^(1,2)_nu.

    Arguments follow the limiting absorption principle: sign +1 approaches
    the spectrum from above (Hankel of the first kind), -1 from below.
    """
    if sign not in (+1, -1):
        raise DomainError(f"sign must be +1 or -1, got {sign}")
    if not (lam > 0.0 and r1 > 0.0 and r2 > 0.0):
        raise DomainError("resolvent mode needs positive lam, r1, r2")
    lo, hi = min(r1, r2), max(r1, r2)
    j = float(bessel_j(nu, lam * lo))
    h = complex(hankel_h(1 if sign > 0 else 2, nu, lam * hi))
    return (1j * sign * math.pi / 2.0) * j * h


def stone_check(lam, x, y, flux, k_max=120):
    """Verify Stone's formula mode by mode against the spectral density.

    For each angular momentum (lam / i pi)(R_+ - R_-) must reproduce
    lam J_nu(lam r1) J_nu(lam r2); the summed modes are then compared with
    the closed-form spectral measure.  Returns an EstimateReport.
    """
    from .reporting import EstimateReport

    lam = float(lam)
    alpha, _ = _constant_alpha(flux)
    k, orders = _constant_orders(alpha, 0.0, k_max)
    phases = np.exp(-1j * k * (x.theta - y.theta))
    mode_err = 0.0
    acc = 0.0 + 0.0j
    for ph, nu in zip(phases, orders):
        rp = resolvent_mode(+1, float(nu), lam, x.r, y.r)
        rm = resolvent_mode(-1, float(nu), lam, x.r, y.r)
        stone = lam / (1j * math.pi) * (rp - rm)
        direct = lam * float(bessel_j(nu, lam * x.r)) * float(bessel_j(nu, lam * y.r))
        scale = max(abs(direct), 1e-300)
        mode_err = max(mode_err, abs(stone - direct) / scale)
        acc += ph * stone
    series_val = acc / (2.0 * math.pi)
    closed_val = spectral_measure_closed(lam, x, y, alpha)
    rel = abs(series_val - closed_val) / max(abs(closed_val), 1e-300)
    report = EstimateReport(
        name="stone-formula",
        grid={"lam": lam, "r1": x.r, "theta1": x.theta, "r2": y.r,
              "theta2": y.theta, "alpha": alpha, "k_max": k_max},
        constants={"series": complex(series_val), "closed": complex(closed_val)},
        tolerances={"mode_rel": 1e-10, "closed_rel": 1e-6},
    )
    report.add_check("mode_rel_err", mode_err, 1e-10)
    report.add_check("closed_rel_err", rel, 1e-6)
    return report


@dataclass
class KernelGrid:
    """Kernel samples over a parameter sweep, ready for CSV export."""

    param_name: str
    param_values: np.ndarray
    pairs: list
    values: np.ndarray
    meta: dict

    def csv_rows(self):
        rows = []
        for i, p in enumerate(self.param_values):
            for j, (x, y) in enumerate(self.pairs):
                v = self.values[i, j]
                rows.append((float(p), float(x.r), float(x.theta),
                             float(y.r), float(y.theta),
                             float(np.real(v)), float(np.imag(v))))
        return rows

    @staticmethod
    def csv_header(param_name):
        return (param_name, "r1", "theta1", "r2", "theta2", "re", "im")
