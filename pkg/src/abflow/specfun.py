"""Fractional-order Bessel and Hankel functions and the outgoing/incoming
amplitude pair.

All evaluations are series/asymptotic with explicit crossovers; scipy is used
only for Gamma-function plumbing (gammaln, rgamma), never for the Bessel
functions themselves.  Real-argument routines accept scalars or arrays and
dispatch element-wise between the ascending power series and the Hankel
large-argument expansion at x = max(12, nu + 8); the two regimes overlap to
about 1e-10 there, which is the accuracy floor of this module near the
crossover (deep in the series regime it is ~1e-13).
"""
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln, rgamma

from .errors import ConvergenceError, DomainError

_EULER_GAMMA = 0.5772156649015328606

# series terms are capped here; reaching the cap means the argument was far
# outside the intended (|z| + padding) budget
_MAX_SERIES_TERMS = 4_000_000


def crossover(nu):
    """Series/asymptotic switch point for real-argument J and Y."""
    return max(12.0, nu + 8.0)


@dataclass(frozen=True)
class BesselOrder:
    """A validated Bessel order: nu >= 0 and finite."""
    nu: float
    kind: str = "j"

    def __post_init__(self):
        if not np.isfinite(self.nu) or self.nu < 0:
            raise DomainError(f"order must be finite and >= 0, got {self.nu}")
        if self.kind not in ("j", "y", "i", "h1", "h2"):
            raise DomainError(f"unknown Bessel kind {self.kind!r}")


def _as_float_array(x, name):
    arr = np.asarray(x, dtype=float)
    if np.any(~np.isfinite(arr)):
        raise DomainError(f"{name} must be finite")
    return arr


def _jnu_series(nu, x):
    """Ascending series for J_nu, x below the crossover. Vectorized in x."""
    out = np.zeros_like(x)
    pos = x > 0
    if nu == 0:
        out[~pos] = 1.0
    if not np.any(pos):
        return out
    xp = x[pos]
    q = -0.25 * xp * xp
    term = np.exp(nu * np.log(0.5 * xp) - gammaln(nu + 1.0))
    acc = term.copy()
    m = 0
    while True:
        term = term * q / ((m + 1.0) * (nu + m + 1.0))
        acc += term
        m += 1
        # stop per element: one small-x entry must not truncate the rest
        done = np.abs(term) < 1e-17 * np.maximum(np.abs(acc), 1e-290)
        if np.all(done) or m > 600:
            break
    out[pos] = acc
    return out


def _jmnu_series(nu, x):
    """Ascending series for J_{-nu} (nu non-integer), x below crossover."""
    out = np.zeros_like(x)
    pos = x > 0
    if not np.any(pos):
        # J_{-nu}(0) diverges for non-integer nu > 0
        raise DomainError("J_{-nu} is singular at x = 0 for non-integer nu")
    xp = x[pos]
    q = -0.25 * xp * xp
    # 1/Gamma handles the poles at non-positive arguments gracefully
    term = np.power(0.5 * xp, -nu) * rgamma(1.0 - nu)
    acc = term.copy()
    m = 0
    while True:
        term = term * q / ((m + 1.0) * (-nu + m + 1.0))
        acc += term
        m += 1
        done = np.abs(term) < 1e-17 * np.maximum(np.abs(acc), 1e-290)
        if np.all(done) or m > 600:
            break
    out[pos] = acc
    return out


def _asym_pq(nu, x, max_terms=50):
    """P, Q sums of the Hankel expansion with optimal-truncation freezing.

    Only valid for small order (the expansion parameter is 4 nu^2 / (8x));
    callers anchor at the fractional part of the order and recur upward.
    """
    mu = 4.0 * nu * nu
    P = np.ones_like(x)
    Q = np.zeros_like(x)
    uk = 1.0
    xk = np.ones_like(x)
    prev = np.full_like(x, np.inf)
    active = np.ones(x.shape, dtype=bool)
    for k in range(1, max_terms + 1):
        uk = uk * (mu - (2 * k - 1) ** 2) / (8.0 * k)
        xk = xk / x
        term = uk * xk
        mag = np.abs(term)
        # freeze before adding once terms grow: past optimal truncation
        active &= mag < prev
        if not np.any(active):
            break
        sign = (-1) ** (k // 2)
        sel = active
        if k % 2 == 0:
            P[sel] += sign * term[sel]
        else:
            Q[sel] += sign * term[sel]
        prev = np.where(sel, mag, prev)
        if np.max(mag[sel]) < 1e-18:
            break
    return P, Q


def _omega(nu, x):
    return x - (0.5 * nu + 0.25) * np.pi


def _jy_asym_base(nu0, x):
    """J and Y at a small base order by the Hankel expansion (x >= ~12)."""
    P, Q = _asym_pq(nu0, x)
    om = _omega(nu0, x)
    amp = np.sqrt(2.0 / (np.pi * x))
    c, s = np.cos(om), np.sin(om)
    return amp * (c * P - s * Q), amp * (s * P + c * Q)


def _jy_asym(nu, x):
    """J_nu, Y_nu for x above the crossover.

    The fixed-order expansion degrades once nu^2 is comparable to x, so the
    pair is anchored at the fractional order nu0 in [0,1) and carried up by
    the three-term recurrence. The branch is only entered for x > nu + 8,
    where both J and Y are oscillatory and the upward recurrence is stable.
    """
    n = int(np.floor(nu))
    nu0 = nu - n
    j_lo, y_lo = _jy_asym_base(nu0, x)
    if n == 0:
        return j_lo, y_lo
    j_hi, y_hi = _jy_asym_base(nu0 + 1.0, x)
    for i in range(n - 1):
        mu = nu0 + 1.0 + i
        j_lo, j_hi = j_hi, (2.0 * mu / x) * j_hi - j_lo
        y_lo, y_hi = y_hi, (2.0 * mu / x) * y_hi - y_lo
    return j_hi, y_hi


def _jnu_asym(nu, x):
    return _jy_asym(nu, x)[0]


def _ynu_upward(nu, x):
    """Y_nu for x >= ~12 via the asymptotic base and upward recurrence.

    Unlike J, the upward three-term recurrence is stable for Y at every
    argument (Y is the dominant solution), so no turning-point band is
    needed: this covers both x < nu and x > nu.
    """
    n = int(np.floor(nu))
    nu0 = nu - n
    y_lo = _jy_asym_base(nu0, x)[1]
    if n == 0:
        return y_lo
    y_hi = _jy_asym_base(nu0 + 1.0, x)[1]
    for i in range(n - 1):
        mu = nu0 + 1.0 + i
        y_lo, y_hi = y_hi, (2.0 * mu / x) * y_hi - y_lo
    return y_hi


def _jnu_miller(nu, x):
    """J_nu on the band 12 <= x < nu + 8 by backward (Miller) recurrence.

    The ascending series cancels catastrophically here once nu is large,
    and the upward recurrence is unstable for J below the turning point
    x ~ nu.  Recurring downward from a tiny seed well above max(nu, x) is
    stable; the run is normalized by a least-squares match to the Hankel
    expansion values at the fractional base order (valid since x >= 12).
    """
    n = int(np.floor(nu))
    nu0 = nu - n
    j0 = _jy_asym_base(nu0, x)[0]
    j1 = _jy_asym_base(nu0 + 1.0, x)[0]
    m_star = max(nu, float(np.max(x)))
    k_top = int(np.ceil(m_star + 10.0 * np.sqrt(m_star + 1.0) + 30.0 - nu0))
    f_hi = np.zeros_like(x)
    f_cur = np.full_like(x, 1e-300)
    f_tgt = np.zeros_like(x)
    for k in range(k_top, 0, -1):
        mu = nu0 + k
        f_hi, f_cur = f_cur, (2.0 * mu / x) * f_cur - f_hi
        if k - 1 == n:
            f_tgt = f_cur.copy()
    # rescale per element before matching: raw carriers can underflow squared
    scale = np.maximum(np.abs(f_cur), np.abs(f_hi))
    g0, g1, gt = f_cur / scale, f_hi / scale, f_tgt / scale
    lam = (j0 * g0 + j1 * g1) / (g0 * g0 + g1 * g1)
    return lam * gt


def _ynu_int_series(n, x):
    """Integer-order Y_n ascending formula (log + finite + psi series)."""
    out = np.empty_like(x)
    pos = x > 0
    out[~pos] = -np.inf
    if not np.any(pos):
        return out
    xp = x[pos]
    half = 0.5 * xp
    q = 0.25 * xp * xp

    jn = _jnu_series(float(n), xp)
    total = (2.0 / np.pi) * np.log(half) * jn

    if n > 0:
        fin = np.zeros_like(xp)
        # sum_{m<n} (n-m-1)!/m! q^m
        coef = np.exp(gammaln(n))  # (n-1)!
        qm = np.ones_like(xp)
        for m in range(n):
            fin += coef * qm
            if m + 1 < n:
                coef = coef / ((n - m - 1.0)) * 1.0 / (m + 1.0)
                qm = qm * q
        # (x/2)^(-n) may overflow for extreme small x; Y_n genuinely diverges
        with np.errstate(over="ignore"):
            total -= np.power(half, -float(n)) / np.pi * fin

    # psi series
    psi_m = -_EULER_GAMMA
    psi_nm = -_EULER_GAMMA + np.sum(1.0 / np.arange(1, n + 1)) if n > 0 else -_EULER_GAMMA
    term = np.power(half, float(n)) * np.exp(-gammaln(n + 1.0))
    acc = (psi_m + psi_nm) * term
    m = 0
    while True:
        term = term * (-q) / ((m + 1.0) * (n + m + 1.0))
        psi_m = psi_m + 1.0 / (m + 1.0)
        psi_nm = psi_nm + 1.0 / (n + m + 1.0)
        contrib = (psi_m + psi_nm) * term
        acc += contrib
        m += 1
        done = np.abs(contrib) < 1e-17 * np.maximum(np.abs(acc), 1e-290)
        if np.all(done) or m > 600:
            break
    total -= acc / np.pi
    out[pos] = total
    return out


def bessel_j(nu, x):
    """Bessel function J_nu(x) for real order nu >= 0 and real x >= 0.

    Three regimes, vectorized in x: ascending power series for x < 12,
    backward (Miller) recurrence on the turning-point band 12 <= x < nu+8,
    and the Hankel asymptotic expansion carried up from the fractional base
    order for x >= max(12, nu+8).
    """
    if not np.isfinite(nu) or nu < 0:
        raise DomainError(f"order must be >= 0, got {nu}")
    arr = _as_float_array(x, "x")
    scalar = arr.ndim == 0
    flat = np.atleast_1d(arr).astype(float).ravel()
    if np.any(flat < 0):
        raise DomainError("argument must be >= 0")
    out = np.empty_like(flat)
    xc = crossover(nu)
    small = flat < 12.0
    band = (~small) & (flat < xc)
    high = flat >= xc
    if np.any(small):
        out[small] = _jnu_series(nu, flat[small])
    if np.any(band):
        out[band] = _jnu_miller(nu, flat[band])
    if np.any(high):
        out[high] = _jnu_asym(nu, flat[high])
    out = out.reshape(np.atleast_1d(arr).shape)
    return float(out[0]) if scalar else out.reshape(arr.shape)


def bessel_y(nu, x, _int_tol=1e-6):
    """Weber function Y_nu(x), x > 0.

    For x < 12 non-integer orders use the reflection formula through
    J_{+-nu}, and orders within 1e-6 of an integer the integer-limit
    formula; for x >= 12 the asymptotic base plus upward recurrence.
    """
    if not np.isfinite(nu) or nu < 0:
        raise DomainError(f"order must be >= 0, got {nu}")
    arr = _as_float_array(x, "x")
    scalar = arr.ndim == 0
    flat = np.atleast_1d(arr).astype(float).ravel()
    if np.any(flat <= 0):
        raise DomainError("Y_nu requires x > 0")
    out = np.empty_like(flat)
    small = flat < 12.0
    near_int = abs(nu - round(nu)) < _int_tol
    if np.any(small):
        xs = flat[small]
        if near_int:
            out[small] = _ynu_int_series(int(round(nu)), xs)
        else:
            s, c = np.sin(nu * np.pi), np.cos(nu * np.pi)
            out[small] = (_jnu_series(nu, xs) * c - _jmnu_series(nu, xs)) / s
    if np.any(~small):
        out[~small] = _ynu_upward(nu, flat[~small])
    return float(out[0]) if scalar else out.reshape(arr.shape)


def bessel_jp(nu, x):
    """d/dx J_nu(x) via J'_nu = (nu/x) J_nu - J_{nu+1} (valid for x > 0)."""
    arr = _as_float_array(x, "x")
    if np.any(np.atleast_1d(arr) <= 0):
        raise DomainError("derivative recurrence requires x > 0")
    return (nu / arr) * bessel_j(nu, arr) - bessel_j(nu + 1.0, arr)


def bessel_yp(nu, x):
    arr = _as_float_array(x, "x")
    if np.any(np.atleast_1d(arr) <= 0):
        raise DomainError("derivative recurrence requires x > 0")
    return (nu / arr) * bessel_y(nu, arr) - bessel_y(nu + 1.0, arr)


def hankel_h(kind, nu, x):
    """Hankel function H^(kind)_nu(x) = J_nu(x) +- i Y_nu(x), x > 0."""
    if kind not in (1, 2):
        raise DomainError("kind must be 1 or 2")
    s = 1.0 if kind == 1 else -1.0
    return bessel_j(nu, x) + 1j * s * bessel_y(nu, x)


def _iv_terms_needed(nu_min, az_max):
    mstar = 0.5 * (-nu_min + np.sqrt(nu_min * nu_min + az_max * az_max))
    m_end = int(mstar + 9.0 * np.sqrt(mstar + 1.0) + 40.0)
    if m_end > _MAX_SERIES_TERMS:
        raise ConvergenceError(
            f"modified-Bessel series would need {m_end} terms; argument too large")
    return m_end


def bessel_i_scaled(nu, z):
    """exp(-Re z) * I_nu(z) for Re z >= 0, by the ascending series in the
    log domain (stable for |z| up to ~1e5; no asymptotic branch needed).

    Either `nu` or `z` may be an array (broadcast together).  The scaled form
    is what the heat/Schroedinger kernels consume: combined with their
    Gaussian prefactor it never overflows as t -> 0.

    Accuracy degrades like eps * exp(|z| - Re z) near the imaginary axis;
    arguments with |z| - Re z > 30 raise ConvergenceError.  (Propagator
    evaluations at complex time keep arg(1/tau) well inside the right half
    plane, so this envelope is never binding there.)
    """
    nu_arr = np.asarray(nu, dtype=float)
    z_arr = np.asarray(z, dtype=complex)
    if np.any(nu_arr < 0):
        raise DomainError("order must be >= 0")
    if np.any(z_arr.real < -1e-12):
        raise DomainError("bessel_i requires Re z >= 0")
    nu_b, z_b = np.broadcast_arrays(nu_arr, z_arr)
    shape = nu_b.shape
    nu_f = np.atleast_1d(nu_b).ravel().astype(float)
    z_f = np.atleast_1d(z_b).ravel().astype(complex)
    out = np.zeros(nu_f.shape, dtype=complex)

    # the ascending series loses ~ (|z| - Re z) e-folds to cancellation as z
    # approaches the imaginary axis; refuse rather than return garbage
    loss = np.abs(z_f) - z_f.real
    worst = float(np.max(loss)) if loss.size else 0.0
    if worst > 30.0:
        raise ConvergenceError(
            "modified-Bessel series would lose %.0f e-folds to cancellation "
            "(argument too close to the imaginary axis); keep |z| - Re z "
            "below 30" % worst, value=worst, bound=30.0)
    tiny = np.abs(z_f) < 1e-300
    out[tiny] = np.where(nu_f[tiny] == 0.0, 1.0, 0.0)
    live = ~tiny
    if np.any(live):
        nu_l, z_l = nu_f[live], z_f[live]
        m_end = _iv_terms_needed(float(np.min(nu_l)), float(np.max(np.abs(z_l))))
        # chunk so the (elements x terms) workspace stays bounded
        chunk = max(1, int(4e7 // (m_end + 1)))
        res = np.empty(nu_l.shape, dtype=complex)
        m = np.arange(m_end + 1, dtype=float)
        lgm = gammaln(m + 1.0)
        for lo in range(0, nu_l.size, chunk):
            sl = slice(lo, lo + chunk)
            nu_c = nu_l[sl][:, None]
            z_c = z_l[sl][:, None]
            lt = (nu_c + 2.0 * m) * np.log(0.5 * z_c) - lgm - gammaln(nu_c + m + 1.0)
            c = np.max(lt.real, axis=1, keepdims=True)
            s = np.sum(np.exp(lt - c), axis=1)
            res[sl] = s * np.exp(c[:, 0] - z_l[sl].real)
        out[live] = res
    if shape == ():
        return complex(out[0])
    return out.reshape(shape)


def bessel_i(nu, z):
    """I_nu(z) for Re z >= 0 (overflows to inf past Re z ~ 700, by design;
    use bessel_i_scaled for large arguments)."""
    z_arr = np.asarray(z, dtype=complex)
    return bessel_i_scaled(nu, z_arr) * np.exp(z_arr.real)


def _smoothstep(u):
    """C-infinity step: 0 for u <= 0, 1 for u >= 1, strictly rising between."""
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    out[u >= 1.0] = 1.0
    mid = (u > 0.0) & (u < 1.0)
    if np.any(mid):
        um = u[mid]
        a = np.exp(-1.0 / um)
        b = np.exp(-1.0 / (1.0 - um))
        out[mid] = a / (a + b)
    return out


@dataclass(frozen=True)
class AmplitudePair:
    """Smooth amplitudes (a_plus, a_minus) realizing

        2 pi J_0(r) = a_plus(r) e^{i r} + a_minus(r) e^{-i r}   exactly,

    with a_plus = pi H^(1)_0(r) e^{-ir}, a_minus = pi H^(2)_0(r) e^{+ir}
    for r >= blend_point, and (2 pi J_0(r) e^{-ir}, 0) below blend_point/2;
    a C-infinity blend joins the two on [blend_point/2, blend_point].
    Both amplitudes satisfy |a(r)| <= C (1+r)^{-1/2}.
    """
    blend_point: float = 1.0

    def __post_init__(self):
        if self.blend_point <= 0:
            raise DomainError("blend_point must be positive")

    def minus(self, r):
        r = np.asarray(r, dtype=float)
        scalar = r.ndim == 0
        flat = np.atleast_1d(r).ravel()
        if np.any(flat < 0):
            raise DomainError("radius must be >= 0")
        out = np.zeros(flat.shape, dtype=complex)
        b = self.blend_point
        chi = _smoothstep((flat - 0.5 * b) / (0.5 * b))
        on = chi > 0.0
        if np.any(on):
            ron = flat[on]
            out[on] = chi[on] * np.pi * hankel_h(2, 0.0, ron) * np.exp(1j * ron)
        out = out if not scalar else complex(out[0])
        return out

    def plus(self, r):
        r = np.asarray(r, dtype=float)
        scalar = r.ndim == 0
        flat = np.atleast_1d(r).ravel()
        if np.any(flat < 0):
            raise DomainError("radius must be >= 0")
        am = np.atleast_1d(self.minus(flat))
        # identity-preserving construction: a_plus = (2 pi J_0 - a_minus e^{-ir}) e^{-ir}
        out = (2.0 * np.pi * bessel_j(0.0, flat) - am * np.exp(-1j * flat)) * np.exp(-1j * flat)
        return complex(out[0]) if scalar else out

    def identity_residual(self, r):
        """a_plus e^{ir} + a_minus e^{-ir} - 2 pi J_0(r) (zero up to rounding)."""
        r = np.asarray(r, dtype=float)
        return (self.plus(r) * np.exp(1j * r) + self.minus(r) * np.exp(-1j * r)
                - 2.0 * np.pi * bessel_j(0.0, r))

    def decay_constant(self, r):
        """max over the sample of |a_pm(r)| (1+r)^{1/2}."""
        r = np.asarray(r, dtype=float)
        w = np.sqrt(1.0 + r)
        return float(max(np.max(np.abs(self.plus(r)) * w),
                         np.max(np.abs(self.minus(r)) * w)))


def amplitude_pair(blend_point=1.0):
    """Construct the standard amplitude pair (see AmplitudePair)."""
    return AmplitudePair(blend_point=blend_point)
