"""Radial transforms: quadrature grids, Hankel (Weber) transforms on a
fixed angular mode, dyadic frequency windows, and spectral multipliers.

On the mode with Bessel order nu the radial part of the operator
diagonalizes in the Hankel transform

    (H_nu f)(rho) = int_0^inf f(r) J_nu(rho r) r dr,

which is its own inverse and an L^2(r dr) isometry.  Every propagator and
fractional power in this package is a multiplier F(rho) conjugated by this
pair, discretized with Gauss-Legendre panels sized to the oscillation of
J_nu at the largest frequency in play.
"""

from dataclasses import dataclass, field
from itertools import count

import numpy as np

from ._quad import panel_nodes, uniform_edges
from .errors import DomainError
from .reporting import EstimateReport, csv_text
from .specfun import bessel_i_scaled, bessel_j, _smoothstep

_TOKENS = count(1)


@dataclass(frozen=True)
class RadialGrid:
    """Panel Gauss-Legendre nodes and weights on [0, span].

    `weights` integrate plain dr; use `plane_weights` for the polar measure
    r dr.  The token identifies the grid in transform-matrix caches, so
    grids should be built once per scenario and shared.
    """

    nodes: np.ndarray
    weights: np.ndarray
    span: float
    token: int = field(default_factory=lambda: next(_TOKENS))

    @classmethod
    def for_bandwidth(cls, span, freq_max, nodes_per_panel=16,
                      periods_per_panel=2.0, origin_levels=12):
        """Grid resolving exp(i freq r) up to freq_max on [0, span].

        Panel width keeps `periods_per_panel` oscillation periods per
        16-node panel (about 8 points per period), which drives panel
        quadrature error below 1e-12 for smooth envelopes.  The panel
        touching 0 is refined dyadically `origin_levels` times: transform
        integrands carry a fractional r^(2 nu + 1) factor there, which
        fixed-order panels would otherwise resolve only algebraically.
        """
        if span <= 0:
            raise DomainError("span must be positive")
        width = span
        if freq_max > 0:
            width = min(width, 2.0 * np.pi * periods_per_panel / freq_max)
        edges = uniform_edges(0.0, span, width)
        first = edges[1] * 0.5 ** np.arange(origin_levels, 0, -1)
        edges = np.concatenate([edges[:1], first, edges[1:]])
        x, w = panel_nodes(edges, nodes_per_panel)
        return cls(nodes=x, weights=w, span=float(span))

    @property
    def plane_weights(self):
        return self.weights * self.nodes

    def integrate(self, values):
        """int f(r) dr over [0, span]."""
        return np.tensordot(np.asarray(values), self.weights, axes=(-1, -1))

    def integrate_plane(self, values):
        """int f(r) r dr over [0, span]."""
        return np.tensordot(np.asarray(values), self.plane_weights, axes=(-1, -1))

    def __len__(self):
        return self.nodes.size


_JMAT_CACHE = {}
_JMAT_LIMIT = 48


def _bessel_matrix(nu, row_grid, col_grid):
    """J_nu(outer(rows, cols)), cached; the transposed key is reused."""
    nu_key = round(float(nu), 12)
    key = (nu_key, row_grid.token, col_grid.token)
    hit = _JMAT_CACHE.get(key)
    if hit is not None:
        return hit
    tkey = (nu_key, col_grid.token, row_grid.token)
    hit = _JMAT_CACHE.get(tkey)
    if hit is not None:
        return hit.T
    if len(_JMAT_CACHE) >= _JMAT_LIMIT:
        _JMAT_CACHE.pop(next(iter(_JMAT_CACHE)))
    mat = bessel_j(float(nu), np.outer(row_grid.nodes, col_grid.nodes))
    _JMAT_CACHE[key] = mat
    return mat


def hankel_forward(nu, values, grid_r, grid_rho):
    """(H_nu f)(rho_i) for f sampled on grid_r; values may stack in axis 0."""
    mat = _bessel_matrix(nu, grid_rho, grid_r)
    return np.asarray(values) @ (mat * grid_r.plane_weights).T


def hankel_inverse(nu, coeffs, grid_r, grid_rho):
    """Inverse transform back to grid_r (same kernel, rho measure)."""
    mat = _bessel_matrix(nu, grid_rho, grid_r)
    return np.asarray(coeffs) @ (mat * grid_rho.plane_weights[:, None])


def synthesize(nu, coeffs, grid_rho, targets):
    """int F(rho) J_nu(rho r) rho drho at arbitrary radii r (no caching)."""
    t = np.atleast_1d(np.asarray(targets, dtype=float))
    mat = bessel_j(float(nu), np.outer(t, grid_rho.nodes))
    out = mat @ (np.asarray(coeffs) * grid_rho.plane_weights)
    return out if np.ndim(targets) else out[0]


def apply_multiplier(nu, values, grid_r, grid_rho, multiplier):
    """F(sqrt(L)) restricted to the order-nu mode: conjugate a frequency
    multiplier by the Hankel pair.  `multiplier` maps rho >= 0 to complex."""
    coeffs = hankel_forward(nu, values, grid_r, grid_rho)
    return hankel_inverse(nu, coeffs * multiplier(grid_rho.nodes), grid_r, grid_rho)


def hankel_self_test(nu, span=12.0, freq_max=12.0):
    """Self-test of the transform pair on the Gaussian eigenfunction.

    r^nu e^{-r^2/2} is fixed by H_nu exactly; returns the dict of measured
    errors: transform vs closed form, round trip, and Plancherel defect.
    """
    grid_r = RadialGrid.for_bandwidth(span, freq_max)
    grid_rho = RadialGrid.for_bandwidth(freq_max, span)
    f = grid_r.nodes ** nu * np.exp(-0.5 * grid_r.nodes ** 2)
    F = hankel_forward(nu, f, grid_r, grid_rho)
    F_exact = grid_rho.nodes ** nu * np.exp(-0.5 * grid_rho.nodes ** 2)
    back = hankel_inverse(nu, F, grid_r, grid_rho)
    n2_r = grid_r.integrate_plane(np.abs(f) ** 2)
    n2_rho = grid_rho.integrate_plane(np.abs(F) ** 2)
    return {
        "transform_error": float(np.max(np.abs(F - F_exact))),
        "round_trip_error": float(np.max(np.abs(back - f))),
        "plancherel_defect": float(abs(n2_r - n2_rho) / n2_r),
    }


def lp_psi(lam):
    """Low-pass C-infinity cutoff: 1 on [0, 1], 0 on [2, inf)."""
    return 1.0 - _smoothstep(np.asarray(lam, dtype=float) - 1.0)


def lp_phi(lam):
    """Dyadic band window phi = psi - psi(2 .), supported in [1/2, 2].

    The family phi(2^{-k} lam) telescopes exactly: any finite sum over
    k in [k0, k1] equals psi(2^{-k1} lam) - psi(2^{-k0+1} lam).
    """
    lam = np.asarray(lam, dtype=float)
    return lp_psi(lam) - lp_psi(2.0 * lam)


def lp_window(k, lam):
    """phi(2^{-k} lam): frequency band [2^{k-1}, 2^{k+1}]."""
    return lp_phi(np.asarray(lam, dtype=float) / 2.0 ** k)


def lp_head(k, lam):
    """psi(2^{-k} lam): everything below the k-th band."""
    return lp_psi(np.asarray(lam, dtype=float) / 2.0 ** k)


def lp_partition(lam, k_min, k_max):
    """Head + bands: psi(2^{-k_min} .) + sum_{k_min<k<=k_max} phi(2^{-k} .).

    Equals 1 up to the boundary correction psi(2^{-k_max} lam) - 1, which
    vanishes for lam <= 2^{k_max}; the correction is returned so callers
    can monitor truncated boundary mass.
    """
    lam = np.asarray(lam, dtype=float)
    total = lp_head(k_min, lam)
    for k in range(k_min + 1, k_max + 1):
        total = total + lp_window(k, lam)
    correction = 1.0 - lp_head(k_max, lam)
    return total, correction


def window_mass(k):
    """int phi(2^{-k} lam) lam dlam = 2^{2k} int phi(u) u du (planar mass
    of the k-th band; the constant is about 0.8 for this mollifier)."""
    u = np.linspace(0.25, 2.25, 4001)
    base = np.trapezoid(lp_phi(u) * u, u)
    return float(base) * 4.0 ** k


def lp_windows(j_min, j_max):
    """Lump plus dyadic band multipliers covering frequencies up to 2^j_max.

    The lump psi(2^{-j_min} lam) absorbs everything at and below level
    j_min (which must sit at or below 0, where the operator has no small
    frequency structure to resolve); each band j in (j_min, j_max] carries
    phi(2^{-j} lam).  Lump plus bands telescope to psi(2^{-j_max} lam),
    identically 1 on [0, 2^j_max].

    Returns (lump, bands) with `bands` a list of (j, multiplier).
    """
    if not (j_min <= 0 < j_max):
        raise DomainError(f"need j_min <= 0 < j_max, got ({j_min}, {j_max})")

    def lump(lam):
        return lp_head(j_min, lam)

    def band(j):
        return lambda lam: lp_window(j, lam)

    return lump, [(j, band(j)) for j in range(j_min + 1, j_max + 1)]


@dataclass(frozen=True)
class RadialProfile:
    """Complex radial samples bound to their quadrature grid."""

    grid: RadialGrid
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=complex)
        if vals.shape != self.grid.nodes.shape:
            raise DomainError("profile values must match the grid size")
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_function(cls, grid, fn):
        return cls(grid, np.asarray(fn(grid.nodes), dtype=complex))

    def norm_sq(self):
        """Planar L^2 mass int |f|^2 r dr of this mode profile."""
        return float(np.real(self.grid.integrate_plane(np.abs(self.values) ** 2)))

    def scaled(self, factor):
        return RadialProfile(self.grid, self.values * factor)

    def to_csv(self):
        rows = [(float(r), float(v.real), float(v.imag))
                for r, v in zip(self.grid.nodes, self.values)]
        return csv_text(("r", "re", "im"), rows)


@dataclass(frozen=True)
class DyadicWindow:
    """One frequency-localized piece phi_j(sqrt(L)) f of a mode profile."""

    j: int
    profile: RadialProfile


def mode_multiplier(F, nu, profile, grid_rho=None, freq_max=None):
    """Apply F(L) on a single angular mode: H_nu[F(rho^2) H_nu f].

    `F` maps the operator eigenvalue lambda^2 (array of rho^2 values) to
    complex multipliers.  The frequency grid defaults to one resolving
    oscillations against the profile's own span up to `freq_max` (default
    48 / span-normalized 32); pass an explicit grid to share its transform
    matrix across calls.
    """
    if grid_rho is None:
        top = float(freq_max) if freq_max is not None else 32.0
        grid_rho = RadialGrid.for_bandwidth(top, profile.grid.span)
    coeffs = hankel_forward(nu, profile.values, profile.grid, grid_rho)
    out = hankel_inverse(nu, coeffs * F(grid_rho.nodes ** 2),
                         profile.grid, grid_rho)
    return RadialProfile(profile.grid, out)


def weber_check(nu, t, r1, r2, tol=1e-7):
    """Verify the Weber integral against its modified-Bessel closed form.

        int_0^inf e^{-t rho^2} J_nu(r1 rho) J_nu(r2 rho) rho drho
            = (2t)^{-1} e^{-(r1^2+r2^2)/(4t)} I_nu(r1 r2 / (2t)),

    for Re t > 0 (complex t tilts the Gaussian into a chirp, handled by
    phase-budgeted panels).  Returns an EstimateReport whose single check
    is the relative error against `tol`.
    """
    t = complex(t)
    if not t.real > 0.0:
        raise DomainError(f"need Re t > 0, got {t}")
    if not (nu >= 0.0 and r1 > 0.0 and r2 > 0.0):
        raise DomainError("need nu >= 0 and positive radii")
    rho_max = float(np.sqrt(60.0 / t.real))
    # panel density covers both the Bessel oscillation (freq r1 + r2) and
    # the chirp from Im t, whose local frequency peaks at 2 |Im t| rho_max
    freq = r1 + r2 + 2.0 * abs(t.imag) * rho_max
    grid = RadialGrid.for_bandwidth(rho_max, freq, periods_per_panel=1.0)
    rho = grid.nodes
    integrand = (np.exp(-t * rho * rho) * bessel_j(float(nu), rho * r1)
                 * bessel_j(float(nu), rho * r2) * rho)
    lhs = complex(np.sum(grid.weights * integrand))
    z = r1 * r2 / (2.0 * t)
    # bessel_i_scaled returns I_nu(z) e^{-Re z}, so restore Re z here
    rhs = complex(np.exp(-(r1 ** 2 + r2 ** 2) / (4.0 * t) + z.real)
                  * bessel_i_scaled(float(nu), z) / (2.0 * t))
    rel = abs(lhs - rhs) / max(abs(rhs), 1e-300)
    report = EstimateReport(
        name="weber-identity",
        grid={"nu": float(nu), "t": complex(t), "r1": float(r1), "r2": float(r2),
              "nodes": len(grid)},
        constants={"quadrature": lhs, "closed_form": rhs},
        tolerances={"rel": tol},
    )
    report.add_check("rel_err", rel, tol)
    return report
