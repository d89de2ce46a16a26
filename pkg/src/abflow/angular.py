"""Angular operator on the unit circle.

The planar operator separates in polar coordinates into a family of radial
Bessel problems indexed by the spectrum of the angular part

    L_ang u = (i d/dtheta + alpha(theta))^2 u + a(theta) u

acting on 2pi-periodic functions, where alpha is the tangential trace of the
vector potential and a the trace of the scalar one.  Its eigenvalues mu_j
feed every kernel through the orders nu_j = sqrt(mu_j); positivity of mu is
guaranteed by the standing condition

    sup(max(-a, 0)) < dist(Phi, Z)^2,   Phi not an integer,

with Phi the mean flux of alpha.  Constant traces diagonalize explicitly on
e^{i m theta}; general smooth traces are handled by a Fourier-Galerkin
matrix whose entries are exact trigonometric convolutions.
"""

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import ConfigError, ConvergenceError

_TWO_PI = 2.0 * np.pi


def _as_trace(f):
    """Normalize a constant or callable trace to a vectorized callable."""
    if callable(f):
        return lambda th: np.asarray(f(np.asarray(th, dtype=float)), dtype=float)
    val = float(f)
    return lambda th: np.full(np.shape(np.asarray(th, dtype=float)), val)


@dataclass(frozen=True)
class FluxConfig:
    """Traces (alpha, a) of the potentials on the unit circle.

    `alpha` and `a` may each be a float (constant trace) or a callable of
    theta, vectorized or not, 2pi-periodic.  Fourier data is extracted once
    on a uniform grid of `grid_size` points; traces must be band-limited
    well below grid_size/2 (any trigonometric polynomial of degree < 512
    at the default size is represented exactly).
    """

    alpha: object
    a: object = 0.0
    grid_size: int = 2048

    def __post_init__(self):
        if self.grid_size < 16 or self.grid_size % 2:
            raise ConfigError("grid_size must be an even integer >= 16")

    @cached_property
    def _theta(self):
        return _TWO_PI * np.arange(self.grid_size) / self.grid_size

    @cached_property
    def _alpha_grid(self):
        return _as_trace(self.alpha)(self._theta)

    @cached_property
    def _a_grid(self):
        return _as_trace(self.a)(self._theta)

    @cached_property
    def _alpha_hat(self):
        return np.fft.fft(self._alpha_grid) / self.grid_size

    @cached_property
    def _alpha_sq_hat(self):
        return np.fft.fft(self._alpha_grid ** 2) / self.grid_size

    @cached_property
    def _a_hat(self):
        return np.fft.fft(self._a_grid) / self.grid_size

    def alpha_values(self, theta):
        return _as_trace(self.alpha)(theta)

    def a_values(self, theta):
        return _as_trace(self.a)(theta)

    def _hat(self, table, n):
        n = np.asarray(n)
        if np.any(np.abs(n) > self.grid_size // 4):
            raise ConfigError("requested Fourier index beyond trusted bandwidth")
        return table[np.mod(n, self.grid_size)]

    def alpha_hat(self, n):
        """Fourier coefficient (1/2pi) int alpha(t) e^{-int} dt."""
        return self._hat(self._alpha_hat, n)

    def a_hat(self, n):
        return self._hat(self._a_hat, n)

    @property
    def flux(self):
        """Mean of alpha over the circle (the total flux divided by 2pi)."""
        return float(self._alpha_hat[0].real)

    @property
    def a_mean(self):
        return float(self._a_hat[0].real)

    @property
    def reduced_flux(self):
        """flux - floor(flux + 1/2), in [-1/2, 1/2)."""
        return self.flux - np.floor(self.flux + 0.5)

    @property
    def integer_distance(self):
        """dist(flux, Z) = min_k |k - flux|."""
        return float(abs(self.reduced_flux))

    @property
    def negative_part_sup(self):
        """sup of max(-a, 0) over the circle."""
        return float(max(0.0, -np.min(self._a_grid)))

    def violations(self, int_tol=1e-9):
        """Messages for every violated standing condition (empty if none)."""
        out = []
        if self.integer_distance <= int_tol:
            out.append(
                f"flux {self.flux:.12g} is within {int_tol:g} of an integer")
        gap = self.integer_distance ** 2
        neg = self.negative_part_sup
        if neg >= gap:
            out.append(
                "negative part bound violated: sup(a_-) = %.12g >= "
                "dist(flux, Z)^2 = %.12g" % (neg, gap))
        return out

    def require_valid(self):
        v = self.violations()
        if v:
            raise ConfigError("; ".join(v), violations=v)
        return self

    @property
    def is_constant(self):
        tail = np.abs(self._alpha_hat[1:]).max() + np.abs(self._a_hat[1:]).max()
        head = 1.0 + abs(self._alpha_hat[0]) + abs(self._a_hat[0])
        return bool(tail <= 1e-13 * head)


def explicit_eigenpair(flux, a_const, k):
    """Order and eigenfunction for constant traces, mode label k.

    For alpha = Phi and a = a0 constant the angular eigenfunctions are
    theta -> e^{-i k theta} / sqrt(2 pi) with eigenvalue (k + Phi)^2 + a0.
    Returns (nu, eigenfunction) with nu = sqrt of the eigenvalue.
    """
    mu = (k + float(flux)) ** 2 + float(a_const)
    if mu < 0:
        raise ConfigError(
            "negative angular eigenvalue: constant trace violates the "
            "negative part bound")
    nu = float(np.sqrt(mu))

    def fn(theta):
        th = np.asarray(theta, dtype=float)
        return np.exp(-1j * k * th) / np.sqrt(_TWO_PI)

    return nu, fn


@dataclass(frozen=True)
class AngularSpectrum:
    """Eigen-decomposition of the angular operator.

    `vectors[:, i]` holds Fourier coefficients on basis exp(i m theta)
    / sqrt(2 pi) for m in `m_index`; eigenvalues ascend.  `labels[i]` is
    the integer j with eigenvalue ~ a_mean + (j + reduced_flux)^2, assigned
    from the dominant Fourier index of each eigenvector.
    """

    eigenvalues: np.ndarray
    vectors: np.ndarray
    m_index: np.ndarray
    labels: np.ndarray
    flux: float
    a_mean: float
    reduced_flux: float
    condition_violations: tuple = ()

    @property
    def nus(self):
        return np.sqrt(self.eigenvalues)

    def order_for_label(self, j):
        hits = np.nonzero(self.labels == int(j))[0]
        if hits.size != 1:
            raise KeyError(f"label {j} matched {hits.size} eigenvalues")
        return float(self.nus[hits[0]])

    def eigenfunction(self, i, theta):
        """Values of eigenvector column i at angles theta."""
        th = np.asarray(theta, dtype=float)
        phase = np.exp(1j * np.outer(th.ravel(), self.m_index))
        vals = phase @ self.vectors[:, i] / np.sqrt(_TWO_PI)
        return vals.reshape(th.shape)

    def asymptotic_eigenvalue(self, j):
        """Large-label model a_mean + (j + reduced_flux)^2."""
        j = np.asarray(j, dtype=float)
        return self.a_mean + (j + self.reduced_flux) ** 2

    def asymptotics_residuals(self, j_values):
        """|mu_j - model(j)| * j^2 for each requested label.

        Second-order perturbation theory makes this quantity bounded (for a
        trace a = c cos theta it tends to c^2/8); a growing trend signals a
        mislabeled or under-resolved spectrum.
        """
        out = []
        for j in j_values:
            mu = self.order_for_label(j) ** 2
            out.append(abs(mu - self.asymptotic_eigenvalue(j)) * j * j)
        return np.asarray(out)

    def asymptotics_check(self, j_values, slack=1.05):
        """Boundedness and decay of the large-label residuals.

        Returns a dict with the weighted residuals, their max, and two
        flags: `bounded` (max weighted residual finite) and `decaying`
        (raw residuals |mu_j - model| non-increasing, up to `slack`, over
        the top half of the label range).  `passed` is their conjunction.
        """
        j_values = sorted(int(j) for j in j_values)
        weighted = self.asymptotics_residuals(j_values)
        raw = weighted / np.asarray(j_values, dtype=float) ** 2
        half = len(j_values) // 2
        tail = raw[half:]
        decaying = bool(np.all(tail[1:] <= slack * tail[:-1]))
        max_weighted = float(np.max(weighted))
        return {
            "labels": list(j_values),
            "weighted_residuals": weighted.tolist(),
            "max_weighted_residual": max_weighted,
            "bounded": bool(np.isfinite(max_weighted)),
            "decaying": decaying,
            "passed": bool(np.isfinite(max_weighted)) and decaying,
        }


def solve_angular(config, basis_size=64):
    """Eigenvalues and eigenvectors of the angular operator by Galerkin
    projection on Fourier modes m in [-basis_size, basis_size].

    Matrix elements are exact for band-limited traces:

        H[p, q] = m_q^2 delta_pq + hat(alpha^2)(m_p - m_q)
                  + hat(a)(m_p - m_q) - (m_p + m_q) hat(alpha)(m_p - m_q)

    with hat(f)(n) the n-th Fourier coefficient.  Smooth traces give
    spectral accuracy for eigenvalues well below the basis cutoff.

    A violated sufficient positivity condition is carried on the result
    (`condition_violations`), not raised: the inequality is conservative
    and many admissible traces fail it while the operator stays positive.
    Actual loss of positivity raises ConvergenceError.
    """
    M = int(basis_size)
    if M < 1:
        raise ConfigError("basis_size must be >= 1")
    if 2 * M > config.grid_size // 4:
        raise ConfigError("basis_size exceeds the trusted bandwidth of the "
                          "Fourier grid; enlarge grid_size")
    m = np.arange(-M, M + 1)
    diff = m[:, None] - m[None, :]
    H = (config._hat(config._alpha_sq_hat, diff)
         + config._hat(config._a_hat, diff)
         - (m[:, None] + m[None, :]) * config._hat(config._alpha_hat, diff))
    H[np.diag_indices_from(H)] += m.astype(float) ** 2
    # exact Hermitization kills roundoff asymmetry from the FFT
    H = 0.5 * (H + H.conj().T)
    w, v = np.linalg.eigh(H)
    if w[0] <= 0:
        raise ConvergenceError(
            "angular operator lost positivity (smallest eigenvalue "
            f"{w[0]:.3e}); traces violate the negative part bound",
            value=float(w[0]), bound=0.0)
    m_dom = m[np.argmax(np.abs(v), axis=0)]
    labels = np.floor(config.flux + 0.5).astype(int) - m_dom
    return AngularSpectrum(
        eigenvalues=w,
        vectors=v,
        m_index=m,
        labels=labels,
        flux=config.flux,
        a_mean=config.a_mean,
        reduced_flux=config.reduced_flux,
        condition_violations=tuple(config.violations()),
    )
