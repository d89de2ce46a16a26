"""Gauss-Legendre panel quadrature helpers.

Everything downstream (radial transforms, the diffractive s-integrals, the
windowed wave kernels) integrates smooth or oscillatory integrands over
finite panels; these helpers centralize node placement so the "at least
8-10 nodes per wavelength" sampling rules live in one place.
"""
from functools import lru_cache

import numpy as np
from scipy.special import roots_legendre


@lru_cache(maxsize=64)
def _gl_rule(n):
    x, w = roots_legendre(n)
    return x, w


def panel_nodes(edges, nodes_per_panel=16):
    """Gauss-Legendre nodes/weights on consecutive panels.

    Parameters
    ----------
    edges : array_like, ascending panel boundaries (len >= 2)
    nodes_per_panel : int

    Returns
    -------
    nodes, weights : 1-D arrays covering all panels in order
    """
    edges = np.asarray(edges, dtype=float)
    if edges.ndim != 1 or edges.size < 2:
        raise ValueError("edges must be a 1-D array with at least two entries")
    if np.any(np.diff(edges) <= 0):
        raise ValueError("edges must be strictly ascending")
    x, w = _gl_rule(nodes_per_panel)
    lo = edges[:-1][:, None]
    hi = edges[1:][:, None]
    nodes = 0.5 * (hi - lo) * x[None, :] + 0.5 * (hi + lo)
    weights = 0.5 * (hi - lo) * np.broadcast_to(w, nodes.shape)
    return nodes.ravel(), weights.ravel()


def uniform_edges(a, b, max_width):
    """Panel edges on [a, b] with width <= max_width (at least one panel)."""
    if b <= a:
        raise ValueError("empty interval")
    n = max(1, int(np.ceil((b - a) / max_width)))
    return np.linspace(a, b, n + 1)


def oscillation_edges(a, b, freq, nodes_per_panel=16, periods_per_panel=2.0,
                      max_width=None):
    """Panel edges sized so each panel spans few oscillation periods.

    With `nodes_per_panel` = 16 and two periods per panel this gives eight
    nodes per wavelength, comfortably past the resolution floor.
    """
    freq = abs(freq)
    width = (b - a) if freq == 0 else periods_per_panel * 2.0 * np.pi / freq
    if max_width is not None:
        width = min(width, max_width)
    return uniform_edges(a, b, width)


def integrate_panels(f, edges, nodes_per_panel=16):
    """Integrate a vectorized callable over the given panels."""
    nodes, weights = panel_nodes(edges, nodes_per_panel)
    return np.sum(weights * f(nodes))


def osc_tail_correction(g, lam, upper, n_terms=3, rel_h=0.02):
    """Integration-by-parts closure for int_upper^inf g(u) e^{i lam u} du.

    `g` must be smooth and decaying (no oscillation of its own); derivatives
    are taken by central differences on the scale rel_h*upper. The returned
    value approximates the full oscillatory tail; its magnitude also serves
    as an error indicator for the truncation at `upper`.
    """
    if lam == 0:
        raise ValueError("oscillation frequency must be nonzero")
    h = rel_h * max(abs(upper), 1.0)
    # derivatives g^(0..n_terms-1) at `upper` by 5-point central differences
    stencil = np.array([-2.0, -1.0, 0.0, 1.0, 2.0]) * h + upper
    vals = np.array([g(u) for u in stencil])
    derivs = [vals[2]]
    if n_terms > 1:
        derivs.append((vals[0] - 8 * vals[1] + 8 * vals[3] - vals[4]) / (12 * h))
    if n_terms > 2:
        derivs.append((-vals[0] + 16 * vals[1] - 30 * vals[2]
                       + 16 * vals[3] - vals[4]) / (12 * h * h))
    phase = np.exp(1j * lam * upper)
    total = 0.0 + 0.0j
    for q, dq in enumerate(derivs[:n_terms]):
        total += (-1) ** (q + 1) * dq / (1j * lam) ** (q + 1)
    return phase * total


def phase_subdivide(edges, phase_of_edge, max_phase=4.0 * np.pi):
    """Split panels so the accumulated phase per panel stays below max_phase.

    `phase_of_edge` maps an edge location to a cumulative phase; panels are
    split uniformly until each carries at most `max_phase` radians.
    """
    edges = np.asarray(edges, dtype=float)
    out = [edges[0]]
    for a, b in zip(edges[:-1], edges[1:]):
        phase = abs(phase_of_edge(b) - phase_of_edge(a))
        k = max(1, int(np.ceil(phase / max_phase)))
        out.extend(np.linspace(a, b, k + 1)[1:].tolist())
    return np.asarray(out)
