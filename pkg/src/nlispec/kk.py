"""Causal link between absorption and refractive index.

For absorption alpha(nu) [cm^-1] on a wavenumber grid [cm^-1] the
dispersion relation gives the index change inside the window:

    n(nu) - 1 = baseline + (1 / 2 pi^2) PV int alpha(nu') / (nu'^2 - nu^2) dnu'

(the prefactor is 1/2pi^2 when everything is expressed in cm^-1; the
same relation with angular frequency carries c/pi).  The integral here
runs over the supplied window only: broadband contributions from outside
it vary slowly across a narrow band and belong to the caller's
`baseline` term.

The principal value is evaluated with the alternating-parity midpoint
rule on a uniform grid: target points take contributions only from
grid points of opposite index parity, each with weight 2h.  The
singular point is thereby skipped symmetrically and the rule converges
at second order in h.
"""

from __future__ import annotations

import numpy as np

_PREFACTOR = 1.0 / (2.0 * np.pi**2)


def _checked_grid(nu_grid_cm) -> tuple[np.ndarray, float]:
    nu = np.asarray(nu_grid_cm, dtype=float)
    if nu.ndim != 1 or nu.size < 3:
        raise ValueError("wavenumber grid must be 1-d with at least 3 points")
    if nu[0] <= 0:
        raise ValueError("wavenumber grid must be positive")
    steps = np.diff(nu)
    h = steps[0]
    if h <= 0 or not np.allclose(steps, h, rtol=1e-8, atol=0.0):
        raise ValueError("wavenumber grid must be uniform and increasing")
    return nu, h


def index_change_weights(nu_grid_cm) -> np.ndarray:
    """Matrix W with (n - 1 - baseline) = W @ alpha on the shared grid.

    Exposed separately so linear uncertainty propagation can reuse it:
    var(dn_i) = sum_j W_ij^2 var(alpha_j) for independent alpha errors.
    """
    nu, h = _checked_grid(nu_grid_cm)
    denom = nu[None, :] ** 2 - nu[:, None] ** 2
    idx = np.arange(nu.size)
    odd = (idx[None, :] - idx[:, None]) % 2 == 1
    w = np.zeros_like(denom)
    w[odd] = _PREFACTOR * 2.0 * h / denom[odd]
    return w


def index_change_from_absorption(alpha_cm, nu_grid_cm, baseline: float = 0.0):
    """Index change n(nu) - 1 implied by alpha(nu) within the window."""
    nu, h = _checked_grid(nu_grid_cm)
    alpha = np.asarray(alpha_cm, dtype=float)
    if alpha.shape != nu.shape:
        raise ValueError(f"alpha shape {alpha.shape} != grid shape {nu.shape}")
    if not np.all(np.isfinite(alpha)):
        raise ValueError("absorption must be finite")
    # same quadrature as index_change_weights, evaluated in row blocks so
    # long grids never materialize an N x N matrix
    nu2 = nu**2
    idx = np.arange(nu.size)
    even = idx % 2 == 0
    out = np.empty_like(alpha)
    for lo in range(0, nu.size, 512):
        rows = slice(lo, min(lo + 512, nu.size))
        denom = nu2[None, :] - nu2[rows, None]
        opp = even[None, :] != even[rows, None]
        contrib = np.where(opp, alpha[None, :], 0.0)
        denom[~opp] = 1.0
        out[rows] = (contrib / denom).sum(axis=1)
    return baseline + _PREFACTOR * 2.0 * h * out
