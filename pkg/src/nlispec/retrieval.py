"""Inversion of measured maps back to gas properties.

A sample map and a reference map (same interferometer, evacuated gap)
are processed row by row, i.e. one signal wavelength at a time:

  1. estimate the fringe amplitude tau and fringe phase of each row,
  2. reference the sample against the vacuum row: V = tau_s / tau_r,
     dphi = phase_s - phase_r, cancelling shared systematics,
  3. invert  alpha = -ln(V) / L_m  and
             n_idler - n_visible = -dphi lambda_i / (2 pi L_m).

Two per-row estimators are available.  The model engine projects the
row onto the known vacuum fringe pattern (linear least squares on the
basis {E, E cos phi, E sin phi} with E the sinc^2 envelope), then
polishes amplitude, contrast and phase with a Levenberg-Marquardt fit
that models the slight steepening of the phase shift off axis
(factor 1/sqrt(1 - (q / k_i)^2)).  It is exact on noiseless model data.
The extrema engine is model-free: it flattens the row with a low-order
polynomial envelope and reads the contrast from quadratically refined
local extrema.  It retrieves absorption only (no phase) and serves as
an independent cross-check on the model route.

Because both rows of a pair are fitted identically, estimator bias is
common mode: it divides out of V and subtracts out of dphi.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import t as student_t

from .errors import AxisMismatchError, NegativeAbsorptionError
from .gas import GasState
from .interferometer import (
    InterferometerGeometry,
    crystal_phase_mismatch,
    gap_phase,
    idler_wavelength_nm,
)
from .mapio import IntensityMap, require_same_axes

# ------------------------------------------------------------ fitting


@dataclass(frozen=True)
class FitResult:
    """Least-squares solution with curvature-based uncertainties."""

    params: np.ndarray
    covariance: np.ndarray
    stderr: np.ndarray
    conf95: np.ndarray
    cost: float
    n_iterations: int
    converged: bool
    residual: np.ndarray = field(repr=False)


def _jacobian(residual_fn, x, scales):
    r0 = np.asarray(residual_fn(x), dtype=float)
    jac = np.empty((r0.size, x.size))
    for k in range(x.size):
        h = 1e-6 * scales[k]
        up, down = x.copy(), x.copy()
        up[k] += h
        down[k] -= h
        jac[:, k] = (np.asarray(residual_fn(up), dtype=float)
                     - np.asarray(residual_fn(down), dtype=float)) / (2.0 * h)
    return jac


def levenberg_marquardt(residual_fn, x0, *, scales=None, xtol=1e-8,
                        ftol=1e-10, max_iterations=200,
                        damping0=1e-3) -> FitResult:
    """Minimize sum(residual_fn(x)^2) with Marquardt-scaled damping.

    `scales` sets the characteristic size of each parameter (finite
    difference steps and the convergence test are relative to it);
    defaults to max(|x0|, 1) per component.
    """
    x = np.asarray(x0, dtype=float).copy()
    if x.ndim != 1:
        raise ValueError("x0 must be 1-d")
    if scales is None:
        scales = np.maximum(np.abs(x), 1.0)
    scales = np.asarray(scales, dtype=float)
    if scales.shape != x.shape or np.any(scales <= 0):
        raise ValueError("scales must be positive, one per parameter")

    r = np.asarray(residual_fn(x), dtype=float)
    cost = float(r @ r)
    lam = damping0
    converged = False
    iteration = 0
    while iteration < max_iterations and not converged:
        iteration += 1
        jac = _jacobian(residual_fn, x, scales)
        hess = jac.T @ jac
        grad = jac.T @ r
        diag = np.maximum(np.diag(hess), 1e-300)
        accepted = False
        while lam <= 1e12:
            try:
                step = np.linalg.solve(hess + lam * np.diag(diag), -grad)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            r_try = np.asarray(residual_fn(x + step), dtype=float)
            cost_try = float(r_try @ r_try)
            if cost_try <= cost:
                accepted = True
                break
            lam *= 10.0
        if not accepted:
            break  # damping exhausted: stuck
        x = x + step
        drop = cost - cost_try
        r, cost = r_try, cost_try
        lam = max(lam / 10.0, 1e-12)
        if np.all(np.abs(step) <= xtol * scales):
            converged = True
        if drop <= ftol * max(cost, 1e-300):
            converged = True

    jac = _jacobian(residual_fn, x, scales)
    hess = jac.T @ jac
    dof = r.size - x.size
    s2 = cost / dof if dof > 0 else 0.0
    try:
        cov = np.linalg.inv(hess) * s2
    except np.linalg.LinAlgError:
        cov = np.linalg.pinv(hess) * s2
    stderr = np.sqrt(np.maximum(np.diag(cov), 0.0))
    if dof > 0:
        conf95 = float(student_t.ppf(0.975, dof)) * stderr
    else:
        conf95 = np.full_like(stderr, math.nan)
    return FitResult(params=x, covariance=cov, stderr=stderr,
                     conf95=conf95, cost=cost,
                     n_iterations=iteration, converged=converged, residual=r)


# ------------------------------------------------------------ inversions

def absorption_from_visibility(visibility, gap_length_cm: float,
                               on_negative: str = "raise"):
    """alpha [cm^-1] from referenced visibility V = exp(-alpha L_m).

    V > 1 would mean negative absorption; `on_negative` picks the
    policy: "raise", "clip" (to zero) or "keep" (propagate the negative
    value, appropriate for noisy ensembles where it averages out).
    """
    if gap_length_cm <= 0:
        raise ValueError("non-positive gap length")
    if on_negative not in ("raise", "clip", "keep"):
        raise ValueError(f"unknown negative-absorption policy {on_negative!r}")
    v = np.asarray(visibility, dtype=float)
    if np.any(v <= 0):
        raise ValueError("visibility must be positive")
    alpha = -np.log(v) / gap_length_cm
    if np.any(v > 1.0):
        if on_negative == "raise":
            worst = float(alpha.min())
            raise NegativeAbsorptionError(worst)
        if on_negative == "clip":
            alpha = np.maximum(alpha, 0.0)
    return float(alpha) if np.isscalar(visibility) else alpha


def index_offset_from_phase(phase_shift_rad, idler_wavelength_nm_,
                            gap_length_cm: float):
    """(n_idler - n_visible) from the referenced fringe phase shift."""
    if gap_length_cm <= 0:
        raise ValueError("non-positive gap length")
    lam_cm = np.asarray(idler_wavelength_nm_, dtype=float) * 1e-7
    out = -np.asarray(phase_shift_rad, dtype=float) * lam_cm / (
        2.0 * math.pi * gap_length_cm
    )
    return float(out) if np.isscalar(phase_shift_rad) else out


# ------------------------------------------------------------ row estimators

@dataclass(frozen=True)
class RowEstimate:
    amplitude: float
    contrast: float          # fringe amplitude tau of this row
    phase_rad: float         # fringe phase against the model pattern
    sigma_contrast: float
    sigma_phase: float


def _linear_row_fit(row, envelope, cos_phi, sin_phi):
    design = np.column_stack((envelope, envelope * cos_phi, envelope * sin_phi))
    coef, *_ = np.linalg.lstsq(design, row, rcond=None)
    a0, ac, as_ = coef
    if a0 <= 0:
        raise ValueError("row has non-positive mean amplitude; not a fringe row")
    return a0, math.hypot(ac, as_) / a0, math.atan2(-as_, ac)


def fit_row_model(row, envelope, phase, steepening=None, *,
                  polish: bool = True) -> RowEstimate:
    """Fringe parameters of one row against a known vacuum pattern.

    `phase` and `envelope` come from the forward model of the empty
    interferometer; `steepening` is the off-axis phase-shift multiplier
    (1 on axis), used only by the polish stage.
    """
    row = np.asarray(row, dtype=float)
    cos_phi, sin_phi = np.cos(phase), np.sin(phase)
    amp, tau, dphi = _linear_row_fit(row, envelope, cos_phi, sin_phi)
    if not polish:
        return RowEstimate(amp, tau, dphi, math.nan, math.nan)
    m = np.ones_like(row) if steepening is None else steepening

    def residual(p):
        return p[0] * envelope * (1.0 + p[1] * np.cos(phase + p[2] * m)) - row

    fit = levenberg_marquardt(
        residual, np.array([amp, tau, dphi]),
        scales=np.array([max(amp, 1e-12), 1.0, 1.0]),
    )
    amp, tau, dphi = fit.params
    return RowEstimate(amp, tau, dphi, fit.stderr[1], fit.stderr[2])


def refine_extrema(values):
    """Quadratically refined interior extrema of a sampled curve.

    Returns (positions, heights, is_maximum); positions are fractional
    sample indices.  Plateaus are skipped rather than double counted.
    """
    y = np.asarray(values, dtype=float)
    pos, height, kind = [], [], []
    for i in range(1, y.size - 1):
        if y[i] > y[i - 1] and y[i] >= y[i + 1]:
            is_max = True
        elif y[i] < y[i - 1] and y[i] <= y[i + 1]:
            is_max = False
        else:
            continue
        denom = y[i - 1] - 2.0 * y[i] + y[i + 1]
        shift = 0.0 if denom == 0 else 0.5 * (y[i - 1] - y[i + 1]) / denom
        pos.append(i + shift)
        height.append(y[i] - 0.25 * (y[i - 1] - y[i + 1]) * shift)
        kind.append(is_max)
    return np.array(pos), np.array(height), np.array(kind, dtype=bool)


def fit_row_extrema(row, *, envelope_degree: int = 4,
                    min_fringes: int = 8) -> RowEstimate:
    """Model-free contrast of one row (no phase information).

    Divides out a fitted polynomial envelope, then averages the local
    contrast of adjacent refined extrema.  Needs at least `min_fringes`
    full fringes to separate envelope from fringe structure.
    """
    row = np.asarray(row, dtype=float)
    x = np.linspace(-1.0, 1.0, row.size)
    env = np.polynomial.polynomial.polyval(
        x, np.polynomial.polynomial.polyfit(x, row, envelope_degree)
    )
    if np.any(env <= 0):
        raise ValueError("polynomial envelope is not positive; row too dim")
    flat = row / env
    pos, height, is_max = refine_extrema(flat)
    n_fringes = min(int(is_max.sum()), int((~is_max).sum()))
    if n_fringes < min_fringes:
        raise ValueError(
            f"only {n_fringes} fringes resolved, need >= {min_fringes}"
        )
    contrasts = []
    for j in range(len(pos) - 1):
        if is_max[j] == is_max[j + 1]:
            continue  # noise-induced repeat, skip the pair
        hi, lo = ((height[j], height[j + 1]) if is_max[j]
                  else (height[j + 1], height[j]))
        if hi + lo > 0:
            contrasts.append((hi - lo) / (hi + lo))
    contrasts = np.asarray(contrasts)
    # median, not mean: pairs straddling the stationary-phase centre of
    # the pattern produce wild outliers
    centre = float(np.median(contrasts))
    if contrasts.size > 1:
        mad = float(np.median(np.abs(contrasts - centre)))
        sigma = 1.4826 * mad / math.sqrt(contrasts.size)
    else:
        sigma = math.nan
    return RowEstimate(float(env.mean()), centre, math.nan,
                       float(sigma), math.nan)


# ------------------------------------------------------------ map retrieval

@dataclass(frozen=True)
class RetrievalResult:
    """Per-wavelength gas properties pulled out of a map pair."""

    wavelength_nm: np.ndarray
    idler_wavelength_nm: np.ndarray
    idler_nu_cm: np.ndarray
    visibility: np.ndarray
    alpha_cm: np.ndarray
    alpha_sigma_cm: np.ndarray
    phase_shift_rad: np.ndarray
    index_offset: np.ndarray
    index_offset_sigma: np.ndarray
    rows: np.ndarray
    meta: dict = field(default_factory=dict)


def _flat_state(visible_index: float) -> GasState:
    """Dispersionless gas with the given visible index everywhere."""
    if visible_index == 1.0:
        return GasState.vacuum()
    from .dispersion import GasIndexModel
    model = GasIndexModel(n0=visible_index, p0_torr=760.0, t0_k=300.0)
    return GasState(p_torr=760.0, t_k=300.0, visible=model)


def _model_pattern(geom: InterferometerGeometry, axes,
                   visible_index: float = 1.0):
    """Template phase, envelope and phase-shift steepening per row.

    The template puts all three waves at the known visible-band index
    of the medium in the gap, so the fitted phase parameter measures
    purely the idler index offset from that baseline.
    """
    delta = crystal_phase_mismatch(geom, axes.wavelength_nm, axes.angle_rad)
    delta_m = gap_phase(geom, _flat_state(visible_index), axes.wavelength_nm,
                        axes.angle_rad)
    envelope = np.sinc(delta / (2.0 * math.pi)) ** 2
    lam_i = idler_wavelength_nm(geom.pump_wavelength_nm, axes.wavelength_nm)
    q_over_ki = (np.sin(axes.angle_rad)[None, :]
                 * (lam_i / axes.wavelength_nm)[:, None])
    steepening = 1.0 / np.sqrt(1.0 - q_over_ki**2)
    return delta + delta_m, envelope, steepening


def retrieve(sample: IntensityMap, reference: IntensityMap,
             geom: InterferometerGeometry, *, engine: str = "model",
             rows=None, polish: bool = True, on_negative: str = "keep",
             sample_visible_index: float = 1.0,
             reference_visible_index: float = 1.0) -> RetrievalResult:
    """Recover alpha and the idler index offset per signal wavelength.

    `reference` must be recorded with an evacuated gap on identical
    axes.  `rows` selects a subset of wavelength rows (indices); the
    default processes all of them.  The extrema engine yields only
    visibility and absorption (phase columns are NaN).

    The visible-band index of whatever fills the gap is assumed known
    (it only nudges the fringe template); pass it per map so the
    fitted phase difference is carried by the idler alone.  The
    returned index offset is idler index minus sample visible index.
    """
    require_same_axes(sample, reference, "sample and reference")
    if engine not in ("model", "extrema"):
        raise ValueError(f"unknown engine {engine!r}")
    axes = sample.axes
    if rows is None:
        row_idx = np.arange(axes.shape[0])
    else:
        row_idx = np.atleast_1d(np.asarray(rows, dtype=int))
        if np.any(row_idx < 0) or np.any(row_idx >= axes.shape[0]):
            raise ValueError("row index out of range")
    lam_s = axes.wavelength_nm[row_idx]
    lam_i = idler_wavelength_nm(geom.pump_wavelength_nm, lam_s)

    if engine == "model":
        phase_s, env_all, steep_all = _model_pattern(
            geom, axes, sample_visible_index)
        if reference_visible_index == sample_visible_index:
            phase_r = phase_s
        else:
            phase_r, _, _ = _model_pattern(
                geom, axes, reference_visible_index)

    n = row_idx.size
    vis = np.empty(n)
    vis_sigma = np.empty(n)
    dphi = np.full(n, math.nan)
    dphi_sigma = np.full(n, math.nan)
    for out_i, i in enumerate(row_idx):
        if engine == "model":
            est_s = fit_row_model(sample.intensity[i], env_all[i],
                                  phase_s[i], steep_all[i], polish=polish)
            est_r = fit_row_model(reference.intensity[i], env_all[i],
                                  phase_r[i], steep_all[i], polish=polish)
            dphi[out_i] = est_s.phase_rad - est_r.phase_rad
            if polish:
                dphi_sigma[out_i] = math.hypot(est_s.sigma_phase,
                                               est_r.sigma_phase)
        else:
            est_s = fit_row_extrema(sample.intensity[i])
            est_r = fit_row_extrema(reference.intensity[i])
        vis[out_i] = est_s.contrast / est_r.contrast
        rel_s = (est_s.sigma_contrast / est_s.contrast
                 if est_s.contrast else math.nan)
        rel_r = (est_r.sigma_contrast / est_r.contrast
                 if est_r.contrast else math.nan)
        vis_sigma[out_i] = vis[out_i] * math.hypot(rel_s, rel_r)

    alpha = absorption_from_visibility(vis, geom.gap_length_cm,
                                       on_negative=on_negative)
    alpha_sigma = vis_sigma / (vis * geom.gap_length_cm)
    offset = index_offset_from_phase(dphi, lam_i, geom.gap_length_cm)
    offset_sigma = (lam_i * 1e-7) / (2.0 * math.pi * geom.gap_length_cm) \
        * dphi_sigma
    meta = {"engine": engine, "polish": bool(polish),
            "gap_length_cm": geom.gap_length_cm,
            "sample_visible_index": sample_visible_index,
            "reference_visible_index": reference_visible_index,
            "sample_meta": sample.meta, "reference_meta": reference.meta}
    from .gas import nu_cm_from_lambda_nm
    return RetrievalResult(
        wavelength_nm=lam_s, idler_wavelength_nm=lam_i,
        idler_nu_cm=nu_cm_from_lambda_nm(lam_i), visibility=vis,
        alpha_cm=np.atleast_1d(alpha), alpha_sigma_cm=alpha_sigma,
        phase_shift_rad=dphi, index_offset=np.atleast_1d(offset),
        index_offset_sigma=offset_sigma, rows=row_idx, meta=meta,
    )


_RESULT_MAGIC = "# nlispec retrieval 1"
_RESULT_COLUMNS = ("row", "wavelength_nm", "idler_wavelength_nm",
                   "idler_nu_cm", "visibility", "alpha_cm", "alpha_sigma_cm",
                   "phase_shift_rad", "index_offset", "index_offset_sigma")


def save_result_csv(path, result: RetrievalResult) -> None:
    """Write a retrieval result as a self-describing CSV table."""
    import json

    from .mapio import _atomic_write_bytes

    cols = [result.rows.astype(float)] + [
        np.asarray(getattr(result, name), dtype=float)
        for name in _RESULT_COLUMNS[1:]
    ]
    lines = [_RESULT_MAGIC,
             "# meta: " + json.dumps(result.meta, sort_keys=True),
             ",".join(_RESULT_COLUMNS)]
    for values in zip(*cols):
        lines.append(",".join("%.17g" % v for v in values))
    _atomic_write_bytes(path, ("\n".join(lines) + "\n").encode("utf-8"))


def load_result_csv(path) -> RetrievalResult:
    """Read back a table written by save_result_csv."""
    import json

    from .errors import MapFormatError

    with open(path, encoding="utf-8") as fh:
        text = fh.read().splitlines()
    if not text or text[0].strip() != _RESULT_MAGIC:
        raise MapFormatError(f"{path}: not a retrieval result table")
    meta = {}
    body_start = 1
    for i, line in enumerate(text[1:], start=1):
        if line.startswith("# meta: "):
            meta = json.loads(line[len("# meta: "):])
        elif not line.startswith("#"):
            body_start = i
            break
    header = tuple(text[body_start].strip().split(","))
    if header != _RESULT_COLUMNS:
        raise MapFormatError(f"{path}: unexpected column header")
    try:
        table = np.array([[float(cell) for cell in line.split(",")]
                          for line in text[body_start + 1:] if line.strip()])
    except ValueError as exc:
        raise MapFormatError(f"{path}: bad cell ({exc})") from None
    if table.ndim != 2 or table.shape[1] != len(_RESULT_COLUMNS):
        raise MapFormatError(f"{path}: malformed table body")
    named = dict(zip(_RESULT_COLUMNS, table.T))
    return RetrievalResult(
        wavelength_nm=named["wavelength_nm"],
        idler_wavelength_nm=named["idler_wavelength_nm"],
        idler_nu_cm=named["idler_nu_cm"],
        visibility=named["visibility"],
        alpha_cm=named["alpha_cm"],
        alpha_sigma_cm=named["alpha_sigma_cm"],
        phase_shift_rad=named["phase_shift_rad"],
        index_offset=named["index_offset"],
        index_offset_sigma=named["index_offset_sigma"],
        rows=named["row"].astype(int),
        meta=meta,
    )
