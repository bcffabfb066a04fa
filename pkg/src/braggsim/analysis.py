"""Fringe and time-series analysis: harmonic fits, contrast, gravity
conversion, Allan deviation, gradiometer correlation and the closed-form
interferometer-class oracle.

The fringe model is offset + sum_m c_m cos(m*Phi + theta_m), linear in the
cos/sin basis, so the fit is a deterministic least-squares solve. Contrast
is defined on the fitted curve (not raw extrema) to suppress detection-noise
bias. The Allan estimator is the overlapping variant for data efficiency.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .physics import AtomSpecies, path_phase

logger = logging.getLogger(__name__)


class FitRejectedError(RuntimeError):
    """The fringe fit design matrix is rank deficient or the grid too short."""


@dataclass(frozen=True)
class FringeScan:
    """Scanned fringe: phase grid (rad), per-port populations and metadata."""

    phase_grid: np.ndarray
    port_populations: dict[int, np.ndarray]
    normalized: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        grid = np.asarray(self.phase_grid, dtype=float)
        norm = np.asarray(self.normalized, dtype=float)
        object.__setattr__(self, "phase_grid", grid)
        object.__setattr__(self, "normalized", norm)
        if grid.ndim != 1 or len(grid) == 0:
            raise ValueError("phase_grid must be a non-empty 1-d array")
        if len(grid) > 1 and not np.all(np.diff(grid) > 0):
            raise ValueError("phase_grid must be strictly increasing")
        if len(norm) != len(grid):
            raise ValueError("normalized and phase_grid lengths differ")
        if np.any(norm < -1e-9) or np.any(norm > 1 + 1e-9):
            raise ValueError("normalized populations must lie in [0, 1]")
        for port, pops in self.port_populations.items():
            if len(pops) != len(grid):
                raise ValueError(f"port {port} population length differs from grid")


@dataclass(frozen=True)
class HarmonicFit:
    """offset + sum_m c_m cos(m*Phi + theta_m), amplitudes >= 0,
    phases in (-pi, pi]."""

    offset: float
    amplitudes: tuple[float, ...]
    phases: tuple[float, ...]
    residual_rms: float

    def __post_init__(self):
        if len(self.amplitudes) != len(self.phases) or len(self.amplitudes) < 1:
            raise ValueError("need matching non-empty amplitude and phase lists")

    @property
    def n_harmonics(self) -> int:
        return len(self.amplitudes)

    @property
    def dominant_harmonic(self) -> int:
        """1-based index of the largest fitted amplitude."""
        return 1 + int(np.argmax(self.amplitudes))

    def evaluate(self, phi) -> np.ndarray:
        phi = np.asarray(phi, dtype=float)
        out = np.full(phi.shape, self.offset)
        for m, (c, th) in enumerate(zip(self.amplitudes, self.phases), start=1):
            out = out + c * np.cos(m * phi + th)
        return out

    def derivative(self, phi) -> np.ndarray:
        phi = np.asarray(phi, dtype=float)
        out = np.zeros(phi.shape)
        for m, (c, th) in enumerate(zip(self.amplitudes, self.phases), start=1):
            out = out - m * c * np.sin(m * phi + th)
        return out


@dataclass(frozen=True)
class AllanCurve:
    """Overlapping Allan deviation vs averaging time."""

    taus: np.ndarray
    values: np.ndarray
    notices: tuple[str, ...] = ()

    def __post_init__(self):
        taus = np.asarray(self.taus, dtype=float)
        vals = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "taus", taus)
        object.__setattr__(self, "values", vals)
        if len(taus) != len(vals):
            raise ValueError("taus and values lengths differ")
        if len(taus) > 1 and not np.all(np.diff(taus) > 0):
            raise ValueError("taus must be increasing")
        if np.any(vals < 0):
            raise ValueError("Allan deviations must be >= 0")


def fit_harmonics(scan: FringeScan, n_harmonics: int = 3) -> HarmonicFit:
    """Linear least-squares decomposition of the normalized fringe.

    Requires the grid to span at least 1.5 fundamental (2 pi) periods and at
    most 5 harmonics; a rank-deficient design (too few or degenerate points)
    is rejected.
    """
    if not 1 <= n_harmonics <= 5:
        raise ValueError(f"n_harmonics must lie in [1, 5], got {n_harmonics}")
    phi = scan.phase_grid
    y = scan.normalized
    span = phi[-1] - phi[0]
    if span < 1.5 * 2 * math.pi:
        raise FitRejectedError(
            f"grid spans {span:.3f} rad, below 1.5 fringe periods ({3 * math.pi:.3f})"
        )
    cols = [np.ones_like(phi)]
    for m in range(1, n_harmonics + 1):
        cols.append(np.cos(m * phi))
        cols.append(np.sin(m * phi))
    design = np.column_stack(cols)
    if len(phi) < design.shape[1]:
        raise FitRejectedError(
            f"{len(phi)} points cannot constrain {design.shape[1]} parameters"
        )
    coeffs, _, rank, _ = np.linalg.lstsq(design, y, rcond=None)
    if rank < design.shape[1]:
        raise FitRejectedError(f"design matrix rank {rank} < {design.shape[1]}")
    offset = float(coeffs[0])
    amplitudes, phases = [], []
    for m in range(1, n_harmonics + 1):
        a, b = coeffs[2 * m - 1], coeffs[2 * m]
        c = math.hypot(a, b)
        th = math.atan2(-b, a) if c > 0 else 0.0
        if th <= -math.pi:
            th += 2 * math.pi
        amplitudes.append(c)
        phases.append(th)
    residual = y - design @ coeffs
    return HarmonicFit(offset=offset, amplitudes=tuple(amplitudes),
                       phases=tuple(phases),
                       residual_rms=float(np.sqrt(np.mean(residual**2))))


def fringe_contrast(fit: HarmonicFit, samples: int = 2048) -> float:
    """(max - min)/(max + min) of the fitted curve over one 2 pi period.

    A curve dipping below zero (offset smaller than the harmonic sum) is
    clamped at zero and reported, since populations cannot be negative.
    """
    phi = np.linspace(0.0, 2 * math.pi, samples, endpoint=False)
    curve = fit.evaluate(phi)
    hi, lo = float(curve.max()), float(curve.min())
    if lo < 0.0:
        logger.warning("fitted fringe dips to %.3g; clamping to 0 for contrast", lo)
        lo = 0.0
    if hi <= 0.0:
        return 0.0
    return (hi - lo) / (hi + lo)


def phase_to_gravity(delta_phi: float, harmonic: int, k_eff: float,
                     interrogation_time: float) -> float:
    """Convert a fringe phase change to gravity: dg = dphi/(m k_eff T^2)."""
    if harmonic < 1:
        raise ValueError(f"harmonic must be >= 1, got {harmonic}")
    if interrogation_time <= 0:
        raise ValueError(
            f"interrogation_time must be positive, got {interrogation_time}"
        )
    return delta_phi / (harmonic * k_eff * interrogation_time**2)


def allan_deviation(series, shot_period: float, taus=None) -> AllanCurve:
    """Overlapping Allan deviation of a per-shot series.

    ``taus`` defaults to an octave grid from one shot period up to a third
    of the record. Averaging times without at least two independent blocks
    are omitted with a notice.
    """
    y = np.asarray(series, dtype=float)
    n = len(y)
    if n < 4:
        raise ValueError(f"need at least 4 samples, got {n}")
    if shot_period <= 0:
        raise ValueError(f"shot_period must be positive, got {shot_period}")
    if taus is None:
        max_m = n // 3
        ms = []
        m = 1
        while m <= max_m:
            ms.append(m)
            m *= 2
    else:
        ms = sorted({max(1, int(round(t / shot_period))) for t in np.atleast_1d(taus)})

    csum = np.concatenate([[0.0], np.cumsum(y)])
    out_t, out_v, notices = [], [], []
    for m in ms:
        if n < 2 * m:
            notices.append(
                f"tau={m * shot_period:.6g}s omitted: needs {2 * m} samples, have {n}"
            )
            continue
        block = (csum[m:] - csum[:-m]) / m          # overlapping block means
        d = block[m:] - block[:-m]
        out_t.append(m * shot_period)
        out_v.append(math.sqrt(0.5 * float(np.mean(d * d))))
    if not out_t:
        raise ValueError("no averaging time has sufficient data")
    return AllanCurve(taus=np.array(out_t), values=np.array(out_v),
                      notices=tuple(notices))


def gradiometer_correlation(phases_low, phases_up):
    """Z-normalize both phase series and return (z_low, z_up, Pearson r)."""
    a = np.asarray(phases_low, dtype=float)
    b = np.asarray(phases_up, dtype=float)
    if len(a) != len(b):
        raise ValueError("phase series lengths differ")
    if len(a) < 10:
        raise ValueError(f"need at least 10 shots, got {len(a)}")
    sa, sb = np.std(a), np.std(b)
    if sa == 0.0 or sb == 0.0:
        raise ValueError("zero-variance phase series cannot be correlated")
    za = (a - np.mean(a)) / sa
    zb = (b - np.mean(b)) / sb
    r = float(np.mean(za * zb))
    return za, zb, r


@dataclass(frozen=True)
class ClassEnumeration:
    """Trajectories of one interferometer class and their contrast proxy."""

    class_index: int
    interrogation_time: float
    entries: tuple[tuple[int, int, float], ...]   # (a, b, phase)
    contrast_proxy: float


def enumerate_interferometer_class(
    class_index: int,
    a_range,
    interrogation_time: float,
    species: AtomSpecies,
    weights=None,
) -> ClassEnumeration:
    """All trajectories a + b = j in range with their phases.

    The contrast proxy |sum_a w_a e^{i phi_a}| / sum_a w_a predicts where
    the class interferes constructively; weights default to uniform (the
    revival POSITIONS do not depend on them, only the depths do).
    """
    a_vals = [int(a) for a in a_range]
    if len(a_vals) == 0:
        raise ValueError("a_range must be non-empty")
    if weights is None:
        w = np.ones(len(a_vals))
    else:
        w = np.asarray(weights, dtype=float)
        if len(w) != len(a_vals):
            raise ValueError("weights length must match a_range")
        if np.any(w < 0) or w.sum() == 0:
            raise ValueError("weights must be non-negative and not all zero")
    j = class_index
    entries = []
    phases = np.empty(len(a_vals))
    for i, a in enumerate(a_vals):
        ph = path_phase(j, a, interrogation_time, species)
        phases[i] = ph
        entries.append((a, j - a, ph))
    proxy = float(np.abs(np.sum(w * np.exp(1j * phases))) / np.sum(w))
    return ClassEnumeration(class_index=j, interrogation_time=interrogation_time,
                            entries=tuple(entries), contrast_proxy=proxy)


def bin_timeseries(series, bin_size: int):
    """Contiguous non-overlapping bin means with standard errors.

    The incomplete tail is dropped. Bin size 1 gives zero-information
    standard errors, flagged as NaN.
    """
    if bin_size < 1:
        raise ValueError(f"bin_size must be >= 1, got {bin_size}")
    y = np.asarray(series, dtype=float)
    nbins = len(y) // bin_size
    if nbins == 0:
        raise ValueError(f"series of {len(y)} is shorter than one bin ({bin_size})")
    trimmed = y[: nbins * bin_size].reshape(nbins, bin_size)
    means = trimmed.mean(axis=1)
    if bin_size == 1:
        errs = np.full(nbins, np.nan)
    else:
        errs = trimmed.std(axis=1, ddof=1) / math.sqrt(bin_size)
    return means, errs


def fit_revival_period(times, contrasts, period_lo: float, period_hi: float,
                       candidates: int = 2001):
    """Dominant periodicity of a contrast-vs-T curve by least squares.

    For each candidate period the curve is fit linearly with a fundamental
    plus second harmonic; the period minimizing the residual wins. Returns
    (period, first_maximum_time) where the maximum refers to the fitted
    fundamental component.
    """
    t = np.asarray(times, dtype=float)
    y = np.asarray(contrasts, dtype=float)
    if len(t) < 8:
        raise ValueError("need at least 8 points to fit a period")
    best = None
    for period in np.linspace(period_lo, period_hi, candidates):
        w = 2.0 * math.pi / period
        design = np.column_stack([
            np.ones_like(t), np.cos(w * t), np.sin(w * t),
            np.cos(2 * w * t), np.sin(2 * w * t),
        ])
        coeffs, _, _, _ = np.linalg.lstsq(design, y, rcond=None)
        res = float(np.sum((y - design @ coeffs) ** 2))
        if best is None or res < best[0]:
            best = (res, period, coeffs)
    _, period, coeffs = best
    a, b = coeffs[1], coeffs[2]
    # fundamental a*cos(wt) + b*sin(wt) peaks at wt = atan2(b, a)
    t_peak = math.atan2(b, a) / (2.0 * math.pi / period)
    t_peak %= period
    return float(period), float(t_peak)


def fit_harmonic_components(times, values, angular_frequencies,
                            weights=None):
    """Recover amplitudes of known-frequency harmonics from a time series.

    Linear least squares on offset + sum_i (a_i cos w_i t + b_i sin w_i t);
    optional ``weights`` are per-point standard deviations. Returns
    (offset, [(amplitude, phase, amplitude_stderr), ...]).
    """
    t = np.asarray(times, dtype=float)
    y = np.asarray(values, dtype=float)
    ws = np.asarray(angular_frequencies, dtype=float)
    cols = [np.ones_like(t)]
    for w in ws:
        cols.append(np.cos(w * t))
        cols.append(np.sin(w * t))
    design = np.column_stack(cols)
    if weights is not None:
        sig = np.asarray(weights, dtype=float)
        if np.any(sig <= 0):
            raise ValueError("weights (standard deviations) must be positive")
        design = design / sig[:, None]
        y = y / sig
    coeffs, _, rank, _ = np.linalg.lstsq(design, y, rcond=None)
    if rank < design.shape[1]:
        raise FitRejectedError("harmonic recovery design is rank deficient")
    dof = max(len(t) - design.shape[1], 1)
    resid = y - design @ coeffs
    scale = float(np.sum(resid**2)) / dof if weights is None else 1.0
    cov = scale * np.linalg.inv(design.T @ design)
    out = []
    for i in range(len(ws)):
        a, b = coeffs[1 + 2 * i], coeffs[2 + 2 * i]
        amp = math.hypot(a, b)
        phase = math.atan2(-b, a) if amp > 0 else 0.0
        va = cov[1 + 2 * i, 1 + 2 * i]
        vb = cov[2 + 2 * i, 2 + 2 * i]
        if amp > 0:
            se = math.sqrt(max((a * a * va + b * b * vb) / (amp * amp), 0.0))
        else:
            se = math.sqrt(max(0.5 * (va + vb), 0.0))
        out.append((float(amp), float(phase), float(se)))
    return float(coeffs[0]), out


def extract_shot_phases(scan: FringeScan, fit: HarmonicFit,
                        min_slope_fraction: float = 0.3):
    """Per-shot phase residuals from a scanned fringe.

    Each measured point is inverted around its commanded phase through the
    local slope of the fitted curve: delta_i = (p_i - fit(Phi_i))/fit'(Phi_i).
    Points where the slope is below ``min_slope_fraction`` of the maximum
    (fringe extrema, where inversion is ill-conditioned) are masked out.
    Returns (deltas, mask).
    """
    slopes = fit.derivative(scan.phase_grid)
    dense = np.linspace(0, 2 * math.pi, 1024, endpoint=False)
    max_slope = float(np.max(np.abs(fit.derivative(dense))))
    if max_slope == 0.0:
        raise ValueError("flat fitted fringe has no phase sensitivity")
    mask = np.abs(slopes) >= min_slope_fraction * max_slope
    deltas = np.zeros(len(scan.phase_grid))
    residuals = scan.normalized - fit.evaluate(scan.phase_grid)
    deltas[mask] = residuals[mask] / slopes[mask]
    return deltas, mask
