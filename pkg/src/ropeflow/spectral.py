"""Fourier-space diagnostics: radial PSD, the analytic mixture law of the
linear noising path, progression maps, and power-law fits.

Power is normalized per mode as |F|^2 / (H*W), which calibrates unit white
noise to a flat spectrum of height 1.  Frequencies are integer radii in
cycles per image side; the DC mode is its own bin and is excluded from
fits.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PARSEVAL_NORM = "H*W"  # sum(power*count) == H*W * mean(|pixel|^2)

_DEGENERATE_SPAN = 1e-9


def _readonly(a):
    a = np.asarray(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class RadialSpectrum:
    """Radially averaged power spectrum: power[i] at integer radius freq[i]."""

    freq: np.ndarray
    power: np.ndarray
    sample_count: int

    def __post_init__(self):
        freq = _readonly(self.freq)
        power = _readonly(self.power)
        object.__setattr__(self, "freq", freq)
        object.__setattr__(self, "power", power)
        if freq.size != power.size or freq.size < 2:
            raise ValueError("freq/power must be equal-length vectors of at least 2 bins")
        if np.any(np.diff(freq) <= 0):
            raise ValueError("freq must be strictly increasing")
        if np.any(power < 0):
            raise ValueError("power must be nonnegative")
        if self.sample_count < 1:
            raise ValueError("sample_count must be positive")

    @property
    def bins(self):
        return int(self.freq.size)

    def band(self, f_lo, f_hi):
        """Sub-spectrum restricted to f_lo <= freq <= f_hi."""
        mask = (self.freq >= f_lo) & (self.freq <= f_hi)
        if mask.sum() < 2:
            raise ValueError(f"band ({f_lo}, {f_hi}) selects fewer than 2 bins")
        return RadialSpectrum(self.freq[mask], self.power[mask], self.sample_count)


def radial_bin_index(side):
    """Integer-rounded radial bin of every mode of a side x side transform."""
    f = np.fft.fftfreq(side) * side
    return np.rint(np.hypot(f[:, None], f[None, :])).astype(np.intp)


def max_radial_bins(side):
    """Bin count that covers every mode (corners included)."""
    return int(radial_bin_index(side).max()) + 1


def radial_psd(images, bins=None):
    """Batch-averaged radial power spectrum of square images.

    Modes are grouped by integer-rounded radius; `bins` keeps radii
    0..bins-1 (default: up to but excluding the axis Nyquist bin).
    """
    images = np.asarray(images, dtype=np.float64)
    if images.ndim == 2:
        images = images[None]
    if images.ndim != 3:
        raise ValueError("expected a batch of 2-D images")
    if images.shape[0] == 0:
        raise ValueError("empty image batch")
    n, h, w = images.shape
    if h != w:
        raise ValueError(f"analysis window must be square, got {h}x{w}")
    rad = radial_bin_index(h)
    if bins is None:
        bins = h // 2
    if bins < 2:
        raise ValueError("need at least 2 radial bins")
    if bins > rad.max() + 1:
        raise ValueError(f"bins={bins} exceeds the {rad.max() + 1} occupied radii of side {h}")
    spec = np.fft.fft2(images)
    psd2 = (spec.real**2 + spec.imag**2).mean(axis=0) / (h * w)
    mask = rad < bins
    counts = np.bincount(rad[mask], minlength=bins)
    sums = np.bincount(rad[mask], weights=psd2[mask], minlength=bins)
    power = sums / counts
    return RadialSpectrum(np.arange(bins, dtype=np.float64), power, n)


def theoretical_psd(f, t, C, omega):
    """Mean mixture spectrum (1-t)^2 * C / f**omega + t**2.

    The data leg is a power law of scale C and exponent omega; the noise
    leg is flat at 1 (unit white noise).  f must be positive.
    """
    f = np.asarray(f, dtype=np.float64)
    if np.any(f <= 0):
        raise ValueError("frequencies must be positive")
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"time must lie in [0, 1], got {t}")
    if C <= 0:
        raise ValueError("C must be positive")
    out = (1.0 - t) ** 2 * C / f**omega + t**2
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class ProgressionMap:
    """gamma[i, j]: log-PSD progress of freq[j] at times[i], 0 at the data
    endpoint and 1 at the noise endpoint."""

    times: np.ndarray
    freq: np.ndarray
    gamma: np.ndarray
    degenerate: np.ndarray  # per-frequency flag: endpoint span below threshold

    def __post_init__(self):
        for name in ("times", "freq", "gamma"):
            object.__setattr__(self, name, _readonly(getattr(self, name)))
        deg = np.asarray(self.degenerate, dtype=bool)
        deg.setflags(write=False)
        object.__setattr__(self, "degenerate", deg)


def progression_map(spectra):
    """Build the progress-index grid from a {time: RadialSpectrum} mapping.

    Requires both endpoints (t=0 and t=1) and identical frequency bins
    across spectra.  Bins whose endpoint log powers coincide are flagged
    and emitted as zero.
    """
    times = sorted(spectra)
    if 0.0 not in spectra or 1.0 not in spectra:
        raise ValueError("progression map needs spectra at both endpoints t=0 and t=1")
    freq = spectra[times[0]].freq
    for t in times:
        if not np.array_equal(spectra[t].freq, freq):
            raise ValueError("all spectra must share the same frequency bins")
        if np.any(spectra[t].power <= 0):
            raise ValueError(f"nonpositive power at t={t}; log progress undefined")
    logs = np.stack([np.log(spectra[t].power) for t in times])
    s0 = np.log(spectra[0.0].power)
    s1 = np.log(spectra[1.0].power)
    span = s1 - s0
    degenerate = np.abs(span) < _DEGENERATE_SPAN
    safe = np.where(degenerate, 1.0, span)
    gamma = (logs - s0) / safe
    gamma[:, degenerate] = 0.0
    return ProgressionMap(np.asarray(times, float), freq, gamma, degenerate)


def half_progress_times(pmap):
    """Elapsed sampling fraction at which each frequency is half resolved.

    Sampling runs from the noise endpoint (t=1, gamma=1) toward the data
    endpoint (t=0, gamma=0); the returned value per frequency is 1 - t at
    the first crossing of gamma = 1/2 along that direction (0 if the
    column starts below 1/2, 1 if it never drops below).
    """
    order = np.argsort(pmap.times)[::-1]  # t descending: noise -> data
    ts = pmap.times[order]
    gs = pmap.gamma[order]
    out = np.empty(pmap.freq.size)
    for j in range(pmap.freq.size):
        col = gs[:, j]
        t_cross = None
        for k in range(1, ts.size):
            if col[k - 1] >= 0.5 > col[k]:
                frac = (col[k - 1] - 0.5) / (col[k - 1] - col[k])
                t_cross = ts[k - 1] + frac * (ts[k] - ts[k - 1])
                break
        if t_cross is None:
            t_cross = ts[0] if np.all(col < 0.5) else ts[-1]
        out[j] = 1.0 - t_cross
    return out


@dataclass(frozen=True)
class PowerLawFit:
    """Least-squares line in (log f, log power): power ~ C / f**omega."""

    C: float
    omega: float
    fit_band: tuple[float, float]
    residual: float


def fit_power_law(spectrum, band):
    """Fit C/f**omega over the given (f_lo, f_hi) frequency band."""
    f_lo, f_hi = band
    mask = (spectrum.freq >= f_lo) & (spectrum.freq <= f_hi) & (spectrum.freq > 0)
    if mask.sum() < 4:
        raise ValueError(f"band {band} selects {int(mask.sum())} bins; need at least 4")
    p = spectrum.power[mask]
    if np.any(p <= 0):
        raise ValueError("nonpositive power inside the fit band")
    lf = np.log(spectrum.freq[mask])
    lp = np.log(p)
    slope, intercept = np.polyfit(lf, lp, 1)
    resid = lp - (intercept + slope * lf)
    return PowerLawFit(
        C=float(np.exp(intercept)),
        omega=float(-slope),
        fit_band=(float(f_lo), float(f_hi)),
        residual=float(np.sqrt(np.mean(resid**2))),
    )
