"""Statistics, scan profiles and lump-peak detection on estimator output."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage, stats

from .errors import DegenerateDataError, DomainError


@dataclass(frozen=True)
class EstimateSummary:
    """Mean, sample std, relative error (%) against ``reference`` and count."""

    mean: float
    std: float
    rel_error: float
    n: int
    reference: float = math.nan

    def row(self, scale=1.0):
        return [self.mean * scale, self.std * scale, self.rel_error, self.n]


def summarize(values, reference=math.nan):
    """Summarise repeated estimates; ``std`` is NaN for a single value."""
    v = np.asarray(values, dtype=float).ravel()
    if v.size == 0:
        raise DomainError("cannot summarise an empty set of estimates")
    mu = float(np.mean(v))
    sd = float(np.std(v, ddof=1)) if v.size > 1 else math.nan
    err = 100.0 * abs(mu - reference) / abs(reference) if np.isfinite(reference) else math.nan
    return EstimateSummary(mean=mu, std=sd, rel_error=err, n=int(v.size), reference=float(reference))


def autocorrelation(values, max_lag):
    """Correlation coefficient between the series and its lagged copy.

    ``rho[k]`` is the Pearson coefficient of ``x[:-k]`` and ``x[k:]``, so a
    perfectly alternating series gives exactly -1 at lag 1.
    """
    x = np.asarray(values, dtype=float).ravel()
    if max_lag < 0 or x.size <= max_lag + 1:
        raise DomainError(f"need more than {max_lag + 1} values for lags up to {max_lag}")
    rho = np.empty(max_lag + 1)
    rho[0] = 1.0
    if np.ptp(x) == 0:
        raise DegenerateDataError("correlation is undefined for a constant series")
    for k in range(1, max_lag + 1):
        a, b = x[:-k], x[k:]
        sa, sb = a.std(), b.std()
        if sa == 0 or sb == 0:
            raise DegenerateDataError(f"lag {k}: one of the overlapping segments is constant")
        rho[k] = float(np.mean((a - a.mean()) * (b - b.mean())) / (sa * sb))
    return rho


def moving_average(values, window=30):
    """Trailing mean; element ``j`` averages ``values[j : j + window]``.

    The output is ``window - 1`` shorter than the input and its element
    ``j`` belongs to input index ``j + window - 1``.
    """
    x = np.asarray(values, dtype=float).ravel()
    if window < 1 or x.size < window:
        raise DomainError(f"need at least window={window} values, got {x.size}")
    c = np.concatenate([[0.0], np.cumsum(x)])
    return (c[window:] - c[:-window]) / window


def t_test(a, b):
    """Two-sided Welch (unequal-variance) t-test p-value."""
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.size < 2 or b.size < 2:
        raise DomainError("each group needs at least two values")
    if np.ptp(a) == 0 and np.ptp(b) == 0:
        raise DegenerateDataError("both groups have zero variance")
    if np.array_equal(np.sort(a), np.sort(b)):
        return 1.0
    return float(stats.ttest_ind(a, b, equal_var=False).pvalue)


@dataclass(frozen=True)
class ScanProfile:
    """Estimates along a scan line.

    ``position`` is arc length (m) from ``origin`` along ``direction``.
    """

    position: np.ndarray
    Ef: np.ndarray
    eta: np.ndarray
    origin: tuple = (0.0, 0.0)
    direction: tuple = (1.0, 0.0)

    def __post_init__(self):
        for k in ("position", "Ef", "eta"):
            object.__setattr__(self, k, np.asarray(getattr(self, k), dtype=float))
        if not (self.position.shape == self.Ef.shape == self.eta.shape):
            raise DomainError("profile columns must have equal length")
        if np.any(np.diff(self.position) <= 0):
            raise DomainError("profile positions must be strictly increasing")

    def __len__(self):
        return len(self.position)

    def world(self, position):
        """World ``(x, y)`` of an arc-length position."""
        s = np.asarray(position, dtype=float)
        return self.origin[0] + self.direction[0] * s, self.origin[1] + self.direction[1] * s

    def arc_length(self, x, y):
        """Arc-length coordinate of the projection of ``(x, y)`` on the line."""
        return (x - self.origin[0]) * self.direction[0] + (y - self.origin[1]) * self.direction[1]

    def to_csv(self):
        buf = io.StringIO()
        buf.write("# schema_version=1 kind=scan_profile\n")
        np.savetxt(buf, np.column_stack([self.position, self.Ef, self.eta]), fmt="%.9g",
                   delimiter=",", header="position,Ef,eta", comments="")
        return buf.getvalue()


def scan_profile(trace, stream, period, origin=None):
    """Average an estimate trace over consecutive windows of ``period``
    seconds (one palpation cycle) while the tip is moving.

    Only windows in which the tip travelled count, so the dwell at the
    start is skipped.
    """
    if stream.x is None or stream.y is None:
        raise DomainError("stream has no tip positions; simulate it in-process")
    i = trace.start_index + np.arange(len(trace))
    x, y = np.asarray(stream.x)[i], np.asarray(stream.y)[i]
    ox, oy = origin if origin is not None else (float(stream.x[0]), float(stream.y[0]))
    dx, dy = x[-1] - ox, y[-1] - oy
    norm = math.hypot(dx, dy)
    if norm == 0:
        raise DomainError("the tip never moves along the stream")
    direction = (dx / norm, dy / norm)
    s = (x - ox) * direction[0] + (y - oy) * direction[1]
    bins = np.floor((trace.t - trace.t[0]) / period + 1e-9).astype(int)
    pos, E, eta = [], [], []
    for b in np.unique(bins):
        m = bins == b
        if np.ptp(s[m]) <= 0:
            continue
        p = float(np.mean(s[m]))
        if pos and p <= pos[-1]:
            continue
        pos.append(p)
        E.append(float(np.mean(trace.Ef[m])))
        eta.append(float(np.mean(trace.eta[m])))
    return ScanProfile(np.array(pos), np.array(E), np.array(eta), origin=(ox, oy), direction=direction)


@dataclass(frozen=True)
class Peak:
    position: float
    height: float
    elevation: float


def rolling_median(position, values, window):
    half = window / 2.0
    return np.array([np.median(values[np.abs(position - p) <= half + 1e-12]) for p in position])


def detect_peaks(profile, baseline_window=30e-3, prominence=0.08, reference=None, min_separation=5e-3):
    """Locate elevated regions of ``profile.Ef``.

    A sample is elevated when it exceeds a rolling-median baseline (width
    ``baseline_window``, m) by more than ``prominence * reference``;
    ``reference`` defaults to the median of the profile.  Each connected
    elevated run gives one peak at the centre of its maximum; peaks closer
    than ``min_separation`` merge, keeping the higher.
    """
    pos, E = profile.position, profile.Ef
    if len(pos) < 3 or np.ptp(pos) <= baseline_window:
        raise DomainError(f"profile spans {np.ptp(pos) if len(pos) else 0:.4g} m, "
                          f"not longer than the {baseline_window} m baseline window")
    base = rolling_median(pos, E, baseline_window)
    ref = float(np.median(E)) if reference is None else float(reference)
    labels, n = ndimage.label(E - base > prominence * ref)
    found = []
    for k in range(1, n + 1):
        m = labels == k
        top = E[m].max()
        at_top = m & (E >= top - 1e-9 * abs(top))
        p = float(np.mean(pos[at_top]))
        peak = Peak(position=p, height=float(top), elevation=float(top - base[m][np.argmax(E[m])]))
        if found and p - found[-1].position < min_separation:
            if peak.height > found[-1].height:
                found[-1] = peak
        else:
            found.append(peak)
    return found


def match_peaks(peaks, targets, tolerance):
    """For each target position, whether some peak lies within ``tolerance``."""
    pos = np.array([p.position for p in peaks])
    return [bool(pos.size and np.min(np.abs(pos - t)) <= tolerance) for t in targets]


def format_csv(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def format_table(header, rows, title=None):
    """Aligned plain-text table."""
    cells = [list(map(str, header))] + [[_fmt(v) for v in r] for r in rows]
    widths = [max(len(row[i]) for row in cells) for i in range(len(header))]
    lines = [title] if title else []
    for j, row in enumerate(cells):
        lines.append("  ".join(c.rjust(w) for c, w in zip(row, widths)))
        if j == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        if not np.isfinite(v):
            return "nan"
        return f"{v:.4g}"
    return str(v)
