"""Online estimation of penetration and lumped viscoelastic parameters.

State (millimeter-scaled, force in N)::

    4-state: [d, d_dot, kappa, lam]
    8-state: [d, d_dot, kappa, lam, kappa_dot, lam_dot, kappa_ddot, lam_ddot]

The measured sensor force drives the penetration dynamics of the tip mass
beyond the sensor; the only measurement is the penetration rate.  All
functions accept a leading batch dimension on ``x``/``P``/``alpha`` so many
independent runs on equally long streams can advance in lock-step.

Mass enters in N s**2/mm (``m_I / 1000``) so that accelerations come out
in mm/s**2.
"""

from __future__ import annotations

import enum
import io
import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .contact import UnitSystem, lumped_to_moduli
from .errors import ConfigError, NoContactError

log = logging.getLogger(__name__)

TRACE_SCHEMA = 1


class Variant(enum.Enum):
    EKF4 = "ekf"
    AFEKF4 = "afekf"
    AFUKF8 = "afukf"
    # plain UKF on the expanded model; the no-fading limit of AFUKF8
    UKF8 = "ukf"

    @property
    def n_states(self):
        return 8 if self in (Variant.AFUKF8, Variant.UKF8) else 4

    @property
    def unscented(self):
        return self in (Variant.AFUKF8, Variant.UKF8)

    @property
    def fading(self):
        return self in (Variant.AFEKF4, Variant.AFUKF8)


@dataclass(frozen=True)
class FadingConfig:
    """Innovation threshold (mm/s), fading step and ceiling.

    ``delay`` (s after contact) holds the factor at 1 while the filter
    settles from its rough initial guess: a factor above 1 during that
    transient inflates the weakly observable directions faster than the
    velocity measurement can shrink them, and the filter diverges.
    """

    threshold: float = 1.5
    step: float = 0.01
    alpha_max: float = 1.01
    delay: float = 5.0

    def __post_init__(self):
        if not self.step > 0:
            raise ConfigError("fading step must be > 0")
        if not self.alpha_max >= 1.0:
            raise ConfigError("alpha_max must be >= 1")
        if not self.threshold >= 0:
            raise ConfigError("fading threshold must be >= 0")
        if not self.delay >= 0:
            raise ConfigError("fading delay must be >= 0")


@dataclass(frozen=True)
class FilterConfig:
    """Everything a filter run needs besides the data.

    ``x0`` may leave the velocity entry as ``None``: it is then taken from
    the first in-contact velocity measurement.  ``param_floor`` is the
    per-step random-walk variance added to the kappa and lambda rows of
    the 4-state filters.  ``tip_radius`` and ``nu`` only serve to report
    lumped estimates as SI moduli.
    """

    variant: Variant = Variant.EKF4
    dt: float = 2e-3
    mass: float = 0.2
    sigma_u: float = 0.05
    sigma_vel_sq: float = 0.4489
    x0: tuple = None
    P0: tuple = None
    fading: FadingConfig = field(default_factory=FadingConfig)
    param_floor: float = 1e-8
    ukf_alpha: float = 0.1
    ukf_beta: float = 2.0
    ukf_kappa: float = 0.0
    d_floor: float = 1e-3
    contact_sigmas: float = 3.0
    tip_radius: float = 5e-3
    nu: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        for k in ("dt", "mass", "sigma_u", "sigma_vel_sq", "d_floor", "tip_radius"):
            if not getattr(self, k) > 0:
                raise ConfigError(f"{k} must be > 0, got {getattr(self, k)}")
        n = self.n_states
        if self.P0 is not None:
            if len(self.P0) != n or min(self.P0) <= 0:
                raise ConfigError(f"P0 must hold {n} positive variances")
        if self.x0 is not None and len(self.x0) != n:
            raise ConfigError(f"x0 must hold {n} entries")
        if self.param_floor < 0:
            raise ConfigError("param_floor must be >= 0")

    @property
    def n_states(self):
        return self.variant.n_states

    @property
    def inv_mass(self):
        # mm/s^2 of acceleration per newton
        return 1e3 / self.mass

    def initial_state(self, v0):
        n = self.n_states
        base = [1.0, None, 0.1, 0.01] + [0.0] * (n - 4)
        x0 = list(self.x0) if self.x0 is not None else base
        v0 = np.asarray(v0, dtype=float)
        x = np.empty(v0.shape + (n,))
        for i, v in enumerate(x0):
            x[..., i] = v0 if v is None else v
        P0 = self.P0 if self.P0 is not None else (5.0, 1.0, 1.0, 1.0) + (0.1,) * (n - 4)
        P = np.broadcast_to(np.diag(np.asarray(P0, dtype=float)), v0.shape + (n, n)).copy()
        return FilterState(x=x, P=P, alpha=np.ones(v0.shape))

    def process_noise(self):
        n = self.n_states
        B = np.zeros(n)
        B[0] = self.dt**2 / 2.0 * self.inv_mass
        B[1] = self.dt * self.inv_mass
        Q = np.outer(B, B) * self.sigma_u**2
        if not self.variant.unscented:
            Q[2, 2] += self.param_floor
            Q[3, 3] += self.param_floor
        return Q


@dataclass
class FilterState:
    x: np.ndarray
    P: np.ndarray
    alpha: np.ndarray
    t: float = 0.0


def contact_residual(x, u):
    """Net force on the tip mass: sensor force minus the contact law."""
    d = np.maximum(x[..., 0], 0.0)
    sd = np.sqrt(d)
    return u - x[..., 2] * d * sd - x[..., 3] * sd * x[..., 1]


def transition(x, u, cfg):
    """Discrete model, one step of ``cfg.dt``.  ``x`` is ``(..., n)``."""
    dt = cfg.dt
    r = contact_residual(x, u) * cfg.inv_mass
    out = np.array(x, dtype=float, copy=True)
    out[..., 0] = x[..., 0] + dt * x[..., 1] + dt * dt / 2.0 * r
    out[..., 1] = x[..., 1] + dt * r
    if x.shape[-1] == 8:
        out[..., 2] = x[..., 2] + dt * x[..., 4] + dt * dt / 2.0 * x[..., 6]
        out[..., 3] = x[..., 3] + dt * x[..., 5] + dt * dt / 2.0 * x[..., 7]
        out[..., 4] = x[..., 4] + dt * x[..., 6]
        out[..., 5] = x[..., 5] + dt * x[..., 7]
    return out


def transition_jacobian(x, u, cfg):
    """Analytic Jacobian of :func:`transition`; ``d`` floored at ``cfg.d_floor``."""
    dt = cfg.dt
    n = x.shape[-1]
    d = np.maximum(x[..., 0], cfg.d_floor)
    sd = np.sqrt(d)
    v, k, lam = x[..., 1], x[..., 2], x[..., 3]
    g = np.stack([-1.5 * k * sd - 0.5 * lam * v / sd, -lam * sd, -d * sd, -sd * v], axis=-1)
    g = g * cfg.inv_mass
    J = np.broadcast_to(np.eye(n), x.shape + (n,)).copy()
    J[..., 0, :4] += dt * dt / 2.0 * g
    J[..., 0, 1] += dt
    J[..., 1, :4] += dt * g
    if n == 8:
        for p in (2, 3):
            J[..., p, p + 2] = dt
            J[..., p, p + 4] = dt * dt / 2.0
            J[..., p + 2, p + 4] = dt
    return J


def _symmetrize(P):
    return 0.5 * (P + np.swapaxes(P, -1, -2))


def _ensure_psd(P, floor=1e-15):
    """Symmetrize; repair tiny negative eigenvalues from round-off."""
    P = _symmetrize(P)
    try:
        np.linalg.cholesky(P)
        return P
    except np.linalg.LinAlgError:
        w, V = np.linalg.eigh(P)
        bad = np.any(w < 0)
        if bad:
            log.debug("covariance lost positive semi-definiteness; clipping %s", w.min())
        w = np.maximum(w, floor)
        return _symmetrize(np.einsum("...ij,...j,...kj->...ik", V, w, V))


def _ut_weights(n, cfg):
    a, b, k = cfg.ukf_alpha, cfg.ukf_beta, cfg.ukf_kappa
    lam = a * a * (n + k) - n
    wm = np.full(2 * n + 1, 1.0 / (2.0 * (n + lam)))
    wc = wm.copy()
    wm[0] = lam / (n + lam)
    wc[0] = lam / (n + lam) + (1.0 - a * a + b)
    return n + lam, wm, wc


def _matrix_sqrt(P):
    # lower Cholesky factor; symmetric eigen root when P is only semidefinite
    try:
        return np.linalg.cholesky(P)
    except np.linalg.LinAlgError:
        w, V = np.linalg.eigh(_symmetrize(P))
        return V * np.sqrt(np.maximum(w, 0.0))[..., None, :]


def sigma_points(x, P, cfg):
    n = x.shape[-1]
    c, wm, wc = _ut_weights(n, cfg)
    S = _matrix_sqrt(_ensure_psd(c * P))
    cols = np.swapaxes(S, -1, -2)
    X = np.concatenate([x[..., None, :], x[..., None, :] + cols, x[..., None, :] - cols], axis=-2)
    return X, wm, wc


def predict(state, u, cfg):
    """Propagate one step with sensor force ``u`` (N).

    Covariance goes through the analytic Jacobian (EKF variants) or the
    unscented transform (UKF variants), then is scaled by the current
    fading factor.
    """
    x, P = state.x, state.P
    Q = cfg.process_noise()
    if cfg.variant.unscented:
        X, wm, wc = sigma_points(x, P, cfg)
        Y = transition(X, np.asarray(u, dtype=float)[..., None], cfg)
        xp = np.einsum("k,...ki->...i", wm, Y)
        dY = Y - xp[..., None, :]
        Pp = np.einsum("k,...ki,...kj->...ij", wc, dY, dY) + Q
    else:
        J = transition_jacobian(x, u, cfg)
        xp = transition(x, u, cfg)
        Pp = J @ P @ np.swapaxes(J, -1, -2) + Q
    Pp = Pp * np.asarray(state.alpha, dtype=float)[..., None, None]
    return FilterState(x=xp, P=_ensure_psd(Pp), alpha=state.alpha, t=state.t + cfg.dt)


def update(state, z, cfg):
    """Correct against the measured penetration rate ``z`` (mm/s).

    The measurement is linear (``h(x) = x[1]``), so the same correction
    serves every variant.  Returns the corrected state and the innovation.
    Non-finite measurements leave the state untouched and give a NaN
    innovation.
    """
    x, P = state.x, state.P
    z = np.asarray(z, dtype=float)
    ok = np.isfinite(z)
    if not np.all(ok):
        log.warning("skipping %d non-finite velocity measurement(s)", int(np.size(ok) - np.count_nonzero(ok)))
    R = cfg.sigma_vel_sq
    innov = np.where(ok, z - x[..., 1], np.nan)
    S = P[..., 1, 1] + R
    K = P[..., :, 1] / S[..., None]
    xn = x + K * np.where(ok, innov, 0.0)[..., None]
    n = x.shape[-1]
    A = np.broadcast_to(np.eye(n), P.shape).copy()
    A[..., :, 1] -= K
    Pn = A @ P @ np.swapaxes(A, -1, -2) + R * K[..., :, None] * K[..., None, :]
    xn[..., 0] = np.maximum(xn[..., 0], 0.0)
    xn[..., 2] = np.maximum(xn[..., 2], 0.0)
    xn[..., 3] = np.maximum(xn[..., 3], 0.0)
    xn = np.where(ok[..., None], xn, x)
    Pn = np.where(ok[..., None, None], _ensure_psd(Pn), P)
    return FilterState(x=xn, P=Pn, alpha=state.alpha, t=state.t), innov


def fading_step(alpha, innovation, cfg):
    """Raise the fading factor by one step when the innovation magnitude
    exceeds the threshold, lower it otherwise; clamp to [1, alpha_max].
    A NaN innovation keeps the factor."""
    fc = cfg.fading if isinstance(cfg, FilterConfig) else cfg
    alpha = np.asarray(alpha, dtype=float)
    innovation = np.asarray(innovation, dtype=float)
    up = np.minimum(fc.alpha_max, alpha + fc.step)
    down = np.maximum(1.0, alpha - fc.step)
    with np.errstate(invalid="ignore"):
        out = np.where(np.abs(innovation) > fc.threshold, up, down)
    out = np.where(np.isnan(innovation), alpha, out)
    return float(out) if out.ndim == 0 else out


@dataclass
class EstimateTrace:
    """Per-step filter output from the first in-contact sample onwards."""

    t: np.ndarray
    x: np.ndarray
    P_diag: np.ndarray
    alpha: np.ndarray
    Ef: np.ndarray
    eta: np.ndarray
    variant: Variant
    start_index: int = 0

    def __len__(self):
        return len(self.t)

    def final_mean(self, seconds):
        """Mean of ``(E_f, eta)`` over the last ``seconds`` of the run."""
        sel = self.t >= self.t[-1] - seconds + 1e-12
        return float(np.mean(self.Ef[sel])), float(np.mean(self.eta[sel]))

    @property
    def columns(self):
        n = self.x.shape[1]
        return (["t", "d_hat", "ddot_hat", "kappa_hat", "lambda_hat", "Ef_hat", "eta_hat", "alpha"]
                + [f"P{i}{i}" for i in range(1, n + 1)])

    def to_csv(self, path_or_buf=None):
        buf = io.StringIO()
        buf.write(f"# schema_version={TRACE_SCHEMA} kind=estimate_trace variant={self.variant.value}\n")
        data = np.column_stack([self.t, self.x[:, :4], self.Ef, self.eta, self.alpha, self.P_diag])
        np.savetxt(buf, data, fmt="%.9g", delimiter=",", header=",".join(self.columns), comments="")
        text = buf.getvalue()
        if path_or_buf is None:
            return text
        if hasattr(path_or_buf, "write"):
            path_or_buf.write(text)
        else:
            with open(path_or_buf, "w", newline="\n") as fh:
                fh.write(text)
        return None


def contact_start(F, sigma_u, n_sigmas=3.0):
    """Index of the first force sample above ``n_sigmas`` noise deviations."""
    above = np.flatnonzero(np.asarray(F) > n_sigmas * sigma_u)
    if above.size == 0:
        raise NoContactError("stream never enters contact")
    return int(above[0])


def _check_stream(stream, cfg):
    if abs(stream.dt - cfg.dt) > 1e-9 * cfg.dt:
        raise ConfigError(f"stream period {stream.dt} differs from filter period {cfg.dt}; resample first")


def run(stream, cfg):
    """Filter one aligned :class:`~drpalp.sim.SampleStream`."""
    return run_batch([stream], cfg)[0]


def run_batch(streams, cfg):
    """Filter several equally long aligned streams in lock-step.

    Each stream starts at its own first in-contact sample.  The result is
    identical to filtering each stream on its own.
    """
    if not streams:
        return []
    lengths = {len(s) for s in streams}
    if len(lengths) != 1:
        return [run_batch([s], cfg)[0] for s in streams]
    for s in streams:
        _check_stream(s, cfg)
    u = np.stack([s.F_meas for s in streams])
    z = np.stack([s.v_meas for s in streams]) * 1e3
    start = np.array([contact_start(s.F_meas, cfg.sigma_u, cfg.contact_sigmas) for s in streams])
    xs, Pd, al = _filter_arrays(u, z, start, cfg)
    out = []
    for b, s in enumerate(streams):
        sl = slice(start[b], None)
        Ef, eta = lumped_to_moduli(xs[b, sl, 2], xs[b, sl, 3], cfg.tip_radius, cfg.nu, UnitSystem.MILLIMETER)
        out.append(EstimateTrace(t=np.asarray(s.t[sl], dtype=float), x=xs[b, sl], P_diag=Pd[b, sl],
                                 alpha=al[b, sl], Ef=np.asarray(Ef), eta=np.asarray(eta),
                                 variant=cfg.variant, start_index=int(start[b])))
    return out


def _filter_arrays(u, z, start, cfg):
    B, N = u.shape
    n = cfg.n_states
    xs = np.full((B, N, n), np.nan)
    Pd = np.full((B, N, n), np.nan)
    al = np.full((B, N), np.nan)
    state = cfg.initial_state(z[:, 0])
    for k in range(N):
        init = start == k
        if np.any(init):
            fresh = cfg.initial_state(z[:, k])
            state = _select(init, fresh, state)
        if k > start.min():
            active = k > start
            nxt = predict(state, u[:, k - 1], cfg)
            nxt, innov = update(nxt, z[:, k], cfg)
            if cfg.variant.fading:
                armed = (k - start) * cfg.dt >= cfg.fading.delay - 1e-9
                nxt = replace(nxt, alpha=np.where(armed, fading_step(nxt.alpha, innov, cfg), nxt.alpha))
            state = _select(active, nxt, state)
        live = k >= start
        xs[live, k] = state.x[live]
        Pd[live, k] = np.diagonal(state.P, axis1=-2, axis2=-1)[live]
        al[live, k] = state.alpha[live]
    return xs, Pd, al


def _select(mask, a, b):
    if np.all(mask):
        return a
    return FilterState(x=np.where(mask[:, None], a.x, b.x),
                       P=np.where(mask[:, None, None], a.P, b.P),
                       alpha=np.where(mask, a.alpha, b.alpha), t=a.t)
