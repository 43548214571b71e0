"""Kinematic palpation simulator.

The end effector follows its commanded Cartesian path exactly; the only
randomness lives in the sensor channels.  Force is sampled on the F/T
sensor clock and velocity on the (slower) robot clock, held between robot
ticks, so raw streams need :func:`resample_to_filter_rate` before they are
fed to an estimator.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .contact import MaterialParams, Sphere, elastic_force, reduce_params, viscous_force
from .errors import ConfigError, DomainError
from .phantom import local_fields

STREAM_SCHEMA = 1
STREAM_COLUMNS = ("t", "z_ee", "v_meas", "F_meas", "d_true", "ddot_true", "kappa_true", "lambda_true")

DEFAULT_DT = 2e-3


def _check_positive(**values):
    for k, v in values.items():
        if not v > 0:
            raise ConfigError(f"{k} must be > 0, got {v}")


@dataclass(frozen=True)
class QuasiStaticRamp:
    """Constant-speed loading from ``approach`` above the surface to ``max_depth``."""

    speed: float
    max_depth: float
    approach: float = 1e-3
    x: float = 0.0
    y: float = 0.0
    dt: float = DEFAULT_DT

    def __post_init__(self):
        _check_positive(speed=self.speed, max_depth=self.max_depth, dt=self.dt)

    @property
    def duration(self):
        return (self.approach + self.max_depth) / self.speed

    def kinematics(self, t):
        t = np.asarray(t, dtype=float)
        depth = -self.approach + self.speed * t
        rate = np.full_like(t, self.speed)
        return np.full_like(t, self.x), np.full_like(t, self.y), depth, rate, np.zeros_like(t)


@dataclass(frozen=True)
class LoadCycle:
    """Load to ``max_depth`` and unload back at the same constant speed."""

    speed: float
    max_depth: float
    approach: float = 0.5e-3
    x: float = 0.0
    y: float = 0.0
    dt: float = DEFAULT_DT

    def __post_init__(self):
        _check_positive(speed=self.speed, max_depth=self.max_depth, dt=self.dt)

    @property
    def duration(self):
        return 2.0 * (self.approach + self.max_depth) / self.speed

    def kinematics(self, t):
        t = np.asarray(t, dtype=float)
        half = self.duration / 2.0
        loading = t <= half
        depth = np.where(loading, -self.approach + self.speed * t,
                         self.max_depth - self.speed * (t - half))
        rate = np.where(loading, self.speed, -self.speed)
        return np.full_like(t, self.x), np.full_like(t, self.y), depth, rate, np.zeros_like(t)


def _sinusoid(z0, z_a, omega, t):
    # depth, rate and acceleration of the palpation sinusoid
    w = 2.0 * math.pi * omega
    s, c = np.sin(w * t), np.cos(w * t)
    return z0 + z_a * s, z_a * w * c, -z_a * w * w * s


def _lead_in(z0, z_a, omega, descend):
    # time to reach z0 from the surface at the sinusoid's peak rate
    return z0 / (z_a * 2.0 * math.pi * omega) if descend else 0.0


def _palpation(z0, z_a, omega, lead_in, t):
    """Descent at constant rate for ``lead_in`` seconds, then the sinusoid.

    The descent rate equals the sinusoid's rate at phase zero, so depth
    and rate are continuous at the junction.
    """
    rate = z_a * 2.0 * math.pi * omega
    ts = t - lead_in
    d, v, a = _sinusoid(z0, z_a, omega, np.maximum(ts, 0.0))
    before = ts < 0
    return np.where(before, rate * t, d), np.where(before, rate, v), np.where(before, 0.0, a)


@dataclass(frozen=True)
class SinusoidPoint:
    """Stationary palpation ``d(t) = z0 + z_a sin(2 pi omega (t - t_in))``.

    By default the record starts with the tip already at ``z0``
    (``t_in = 0``).  With ``descend`` the tip starts on the surface and
    moves down to ``z0`` during the lead-in ``t_in``, so the record begins
    at contact onset.  ``duration`` is the whole record, lead-in included.
    """

    z0: float
    z_a: float
    omega: float
    duration: float
    x: float = 0.0
    y: float = 0.0
    dt: float = DEFAULT_DT
    descend: bool = False

    def __post_init__(self):
        _check_positive(z0=self.z0, z_a=self.z_a, omega=self.omega, duration=self.duration, dt=self.dt)
        if self.z_a >= self.z0:
            raise ConfigError(f"z_a={self.z_a} >= z0={self.z0}: the indenter would lose contact")
        if self.duration <= self.lead_in:
            raise ConfigError(f"duration {self.duration} s does not outlast the {self.lead_in:.3g} s descent")

    @property
    def lead_in(self):
        return _lead_in(self.z0, self.z_a, self.omega, self.descend)

    def kinematics(self, t):
        t = np.asarray(t, dtype=float)
        return ((np.full_like(t, self.x), np.full_like(t, self.y))
                + _palpation(self.z0, self.z_a, self.omega, self.lead_in, t))


@dataclass(frozen=True)
class SinusoidScan:
    """Point palpation for ``dwell`` seconds, then the same palpation while
    sliding ``scan_length`` along ``direction`` at ``scan_speed``.

    With ``descend`` the dwell starts after the same descent as
    :class:`SinusoidPoint`.
    """

    z0: float
    z_a: float
    omega: float
    dwell: float
    scan_speed: float
    scan_length: float
    direction: tuple = (1.0, 0.0)
    start: tuple = (0.0, 0.0)
    dt: float = DEFAULT_DT
    descend: bool = False

    def __post_init__(self):
        _check_positive(z0=self.z0, z_a=self.z_a, omega=self.omega, scan_speed=self.scan_speed,
                        scan_length=self.scan_length, dt=self.dt)
        if self.dwell < 0:
            raise ConfigError("dwell must be >= 0")
        if self.z_a >= self.z0:
            raise ConfigError(f"z_a={self.z_a} >= z0={self.z0}: the indenter would lose contact")
        norm = math.hypot(*self.direction)
        if not norm > 0:
            raise ConfigError("scan direction must be a non-zero 2-vector")
        object.__setattr__(self, "direction", (self.direction[0] / norm, self.direction[1] / norm))

    @property
    def lead_in(self):
        return _lead_in(self.z0, self.z_a, self.omega, self.descend)

    @property
    def duration(self):
        return self.lead_in + self.dwell + self.scan_length / self.scan_speed

    def arc_length(self, t):
        """Distance travelled along the scan line at time ``t``."""
        t = np.asarray(t, dtype=float)
        return np.clip(t - self.lead_in - self.dwell, 0.0, None) * self.scan_speed

    def kinematics(self, t):
        t = np.asarray(t, dtype=float)
        s = np.minimum(self.arc_length(t), self.scan_length)
        x = self.start[0] + self.direction[0] * s
        y = self.start[1] + self.direction[1] * s
        return (x, y) + _palpation(self.z0, self.z_a, self.omega, self.lead_in, t)


@dataclass(frozen=True)
class SensorModel:
    """Noise and clock description of the F/T sensor and robot encoders.

    ``sigma_vel_sq`` is in (mm/s)**2.  With ``inertial_load`` the force
    channel also carries the inertia of the tip beyond the sensor
    (``m_I * d_ddot``); by default it reports the contact force only.
    """

    sigma_force: float = 0.05
    sigma_vel_sq: float = 0.4489
    force_rate: float = 1000.0
    robot_rate: float = 500.0
    seed: int = 0
    inertial_load: bool = False

    def __post_init__(self):
        if self.sigma_force < 0 or self.sigma_vel_sq < 0:
            raise ConfigError("noise levels must be >= 0")
        _check_positive(force_rate=self.force_rate, robot_rate=self.robot_rate)

    @classmethod
    def noiseless(cls, **kw):
        return cls(sigma_force=0.0, sigma_vel_sq=0.0, **kw)


@dataclass
class SampleStream:
    """Uniformly sampled sensor records plus hidden ground truth.

    ``v_meas`` and ``ddot_true`` are penetration rates (m/s, positive when
    pushing in).  ``kappa_true``/``lambda_true`` are SI lumped parameters
    at the contact point, NaN for non-spherical tips.
    """

    t: np.ndarray
    z_ee: np.ndarray
    v_meas: np.ndarray
    F_meas: np.ndarray
    d_true: np.ndarray
    ddot_true: np.ndarray
    kappa_true: np.ndarray
    lambda_true: np.ndarray
    force_period: float
    velocity_period: float
    x: np.ndarray = field(default=None, repr=False)
    y: np.ndarray = field(default=None, repr=False)

    def __len__(self):
        return len(self.t)

    @property
    def dt(self):
        return float(self.t[1] - self.t[0]) if len(self.t) > 1 else self.force_period

    def take(self, index):
        """Sub-stream at the given integer indices or slice."""
        cols = {c: getattr(self, c)[index] for c in STREAM_COLUMNS}
        xy = {k: None if getattr(self, k) is None else getattr(self, k)[index] for k in ("x", "y")}
        return replace(self, **cols, **xy)

    def to_csv(self, path_or_buf=None):
        """Write the stream; returns the text when no destination is given."""
        buf = io.StringIO()
        buf.write(f"# schema_version={STREAM_SCHEMA} kind=sample_stream "
                  f"force_period={self.force_period!r} velocity_period={self.velocity_period!r}\n")
        data = np.column_stack([getattr(self, c) for c in STREAM_COLUMNS])
        np.savetxt(buf, data, fmt="%.9g", delimiter=",", header=",".join(STREAM_COLUMNS), comments="")
        text = buf.getvalue()
        if path_or_buf is None:
            return text
        if hasattr(path_or_buf, "write"):
            path_or_buf.write(text)
        else:
            with open(path_or_buf, "w", newline="\n") as fh:
                fh.write(text)
        return None

    @classmethod
    def from_csv(cls, path):
        with open(path) as fh:
            meta = dict(kv.split("=", 1) for kv in fh.readline().lstrip("#").split())
            if int(meta.get("schema_version", -1)) != STREAM_SCHEMA:
                raise ConfigError(f"{path}: unsupported stream schema {meta.get('schema_version')}")
            header = fh.readline().strip().split(",")
            if tuple(header) != STREAM_COLUMNS:
                raise ConfigError(f"{path}: unexpected columns {header}")
            data = np.loadtxt(fh, delimiter=",", ndmin=2)
        cols = {c: data[:, i] for i, c in enumerate(STREAM_COLUMNS)}
        return cls(**cols, force_period=float(meta["force_period"]),
                   velocity_period=float(meta["velocity_period"]))


def simulate(p, tip, traj, sm):
    """Run one palpation of phantom ``p`` with indenter ``tip``.

    Returns a stream on the force clock.  The generator is seeded from
    ``sm.seed`` and draws force noise then velocity noise, so two calls
    with equal arguments give identical streams.
    """
    n = int(math.floor(traj.duration * sm.force_rate + 1e-9)) + 1
    k = np.arange(n)
    t = k / sm.force_rate
    x, y, d, d_dot, d_ddot = traj.kinematics(t)
    if not np.all(p.contains(x, y)):
        raise DomainError("trajectory leaves the phantom footprint")
    if isinstance(traj, (SinusoidPoint, SinusoidScan)) and np.min(d[t >= traj.lead_in]) <= 0:
        raise ConfigError("palpation trajectory loses contact")

    E, eta = local_fields(p, x, y)
    nu = p.matrix.nu
    unit = MaterialParams(E_f=1.0, nu=nu, eta=1.0)
    F_true = E * elastic_force(tip, unit, d) + eta * viscous_force(tip, unit, d, d_dot)
    if sm.inertial_load:
        F_true = F_true + tip.mass * d_ddot * (d > 0)

    if isinstance(tip, Sphere):
        scale = reduce_params(tip, unit)
        kappa, lam = E * scale.kappa, eta * scale.lam
    else:
        kappa = lam = np.full(n, np.nan)

    rng = np.random.default_rng(sm.seed)
    F_noise = rng.normal(0.0, sm.sigma_force, n) if sm.sigma_force > 0 else np.zeros(n)
    # robot ticks: latest encoder sample at or before each force sample
    j = np.floor(k * (sm.robot_rate / sm.force_rate) + 1e-9).astype(int)
    n_robot = int(j[-1]) + 1
    sigma_v = math.sqrt(sm.sigma_vel_sq) * 1e-3
    v_noise = rng.normal(0.0, sigma_v, n_robot) if sigma_v > 0 else np.zeros(n_robot)
    t_robot = np.arange(n_robot) / sm.robot_rate
    _, _, _, rate_robot, _ = traj.kinematics(t_robot)
    v_meas = (rate_robot + v_noise)[j]

    return SampleStream(t=t, z_ee=p.surface_z - d, v_meas=v_meas, F_meas=F_true + F_noise,
                        d_true=d, ddot_true=d_dot, kappa_true=np.asarray(kappa, dtype=float),
                        lambda_true=np.asarray(lam, dtype=float),
                        force_period=1.0 / sm.force_rate, velocity_period=1.0 / sm.robot_rate,
                        x=x, y=y)


def resample_to_filter_rate(s, dt_filter):
    """Align a stream onto the filter clock by zero-order hold.

    Each filter tick takes the latest source sample at or before it; force
    is never interpolated.
    """
    if len(s) == 0:
        raise DomainError("cannot resample an empty stream")
    source = max(s.force_period, s.velocity_period)
    if dt_filter < source * (1.0 - 1e-9):
        raise DomainError(f"filter period {dt_filter} is shorter than the source period {source}")
    step = s.force_period  # sample spacing of the stream
    span = float(s.t[-1] - s.t[0])
    n = int(math.floor(span / dt_filter + 1e-9)) + 1
    idx = np.floor(np.arange(n) * (dt_filter / step) + 1e-9).astype(int)
    idx = np.minimum(idx, len(s) - 1)
    out = s.take(idx)
    out.force_period = out.velocity_period = float(dt_filter)
    return out
