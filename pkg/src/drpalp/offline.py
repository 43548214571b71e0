"""Batch least-squares identification of contact parameters.

Two problems are covered:

* elasticity from quasi-static loading, where the surface height is a
  second unknown constrained by the force measured where the tip
  crosses it (:func:`fit_elasticity`);
* full viscoelastic fits of Kelvin-Voigt, Hunt-Crossley and DR models
  on load/unload cycles (:func:`fit_load_cycle`).

Every model is linear in its amplitude parameters once the surface height
(and the Hunt-Crossley exponent) is fixed, so fits are an outer 1-D
search around an inner linear least-squares solve.
"""

from __future__ import annotations

import enum
import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .contact import IndenterProfile, MaterialParams, elastic_force, viscous_force
from .errors import ConfigError, ConvergenceError, DomainError, IllPosedError, NoContactError, UnsupportedCalibrationError

RESULT_SCHEMA = 1

COMPRESSION_FACTOR = 1.75
CALIBRATED_ASPECT_RATIO = 2.32


class Model(enum.Enum):
    KV = "kv"
    HC = "hc"
    DR_ELASTIC = "dr_elastic"
    DR_VISCOELASTIC = "dr"


class QuasiStaticWarning(UserWarning):
    """Viscous force may exceed the sensor uncertainty during a quasi-static fit."""


@dataclass(frozen=True)
class FitProblem:
    """Data and settings of one identification.

    Parameters
    ----------
    model : Model
    data : SampleStream
        Only ``z_ee``, ``v_meas`` and ``F_meas`` are used.
    profile : IndenterProfile, optional
        Required by the DR models.
    F_unc : float
        Rated force uncertainty (N); bounds the force at the surface crossing.
    z_surf : float, optional
        Known surface height (m).  ``None`` makes it an unknown.
    z_bounds : tuple, optional
        Search interval for the surface height.  By default it spans the
        end-effector heights whose force lies within ``F_unc``.
    n_bounds : tuple
        Search interval of the Hunt-Crossley exponent.
    eta_max : float
        Prior viscosity bound (Pa s) for the quasi-static check.
    """

    model: Model
    data: object
    profile: IndenterProfile = None
    F_unc: float = 0.05
    nu: float = 0.5
    z_surf: float = None
    z_bounds: tuple = None
    n_bounds: tuple = (1.0, 3.0)
    eta_max: float = 2000.0
    grid: int = 64
    max_iter: int = 200

    def __post_init__(self):
        object.__setattr__(self, "model", Model(self.model))
        if self.data is None or len(self.data) == 0:
            raise DomainError("fit data is empty")
        if not self.F_unc > 0:
            raise ConfigError(f"F_unc must be > 0, got {self.F_unc}")
        if self.model in (Model.DR_ELASTIC, Model.DR_VISCOELASTIC) and self.profile is None:
            raise ConfigError(f"model {self.model.value} needs an indenter profile")
        lo, hi = self.n_bounds
        if not 0 < lo < hi:
            raise ConfigError(f"invalid exponent bounds {self.n_bounds}")
        if self.grid < 3:
            raise ConfigError("grid must hold at least 3 points")


@dataclass
class FitResult:
    """Estimates, surface height (m) and the sum of squared force errors (N**2).

    ``errors`` holds ``e_i = F_est,i - F_meas,i`` for every sample.
    """

    model: Model
    params: dict
    z_surf: float
    residual: float
    errors: np.ndarray = field(repr=False, default=None)
    constraint_active: bool = False

    @property
    def n_samples(self):
        return 0 if self.errors is None else int(len(self.errors))

    def to_dict(self):
        return {"schema_version": RESULT_SCHEMA, "model": self.model.value,
                "params": {k: float(v) for k, v in self.params.items()},
                "z_surf": float(self.z_surf), "residual_N2": float(self.residual),
                "n_samples": self.n_samples, "constraint_active": bool(self.constraint_active)}

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text):
        d = json.loads(text)
        if d.get("schema_version") != RESULT_SCHEMA:
            raise ConfigError(f"unsupported fit result schema {d.get('schema_version')}")
        return cls(model=Model(d["model"]), params=dict(d["params"]), z_surf=d["z_surf"],
                   residual=d["residual_N2"], constraint_active=d.get("constraint_active", False))


def _unit(nu):
    return MaterialParams(E_f=1.0, nu=nu, eta=1.0)


def _basis(model, d, d_dot, profile=None, nu=0.5, n=None):
    """Columns of the force law, linear in the amplitude parameters."""
    contact = d > 0
    dc = np.where(contact, d, 0.0)
    if model is Model.KV:
        return np.column_stack([dc, np.where(contact, d_dot, 0.0)]), ("K", "B")
    if model is Model.HC:
        dn = dc**n
        return np.column_stack([dn, np.where(contact, dn * d_dot, 0.0)]), ("K_c", "B_c")
    unit = _unit(nu)
    g_el = np.asarray(elastic_force(profile, unit, dc), dtype=float)
    if model is Model.DR_ELASTIC:
        return g_el[:, None], ("E_f",)
    g_v = np.asarray(viscous_force(profile, unit, d, d_dot), dtype=float)
    return np.column_stack([g_el, g_v]), ("E_f", "eta")


def reconstruct_force(model, params, d, d_dot, F_meas=None, profile=None, nu=0.5):
    """Force predicted by ``model`` along a penetration history.

    Returns ``(F_est, e)`` with ``e = F_est - F_meas`` (``None`` without
    measurements).  Penetration in m, rate in m/s, parameters in SI.
    """
    model = Model(model)
    d = np.asarray(d, dtype=float)
    d_dot = np.asarray(d_dot, dtype=float)
    if d.shape != d_dot.shape or (F_meas is not None and np.shape(F_meas) != d.shape):
        raise DomainError("penetration, rate and force series must have equal length")
    if model in (Model.DR_ELASTIC, Model.DR_VISCOELASTIC) and profile is None:
        raise ConfigError("DR models need an indenter profile")
    A, names = _basis(model, d, d_dot, profile, nu, params.get("n"))
    theta = np.array([params[k] for k in names], dtype=float)
    F_est = A @ theta
    if F_meas is None:
        return F_est, None
    return F_est, F_est - np.asarray(F_meas, dtype=float)


def _linear_fit(A, F):
    theta, _, rank, _ = np.linalg.lstsq(A, F, rcond=None)
    if rank < A.shape[1]:
        raise IllPosedError(f"design matrix has rank {rank} < {A.shape[1]}; data do not excite every parameter")
    e = A @ theta - F
    return theta, float(e @ e)


def _grid_then_bounded(f, lo, hi, n_grid, max_iter):
    """Minimise a scalar function on ``[lo, hi]``: coarse grid, then a
    bounded Brent search inside the best grid cell."""
    xs = np.linspace(lo, hi, n_grid)
    vals = np.array([f(x) for x in xs])
    if not np.any(np.isfinite(vals)):
        raise ConvergenceError("objective is not finite anywhere on the search interval")
    i = int(np.nanargmin(vals))
    a, b = xs[max(i - 1, 0)], xs[min(i + 1, n_grid - 1)]
    res = minimize_scalar(f, bounds=(a, b), method="bounded",
                          options={"xatol": 1e-12 * max(1.0, abs(hi - lo)), "maxiter": max_iter})
    best_x, best_f = (res.x, res.fun) if res.fun <= vals[i] else (xs[i], vals[i])
    if not res.success:
        raise ConvergenceError(f"bounded search did not converge: {res.message}", best=(best_x, best_f))
    return float(best_x), float(best_f), _at_edge(best_x, lo, hi)


def _at_edge(x, lo, hi):
    tol = 1e-9 * max(1.0, abs(hi - lo))
    return x - lo <= tol or hi - x <= tol


def surface_bracket(data, F_unc):
    """End-effector height interval of the samples with ``|F| <= F_unc``."""
    window = np.abs(np.asarray(data.F_meas)) <= F_unc
    if not np.any(window):
        raise NoContactError(f"no force sample within +/-{F_unc} N; contact onset cannot be located")
    z = np.asarray(data.z_ee)[window]
    return float(z.min()), float(z.max())


def _check_quasi_static(problem):
    # deepest penetration below the onset window at the typical loading rate
    z = np.asarray(problem.data.z_ee, dtype=float)
    onset, _ = surface_bracket(problem.data, problem.F_unc)
    loaded = np.asarray(problem.data.F_meas) > problem.F_unc
    if not np.any(loaded):
        return
    rate = float(np.median(np.abs(np.asarray(problem.data.v_meas)[loaded])))
    bound = viscous_force(problem.profile, MaterialParams(1.0, problem.nu, problem.eta_max),
                          onset - z.min(), rate)
    if bound > problem.F_unc:
        warnings.warn(f"viscous force may reach {bound:.3g} N > F_unc at {rate:.3g} m/s; "
                      "data are not quasi-static", QuasiStaticWarning, stacklevel=3)


def _solve(problem, model, z, n=None):
    d = z - np.asarray(problem.data.z_ee, dtype=float)
    A, names = _basis(model, d, np.asarray(problem.data.v_meas, dtype=float), problem.profile, problem.nu, n)
    return _linear_fit(A, np.asarray(problem.data.F_meas, dtype=float)), names


def _finish(problem, model, z, params, active):
    d = z - np.asarray(problem.data.z_ee, dtype=float)
    _, e = reconstruct_force(model, params, d, np.asarray(problem.data.v_meas, dtype=float),
                             problem.data.F_meas, problem.profile, problem.nu)
    return FitResult(model=model, params=params, z_surf=float(z), residual=float(e @ e),
                     errors=e, constraint_active=bool(active))


def _search_surface(problem, objective):
    if problem.z_surf is not None:
        return float(problem.z_surf), objective(problem.z_surf), False
    lo, hi = problem.z_bounds or surface_bracket(problem.data, problem.F_unc)
    if not hi > lo:
        raise IllPosedError("surface search interval is empty")
    return _grid_then_bounded(objective, lo, hi, problem.grid, problem.max_iter)


def fit_elasticity(problem):
    """Joint least-squares estimate of ``E_f`` and the surface height.

    The surface is searched only over heights where the measured force is
    within ``F_unc``; ``constraint_active`` reports whether the optimum
    sits on the edge of that window.
    """
    if problem.model is not Model.DR_ELASTIC:
        raise ConfigError(f"fit_elasticity needs the dr_elastic model, got {problem.model.value}")
    _check_quasi_static(problem)

    def objective(z):
        try:
            return _solve(problem, Model.DR_ELASTIC, z)[0][1]
        except IllPosedError:
            return math.inf

    z, _, active = _search_surface(problem, objective)
    (theta, _), names = _solve(problem, Model.DR_ELASTIC, z)
    if not theta[0] > 0:
        raise ConvergenceError(f"non-physical modulus {theta[0]:.4g} Pa at the optimum", best=(z, theta[0]))
    return _finish(problem, Model.DR_ELASTIC, z, dict(zip(names, theta)), active)


def _hc_exponent(problem, z):
    lo, hi = problem.n_bounds
    n, val, _ = _grid_then_bounded(lambda n: _solve(problem, Model.HC, z, n)[0][1], lo, hi,
                                   problem.grid, problem.max_iter)
    return n, val


def fit_load_cycle(problem):
    """Fit KV ``(K, B)``, HC ``(K_c, B_c, n)`` or DR ``(E_f, eta)`` to a load cycle.

    Raises
    ------
    IllPosedError
        The data cannot separate the parameters, e.g. a single depth.
    """
    model = problem.model
    if model is Model.DR_ELASTIC:
        return fit_elasticity(problem)
    if model is Model.HC:
        z, _, active = _search_surface(problem, lambda z: _hc_exponent(problem, z)[1])
        n, _ = _hc_exponent(problem, z)
        (theta, _), names = _solve(problem, model, z, n)
        params = dict(zip(names, theta))
        params["n"] = n
    else:
        z, _, active = _search_surface(problem, lambda z: _solve(problem, model, z)[0][1])
        (theta, _), names = _solve(problem, model, z)
        params = dict(zip(names, theta))
    return _finish(problem, model, z, params, active)


def correct_compression_modulus(slope, aspect_ratio=CALIBRATED_ASPECT_RATIO):
    """Convert the stress-strain slope of a bonded compression test to ``E_f``.

    Friction at the plates stiffens a squat cylinder; for a diameter to
    height ratio of 2.32 the apparent slope is 1.75 times the modulus.  No
    other ratio is calibrated.
    """
    _check_aspect(aspect_ratio)
    return slope / COMPRESSION_FACTOR


def compression_stress(E_f, strain, aspect_ratio=CALIBRATED_ASPECT_RATIO):
    """Nominal stress (Pa) of the calibrated compression test at ``strain``."""
    _check_aspect(aspect_ratio)
    return COMPRESSION_FACTOR * E_f * np.asarray(strain, dtype=float)


def _check_aspect(aspect_ratio):
    if not math.isclose(aspect_ratio, CALIBRATED_ASPECT_RATIO, rel_tol=0.0, abs_tol=1e-9):
        raise UnsupportedCalibrationError(
            f"correction factor is calibrated for aspect ratio {CALIBRATED_ASPECT_RATIO} only, got {aspect_ratio}")
