"""Independent reference computations used by the tests.

Nothing here calls the closed forms under test: forces come from
quadrature over the spring bed or from a boundary-element solution of the
3-D contact problem, filter steps from high-precision re-evaluation.
"""

import math

import mpmath
import numpy as np
from scipy import integrate, optimize, special


# ---- spring-bed quadrature ---------------------------------------------------

def hess_factor_gamma(n):
    """``k_n`` straight from the gamma-function expression."""
    return math.sqrt(math.pi) / 2.0 * n * special.gamma(n / 2.0) / special.gamma((n + 1.0) / 2.0)


def mdr_profile_transform(f_prime, x):
    """1-D profile ``g(x) = |x| * int_0^|x| f'(r) / sqrt(x^2 - r^2) dr`` by quadrature."""
    x = abs(x)
    # r = x sin(t) removes the endpoint singularity
    val, _ = integrate.quad(lambda t: f_prime(x * math.sin(t)), 0.0, math.pi / 2.0, epsabs=0, epsrel=1e-13, limit=200)
    return x * val


def bed_force(g, E_star, d, a=None):
    """Force of the 1-D elastic bed ``E* int (d - g(x)) dx`` over the contact.

    ``a`` is the contact half-width; found from ``g(a) = d`` when omitted.
    """
    if d <= 0:
        return 0.0
    if a is None:
        hi = 1e-6
        while g(hi) < d:
            hi *= 2.0
        a = optimize.brentq(lambda x: g(x) - d, 0.0, hi, xtol=1e-16, rtol=1e-15)
    val, _ = integrate.quad(lambda x: d - g(x), -a, a, epsabs=0, epsrel=1e-12, limit=200)
    return E_star * val


def sphere_bed_force(R, E_star, d):
    return bed_force(lambda x: x * x / R, E_star, d)


def flat_bed_force(a, E_star, d):
    return bed_force(lambda x: 0.0, E_star, d, a=a)


def power_bed_force(n, c, E_star, d):
    k = hess_factor_gamma(n)
    return bed_force(lambda x: k * c * abs(x) ** n, E_star, d)


def bed_damping_force(width, eta, nu, d_dot):
    """Dampers of density ``2 eta / (1 - nu)`` over the contact width, by quadrature."""
    val, _ = integrate.quad(lambda x: 2.0 * eta / (1.0 - nu) * d_dot, -width / 2.0, width / 2.0)
    return val


# ---- axisymmetric boundary elements ----------------------------------------

def _disk_displacement(r, b):
    """Surface displacement at radius ``r`` of unit pressure on a disk of
    radius ``b`` over a half-space with ``E* = 1``."""
    r = np.asarray(r, dtype=float)
    out = np.empty_like(r)
    inside = r < b
    k = r[inside] / b
    out[inside] = 4.0 * b * special.ellipe(k * k) / math.pi
    o = ~inside
    k = b / r[o]
    out[o] = 4.0 * r[o] / math.pi * (special.ellipe(k * k) - (1.0 - k * k) * special.ellipk(k * k))
    return out


def _bem_load(a, profile, n_rings):
    # F(a, d) = d * F1(a) - F2(a) with uniform-pressure annuli collocated at midpoints
    edges = np.linspace(0.0, a, n_rings + 1)
    mid = 0.5 * (edges[:-1] + edges[1:])
    A = np.empty((n_rings, n_rings))
    for j in range(n_rings):
        outer = _disk_displacement(mid, edges[j + 1])
        inner = _disk_displacement(mid, edges[j]) if edges[j] > 0 else 0.0
        A[:, j] = outer - inner
    area = math.pi * (edges[1:] ** 2 - edges[:-1] ** 2)
    p1 = np.linalg.solve(A, np.ones(n_rings))
    p2 = np.linalg.solve(A, profile(mid))
    return area @ p1, area @ p2


def bem_force(profile, a, n_rings=400, rel_step=1e-4):
    """3-D frictionless contact of a rigid axisymmetric punch, ``E* = 1``.

    The contact radius ``a`` is given; the depth follows from the condition
    that the load is stationary in ``a`` (no edge tension),
    ``d = F2'(a) / F1'(a)``.  Returns ``(d, F)``.
    """
    h = rel_step * a
    F1p, F2p = _bem_load(a + h, profile, n_rings)
    F1m, F2m = _bem_load(a - h, profile, n_rings)
    d = (F2p - F2m) / (F1p - F1m)
    F1, F2 = _bem_load(a, profile, n_rings)
    return d, d * F1 - F2


# ---- filter re-evaluation ---------------------------------------------------

def _step_mp(x, u, dt, mass):
    d = max(x[0], mpmath.mpf(0))
    acc = (u - x[2] * d ** mpmath.mpf(1.5) - x[3] * mpmath.sqrt(d) * x[1]) * mpmath.mpf(1000) / mass
    out = list(x)
    out[0] = x[0] + dt * x[1] + dt ** 2 / 2 * acc
    out[1] = x[1] + dt * acc
    if len(x) == 8:
        out[2] = x[2] + dt * x[4] + dt ** 2 / 2 * x[6]
        out[3] = x[3] + dt * x[5] + dt ** 2 / 2 * x[7]
        out[4] = x[4] + dt * x[6]
        out[5] = x[5] + dt * x[7]
    return out


def transition_mp(x, u, dt, mass, digits=50):
    """One step of the penetration dynamics in ``digits``-digit arithmetic.

    ``x = (d, v, kappa, lam[, kappa_dot, lam_dot, kappa_ddot, lam_ddot])``
    in mm units, ``mass`` in kg.
    """
    with mpmath.workdps(digits):
        x = [mpmath.mpf(float(v)) for v in x]
        out = _step_mp(x, mpmath.mpf(float(u)), mpmath.mpf(float(dt)), mpmath.mpf(float(mass)))
        return [float(v) for v in out]


def increment_jacobian_mp(x, u, dt, mass, h=1e-15, digits=60):
    """Central differences of the step increment ``f(x) - x`` in high precision.

    With ``digits`` well above double precision neither rounding nor the
    O(h^2) truncation reaches the compared digits.  Returns ``J - I``.
    """
    with mpmath.workdps(digits):
        x = [mpmath.mpf(float(v)) for v in x]
        u, dt, mass, h = (mpmath.mpf(float(v)) for v in (u, dt, mass, h))
        n = len(x)
        J = np.empty((n, n))
        for j in range(n):
            xp, xm = list(x), list(x)
            xp[j] += h
            xm[j] -= h
            fp, fm = _step_mp(xp, u, dt, mass), _step_mp(xm, u, dt, mass)
            for i in range(n):
                J[i, j] = float((fp[i] - xp[i] - fm[i] + xm[i]) / (2 * h))
        return J


def central_jacobian(f, x, rel_step=1e-6):
    x = np.asarray(x, dtype=float)
    n = x.size
    J = np.empty((f(x).size, n))
    for i in range(n):
        h = rel_step * max(1.0, abs(x[i]))
        e = np.zeros(n)
        e[i] = h
        J[:, i] = (f(x + e) - f(x - e)) / (2.0 * h)
    return J


def normal_two_sided_p(mean_a, sd_a, n_a, mean_b, sd_b, n_b):
    """Large-sample normal approximation of the two-sided mean-difference p-value."""
    z = abs(mean_a - mean_b) / math.sqrt(sd_a**2 / n_a + sd_b**2 / n_b)
    return math.erfc(z / math.sqrt(2.0))
