"""Normal contact force laws for axisymmetric indenters.

The elastic body is replaced by a one-dimensional bed of independent
spring-damper elements (method of dimensionality reduction).  An indenter
whose 3-D profile is ``z = c_n r**n`` presses the bed with the rescaled
1-D profile ``g(x) = k_n c_n |x|**n``, so closed forms follow from
integrating the element forces over the contact width.

All quantities are SI unless a :class:`UnitSystem` tag says otherwise.
Every force law clamps the penetration at zero: no contact, no force.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, SingularMaterialError, UnsupportedProfileError

DEFAULT_TIP_MASS = 0.2  # kg


class IndenterProfile:
    """Base class of the rigid tip shapes.

    Subclasses provide the contact half-width of the reduced profile at a
    penetration ``d``; the force laws only need that and the elastic
    closed form.
    """

    mass: float

    def contact_half_width(self, d):
        raise NotImplementedError

    def reduced_profile(self, x):
        """1-D profile height ``g(x)`` of the reduced problem."""
        raise NotImplementedError


@dataclass(frozen=True)
class Flat(IndenterProfile):
    """Cylindrical flat punch of half-width ``half_width`` (m)."""

    half_width: float
    mass: float = DEFAULT_TIP_MASS

    def __post_init__(self):
        if not self.half_width > 0:
            raise DomainError(f"flat punch half-width must be > 0, got {self.half_width}")
        _check_mass(self.mass)

    def contact_half_width(self, d):
        return np.where(np.asarray(d) > 0, self.half_width, 0.0)

    def reduced_profile(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(np.abs(x) <= self.half_width, 0.0, np.inf)


@dataclass(frozen=True)
class Sphere(IndenterProfile):
    """Spherical tip of radius ``radius`` (m), parabolic approximation."""

    radius: float
    mass: float = DEFAULT_TIP_MASS

    def __post_init__(self):
        if not self.radius > 0:
            raise DomainError(f"sphere radius must be > 0, got {self.radius}")
        _check_mass(self.mass)

    @property
    def equivalent_radius(self):
        # radius of the circle pressed into the 1-D bed
        return self.radius / 2.0

    def contact_half_width(self, d):
        return np.sqrt(2.0 * self.equivalent_radius * np.maximum(d, 0.0))

    def reduced_profile(self, x):
        x = np.asarray(x, dtype=float)
        return x**2 / (2.0 * self.equivalent_radius)


@dataclass(frozen=True)
class PowerLaw(IndenterProfile):
    """Tip with 3-D profile ``z = c_n r**n``.

    ``c_n`` is in m**(1 - n) so that ``z`` comes out in meters.
    """

    n: float
    c_n: float
    mass: float = DEFAULT_TIP_MASS

    def __post_init__(self):
        if not self.n > 0:
            raise DomainError(f"power-law exponent must be > 0, got {self.n}")
        if not self.c_n > 0:
            raise DomainError(f"shape factor must be > 0, got {self.c_n}")
        _check_mass(self.mass)

    @property
    def reduced_coefficient(self):
        return hess_factor(self.n) * self.c_n

    def contact_half_width(self, d):
        return (np.maximum(d, 0.0) / self.reduced_coefficient) ** (1.0 / self.n)

    def reduced_profile(self, x):
        return self.reduced_coefficient * np.abs(np.asarray(x, dtype=float)) ** self.n


def _check_mass(m):
    if not m > 0:
        raise DomainError(f"indenter mass must be > 0, got {m}")


@dataclass(frozen=True)
class MaterialParams:
    """Linear viscoelastic half-space: modulus (Pa), Poisson ratio, viscosity (Pa s)."""

    E_f: float
    nu: float = 0.5
    eta: float = 0.0

    def __post_init__(self):
        if not self.E_f > 0:
            raise DomainError(f"elastic modulus must be > 0, got {self.E_f}")
        if not 0.0 <= self.nu <= 1.0:
            raise DomainError(f"Poisson ratio must lie in [0, 1], got {self.nu}")
        if not self.eta >= 0:
            raise DomainError(f"viscosity must be >= 0, got {self.eta}")


class UnitSystem(enum.Enum):
    """Length unit of lumped contact parameters.

    ``MILLIMETER`` values give newtons when fed penetration in mm and
    penetration rate in mm/s; they equal the SI values over 1000**1.5.
    """

    SI = "SI"
    MILLIMETER = "mm"


_MM_SCALE = 1000.0**1.5


@dataclass(frozen=True)
class ReducedParams:
    """Lumped elasticity ``kappa`` and viscosity ``lam`` of a spherical contact."""

    kappa: float
    lam: float
    units: UnitSystem = UnitSystem.SI

    def __post_init__(self):
        if not self.kappa > 0:
            raise DomainError(f"kappa must be > 0, got {self.kappa}")
        if not self.lam >= 0:
            raise DomainError(f"lambda must be >= 0, got {self.lam}")

    def to(self, units):
        """Express the same contact in another unit system."""
        units = UnitSystem(units)
        if units is self.units:
            return self
        scale = 1.0 / _MM_SCALE if units is UnitSystem.MILLIMETER else _MM_SCALE
        return ReducedParams(self.kappa * scale, self.lam * scale, units)

    def force(self, d, d_dot):
        """Evaluate ``kappa d**1.5 + lam sqrt(d) d_dot`` in the tagged units."""
        d = np.maximum(np.asarray(d, dtype=float), 0.0)
        return _scalar_out(self.kappa * d**1.5 + self.lam * np.sqrt(d) * np.asarray(d_dot, dtype=float))


def _scalar_out(a):
    a = np.asarray(a)
    return float(a) if a.ndim == 0 else a


def effective_modulus(m):
    """Plane-corrected modulus ``E_f / (1 - nu**2)`` in Pa."""
    if m.nu >= 1.0:
        raise SingularMaterialError("effective modulus is undefined for nu = 1")
    return m.E_f / (1.0 - m.nu**2)


def _damping_density(m):
    # damper coefficient per unit length of the 1-D bed
    if m.nu >= 1.0:
        raise SingularMaterialError("viscous density is undefined for nu = 1")
    return 2.0 * m.eta / (1.0 - m.nu)


def hess_factor(n):
    """Scale ``k_n`` mapping a 3-D power-law profile onto the 1-D bed.

    ``g_n(x) = k_n c_n |x|**n`` with
    ``k_n = sqrt(pi)/2 * n * Gamma(n/2) / Gamma((n + 1)/2)``.
    The recurrence ``k_n = k_{n-2} n / (n - 1)`` reduces ``n`` to (0, 2]
    so that the even exponents come out exactly (``k_2 = 2``, ``k_4 = 8/3``).
    """
    n = float(n)
    if not n > 0:
        raise DomainError(f"exponent must be > 0, got {n}")
    factor = 1.0
    while n > 2.0:
        factor *= n / (n - 1.0)
        n -= 2.0
    if n == 2.0:
        base = 2.0
    elif n == 1.0:
        base = math.pi / 2.0
    else:
        base = math.exp(math.log(n) + 0.5 * math.log(math.pi) - math.log(2.0)
                        + math.lgamma(n / 2.0) - math.lgamma((n + 1.0) / 2.0))
    return base * factor


def elastic_force(profile, m, d):
    """Quasi-static normal force (N) at penetration ``d`` (m).

    Sphere: ``4/3 E* sqrt(R) d**1.5``; flat punch: ``2 a E* d``;
    power law: ``2n/(n+1) E* (k_n c_n)**(-1/n) d**((n+1)/n)``.
    Vectorised over ``d``.
    """
    es = effective_modulus(m)
    d = np.maximum(np.asarray(d, dtype=float), 0.0)
    if isinstance(profile, Sphere):
        f = 4.0 / 3.0 * es * math.sqrt(profile.radius) * d**1.5
    elif isinstance(profile, Flat):
        f = es * 2.0 * profile.half_width * d
    elif isinstance(profile, PowerLaw):
        n = profile.n
        f = 2.0 * n / (n + 1.0) * es * profile.reduced_coefficient ** (-1.0 / n) * d ** ((n + 1.0) / n)
    else:
        raise UnsupportedProfileError(f"unknown profile {type(profile).__name__}")
    return _scalar_out(f)


def viscous_force(profile, m, d, d_dot):
    """Damping part of the reduced-bed force.

    Every element in contact moves at the penetration rate, so the force is
    the damper density times the contact width times ``d_dot``.  For a
    sphere this is ``4/(1 - nu) eta sqrt(R d) d_dot``.
    """
    d = np.asarray(d, dtype=float)
    width = 2.0 * profile.contact_half_width(d)
    f = np.where(d > 0, _damping_density(m) * width * np.asarray(d_dot, dtype=float), 0.0)
    return _scalar_out(f)


def dr_force(profile, m, d, d_dot):
    """Viscoelastic contact force: elastic plus viscous reduced-bed terms."""
    return _scalar_out(np.asarray(elastic_force(profile, m, d)) + viscous_force(profile, m, d, d_dot))


def reduce_params(profile, m, units=UnitSystem.SI):
    """Lumped ``kappa = 4/3 E* sqrt(R)`` and ``lam = 4/(1-nu) eta sqrt(R)``."""
    if not isinstance(profile, Sphere):
        raise UnsupportedProfileError("lumped parameters are defined for spherical tips only")
    root_r = math.sqrt(profile.radius)
    rp = ReducedParams(4.0 / 3.0 * effective_modulus(m) * root_r,
                       4.0 / (1.0 - m.nu) * m.eta * root_r)
    return rp.to(units)


def lumped_to_moduli(kappa, lam, radius, nu=0.5, units=UnitSystem.SI):
    """Vectorised inverse of the lumped parameters: ``(E_f, eta)`` in SI."""
    if nu >= 1.0:
        raise SingularMaterialError("cannot expand lumped parameters for nu = 1")
    scale = _MM_SCALE if UnitSystem(units) is UnitSystem.MILLIMETER else 1.0
    root_r = math.sqrt(radius)
    E = np.asarray(kappa, dtype=float) * scale * 3.0 * (1.0 - nu**2) / (4.0 * root_r)
    eta = np.asarray(lam, dtype=float) * scale * (1.0 - nu) / (4.0 * root_r)
    return _scalar_out(E), _scalar_out(eta)


def expand_params(profile, rp, nu=0.5):
    """Inverse of :func:`reduce_params`: recover ``MaterialParams`` in SI."""
    if not isinstance(profile, Sphere):
        raise UnsupportedProfileError("lumped parameters are defined for spherical tips only")
    E, eta = lumped_to_moduli(rp.kappa, rp.lam, profile.radius, nu, rp.units)
    return MaterialParams(E_f=E, nu=nu, eta=eta)


def kv_force(K, B, d, d_dot):
    """Kelvin-Voigt spring-damper: ``K d + B d_dot`` while in contact."""
    d = np.asarray(d, dtype=float)
    return _scalar_out(np.where(d > 0, K * d + B * np.asarray(d_dot, dtype=float), 0.0))


def hc_force(K_c, B_c, n, d, d_dot):
    """Hunt-Crossley: ``K_c d**n + B_c d**n d_dot`` while in contact."""
    if not n > 0:
        raise DomainError(f"Hunt-Crossley exponent must be > 0, got {n}")
    d = np.asarray(d, dtype=float)
    dn = np.maximum(d, 0.0) ** n
    return _scalar_out(np.where(d > 0, K_c * dn + B_c * dn * np.asarray(d_dot, dtype=float), 0.0))
