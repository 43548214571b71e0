"""Synthetic silicone-like specimens with known material fields.

A phantom is a cylinder centred on the world z axis.  Embedded stiffer
intrusions do not get a subsurface mechanics model; instead they raise an
*effective surface* modulus and viscosity seen by a tip pressing at
``(x, y)``.  The weight of an intrusion is a smoothstep of the horizontal
distance between the vertical line through ``(x, y)`` and the intrusion
body, falling from 1 (line touches the body) to 0 at ``blend_length``.

Preset intrusion materials are effective values: they are the apex
elevations a probe measures, not the bulk modulus of the inclusion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .contact import MaterialParams
from .errors import ConfigError, DomainError

DEFAULT_BLEND = 3e-3  # m


def smoothstep(s):
    s = np.clip(s, 0.0, 1.0)
    return s * s * (3.0 - 2.0 * s)


@dataclass(frozen=True)
class SphereIntrusion:
    center: tuple
    radius: float
    material: MaterialParams
    blend_length: float = DEFAULT_BLEND

    def __post_init__(self):
        if not self.radius > 0 or not self.blend_length > 0:
            raise DomainError("intrusion radius and blend length must be > 0")

    @property
    def apex(self):
        """Surface footprint point above the stiffest part of the intrusion."""
        return (self.center[0], self.center[1])

    def horizontal_gap(self, x, y):
        rho = np.hypot(np.asarray(x) - self.center[0], np.asarray(y) - self.center[1])
        return np.maximum(rho - self.radius, 0.0)

    def extent(self):
        cx, cy, cz = self.center
        r = self.radius
        return (cx, cy, r, cz - r, cz + r)


@dataclass(frozen=True)
class HorseshoeIntrusion:
    """Torus arc lying in a horizontal plane.

    The gap of the arc faces ``orientation`` (rad, from +x) and spans
    ``opening_angle``; the closed end, opposite the gap, is the apex.
    """

    center: tuple
    major_radius: float
    tube_radius: float
    opening_angle: float
    material: MaterialParams
    orientation: float = 0.0
    blend_length: float = DEFAULT_BLEND

    def __post_init__(self):
        if not (self.major_radius > 0 and self.tube_radius > 0 and self.blend_length > 0):
            raise DomainError("horseshoe radii and blend length must be > 0")
        if not 0.0 <= self.opening_angle < 2.0 * math.pi:
            raise DomainError("opening angle must lie in [0, 2 pi)")
        if self.tube_radius >= self.major_radius:
            raise DomainError("tube radius must be smaller than the major radius")

    @property
    def apex(self):
        cx, cy, _ = self.center
        return (cx - self.major_radius * math.cos(self.orientation),
                cy - self.major_radius * math.sin(self.orientation))

    def horizontal_gap(self, x, y):
        cx, cy, _ = self.center
        dx = np.asarray(x, dtype=float) - cx
        dy = np.asarray(y, dtype=float) - cy
        rho = np.hypot(dx, dy)
        phi = np.arctan2(dy, dx) - self.orientation
        phi = (phi + math.pi) % (2.0 * math.pi) - math.pi
        half = self.opening_angle / 2.0
        on_arc = np.abs(phi) >= half
        to_arc = np.abs(rho - self.major_radius)
        ends = []
        for sign in (1.0, -1.0):
            ex = self.major_radius * math.cos(self.orientation + sign * half)
            ey = self.major_radius * math.sin(self.orientation + sign * half)
            ends.append(np.hypot(dx - ex, dy - ey))
        to_end = np.minimum(*ends)
        dist = np.where(on_arc, to_arc, to_end)
        return np.maximum(dist - self.tube_radius, 0.0)

    def extent(self):
        cx, cy, cz = self.center
        r = self.tube_radius
        return (cx, cy, self.major_radius + r, cz - r, cz + r)


@dataclass(frozen=True)
class PhantomSpec:
    """Cylindrical specimen: footprint centred at the origin, top at ``surface_z``."""

    diameter: float
    height: float
    matrix: MaterialParams
    intrusions: tuple = field(default_factory=tuple)
    surface_z: float = 0.0
    name: str = ""

    def __post_init__(self):
        if not (self.diameter > 0 and self.height > 0):
            raise DomainError("phantom diameter and height must be > 0")
        object.__setattr__(self, "intrusions", tuple(self.intrusions))
        radius = self.diameter / 2.0
        bottom = self.surface_z - self.height
        for inc in self.intrusions:
            cx, cy, reach, zlo, zhi = inc.extent()
            if math.hypot(cx, cy) + reach > radius or zlo < bottom or zhi > self.surface_z:
                raise DomainError(f"intrusion {inc} is not fully inside the phantom")

    @property
    def homogeneous(self):
        return not self.intrusions

    def contains(self, x, y):
        return np.hypot(x, y) <= self.diameter / 2.0


def blend_weight(inc, x, y):
    return smoothstep(1.0 - inc.horizontal_gap(x, y) / inc.blend_length)


def local_fields(p, x, y):
    """Vectorised ``(E_f, eta)`` arrays of the effective surface field."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if not np.all(p.contains(x, y)):
        raise DomainError("point outside the phantom footprint")
    shape = np.broadcast(x, y).shape
    dE = np.zeros(shape)
    deta = np.zeros(shape)
    for inc in p.intrusions:
        w = blend_weight(inc, x, y)
        # strongest contribution wins so overlapping blends stay within bounds
        dE = np.maximum(dE, w * (inc.material.E_f - p.matrix.E_f))
        deta = np.maximum(deta, w * (inc.material.eta - p.matrix.eta))
    return p.matrix.E_f + dE, p.matrix.eta + deta


def local_params(p, x, y):
    """Effective material seen at surface point ``(x, y)`` (m).

    Poisson ratio is always the matrix value.
    """
    if p.homogeneous:
        if not p.contains(x, y):
            raise DomainError(f"point ({x}, {y}) outside the phantom footprint")
        return p.matrix
    E, eta = local_fields(p, x, y)
    return MaterialParams(E_f=float(E), nu=p.matrix.nu, eta=float(eta))


# Silicone values: matrix moduli are the compression-test ground truth,
# viscosities the 5 mm spherical-tip estimates.  Intrusion effective
# values reproduce the measured apex elevations over the plain matrix
# (S3: 142.8/129.5, S4: 171.4/129.5 for E; 399/362, 458/362 for eta).
_DRAGONSKIN10 = MaterialParams(E_f=282.1e3, nu=0.5, eta=860.0)
_ECOFLEX30 = MaterialParams(E_f=112.5e3, nu=0.5, eta=362.0)
_HORSESHOE_GAIN = (142.8 / 129.5, 399.0 / 362.0)
_SPHERE_GAIN = (171.4 / 129.5, 458.0 / 362.0)
_CHICKEN = MaterialParams(E_f=53.7e3, nu=0.5, eta=623.0)
_CHICKEN_LUMP = MaterialParams(E_f=102.7e3, nu=0.5, eta=1095.0)

_SPHERE_RADIUS = 2.5e-3
_SPHERE_DEPTH = 5e-3
# horseshoe dimensions are not reported; chosen to fit the 50 mm cylinder
_HS_MAJOR = 6e-3
_HS_TUBE = 2.5e-3
_HS_OPENING = math.radians(120.0)
_HS_DEPTH = 5e-3

SCAN_SPHERE_X = -12e-3
SCAN_HORSESHOE_APEX_X = 12e-3


def _scaled(m, gains):
    return MaterialParams(E_f=m.E_f * gains[0], nu=m.nu, eta=m.eta * gains[1])


def _sphere(x, y, matrix, gains=_SPHERE_GAIN, material=None):
    return SphereIntrusion(center=(x, y, -_SPHERE_DEPTH), radius=_SPHERE_RADIUS,
                           material=material or _scaled(matrix, gains))


def _horseshoe(apex_x, y, matrix):
    # opening faces +x, so the closed end sits major_radius to the left of the centre
    return HorseshoeIntrusion(center=(apex_x + _HS_MAJOR, y, -_HS_DEPTH), major_radius=_HS_MAJOR,
                              tube_radius=_HS_TUBE, opening_angle=_HS_OPENING,
                              material=_scaled(matrix, _HORSESHOE_GAIN), orientation=0.0)


PRESETS = ("S1", "S2", "S3", "S4", "S5", "ChickenPlain", "ChickenSphere")


def preset(name):
    """Build one of the reference specimens.

    S1-S4 are 50 mm x 22 mm cylinders; S3/S4 carry their intrusion at the
    centre.  S5 is 80 mm wide with the sphere at x = -12 mm and the
    horseshoe apex at x = +12 mm on the y = 0 line.  The chicken presets
    model two stacked 15 mm slices as a 30 mm slab.
    """
    if name == "S1":
        return PhantomSpec(50e-3, 22e-3, _DRAGONSKIN10, name=name)
    if name == "S2":
        return PhantomSpec(50e-3, 22e-3, _ECOFLEX30, name=name)
    if name == "S3":
        return PhantomSpec(50e-3, 22e-3, _ECOFLEX30, (_horseshoe(0.0, 0.0, _ECOFLEX30),), name=name)
    if name == "S4":
        return PhantomSpec(50e-3, 22e-3, _ECOFLEX30, (_sphere(0.0, 0.0, _ECOFLEX30),), name=name)
    if name == "S5":
        return PhantomSpec(80e-3, 22e-3, _ECOFLEX30,
                           (_sphere(SCAN_SPHERE_X, 0.0, _ECOFLEX30),
                            _horseshoe(SCAN_HORSESHOE_APEX_X, 0.0, _ECOFLEX30)), name=name)
    if name == "ChickenPlain":
        return PhantomSpec(80e-3, 30e-3, _CHICKEN, name=name)
    if name == "ChickenSphere":
        # sphere sits between the slices, 15 mm below the surface
        lump = SphereIntrusion(center=(0.0, 0.0, -15e-3), radius=_SPHERE_RADIUS, material=_CHICKEN_LUMP)
        return PhantomSpec(80e-3, 30e-3, _CHICKEN, (lump,), name=name)
    raise ConfigError(f"unknown phantom preset {name!r}; expected one of {', '.join(PRESETS)}")
