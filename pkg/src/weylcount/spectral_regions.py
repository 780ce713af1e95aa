"""Eigenvalue-region geometry in the complex plane.

Dissipative boundary damping confines the point spectrum to a union of
two closed sets in the left half plane: a parabolic strip along the
imaginary axis and a thin neighborhood of the negative real axis.  The
counting asymptotics are stated for a third set, a pinched sliver
around the negative real axis starting at a configurable offset.  This
module provides the three membership predicates, parameter validation,
and the explicit lower bound on |Re z| for real spectral points of a
uniformly damped problem.

All predicates are pure and total on the complex plane; boundary points
(equality in the defining inequalities) count as members.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DomainError

__all__ = [
    "RegionParams",
    "in_counting_region",
    "in_spectral_strip",
    "in_axis_neighborhood",
    "real_eigenvalue_bound",
    "membership_report",
]


@dataclass(frozen=True)
class RegionParams:
    """Constants for the three spectral regions.

    ``c0``/``c2`` shape the counting region {Re z <= -c0,
    |Im z| <= c2 (1+|Re z|)^-2} with c0 >= max(1, 2 c2); ``c_eps``/``eps``
    shape the strip {Re z < 0, |Re z| <= c_eps (1+|Im z|^(1/2+eps))};
    ``c_m``/``m`` shape the axis neighborhood {Re z < 0,
    |Im z| <= c_m (1+|Re z|)^-m} with m >= 2.
    """

    c0: float = 2.0
    c2: float = 1.0
    c_eps: float = 1.0
    eps: float = 0.1
    c_m: float = 1.0
    m: int = 2

    def __post_init__(self):
        if not self.c2 > 0.0:
            raise DomainError("c2 must be positive, got %r" % (self.c2,))
        if not self.c0 >= max(1.0, 2.0 * self.c2):
            raise DomainError(
                "c0 must be >= max(1, 2 c2) = %g, got %r"
                % (max(1.0, 2.0 * self.c2), self.c0))
        if not self.c_eps > 0.0:
            raise DomainError(
                "c_eps must be positive, got %r" % (self.c_eps,))
        if not 0.0 < self.eps < 0.5:
            raise DomainError(
                "eps must lie in (0, 1/2), got %r" % (self.eps,))
        if not self.c_m > 0.0:
            raise DomainError("c_m must be positive, got %r" % (self.c_m,))
        if not self.m >= 2:
            raise DomainError("m must be >= 2, got %r" % (self.m,))


def in_counting_region(z, params=None):
    """Membership in {Re z <= -c0, |Im z| <= c2 (1 + |Re z|)^-2}."""
    params = params or RegionParams()
    z = complex(z)
    if z.real > -params.c0:
        return False
    return abs(z.imag) <= params.c2 * (1.0 + abs(z.real)) ** -2


def in_spectral_strip(z, params=None):
    """Membership in {Re z < 0, |Re z| <= c_eps (1 + |Im z|^(1/2+eps))}."""
    params = params or RegionParams()
    z = complex(z)
    if z.real >= 0.0:
        return False
    bound = params.c_eps * (1.0 + abs(z.imag) ** (0.5 + params.eps))
    return abs(z.real) <= bound


def in_axis_neighborhood(z, params=None):
    """Membership in {Re z < 0, |Im z| <= c_m (1 + |Re z|)^-m}."""
    params = params or RegionParams()
    z = complex(z)
    if z.real >= 0.0:
        return False
    return abs(z.imag) <= params.c_m * (1.0 + abs(z.real)) ** -params.m


def real_eigenvalue_bound(gamma0):
    """Lower bound on |Re z| for real eigenvalues under damping gamma0.

    Returns 1/max{gamma0 - 1, sqrt(gamma0 - 1)}; the two regimes meet
    continuously at gamma0 = 2.  Requires gamma0 > 1.
    """
    gamma0 = float(gamma0)
    if not gamma0 > 1.0:
        raise DomainError(
            "bound requires gamma0 > 1, got %r" % (gamma0,))
    return 1.0 / max(gamma0 - 1.0, np.sqrt(gamma0 - 1.0))


def membership_report(points, params=None):
    """Evaluate all three predicates for an iterable of complex points.

    Returns a list of dicts (one per point, input order preserved) with
    the point's coordinates and a boolean per region.
    """
    params = params or RegionParams()
    rows = []
    for z in points:
        z = complex(z)
        rows.append({
            "re": z.real,
            "im": z.imag,
            "counting_region": in_counting_region(z, params),
            "spectral_strip": in_spectral_strip(z, params),
            "axis_neighborhood": in_axis_neighborhood(z, params),
        })
    return rows
