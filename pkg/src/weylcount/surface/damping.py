"""Damping coefficient fields on closed surfaces.

A field stores the coefficient either directly or (``invert=True``) as the
pointwise reciprocal of a stored base profile.  The effective coefficient
``max(gamma, 1/gamma)`` is always computed from the base values, so a field
and its pointwise reciprocal yield bit-identical effective values -- the two
damping regimes are exactly symmetric downstream.
"""

import numpy as np

from ..errors import InvalidFieldError, UsageError

ABOVE_ONE = "above-one"
BELOW_ONE = "below-one"
KINDS = ("constant", "affine", "vertex-table")


class DampingField:
    """Scalar damping coefficient gamma on a surface.

    Kinds
    -----
    constant
        ``gamma(x) = value`` (or ``1/value`` with ``invert``).
    affine
        base profile ``offset + slope * <axis, x>`` with a unit axis;
        ``invert`` takes the pointwise reciprocal of that profile.
    vertex-table
        one base value per mesh vertex.

    The field must be strictly positive and stay strictly on one side of 1;
    a coefficient touching 1 anywhere is rejected.
    """

    def __init__(self, kind, regime=None, *, value=None, offset=None,
                 slope=None, axis=None, table=None, invert=False):
        if kind not in KINDS:
            raise UsageError(f"unknown damping field kind {kind!r}")
        if regime not in (None, ABOVE_ONE, BELOW_ONE):
            raise UsageError(f"unknown damping regime {regime!r}")
        self.kind = kind
        self.regime = regime
        self.invert = bool(invert)
        if kind == "constant":
            if value is None:
                raise UsageError("constant field needs a value")
            self.value = float(value)
        elif kind == "affine":
            if offset is None or slope is None or axis is None:
                raise UsageError("affine field needs offset, slope and axis")
            self.offset = float(offset)
            self.slope = float(slope)
            axis = np.asarray(axis, dtype=float)
            norm = np.linalg.norm(axis)
            if axis.shape != (3,) or norm == 0.0:
                raise UsageError("affine axis must be a nonzero 3-vector")
            self.axis = axis / norm
        else:
            if table is None:
                raise UsageError("vertex-table field needs a value table")
            self.table = np.asarray(table, dtype=float)
            if self.table.ndim != 1 or len(self.table) == 0:
                raise UsageError("vertex table must be a nonempty 1-d array")

    # convenience constructors -----------------------------------------
    @classmethod
    def constant(cls, value, regime=None, invert=False):
        return cls("constant", regime, value=value, invert=invert)

    @classmethod
    def affine(cls, offset, slope, axis, regime=None, invert=False):
        return cls("affine", regime, offset=offset, slope=slope, axis=axis,
                   invert=invert)

    @classmethod
    def vertex_table(cls, table, regime=None, invert=False):
        return cls("vertex-table", regime, table=table, invert=invert)

    # evaluation --------------------------------------------------------
    def base_values(self, points):
        """The stored base profile at ambient points (or per-vertex)."""
        points = np.asarray(points, dtype=float)
        if self.kind == "constant":
            return np.full(points.shape[:-1] or (1,), self.value)
        if self.kind == "affine":
            return self.offset + self.slope * (points @ self.axis)
        if points.ndim != 2 or len(points) != len(self.table):
            raise InvalidFieldError(
                f"vertex table has {len(self.table)} entries but "
                f"{len(points)} points were supplied")
        return self.table.copy()

    def values(self, points):
        """gamma at ambient points."""
        base = self.base_values(points)
        return 1.0 / base if self.invert else base

    def effective(self, points):
        """Effective coefficient max(gamma, 1/gamma), computed from the base."""
        base = self.base_values(points)
        if np.any(base <= 0.0):
            raise InvalidFieldError("damping field is not strictly positive")
        if np.any(base == 1.0):
            raise InvalidFieldError("damping coefficient equals 1")
        return np.maximum(base, 1.0 / base)

    # range analysis ----------------------------------------------------
    def base_range(self, surface):
        """Exact (min, max) of the base profile over the surface."""
        if self.kind == "constant":
            return self.value, self.value
        if self.kind == "vertex-table":
            if hasattr(surface, "vertices") and \
                    len(surface.vertices) != len(self.table):
                raise InvalidFieldError(
                    f"vertex table has {len(self.table)} entries but the mesh "
                    f"has {len(surface.vertices)} vertices")
            return float(self.table.min()), float(self.table.max())
        if hasattr(surface, "support"):
            reach = abs(self.slope) * surface.support(self.axis)
            return self.offset - reach, self.offset + reach
        base = self.base_values(surface.vertices)
        return float(base.min()), float(base.max())

    def gamma_range(self, surface):
        lo, hi = self.base_range(surface)
        if lo <= 0.0:
            raise InvalidFieldError(
                f"damping field reaches {lo:g} <= 0 on the surface")
        return (1.0 / hi, 1.0 / lo) if self.invert else (lo, hi)

    def effective_range(self, surface):
        """(min, max) of the effective coefficient; both are > 1."""
        lo, hi = self.base_range(surface)
        if lo <= 0.0:
            raise InvalidFieldError(
                f"damping field reaches {lo:g} <= 0 on the surface")
        if lo > 1.0:
            return lo, hi
        if hi < 1.0:
            return 1.0 / hi, 1.0 / lo
        raise InvalidFieldError(
            f"damping coefficient range [{lo:g}, {hi:g}] touches 1")

    def effective_affine(self, surface):
        """(offset, slope, axis) of the effective coefficient if it is affine.

        That holds exactly when the base profile stays > 1, in which case
        the effective coefficient coincides with the base whether or not the
        field is inverted.  Returns None otherwise.
        """
        if self.kind != "affine":
            return None
        lo, _ = self.base_range(surface)
        if lo > 1.0:
            return self.offset, self.slope, self.axis
        return None

    def validate_on(self, surface):
        """Check positivity and regime consistency; resolve an unset regime."""
        glo, ghi = self.gamma_range(surface)
        if glo <= 0.0:
            raise InvalidFieldError("damping field is not strictly positive")
        if glo <= 1.0 <= ghi:
            raise InvalidFieldError(
                f"damping coefficient range [{glo:g}, {ghi:g}] touches 1")
        actual = ABOVE_ONE if glo > 1.0 else BELOW_ONE
        if self.regime is None:
            self.regime = actual
        elif self.regime != actual:
            raise InvalidFieldError(
                f"declared regime {self.regime!r} but coefficients lie in "
                f"[{glo:g}, {ghi:g}]")
        return self
