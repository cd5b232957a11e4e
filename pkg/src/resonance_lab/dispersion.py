"""Dispersion relations and diagonal systems of them.

A dispersion relation is a real radial Fourier multiplier ``P(xi)``.  Frequency
arguments follow one convention throughout the package:

* ``dim == 1``: any real array, each entry is a frequency;
* ``dim == 2``: a real array whose last axis has length 2.

Gradients have the same shape as their argument.  Symbols that are not smooth
at the origin carry an ``origin_exclusion_radius``; gradients are refused
inside that ball instead of being regularized.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import InvalidParameter, OriginSingular

KINDS = ("homogeneous", "schrodinger", "wave", "half_wave", "klein_gordon", "custom_radial")

#: Default exclusion radius for non-smooth symbols (one resonance-grid spacing).
DEFAULT_GRID_SPACING = 0.01


def _radius(xi: np.ndarray, dim: int) -> np.ndarray:
    if dim == 1:
        return np.abs(xi)
    return np.sqrt(np.sum(xi * xi, axis=-1))


@dataclass(frozen=True)
class DispersionRelation:
    """Radial real multiplier ``P(xi)`` on R^dim.

    Parameters
    ----------
    kind : str
        One of :data:`KINDS`.
    alpha : float
        Exponent for ``kind == "homogeneous"``; symbol is ``|xi|**alpha``.
    mass : float
        Mass for ``kind == "klein_gordon"``; symbol is ``sqrt(mass**2 + |xi|**2)``.
    dim : int
        Spatial dimension, 1 or 2.
    origin_exclusion_radius : float
        Gradient evaluation is refused for ``|xi|`` strictly below this.
    table : tuple of (r, P(r)) pairs
        Samples for ``kind == "custom_radial"``, interpolated by a monotone cubic.
    """

    kind: str
    alpha: float | None = None
    mass: float | None = None
    dim: int = 1
    origin_exclusion_radius: float = 0.0
    table: tuple[tuple[float, float], ...] | None = field(default=None, repr=False)

    @property
    def is_smooth(self) -> bool:
        if self.kind in ("schrodinger", "klein_gordon"):
            return True
        if self.kind == "homogeneous":
            a = float(self.alpha)
            return a >= 2 and a == int(a) and int(a) % 2 == 0
        return False

    @cached_property
    def _interp(self) -> PchipInterpolator:
        r, p = np.asarray(self.table, dtype=float).T
        return PchipInterpolator(r, p, extrapolate=True)

    def radial(self, r):
        """Profile ``p(r)`` with ``P(xi) = p(|xi|)``."""
        r = np.asarray(r, dtype=float)
        if self.kind == "homogeneous":
            return r ** self.alpha
        if self.kind == "schrodinger":
            return r * r
        if self.kind in ("wave", "half_wave"):
            return r.copy()
        if self.kind == "klein_gordon":
            return np.sqrt(self.mass**2 + r * r)
        return self._interp(r)

    def radial_derivative(self, r):
        r = np.asarray(r, dtype=float)
        if self.kind == "homogeneous":
            with np.errstate(divide="ignore", invalid="ignore"):
                return self.alpha * r ** (self.alpha - 1)
        if self.kind == "schrodinger":
            return 2.0 * r
        if self.kind in ("wave", "half_wave"):
            return np.ones_like(r)
        if self.kind == "klein_gordon":
            return r / np.sqrt(self.mass**2 + r * r)
        return self._interp.derivative()(r)

    def symbol(self, xi):
        """Evaluate ``P(xi)``."""
        xi = np.asarray(xi, dtype=float)
        return self.radial(_radius(xi, self.dim))

    def gradient(self, xi, strict: bool = True):
        """Analytic gradient of ``P``.

        With ``strict=True`` any point inside the exclusion ball raises
        :class:`OriginSingular`; otherwise those points come back as NaN.
        """
        xi = np.asarray(xi, dtype=float)
        r = _radius(xi, self.dim)
        inside = r < self.origin_exclusion_radius
        if strict and np.any(inside):
            raise OriginSingular(
                f"gradient of {self.kind} symbol requested at |xi| < "
                f"{self.origin_exclusion_radius:g}"
            )
        with np.errstate(divide="ignore", invalid="ignore"):
            dp = self.radial_derivative(r)
            if self.dim == 1:
                g = dp * np.sign(xi)
            else:
                unit = np.where(r[..., None] > 0, xi / r[..., None], 0.0)
                g = dp[..., None] * unit
        if np.any(inside):
            if self.dim == 1:
                g = np.where(inside, np.nan, g)
            else:
                g = np.where(inside[..., None], np.nan, g)
        return g


def make_dispersion(
    kind: str,
    alpha: float | None = None,
    mass: float | None = None,
    dim: int = 1,
    *,
    table: Sequence[Sequence[float]] | None = None,
    grid_spacing: float = DEFAULT_GRID_SPACING,
    exclusion_radius: float | None = None,
) -> DispersionRelation:
    """Build a validated :class:`DispersionRelation`.

    ``exclusion_radius`` defaults to 0 for symbols smooth at the origin and to
    ``grid_spacing`` otherwise.
    """
    if kind not in KINDS:
        raise InvalidParameter(f"unknown dispersion kind {kind!r}")
    if dim not in (1, 2):
        raise InvalidParameter(f"unsupported dimension {dim}")
    if kind == "homogeneous":
        if alpha is None or not np.isfinite(alpha) or alpha <= 0:
            raise InvalidParameter(f"homogeneous dispersion needs alpha > 0, got {alpha}")
        alpha = float(alpha)
    else:
        alpha = None
    if kind == "klein_gordon":
        if mass is None or not np.isfinite(mass) or mass <= 0:
            raise InvalidParameter(f"klein_gordon dispersion needs mass > 0, got {mass}")
        mass = float(mass)
    else:
        mass = None
    tab = None
    if kind == "custom_radial":
        if table is None:
            raise InvalidParameter("custom_radial dispersion needs a table of (r, P(r)) samples")
        arr = np.asarray(table, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] < 2:
            raise InvalidParameter("table must be a list of at least two (r, P(r)) pairs")
        if np.any(np.diff(arr[:, 0]) <= 0) or arr[0, 0] < 0:
            raise InvalidParameter("table radii must be nonnegative and strictly increasing")
        tab = tuple((float(r), float(p)) for r, p in arr)
    rel = DispersionRelation(kind=kind, alpha=alpha, mass=mass, dim=dim, table=tab)
    if exclusion_radius is None:
        exclusion_radius = 0.0 if rel.is_smooth else float(grid_spacing)
    if exclusion_radius < 0:
        raise InvalidParameter("exclusion radius must be >= 0")
    return DispersionRelation(
        kind=kind, alpha=alpha, mass=mass, dim=dim,
        origin_exclusion_radius=float(exclusion_radius), table=tab,
    )


def evaluate_dispersion_jet(rel: DispersionRelation, xi):
    """Return ``(P(xi), grad P(xi))``; raises :class:`OriginSingular` in the exclusion ball."""
    return rel.symbol(xi), rel.gradient(xi, strict=True)


def strauss_exponent(d: int) -> float:
    """Strauss exponent ``1/2 + 1/d + sqrt((1/2 + 1/d)**2 + 2/d)``.

    Evaluated over the common denominator ``2 d`` so the radicand is an
    integer; this makes ``gamma(3) == 2`` exact in floating point.
    """
    if d < 1:
        raise InvalidParameter(f"dimension must be >= 1, got {d}")
    return ((d + 2) + math.sqrt((d + 2) ** 2 + 8 * d)) / (2 * d)


@dataclass(frozen=True)
class DispersionSystem:
    """Diagonal system ``diag(P_1, ..., P_n)``; components are addressed 1-based."""

    components: tuple[DispersionRelation, ...]

    @property
    def n(self) -> int:
        return len(self.components)

    @property
    def dim(self) -> int:
        return self.components[0].dim

    def component(self, i: int) -> DispersionRelation:
        if not 1 <= i <= self.n:
            raise InvalidParameter(f"component index {i} outside 1..{self.n}")
        return self.components[i - 1]

    def __len__(self) -> int:
        return self.n


def make_system(rels) -> DispersionSystem:
    """Build a :class:`DispersionSystem`; a bare relation becomes a scalar system."""
    if isinstance(rels, DispersionRelation):
        rels = [rels]
    rels = tuple(rels)
    if not rels:
        raise InvalidParameter("a dispersion system needs at least one component")
    if len({r.dim for r in rels}) != 1:
        raise InvalidParameter("all components of a system must share the dimension")
    return DispersionSystem(rels)
