"""Periodic grids, discrete Fourier transforms and bilinear frequency operators.

Transform convention (``M = N**d`` nodes)::

    u_hat(k) = (1/M) * sum_j u(x_j) exp(-i k . x_j)
    u(x_j)   = sum_k u_hat(k) exp(i k . x_j)

so a plane wave ``exp(i k0 x)`` has unit coefficient at ``k0`` and the
pseudo-product with symbol 1 is the pointwise product.  Frequency arrays are
stored in numpy FFT order.

Pseudo-products never wrap ``xi - eta`` around the lattice: contributions whose
input frequencies fall outside the lattice are dropped.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from .errors import GridMismatch, InvalidParameter

#: Below this |phi| the closed-form time integral switches to ``t``.
PHI_FLOOR = 1e-10


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid with ``N`` nodes and period ``L`` on every axis."""

    d: int = 1
    N: int = 64
    L: float = 2 * math.pi

    def __post_init__(self):
        if self.d not in (1, 2):
            raise InvalidParameter(f"unsupported dimension {self.d}")
        if self.N < 8 or self.N % 2:
            raise InvalidParameter(f"N must be even and >= 8, got {self.N}")
        if not self.L > 0:
            raise InvalidParameter("period must be positive")

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.N,) * self.d

    @property
    def dx(self) -> float:
        return self.L / self.N

    @property
    def dk(self) -> float:
        """Spacing of the frequency lattice."""
        return 2 * math.pi / self.L

    @property
    def modes(self) -> np.ndarray:
        """Integer mode numbers per axis in FFT order."""
        return np.fft.fftfreq(self.N, 1.0 / self.N).round().astype(int)

    @property
    def x_axis(self) -> np.ndarray:
        return np.arange(self.N) * self.dx

    @property
    def k_axis(self) -> np.ndarray:
        return self.modes * self.dk

    def x(self):
        """Node coordinates; for ``d == 2`` shape ``(N, N, 2)``."""
        if self.d == 1:
            return self.x_axis
        return np.stack(np.meshgrid(self.x_axis, self.x_axis, indexing="ij"), axis=-1)

    def k(self):
        """Frequency vectors in FFT order; for ``d == 2`` shape ``(N, N, 2)``."""
        if self.d == 1:
            return self.k_axis
        return np.stack(np.meshgrid(self.k_axis, self.k_axis, indexing="ij"), axis=-1)

    def mode_grid(self):
        """Integer modes in FFT order; for ``d == 2`` shape ``(N, N, 2)``."""
        if self.d == 1:
            return self.modes
        return np.stack(np.meshgrid(self.modes, self.modes, indexing="ij"), axis=-1)


@dataclass
class Field:
    """Complex samples on a :class:`Grid`, in physical or frequency representation."""

    grid: Grid
    rep: str
    values: np.ndarray

    def __post_init__(self):
        if self.rep not in ("physical", "frequency"):
            raise InvalidParameter(f"unknown representation {self.rep!r}")
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape != self.grid.shape:
            raise GridMismatch(f"values of shape {self.values.shape} on grid {self.grid.shape}")

    @classmethod
    def from_function(cls, grid: Grid, fn: Callable) -> "Field":
        return cls(grid, "physical", fn(grid.x()))

    @classmethod
    def zeros(cls, grid: Grid, rep: str = "frequency") -> "Field":
        return cls(grid, rep, np.zeros(grid.shape, complex))

    def to_frequency(self) -> "Field":
        return transform(self, "frequency")

    def to_physical(self) -> "Field":
        return transform(self, "physical")

    def copy(self) -> "Field":
        return Field(self.grid, self.rep, self.values.copy())

    def l2(self) -> float:
        """Discrete L2 norm ``(sum |u|^2 / N^d)**0.5`` (equals the coefficient l2 norm)."""
        if self.rep == "frequency":
            return float(np.sqrt(np.sum(np.abs(self.values) ** 2)))
        return float(np.sqrt(np.mean(np.abs(self.values) ** 2)))

    def to_csv(self, path) -> None:
        g = self.grid
        coords = g.x() if self.rep == "physical" else g.k()
        name = "x" if self.rep == "physical" else "k"
        flat = self.values.ravel()
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            if g.d == 1:
                w.writerow([name, "re", "im"])
                for c, v in zip(coords, flat):
                    w.writerow([repr(float(c)), repr(v.real), repr(v.imag)])
            else:
                w.writerow([f"{name}_1", f"{name}_2", "re", "im"])
                for c, v in zip(coords.reshape(-1, 2), flat):
                    w.writerow([repr(float(c[0])), repr(float(c[1])), repr(v.real), repr(v.imag)])


def transform(field: Field, target: str) -> Field:
    """Convert ``field`` to ``target`` representation (no-op if already there)."""
    if target not in ("physical", "frequency"):
        raise InvalidParameter(f"unknown representation {target!r}")
    if field.rep == target:
        return field.copy()
    M = field.grid.N ** field.grid.d
    if target == "frequency":
        return Field(field.grid, target, np.fft.fftn(field.values) / M)
    return Field(field.grid, target, np.fft.ifftn(field.values) * M)


# --------------------------------------------------------------------------
# symbols


@dataclass
class Symbol2:
    """Bilinear symbol ``m(xi, eta)``.

    Three forms are supported: a vectorized callable, a separable product
    ``a(eta) * b(xi - eta)`` (which enables the FFT fast path), and a table
    on a rectangular (xi, eta) node set (``d == 1``).  An optional support box
    ``((xi_lo, xi_hi), (eta_lo, eta_hi))`` zeroes the symbol outside.
    """

    fn: Callable | None = None
    factors: tuple[Callable | None, Callable | None] | None = None
    table: np.ndarray | None = None
    axes: tuple[np.ndarray, np.ndarray] | None = None
    support: tuple[tuple[float, float], tuple[float, float]] | None = None
    name: str = "m"

    @classmethod
    def one(cls) -> "Symbol2":
        return cls(factors=(None, None), name="1")

    @classmethod
    def from_callable(cls, fn: Callable, name: str = "m", support=None) -> "Symbol2":
        return cls(fn=fn, name=name, support=support)

    @classmethod
    def separable(cls, a: Callable | None, b: Callable | None, name: str = "m") -> "Symbol2":
        """``m(xi, eta) = a(eta) * b(xi - eta)``; ``None`` stands for 1."""
        return cls(factors=(a, b), name=name)

    @classmethod
    def from_table(cls, xi_axis, eta_axis, values, name: str = "m") -> "Symbol2":
        xi_axis = np.asarray(xi_axis, float)
        eta_axis = np.asarray(eta_axis, float)
        values = np.asarray(values)
        if values.ndim != 2 or values.shape != (len(xi_axis), len(eta_axis)):
            raise GridMismatch("table shape does not match its axes")
        if not np.all(np.isfinite(values)):
            raise InvalidParameter("symbol table has non-finite entries")
        return cls(table=values, axes=(xi_axis, eta_axis), name=name)

    @property
    def is_separable(self) -> bool:
        return self.factors is not None and self.support is None

    def _lookup(self, xi, eta):
        xa, ea = self.axes
        out = np.zeros(np.broadcast(xi, eta).shape, dtype=self.table.dtype)
        xi, eta = np.broadcast_arrays(xi, eta)

        def idx(axis, v):
            h = axis[1] - axis[0] if len(axis) > 1 else 1.0
            i = np.rint((v - axis[0]) / h).astype(int)
            ok = (i >= 0) & (i < len(axis))
            ic = np.clip(i, 0, len(axis) - 1)
            ok &= np.abs(axis[ic] - v) <= 1e-6 * abs(h)
            return ic, ok

        ix, okx = idx(xa, xi)
        ie, oke = idx(ea, eta)
        ok = okx & oke
        out[ok] = self.table[ix[ok], ie[ok]]
        return out

    def evaluate(self, xi, eta, dim: int = 1):
        """Evaluate on frequency arrays; for ``dim == 2`` the last axis holds vectors."""
        xi = np.asarray(xi, float)
        eta = np.asarray(eta, float)
        base = np.broadcast(xi, eta).shape
        if dim == 2:
            base = base[:-1]
        if self.table is not None:
            val = self._lookup(xi, eta)
        elif self.factors is not None:
            a, b = self.factors
            val = np.ones(base)
            if a is not None:
                val = val * a(eta)
            if b is not None:
                val = val * b(xi - eta)
        else:
            val = np.asarray(self.fn(xi, eta))
        if self.support is not None:
            (xl, xh), (el, eh) = self.support
            inside = (xi >= xl) & (xi <= xh) & (eta >= el) & (eta <= eh)
            if dim == 2:
                inside = np.all(inside, axis=-1)
            val = np.where(inside, val, 0)
        return val

    __call__ = evaluate

    def tabulate(self, xi_axis, eta_axis) -> np.ndarray:
        X, E = np.meshgrid(xi_axis, eta_axis, indexing="ij")
        return self.evaluate(X, E)

    def to_csv(self, path, grid: Grid) -> None:
        """Write the symbol over the (xi, eta) lattice of a 1-d grid."""
        if grid.d != 1:
            raise InvalidParameter("symbol export is implemented for d == 1 lattices")
        k = np.sort(grid.k_axis)
        vals = self.tabulate(k, k)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["xi", "eta", "re", "im"])
            for a, xv in enumerate(k):
                for b, ev in enumerate(k):
                    v = complex(vals[a, b])
                    w.writerow([repr(float(xv)), repr(float(ev)), repr(v.real), repr(v.imag)])


# --------------------------------------------------------------------------
# lattice pair tables for direct summation


@dataclass(frozen=True)
class _Pairs:
    """All (xi, eta) lattice pairs with xi - eta on the lattice, output-major order."""

    out: np.ndarray   # flat FFT-order index of xi, per pair
    src1: np.ndarray  # flat index of eta
    src2: np.ndarray  # flat index of xi - eta
    xi: np.ndarray    # frequency vectors
    eta: np.ndarray


@lru_cache(maxsize=8)
def _pairs(grid: Grid) -> _Pairs:
    N, d = grid.N, grid.d
    modes = grid.modes
    order = np.argsort(modes, kind="stable")  # ascending mode numbers
    if d == 1:
        m_sorted = modes[order]
        out_m, eta_m = np.meshgrid(m_sorted, m_sorted, indexing="ij")
        diff = out_m - eta_m
        ok = (diff >= -N // 2) & (diff <= N // 2 - 1)
        to_idx = lambda m: np.mod(m, N)  # mode -> FFT index
        out_i = to_idx(out_m[ok])
        e_i = to_idx(eta_m[ok])
        d_i = to_idx(diff[ok])
        dk = grid.dk
        return _Pairs(out_i, e_i, d_i, out_m[ok] * dk, eta_m[ok] * dk)
    mg = grid.mode_grid().reshape(-1, 2)
    srt = np.lexsort((mg[:, 1], mg[:, 0]))
    mg = mg[srt]
    n = len(mg)
    out_m = np.repeat(mg, n, axis=0)
    eta_m = np.tile(mg, (n, 1))
    diff = out_m - eta_m
    ok = np.all((diff >= -N // 2) & (diff <= N // 2 - 1), axis=1)
    flat = lambda m: np.mod(m[:, 0], N) * N + np.mod(m[:, 1], N)
    return _Pairs(flat(out_m[ok]), flat(eta_m[ok]), flat(diff[ok]),
                  out_m[ok] * grid.dk, eta_m[ok] * grid.dk)


def _check(f: Field, g: Field) -> tuple[np.ndarray, np.ndarray]:
    if f.grid != g.grid:
        raise GridMismatch("fields live on different grids")
    return f.to_frequency().values, g.to_frequency().values


def _direct_sum(grid: Grid, weights: np.ndarray, fh: np.ndarray, gh: np.ndarray) -> np.ndarray:
    """``out[xi] = sum_eta w * f(eta) g(xi - eta)`` over precomputed pairs, ascending eta."""
    p = _pairs(grid)
    terms = weights * fh.ravel()[p.src1] * gh.ravel()[p.src2]
    M = grid.N ** grid.d
    out = np.zeros(M, complex)
    # pairs are grouped by output frequency; reduceat keeps the order fixed
    starts = np.flatnonzero(np.r_[True, p.out[1:] != p.out[:-1]])
    sums = np.add.reduceat(terms, starts) if len(terms) else np.zeros(0, complex)
    out[p.out[starts]] = sums
    return out.reshape(grid.shape)


def _pad_convolve(grid: Grid, fh: np.ndarray, gh: np.ndarray) -> np.ndarray:
    """Exact lattice convolution ``sum_eta f(eta) g(xi - eta)`` via zero padding to 2N."""
    N, d = grid.N, grid.d
    P = 2 * N
    idx = np.mod(grid.modes, P)

    def pad(a):
        out = np.zeros((P,) * d, complex)
        out[np.ix_(*([idx] * d))] = a
        return out

    pf = np.fft.ifftn(pad(fh)) * P**d
    pg = np.fft.ifftn(pad(gh)) * P**d
    prod = np.fft.fftn(pf * pg) / P**d
    return prod[np.ix_(*([idx] * d))]


def _factor_values(fn, grid: Grid) -> np.ndarray | float:
    return 1.0 if fn is None else np.asarray(fn(grid.k()))


def _symbol_on_pairs(m: Symbol2, grid: Grid) -> np.ndarray:
    p = _pairs(grid)
    return np.asarray(m.evaluate(p.xi, p.eta, dim=grid.d))


def pseudo_product(m: Symbol2, f: Field, g: Field, method: str = "auto") -> Field:
    """``B_m(f, g)^(xi) = sum_eta m(xi, eta) f^(eta) g^(xi - eta)`` on the lattice.

    ``method`` is ``"direct"`` (pair summation, any symbol), ``"fft"``
    (separable symbols, padded transforms) or ``"auto"``.
    """
    fh, gh = _check(f, g)
    grid = f.grid
    if method == "auto":
        method = "fft" if m.is_separable else "direct"
    if method == "fft":
        if not m.is_separable:
            raise InvalidParameter("fft path needs a separable symbol")
        a, b = m.factors
        out = _pad_convolve(grid, fh * _factor_values(a, grid), gh * _factor_values(b, grid))
    else:
        out = _direct_sum(grid, _symbol_on_pairs(m, grid), fh, gh)
    return Field(grid, "frequency", out)


def _has_components(phase) -> bool:
    return all(hasattr(phase, a) for a in ("out_rel", "in_rels", "eps1", "eps2"))


def oscillatory_pseudo_product(m: Symbol2, phase, s: float, f: Field, g: Field,
                               method: str = "auto") -> Field:
    """Pseudo-product with the extra factor ``exp(i s phi(xi, eta))``.

    For separable symbols the factor splits over ``xi``, ``eta`` and
    ``xi - eta`` and the padded-FFT path is used.
    """
    fh, gh = _check(f, g)
    grid = f.grid
    if method == "auto":
        method = "fft" if (m.is_separable and _has_components(phase)) else "direct"
    if method == "fft":
        a, b = m.factors
        k = grid.k()
        pj, pk = phase.in_rels
        ea = np.exp(-1j * s * phase.eps1 * pj.symbol(k))
        eb = np.exp(-1j * s * phase.eps2 * pk.symbol(k))
        eo = np.exp(1j * s * phase.out_rel.symbol(k))
        out = eo * _pad_convolve(grid, fh * ea * _factor_values(a, grid),
                                 gh * eb * _factor_values(b, grid))
    else:
        p = _pairs(grid)
        w = _symbol_on_pairs(m, grid) * np.exp(1j * s * phase.value(p.xi, p.eta))
        out = _direct_sum(grid, w, fh, gh)
    return Field(grid, "frequency", out)


def time_factor(t: float, phi) -> np.ndarray:
    """Closed form of ``int_0^t exp(i s phi) ds``.

    Written as ``2 exp(i t phi / 2) sin(t phi / 2) / phi`` to avoid the
    cancellation in ``(exp(i t phi) - 1) / (i phi)``; equals ``t`` when
    ``|phi| <= PHI_FLOOR``.
    """
    phi = np.asarray(phi, float)
    small = np.abs(phi) <= PHI_FLOOR
    safe = np.where(small, 1.0, phi)
    val = 2.0 * np.exp(0.5j * t * safe) * np.sin(0.5 * t * safe) / safe
    return np.where(small, t + 0j, val)


def time_integrated_oscillatory(m: Symbol2, phase, t: float, f, g, ds: float | None = None) -> Field:
    """``sum_eta m(xi, eta) I(t, phi) f^(eta) g^(xi - eta)`` with ``I = int_0^t e^{i s phi} ds``.

    For fixed fields ``f``, ``g`` the time integral is exact.  If either is a
    callable ``s -> Field`` the integrand is trajectory dependent and a
    composite midpoint rule with step close to ``ds`` is used instead.
    """
    if t < 0:
        raise InvalidParameter(f"t must be >= 0, got {t}")
    if callable(f) or callable(g):
        if ds is None or not ds > 0:
            raise InvalidParameter("trajectory-dependent integrands need ds > 0")
        fs = f if callable(f) else (lambda s: f)
        gs = g if callable(g) else (lambda s: g)
        n = max(1, math.ceil(t / ds - 1e-12))
        step = t / n
        grid = fs(0.0).grid
        acc = np.zeros(grid.shape, complex)
        for q in range(n):
            s = (q + 0.5) * step
            acc += oscillatory_pseudo_product(m, phase, s, fs(s), gs(s), method="direct").values
        return Field(grid, "frequency", acc * step)
    fh, gh = _check(f, g)
    grid = f.grid
    p = _pairs(grid)
    w = _symbol_on_pairs(m, grid) * time_factor(t, phase.value(p.xi, p.eta))
    return Field(grid, "frequency", _direct_sum(grid, w, fh, gh))


# --------------------------------------------------------------------------
# cutoff near R and dealiasing


def quintic_bump(r) -> np.ndarray:
    """C^2 bump: 1 on ``|r| <= 1/2``, 0 on ``|r| >= 1``, quintic smoothstep between."""
    r = np.abs(np.asarray(r, float))
    s = np.clip(2.0 * r - 1.0, 0.0, 1.0)
    return 1.0 - s**3 * (10.0 - 15.0 * s + 6.0 * s**2)


def cutoff_symbol_near_R(dist_to_R, t: float, delta: float, chi_profile="quintic", *,
                         grid) -> Symbol2:
    """Tabulated symbol ``chi(t**delta * dist((xi, eta), R))``.

    ``grid`` is the (xi, eta) node set the distance field was computed on
    (anything with ``xi_axis`` and ``eta_axis``).
    """
    if not t > 0:
        raise InvalidParameter(f"t must be positive, got {t}")
    if not 0 < delta < 1:
        raise InvalidParameter(f"delta must lie in (0, 1), got {delta}")
    chi = quintic_bump if chi_profile == "quintic" else chi_profile
    vals = chi(t**delta * np.asarray(dist_to_R, float))
    return Symbol2.from_table(grid.xi_axis, grid.eta_axis, vals, name="chi_near_R")


def dealias_mask(grid: Grid) -> np.ndarray:
    keep = np.abs(grid.modes) <= grid.N / 3
    if grid.d == 1:
        return keep
    return keep[:, None] & keep[None, :]


def dealias(field: Field) -> Field:
    """Zero every coefficient with some axis ``|k| > N/3 * (2 pi / L)``."""
    fr = field.to_frequency()
    return Field(fr.grid, "frequency", np.where(dealias_mask(fr.grid), fr.values, 0))


def lattice_measure(mask: np.ndarray, spacing: float, dim: int = 1) -> float:
    """Measure of a set of (xi, eta) lattice nodes: count times ``spacing**(2 dim)``."""
    return float(np.count_nonzero(mask)) * spacing ** (2 * dim)
