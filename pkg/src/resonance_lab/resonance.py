"""Interaction phases, resonant sets and structural diagnostics.

For a diagonal system and a quadratic interaction the phase is::

    phi(xi, eta) = P_i(xi) - eps1 * P_j(eta) - eps2 * P_k(xi - eta)

Time resonances ``T`` are the zeros of ``phi``, space resonances ``S`` the
zeros of ``d_eta phi`` and space-time resonances ``R`` their intersection.
Sets are sampled on a rectangular frequency grid, either as interpolated zero
curves (``d == 1``) or as threshold bands (any ``d``).
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.spatial import cKDTree

from .dispersion import DispersionRelation, DispersionSystem, make_dispersion, make_system
from .errors import InvalidParameter, UnsupportedMode

#: Stand-in for an infinite distance when ``R`` is empty.
DIST_SENTINEL = 1e30


def _sign_label(eps1: int, eps2: int) -> str:
    return ("+" if eps1 > 0 else "-") + ("+" if eps2 > 0 else "-")


def parse_signs(signs) -> tuple[int, int]:
    """Accept ``"+-"``-style strings or integer pairs."""
    if isinstance(signs, str):
        if len(signs) != 2 or any(c not in "+-" for c in signs):
            raise InvalidParameter(f"bad sign pair {signs!r}")
        return tuple(1 if c == "+" else -1 for c in signs)
    e1, e2 = (int(s) for s in signs)
    if e1 not in (1, -1) or e2 not in (1, -1):
        raise InvalidParameter(f"bad sign pair {signs!r}")
    return e1, e2


@dataclass(frozen=True)
class Phase:
    """Quadratic interaction phase; component indices are 1-based."""

    system: DispersionSystem
    i: int = 1
    j: int = 1
    k: int = 1
    eps1: int = 1
    eps2: int = 1

    @property
    def dim(self) -> int:
        return self.system.dim

    @property
    def signs(self) -> str:
        return _sign_label(self.eps1, self.eps2)

    @property
    def out_rel(self) -> DispersionRelation:
        return self.system.component(self.i)

    @property
    def in_rels(self) -> tuple[DispersionRelation, DispersionRelation]:
        return self.system.component(self.j), self.system.component(self.k)

    def value(self, xi, eta):
        xi = np.asarray(xi, dtype=float)
        eta = np.asarray(eta, dtype=float)
        pj, pk = self.in_rels
        # the two input terms are summed first so swapping the slots is exact
        return self.out_rel.symbol(xi) - (self.eps1 * pj.symbol(eta)
                                          + self.eps2 * pk.symbol(xi - eta))

    __call__ = value

    def grad_eta(self, xi, eta, strict: bool = True):
        xi = np.asarray(xi, dtype=float)
        eta = np.asarray(eta, dtype=float)
        pj, pk = self.in_rels
        return (-self.eps1 * pj.gradient(eta, strict=strict)
                + self.eps2 * pk.gradient(xi - eta, strict=strict))

    def grad_xi(self, xi, eta, strict: bool = True):
        xi = np.asarray(xi, dtype=float)
        eta = np.asarray(eta, dtype=float)
        pk = self.system.component(self.k)
        return (self.out_rel.gradient(xi, strict=strict)
                - self.eps2 * pk.gradient(xi - eta, strict=strict))


def make_phase(system, i: int = 1, j: int = 1, k: int = 1, eps1: int = 1, eps2: int = 1) -> Phase:
    if not isinstance(system, DispersionSystem):
        system = make_system(system)
    for idx in (i, j, k):
        if not 1 <= idx <= system.n:
            raise InvalidParameter(f"component index {idx} outside 1..{system.n}")
    eps1, eps2 = parse_signs((eps1, eps2))
    return Phase(system, i, j, k, eps1, eps2)


def phase_jet(phase: Phase, xi, eta):
    """``(phi, d_eta phi, d_xi phi)``; gradients raise inside exclusion balls."""
    return phase.value(xi, eta), phase.grad_eta(xi, eta), phase.grad_xi(xi, eta)


def _norm(v, dim):
    return np.abs(v) if dim == 1 else np.sqrt(np.sum(v * v, axis=-1))


# --------------------------------------------------------------------------
# grids and zero sets


@dataclass(frozen=True)
class GridSpec2:
    """Rectangular sampling of (xi, eta) space; ranges apply to every axis."""

    xi_range: tuple[float, float]
    eta_range: tuple[float, float]
    h: float
    mode: str = "curve"

    def __post_init__(self):
        if not self.h > 0:
            raise InvalidParameter("grid spacing must be positive")
        for lo, hi in (self.xi_range, self.eta_range):
            if not hi >= lo:
                raise InvalidParameter("empty grid range")
        if self.mode not in ("curve", "band"):
            raise InvalidParameter(f"unknown grid mode {self.mode!r}")

    def axis(self, rng) -> np.ndarray:
        lo, hi = rng
        n = int(np.floor((hi - lo) / self.h + 1e-9)) + 1
        start = lo / self.h
        if abs(start - round(start)) < 1e-9:
            # integer multiples of h keep 0 and symmetric nodes exact
            return (round(start) + np.arange(n)) * self.h
        return lo + self.h * np.arange(n)

    @property
    def xi_axis(self) -> np.ndarray:
        return self.axis(self.xi_range)

    @property
    def eta_axis(self) -> np.ndarray:
        return self.axis(self.eta_range)

    def nodes(self, dim: int):
        """Mesh arrays ``(XI, ETA)``; for ``dim == 2`` each has a trailing axis of 2."""
        xa, ea = self.xi_axis, self.eta_axis
        if dim == 1:
            return np.meshgrid(xa, ea, indexing="ij")
        g = np.meshgrid(xa, xa, ea, ea, indexing="ij")
        return np.stack(g[:2], axis=-1), np.stack(g[2:], axis=-1)


@dataclass
class ZeroSet:
    """Samples near one zero locus.

    ``points`` has shape ``(n, 2 * d)`` with columns ``xi..., eta...``.
    """

    label: str
    points: np.ndarray
    band_tol: float
    dim: int = 1
    segments: np.ndarray | None = None

    @property
    def xi(self) -> np.ndarray:
        return self.points[:, 0] if self.dim == 1 else self.points[:, :2]

    @property
    def eta(self) -> np.ndarray:
        return self.points[:, 1] if self.dim == 1 else self.points[:, 2:]

    def __len__(self) -> int:
        return len(self.points)

    @property
    def empty(self) -> bool:
        return len(self.points) == 0


@dataclass
class ResonantSets:
    phase: Phase
    grid: GridSpec2
    T: ZeroSet
    S: ZeroSet
    R: ZeroSet
    dist_to_R: np.ndarray

    @property
    def dim(self) -> int:
        return self.phase.dim

    def to_csv(self, path) -> None:
        if self.dim == 1:
            header = ["set_label", "xi", "eta"]
        else:
            header = ["set_label", "xi_1", "xi_2", "eta_1", "eta_2"]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for zs in (self.T, self.S, self.R):
                for p in zs.points:
                    w.writerow([zs.label, *(repr(float(v)) for v in p)])


def _snap(v: np.ndarray) -> np.ndarray:
    scale = np.nanmax(np.abs(v)) if np.any(np.isfinite(v)) else 0.0
    tol = 1e-12 * (1.0 + scale)
    return np.where(np.abs(v) <= tol, 0.0, v)


def _contour(xa: np.ndarray, ya: np.ndarray, v: np.ndarray):
    """Zero level of ``v`` on a tensor grid by linear interpolation on cell edges.

    Nodes where ``v`` is exactly zero are emitted as points themselves.  NaN
    nodes break every edge they touch.  Returns ``(points, segments)``.
    """
    nx, ny = v.shape
    X, Y = np.meshgrid(xa, ya, indexing="ij")
    pts = [np.column_stack([X[v == 0], Y[v == 0]])]
    offset = len(pts[0])

    def crossings(v0, v1, x0, y0, x1, y1):
        with np.errstate(invalid="ignore"):
            hit = (v0 * v1) < 0
        t = np.where(hit, v0 / np.where(hit, v0 - v1, 1.0), 0.0)
        px = x0 + t * (x1 - x0)
        py = y0 + t * (y1 - y0)
        return hit, px, py

    # edges along axis 0 (xi varies): shape (nx-1, ny)
    hit_a, pax, pay = crossings(v[:-1], v[1:], X[:-1], Y[:-1], X[1:], Y[1:])
    # edges along axis 1 (eta varies): shape (nx, ny-1)
    hit_b, pbx, pby = crossings(v[:, :-1], v[:, 1:], X[:, :-1], Y[:, :-1], X[:, 1:], Y[:, 1:])

    id_a = np.full(hit_a.shape, -1)
    id_a[hit_a] = offset + np.arange(hit_a.sum())
    offset += hit_a.sum()
    id_b = np.full(hit_b.shape, -1)
    id_b[hit_b] = offset + np.arange(hit_b.sum())
    pts.append(np.column_stack([pax[hit_a], pay[hit_a]]))
    pts.append(np.column_stack([pbx[hit_b], pby[hit_b]]))
    points = np.concatenate(pts, axis=0) if pts else np.zeros((0, 2))

    # per cell (i, j): bottom = a[i, j], top = a[i, j+1], left = b[i, j], right = b[i+1, j]
    bottom, top = id_a[:, :-1], id_a[:, 1:]
    left, right = id_b[:-1, :], id_b[1:, :]
    ids = np.stack([bottom, right, top, left], axis=-1)
    count = (ids >= 0).sum(axis=-1)
    segs = []
    two = count == 2
    if np.any(two):
        sel = ids[two]
        sel = np.sort(sel, axis=-1)[:, 2:]
        segs.append(sel)
    four = np.argwhere(count == 4)
    for ci, cj in four:
        b, r, t, l = ids[ci, cj]
        corners = v[ci:ci + 2, cj:cj + 2]
        centre = corners.mean()
        if np.sign(centre) == np.sign(corners[0, 0]):
            segs.append(np.array([[b, r], [l, t]]))
        else:
            segs.append(np.array([[b, l], [t, r]]))
    segments = np.concatenate(segs, axis=0) if segs else np.zeros((0, 2), dtype=int)
    return points, segments.astype(int)


def _filter(points: np.ndarray, values: np.ndarray, tol: float):
    keep = np.isfinite(values) & (np.abs(values) <= tol)
    return points[keep], keep


def compute_resonant_sets(phase: Phase, grid: GridSpec2, band_tol: float) -> ResonantSets:
    """Sample ``T``, ``S``, ``R`` and the distance-to-``R`` field on ``grid``.

    In curve mode (``d == 1``) ``T`` and ``S`` are the interpolated zero curves
    of ``phi`` and of the signed ``d_eta phi``; ``R`` keeps the ``T`` samples at
    which ``|d_eta phi| <= band_tol``.  In band mode each set is the grid nodes
    where the tracked quantities are at most ``band_tol`` in modulus.  Points
    where a gradient falls inside an exclusion ball never enter ``S`` or ``R``.
    """
    if not band_tol > 0:
        raise InvalidParameter("band_tol must be positive")
    d = phase.dim
    if grid.mode == "curve" and d != 1:
        raise UnsupportedMode("curve mode needs d == 1; use band mode for d == 2")
    XI, ETA = grid.nodes(d)
    phi = _snap(phase.value(XI, ETA))
    g = phase.grad_eta(XI, ETA, strict=False)
    g = _snap(g)
    gnorm = _norm(g, d)

    if grid.mode == "curve":
        xa, ea = grid.xi_axis, grid.eta_axis
        tp, tseg = _contour(xa, ea, phi)
        sp, sseg = _contour(xa, ea, g)
        # stored points must honour the band; interpolation error is O(h^2)
        tvals = phase.value(tp[:, 0], tp[:, 1])
        keep_t = np.abs(tvals) <= band_tol
        svals = phase.grad_eta(sp[:, 0], sp[:, 1], strict=False)
        keep_s = np.isfinite(svals) & (np.abs(svals) <= band_tol)
        tseg = _reindex(tseg, keep_t)
        sseg = _reindex(sseg, keep_s)
        tp, sp = tp[keep_t], sp[keep_s]
        gt = phase.grad_eta(tp[:, 0], tp[:, 1], strict=False)
        rp, _ = _filter(tp, np.abs(gt), band_tol)
        T = ZeroSet("T", tp, band_tol, 1, tseg)
        S = ZeroSet("S", sp, band_tol, 1, sseg)
        R = ZeroSet("R", _unique_rows(rp), band_tol, 1)
        node_coords = np.column_stack([XI.ravel(), ETA.ravel()])
        shape = XI.shape
    else:
        if d == 1:
            node_coords = np.column_stack([XI.ravel(), ETA.ravel()])
            shape = XI.shape
        else:
            node_coords = np.concatenate(
                [XI.reshape(-1, 2), ETA.reshape(-1, 2)], axis=1)
            shape = XI.shape[:-1]
        pf = np.abs(phi).ravel()
        gf = gnorm.ravel()
        in_t = pf <= band_tol
        in_s = np.isfinite(gf) & (gf <= band_tol)
        T = ZeroSet("T", node_coords[in_t], band_tol, d)
        S = ZeroSet("S", node_coords[in_s], band_tol, d)
        R = ZeroSet("R", node_coords[in_t & in_s], band_tol, d)

    if R.empty:
        dist = np.full(shape, DIST_SENTINEL)
    else:
        dist, _ = cKDTree(R.points).query(node_coords)
        dist = dist.reshape(shape)
    return ResonantSets(phase, grid, T, S, R, dist)


def _reindex(segments: np.ndarray, keep: np.ndarray) -> np.ndarray:
    new = np.cumsum(keep) - 1
    ok = keep[segments].all(axis=1) if len(segments) else np.zeros(0, bool)
    return new[segments[ok]] if len(segments) else segments


def _unique_rows(p: np.ndarray) -> np.ndarray:
    if len(p) == 0:
        return p
    return np.unique(p, axis=0)


# --------------------------------------------------------------------------
# projections and separation


class Separation(NamedTuple):
    outcome: np.ndarray
    source: np.ndarray
    separated: bool
    min_distance: float
    note: str


def project_and_separate(sets: ResonantSets, tol: float) -> Separation:
    """Outcome/source projections of ``R`` and the separation verdict.

    Source frequencies are the union of the ``eta`` and ``xi - eta``
    projections of every ``R`` sample.  Empty ``R`` counts as separated.
    """
    R = sets.R
    note = "source = projections of R on eta and on xi - eta (both input slots)"
    if R.empty:
        shape = (0,) if sets.dim == 1 else (0, 2)
        return Separation(np.zeros(shape), np.zeros(shape), True, float("inf"),
                          note + "; R empty, separated vacuously")
    outcome = R.xi
    source = np.concatenate([R.eta, R.xi - R.eta], axis=0)
    o = outcome.reshape(len(outcome), -1)
    s = source.reshape(len(source), -1)
    dmin, _ = cKDTree(s).query(o)
    md = float(np.min(dmin))
    # grid coordinates carry rounding; compare with a few ulps of slack
    slack = 64 * np.finfo(float).eps * max(1.0, float(np.max(np.abs(R.points))))
    return Separation(outcome, source, bool(md > tol + slack), md, note)


# --------------------------------------------------------------------------
# null-form and d_xi phi diagnostics


def _evaluate_symbol(m, XI, ETA):
    if hasattr(m, "evaluate"):
        return m.evaluate(XI, ETA)
    return np.asarray(m(XI, ETA))


def _band_verdict(bands: np.ndarray, sups: np.ndarray) -> tuple[str, float]:
    ok = np.isfinite(sups) & (sups > 0)
    if ok.sum() < 2:
        return "undetermined", float("nan")
    slope = float(np.polyfit(np.log(bands[ok]), np.log(sups[ok]), 1)[0])
    if abs(slope + 1.0) <= 0.2:
        return "divergent like 1/b", slope
    last = sups[ok]
    if last[-1] / last[-2] <= 2.0:
        return "bounded", slope
    return "undetermined", slope


def null_ratio_report(m, phase: Phase, grid: GridSpec2, bands) -> dict:
    """Sup of ``|m / phi|`` and ``|m . g| / |g|**2`` (``g = d_eta phi``) away from each band.

    ``m`` may be a :class:`~resonance_lab.spectral.Symbol2` or a callable
    ``m(xi, eta)``.  A vector-valued ``m`` is dotted with ``g``.
    """
    bands = np.asarray(bands, dtype=float)
    if np.any(bands <= 0) or np.any(np.diff(bands) >= 0):
        raise InvalidParameter("bands must be positive and strictly decreasing")
    d = phase.dim
    XI, ETA = grid.nodes(d)
    phi = phase.value(XI, ETA)
    g = phase.grad_eta(XI, ETA, strict=False)
    mv = _evaluate_symbol(m, XI, ETA)
    gn = _norm(g, d)
    if d == 2 and mv.shape == g.shape:
        num = np.abs(np.sum(mv * g, axis=-1))
    else:
        num = np.abs(mv) * gn
    with np.errstate(divide="ignore", invalid="ignore"):
        r_time = np.abs(mv) / np.abs(phi) if mv.shape == phi.shape else np.full(phi.shape, np.nan)
        r_space = num / gn**2
    sup_t, sup_s = [], []
    for b in bands:
        sel = np.abs(phi) >= b
        sup_t.append(float(np.nanmax(r_time[sel])) if np.any(sel) else float("nan"))
        sel = np.isfinite(gn) & (gn >= b)
        sup_s.append(float(np.nanmax(r_space[sel])) if np.any(sel) else float("nan"))
    sup_t, sup_s = np.array(sup_t), np.array(sup_s)
    vt, st = _band_verdict(bands, sup_t)
    vs, ss = _band_verdict(bands, sup_s)
    return {
        "bands": bands.tolist(),
        "time_ratio_sup": sup_t.tolist(),
        "space_ratio_sup": sup_s.tolist(),
        "time_verdict": vt,
        "time_slope": st,
        "space_verdict": vs,
        "space_slope": ss,
    }


def dxi_zero_containment(phase: Phase, sets: ResonantSets, grid: GridSpec2 | None = None,
                         tol: float = 1e-8) -> dict:
    """Whether ``d_xi phi`` vanishes (to ``tol``) on every sample of ``T``, ``S``, ``R``.

    Samples inside an exclusion ball are skipped and counted.  An empty set
    contains nothing to violate, so its verdict is true.
    """
    d = phase.dim
    out = {}
    for zs in (sets.T, sets.S, sets.R):
        if zs.empty:
            out[f"contains_{zs.label}"] = True
            out[f"max_dxi_{zs.label}"] = 0.0
            out[f"skipped_{zs.label}"] = 0
            continue
        v = _norm(phase.grad_xi(zs.xi, zs.eta, strict=False), d)
        fin = np.isfinite(v)
        dev = float(np.max(v[fin])) if np.any(fin) else 0.0
        out[f"contains_{zs.label}"] = bool(dev <= tol)
        out[f"max_dxi_{zs.label}"] = dev
        out[f"skipped_{zs.label}"] = int((~fin).sum())
    return out


# --------------------------------------------------------------------------
# classification of homogeneous dispersion


@dataclass
class Verdict:
    name: str
    passed: bool
    deviation: float
    tolerance: float
    note: str = ""
    #: a literal claim known to fail; reported but not counted against the report
    expected_failure: bool = False

    def to_dict(self) -> dict:
        return {"name": self.name, "pass": bool(self.passed),
                "deviation": float(self.deviation), "tolerance": float(self.tolerance),
                "note": self.note, "expected_failure": self.expected_failure}


@dataclass
class ClassificationReport:
    alpha: float
    signs: str
    verdicts: list[Verdict] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(v.passed or v.expected_failure for v in self.verdicts)

    def verdict(self, name: str) -> Verdict:
        for v in self.verdicts:
            if v.name == name:
                return v
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "signs": self.signs,
                "verdicts": [v.to_dict() for v in self.verdicts],
                "notes": list(self.notes)}

    def to_json(self, path=None) -> str:
        text = json.dumps(self.to_dict(), indent=2, sort_keys=True)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text


def _nontrivial(zs: ZeroSet, h: float) -> np.ndarray:
    """Mask of samples away from the degenerate lines ``eta = 0`` and ``eta = xi``."""
    if zs.empty:
        return np.zeros(0, bool)
    return np.minimum(np.abs(zs.eta), np.abs(zs.xi - zs.eta)) > 2 * h


def _max_or_zero(v: np.ndarray) -> float:
    return float(np.max(v)) if len(v) else 0.0


def _line_residual(points: np.ndarray) -> float:
    """Max distance of 2-d points from their best line through the origin."""
    if len(points) < 2:
        return 0.0
    _, _, vt = np.linalg.svd(points, full_matrices=False)
    normal = vt[-1]
    return float(np.max(np.abs(points @ normal)))


def classify_homogeneous(alpha: float, signs, grid: GridSpec2,
                         band_tol: float | None = None) -> ClassificationReport:
    """Test the resonant-set claims for ``P = |xi|**alpha`` in one dimension.

    Each claim becomes a named predicate with a numeric deviation.  Claims
    that fail only because ``phi`` vanishes on the lines ``eta = 0`` and
    ``eta = xi`` are re-tested on the nontrivial subset and a discrepancy note
    is recorded.
    """
    eps1, eps2 = parse_signs(signs)
    label = _sign_label(eps1, eps2)
    h = grid.h
    rel = make_dispersion("homogeneous", alpha=alpha, dim=1, grid_spacing=h)
    phase = make_phase(rel, 1, 1, 1, eps1, eps2)
    sets = compute_resonant_sets(phase, grid, band_tol or h)
    rep = ClassificationReport(alpha=float(alpha), signs=label)
    tol = 2 * h

    def add(name, dev, tolerance, note=""):
        v = Verdict(name, bool(dev <= tolerance), dev, tolerance, note)
        rep.verdicts.append(v)
        return v

    def dist0(zs, mask=None):
        p = zs.points if mask is None else zs.points[mask]
        return _max_or_zero(np.hypot(p[:, 0], p[:, 1])) if len(p) else 0.0

    if alpha != 1:
        add("S_is_line_through_origin", _line_residual(sets.S.points), tol,
            "" if len(sets.S) else "S empty")
    else:
        for zs in (sets.T, sets.S, sets.R):
            dev = _max_or_zero(-(zs.xi * zs.eta)) if len(zs) else 0.0
            v = add(f"{zs.label}_positively_colinear", max(dev, 0.0), tol)
            if not v.passed:
                rep.notes.append(
                    f"alpha=1 {label}: {zs.label} contains pairs that are not positively "
                    f"colinear (min xi*eta = {-dev:.3g}); the colinear form fails for this set")
                v.expected_failure = True
                add(f"discrepancy_note_emitted_{zs.label}", 0.0, 0.0, rep.notes[-1])
        if label == "++":
            dev = _max_or_zero(-(sets.T.eta * (sets.T.xi - sets.T.eta))) if len(sets.T) else 0.0
            add("T_wave_cone", max(dev, 0.0), tol)

    if label == "--" or (label == "++" and alpha != 1):
        v = add("T_trivial", dist0(sets.T), tol)
        if not v.passed:
            mask = _nontrivial(sets.T, h)
            v2 = add("T_trivial_off_degenerate_lines", dist0(sets.T, mask), tol)
            rep.notes.append(
                f"alpha={alpha:g} {label}: literal claim T = {{(0,0)}} fails, max distance "
                f"{v.deviation:.3g} from origin; phi vanishes on eta=0 and eta=xi because P(0)=0. "
                f"Restricted to min(|eta|,|xi-eta|) > 2h the claim "
                f"{'holds' if v2.passed else 'still fails'}.")
            v.expected_failure = True
            v.note = "literal reading fails on the degenerate lines; see notes"
            add("discrepancy_note_emitted", 0.0, 0.0, rep.notes[-1])
    if label == "--" and alpha > 1:
        add("R_trivial", dist0(sets.R), tol)
    if label == "+-" and alpha != 1:
        add("R_is_xi_zero", _max_or_zero(np.abs(sets.R.xi)) if len(sets.R) else 0.0, tol,
            "" if len(sets.R) else "R empty")
    if label == "+-" and alpha != 1 and len(sets.R) == 0:
        rep.notes.append(f"alpha={alpha:g} +-: no R samples survived the exclusion balls")
    return rep


# --------------------------------------------------------------------------
# radial form of R


class RadialFit(NamedTuple):
    form: str
    R0: float
    lambda_range: tuple[float, float]


def fit_radial_R(sets: ResonantSets, tol: float) -> RadialFit:
    """Fit ``R`` to ``{|xi| = R0, eta = lambda * xi}``."""
    R = sets.R
    nan = float("nan")
    if R.empty:
        return RadialFit("empty", nan, (nan, nan))
    xi = R.xi.reshape(len(R), -1)
    eta = R.eta.reshape(len(R), -1)
    r = np.sqrt(np.sum(xi * xi, axis=1))
    R0 = float(np.median(r))
    if np.max(np.abs(r - R0)) > tol:
        return RadialFit("other", R0, (nan, nan))
    big = r > tol
    small_ok = np.all(np.sqrt(np.sum(eta[~big] ** 2, axis=1)) <= tol)
    if not np.any(big):
        return RadialFit("sphere_ray" if small_ok else "other", R0, (nan, nan))
    xb, eb, rb = xi[big], eta[big], r[big]
    lam = np.sum(xb * eb, axis=1) / rb**2
    if xi.shape[1] == 2:
        cross = np.abs(xb[:, 0] * eb[:, 1] - xb[:, 1] * eb[:, 0]) / rb
    else:
        cross = np.zeros(len(xb))
    if np.max(cross) > tol or not small_ok:
        return RadialFit("other", R0, (nan, nan))
    return RadialFit("sphere_ray", R0, (float(lam.min()), float(lam.max())))
