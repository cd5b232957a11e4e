"""Profile-form integration of quadratic dispersive systems.

The model is the diagonal system ::

    i d_t u_i + P_i(D) u_i = sum over terms  c * B_m(u_{eps1, j}, u_{eps2, k})

with ``u_+ = u`` and ``u_- = conj(u)``.  The profile ``f = exp(-i t P(D)) u``
is constant for linear solutions, and its Fourier coefficients obey ::

    d_s f_i^(xi) = -i c sum_eta m(xi, eta) exp(-i s phi(xi, eta))
                   * f_{eps1, j}^(eta) * f_{eps2, k}^(xi - eta)

where ``phi = P_i(xi) - eps1 P_j(eta) - eps2 P_k(xi - eta)`` and
``f_-^(eta) = conj(f^(-eta))``.  With this sign of the
linear part the Duhamel integrand oscillates like ``exp(-i s phi)``; every
routine here uses that sign.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_simpson, simpson

from .dispersion import DispersionRelation, DispersionSystem, make_system
from .errors import InvalidParameter, SolverDiverged
from .resonance import Phase, make_phase, parse_signs
from .spectral import (
    Field,
    Grid,
    Symbol2,
    dealias_mask,
    oscillatory_pseudo_product,
)


@dataclass
class QuadraticTerm:
    """One term ``c * B_m(u_{eps1, j}, u_{eps2, k})`` in equation ``target``."""

    target: int = 1
    coeff: complex = 1.0
    signs: tuple[int, int] = (1, 1)
    sources: tuple[int, int] = (1, 1)
    symbol: Symbol2 = field(default_factory=Symbol2.one)

    def __post_init__(self):
        self.signs = parse_signs(self.signs)


def power_term(signs="++", coeff: complex = 1.0, component: int = 1) -> QuadraticTerm:
    """``u^2``, ``conj(u)^2`` or ``u conj(u)`` as a single term with symbol 1."""
    return QuadraticTerm(component, coeff, parse_signs(signs), (component, component), Symbol2.one())


@dataclass
class EvolutionProblem:
    system: DispersionSystem
    grid: Grid
    terms: list[QuadraticTerm] = field(default_factory=list)
    dealias: bool = True

    def __post_init__(self):
        if not isinstance(self.system, DispersionSystem):
            self.system = make_system(self.system)
        if self.system.dim != self.grid.d:
            raise InvalidParameter("system and grid dimensions differ")
        for t in self.terms:
            for idx in (t.target, *t.sources):
                if not 1 <= idx <= self.system.n:
                    raise InvalidParameter(f"term index {idx} outside 1..{self.system.n}")

    @property
    def n(self) -> int:
        return self.system.n

    def phase(self, term: QuadraticTerm) -> Phase:
        return make_phase(self.system, term.target, *term.sources, *term.signs)

    def with_terms(self, terms) -> "EvolutionProblem":
        return EvolutionProblem(self.system, self.grid, list(terms), self.dealias)


@dataclass
class ProfileState:
    """Profile coefficients ``f^`` (shape ``(n, *grid.shape)``, FFT order) at time ``s``."""

    s: float
    fhat: np.ndarray

    def __post_init__(self):
        if not np.all(np.isfinite(self.fhat)):
            raise SolverDiverged(f"non-finite profile at s = {self.s}")


@dataclass
class Trajectory:
    problem: EvolutionProblem
    times: np.ndarray
    profiles: np.ndarray  # (samples, n, *grid.shape)
    dt: float

    def state(self, idx: int) -> ProfileState:
        return ProfileState(float(self.times[idx]), self.profiles[idx])

    def solution(self, idx: int, component: int = 1) -> Field:
        """Physical-space field ``u = exp(i t P(D)) f`` at sample ``idx``."""
        g = self.problem.grid
        rel = self.problem.system.component(component)
        t = self.times[idx]
        return Field(g, "frequency",
                     np.exp(1j * t * rel.symbol(g.k())) * self.profiles[idx, component - 1]
                     ).to_physical()

    def to_csv(self, path) -> None:
        g = self.problem.grid
        k = g.k()
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "component", "k", "re", "im"])
            for q, t in enumerate(self.times):
                for c in range(self.problem.n):
                    vals = self.profiles[q, c].ravel()
                    kk = k.reshape(len(vals), -1)
                    for kv, v in zip(kk, vals):
                        klabel = repr(float(kv[0])) if g.d == 1 else f"{kv[0]!r};{kv[1]!r}"
                        w.writerow([repr(float(t)), c + 1, klabel, repr(v.real), repr(v.imag)])

    def summary_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "component", "L2", "Linf"])
            for q, t in enumerate(self.times):
                for c in range(1, self.problem.n + 1):
                    u = self.solution(q, c).values
                    w.writerow([repr(float(t)), c, repr(float(np.sqrt(np.mean(np.abs(u) ** 2)))),
                                repr(float(np.max(np.abs(u))))])


# --------------------------------------------------------------------------
# basic building blocks


def _as_components(problem: EvolutionProblem, u0) -> np.ndarray:
    if isinstance(u0, Field):
        u0 = [u0]
    if len(u0) != problem.n:
        raise InvalidParameter(f"expected {problem.n} initial fields, got {len(u0)}")
    out = np.empty((problem.n, *problem.grid.shape), complex)
    for c, f in enumerate(u0):
        if f.grid != problem.grid:
            raise InvalidParameter("initial data live on a different grid")
        out[c] = f.to_frequency().values
    return out


def _neg_index(grid: Grid) -> tuple[np.ndarray, ...]:
    idx = np.mod(-grid.modes, grid.N)
    return np.ix_(*([idx] * grid.d))


def conj_slot(fhat: np.ndarray, grid: Grid, eps: int) -> np.ndarray:
    """``f_+^ = f^`` and ``f_-^(eta) = conj(f^(-eta))``."""
    if eps > 0:
        return fhat
    return np.conj(fhat[_neg_index(grid)])


def linear_evolve(rel, u0, t: float):
    """Exact linear flow: multiply coefficients by ``exp(i t P(k))``.

    ``rel`` may be a relation (``u0`` a Field) or a system (``u0`` a list).
    """
    if isinstance(rel, DispersionRelation):
        g = u0.grid
        fr = u0.to_frequency()
        return Field(g, "frequency", np.exp(1j * t * rel.symbol(g.k())) * fr.values)
    return [linear_evolve(r, u, t) for r, u in zip(rel.components, u0)]


def _rhs(problem: EvolutionProblem, s: float, F: np.ndarray, method: str = "auto") -> np.ndarray:
    g = problem.grid
    out = np.zeros_like(F)
    for term in problem.terms:
        j, k = term.sources
        a = Field(g, "frequency", conj_slot(F[j - 1], g, term.signs[0]))
        b = Field(g, "frequency", conj_slot(F[k - 1], g, term.signs[1]))
        q = oscillatory_pseudo_product(term.symbol, problem.phase(term), -s, a, b, method=method)
        out[term.target - 1] += -1j * term.coeff * q.values
    if problem.dealias:
        out = np.where(dealias_mask(g), out, 0)
    return out


def profile_rhs(problem: EvolutionProblem, s: float, fhat: np.ndarray) -> np.ndarray:
    """``d_s f^`` for the profile coefficients ``fhat`` (shape ``(n, *grid.shape)``)."""
    return _rhs(problem, s, fhat)


def _steps(T: float, dt: float) -> tuple[int, float]:
    if not dt > 0:
        raise InvalidParameter(f"dt must be positive, got {dt}")
    if T < 0:
        raise InvalidParameter(f"T must be >= 0, got {T}")
    n = int(round(T / dt))
    if abs(n * dt - T) > 1e-9 * max(T, 1.0):
        n = math.ceil(T / dt)
    n = max(n, 0)
    return n, (T / n if n else dt)


def evolve_profile(problem: EvolutionProblem, u0, T: float, dt: float,
                   stride: int = 1) -> Trajectory:
    """Classical RK4 on the profile coefficients up to time ``T``.

    If ``T / dt`` is not an integer the step is shrunk to ``T / ceil(T / dt)``.
    Every ``stride``-th step (and the final one) is stored.
    """
    n, h = _steps(T, dt)
    F = _as_components(problem, u0)
    times, samples = [0.0], [F.copy()]
    s = 0.0
    for q in range(n):
        k1 = _rhs(problem, s, F)
        k2 = _rhs(problem, s + h / 2, F + h / 2 * k1)
        k3 = _rhs(problem, s + h / 2, F + h / 2 * k2)
        k4 = _rhs(problem, s + h, F + h * k3)
        F = F + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        s = (q + 1) * h
        if not np.all(np.isfinite(F)):
            raise SolverDiverged(f"non-finite profile after step {q + 1} (s = {s:g})")
        if (q + 1) % stride == 0 or q + 1 == n:
            times.append(s)
            samples.append(F.copy())
    return Trajectory(problem, np.array(times), np.array(samples), h)


def duhamel_picard_oracle(problem: EvolutionProblem, u0, t: float, iterations: int,
                          nodes: int = 64) -> ProfileState:
    """Picard iterates of the Duhamel formula, Simpson quadrature with step ``t / nodes``.

    Uses direct lattice summation for the quadratic form, so it shares no code
    path with the RK stepper beyond the symbol evaluation.
    """
    if iterations < 0:
        raise InvalidParameter("iterations must be >= 0")
    F0 = _as_components(problem, u0)
    if iterations == 0 or t == 0:
        return ProfileState(t, F0)
    s = np.linspace(0.0, t, nodes + 1)
    F = np.broadcast_to(F0, (len(s), *F0.shape)).copy()
    for _ in range(iterations):
        Q = np.array([_rhs(problem, sq, F[q], method="direct") for q, sq in enumerate(s)])
        # scipy's cumulative Simpson is real-only
        F = F0 + (cumulative_simpson(Q.real, x=s, axis=0, initial=0)
                  + 1j * cumulative_simpson(Q.imag, x=s, axis=0, initial=0))
    return ProfileState(t, F[-1])


# --------------------------------------------------------------------------
# integration-by-parts identities


@dataclass
class _TermTables:
    """Per-term pair data in (xi, eta) matrix form, centred mode order."""

    term: QuadraticTerm
    W: np.ndarray         # m_reg * m * admissibility mask
    phi: np.ndarray
    xi_idx: np.ndarray    # FFT index of each row's xi
    eta_idx: np.ndarray   # FFT index of each column's eta
    diff_idx: np.ndarray  # FFT index of xi - eta (clipped where invalid)
    valid: np.ndarray


def _term_tables(problem: EvolutionProblem, term: QuadraticTerm, m_reg: Symbol2) -> _TermTables:
    g = problem.grid
    if g.d != 1:
        raise InvalidParameter("integration-by-parts splits are implemented for d == 1")
    N = g.N
    modes = np.sort(g.modes)
    XI, ETA = np.meshgrid(modes, modes, indexing="ij")
    D = XI - ETA
    valid = (D >= -N // 2) & (D <= N // 2 - 1)
    if problem.dealias:
        valid &= (np.abs(XI) <= N / 3)
    xi, eta = XI * g.dk, ETA * g.dk
    W = np.asarray(m_reg.evaluate(xi, eta), dtype=complex) * np.asarray(
        term.symbol.evaluate(xi, eta), dtype=complex)
    W = np.where(valid, W, 0)
    phi = problem.phase(term).value(xi, eta)
    return _TermTables(term, W, phi, np.mod(modes, N), np.mod(modes, N),
                       np.mod(np.clip(D, -N // 2, N // 2 - 1), N), valid)


def _slots(tab: _TermTables, problem: EvolutionProblem, F: np.ndarray):
    """``A(eta)`` as a row vector and ``B(xi - eta)`` as a matrix, centred order."""
    g = problem.grid
    j, k = tab.term.sources
    a = conj_slot(F[j - 1], g, tab.term.signs[0])[tab.eta_idx]
    b = conj_slot(F[k - 1], g, tab.term.signs[1])[tab.diff_idx]
    return a[None, :], np.where(tab.valid, b, 0)


def _to_fft(problem: EvolutionProblem, tab: _TermTables, row_values: np.ndarray) -> np.ndarray:
    out = np.zeros(problem.grid.N, complex)
    out[tab.xi_idx] = row_values
    return out


@dataclass
class NormalFormSplit:
    lhs: np.ndarray
    boundary_t: np.ndarray
    boundary_0: np.ndarray
    remainder: np.ndarray
    residual: float
    phi_min: float

    @property
    def boundary(self) -> np.ndarray:
        return self.boundary_t - self.boundary_0


def _simpson_samples(problem, u0, t0, t, dt):
    """RK4 samples on an even number of uniform steps covering ``[0, t]``."""
    n, h = _steps(t, dt)
    n += n % 2
    traj = evolve_profile(problem, u0, t, t / n)
    keep = traj.times >= t0 - 1e-12
    return traj.times[keep], traj.profiles[keep]


def normal_form_split(problem: EvolutionProblem, u0, t: float, m_reg: Symbol2,
                      phi_min: float | None = None, dt: float | None = None) -> NormalFormSplit:
    """Time integration by parts of the Duhamel term restricted by ``m_reg``.

    Writes ``int_0^t Q(s) ds`` (``Q`` the ``m_reg``-localized integrand) as
    ``boundary_t - boundary_0 + remainder`` using
    ``exp(-i s phi) = d_s exp(-i s phi) / (-i phi)``.  The remainder keeps both
    product-rule terms and is cubic in the data.  All time integrals use
    Simpson's rule on RK4 samples with step ``dt`` (default ``t / 512``).
    """
    if t < 0:
        raise InvalidParameter("t must be >= 0")
    tabs = [_term_tables(problem, term, m_reg) for term in problem.terms]
    on = [np.abs(tb.W) > 0 for tb in tabs]
    phis = [np.abs(tb.phi[o]) for tb, o in zip(tabs, on)]
    mins = [float(p.min()) for p in phis if p.size]
    found = min(mins) if mins else math.inf
    limit = phi_min if phi_min is not None else 1e-8
    if found < limit:
        raise InvalidParameter(
            f"m_reg overlaps the region |phi| < {limit:g} (min |phi| on support = {found:g})")
    N = problem.grid.N
    if t == 0:
        z = np.zeros((problem.n, N), complex)
        return NormalFormSplit(z, z, z, z, 0.0, found)
    times, prof = _simpson_samples(problem, u0, 0.0, t, dt or t / 512)

    def pieces(s, F):
        dF = _rhs(problem, s, F)
        q = np.zeros((problem.n, N), complex)
        bnd = np.zeros_like(q)
        rem = np.zeros_like(q)
        for tb in tabs:
            A, B = _slots(tb, problem, F)
            dA, dB = _slots(tb, problem, dF)
            E = np.exp(-1j * s * tb.phi)
            c = tb.term.coeff
            safe = np.where(tb.W != 0, tb.phi, 1.0)
            i = tb.term.target - 1
            q[i] += _to_fft(problem, tb, np.sum(-1j * c * tb.W * E * A * B, axis=1))
            bnd[i] += _to_fft(problem, tb, np.sum(c * tb.W / safe * E * A * B, axis=1))
            rem[i] += _to_fft(problem, tb, np.sum(
                -c * tb.W / safe * E * (dA * B + A * dB), axis=1))
        return q, bnd, rem

    Q, G, Rm = zip(*(pieces(s, F) for s, F in zip(times, prof)))
    Q, G, Rm = np.array(Q), np.array(G), np.array(Rm)
    lhs = simpson(Q, x=times, axis=0)
    rem = simpson(Rm, x=times, axis=0)
    bt, b0 = G[-1], G[0]
    norm = np.linalg.norm(lhs)
    res = float(np.linalg.norm(lhs - (bt - b0 + rem)) / norm) if norm > 0 else 0.0
    return NormalFormSplit(lhs, bt, b0, rem, res, found)


@dataclass
class VectorFieldSplit:
    lhs: np.ndarray
    transformed_term: np.ndarray
    derivative_term: np.ndarray   # difference falls on f^(eta)
    symmetric_term: np.ndarray    # difference falls on f^(xi - eta)
    weight_term: np.ndarray       # difference falls on the symbol and 1/s weight
    boundary: np.ndarray          # lattice-edge terms of the summation by parts
    residual: float
    decay_ratio: float
    decay_times: tuple[float, float]


def _vf_pieces(problem: EvolutionProblem, tabs, s: float, F: np.ndarray, g_check: bool = True):
    """Direct integrand and its summation-by-parts form at one time ``s``.

    With ``E = exp(-i s phi)`` and the centred difference ``D`` in ``eta``
    (spacing ``k``) the exact identity ``E = rho * D E`` with
    ``rho = E / D E`` turns ``sum_eta Y D E`` into ``-sum_eta (D Y) E`` plus
    two lattice-edge terms.  For small ``s k |d_eta phi|``,
    ``rho ~ i / (s d_eta phi)``, which is the gained ``1/s``.
    """
    g = problem.grid
    kappa = g.dk
    N = g.N
    out = {name: np.zeros((problem.n, N), complex)
           for name in ("q", "dA", "dB", "dZ", "edge")}
    summand_sq = 0.0
    for tb in tabs:
        A, B = _slots(tb, problem, F)
        A = np.broadcast_to(A, tb.W.shape)
        c = tb.term.coeff
        phase = problem.phase(tb.term)
        modes = np.sort(g.modes)
        xi = modes[:, None] * kappa
        eta_ext = np.concatenate([[modes[0] - 1], modes, [modes[-1] + 1]])[None, :] * kappa
        E_ext = np.exp(-1j * s * phase.value(xi, eta_ext))
        E = E_ext[:, 1:-1]
        DE = (E_ext[:, 2:] - E_ext[:, :-2]) / (2 * kappa)
        on = tb.W != 0
        if g_check and np.any(on & (np.abs(DE) < 1e-12)):
            raise InvalidParameter("centred difference of exp(-i s phi) vanishes on the support")
        rho = np.where(on, E / np.where(on, DE, 1.0), 0)
        Z = -1j * c * tb.W * rho

        def pad(M):
            return np.pad(M, ((0, 0), (1, 1)))

        Zp, Ap, Bp = pad(Z), pad(A), pad(B)
        Y = Zp * Ap * Bp
        dA = Zp[:, 2:] * Bp[:, 2:] * (Ap[:, 2:] - Ap[:, :-2]) / (2 * kappa)
        dB = Ap[:, :-2] * Zp[:, 2:] * (Bp[:, 2:] - Bp[:, :-2]) / (2 * kappa)
        dZ = Ap[:, :-2] * Bp[:, :-2] * (Zp[:, 2:] - Zp[:, :-2]) / (2 * kappa)
        edge = (Y[:, -2] * E_ext[:, -1] - Y[:, 1] * E_ext[:, 0]) / (2 * kappa)
        i = tb.term.target - 1
        out["q"][i] += _to_fft(problem, tb, np.sum(-1j * c * tb.W * E * A * B, axis=1))
        out["dA"][i] += _to_fft(problem, tb, -np.sum(dA * E, axis=1))
        out["dB"][i] += _to_fft(problem, tb, -np.sum(dB * E, axis=1))
        out["dZ"][i] += _to_fft(problem, tb, -np.sum(dZ * E, axis=1))
        out["edge"][i] += _to_fft(problem, tb, edge)
        summand_sq += float(np.sum(np.abs(dA + dB + dZ) ** 2))
    return out, math.sqrt(summand_sq)


def _check_space_band(problem, tabs, g_min):
    found = math.inf
    for tb in tabs:
        on = np.abs(tb.W) > 0
        if not np.any(on):
            continue
        g = problem.grid
        modes = np.sort(g.modes)
        XI, ETA = np.meshgrid(modes * g.dk, modes * g.dk, indexing="ij")
        gr = np.abs(problem.phase(tb.term).grad_eta(XI[on], ETA[on], strict=False))
        if np.any(~np.isfinite(gr)):
            raise InvalidParameter("m_reg touches an exclusion ball of d_eta phi")
        found = min(found, float(gr.min()))
    limit = g_min if g_min is not None else 1e-8
    if found < limit:
        raise InvalidParameter(
            f"m_reg overlaps the region |d_eta phi| < {limit:g} (min on support = {found:g})")
    return found


def transformed_integrand_magnitude(problem: EvolutionProblem, u0, s: float,
                                    m_reg: Symbol2) -> float:
    """l2 size over (xi, eta) of the summation-by-parts summand for frozen profiles ``u0``."""
    tabs = [_term_tables(problem, term, m_reg) for term in problem.terms]
    F = _as_components(problem, u0)
    return _vf_pieces(problem, tabs, s, F)[1]


def vector_field_split(problem: EvolutionProblem, u0, t0: float, t: float, m_reg: Symbol2,
                       g_min: float | None = None, dt: float | None = None,
                       decay_times: tuple[float, float] = (2.0, 4.0)) -> VectorFieldSplit:
    """Frequency integration by parts of ``int_{t0}^t`` of the localized Duhamel integrand.

    The transformed term splits exactly into the piece where the difference
    falls on ``f^(eta)``, the symmetric piece on ``f^(xi - eta)`` and the
    piece on the symbol and weight; ``boundary`` holds the lattice-edge terms.
    ``residual`` compares with direct quadrature of the untransformed term.
    ``decay_ratio`` is the transformed-summand size at ``decay_times[1]``
    over that at ``decay_times[0]`` for the frozen initial profile.
    """
    if not t0 > 0:
        raise InvalidParameter("t0 must be positive: the 1/s weight is singular at s = 0")
    if not t > t0:
        raise InvalidParameter("need t > t0")
    tabs = [_term_tables(problem, term, m_reg) for term in problem.terms]
    _check_space_band(problem, tabs, g_min)
    times, prof = _simpson_samples(problem, u0, t0, t, dt or t / 512)
    if len(times) % 2 == 0:
        # Simpson needs an odd number of samples on [t0, t]
        times, prof = times[1:], prof[1:]
        t0 = times[0]
    parts = [_vf_pieces(problem, tabs, s, F)[0] for s, F in zip(times, prof)]

    def integral(name):
        return simpson(np.array([p[name] for p in parts]), x=times, axis=0)

    lhs = integral("q")
    dA, dB, dZ, edge = (integral(nm) for nm in ("dA", "dB", "dZ", "edge"))
    trans = dA + dB + dZ
    norm = np.linalg.norm(lhs)
    res = float(np.linalg.norm(lhs - (trans + edge)) / norm) if norm > 0 else 0.0
    F0 = _as_components(problem, u0)
    m1 = _vf_pieces(problem, tabs, decay_times[0], F0)[1]
    m2 = _vf_pieces(problem, tabs, decay_times[1], F0)[1]
    ratio = m2 / m1 if m1 > 0 else 0.0
    return VectorFieldSplit(lhs, trans, dA, dB, dZ, edge, res, ratio, tuple(decay_times))


# --------------------------------------------------------------------------
# the weighted profile derivative


def lattice_position(grid: Grid) -> np.ndarray:
    """Periodic position ``sin(k x) / k`` (``k`` the lattice spacing) realized by
    a centred frequency difference; close to ``x`` for ``|x|`` small against ``L``."""
    return np.sin(grid.dk * grid.x()) / grid.dk


def weighted_profile_derivative(u: Field, t: float, rel: DispersionRelation) -> Field:
    """``exp(i t P(D)) F^{-1} d_xi (exp(-i t P(xi)) u^(xi))`` with a centred difference in ``xi``.

    Lattice-edge frequencies use one-sided differences.  For data vanishing
    at the lattice edges this equals ``-i (X + t P'(D)) u`` in the sense that
    at ``t = 0`` it is ``-i X u`` with ``X = lattice_position(grid)`` and it
    commutes with the linear flow.
    """
    g = u.grid
    if g.d != 1:
        raise InvalidParameter("weighted_profile_derivative needs a one-dimensional grid")
    k = g.k()
    prof = np.exp(-1j * t * rel.symbol(k)) * u.to_frequency().values
    order = np.argsort(g.modes)
    c = prof[order]
    dc = np.empty_like(c)
    dc[1:-1] = (c[2:] - c[:-2]) / (2 * g.dk)
    dc[0] = (c[1] - c[0]) / g.dk
    dc[-1] = (c[-1] - c[-2]) / g.dk
    out = np.empty_like(prof)
    out[order] = dc
    return Field(g, "frequency", np.exp(1j * t * rel.symbol(k)) * out).to_physical()
