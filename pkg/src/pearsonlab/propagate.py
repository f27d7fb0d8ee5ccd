"""Hybrid propagation of half-line Schrodinger solutions.

Solutions of -u'' + V u = xi u are evolved exactly (closed-form transfer
matrices) across potential-free gaps and by fixed-step classical RK4
across bump supports. Everything here is a pure function of immutable
inputs and bitwise deterministic for a fixed step configuration.
"""
from __future__ import annotations

import cmath
import math
from bisect import bisect_right
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .config import DEFAULTS
from .potential import BumpProfile, PearsonPotential

__all__ = [
    "DeterminantDriftError",
    "SolutionState",
    "TransferMatrix",
    "VariationCoeffs",
    "ExtendedState",
    "principal_sqrt",
    "sinc",
    "vercosc",
    "free_transfer",
    "free_transfer_dxi",
    "bump_transfer",
    "bump_transfer_partial",
    "transfer_to",
    "segments",
    "propagate_to",
    "neumann_solution",
    "dirichlet_solution",
    "variation_coeffs",
    "variation_coeffs_from_state",
    "propagate_extended",
    "extended_neumann",
]

_SERIES_CUT = 1e-4  # |sqrt(xi)*dx| below which trig helpers use series forms


class DeterminantDriftError(RuntimeError):
    """A transfer matrix determinant drifted beyond its budget."""


def principal_sqrt(xi: complex | float) -> complex | float:
    """Principal branch square root; requires Re(xi) > 0."""
    re = xi.real if isinstance(xi, complex) else float(xi)
    if not re > 0.0:
        raise ValueError(f"spectral parameter must have positive real part, got {xi!r}")
    if isinstance(xi, complex) and xi.imag != 0.0:
        return cmath.sqrt(xi)
    return math.sqrt(re)


def _as_scalar(xi) -> complex | float:
    """Normalize numpy scalars and real-valued complex to plain float."""
    z = complex(xi)
    return z if z.imag != 0.0 else z.real


def _cos(z):
    return cmath.cos(z) if isinstance(z, complex) else math.cos(z)


def _sin(z):
    return cmath.sin(z) if isinstance(z, complex) else math.sin(z)


def sinc(z):
    """sin(z)/z with a series form near z = 0."""
    if abs(z) < _SERIES_CUT:
        z2 = z * z
        return 1.0 - z2 / 6.0 + z2 * z2 / 120.0
    return _sin(z) / z


def vercosc(z):
    """(1 - cos z)/z with a series form near z = 0."""
    if abs(z) < _SERIES_CUT:
        z2 = z * z
        return z * (0.5 - z2 / 24.0 + z2 * z2 / 720.0)
    return (1.0 - _cos(z)) / z


def _gcub(z):
    """(z cos z - sin z)/z^3 with a series form near z = 0 (limit -1/3)."""
    if abs(z) < _SERIES_CUT:
        z2 = z * z
        return -1.0 / 3.0 + z2 / 30.0 - z2 * z2 / 840.0
    return (z * _cos(z) - _sin(z)) / (z * z * z)


@dataclass(frozen=True)
class SolutionState:
    """The pair (u, u') at position x."""

    u: complex | float
    du: complex | float
    x: float

    def __post_init__(self) -> None:
        if self.u == 0 and self.du == 0:
            raise ValueError("(u, u') must not both vanish")


@dataclass(frozen=True)
class VariationCoeffs:
    """Coordinates of a solution in the free basis at position x.

    u = a1 * Phi + a2 * Psi with Phi the Dirichlet and Psi the Neumann
    free solution; a1_tilde = a1 / sqrt(xi), a2_tilde = a2.
    """

    a1: complex | float
    a2: complex | float
    a1_tilde: complex | float
    a2_tilde: complex | float
    x: float


@dataclass(frozen=True)
class ExtendedState:
    """(u, u') together with the xi-derivative pair (du/dxi, du'/dxi)."""

    u: float
    du: float
    u_xi: float
    du_xi: float
    x: float


@dataclass(frozen=True)
class TransferMatrix:
    """2x2 matrix mapping (u, u') at from_x to (u, u') at to_x.

    The coefficient matrix of the first-order system is trace free, so
    the determinant must stay at 1; construction enforces a drift budget
    of det_tol_per_unit per unit propagated length (floor one unit).
    """

    entries: np.ndarray
    from_x: float
    to_x: float
    det_budget: float | None = None  # per-unit override; None means the package default

    def __post_init__(self) -> None:
        e = np.asarray(self.entries)
        if e.shape != (2, 2):
            raise ValueError("transfer matrix entries must be 2x2")
        e = e.copy()
        e.setflags(write=False)
        object.__setattr__(self, "entries", e)
        per_unit = self.det_budget if self.det_budget is not None else DEFAULTS.det_tol_per_unit
        budget = per_unit * max(1.0, abs(self.to_x - self.from_x))
        drift = abs(self.det() - 1.0)
        if drift > budget:
            raise DeterminantDriftError(
                f"|det - 1| = {drift:.3e} over [{self.from_x}, {self.to_x}] "
                f"exceeds budget {budget:.3e}"
            )

    def det(self) -> complex | float:
        e = self.entries
        return e[0, 0] * e[1, 1] - e[0, 1] * e[1, 0]

    def inv(self) -> "TransferMatrix":
        e = self.entries
        adj = np.array([[e[1, 1], -e[0, 1]], [-e[1, 0], e[0, 0]]]) / self.det()
        return TransferMatrix(adj, self.to_x, self.from_x, self.det_budget)

    def after(self, other: "TransferMatrix") -> "TransferMatrix":
        """Composition self o other; other acts first."""
        if abs(self.from_x - other.to_x) > 1e-9 * max(1.0, abs(self.from_x)):
            raise ValueError(
                f"matrices are not contiguous: {other.to_x} then {self.from_x}"
            )
        default = DEFAULTS.det_tol_per_unit
        budget = max(self.det_budget or default, other.det_budget or default)
        return TransferMatrix(
            self.entries @ other.entries, other.from_x, self.to_x, budget
        )

    def apply(self, u, du):
        e = self.entries
        return (e[0, 0] * u + e[0, 1] * du, e[1, 0] * u + e[1, 1] * du)


def free_transfer(xi, x0: float, x1: float) -> TransferMatrix:
    """Closed-form transfer across a potential-free stretch [x0, x1]."""
    if x1 < x0:
        raise ValueError("free transfer requires x1 >= x0")
    xi = _as_scalar(xi)
    s = principal_sqrt(xi)
    d = float(x1) - float(x0)
    z = s * d
    c = _cos(z)
    sc = sinc(z)
    dtype = complex if isinstance(z, complex) else float
    entries = np.array([[c, d * sc], [-xi * d * sc, c]], dtype=dtype)
    return TransferMatrix(entries, float(x0), float(x1))


def free_transfer_dxi(xi, x0: float, x1: float) -> np.ndarray:
    """Entrywise d/dxi of the free transfer matrix, in closed form."""
    xi = _as_scalar(xi)
    s = principal_sqrt(xi)
    d = float(x1) - float(x0)
    z = s * d
    sc = sinc(z)
    t11 = -0.5 * d * d * sc
    t12 = 0.5 * d * d * d * _gcub(z)
    t21 = -0.5 * d * (sc + _cos(z))
    dtype = complex if isinstance(z, complex) else float
    return np.array([[t11, t12], [t21, t11]], dtype=dtype)


# -- bump integration -------------------------------------------------------


@lru_cache(maxsize=64)
def _profile_samples(profile: BumpProfile, steps: int):
    h = 1.0 / steps
    nodes = tuple(profile.evaluate(i * h) for i in range(steps + 1))
    mids = tuple(profile.evaluate((i + 0.5) * h) for i in range(steps))
    return nodes, mids


def _partial_samples(profile: BumpProfile, a: float, b: float, steps: int):
    n = max(1, math.ceil(steps * (b - a) - 1e-9))
    h = (b - a) / n
    nodes = tuple(profile.evaluate(a + i * h) for i in range(n + 1))
    mids = tuple(profile.evaluate(a + (i + 0.5) * h) for i in range(n))
    return nodes, mids, h


def _rk4_wsystem(rhs, nodes, mids, h, y):
    """Classical RK4 where the right-hand side depends on x only through W."""
    half = 0.5 * h
    sixth = h / 6.0
    for i in range(len(mids)):
        w0 = nodes[i]
        wm = mids[i]
        w1 = nodes[i + 1]
        k1 = rhs(w0, y)
        k2 = rhs(wm, y + half * k1)
        k3 = rhs(wm, y + half * k2)
        k4 = rhs(w1, y + h * k3)
        y = y + sixth * (k1 + 2.0 * (k2 + k3) + k4)
    return y


def _matrix_rhs(lam, xi):
    def rhs(w, y):
        return np.vstack((y[1], (lam * w - xi) * y[0]))

    return rhs


def _state_rhs(lam, xi):
    def rhs(w, y):
        return np.array([y[1], (lam * w - xi) * y[0]])

    return rhs


def _extended_rhs(lam, xi):
    def rhs(w, y):
        q = lam * w - xi
        return np.array([y[1], q * y[0], y[3], q * y[2] - y[0]])

    return rhs


def _steps_or_default(steps: int | None) -> int:
    n = DEFAULTS.steps_per_bump if steps is None else int(steps)
    if n < 16:
        raise ValueError("bump integration requires at least 16 steps")
    return n


@lru_cache(maxsize=8192)
def _bump_matrix(profile: BumpProfile, lam: float, xi, steps: int) -> np.ndarray:
    nodes, mids = _profile_samples(profile, steps)
    dtype = complex if isinstance(xi, complex) else float
    y = np.eye(2, dtype=dtype)
    out = _rk4_wsystem(_matrix_rhs(lam, xi), nodes, mids, 1.0 / steps, y)
    out.setflags(write=False)
    return out


def _det_budget_for_steps(steps: int) -> float:
    # RK4 determinant drift scales like h^4; coarse step counts get a
    # proportionally looser budget than the default-resolution one
    scale = max(1.0, (DEFAULTS.steps_per_bump / steps) ** 4)
    return DEFAULTS.det_tol_per_unit * scale


def bump_transfer(
    profile: BumpProfile, lam: float, xi, steps: int | None = None
) -> TransferMatrix:
    """Transfer matrix across one bump support, by fixed-step RK4 on [0, 1].

    Solves B' = [[0, 1], [lam*W(x) - xi, 0]] B with B(0) = Id; the columns
    are the Neumann-like and Dirichlet-like basis solutions across the bump.
    Results are cached per (profile, lam, xi, steps).
    """
    steps = _steps_or_default(steps)
    entries = _bump_matrix(profile, float(lam), _as_scalar(xi), steps)
    return TransferMatrix(entries, 0.0, 1.0, _det_budget_for_steps(steps))


def bump_transfer_partial(
    profile: BumpProfile, lam: float, xi, a: float, b: float, steps: int | None = None
) -> TransferMatrix:
    """Transfer across a sub-interval [a, b] of a bump, in local coordinates."""
    steps = _steps_or_default(steps)
    if not (0.0 <= a < b <= 1.0):
        raise ValueError("bump-local interval must satisfy 0 <= a < b <= 1")
    xi = _as_scalar(xi)
    nodes, mids, h = _partial_samples(profile, a, b, steps)
    dtype = complex if isinstance(xi, complex) else float
    y = np.eye(2, dtype=dtype)
    out = _rk4_wsystem(_matrix_rhs(lam, xi), nodes, mids, h, y)
    return TransferMatrix(out, a, b, _det_budget_for_steps(steps))


# -- segment walking --------------------------------------------------------


def segments(V: PearsonPotential, x0: float, x1: float):
    """Partition (x0, x1] into free gaps and bump-support pieces.

    Yields ("free", a, b) and ("bump", a, b, k) tuples in increasing
    order; bump pieces may cover only part of the support [N_k, N_k+1].
    """
    p = float(x0)
    end = float(x1)
    if end < p:
        raise ValueError("segment walk requires x1 >= x0")
    tol = 1e-12 * max(1.0, abs(end))
    out = []
    centers = V.centers
    k = bisect_right(centers, p - 1.0)
    n = len(centers)
    while p < end - tol and k < n:
        c = centers[k]
        if c >= end:
            break
        if p < c - tol:
            out.append(("free", p, c))
            p = c
        b = min(c + 1.0, end)
        if b > p + tol:
            out.append(("bump", max(p, c), b, k))
            p = b
        k += 1
    if p < end - tol:
        out.append(("free", p, end))
    return out


def _is_full_bump(la: float, lb: float) -> bool:
    return la <= 1e-12 and lb >= 1.0 - 1e-12


def propagate_to(
    V: PearsonPotential, xi, target: float, state: SolutionState, *, steps: int | None = None
) -> SolutionState:
    """Evolve (u, u') from state.x to target through gaps and bumps."""
    steps = _steps_or_default(steps)
    if target < state.x:
        raise ValueError("propagation target must not precede the current position")
    xi = _as_scalar(xi)
    u, du = state.u, state.du
    if isinstance(xi, complex):
        u, du = complex(u), complex(du)
    for seg in segments(V, state.x, target):
        if seg[0] == "free":
            _, a, b = seg
            u, du = free_transfer(xi, a, b).apply(u, du)
        else:
            _, a, b, k = seg
            c = V.centers[k]
            lam = V.amplitudes[k]
            la, lb = a - c, b - c
            if _is_full_bump(la, lb):
                u, du = bump_transfer(V.profile, lam, xi, steps).apply(u, du)
            else:
                nodes, mids, h = _partial_samples(V.profile, la, lb, steps)
                dtype = complex if isinstance(xi, complex) else float
                y = np.array([u, du], dtype=dtype)
                y = _rk4_wsystem(_state_rhs(lam, xi), nodes, mids, h, y)
                u, du = y[0], y[1]
    return SolutionState(u, du, float(target))


def neumann_solution(
    V: PearsonPotential, xi, x: float, *, steps: int | None = None
) -> SolutionState:
    """Solution with u(0) = 1, u'(0) = 0 evaluated at x."""
    if x < 0.0:
        raise ValueError("the solution lives on the half-line")
    return propagate_to(V, xi, x, SolutionState(1.0, 0.0, 0.0), steps=steps)


def dirichlet_solution(
    V: PearsonPotential, xi, x: float, *, steps: int | None = None
) -> SolutionState:
    """Solution with u(0) = 0, u'(0) = 1 evaluated at x."""
    if x < 0.0:
        raise ValueError("the solution lives on the half-line")
    return propagate_to(V, xi, x, SolutionState(0.0, 1.0, 0.0), steps=steps)


def transfer_to(
    V: PearsonPotential, xi, x: float, *, steps: int | None = None
) -> TransferMatrix:
    """Full transfer matrix of the potential from 0 to x."""
    steps = _steps_or_default(steps)
    xi = _as_scalar(xi)
    dtype = complex if isinstance(xi, complex) else float
    T = TransferMatrix(np.eye(2, dtype=dtype), 0.0, 0.0)
    for seg in segments(V, 0.0, x):
        if seg[0] == "free":
            _, a, b = seg
            piece = free_transfer(xi, a, b)
        else:
            _, a, b, k = seg
            c = V.centers[k]
            lam = V.amplitudes[k]
            la, lb = a - c, b - c
            if _is_full_bump(la, lb):
                piece = TransferMatrix(
                    _bump_matrix(V.profile, lam, xi, steps), a, b,
                    _det_budget_for_steps(steps),
                )
            else:
                local = bump_transfer_partial(V.profile, lam, xi, la, lb, steps)
                piece = TransferMatrix(local.entries, a, b, local.det_budget)
        T = piece.after(T)
    return T


# -- variation of parameters -------------------------------------------------


def variation_coeffs_from_state(state: SolutionState, xi) -> VariationCoeffs:
    """Free-basis coordinates of a solution from its value pair at state.x.

    Inverts (u, u') = a1 (Phi, Phi') + a2 (Psi, Psi') using the unit
    Wronskian of the free basis; constant in x wherever V vanishes.
    """
    xi = _as_scalar(xi)
    s = principal_sqrt(xi)
    z = s * state.x
    c = _cos(z)
    sn = _sin(z)
    a1 = s * sn * state.u + c * state.du
    a2 = c * state.u - (sn / s) * state.du
    return VariationCoeffs(a1, a2, a1 / s, a2, state.x)


def variation_coeffs(
    V: PearsonPotential, xi, x: float, *, steps: int | None = None
) -> VariationCoeffs:
    """Free-basis coordinates of the Neumann solution at x."""
    return variation_coeffs_from_state(neumann_solution(V, xi, x, steps=steps), xi)


def reconstruct_state(coeffs: VariationCoeffs, xi) -> tuple:
    """(u, u') back from free-basis coordinates; inverse of variation_coeffs."""
    xi = _as_scalar(xi)
    s = principal_sqrt(xi)
    z = s * coeffs.x
    c = _cos(z)
    sn = _sin(z)
    u = coeffs.a1 * (sn / s) + coeffs.a2 * c
    du = coeffs.a1 * c + coeffs.a2 * (-s * sn)
    return u, du


# -- xi-derivative propagation ------------------------------------------------


def propagate_extended(
    V: PearsonPotential, xi, target: float, ext: ExtendedState, *, steps: int | None = None
) -> ExtendedState:
    """Evolve (u, u', du/dxi, du'/dxi) to target for real xi.

    The derivative pair obeys v'' = (V - xi) v - u; across free gaps the
    closed-form xi-derivative of the free transfer matrix is used.
    """
    steps = _steps_or_default(steps)
    xi = _as_scalar(xi)
    if isinstance(xi, complex):
        raise ValueError("extended propagation is defined for real xi only")
    if target < ext.x:
        raise ValueError("propagation target must not precede the current position")
    u, du, v, dv = float(ext.u), float(ext.du), float(ext.u_xi), float(ext.du_xi)
    for seg in segments(V, ext.x, target):
        if seg[0] == "free":
            _, a, b = seg
            T = free_transfer(xi, a, b).entries
            D = free_transfer_dxi(xi, a, b)
            u2 = T[0, 0] * u + T[0, 1] * du
            du2 = T[1, 0] * u + T[1, 1] * du
            v2 = T[0, 0] * v + T[0, 1] * dv + D[0, 0] * u + D[0, 1] * du
            dv2 = T[1, 0] * v + T[1, 1] * dv + D[1, 0] * u + D[1, 1] * du
            u, du, v, dv = u2, du2, v2, dv2
        else:
            _, a, b, k = seg
            c = V.centers[k]
            lam = V.amplitudes[k]
            la, lb = a - c, b - c
            if _is_full_bump(la, lb):
                nodes, mids = _profile_samples(V.profile, steps)
                h = 1.0 / steps
            else:
                nodes, mids, h = _partial_samples(V.profile, la, lb, steps)
            y = np.array([u, du, v, dv], dtype=float)
            y = _rk4_wsystem(_extended_rhs(lam, xi), nodes, mids, h, y)
            u, du, v, dv = y
    return ExtendedState(u, du, v, dv, float(target))


def extended_neumann(
    V: PearsonPotential, xi, x: float, *, steps: int | None = None
) -> ExtendedState:
    """Neumann solution with its xi-derivative pair; boundary data is
    xi-independent, so the derivative pair starts at (0, 0)."""
    start = ExtendedState(1.0, 0.0, 0.0, 0.0, 0.0)
    return propagate_extended(V, xi, x, start, steps=steps)
