"""Continuum Christoffel-Darboux kernels and their clock-scale limits.

The kernel S_L(xi, zeta) = int_0^L u(xi, r) u(zeta, r) dr is computed by
three mutually checking routes: a running integral carried through the
propagation ("quadrature"), the boundary formula for distinct arguments
("cd_formula"), and the diagonal formula through the xi-derivative pair
("accumulated").
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .potential import PearsonPotential
from .propagate import (
    _as_scalar,
    _is_full_bump,
    _partial_samples,
    _profile_samples,
    _rk4_wsystem,
    _steps_or_default,
    extended_neumann,
    free_transfer,
    neumann_solution,
    principal_sqrt,
    segments,
    sinc,
    variation_coeffs,
    vercosc,
)

__all__ = [
    "KernelEvaluation",
    "Kappa",
    "KappaRatioGap",
    "rho",
    "sine_kernel",
    "cd_quadrature",
    "cd_formula",
    "cd_diagonal",
    "kernel_ratio",
    "kappa",
    "kappa_ratio",
    "kappa_ratio_gap",
]

_METHODS = ("quadrature", "cd_formula", "accumulated")

# below this relative argument separation the boundary formula is
# numerically singular and evaluation reroutes
_NEAR_DIAGONAL = 1e-8


@dataclass(frozen=True)
class KernelEvaluation:
    """One kernel value with the route that produced it."""

    xi: complex | float
    zeta: complex | float
    L: float
    value: complex | float
    method: str

    def __post_init__(self) -> None:
        if self.method not in _METHODS:
            raise ValueError(f"unknown method {self.method!r}")


@dataclass(frozen=True)
class Kappa:
    """Normalization (a1_tilde^2 + a2_tilde^2)/2 of the truncated solution."""

    ell: int
    xi: float
    x: float
    value: float

    def __post_init__(self) -> None:
        if not self.value > 0.0:
            raise ValueError("kappa must be strictly positive")


@dataclass(frozen=True)
class KappaRatioGap:
    """Difference of consecutive normalized kernel ratios, with its
    triangle-inequality split into a kernel term and a kappa term."""

    gap: float
    s_term: float
    kappa_term: float


def rho(xi: float) -> float:
    """Limiting eigenvalue density per unit length of the free operator."""
    if xi <= 0.0:
        raise ValueError("the density of states is evaluated on (0, inf)")
    return 1.0 / (2.0 * math.pi * math.sqrt(xi))


def sine_kernel(xi: float, a, b):
    """sinc of the clock-rescaled separation, sin(z)/z at z = (b-a)/(2 sqrt(xi)).

    Equals 1 at a = b (removable singularity, series evaluation near 0).
    """
    xi = float(xi)
    if xi <= 0.0:
        raise ValueError("sine_kernel requires xi > 0")
    z = (b - a) / (2.0 * math.sqrt(xi))
    return sinc(z)


# -- route 1: running integral -------------------------------------------------


def _gap_overlap(u1, d1, w1, u2, d2, w2, delta):
    # closed-form int_0^delta u1(r) u2(r) dr on a free gap, from the
    # states at the gap entrance; product-to-sum trig integrals
    m = (w1 - w2) * delta
    p = (w1 + w2) * delta
    icc = 0.5 * delta * (sinc(m) + sinc(p))
    iss = 0.5 * delta * (sinc(m) - sinc(p))
    isc = 0.5 * delta * (vercosc(p) + vercosc(m))
    ics = 0.5 * delta * (vercosc(p) - vercosc(m))
    return (
        u1 * u2 * icc
        + u1 * (d2 / w2) * ics
        + (d1 / w1) * u2 * isc
        + (d1 / w1) * (d2 / w2) * iss
    )


def _pair_rhs(lam, xi1, xi2):
    def rhs(w, y):
        q1 = lam * w - xi1
        q2 = lam * w - xi2
        return np.array([y[1], q1 * y[0], y[3], q2 * y[2], y[0] * y[2]])

    return rhs


def cd_quadrature(
    V: PearsonPotential, xi, zeta, L: float, *, steps: int | None = None
) -> KernelEvaluation:
    """Kernel by a running integral carried through the propagation.

    Free gaps contribute closed-form trig product integrals; across bumps
    the integral rides along as a fifth RK4 component.
    """
    steps = _steps_or_default(steps)
    if not L > 0.0:
        raise ValueError("the kernel needs L > 0")
    xi = _as_scalar(xi)
    zeta = _as_scalar(zeta)
    w1 = principal_sqrt(xi)
    w2 = principal_sqrt(zeta)
    is_complex = isinstance(xi, complex) or isinstance(zeta, complex)
    dtype = complex if is_complex else float
    u1, d1 = (1.0 + 0.0j, 0.0 + 0.0j) if is_complex else (1.0, 0.0)
    u2, d2 = u1, d1
    acc = 0.0 + 0.0j if is_complex else 0.0
    for seg in segments(V, 0.0, L):
        if seg[0] == "free":
            _, a, b = seg
            acc = acc + _gap_overlap(u1, d1, w1, u2, d2, w2, b - a)
            u1, d1 = free_transfer(xi, a, b).apply(u1, d1)
            u2, d2 = free_transfer(zeta, a, b).apply(u2, d2)
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
            y = np.array([u1, d1, u2, d2, acc], dtype=dtype)
            y = _rk4_wsystem(_pair_rhs(lam, xi, zeta), nodes, mids, h, y)
            u1, d1, u2, d2, acc = y
    value = complex(acc) if is_complex else float(acc)
    return KernelEvaluation(xi, zeta, float(L), value, "quadrature")


# -- route 2: boundary formula -------------------------------------------------


def cd_formula(
    V: PearsonPotential, xi, zeta, L: float, *, steps: int | None = None
) -> KernelEvaluation:
    """Kernel from boundary data, (u(xi)u'(zeta) - u(zeta)u'(xi))/(xi - zeta).

    Arguments closer than the near-diagonal threshold reroute: real pairs
    go through the diagonal route at the midpoint (the returned method
    flags the switch as "accumulated"), complex pairs through the running
    integral ("quadrature").
    """
    if not L > 0.0:
        raise ValueError("the kernel needs L > 0")
    xi = _as_scalar(xi)
    zeta = _as_scalar(zeta)
    if abs(xi - zeta) < _NEAR_DIAGONAL * max(1.0, abs(xi)):
        if isinstance(xi, complex) or isinstance(zeta, complex):
            ev = cd_quadrature(V, xi, zeta, L, steps=steps)
            return KernelEvaluation(xi, zeta, float(L), ev.value, "quadrature")
        mid = 0.5 * (xi + zeta)
        ev = cd_diagonal(V, mid, L, steps=steps)
        return KernelEvaluation(xi, zeta, float(L), ev.value, "accumulated")
    s1 = neumann_solution(V, xi, L, steps=steps)
    s2 = neumann_solution(V, zeta, L, steps=steps)
    value = (s1.u * s2.du - s2.u * s1.du) / (xi - zeta)
    return KernelEvaluation(xi, zeta, float(L), value, "cd_formula")


# -- route 3: diagonal via the xi-derivative pair ------------------------------


def cd_diagonal(
    V: PearsonPotential, xi: float, L: float, *, steps: int | None = None
) -> KernelEvaluation:
    """Diagonal kernel u'(xi,L) du/dxi(xi,L) - du'/dxi(xi,L) u(xi,L)."""
    if not L > 0.0:
        raise ValueError("the kernel needs L > 0")
    xi = _as_scalar(xi)
    if isinstance(xi, complex):
        raise ValueError("the diagonal route is defined for real xi only")
    ext = extended_neumann(V, xi, L, steps=steps)
    value = ext.du * ext.u_xi - ext.du_xi * ext.u
    return KernelEvaluation(xi, xi, float(L), float(value), "accumulated")


@lru_cache(maxsize=4096)
def _diagonal_value(V: PearsonPotential, xi: float, L: float, steps: int | None) -> float:
    return cd_diagonal(V, xi, L, steps=steps).value


# -- normalized ratios ---------------------------------------------------------


def kernel_ratio(
    V: PearsonPotential, xi: float, a, b, L: float, *, steps: int | None = None
):
    """S_L(xi + a/L, xi + b/L) / S_L(xi, xi); a, b may be complex."""
    xi = float(xi)
    if not L > 0.0:
        raise ValueError("the kernel needs L > 0")
    alpha = _as_scalar(xi + a / L)
    beta = _as_scalar(xi + b / L)
    re_a = alpha.real if isinstance(alpha, complex) else alpha
    re_b = beta.real if isinstance(beta, complex) else beta
    if re_a <= 0.0 or re_b <= 0.0:
        raise ValueError("shifted arguments must stay in the right half-plane")
    num = cd_formula(V, alpha, beta, L, steps=steps).value
    den = _diagonal_value(V, xi, float(L), steps)
    return num / den


def kappa(
    V: PearsonPotential, ell: int, xi: float, x: float, *, steps: int | None = None
) -> Kappa:
    """Normalization (a1_tilde^2 + a2_tilde^2)/2 for the ell-bump truncation.

    Constant in x beyond the last kept bump; always strictly positive.
    """
    xi = float(xi)
    if xi <= 0.0:
        raise ValueError("kappa requires xi > 0")
    coeffs = variation_coeffs(V.truncate(ell), xi, x, steps=steps)
    value = 0.5 * (coeffs.a1_tilde**2 + coeffs.a2_tilde**2)
    return Kappa(int(ell), xi, float(x), float(value))


def kappa_ratio(
    V: PearsonPotential, ell: int, xi: float, a, b, x: float, *, steps: int | None = None
):
    """S_x of the truncation at (xi + a/x, xi + b/x), divided by x * kappa.

    Converges to sine_kernel(xi, a, b) as x grows.
    """
    Vt = V.truncate(ell)
    xi = float(xi)
    alpha = _as_scalar(xi + a / x)
    beta = _as_scalar(xi + b / x)
    re_a = alpha.real if isinstance(alpha, complex) else alpha
    re_b = beta.real if isinstance(beta, complex) else beta
    if re_a <= 0.0 or re_b <= 0.0:
        raise ValueError("shifted arguments must stay in the right half-plane")
    num = cd_formula(Vt, alpha, beta, x, steps=steps).value
    den = x * kappa(V, ell, xi, x, steps=steps).value
    return num / den


def kappa_ratio_gap(
    V: PearsonPotential, ell: int, xi: float, a, b, x: float, *, steps: int | None = None
) -> KappaRatioGap:
    """Gap between the normalized ratios at truncation levels ell and ell+1.

    Defined for N_{ell+1} <= x <= N_{ell+2}, where the full potential agrees
    with the (ell+1)-truncation. Also reports the triangle-inequality split:
    s_term bounds the kernel difference at fixed normalization, kappa_term
    the normalization swap; gap <= s_term + kappa_term.
    """
    if ell + 2 > V.bump_count:
        raise ValueError("kappa_ratio_gap needs at least ell + 2 stored bumps")
    lo = V.centers[ell]  # centers are 0-indexed: N_{ell+1} = centers[ell]
    hi = V.centers[ell + 1]
    if not (lo <= x <= hi):
        raise ValueError(f"x = {x} outside the window [{lo}, {hi}]")
    xi = float(xi)
    alpha = _as_scalar(xi + a / x)
    beta = _as_scalar(xi + b / x)

    s_lo = cd_formula(V.truncate(ell), alpha, beta, x, steps=steps).value
    s_hi = cd_formula(V.truncate(ell + 1), alpha, beta, x, steps=steps).value
    k_lo = kappa(V, ell, xi, x, steps=steps).value
    k_hi = kappa(V, ell + 1, xi, x, steps=steps).value

    r_lo = s_lo / (x * k_lo)
    r_hi = s_hi / (x * k_hi)
    gap = abs(r_lo - r_hi)
    s_term = abs(s_lo - s_hi) / (x * k_hi)
    kappa_term = abs(r_lo) * abs(k_hi - k_lo) / k_hi
    return KappaRatioGap(float(gap), float(s_term), float(kappa_term))
