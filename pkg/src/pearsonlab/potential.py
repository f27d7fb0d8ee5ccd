"""Sparse bump potentials on the half-line.

A potential is a sum of widely spaced copies of a single smooth bump,
V(x) = sum_n lam_n * W(x - N_n), with the supports [N_n, N_n + 1]
pairwise disjoint so that point evaluation is a binary search.
"""
from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass
from typing import Callable, Sequence

__all__ = [
    "BumpProfile",
    "PearsonPotential",
    "PotentialSpec",
    "HatNSearchError",
    "canonical_bump",
    "zero_potential",
    "evaluate_potential",
    "truncate",
    "geometric_schedule",
    "empirical_hat_N",
    "assert_disjoint_supports",
    "parse_potential_config",
    "format_potential_config",
]


class HatNSearchError(RuntimeError):
    """No trial length satisfied the closeness criterion below the cap."""


def _canonical_profile_value(x: float) -> float:
    if x <= 0.0 or x >= 1.0:
        return 0.0
    return math.exp(4.0 - 1.0 / (x * (1.0 - x)))


@dataclass(frozen=True)
class BumpProfile:
    """A smooth, non-negative bump supported on [0, 1].

    evaluate must vanish outside (0, 1); sup_norm is its maximum value.
    """

    name: str
    evaluate: Callable[[float], float]
    sup_norm: float
    support: tuple[float, float] = (0.0, 1.0)


_CANONICAL = BumpProfile(name="canonical", evaluate=_canonical_profile_value, sup_norm=1.0)


def canonical_bump() -> BumpProfile:
    """The bump exp(4 - 1/(x(1-x))) on (0, 1), zero elsewhere.

    Normalized so the maximum value is exactly 1, attained at x = 1/2.
    """
    return _CANONICAL


@dataclass(frozen=True)
class PearsonPotential:
    """Sum of disjoint bumps lam_n * W(x - N_n) on the half-line.

    centers must be strictly increasing with gaps >= 1 (disjoint
    supports) and the amplitude moduli must be non-increasing from
    index monotone_from onward.
    """

    profile: BumpProfile
    amplitudes: tuple[float, ...]
    centers: tuple[float, ...]
    monotone_from: int = 0

    def __post_init__(self) -> None:
        amps = tuple(float(a) for a in self.amplitudes)
        cents = tuple(float(c) for c in self.centers)
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "centers", cents)
        if len(amps) != len(cents):
            raise ValueError("amplitudes and centers must have equal length")
        for c in cents:
            if c < 0.0:
                raise ValueError("bump centers must lie on the half-line")
        for a, b in zip(cents, cents[1:]):
            if b - a < 1.0:
                raise ValueError(f"bump supports overlap: centers {a} and {b} closer than 1")
        start = max(0, int(self.monotone_from))
        for n in range(start, len(amps) - 1):
            if abs(amps[n + 1]) > abs(amps[n]):
                raise ValueError(
                    f"|amplitude| must be non-increasing from index {start}: "
                    f"|{amps[n + 1]}| > |{amps[n]}| at index {n + 1}"
                )

    @property
    def bump_count(self) -> int:
        return len(self.centers)

    def evaluate(self, x: float) -> float:
        """Potential value at x >= 0; binary search over bump supports."""
        x = float(x)
        if x < 0.0:
            raise ValueError("the potential lives on the half-line, x must be >= 0")
        k = bisect_right(self.centers, x) - 1
        if k >= 0 and x - self.centers[k] <= 1.0:
            return self.amplitudes[k] * self.profile.evaluate(x - self.centers[k])
        return 0.0

    def truncate(self, ell: int) -> "PearsonPotential":
        """Keep only the first ell bumps."""
        ell = int(ell)
        if ell < 0 or ell > self.bump_count:
            raise ValueError(f"truncation level {ell} outside [0, {self.bump_count}]")
        return PearsonPotential(
            profile=self.profile,
            amplitudes=self.amplitudes[:ell],
            centers=self.centers[:ell],
            monotone_from=self.monotone_from,
        )


def zero_potential(profile: BumpProfile | None = None) -> PearsonPotential:
    """The free potential (no bumps)."""
    return PearsonPotential(profile or canonical_bump(), (), ())


def evaluate_potential(V: PearsonPotential, x: float) -> float:
    return V.evaluate(x)


def truncate(V: PearsonPotential, ell: int) -> PearsonPotential:
    return V.truncate(ell)


def geometric_schedule(
    amplitudes: Sequence[float],
    n1: float,
    gamma: float,
    count: int,
    profile: BumpProfile | None = None,
) -> PearsonPotential:
    """Potential with centers N_1 = n1, N_{k+1} = ceil(gamma * N_k).

    The center ratio then satisfies N_k / N_{k+1} <= 1/gamma.
    """
    if gamma <= 1.0:
        raise ValueError("gamma must exceed 1")
    if n1 < 1.0:
        raise ValueError("the first center must be at least 1")
    count = int(count)
    if count < 0:
        raise ValueError("count must be non-negative")
    if len(amplitudes) < count:
        raise ValueError(f"need {count} amplitudes, got {len(amplitudes)}")
    centers = []
    c = float(n1)
    for _ in range(count):
        centers.append(c)
        c = float(math.ceil(gamma * c))
    return PearsonPotential(
        profile or canonical_bump(),
        tuple(float(a) for a in amplitudes[:count]),
        tuple(centers),
    )


def assert_disjoint_supports(V: PearsonPotential) -> None:
    """Scan all support intervals [N_k, N_k + 1] for pairwise overlap."""
    intervals = [(c, c + 1.0) for c in V.centers]
    for (a0, a1), (b0, b1) in zip(intervals, intervals[1:]):
        if b0 < a1:
            raise AssertionError(f"supports [{a0}, {a1}] and [{b0}, {b1}] overlap")


def empirical_hat_N(
    V: PearsonPotential,
    ell: int,
    tolerance: float,
    window: tuple[float, float],
    ab_bound: float,
    *,
    xi_points: int = 17,
    ab_points: int = 5,
    trial_start: float = 8.0,
    trial_ratio: float = 2.0,
    horizon_factor: float = 4.0,
    max_length: float = 16384.0,
    steps: int | None = None,
) -> float:
    """Smallest trial length past which the truncated kernel ratio is sinc-close.

    Scans a geometric grid of trial lengths x and returns the smallest
    one such that, at every grid point in [x, horizon_factor * x], the
    normalized kernel ratio of the ell-bump truncation stays within
    `tolerance` of the sinc target for all xi in `window` (xi_points
    samples) and all real |a|, |b| <= ab_bound (ab_points samples each).
    """
    from .kernel import kappa_ratio, sine_kernel

    if tolerance <= 0.0:
        raise ValueError("tolerance must be positive")
    lo, hi = float(window[0]), float(window[1])
    if not (0.0 < lo <= hi):
        raise ValueError("window must be a subinterval of (0, inf)")
    if ab_bound < 0.0:
        raise ValueError("ab_bound must be non-negative")

    xi_grid = [lo + (hi - lo) * i / (xi_points - 1) for i in range(xi_points)] if xi_points > 1 else [lo]
    ab_grid = (
        [-ab_bound + 2.0 * ab_bound * i / (ab_points - 1) for i in range(ab_points)]
        if ab_points > 1
        else [0.0]
    )

    trials = []
    x = float(trial_start)
    while x <= max_length * (1.0 + 1e-12):
        trials.append(x)
        x *= trial_ratio

    def sup_error(length: float) -> float:
        worst = 0.0
        for xi in xi_grid:
            for a in ab_grid:
                for b in ab_grid:
                    val = kappa_ratio(V, ell, xi, a, b, length, steps=steps)
                    worst = max(worst, abs(val - sine_kernel(xi, a, b)))
        return worst

    errors = [sup_error(t) for t in trials]
    for i, t in enumerate(trials):
        ok = all(
            errors[j] < tolerance
            for j in range(i, len(trials))
            if trials[j] <= horizon_factor * t * (1.0 + 1e-12)
        )
        if ok:
            return t
    raise HatNSearchError(
        f"no trial length up to {max_length} kept the kernel ratio within "
        f"{tolerance} of the sinc target on the requested grids"
    )


# ---------------------------------------------------------------------------
# plain-text potential specifications
#
# Key-value schema (one `key = value` per line, '#' starts a comment):
#
#   profile          = canonical
#   amplitude_rule   = list | power          (power: lam_n = c * n^(-p))
#   amplitude_values = 0.5, 0.25             (list rule)
#   amplitude_c      = 1.0                   (power rule)
#   amplitude_p      = 0.25                  (power rule)
#   center_rule      = list | geometric
#   center_values    = 10, 100               (list rule)
#   center_n1        = 10                    (geometric rule)
#   center_gamma     = 10                    (geometric rule)
#   count            = 12                    (bump count for rule-based specs)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PotentialSpec:
    """Declarative description of a PearsonPotential, serializable as text."""

    profile: str = "canonical"
    amplitude_rule: str = "list"
    amplitude_values: tuple[float, ...] = ()
    amplitude_c: float = 1.0
    amplitude_p: float = 0.25
    center_rule: str = "list"
    center_values: tuple[float, ...] = ()
    center_n1: float = 10.0
    center_gamma: float = 10.0
    count: int = 0

    def build(self) -> PearsonPotential:
        if self.profile != "canonical":
            raise ValueError(f"unknown profile {self.profile!r}")
        profile = canonical_bump()
        if self.amplitude_rule == "list":
            amps = self.amplitude_values
        elif self.amplitude_rule == "power":
            amps = tuple(self.amplitude_c * (n + 1) ** (-self.amplitude_p) for n in range(self.count))
        else:
            raise ValueError(f"unknown amplitude_rule {self.amplitude_rule!r}")
        if self.center_rule == "list":
            if len(self.center_values) != len(amps):
                raise ValueError("amplitude and center lists must have equal length")
            return PearsonPotential(profile, amps, self.center_values)
        if self.center_rule == "geometric":
            return geometric_schedule(amps, self.center_n1, self.center_gamma, len(amps), profile)
        raise ValueError(f"unknown center_rule {self.center_rule!r}")


def _parse_floats(text: str) -> tuple[float, ...]:
    items = [p.strip() for p in text.split(",") if p.strip()]
    return tuple(float(p) for p in items)


def potential_spec_from_mapping(mapping: dict[str, str]) -> PotentialSpec:
    """Build a PotentialSpec from already-parsed key/value pairs."""
    known = {
        "profile", "amplitude_rule", "amplitude_values", "amplitude_c",
        "amplitude_p", "center_rule", "center_values", "center_n1",
        "center_gamma", "count",
    }
    unknown = set(mapping) - known
    if unknown:
        raise ValueError(f"unknown potential keys: {sorted(unknown)}")
    spec = PotentialSpec(
        profile=mapping.get("profile", "canonical"),
        amplitude_rule=mapping.get("amplitude_rule", "list"),
        amplitude_values=_parse_floats(mapping.get("amplitude_values", "")),
        amplitude_c=float(mapping.get("amplitude_c", 1.0)),
        amplitude_p=float(mapping.get("amplitude_p", 0.25)),
        center_rule=mapping.get("center_rule", "list"),
        center_values=_parse_floats(mapping.get("center_values", "")),
        center_n1=float(mapping.get("center_n1", 10.0)),
        center_gamma=float(mapping.get("center_gamma", 10.0)),
        count=int(mapping.get("count", len(_parse_floats(mapping.get("amplitude_values", ""))))),
    )
    spec.build()  # validate eagerly
    return spec


def parse_potential_config(text: str) -> PotentialSpec:
    """Parse the documented key-value schema into a PotentialSpec."""
    mapping: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        mapping[key.strip()] = value.strip()
    return potential_spec_from_mapping(mapping)


def format_potential_config(spec: PotentialSpec) -> str:
    """Serialize a PotentialSpec in the documented key-value schema."""
    lines = [f"profile = {spec.profile}", f"amplitude_rule = {spec.amplitude_rule}"]
    if spec.amplitude_rule == "list":
        lines.append("amplitude_values = " + ", ".join(f"{v:.17g}" for v in spec.amplitude_values))
    else:
        lines.append(f"amplitude_c = {spec.amplitude_c:.17g}")
        lines.append(f"amplitude_p = {spec.amplitude_p:.17g}")
    lines.append(f"center_rule = {spec.center_rule}")
    if spec.center_rule == "list":
        lines.append("center_values = " + ", ".join(f"{v:.17g}" for v in spec.center_values))
    else:
        lines.append(f"center_n1 = {spec.center_n1:.17g}")
        lines.append(f"center_gamma = {spec.center_gamma:.17g}")
    lines.append(f"count = {spec.count}")
    return "\n".join(lines) + "\n"
