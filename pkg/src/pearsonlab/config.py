"""Shared numerical settings."""
from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Settings:
    """Integrator and tolerance knobs used across the package.

    steps_per_bump: fixed RK4 step count across one unit bump support.
    det_tol_per_unit: allowed |det - 1| drift of a transfer matrix,
        per unit of propagated length (floor of one unit).
    root_rel_tol: relative tolerance for eigenvalue refinement; a root
        is accepted once |u'(xi, L)| drops below root_rel_tol times the
        local solution scale sqrt(xi*u^2 + u'^2).
    """

    steps_per_bump: int = 512
    det_tol_per_unit: float = 1e-10
    root_rel_tol: float = 1e-10


DEFAULTS = Settings()
