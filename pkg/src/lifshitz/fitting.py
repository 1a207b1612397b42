"""The double-logarithmic Lifshitz functional and its least-squares fit."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InsufficientData


@dataclass
class ExponentFit:
    x: list  # ln E
    z: list  # ln(-ln drho)
    slope: float
    intercept: float
    slope_stderr: float
    used: list
    excluded: list = field(default_factory=list)  # (E, drho, reason)

    def to_dict(self):
        return {
            "slope": self.slope, "intercept": self.intercept, "slope_stderr": self.slope_stderr,
            "used": self.used, "excluded": self.excluded,
        }


def lifshitz_functional(E, drho):
    return math.log(-math.log(drho)) / math.log(E)


def fit_lifshitz_exponent(pairs, log=False) -> ExponentFit:
    """Least-squares slope of ``ln(-ln drho)`` against ``ln E``.

    Points with ``drho <= 0`` (unresolved) or ``drho >= 1`` (outside the
    functional's domain) or ``E`` outside ``(0, 1)`` are dropped and reported.
    With ``log=True`` the pairs carry ``ln drho`` instead, which keeps values
    far below the smallest double usable.
    """
    used, excluded = [], []
    for E, d in pairs:
        E, d = float(E), float(d)
        ln_d = d if log else (math.log(d) if d > 0 else -math.inf)
        if not 0 < E < 1:
            excluded.append((E, d, "E outside (0, 1)"))
        elif not ln_d > -math.inf:
            excluded.append((E, d, "unresolved: drho <= 0"))
        elif not ln_d < 0:
            excluded.append((E, d, "drho >= 1: outside the functional's domain"))
        else:
            used.append((E, d, ln_d))
    if len(used) < 2:
        raise InsufficientData(f"need at least 2 valid pairs, got {len(used)}")
    x = np.log([u[0] for u in used])
    z = np.log([-u[2] for u in used])
    used = [(E, d) for E, d, _ in used]
    xm, zm = x.mean(), z.mean()
    sxx = float(np.sum((x - xm) ** 2))
    if sxx == 0:
        raise InsufficientData("all valid pairs share the same E")
    slope = float(np.sum((x - xm) * (z - zm)) / sxx)
    intercept = float(zm - slope * xm)
    m = len(used)
    if m > 2:
        resid = z - (slope * x + intercept)
        se = math.sqrt(float(np.sum(resid**2)) / (m - 2) / sxx)
    else:
        se = math.nan
    return ExponentFit(x.tolist(), z.tolist(), slope, intercept, se, used, excluded)
