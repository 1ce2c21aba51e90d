"""Result containers shared by the solver modules."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# Agreement bound for two independent value computations, relative to
# 1 + |value|.
PATH_TOL = 1e-8


@dataclass
class Certificate:
    """Numerical evidence attached to a verdict.

    Every entry is a plain float (or a pair of floats for ``two_path``) so
    the certificate serialises to JSON unchanged.
    """

    residuals: dict = field(default_factory=dict)
    min_eigenvalues: dict = field(default_factory=dict)
    two_path: dict = field(default_factory=dict)
    margins: dict = field(default_factory=dict)
    verdict: str = "solved"

    def as_dict(self):
        return {
            "verdict": self.verdict,
            "residuals": {k: float(v) for k, v in self.residuals.items()},
            "min_eigenvalues": {k: float(v) for k, v in self.min_eigenvalues.items()},
            "two_path_values": {k: [float(a), float(b)] for k, (a, b) in self.two_path.items()},
            "margins": {k: float(v) for k, v in self.margins.items()},
        }


@dataclass
class PointSolution:
    x: np.ndarray
    value: float
    certificate: Certificate = field(default_factory=Certificate)


@dataclass
class OperatorSolution:
    X: np.ndarray
    value: float
    certificate: Certificate = field(default_factory=Certificate)


def real_value(z, scale=1.0, name="value"):
    """Drop the imaginary rounding residue of a quantity known to be real."""
    z = complex(z)
    if abs(z.imag) > 1e-9 * max(1.0, scale, abs(z.real)):
        raise ArithmeticError(f"{name} has imaginary part {z.imag:.3e}")
    return z.real


def check_paths(v1, v2, name, certificate):
    """Record two value computations and fail loudly if they disagree."""
    from .errors import PathMismatch

    certificate.two_path[name] = (v1, v2)
    if abs(v1 - v2) > PATH_TOL * (1.0 + max(abs(v1), abs(v2))):
        raise PathMismatch(f"{name}: {v1!r} != {v2!r}")
