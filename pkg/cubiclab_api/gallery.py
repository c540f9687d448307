"""
Closed-form counterexamples: the Maz'ya exponent and the Lawson-Osserman map
"""

import math
from dataclasses import dataclass
from typing import Dict

import numpy as np

from cubiclab_api.division_algebras import conjugate_arrays, multiply_arrays
from cubiclab_api.errors import (
    InvalidFormError,
    NegativeRadicandError,
    NotStronglyEllipticError,
    ZeroInputError,
)


@dataclass(frozen=True)
class MazyaParams:
    """Coefficients of the fourth-order operator on R^n"""

    n: int
    kappa: float
    mu: float
    nu: float

    def __post_init__(self):
        if self.n < 2:
            raise ValueError(f"n must be at least 2, got {self.n}")

    @classmethod
    def from_epsilon(cls, n: int, eps: float) -> "MazyaParams":
        """kappa = n(n-2), mu = n^2, nu = (n-2)^2 + eps"""
        return cls(n=n, kappa=float(n * (n - 2)), mu=float(n * n), nu=float((n - 2) ** 2 + eps))

    @property
    def strongly_elliptic(self) -> bool:
        return self.kappa ** 2 < self.mu * self.nu

    def to_dict(self) -> Dict:
        return {"n": self.n, "kappa": self.kappa, "mu": self.mu, "nu": self.nu}


def mazya_exponent(p: MazyaParams) -> float:
    """a = 2 - n/2 + sqrt(n^2/4 - (n-1)(kappa n + mu)/(nu + 2 kappa + mu))

    Only kappa^2 > mu nu is rejected; the boundary case is evaluated.
    """
    if p.kappa ** 2 > p.mu * p.nu:
        raise NotStronglyEllipticError(
            f"kappa^2 = {p.kappa ** 2:g} exceeds mu nu = {p.mu * p.nu:g}"
        )
    denominator = p.nu + 2.0 * p.kappa + p.mu
    if denominator == 0.0:
        raise ValueError("nu + 2 kappa + mu vanishes")
    radicand = p.n ** 2 / 4.0 - (p.n - 1) * (p.kappa * p.n + p.mu) / denominator
    if radicand < 0.0:
        raise NegativeRadicandError(f"radicand {radicand:g} is negative")
    return 2.0 - p.n / 2.0 + math.sqrt(radicand)


def _check_d(d: int):
    if d not in (2, 4, 8):
        raise InvalidFormError(f"Lawson-Osserman map needs d in (2, 4, 8), got {d}")


def hopf_map(x, d: int) -> np.ndarray:
    """eta(z1, z2) = (|z1|^2 - |z2|^2, 2 z1 conj(z2)); rows of x are mapped independently"""
    _check_d(d)
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != 2 * d:
        raise ValueError(f"expected vectors of length {2 * d}, got {x.shape[-1]}")
    z1, z2 = x[..., :d], x[..., d:]
    first = np.sum(z1 * z1, axis=-1) - np.sum(z2 * z2, axis=-1)
    rest = 2.0 * multiply_arrays(z1, conjugate_arrays(z2), d)
    return np.concatenate([first[..., np.newaxis], rest], axis=-1)


def lawson_osserman_prefactor(d: int) -> float:
    _check_d(d)
    return 0.5 * math.sqrt((2 * d + 1) / (d - 1))


def lawson_osserman(x, d: int) -> np.ndarray:
    """w(x) = 1/2 sqrt((2d+1)/(d-1)) eta(x)/|x|"""
    x = np.asarray(x, dtype=float)
    norms = np.linalg.norm(x, axis=-1)
    if np.any(norms == 0.0):
        raise ZeroInputError("Lawson-Osserman map is undefined at the origin")
    return lawson_osserman_prefactor(d) * hopf_map(x, d) / norms[..., np.newaxis]
