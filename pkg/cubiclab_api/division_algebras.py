"""
Real division algebras R, C, H and O as structure-constant tables

Basis e_0 = 1, e_1 .. e_{d-1} imaginary units. The octonion table follows the
Fano-plane convention e_i e_{i+1} = e_{i+3} (indices 1..7, mod 7); the
quaternions use e_1 e_2 = e_3. Every catalog form built on division
algebras reads its arithmetic from here.
"""

from dataclasses import dataclass
from functools import lru_cache
from typing import List, Tuple

import numpy as np

from cubiclab_api.errors import DimensionMismatchError, InvalidFormError

SUPPORTED_DIMENSIONS = (1, 2, 4, 8)

QUATERNION_TRIPLES: List[Tuple[int, int, int]] = [(1, 2, 3)]

# e_i e_{i+1} = e_{i+3}, indices taken in 1..7
OCTONION_TRIPLES: List[Tuple[int, int, int]] = [
    (i, (i % 7) + 1, ((i + 2) % 7) + 1) for i in range(1, 8)
]


def _check_dimension(d: int):
    if d not in SUPPORTED_DIMENSIONS:
        raise InvalidFormError(f"division algebra dimension must be one of {SUPPORTED_DIMENSIONS}, got {d}")


@lru_cache(maxsize=None)
def structure_constants(d: int) -> np.ndarray:
    """G with e_a e_b = sum_c G[a, b, c] e_c"""
    _check_dimension(d)
    G = np.zeros((d, d, d))
    for a in range(d):
        G[0, a, a] = 1.0
        G[a, 0, a] = 1.0
    for a in range(1, d):
        G[a, a, 0] = -1.0

    triples = {1: [], 2: [], 4: QUATERNION_TRIPLES, 8: OCTONION_TRIPLES}[d]
    for a, b, c in triples:
        for x, y, z in ((a, b, c), (b, c, a), (c, a, b)):
            G[x, y, z] = 1.0
            G[y, x, z] = -1.0
    G.setflags(write=False)
    return G


@lru_cache(maxsize=None)
def real_triple_product(d: int) -> np.ndarray:
    """R with Re((z1 z2) z3) = sum R[a, b, c] z1_a z2_b z3_c"""
    G = structure_constants(d)
    R = np.einsum("abm,mc->abc", G, G[:, :, 0])
    R.setflags(write=False)
    return R


def multiply_arrays(a: np.ndarray, b: np.ndarray, d: int) -> np.ndarray:
    """Product of coordinate arrays; leading axes broadcast"""
    G = structure_constants(d)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape[-1] != d:
        raise DimensionMismatchError(d, a.shape[-1], "left factor")
    if b.shape[-1] != d:
        raise DimensionMismatchError(d, b.shape[-1], "right factor")
    return np.einsum("...a,...b,abc->...c", a, b, G)


def conjugate_arrays(a: np.ndarray) -> np.ndarray:
    out = -np.array(a, dtype=float)
    out[..., 0] *= -1.0
    return out


@dataclass(frozen=True)
class DivisionAlgebraElement:
    """Element of R, C, H or O in the basis 1, e_1, ..."""

    coords: Tuple[float, ...]

    def __post_init__(self):
        _check_dimension(len(self.coords))

    @classmethod
    def from_array(cls, coords) -> "DivisionAlgebraElement":
        return cls(tuple(float(c) for c in np.asarray(coords, dtype=float).ravel()))

    @classmethod
    def unit(cls, d: int, index: int) -> "DivisionAlgebraElement":
        coords = [0.0] * d
        coords[index] = 1.0
        return cls(tuple(coords))

    @property
    def d(self) -> int:
        return len(self.coords)

    def as_array(self) -> np.ndarray:
        return np.array(self.coords)

    @property
    def real(self) -> float:
        return self.coords[0]

    def conjugate(self) -> "DivisionAlgebraElement":
        return DivisionAlgebraElement.from_array(conjugate_arrays(self.as_array()))

    def norm(self) -> float:
        return float(np.linalg.norm(self.coords))

    def __mul__(self, other: "DivisionAlgebraElement") -> "DivisionAlgebraElement":
        return division_multiply(self, other)

    def __add__(self, other: "DivisionAlgebraElement") -> "DivisionAlgebraElement":
        if other.d != self.d:
            raise DimensionMismatchError(self.d, other.d, "summand")
        return DivisionAlgebraElement.from_array(self.as_array() + other.as_array())

    def __neg__(self) -> "DivisionAlgebraElement":
        return DivisionAlgebraElement.from_array(-self.as_array())


def division_multiply(a: DivisionAlgebraElement, b: DivisionAlgebraElement) -> DivisionAlgebraElement:
    """Product ab in the algebra of dimension a.d"""
    if a.d != b.d:
        raise DimensionMismatchError(a.d, b.d, "right factor")
    return DivisionAlgebraElement.from_array(multiply_arrays(a.as_array(), b.as_array(), a.d))
