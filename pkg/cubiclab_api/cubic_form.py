"""
Cubic forms and the commutative algebra V(u) they define

A cubic form is stored as its polynomial coefficients over sorted index
triples i <= j <= k. The fully symmetric trilinear tensor T is derived from
that packed store with the multiplicity table

    distinct a < b < c   ->  T_abc = coeff        (6 permutations)
    a = b < c, a < b = c ->  T     = 2 * coeff    (3 permutations)
    a = b = c            ->  T_aaa = 6 * coeff

so that u(x) = T(x, x, x) / 6 and <xy, z> = T(x, y, z).
"""

import math
from dataclasses import dataclass
from functools import cached_property
from itertools import combinations_with_replacement, permutations
from typing import Dict, Iterable, List, Sequence, Tuple, Union

import numpy as np
from scipy import sparse

from cubiclab_api.errors import DimensionMismatchError, InvalidFormError

# Above this dimension the contraction matrix is kept in CSR form
DENSE_LIMIT = 64

Triple = Tuple[int, int, int]
Monomial = Tuple[Triple, float]
AlgebraElement = np.ndarray


def multiplicity(triple: Sequence[int]) -> int:
    """Factor between a polynomial coefficient and the tensor entry"""
    distinct = len(set(triple))
    return {3: 1, 2: 2, 1: 6}[distinct]


def all_triples(dim: int) -> List[Triple]:
    """Sorted index triples of a dim-dimensional form in lexicographic order"""
    return list(combinations_with_replacement(range(dim), 3))


@dataclass(frozen=True)
class CubicForm:
    """Homogeneous cubic polynomial on R^dim with its algebra structure"""

    dim: int
    triples: Tuple[Triple, ...]
    coeffs: Tuple[float, ...]
    label: str = ""

    def __post_init__(self):
        if not isinstance(self.dim, (int, np.integer)) or self.dim < 1:
            raise InvalidFormError(f"dimension must be a positive integer, got {self.dim!r}")
        if len(self.triples) != len(self.coeffs):
            raise InvalidFormError("triples and coefficients differ in length")
        for triple, coeff in zip(self.triples, self.coeffs):
            if not (0 <= triple[0] <= triple[1] <= triple[2] < self.dim):
                raise InvalidFormError(f"index triple {triple} invalid for dimension {self.dim}")
            if not math.isfinite(coeff):
                raise InvalidFormError(f"non-finite coefficient {coeff} at {triple}")

    # ------------------------------------------------------------------
    # Construction
    # ------------------------------------------------------------------

    @classmethod
    def from_monomials(cls, dim: int, terms: Iterable[Monomial], label: str = "") -> "CubicForm":
        """Build a form from (index triple, coefficient) pairs

        Triples are sorted, duplicates summed and exact zeros dropped.
        """
        if not isinstance(dim, (int, np.integer)) or dim < 1:
            raise InvalidFormError(f"dimension must be a positive integer, got {dim!r}")

        accumulated: Dict[Triple, float] = {}
        for triple, coeff in terms:
            if len(triple) != 3:
                raise InvalidFormError(f"monomial {triple} is not cubic")
            key = tuple(sorted(int(i) for i in triple))
            if key[0] < 0 or key[2] >= dim:
                raise InvalidFormError(f"index triple {tuple(triple)} out of range for dimension {dim}")
            coeff = float(coeff)
            if not math.isfinite(coeff):
                raise InvalidFormError(f"non-finite coefficient {coeff} at {tuple(triple)}")
            accumulated[key] = accumulated.get(key, 0.0) + coeff

        packed = sorted((k, v) for k, v in accumulated.items() if v != 0.0)
        return cls(
            dim=int(dim),
            triples=tuple(k for k, _ in packed),
            coeffs=tuple(v for _, v in packed),
            label=label,
        )

    def to_monomials(self) -> List[Monomial]:
        """Inverse of from_monomials, sorted by index triple"""
        return [(tuple(t), c) for t, c in zip(self.triples, self.coeffs)]

    def scaled(self, factor: float, label: str = None) -> "CubicForm":
        """The form factor * u; its product is factor times the original one"""
        if not math.isfinite(factor):
            raise InvalidFormError(f"non-finite scale factor {factor}")
        if factor == 0.0:
            return CubicForm(self.dim, (), (), label if label is not None else self.label)
        return CubicForm(
            dim=self.dim,
            triples=self.triples,
            coeffs=tuple(factor * c for c in self.coeffs),
            label=label if label is not None else self.label,
        )

    # ------------------------------------------------------------------
    # Derived storage
    # ------------------------------------------------------------------

    @cached_property
    def _packed_indices(self) -> np.ndarray:
        arr = np.array(self.triples, dtype=np.intp).reshape(-1, 3)
        arr.setflags(write=False)
        return arr

    @cached_property
    def _packed_coeffs(self) -> np.ndarray:
        arr = np.array(self.coeffs, dtype=float)
        arr.setflags(write=False)
        return arr

    @cached_property
    def _entries(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Every nonzero tensor entry as (i, j, k, value) over all permutations"""
        rows_i, rows_j, rows_k, values = [], [], [], []
        for triple, coeff in zip(self.triples, self.coeffs):
            value = multiplicity(triple) * coeff
            for i, j, k in set(permutations(triple)):
                rows_i.append(i)
                rows_j.append(j)
                rows_k.append(k)
                values.append(value)
        return (
            np.array(rows_i, dtype=np.intp),
            np.array(rows_j, dtype=np.intp),
            np.array(rows_k, dtype=np.intp),
            np.array(values, dtype=float),
        )

    @cached_property
    def tensor(self) -> np.ndarray:
        """Dense symmetric n x n x n tensor T"""
        n = self.dim
        T = np.zeros((n, n, n))
        i, j, k, values = self._entries
        T[i, j, k] = values
        T.setflags(write=False)
        return T

    @property
    def is_dense(self) -> bool:
        return self.dim <= DENSE_LIMIT

    @cached_property
    def _contraction(self) -> Union[np.ndarray, sparse.csr_matrix]:
        """T reshaped to (n, n*n): row i holds the matrix T[i, :, :]"""
        n = self.dim
        if self.is_dense:
            C = self.tensor.reshape(n, n * n)
            return C
        i, j, k, values = self._entries
        return sparse.csr_matrix((values, (i, k * n + j)), shape=(n, n * n))

    @cached_property
    def tensor_norm(self) -> float:
        """Frobenius norm of T"""
        return float(np.sqrt(np.sum(self._entries[3] ** 2)))

    @property
    def is_zero(self) -> bool:
        return len(self.coeffs) == 0

    # ------------------------------------------------------------------
    # Validation helpers
    # ------------------------------------------------------------------

    def element(self, x, what: str = "element") -> np.ndarray:
        """Coerce x to a float vector of this form's dimension"""
        arr = np.asarray(x, dtype=float)
        if arr.ndim == 0 and self.dim == 1:
            arr = arr.reshape(1)
        if arr.ndim != 1 or arr.shape[0] != self.dim:
            got = arr.shape[-1] if arr.ndim else 0
            raise DimensionMismatchError(self.dim, got, what)
        return arr

    def batch(self, X) -> np.ndarray:
        """Coerce X to an (N, n) float array"""
        arr = np.asarray(X, dtype=float)
        if arr.ndim == 1:
            arr = arr.reshape(1, -1)
        if arr.ndim != 2 or arr.shape[1] != self.dim:
            raise DimensionMismatchError(self.dim, arr.shape[-1] if arr.ndim else 0, "batch")
        return arr

    # ------------------------------------------------------------------
    # Algebra operations
    # ------------------------------------------------------------------

    def evaluate(self, x) -> float:
        """u(x) = T(x, x, x) / 6"""
        x = self.element(x)
        if self.is_zero:
            return 0.0
        return float(np.prod(x[self._packed_indices], axis=-1) @ self._packed_coeffs)

    def evaluate_batch(self, X) -> np.ndarray:
        X = self.batch(X)
        if self.is_zero:
            return np.zeros(X.shape[0])
        return np.prod(X[:, self._packed_indices], axis=-1) @ self._packed_coeffs

    def mult_operator(self, x) -> np.ndarray:
        """Multiplication operator L_x; equals the Hessian of u at x"""
        x = self.element(x)
        n = self.dim
        if self.is_dense:
            L = (x @ self._contraction).reshape(n, n)
        else:
            L = np.asarray(self._contraction.T @ x).reshape(n, n)
        return 0.5 * (L + L.T)

    def mult_operator_batch(self, X) -> np.ndarray:
        """Stack of L_x for the rows of X, shape (N, n, n)"""
        X = self.batch(X)
        n = self.dim
        if self.is_dense:
            flat = X @ self._contraction
        else:
            flat = np.asarray((self._contraction.T @ X.T).T)
        L = flat.reshape(-1, n, n)
        return 0.5 * (L + np.swapaxes(L, 1, 2))

    def multiply(self, x, y) -> np.ndarray:
        """Algebra product xy, defined by <xy, z> = T(x, y, z)"""
        x = self.element(x, "left factor")
        y = self.element(y, "right factor")
        return self.mult_operator(x) @ y

    def square(self, x) -> np.ndarray:
        return self.multiply(x, x)

    def square_batch(self, X) -> np.ndarray:
        X = self.batch(X)
        return np.einsum("nij,nj->ni", self.mult_operator_batch(X), X)

    def polarize(self, x, y, z) -> float:
        """Full linearization u(x, y, z) = T(x, y, z)"""
        z = self.element(z, "third argument")
        return float(self.multiply(x, y) @ z)

    def gradient(self, x) -> np.ndarray:
        """grad u(x) = x^2 / 2"""
        return 0.5 * self.square(x)

    def trace_operator(self, x) -> float:
        """trace L_x, i.e. the Laplacian of u at x"""
        return float(np.trace(self.mult_operator(x)))

    def basis_traces(self) -> np.ndarray:
        """trace L_{e_i} for every basis vector (trace L_x is linear in x)"""
        return np.array([self.trace_operator(e) for e in np.eye(self.dim)])

    def __repr__(self) -> str:
        label = f" {self.label!r}" if self.label else ""
        return f"<CubicForm{label} dim={self.dim} terms={len(self.coeffs)}>"
