"""
Named cubic forms, the form-file codec and the selector mini-language

Selectors: cartan:<d>, u5, u5-printed, u9, triality:<d>, spin:<n>,
random:<dim>:<seed>, file:<path>.
"""

import json
import math
from dataclasses import dataclass
from itertools import permutations
from pathlib import Path
from typing import Callable, Dict, Iterable, List, Sequence, Tuple

import numpy as np

from cubiclab_api.cubic_form import CubicForm, Monomial, all_triples
from cubiclab_api.division_algebras import real_triple_product
from cubiclab_api.errors import (
    FormFileError,
    InvalidFormError,
    NotEiconalError,
    SelectorError,
)
from cubiclab_utils.logger import get_logger
from cubiclab_utils.sampling import sphere_points

logger = get_logger(__name__)

SQRT3 = math.sqrt(3.0)

# Coefficients below this are treated as cancellation noise when expanding determinants
_EXPANSION_ZERO = 1e-14


@dataclass
class CatalogEntry:
    """One row of the catalog listing"""

    selector: str
    dim: int
    description: str

    def to_dict(self) -> Dict:
        return {"selector": self.selector, "dim": self.dim, "description": self.description}


# ----------------------------------------------------------------------
# Determinant expansion
# ----------------------------------------------------------------------

def _permutation_sign(perm: Sequence[int]) -> int:
    sign = 1
    perm = list(perm)
    for i in range(len(perm)):
        for j in range(i + 1, len(perm)):
            if perm[i] > perm[j]:
                sign = -sign
    return sign


def _determinant_terms(entries: List[List[Dict[int, float]]]) -> List[Monomial]:
    """Expand det of a 3x3 matrix whose entries are linear forms {var: coeff}"""
    terms: List[Monomial] = []
    for perm in permutations(range(3)):
        sign = _permutation_sign(perm)
        for k0, a0 in entries[0][perm[0]].items():
            for k1, a1 in entries[1][perm[1]].items():
                for k2, a2 in entries[2][perm[2]].items():
                    terms.append(((k0, k1, k2), sign * a0 * a1 * a2))
    return terms


def _clean(form: CubicForm) -> CubicForm:
    scale = max((abs(c) for c in form.coeffs), default=0.0)
    kept = [(t, c) for t, c in form.to_monomials() if abs(c) > _EXPANSION_ZERO * scale]
    return CubicForm.from_monomials(form.dim, kept, label=form.label)


# ----------------------------------------------------------------------
# Catalog forms
# ----------------------------------------------------------------------

def cartan_cubic(d: int) -> CubicForm:
    """Cartan isoparametric cubic on x = (x1, x2, z1, z2, z3), dimension 3d + 2

    u = x1^3 - 3 x1 x2^2 + 3/2 x1 (|z1|^2 + |z2|^2 - 2|z3|^2)
        + 3 sqrt(3)/2 x2 (|z2|^2 - |z1|^2) + 3 sqrt(3) Re(z1 z2 z3)
    """
    if d not in (1, 2, 4, 8):
        raise InvalidFormError(f"Cartan cubic needs d in (1, 2, 4, 8), got {d}")

    z1 = [2 + a for a in range(d)]
    z2 = [2 + d + a for a in range(d)]
    z3 = [2 + 2 * d + a for a in range(d)]

    terms: List[Monomial] = [((0, 0, 0), 1.0), ((0, 1, 1), -3.0)]
    terms += [((0, i, i), 1.5) for i in z1 + z2]
    terms += [((0, i, i), -3.0) for i in z3]
    terms += [((1, i, i), 1.5 * SQRT3) for i in z2]
    terms += [((1, i, i), -1.5 * SQRT3) for i in z1]

    R = real_triple_product(d)
    for a, b, c in zip(*np.nonzero(R)):
        terms.append(((z1[a], z2[b], z3[c]), 3.0 * SQRT3 * R[a, b, c]))

    return CubicForm.from_monomials(3 * d + 2, terms, label=f"cartan:{d}")


def u5_determinant(variant: str = "symmetric") -> CubicForm:
    """det of [[x0/sqrt3 + x1, x2, x3], [*, -2 x0/sqrt3, x4], [x3, x4, x0/sqrt3 - x1]]

    The (2,1) entry * is x1 for the printed matrix and x2 for the symmetric one.
    """
    if variant not in ("printed", "symmetric"):
        raise InvalidFormError(f"unknown u5 variant {variant!r}")
    lower = {1: 1.0} if variant == "printed" else {2: 1.0}
    entries = [
        [{0: 1.0 / SQRT3, 1: 1.0}, {2: 1.0}, {3: 1.0}],
        [lower, {0: -2.0 / SQRT3}, {4: 1.0}],
        [{3: 1.0}, {4: 1.0}, {0: 1.0 / SQRT3, 1: -1.0}],
    ]
    label = "u5" if variant == "symmetric" else "u5-printed"
    return _clean(CubicForm.from_monomials(5, _determinant_terms(entries), label=label))


def det3_form() -> CubicForm:
    """det X for a general 3x3 matrix, X[i, j] stored at index 3i + j"""
    entries = [[{3 * i + j: 1.0} for j in range(3)] for i in range(3)]
    return CubicForm.from_monomials(9, _determinant_terms(entries), label="u9")


def triality_form(d: int) -> CubicForm:
    """Re(z1 z2 z3) on F_d^3, dimension 3d"""
    if d not in (2, 4, 8):
        raise InvalidFormError(f"triality form needs d in (2, 4, 8), got {d}")
    R = real_triple_product(d)
    terms = [((a, d + b, 2 * d + c), R[a, b, c]) for a, b, c in zip(*np.nonzero(R))]
    return CubicForm.from_monomials(3 * d, terms, label=f"triality:{d}")


def spin_factor_form(n: int) -> CubicForm:
    """u(a, v) = a^3/6 + a|v|^2/2; its algebra is the spin factor Jordan algebra"""
    if n < 2:
        raise InvalidFormError(f"spin factor form needs n >= 2, got {n}")
    terms = [((0, 0, 0), 1.0 / 6.0)] + [((0, i, i), 0.5) for i in range(1, n)]
    return CubicForm.from_monomials(n, terms, label=f"spin:{n}")


def random_form(dim: int, seed: int) -> CubicForm:
    """i.i.d. standard normal coefficient per sorted triple, drawn from PCG64(seed)"""
    if dim < 1:
        raise InvalidFormError(f"dimension must be positive, got {dim}")
    triples = all_triples(dim)
    rng = np.random.Generator(np.random.PCG64(seed))
    coeffs = rng.standard_normal(len(triples))
    return CubicForm.from_monomials(dim, zip(triples, coeffs), label=f"random:{dim}:{seed}")


def imaginary_quaternion_embedding(x9) -> np.ndarray:
    """Map a 3x3 matrix (index 3i + j) into (Im H)^3 so that u12 restricts to det"""
    X = np.asarray(x9, dtype=float).reshape(3, 3)
    z = np.zeros((3, 4))
    z[:, 1:] = -X
    return z.ravel()


# ----------------------------------------------------------------------
# Munzner normalization
# ----------------------------------------------------------------------

def munzner_ratios(u: CubicForm, n_samples: int = 1000, seed: int = 0) -> np.ndarray:
    """|grad u|^2 / |x|^4 on seeded unit vectors"""
    X = sphere_points(u.dim, n_samples, seed)
    G = 0.5 * u.square_batch(X)
    return np.einsum("ij,ij->i", G, G)


def normalize_munzner(u: CubicForm, tol: float = 1e-8, n_samples: int = 1000, seed: int = 0) -> Tuple[CubicForm, float]:
    """Rescale u so that |grad u|^2 = 9|x|^4; returns (scaled form, measured kappa)"""
    ratios = munzner_ratios(u, n_samples, seed)
    kappa = float(np.mean(ratios))
    if kappa <= 0.0:
        raise NotEiconalError(f"{u.label or 'form'} has vanishing gradient")
    spread = float(np.max(np.abs(ratios / kappa - 1.0)))
    if spread > tol:
        raise NotEiconalError(
            f"{u.label or 'form'}: |grad u|^2/|x|^4 varies by {spread:.3e} (tolerance {tol:.1e})"
        )
    logger.debug(f"{u.label}: kappa={kappa:.15g}, spread={spread:.2e}")
    return u.scaled(3.0 / math.sqrt(kappa)), kappa


# ----------------------------------------------------------------------
# Form files and selectors
# ----------------------------------------------------------------------

def load_form_file(path) -> CubicForm:
    """Read {"dim": n, "terms": [{"monomial": [i, j, k], "coeff": c}, ...]}"""
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except FileNotFoundError:
        raise FormFileError(f"form file not found: {path}")
    except (OSError, json.JSONDecodeError) as e:
        raise FormFileError(f"cannot read form file {path}: {e}")

    try:
        dim = data["dim"]
        terms = [(tuple(t["monomial"]), t["coeff"]) for t in data["terms"]]
    except (KeyError, TypeError) as e:
        raise FormFileError(f"malformed form file {path}: missing {e}")
    if not isinstance(dim, int) or isinstance(dim, bool):
        raise FormFileError(f"malformed form file {path}: dim must be an integer")
    for triple, coeff in terms:
        if list(triple) != sorted(triple):
            raise FormFileError(f"malformed form file {path}: monomial {list(triple)} is not sorted")
        if not isinstance(coeff, (int, float)) or isinstance(coeff, bool):
            raise FormFileError(f"malformed form file {path}: coefficient {coeff!r} is not a number")

    try:
        return CubicForm.from_monomials(dim, terms, label=f"file:{path}")
    except InvalidFormError as e:
        raise FormFileError(f"malformed form file {path}: {e}")


def save_form_file(u: CubicForm, path):
    data = {
        "dim": u.dim,
        "terms": [{"monomial": list(t), "coeff": c} for t, c in u.to_monomials()],
    }
    with open(path, "w", encoding="utf-8") as f:
        json.dump(data, f, indent=2)


def _int_args(selector: str, parts: Iterable[str]) -> List[int]:
    try:
        return [int(p) for p in parts]
    except ValueError:
        raise SelectorError(f"selector {selector!r} has a non-integer argument")


_FIXED: Dict[str, Callable[[], CubicForm]] = {
    "u5": lambda: u5_determinant("symmetric"),
    "u5-printed": lambda: u5_determinant("printed"),
    "u9": det3_form,
}


def resolve_selector(selector: str) -> CubicForm:
    """Turn a selector string into a form"""
    if selector in _FIXED:
        return _FIXED[selector]()

    kind, _, rest = selector.partition(":")
    if kind == "file" and rest:
        return load_form_file(rest)

    parts = rest.split(":") if rest else []
    try:
        if kind == "cartan" and len(parts) == 1:
            return cartan_cubic(*_int_args(selector, parts))
        if kind == "triality" and len(parts) == 1:
            return triality_form(*_int_args(selector, parts))
        if kind == "spin" and len(parts) == 1:
            return spin_factor_form(*_int_args(selector, parts))
        if kind == "random" and len(parts) == 2:
            return random_form(*_int_args(selector, parts))
    except InvalidFormError as e:
        raise SelectorError(f"selector {selector!r}: {e}")

    raise SelectorError(f"unknown form selector {selector!r}")


def list_catalog() -> List[CatalogEntry]:
    entries = [
        CatalogEntry(f"cartan:{d}", 3 * d + 2, "Cartan isoparametric cubic") for d in (1, 2, 4, 8)
    ]
    entries += [
        CatalogEntry("u5", 5, "determinant on traceless symmetric 3x3 matrices"),
        CatalogEntry("u5-printed", 5, "determinant with the asymmetric (2,1) entry"),
        CatalogEntry("u9", 9, "determinant of a general 3x3 matrix"),
    ]
    entries += [CatalogEntry(f"triality:{d}", 3 * d, "Re(z1 z2 z3)") for d in (2, 4, 8)]
    entries += [
        CatalogEntry("spin:<n>", 0, "spin factor Jordan form a^3/6 + a|v|^2/2"),
        CatalogEntry("random:<dim>:<seed>", 0, "Gaussian coefficients, PCG64 seeded"),
        CatalogEntry("file:<path>", 0, "JSON form file"),
    ]
    return entries
