"""
Peirce decompositions, fusion laws and the eiconal identity suite
"""

from dataclasses import dataclass, field
from enum import Enum
from itertools import combinations_with_replacement, product
from typing import Dict, FrozenSet, List, Optional, Tuple

import numpy as np

from cubiclab_api.cubic_form import CubicForm
from cubiclab_api.errors import (
    MissingEigenspaceError,
    NonEiconalSpectrumError,
    NotIdempotentError,
)
from cubiclab_utils.logger import get_logger
from cubiclab_utils.sampling import normalize_rows, rng_for, sphere_points

logger = get_logger(__name__)

EICONAL_SCALE = 1.0 / 6.0
# Distance at which a cluster center is identified with a law eigenvalue
LAW_MATCH_TOL = 1e-6
DEFAULT_CLUSTER_RTOL = 1e-6
DEFAULT_IDEMPOTENT_TOL = 1e-8


class FusionProfile(Enum):
    EICONAL = "eiconal"
    JORDAN = "jordan"
    FREE = "free"


EICONAL_LAW: Dict[Tuple[float, float], FrozenSet[float]] = {
    (1.0, 1.0): frozenset({1.0}),
    (1.0, 0.5): frozenset({0.5}),
    (1.0, -1.0): frozenset({-1.0}),
    (0.5, 0.5): frozenset({1.0, -1.0}),
    (0.5, -1.0): frozenset({0.5}),
    (-1.0, -1.0): frozenset({1.0}),
}

JORDAN_LAW: Dict[Tuple[float, float], FrozenSet[float]] = {
    (1.0, 1.0): frozenset({1.0}),
    (1.0, 0.5): frozenset({0.5}),
    (1.0, 0.0): frozenset(),
    (0.5, 0.5): frozenset({0.0, 1.0}),
    (0.5, 0.0): frozenset({0.5}),
    (0.0, 0.0): frozenset({0.0}),
}

LAWS = {FusionProfile.EICONAL: EICONAL_LAW, FusionProfile.JORDAN: JORDAN_LAW}


def eiconal_scaled(u: CubicForm) -> CubicForm:
    """The form whose product is one sixth of the Munzner-normalized product"""
    return u.scaled(EICONAL_SCALE, label=f"{u.label}/6" if u.label else "")


# ----------------------------------------------------------------------
# Peirce decomposition
# ----------------------------------------------------------------------

@dataclass
class PeirceCluster:
    center: float
    multiplicity: int
    basis: np.ndarray  # n x multiplicity, orthonormal columns

    def to_dict(self) -> Dict:
        return {"eigenvalue": self.center, "multiplicity": self.multiplicity}


@dataclass
class PeirceDecomposition:
    """Clustered eigen-splitting of L_c, clusters ordered by decreasing eigenvalue"""

    c: np.ndarray
    clusters: List[PeirceCluster]
    cluster_tol: float
    eigenvalues: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def dim(self) -> int:
        return len(self.c)

    def cluster_for(self, value: float, tol: float = LAW_MATCH_TOL) -> Optional[PeirceCluster]:
        for cluster in self.clusters:
            if abs(cluster.center - value) <= tol:
                return cluster
        return None

    def multiplicity(self, value: float, tol: float = LAW_MATCH_TOL) -> int:
        cluster = self.cluster_for(value, tol)
        return cluster.multiplicity if cluster else 0

    def multiplicities(self) -> Dict[float, int]:
        return {cl.center: cl.multiplicity for cl in self.clusters}

    def to_dict(self) -> Dict:
        return {
            "c": self.c.tolist(),
            "cluster_tol": self.cluster_tol,
            "eigenvalues": self.eigenvalues.tolist(),
            "clusters": [cl.to_dict() for cl in self.clusters],
        }


def peirce_decompose(u: CubicForm, c, cluster_tol: Optional[float] = None, idempotent_tol: float = DEFAULT_IDEMPOTENT_TOL,
                     cluster_rtol: float = DEFAULT_CLUSTER_RTOL) -> PeirceDecomposition:
    """Eigendecomposition of L_c with eigenvalues merged within cluster_tol

    cluster_tol defaults to cluster_rtol times the spectral norm of L_c.
    """
    c = u.element(c, "idempotent")
    residual = float(np.linalg.norm(u.square(c) - c))
    if residual > idempotent_tol or not np.any(c):
        raise NotIdempotentError(f"|c^2 - c| = {residual:.3e} exceeds {idempotent_tol:.1e}")

    L = u.mult_operator(c)
    values, vectors = np.linalg.eigh(L)
    if cluster_tol is None:
        cluster_tol = cluster_rtol * float(np.max(np.abs(values)))

    groups: List[List[int]] = [[0]]
    for i in range(1, len(values)):
        if values[i] - values[groups[-1][-1]] <= cluster_tol:
            groups[-1].append(i)
        else:
            groups.append([i])

    clusters = [
        PeirceCluster(
            center=float(np.mean(values[g])),
            multiplicity=len(g),
            basis=vectors[:, g],
        )
        for g in reversed(groups)
    ]
    return PeirceDecomposition(c=c, clusters=clusters, cluster_tol=cluster_tol, eigenvalues=values)


# ----------------------------------------------------------------------
# Fusion laws
# ----------------------------------------------------------------------

@dataclass
class FusionCell:
    lambda1: float
    lambda2: float
    target: Optional[List[float]]
    leakage: float
    n_samples: int
    passed: bool
    skipped: bool = False
    components: Dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> Dict:
        return {
            "lambda1": self.lambda1,
            "lambda2": self.lambda2,
            "target": self.target,
            "leakage": self.leakage,
            "n_samples": self.n_samples,
            "passed": self.passed,
            "skipped": self.skipped,
            "components": self.components,
        }


@dataclass
class FusionReport:
    profile: FusionProfile
    cells: List[FusionCell]
    n_samples: int
    tol: float
    orthogonality_residual: Optional[float] = None

    @property
    def passed(self) -> bool:
        cells_ok = all(cell.passed for cell in self.cells if not cell.skipped)
        orth_ok = self.orthogonality_residual is None or self.orthogonality_residual <= self.tol
        return cells_ok and orth_ok

    @property
    def max_leakage(self) -> float:
        return max((cell.leakage for cell in self.cells if not cell.skipped), default=0.0)

    def to_dict(self) -> Dict:
        return {
            "profile": self.profile.value,
            "n_samples": self.n_samples,
            "tol": self.tol,
            "passed": self.passed,
            "max_leakage": self.max_leakage,
            "orthogonality_residual": self.orthogonality_residual,
            "cells": [cell.to_dict() for cell in self.cells],
        }


def _law_value(center: float, law_values) -> Optional[float]:
    for value in law_values:
        if abs(center - value) <= LAW_MATCH_TOL:
            return value
    return None


def _sample_block(basis: np.ndarray, count: int, rng: np.random.Generator) -> np.ndarray:
    coeffs = rng.standard_normal((count, basis.shape[1]))
    return normalize_rows(coeffs) @ basis.T


def _products(u: CubicForm, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    return np.einsum("nij,nj->ni", u.mult_operator_batch(X), Y)


def fusion_table(
    u: CubicForm,
    decomp: PeirceDecomposition,
    profile="eiconal",
    n_samples: int = 100,
    seed: int = 0,
    tol: float = 1e-9,
) -> FusionReport:
    """Measure how far products of eigenvectors leak out of the prescribed targets"""
    profile = FusionProfile(profile)
    clusters = decomp.clusters
    zero_guard = 1e-12 * max(u.tensor_norm, 1.0)
    cells: List[FusionCell] = []

    law = LAWS.get(profile)
    law_values = sorted({v for pair in law for v in pair}, reverse=True) if law else []
    labels = [_law_value(cl.center, law_values) if law else None for cl in clusters]

    for i, j in combinations_with_replacement(range(len(clusters)), 2):
        a, b = clusters[i], clusters[j]
        rng = rng_for(seed, i, j)
        X = _sample_block(a.basis, n_samples, rng)
        Y = _sample_block(b.basis, n_samples, rng)
        P = _products(u, X, Y)
        sizes = np.linalg.norm(P, axis=1)
        live = sizes > zero_guard

        if profile is FusionProfile.FREE:
            components = {}
            for cl in clusters:
                part = np.linalg.norm(P @ cl.basis, axis=1)
                ratio = np.where(live, part / np.where(live, sizes, 1.0), 0.0)
                components[repr(round(cl.center, 12))] = float(ratio.max())
            cells.append(FusionCell(a.center, b.center, None, 0.0, n_samples, True, components=components))
            continue

        la, lb = labels[i], labels[j]
        if la is not None and lb is not None:
            target_values = sorted(law[tuple(sorted((la, lb), reverse=True))], reverse=True)
        else:
            target_values = []  # off-profile cluster
        target_blocks = [cl.basis for cl, lab in zip(clusters, labels) if lab is not None and lab in target_values]
        if target_blocks:
            B = np.hstack(target_blocks)
            outside = P - (P @ B) @ B.T
        else:
            outside = P
        ratio = np.where(live, np.linalg.norm(outside, axis=1) / np.where(live, sizes, 1.0), 0.0)
        leakage = float(ratio.max())
        cells.append(FusionCell(a.center, b.center, target_values, leakage, n_samples, leakage <= tol))

    if law:
        present = {lab for lab in labels if lab is not None}
        for (la, lb), target in law.items():
            if la not in present or lb not in present:
                cells.append(FusionCell(la, lb, sorted(target, reverse=True), 0.0, 0, True, skipped=True))

    orthogonality = None
    if profile is FusionProfile.EICONAL:
        orthogonality = _orthogonality_residual(u, decomp, n_samples, seed)

    report = FusionReport(profile, cells, n_samples, tol, orthogonality)
    if not report.passed:
        logger.warning(f"fusion profile {profile.value} violated, max leakage {report.max_leakage:.3e}")
    return report


def _orthogonality_residual(u: CubicForm, decomp: PeirceDecomposition, n_samples: int, seed: int) -> Optional[float]:
    """max |<x1 x2, x3>| over unit x_i in V_{l_i}, l_i in {1/2, -1}, l1 + l2 + l3 != 0"""
    blocks = {v: decomp.cluster_for(v) for v in (0.5, -1.0)}
    blocks = {v: cl for v, cl in blocks.items() if cl is not None}
    if not blocks:
        return None
    worst = 0.0
    for index, (l1, l2, l3) in enumerate(product(blocks, repeat=3)):
        if abs(l1 + l2 + l3) <= LAW_MATCH_TOL:
            continue
        rng = rng_for(seed, 1000 + index)
        X1 = _sample_block(blocks[l1].basis, n_samples, rng)
        X2 = _sample_block(blocks[l2].basis, n_samples, rng)
        X3 = _sample_block(blocks[l3].basis, n_samples, rng)
        values = np.einsum("ni,ni->n", _products(u, X1, X2), X3)
        worst = max(worst, float(np.max(np.abs(values))))
    return worst


# ----------------------------------------------------------------------
# Identity suites
# ----------------------------------------------------------------------

@dataclass
class ResidualSummary:
    """Maximum relative residual per identity over seeded samples"""

    residuals: Dict[str, float]
    n_samples: int
    seed: int

    def passed(self, tol: float, keys=None) -> bool:
        keys = keys if keys is not None else self.residuals.keys()
        return all(self.residuals[k] <= tol for k in keys)

    def to_dict(self) -> Dict:
        return {"residuals": dict(self.residuals), "n_samples": self.n_samples, "seed": self.seed}


def _commutator_norm(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    C = A @ B - B @ A
    return np.max(np.abs(C), axis=(-2, -1))


def eiconal_residuals(u: CubicForm, scaling: str = "eiconal", n_samples: int = 1000, seed: int = 0) -> ResidualSummary:
    """Relative residuals of the eiconal identities on unit samples"""
    if scaling not in ("raw", "eiconal"):
        raise ValueError(f"scaling must be 'raw' or 'eiconal', got {scaling!r}")
    v = eiconal_scaled(u) if scaling == "eiconal" else u
    n = v.dim

    X = sphere_points(n, n_samples, seed, 0)
    Y = sphere_points(n, n_samples, seed, 1)
    Z = sphere_points(n, n_samples, seed, 2)

    LX = v.mult_operator_batch(X)
    X2 = np.einsum("nij,nj->ni", LX, X)
    LX2 = v.mult_operator_batch(X2)
    X3 = np.einsum("nij,nj->ni", LX, X2)
    LX_sq = LX @ LX

    norm_identity = np.abs(np.einsum("ni,ni->n", X2, X2) - 1.0)
    cube = np.linalg.norm(X3 - X, axis=1)
    operator = LX2 + 2.0 * LX_sq - np.eye(n) - 2.0 * np.einsum("ni,nj->nij", X, X)
    operator_res = np.max(np.abs(operator), axis=(1, 2))

    def prod(A, B):
        return _products(v, A, B)

    def dot(A, B):
        return np.einsum("ni,ni->n", A, B)[:, None]

    trilinear = (
        prod(X, prod(Y, Z)) + prod(Y, prod(Z, X)) + prod(Z, prod(X, Y))
        - dot(X, Y) * Z - dot(Y, Z) * X - dot(Z, X) * Y
    )

    return ResidualSummary(
        residuals={
            "norm": float(norm_identity.max()),
            "cube": float(cube.max()),
            "operator": float(operator_res.max()),
            "trilinear": float(np.linalg.norm(trilinear, axis=1).max()),
            "near_jordan": float(_commutator_norm(LX2, LX_sq).max()),
            "jordan": float(_commutator_norm(LX, LX2).max()),
        },
        n_samples=n_samples,
        seed=seed,
    )


def munzner_residuals(u: CubicForm, n_samples: int = 1000, seed: int = 0) -> ResidualSummary:
    """Deviation of |grad u|^2 / (9|x|^4) from 1 and the basis-trace harmonicity"""
    X = sphere_points(u.dim, n_samples, seed, 0)
    G = 0.5 * u.square_batch(X)
    ratios = np.einsum("ij,ij->i", G, G) / 9.0
    traces = u.basis_traces()
    return ResidualSummary(
        residuals={
            "munzner": float(np.max(np.abs(ratios - 1.0))),
            "harmonicity": float(np.max(np.abs(traces))),
        },
        n_samples=n_samples,
        seed=seed,
    )


def clifford_check(u: CubicForm, decomp: PeirceDecomposition, n_samples: int = 100, seed: int = 0) -> Dict:
    """L_x^2 = 3/4 |x|^2 on V_{1/2} for x in V_{-1}, and 2L_c^2 + L_c - 1 = 0 on c-perp"""
    minus = decomp.cluster_for(-1.0)
    half = decomp.cluster_for(0.5)
    if minus is None or half is None:
        raise MissingEigenspaceError("Clifford check needs nonempty V_{-1} and V_{1/2}")

    rng = rng_for(seed, 0)
    X = _sample_block(minus.basis, n_samples, rng)
    LX = u.mult_operator_batch(X)
    H = half.basis
    restricted = H.T @ (LX @ LX) @ H
    sq_norms = np.einsum("ni,ni->n", X, X)
    deviation = restricted - 0.75 * sq_norms[:, None, None] * np.eye(H.shape[1])
    clifford = float(np.max(np.abs(deviation)))

    c_hat = decomp.c / np.linalg.norm(decomp.c)
    perp = np.hstack([cl.basis for cl in decomp.clusters if abs(cl.center - 1.0) > LAW_MATCH_TOL])
    L = u.mult_operator(decomp.c)
    quadratic = 2.0 * L @ L + L - np.eye(u.dim) - 2.0 * np.outer(c_hat, c_hat)
    lccc = float(np.max(np.abs(perp.T @ quadratic @ perp))) if perp.size else 0.0

    return {
        "clifford_residual": clifford,
        "lccc_residual": lccc,
        "half_dimension": half.multiplicity,
        "half_dimension_even": half.multiplicity % 2 == 0,
        "n_samples": n_samples,
    }


# ----------------------------------------------------------------------
# Dimensional bounds
# ----------------------------------------------------------------------

def hurwitz_radon(m: int) -> int:
    """rho(m) = 8a + 2^b for m = 2^(4a + b) * odd, 0 <= b <= 3"""
    if m < 1:
        raise ValueError(f"Hurwitz-Radon function needs m >= 1, got {m}")
    k = (m & -m).bit_length() - 1
    a, b = divmod(k, 4)
    return 8 * a + 2 ** b


ADMISSIBLE_HARMONIC_DIMENSIONS = (5, 8, 14, 26)


def dimension_verdict(dim_minus: int, dim_half: int, n: int, harmonic: bool) -> Dict:
    """Clifford-system bound dim V_{-1} - 1 <= rho(dim V_{1/2} / 2), plus the harmonic case"""
    if dim_half % 2 == 1 or dim_half == 0:
        radon_ok = False
        rho = None
    else:
        rho = hurwitz_radon(dim_half // 2)
        radon_ok = dim_minus - 1 <= rho

    verdict = {
        "dim_minus": dim_minus,
        "dim_half": dim_half,
        "dim": n,
        "rho": rho,
        "radon_bound": radon_ok,
        "harmonic": harmonic,
    }
    passed = radon_ok
    if harmonic:
        m = dim_minus - 1
        rho_m = hurwitz_radon(m) if m >= 1 else 0
        verdict.update({
            "m": m,
            "rho_m": rho_m,
            "half_is_2m": dim_half == 2 * m,
            "rho_m_at_least_m": rho_m >= m,
            "dim_admissible": n == 3 * m + 2 and n in ADMISSIBLE_HARMONIC_DIMENSIONS,
        })
        passed = passed and dim_half == 2 * m and rho_m >= m and verdict["dim_admissible"]
    verdict["passed"] = bool(passed)
    return verdict


def dimension_check(decomp: PeirceDecomposition, harmonic: bool) -> Dict:
    for cluster in decomp.clusters:
        if _law_value(cluster.center, (1.0, 0.5, -1.0)) is None:
            raise NonEiconalSpectrumError(f"eigenvalue {cluster.center:.6g} outside {{1, 1/2, -1}}")
    return dimension_verdict(decomp.multiplicity(-1.0), decomp.multiplicity(0.5), decomp.dim, harmonic)
