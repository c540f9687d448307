"""
Idempotent search for the algebra of a cubic form

Two finders are provided: Newton multistart on g(x) = x^2 - x, whose Jacobian
is 2 L_x - I, and projected-gradient ascent of <x^2, x> on the unit sphere.
A stationary point x* of the ascent yields the idempotent x* / <x*^2, x*>
unless x*^2 = 0.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
from scipy.linalg import null_space
from tqdm import tqdm

from cubiclab_api.cubic_form import CubicForm
from cubiclab_api.errors import ConvergenceError, ZeroInputError
from cubiclab_utils.logger import get_logger
from cubiclab_utils.sampling import rng_for

logger = get_logger(__name__)

# Idempotents closer to the origin than this are the trivial root
ZERO_ROOT = 1e-8
# Relative singular value below which 2 L_x - I is treated as singular
SINGULAR_RATIO = 1e-12
EXTREMAL_SLACK = 1e-8
# Start radii, in units of 1 / max|eig L_d|
START_RADIUS = (0.6, 1.6)
EIGEN_ONE_TOL = 1e-8


class Origin(Enum):
    """Which finder produced a record"""
    NEWTON = "newton"
    VARIATIONAL = "variational"


@dataclass
class IdempotentRecord:
    """A located solution of c^2 = c"""

    c: np.ndarray
    residual: float
    origin: Origin
    spectrum: np.ndarray
    primitive: bool = False
    extremal: bool = False
    square_zero_witness: bool = False
    iterations: int = 0

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.c))

    def to_dict(self) -> Dict:
        return {
            "c": self.c.tolist(),
            "norm": self.norm,
            "residual": self.residual,
            "origin": self.origin.value,
            "spectrum": self.spectrum.tolist(),
            "primitive": self.primitive,
            "extremal": self.extremal,
            "square_zero_witness": self.square_zero_witness,
            "iterations": self.iterations,
        }


class IdempotentList(list):
    """Records from a multistart run plus the number of dropped starts"""

    def __init__(self, records=(), n_dropped: int = 0):
        super().__init__(records)
        self.n_dropped = n_dropped


@dataclass
class GenericityEntry:
    index: int
    has_half: bool
    half_multiplicity: int
    min_singular_value: float
    consistent: bool

    def to_dict(self) -> Dict:
        return {
            "index": self.index,
            "has_half": self.has_half,
            "half_multiplicity": self.half_multiplicity,
            "min_singular_value": self.min_singular_value,
            "consistent": self.consistent,
        }


@dataclass
class GenericityReport:
    """Whether any found idempotent carries 1/2 in its Peirce spectrum"""

    entries: List[GenericityEntry] = field(default_factory=list)
    tol: float = 1e-8

    @property
    def generic_evidence(self) -> bool:
        return bool(self.entries) and not any(e.has_half for e in self.entries)

    @property
    def consistent(self) -> bool:
        return all(e.consistent for e in self.entries)

    def to_dict(self) -> Dict:
        return {
            "generic_evidence": self.generic_evidence,
            "consistent": self.consistent,
            "tol": self.tol,
            "records": [e.to_dict() for e in self.entries],
        }


# ----------------------------------------------------------------------
# Spectral classification
# ----------------------------------------------------------------------

def orthogonal_complement_spectrum(L: np.ndarray, c: np.ndarray) -> np.ndarray:
    """Eigenvalues of L restricted to the orthogonal complement of c"""
    B = null_space(c.reshape(1, -1))
    if B.shape[1] == 0:
        return np.zeros(0)
    return np.linalg.eigvalsh(B.T @ L @ B)


def classify(u: CubicForm, c: np.ndarray, residual: float, origin: Origin, iterations: int = 0) -> IdempotentRecord:
    L = u.mult_operator(c)
    spectrum = np.linalg.eigvalsh(L)
    complement = orthogonal_complement_spectrum(L, c)
    return IdempotentRecord(
        c=c,
        residual=residual,
        origin=origin,
        spectrum=spectrum,
        primitive=int(np.sum(np.abs(spectrum - 1.0) <= EIGEN_ONE_TOL)) == 1,
        extremal=bool(complement.size == 0 or complement.max() <= 0.5 + EXTREMAL_SLACK),
        iterations=iterations,
    )


# ----------------------------------------------------------------------
# Newton
# ----------------------------------------------------------------------

def newton_refine(u: CubicForm, x0: np.ndarray, tol: float, max_iter: int) -> Optional[Tuple[np.ndarray, float, int]]:
    """Newton on g(x) = x^2 - x; returns (x, residual, iterations) or None"""
    x = np.array(x0, dtype=float)
    n = u.dim
    identity = np.eye(n)

    for iteration in range(max_iter + 1):
        L = u.mult_operator(x)
        g = L @ x - x
        residual = float(np.linalg.norm(g))
        if not np.isfinite(residual):
            return None
        if residual <= tol:
            return x, residual, iteration
        if iteration == max_iter:
            break

        J = 2.0 * L - identity
        sigma = np.linalg.svd(J, compute_uv=False)
        if sigma[-1] > SINGULAR_RATIO * sigma[0]:
            x = x + np.linalg.solve(J, -g)
            continue

        # Near-singular Jacobian: least-squares step with backtracking
        step = np.linalg.lstsq(J, -g, rcond=1e-10)[0]
        t = 1.0
        while t > 1e-4:
            trial = x + t * step
            if np.linalg.norm(u.square(trial) - trial) < residual:
                break
            t *= 0.5
        x = x + t * step

    return None


def _newton_start(u: CubicForm, seed: int, index: int, tol: float, max_iter: int):
    rng = rng_for(seed, index)
    direction = rng.standard_normal(u.dim)
    direction /= np.linalg.norm(direction)
    spread = float(np.max(np.abs(np.linalg.eigvalsh(u.mult_operator(direction)))))
    # idempotents along a ray d sit near |c| ~ 1 / |L_d|
    radius = rng.uniform(START_RADIUS[0], START_RADIUS[1])
    x0 = direction * (radius / spread if spread > 0.0 else radius)
    return newton_refine(u, x0, tol, max_iter)


def deduplicate(records: List[IdempotentRecord], radius: float) -> List[IdempotentRecord]:
    """Sort by (residual, coordinates) and keep the first of each cluster"""
    ordered = sorted(records, key=lambda r: (r.residual, tuple(r.c)))
    kept: List[IdempotentRecord] = []
    for record in ordered:
        if all(np.linalg.norm(record.c - k.c) > radius for k in kept):
            kept.append(record)
    return kept


def newton_search(
    u: CubicForm,
    n_starts: int = 64,
    seed: int = 0,
    tol: float = 1e-12,
    max_iter: int = 100,
    workers: int = 1,
    progress: bool = False,
) -> IdempotentList:
    """Multistart Newton search for nonzero idempotents"""
    if n_starts < 1:
        raise ValueError("n_starts must be at least 1")
    if tol <= 0:
        raise ValueError("tol must be positive")

    if u.is_zero:
        logger.info(f"{u.label or 'form'} is the zero algebra; no idempotents")
        return IdempotentList([], n_dropped=0)

    def task(index: int):
        return _newton_start(u, seed, index, tol, max_iter)

    indices = range(n_starts)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            outcomes = list(tqdm(executor.map(task, indices), total=n_starts, disable=not progress, desc="newton"))
    else:
        outcomes = [task(i) for i in tqdm(indices, disable=not progress, desc="newton")]

    dropped = 0
    found: List[IdempotentRecord] = []
    for index, outcome in enumerate(outcomes):
        if outcome is None:
            dropped += 1
            logger.debug(f"start {index} did not converge")
            continue
        x, residual, iterations = outcome
        if np.linalg.norm(x) <= ZERO_ROOT:
            continue
        found.append(classify(u, x, residual, Origin.NEWTON, iterations))

    records = deduplicate(found, 10.0 * tol)
    logger.info(f"found {len(records)} idempotents, {dropped} starts dropped")
    return IdempotentList(records, n_dropped=dropped)


# ----------------------------------------------------------------------
# Variational ascent
# ----------------------------------------------------------------------

def variational_search(
    u: CubicForm,
    x0,
    tol: float = 1e-12,
    max_iter: int = 10000,
    ascent_tol: float = 1e-7,
    progress_callback: Optional[Callable[[int, np.ndarray, float], None]] = None,
) -> IdempotentRecord:
    """Projected-gradient ascent of <x^2, x> on the unit sphere"""
    x = u.element(x0, "start")
    norm = np.linalg.norm(x)
    if norm == 0.0:
        raise ZeroInputError("variational search needs a nonzero start")
    x = x / norm

    square = u.square(x)
    objective = float(square @ x)
    step = 1.0 / (u.tensor_norm + 1.0)

    for iteration in range(max_iter):
        gradient = 3.0 * (square - objective * x)
        gnorm = float(np.linalg.norm(gradient))
        if progress_callback is not None:
            progress_callback(iteration, x, objective)

        if float(np.linalg.norm(square)) <= tol:
            logger.debug(f"square-zero stationary point after {iteration} iterations")
            return IdempotentRecord(
                c=x,
                residual=float(np.linalg.norm(square)),
                origin=Origin.VARIATIONAL,
                spectrum=np.linalg.eigvalsh(u.mult_operator(x)),
                square_zero_witness=True,
                iterations=iteration,
            )

        if gnorm <= ascent_tol * max(objective * objective, 1e-300) * 3.0 or gnorm <= tol:
            return _finish_variational(u, x, objective, tol, iteration)

        # Armijo backtracking on the retraction x -> (x + t g)/|x + t g|
        t = 2.0 * step
        while True:
            trial = x + t * gradient
            trial /= np.linalg.norm(trial)
            trial_square = u.square(trial)
            trial_objective = float(trial_square @ trial)
            if trial_objective >= objective + 1e-4 * t * gnorm * gnorm or t < 1e-16:
                break
            t *= 0.5
        step = t
        x, square, objective = trial, trial_square, trial_objective

    raise ConvergenceError(f"variational ascent did not converge in {max_iter} iterations", max_iter)


def _finish_variational(u: CubicForm, x: np.ndarray, objective: float, tol: float, iterations: int) -> IdempotentRecord:
    c = x / objective
    polished = newton_refine(u, c, tol, 50)
    if polished is None:
        residual = float(np.linalg.norm(u.square(c) - c))
        raise ConvergenceError(f"Newton polish of the ascent point stalled at residual {residual:.2e} > {tol:.1e}", iterations)
    c, residual, _ = polished
    return classify(u, c, residual, Origin.VARIATIONAL, iterations)


# ----------------------------------------------------------------------
# Genericity
# ----------------------------------------------------------------------

def genericity_report(u: CubicForm, records: List[IdempotentRecord], tol: float = 1e-8) -> GenericityReport:
    """Flag idempotents whose spectrum contains 1/2, cross-checked against 2 L_c - I"""
    report = GenericityReport(tol=tol)
    identity = np.eye(u.dim)
    for index, record in enumerate(records):
        if record.square_zero_witness:
            continue
        half = np.abs(record.spectrum - 0.5) <= tol
        sigma_min = float(np.linalg.svd(2.0 * u.mult_operator(record.c) - identity, compute_uv=False)[-1])
        singular = sigma_min <= 2.0 * tol
        report.entries.append(
            GenericityEntry(
                index=index,
                has_half=bool(half.any()),
                half_multiplicity=int(half.sum()),
                min_singular_value=sigma_min,
                consistent=bool(half.any()) == singular,
            )
        )
    return report
