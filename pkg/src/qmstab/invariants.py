"""Invariant states and their classification.

Computes the stationary states of a model from the null space of the
Schroedinger-side Liouvillian and classifies them: faithfulness (full-rank
support), subharmonicity of support projections, the connectivity condition
P L'(I-P) L P != 0 linking a projection to its complement, and a uniqueness
test through commutant triviality of the algebra generated by the
Hamiltonian and the couplings.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse.linalg as spla

from .generator import (
    SCHROEDINGER,
    ModelSpec,
    generator_heisenberg,
    generator_schroedinger,
    liouvillian,
    unvec,
)
from .operators import (
    PSD_TOL,
    DensityMatrix,
    OperatorError,
    PsdReport,
    _frozen,
    dag,
    hermitian_part,
    max_abs,
    op_norm,
    psd_check,
    require_hermitian,
)

UNIQUE = "unique"
NOT_UNIQUE = "not_unique"
INCONCLUSIVE = "inconclusive"

# Dense eigendecomposition of the full Liouvillian is used up to this
# dimension; above it the null space is found by shift-inverted Arnoldi.
_DENSE_EIG_DIM = 24
_CONNECTIVITY_THRESHOLD = 1e-9


class InvariantAnalysisError(RuntimeError):
    """Numerical stationarity analysis failed in a way that should not
    happen for a valid Lindblad model."""


@dataclass(frozen=True)
class InvariantStateReport:
    """Stationary set of a model.

    `states` spans the stationary face found; `null_dimension` is the
    Liouvillian kernel dimension before cleanup. A state whose cleanup
    moved it by more than 10x the tolerance is flagged unreliable rather
    than silently accepted.
    """

    states: tuple[DensityMatrix, ...]
    null_dimension: int
    faithful: tuple[bool, ...]
    support_projections: tuple[np.ndarray, ...]
    unique: str
    residuals: tuple[float, ...]
    cleanup_distances: tuple[float, ...]
    reliable: tuple[bool, ...]
    liouvillian_norm: float
    tolerance: float
    notes: tuple[str, ...] = ()


@dataclass(frozen=True)
class FaithfulnessResult:
    faithful: bool
    support: np.ndarray
    rank: int


@dataclass(frozen=True)
class ConnectivityResult:
    """Norm of P L'(I-P) L P summed over couplings; `connected` iff the
    value exceeds the threshold."""

    projection: np.ndarray
    value: float
    connected: bool
    label: str = ""


@dataclass(frozen=True)
class ConnectivityScan:
    results: tuple[ConnectivityResult, ...]
    all_connected: bool
    counterexample: ConnectivityResult | None
    note: str = (
        "a scan over one family of projections cannot exclude other families; "
        "all-connected here is evidence, not proof, of the universal condition"
    )


@dataclass(frozen=True)
class UniquenessResult:
    verdict: str
    commutant_dimension: int | None
    span_dimension: int
    stabilized: bool
    words_used: int


def _validate_projection(p, dim: int, allow_trivial: bool = False) -> np.ndarray:
    arr = require_hermitian(p)
    if arr.shape != (dim, dim):
        raise OperatorError(f"projection shape {arr.shape} does not match dimension {dim}")
    if max_abs(arr @ arr - arr) > 1e-8:
        raise OperatorError("matrix is not idempotent: P^2 != P")
    if not allow_trivial:
        rank = int(round(np.trace(arr).real))
        if rank == 0 or rank == dim:
            raise OperatorError("connectivity needs a non-trivial projection (0 != P != I)")
    return arr


# ---------------------------------------------------------------------------
# Stationary states
# ---------------------------------------------------------------------------

def _null_space(m: np.ndarray, tol_abs: float, max_null: int):
    """Null vectors of the Liouvillian matrix and the kernel dimension.

    Dense eigendecomposition for small systems; shifted-inverse Arnoldi
    close to zero for large ones. Returns (vectors, null_dim, exhaustive)
    where exhaustive is False when the Arnoldi window may have missed
    further null vectors.
    """
    n2 = m.shape[0]
    if n2 <= _DENSE_EIG_DIM**2:
        w, v = np.linalg.eig(m)
        mask = np.abs(w) <= tol_abs
        return v[:, mask], int(mask.sum()), True
    k = min(max_null, n2 - 2)
    sigma = max(10 * tol_abs, 1e-8)
    lu = sla.lu_factor(m - sigma * np.eye(n2, dtype=complex))
    op = spla.LinearOperator(
        m.shape, matvec=lambda x: sla.lu_solve(lu, x), dtype=complex
    )
    w_inv, v = spla.eigs(op, k=k, which="LM")
    w = sigma + 1.0 / w_inv
    mask = np.abs(w) <= tol_abs
    exhaustive = int(mask.sum()) < k
    return v[:, mask], int(mask.sum()), exhaustive


def steady_states(model: ModelSpec, tol: float = 1e-9, max_null: int = 8) -> InvariantStateReport:
    """Stationary states from the Liouvillian null space.

    Each null vector is devectorized, hermitized, eigenvalue-clipped at
    -tol and renormalized to unit trace. Degenerate stationary spaces are
    returned as a basis of states with the `not_unique` verdict.
    """
    n = model.dim
    sup = liouvillian(model, SCHROEDINGER)
    m = sup.matrix
    scale = float(np.abs(m).sum(axis=0).max())  # induced 1-norm
    tol_abs = tol * max(1.0, scale)
    notes: list[str] = []

    null_vecs, null_dim, exhaustive = _null_space(m, tol_abs, max_null)
    if null_dim == 0:
        raise InvariantAnalysisError(
            "no Liouvillian null vector within tolerance; a trace-preserving "
            "model always has one, so the input or the tolerance is suspect"
        )
    if not exhaustive:
        notes.append(
            f"Arnoldi window returned {null_dim} null vectors and may have "
            "missed more; null_dimension is a lower bound"
        )

    # The null space is adjoint-closed, so hermitian parts of null vectors
    # span the same space.
    pool: list[np.ndarray] = []
    for j in range(null_vecs.shape[1]):
        x = unvec(null_vecs[:, j])
        for y in (hermitian_part(x), (x - dag(x)) / 2j):
            if max_abs(y) > 1e-14:
                pool.append(y)

    basis: list[np.ndarray] = []
    for y in pool:
        r = y.copy()
        for b in basis:
            r -= np.trace(dag(b) @ r) * b
        nrm = float(np.sqrt(np.trace(dag(r) @ r).real))
        if nrm > 1e-10:
            basis.append(r / nrm)
    basis = basis[:null_dim]

    candidates: list[tuple[np.ndarray, float]] = []
    for y in basis:
        w, v = np.linalg.eigh(y)
        tr = float(np.trace(y).real)
        if w[0] >= -tol_abs and abs(tr) > tol:
            ysigned = y if tr > 0 else -y
            clipped = v @ np.diag(np.clip(w if tr > 0 else -w, 0.0, None)) @ dag(v)
            cleanup = max_abs(clipped / np.trace(clipped).real - ysigned / abs(tr))
            candidates.append((clipped / np.trace(clipped).real, cleanup))
        else:
            # Traceless or indefinite direction: its positive and negative
            # parts are stationary individually (the stationary set is a
            # face), so both are offered as candidates.
            for sign in (1.0, -1.0):
                part = v @ np.diag(np.clip(sign * w, 0.0, None)) @ dag(v)
                tr_part = float(np.trace(part).real)
                if tr_part > tol:
                    candidates.append((part / tr_part, 0.0))

    states: list[DensityMatrix] = []
    residuals: list[float] = []
    cleanups: list[float] = []
    reliable: list[bool] = []
    kept_directions: list[np.ndarray] = []
    for rho, cleanup in candidates:
        resid = max_abs(generator_schroedinger(model, rho))
        if resid > 10 * tol_abs:
            continue
        r = rho.copy()
        for b in kept_directions:
            r -= np.trace(dag(b) @ r) * b
        rnorm = float(np.sqrt(np.trace(dag(r) @ r).real))
        if rnorm < 1e-8:
            continue  # dependent on already-kept states
        kept_directions.append(r / rnorm)
        try:
            dm = DensityMatrix.from_matrix(rho, trace_tol=1e-8, positivity_tol=10 * tol_abs)
        except OperatorError:
            continue
        states.append(dm)
        residuals.append(resid)
        cleanups.append(cleanup)
        reliable.append(cleanup <= 10 * tol)
        if len(states) >= null_dim:
            break

    if not states:
        raise InvariantAnalysisError(
            "null space found but no valid density matrix could be extracted"
        )
    if len(states) < null_dim:
        notes.append(
            f"{len(states)} independent states extracted from a null space of "
            f"dimension {null_dim}"
        )

    faith = []
    supports = []
    for dm in states:
        res = faithfulness_check(dm, tol)
        faith.append(res.faithful)
        supports.append(res.support)

    if null_dim == 1 and exhaustive:
        unique = UNIQUE
    elif null_dim > 1:
        unique = NOT_UNIQUE
    else:
        unique = INCONCLUSIVE

    return InvariantStateReport(
        states=tuple(states),
        null_dimension=null_dim,
        faithful=tuple(faith),
        support_projections=tuple(supports),
        unique=unique,
        residuals=tuple(residuals),
        cleanup_distances=tuple(cleanups),
        reliable=tuple(reliable),
        liouvillian_norm=scale,
        tolerance=tol,
        notes=tuple(notes),
    )


def faithfulness_check(rho, tol: float = 1e-9) -> FaithfulnessResult:
    """Rank and support projection of a state; faithful iff full rank."""
    arr = rho.matrix if isinstance(rho, DensityMatrix) else require_hermitian(rho)
    w, v = np.linalg.eigh(arr)
    mask = w > tol
    rank = int(mask.sum())
    support = v[:, mask] @ dag(v[:, mask])
    return FaithfulnessResult(
        faithful=rank == arr.shape[0], support=_frozen(support), rank=rank
    )


# ---------------------------------------------------------------------------
# Connectivity
# ---------------------------------------------------------------------------

def connectivity_check(
    model: ModelSpec, p, threshold: float = _CONNECTIVITY_THRESHOLD, label: str = ""
) -> ConnectivityResult:
    """Evaluate sum_k ||P Lk'(I-P) Lk P|| for a non-trivial projection."""
    parr = _validate_projection(p, model.dim)
    comp = np.eye(model.dim) - parr
    value = 0.0
    for l in model.couplings:
        value += op_norm(parr @ dag(l) @ comp @ l @ parr)
    return ConnectivityResult(
        projection=_frozen(parr),
        value=float(value),
        connected=value > threshold,
        label=label,
    )


def _resolve_family(model: ModelSpec, family) -> list[tuple[str, np.ndarray]]:
    n = model.dim
    if isinstance(family, str):
        if family != "coordinate":
            raise OperatorError(f"unknown projection family {family!r}")
        eye = np.eye(n, dtype=complex)
        return [(f"|{i}><{i}|", np.outer(eye[:, i], eye[:, i].conj())) for i in range(n)]
    if isinstance(family, np.ndarray):
        from .operators import spectral_decompose

        sd = spectral_decompose(family)
        return [
            (f"eigenspace[{i}] (value {sd.eigenvalues[i]:.6g})", np.asarray(p))
            for i, p in enumerate(sd.projections)
        ]
    return [(f"member[{i}]", _validate_projection(p, n, allow_trivial=True)) for i, p in enumerate(family)]


def connectivity_scan(
    model: ModelSpec, family, threshold: float = _CONNECTIVITY_THRESHOLD
) -> ConnectivityScan:
    """Check every family member and every cumulative partial sum.

    The family may be the string "coordinate", a Hermitian operator (its
    spectral projections are used), or an explicit list of projections.
    Partial sums realize the induction that connects any union of family
    members to its complement; the full sum (= I) is trivial and skipped.
    """
    members = _resolve_family(model, family)
    total = sum(p for _, p in members)
    if max_abs(total - np.eye(model.dim)) > 1e-8:
        raise OperatorError("projection family does not resolve the identity")
    results: list[ConnectivityResult] = []
    for name, p in members:
        if int(round(np.trace(p).real)) in (0, model.dim):
            continue
        results.append(connectivity_check(model, p, threshold, label=name))
    running = np.zeros((model.dim, model.dim), dtype=complex)
    for i, (name, p) in enumerate(members[:-1]):
        running = running + p
        if i == 0:
            continue  # identical to the first member's own check
        results.append(
            connectivity_check(model, running, threshold, label=f"partial sum through member {i}")
        )
    counterexample = next((r for r in results if not r.connected), None)
    return ConnectivityScan(
        results=tuple(results),
        all_connected=counterexample is None,
        counterexample=counterexample,
    )


# ---------------------------------------------------------------------------
# Uniqueness via commutant triviality
# ---------------------------------------------------------------------------

def uniqueness_check(
    model: ModelSpec, tol: float = 1e-9, max_products: int | None = None
) -> UniquenessResult:
    """Uniqueness of the invariant state through irreducibility.

    Builds the linear span of words in {I, H, Lk, Lk'} until its dimension
    stabilizes, then computes the commutant dimension by solving [A, S] = 0
    over the span. A trivial commutant certifies a unique invariant state;
    commuting with the generating set is equivalent to commuting with every
    word, which keeps the linear system small.
    """
    n = model.dim
    if n == 1:
        return UniquenessResult(UNIQUE, 1, 1, True, 0)
    if max_products is None:
        max_products = n * n + 2

    gens = [model.hamiltonian] + [l for l in model.couplings] + [dag(l) for l in model.couplings]

    basis: list[np.ndarray] = []

    def absorb(x: np.ndarray) -> bool:
        r = x.copy()
        for b in basis:
            r -= np.trace(dag(b) @ r) * b
        nrm = float(np.sqrt(np.trace(dag(r) @ r).real))
        if nrm > 1e-10 * max(1.0, max_abs(x)):
            basis.append(r / nrm)
            return True
        return False

    absorb(np.eye(n, dtype=complex))
    frontier = [np.eye(n, dtype=complex)]
    stabilized = False
    words = 0
    for words in range(1, max_products + 1):
        new_frontier = []
        for w in frontier:
            for g in gens:
                cand = g @ w
                if absorb(cand):
                    new_frontier.append(cand)
        if not new_frontier or len(basis) == n * n:
            stabilized = True
            break
        frontier = new_frontier

    span_dim = len(basis)
    if not stabilized:
        return UniquenessResult(INCONCLUSIVE, None, span_dim, False, words)

    if span_dim == n * n:
        commutant_dim = 1
    else:
        eye = np.eye(n, dtype=complex)
        rows = [np.kron(eye, g) - np.kron(g.T, eye) for g in gens]
        k = np.vstack(rows)
        svals = np.linalg.svd(k, compute_uv=False)
        rank_tol = max(k.shape) * np.finfo(float).eps * (svals[0] if svals.size else 1.0)
        commutant_dim = int(np.sum(svals <= rank_tol))

    verdict = UNIQUE if commutant_dim == 1 else NOT_UNIQUE
    return UniquenessResult(verdict, commutant_dim, span_dim, True, words)


# ---------------------------------------------------------------------------
# Subharmonicity
# ---------------------------------------------------------------------------

def subharmonicity_check(model: ModelSpec, p, tol: float = PSD_TOL) -> PsdReport:
    """Check G(P) >= 0, the generator form of a subharmonic projection.

    Support projections of invariant states satisfy this; a generic
    projection normally fails with a negative-eigenvalue witness.
    """
    parr = _validate_projection(p, model.dim, allow_trivial=True)
    gp = hermitian_part(generator_heisenberg(model, parr))
    return psd_check(gp, tol)
