"""Lindblad generators and their dense superoperator matrices.

Builds the Heisenberg-picture generator G(X) = -i[X,H] + L(X) with
dissipator L(X) = sum_k (Lk' X Lk - 1/2 {Lk' Lk, X}), its Schroedinger
(predual) counterpart acting on states, the dissipation functional
D(X) = G(X'X) - G(X')X - X'G(X), the per-coupling diffusion coefficients,
and the vectorized Liouvillian for either picture.

Vectorization is column-stacking (`order="F"`); the convention is fixed and
covered by consistency tests, so no consumer depends on it implicitly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .operators import (
    DensityMatrix,
    OperatorError,
    _frozen,
    as_complex_matrix,
    dag,
    max_abs,
    require_hermitian,
)

HEISENBERG = "heisenberg"
SCHROEDINGER = "schroedinger"

# Liouvillian matrices take 16 * dim^4 bytes; the default cap keeps a single
# superoperator under ~4.3 GB.
MAX_LIOUVILLIAN_DIM = 128

_SUPEROP_TOL = 1e-9


@dataclass(frozen=True)
class ModelSpec:
    """A quantum Markov model: Hamiltonian plus coupling operators.

    Single-coupling models are lists of length one; all Lindblad terms are
    summed over the couplings.
    """

    hamiltonian: np.ndarray
    couplings: tuple[np.ndarray, ...]

    def __init__(self, hamiltonian, couplings: Sequence):
        h = require_hermitian(hamiltonian)
        ls = tuple(as_complex_matrix(l) for l in couplings)
        if not ls:
            raise OperatorError("model needs at least one coupling operator")
        for l in ls:
            if l.shape != h.shape:
                raise OperatorError(
                    f"coupling shape {l.shape} does not match Hamiltonian shape {h.shape}"
                )
        object.__setattr__(self, "hamiltonian", _frozen(h))
        object.__setattr__(self, "couplings", tuple(_frozen(l) for l in ls))

    @property
    def dim(self) -> int:
        return self.hamiltonian.shape[0]


def state_matrix(rho) -> np.ndarray:
    """Accept either a DensityMatrix or a raw matrix."""
    if isinstance(rho, DensityMatrix):
        return rho.matrix
    return as_complex_matrix(rho)


def _check_dim(model: ModelSpec, x: np.ndarray) -> None:
    if x.shape != (model.dim, model.dim):
        raise OperatorError(
            f"operator shape {x.shape} does not match model dimension {model.dim}"
        )


def dissipator(model: ModelSpec, x) -> np.ndarray:
    """Dissipative part sum_k (Lk' X Lk - 1/2 Lk'Lk X - 1/2 X Lk'Lk)."""
    arr = as_complex_matrix(x)
    _check_dim(model, arr)
    out = np.zeros_like(arr)
    for l in model.couplings:
        ld = dag(l)
        ldl = ld @ l
        out += ld @ arr @ l - 0.5 * (ldl @ arr + arr @ ldl)
    return out


def generator_heisenberg(model: ModelSpec, x) -> np.ndarray:
    """Heisenberg generator G(X) = -i[X, H] + dissipator(X)."""
    arr = as_complex_matrix(x)
    _check_dim(model, arr)
    h = model.hamiltonian
    return -1j * (arr @ h - h @ arr) + dissipator(model, arr)


def generator_schroedinger(model: ModelSpec, rho) -> np.ndarray:
    """Predual generator -i[H, rho] + sum_k (Lk rho Lk' - 1/2 {Lk'Lk, rho})."""
    arr = state_matrix(rho)
    _check_dim(model, arr)
    h = model.hamiltonian
    out = -1j * (h @ arr - arr @ h)
    for l in model.couplings:
        ldl = dag(l) @ l
        out += l @ arr @ dag(l) - 0.5 * (ldl @ arr + arr @ ldl)
    return out


def dissipation_functional(model: ModelSpec, x) -> np.ndarray:
    """D(X) = G(X'X) - G(X')X - X'G(X); positive semidefinite for all X.

    Equal to sum_k [X, Lk]' [X, Lk], which tests use as the independent
    cross-check.
    """
    arr = as_complex_matrix(x)
    _check_dim(model, arr)
    xd = dag(arr)
    return (
        generator_heisenberg(model, xd @ arr)
        - generator_heisenberg(model, xd) @ arr
        - xd @ generator_heisenberg(model, arr)
    )


def heisenberg_diffusion(model: ModelSpec, x) -> list[tuple[np.ndarray, np.ndarray]]:
    """Per-coupling diffusion coefficients (B, C).

    B = 1/2 ([X, L] + [L', X]) and C = i/2 (-[X, L] + [L', X]); both are
    Hermitian whenever X is.
    """
    arr = as_complex_matrix(x)
    _check_dim(model, arr)
    out = []
    for l in model.couplings:
        xl = arr @ l - l @ arr
        ldx = dag(l) @ arr - arr @ dag(l)
        out.append((0.5 * (xl + ldx), 0.5j * (-xl + ldx)))
    return out


# ---------------------------------------------------------------------------
# Vectorization and Liouvillian matrices
# ---------------------------------------------------------------------------

def vec(x: np.ndarray) -> np.ndarray:
    """Column-stacking vectorization."""
    return np.asarray(x).reshape(-1, order="F")

def unvec(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v)
    n = int(round(np.sqrt(v.size)))
    if n * n != v.size:
        raise OperatorError(f"vector of length {v.size} is not a vectorized square matrix")
    return v.reshape((n, n), order="F")


@dataclass(frozen=True)
class Superoperator:
    """dim^2 x dim^2 matrix acting on column-stacked operators.

    The Heisenberg side annihilates vec(I) (unitality); the Schroedinger
    side satisfies vec(I)' M = 0 (trace preservation). Both are validated
    at construction.
    """

    matrix: np.ndarray
    side: str

    def __post_init__(self):
        m = self.matrix
        n2 = m.shape[0]
        n = int(round(np.sqrt(n2)))
        vec_id = vec(np.eye(n, dtype=complex))
        scale = max(1.0, max_abs(m))
        if self.side == HEISENBERG:
            residual = max_abs(m @ vec_id)
        elif self.side == SCHROEDINGER:
            residual = max_abs(vec_id.conj() @ m)
        else:
            raise OperatorError(f"unknown superoperator side {self.side!r}")
        if residual > _SUPEROP_TOL * scale:
            raise OperatorError(
                f"{self.side} superoperator violates its structural identity "
                f"(residual {residual:.3e})"
            )

    @property
    def dim(self) -> int:
        return int(round(np.sqrt(self.matrix.shape[0])))

    def apply(self, x: np.ndarray) -> np.ndarray:
        return unvec(self.matrix @ vec(x))


def liouvillian(model: ModelSpec, side: str, max_dim: int = MAX_LIOUVILLIAN_DIM) -> Superoperator:
    """Dense matrix realization of the generator on vectorized operators.

    With column stacking, vec(A X B) = kron(B^T, A) vec(X).
    """
    n = model.dim
    if n > max_dim:
        raise OperatorError(
            f"dimension {n} exceeds the Liouvillian cap {max_dim} "
            f"(would need {16 * n**4 / 1e9:.1f} GB)"
        )
    eye = np.eye(n, dtype=complex)
    h = model.hamiltonian
    if side == HEISENBERG:
        # G(X) = -i(XH - HX) + sum Lk' X Lk - 1/2 {Lk'Lk, X}
        m = -1j * (np.kron(h.T, eye) - np.kron(eye, h))
        for l in model.couplings:
            ldl = dag(l) @ l
            m += np.kron(l.T, dag(l))
            m -= 0.5 * np.kron(eye, ldl)
            m -= 0.5 * np.kron(ldl.T, eye)
    elif side == SCHROEDINGER:
        # G*(rho) = -i(H rho - rho H) + sum Lk rho Lk' - 1/2 {Lk'Lk, rho}
        m = -1j * (np.kron(eye, h) - np.kron(h.T, eye))
        for l in model.couplings:
            ldl = dag(l) @ l
            m += np.kron(l.conj(), l)
            m -= 0.5 * np.kron(eye, ldl)
            m -= 0.5 * np.kron(ldl.T, eye)
    else:
        raise OperatorError(f"unknown superoperator side {side!r}")
    return Superoperator(matrix=m, side=side)
