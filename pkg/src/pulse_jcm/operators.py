"""Operators and states on truncated Fock spaces and their tensor products.

Conventions: Hamiltonians and jump operators are kept in compressed sparse
row form (they have O(dim) nonzeros); density matrices are dense.  The
two-level system uses basis index 0 for the ground state and 1 for the
excited state, so the lowering operator sigma^- coincides with the
annihilation operator of a two-dimensional oscillator.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import CapacityError, DimensionError

# Largest tensor-product dimension accepted when composing operators.
MAX_OPERATOR_DIM = 1 << 20

HERMITICITY_TOL = 1e-9
POSITIVITY_TOL = 1e-8
TRACE_TOL = 1e-8


@dataclass(frozen=True)
class Operator:
    """Sparse complex matrix on a tensor product of truncated Fock spaces."""

    entries: sp.csr_array
    subsystem_dims: tuple

    def __post_init__(self):
        dims = tuple(int(d) for d in self.subsystem_dims)
        object.__setattr__(self, "subsystem_dims", dims)
        n = int(np.prod(dims))
        if self.entries.shape != (n, n):
            raise DimensionError(
                f"entries are {self.entries.shape}, expected ({n}, {n}) "
                f"from subsystem dims {dims}"
            )
        if not np.all(np.isfinite(self.entries.data)):
            raise DimensionError("operator entries contain NaN/Inf")

    @property
    def dim(self):
        return self.entries.shape[0]

    def dag(self):
        return Operator(self.entries.conj().T.tocsr(), self.subsystem_dims)

    def toarray(self):
        return self.entries.toarray()

    def __matmul__(self, other):
        if isinstance(other, Operator):
            if other.subsystem_dims != self.subsystem_dims:
                raise DimensionError("operator products need matching subsystem dims")
            return Operator(
                sp.csr_array(self.entries @ other.entries), self.subsystem_dims
            )
        return self.entries @ other

    def __add__(self, other):
        if isinstance(other, Operator):
            if other.subsystem_dims != self.subsystem_dims:
                raise DimensionError("operator sums need matching subsystem dims")
            return Operator(
                sp.csr_array(self.entries + other.entries), self.subsystem_dims
            )
        return NotImplemented

    def __sub__(self, other):
        if isinstance(other, Operator):
            return self + (-1.0) * other
        return NotImplemented

    def __rmul__(self, scalar):
        return Operator(sp.csr_array(self.entries * scalar), self.subsystem_dims)


@dataclass
class SystemState:
    """Dense density matrix with subsystem bookkeeping.

    ``time`` is in units of the inverse emitter decay rate.
    """

    rho: np.ndarray
    subsystem_dims: tuple
    time: float = 0.0

    def __post_init__(self):
        self.subsystem_dims = tuple(int(d) for d in self.subsystem_dims)
        self.rho = np.ascontiguousarray(self.rho, dtype=complex)
        n = int(np.prod(self.subsystem_dims))
        if self.rho.shape != (n, n):
            raise DimensionError(
                f"rho is {self.rho.shape}, expected ({n}, {n}) "
                f"from subsystem dims {self.subsystem_dims}"
            )

    @property
    def dim(self):
        return self.rho.shape[0]


def annihilation_op(n_max):
    """Annihilation operator on a Fock space truncated at ``n_max`` quanta.

    Matrix entry (n-1, n) equals sqrt(n); the resulting dimension is
    ``n_max + 1``.
    """
    n_max = int(n_max)
    if n_max < 1:
        raise DimensionError(f"n_max must be >= 1, got {n_max}")
    data = np.sqrt(np.arange(1, n_max + 1, dtype=float)).astype(complex)
    mat = sp.csr_array(sp.diags_array(data, offsets=1, shape=(n_max + 1, n_max + 1)))
    return Operator(mat, (n_max + 1,))


def identity_op(dims):
    dims = tuple(int(d) for d in dims)
    n = int(np.prod(dims))
    return Operator(sp.eye_array(n, dtype=complex, format="csr"), dims)


def lowering_op():
    """sigma^- of the two-level system (|g><e|)."""
    return annihilation_op(1)


def number_op(n_max):
    a = annihilation_op(n_max)
    return a.dag() @ a


def kron(a, b):
    """Tensor product; subsystem dims concatenate."""
    new_dim = a.dim * b.dim
    if new_dim > MAX_OPERATOR_DIM:
        raise CapacityError(
            f"tensor product dimension {a.dim}*{b.dim} exceeds capacity "
            f"{MAX_OPERATOR_DIM}"
        )
    mat = sp.csr_array(sp.kron(a.entries, b.entries, format="csr"))
    return Operator(mat, a.subsystem_dims + b.subsystem_dims)


def embed(op, slot, dims):
    """Lift ``op`` onto factor ``slot`` of the product space ``dims``.

    Identity acts on every other factor.
    """
    dims = tuple(int(d) for d in dims)
    slot = int(slot)
    if not 0 <= slot < len(dims):
        raise DimensionError(f"slot {slot} out of range for dims {dims}")
    if op.dim != dims[slot]:
        raise DimensionError(
            f"operator dim {op.dim} does not match dims[{slot}] = {dims[slot]}"
        )
    mat = sp.eye_array(1, dtype=complex, format="csr")
    for k, d in enumerate(dims):
        factor = op.entries if k == slot else sp.eye_array(d, dtype=complex, format="csr")
        mat = sp.kron(mat, factor, format="csr")
    if mat.shape[0] > MAX_OPERATOR_DIM:
        raise CapacityError(f"embedded dimension {mat.shape[0]} exceeds capacity")
    return Operator(sp.csr_array(mat), dims)


def partial_trace(state, keep):
    """Trace out all subsystems not listed in ``keep`` (kept order preserved
    ascending).  The result keeps the trace of the input."""
    keep = tuple(sorted(set(int(k) for k in keep)))
    dims = state.subsystem_dims
    if not keep:
        raise DimensionError("keep set must be nonempty")
    if any(k < 0 or k >= len(dims) for k in keep):
        raise DimensionError(f"keep indices {keep} out of range for dims {dims}")
    n_sub = len(dims)
    tensor = state.rho.reshape(dims + dims)
    # einsum index bookkeeping: traced subsystems share bra/ket indices
    bra = list(range(n_sub))
    ket = list(range(n_sub, 2 * n_sub))
    for k in range(n_sub):
        if k not in keep:
            ket[k] = bra[k]  # same label -> contracted
    out_idx = [bra[k] for k in keep] + [ket[k] for k in keep]
    reduced = np.einsum(tensor, bra + ket, out_idx)
    kept_dims = tuple(dims[k] for k in keep)
    n_kept = int(np.prod(kept_dims))
    return SystemState(reduced.reshape(n_kept, n_kept), kept_dims, state.time)


def expectation(state, op):
    """Tr[op rho], computed over the operator's nonzeros."""
    if op.dim != state.dim:
        raise DimensionError(
            f"operator dim {op.dim} does not match state dim {state.dim}"
        )
    coo = op.entries.tocoo()
    return complex(np.sum(coo.data * state.rho[coo.col, coo.row]))


def hermitian_eigs(op, tol=HERMITICITY_TOL, eigvecs=False):
    """Real spectrum (ascending) of a Hermitian operator or matrix.

    Raises if the Hermiticity defect exceeds ``tol``.
    """
    mat = op.toarray() if isinstance(op, Operator) else np.asarray(op, dtype=complex)
    defect = np.abs(mat - mat.conj().T).max() if mat.size else 0.0
    if defect > tol:
        raise DimensionError(f"matrix is not Hermitian: defect {defect:.3e} > {tol:.1e}")
    herm = 0.5 * (mat + mat.conj().T)
    if eigvecs:
        return np.linalg.eigh(herm)
    return np.linalg.eigvalsh(herm)


@dataclass(frozen=True)
class StateDiagnostics:
    """Health report for a density matrix."""

    trace_deviation: float
    hermiticity_defect: float
    min_eigenvalue: float
    trace_tol: float = TRACE_TOL
    hermiticity_tol: float = HERMITICITY_TOL
    positivity_tol: float = POSITIVITY_TOL
    flags: tuple = field(default=())

    @property
    def healthy(self):
        return not self.flags


def check_state(state):
    """Trace deviation, Hermiticity defect and minimum eigenvalue of a state.

    Reporting only; flags name the violated tolerances without raising.
    """
    rho = state.rho
    trace_dev = abs(np.trace(rho).real - 1.0)
    herm = np.abs(rho - rho.conj().T).max()
    min_eig = float(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0])
    flags = []
    if trace_dev > TRACE_TOL:
        flags.append("trace")
    if herm > HERMITICITY_TOL:
        flags.append("hermiticity")
    if min_eig < -POSITIVITY_TOL:
        flags.append("positivity")
    return StateDiagnostics(float(trace_dev), float(herm), min_eig, flags=tuple(flags))
