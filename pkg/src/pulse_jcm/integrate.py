"""Master-equation right-hand side and adaptive time stepping.

The right-hand side is evaluated as

    d rho/dt = K(t) rho + (K(t) rho)^dag + sum_k L_k(t) rho L_k(t)^dag,
    K(t) = -i H(t) - (1/2) sum_k L_k(t)^dag L_k(t),

which is the Lindblad form rearranged so that only sparse-times-dense
products appear; no superoperator matrix is ever materialized.  All sparse
operators are compiled once onto fixed union sparsity patterns so that a
time step only recombines coefficient scalars into preallocated data
arrays.

Stepping uses the Dormand-Prince embedded 4(5) pair with FSAL and error
control on the max norm of rho.  Times where a coupling-policy cutoff
switches a coefficient on or off are forced to be step boundaries, as are
all recording times, so the right-hand side stays smooth inside each step.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import (
    DimensionError,
    NumericalFailureError,
    StateCorruptionError,
    StiffnessError,
)
from .models import ModelSpec, _coef_value, observable_set
from .operators import SystemState, expectation

# Hard-fail thresholds during evolution (acceptance checks are stricter).
TRACE_DRIFT_LIMIT = 1e-6
MIN_EIG_LIMIT = -1e-6

_MIN_STEP_FACTOR = 1e-13


@dataclass
class IntegratorConfig:
    rtol: float = 1e-8
    atol: float = 1e-10
    max_step: float = np.inf
    record_grid: np.ndarray = None
    snapshot_times: tuple = ()

    def __post_init__(self):
        if not 1e-12 <= self.rtol <= 1e-4:
            raise DimensionError(f"rtol must lie in [1e-12, 1e-4], got {self.rtol}")
        if not self.atol > 0:
            raise DimensionError(f"atol must be positive, got {self.atol}")
        if self.record_grid is not None:
            grid = np.asarray(self.record_grid, dtype=float)
            if grid.ndim != 1 or len(grid) < 1 or np.any(np.diff(grid) < 0):
                raise DimensionError("record_grid must be a sorted 1-d array")
            self.record_grid = grid
        self.snapshot_times = tuple(float(t) for t in self.snapshot_times)


@dataclass
class Trajectory:
    """Recorded observables on the output grid, plus health diagnostics."""

    times: np.ndarray
    observables: dict
    trace: np.ndarray
    herm_defect: np.ndarray
    min_eig: np.ndarray
    snapshots: list = field(default_factory=list)
    final_state: SystemState = None
    steps: int = 0
    rhs_evals: int = 0

    def __getitem__(self, name):
        return self.observables[name]


class _CompiledChannel:
    __slots__ = ("l_pattern", "l_parts", "coefs")

    def __init__(self, terms, dim):
        ops = [op.entries for op, _ in terms]
        self.coefs = [coef for _, coef in terms]
        self.l_pattern = _union_pattern(ops, dim)
        self.l_parts = [_aligned_data(op, self.l_pattern, dim) for op in ops]


class _CompiledModel:
    """Fixed sparsity patterns + per-term data vectors for fast assembly."""

    def __init__(self, model: ModelSpec):
        dim = model.dim
        self.dim = dim
        self.h_coefs = [coef for _, coef in model.hamiltonian_terms]
        h_ops = [op.entries for op, _ in model.hamiltonian_terms]
        self.channels = [_CompiledChannel(terms, dim) for terms in model.channels]

        pair_entries = []  # (channel_idx, i, j, csr product)
        for c_idx, terms in enumerate(model.channels):
            ops = [op.entries for op, _ in terms]
            for i, op_i in enumerate(ops):
                for j, op_j in enumerate(ops):
                    pair_entries.append((c_idx, i, j, sp.csr_array(op_i.conj().T @ op_j)))

        k_mats = h_ops + [m for *_ignore, m in pair_entries]
        self.k_pattern = _union_pattern(k_mats, dim) if k_mats else _empty_pattern(dim)
        self.h_parts = [_aligned_data(op, self.k_pattern, dim) for op in h_ops]
        self.pair_parts = [
            (c_idx, i, j, _aligned_data(m, self.k_pattern, dim))
            for c_idx, i, j, m in pair_entries
        ]
        self._kdata = np.zeros(self.k_pattern.nnz, dtype=complex)

    def rhs(self, t, rho):
        """K rho + (K rho)^dag + sum_k L_k rho L_k^dag for Hermitian rho."""
        kdata = self._kdata
        kdata[:] = 0.0
        for coef, arr in zip(self.h_coefs, self.h_parts):
            kdata += (-1j * complex(_coef_value(coef, t))) * arr
        channel_coefs = [
            [complex(_coef_value(c, t)) for c in ch.coefs] for ch in self.channels
        ]
        for c_idx, i, j, arr in self.pair_parts:
            d = channel_coefs[c_idx]
            kdata += (-0.5 * np.conj(d[i]) * d[j]) * arr
        self.k_pattern.data = kdata
        out = self.k_pattern @ rho
        out += out.conj().T
        for ch, d in zip(self.channels, channel_coefs):
            ldata = np.zeros(ch.l_pattern.nnz, dtype=complex)
            for di, arr in zip(d, ch.l_parts):
                if di != 0.0:
                    ldata += di * arr
            ch.l_pattern.data = ldata
            b = ch.l_pattern @ rho
            out += ch.l_pattern @ b.conj().T
        return out


def _empty_pattern(dim):
    return sp.csr_array((dim, dim), dtype=complex)


def _union_pattern(mats, dim):
    total = None
    for m in mats:
        marker = m.copy()
        marker.data = np.ones_like(marker.data)
        total = marker if total is None else total + marker
    if total is None:
        return _empty_pattern(dim)
    total = sp.csr_array(total)
    total.sum_duplicates()
    total.sort_indices()
    total.data = np.zeros_like(total.data)
    return total


def _pattern_keys(pattern, dim):
    coo = pattern.tocoo()
    return coo.row.astype(np.int64) * dim + coo.col


def _aligned_data(mat, pattern, dim):
    keys = _pattern_keys(pattern, dim)
    coo = sp.coo_array(mat)
    coo.sum_duplicates()
    mkeys = coo.row.astype(np.int64) * dim + coo.col
    pos = np.searchsorted(keys, mkeys)
    if len(mkeys) and (np.any(pos >= len(keys)) or np.any(keys[pos] != mkeys)):
        raise DimensionError("sparsity pattern alignment failed")
    out = np.zeros(pattern.nnz, dtype=complex)
    out[pos] = coo.data
    return out


def _compiled(model):
    cached = getattr(model, "_compiled_rhs", None)
    if cached is None:
        cached = _CompiledModel(model)
        object.__setattr__(model, "_compiled_rhs", cached)
    return cached


def lindblad_rhs(model, t, rho):
    """d rho/dt of the Lindblad master equation at time t.

    ``rho`` must be Hermitian within tolerance; the output is checked for
    non-finite entries.
    """
    rho = np.asarray(rho, dtype=complex)
    defect = np.abs(rho - rho.conj().T).max()
    scale = max(1.0, np.abs(rho).max())
    if defect > 1e-8 * scale:
        raise DimensionError(f"rho is not Hermitian: defect {defect:.3e}")
    out = _compiled(model).rhs(t, rho)
    if not np.all(np.isfinite(out)):
        raise NumericalFailureError(f"master equation produced non-finite entries at t={t}")
    return out


# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array(
    [5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40]
)
_E = _B5 - _B4


def evolve(model, state0, config):
    """Integrate the master equation, recording observables on the grid.

    Returns a Trajectory; raises StiffnessError on step-size underflow and
    StateCorruptionError if trace or positivity drift beyond hard limits.
    """
    if state0.subsystem_dims != tuple(model.subsystem_dims):
        raise DimensionError(
            f"state dims {state0.subsystem_dims} do not match model dims "
            f"{model.subsystem_dims}"
        )
    t0 = float(state0.time)
    grid = config.record_grid
    if grid is None:
        raise DimensionError("IntegratorConfig.record_grid is required")
    t_end = max(grid[-1], max(config.snapshot_times, default=t0))
    if t_end < t0:
        raise DimensionError("record grid ends before the initial time")

    comp = _compiled(model)
    obs_ops = observable_set(model.subsystem_dims)

    boundaries = set(np.round(grid, 15)) | {round(t0, 15), round(t_end, 15)}
    boundaries |= {round(b, 15) for b in model.breakpoints if t0 < b < t_end}
    boundaries |= {round(s, 15) for s in config.snapshot_times}
    boundaries = np.array(sorted(b for b in boundaries if t0 <= b <= t_end))

    record_set = set(np.round(grid, 15))
    snapshot_set = set(np.round(config.snapshot_times, 15))

    traj_times = []
    series = {name: [] for name in obs_ops}
    trace_series, herm_series, eig_series = [], [], []
    snapshots = []
    stats = {"steps": 0, "evals": 0}

    rho = state0.rho.copy()

    def record(t, rho):
        key = round(t, 15)
        state = SystemState(rho, model.subsystem_dims, t)
        if key in record_set:
            tr = np.trace(rho).real
            herm = np.abs(rho - rho.conj().T).max()
            min_eig = float(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0])
            if not np.isfinite(tr):
                raise NumericalFailureError(f"non-finite state at t={t}")
            if abs(tr - 1.0) > TRACE_DRIFT_LIMIT or min_eig < MIN_EIG_LIMIT:
                raise StateCorruptionError(
                    f"state corrupted at t={t}: trace deviation {abs(tr - 1.0):.3e}, "
                    f"min eigenvalue {min_eig:.3e}"
                )
            traj_times.append(t)
            trace_series.append(tr)
            herm_series.append(float(herm))
            eig_series.append(min_eig)
            for name, op in obs_ops.items():
                series[name].append(expectation(state, op).real)
        if key in snapshot_set:
            snapshots.append(SystemState(rho.copy(), model.subsystem_dims, t))

    record(t0, rho)

    k = [None] * 7
    have_fsal = False
    h = None
    for seg_a, seg_b in zip(boundaries[:-1], boundaries[1:]):
        span = seg_b - seg_a
        if span <= 0:
            continue
        t = seg_a
        if h is None:
            h = min(config.max_step, span, (t_end - t0) / 100.0)
        have_fsal = False  # coefficients may jump at boundaries
        while t < seg_b - 1e-14 * max(1.0, abs(seg_b)):
            h = min(h, config.max_step, seg_b - t)
            if h < _MIN_STEP_FACTOR * max(abs(t), 1.0):
                raise StiffnessError(f"step size underflow at t={t}", t)
            if not have_fsal:
                k[0] = comp.rhs(t, rho)
                stats["evals"] += 1
            for stage in range(1, 6):
                y_stage = rho + h * sum(
                    a * k[j] for j, a in enumerate(_A[stage]) if a
                )
                k[stage] = comp.rhs(t + _C[stage] * h, y_stage)
            y5 = rho + h * sum(b * k[j] for j, b in enumerate(_B5[:6]) if b)
            k[6] = comp.rhs(t + h, y5)
            stats["evals"] += 6
            err_mat = h * sum(e * k[j] for j, e in enumerate(_E) if e)
            scale = config.atol + config.rtol * max(
                np.abs(rho).max(), np.abs(y5).max()
            )
            err = np.abs(err_mat).max() / scale
            if not np.isfinite(err):
                err = np.inf
            if err <= 1.0:
                t = seg_b if seg_b - (t + h) < 1e-14 * max(1.0, abs(seg_b)) else t + h
                # re-Hermitize: the fast dissipator form is only contractive
                # on the Hermitian subspace, so roundoff in the
                # anti-Hermitian component would otherwise compound
                np.add(y5, y5.conj().T, out=y5)
                y5 *= 0.5
                rho = y5
                k[0] = k[6]
                have_fsal = True
                stats["steps"] += 1
                if t == seg_b:
                    record(t, rho)
            factor = 0.9 * err ** -0.2 if err > 0 else 5.0
            h *= min(5.0, max(0.2, factor))

    final = SystemState(rho, model.subsystem_dims, float(boundaries[-1]))
    return Trajectory(
        times=np.array(traj_times),
        observables={name: np.array(vals) for name, vals in series.items()},
        trace=np.array(trace_series),
        herm_defect=np.array(herm_series),
        min_eig=np.array(eig_series),
        snapshots=snapshots,
        final_state=final,
        steps=stats["steps"],
        rhs_evals=stats["evals"],
    )
