"""Independent few-photon references for cross-validating the master equations.

Two solvers that share no code with the master-equation path:

* an exact single-excitation amplitude equation, integrated by high-order
  quadrature, and
* a time-bin collision model: the waveguide field is discretized into M
  sequential bin modes, each interacting once with the emitter at strength
  sqrt(gamma/dt).  It is first-order accurate in dt and handles one- and
  two-photon inputs exactly within the discretization.

The collision state also yields output temporal modes (eigenmodes of the
first-order coherence matrix) and reduced single-mode states, which is how
the emitted orthogonal mode of the photon-subtraction process is derived.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import simpson

from .errors import DimensionError, ResolutionError

_GL_X, _GL_W = np.polynomial.legendre.leggauss(5)
_SQRT2 = math.sqrt(2.0)


@dataclass
class SingleExcitationSolution:
    """Exact dynamics of one photon scattering on the emitter.

    ``excited`` is the emitter amplitude e(t) (P_e = |e|^2); ``output`` is
    the forward field amplitude u_out(t) = u(t) + sqrt(gamma) e(t).
    """

    times: np.ndarray
    excited: np.ndarray
    output: np.ndarray
    output_norm: float
    reflected_norm: float
    final_excitation: float

    @property
    def P_e(self):
        return np.abs(self.excited) ** 2

    @property
    def norm_residual(self):
        """|1 - (output + reflected + residual excitation)| bookkeeping."""
        return abs(1.0 - (self.output_norm + self.reflected_norm + self.final_excitation))


def single_excitation_solve(pulse, gamma, gamma_refl=0.0, times=None):
    """Solve e' = -((gamma+gamma')/2) e - sqrt(gamma) u(t) by quadrature.

    The solution is evaluated on the union of a fine uniform grid and any
    requested ``times`` (each requested time is a quadrature node, so there
    is no interpolation error at the points being compared).
    """
    t0, t1 = pulse.t_start, pulse.t_end
    nodes = np.linspace(t0, t1, 8193)
    if times is not None:
        req = np.asarray(times, dtype=float)
        if req.size and (req.min() < t0 - 1e-12 or req.max() > t1 + 1e-12):
            raise DimensionError("requested times fall outside the pulse window")
        nodes = np.unique(np.concatenate([nodes, req]))
    big_gamma = gamma + gamma_refl
    sqg = math.sqrt(gamma)

    # cumulative I(t) = int exp(big_gamma (s - t0)/2) u(s) ds, per-interval GL5
    mid = 0.5 * (nodes[:-1] + nodes[1:])
    half = 0.5 * (nodes[1:] - nodes[:-1])
    pts = mid[:, None] + half[:, None] * _GL_X[None, :]
    integrand = np.exp(0.5 * big_gamma * (pts - t0)) * np.asarray(pulse.u(pts), dtype=complex)
    seg = (integrand * _GL_W[None, :]).sum(axis=1) * half
    cumulative = np.concatenate([[0.0], np.cumsum(seg)])
    excited = -sqg * np.exp(-0.5 * big_gamma * (nodes - t0)) * cumulative
    u_nodes = np.asarray(pulse.u(nodes), dtype=complex)
    output = u_nodes + sqg * excited

    out_norm = float(simpson(np.abs(output) ** 2, x=nodes))
    refl_norm = float(gamma_refl * simpson(np.abs(excited) ** 2, x=nodes))
    final_exc = float(abs(excited[-1]) ** 2)

    if times is not None:
        sel = np.searchsorted(nodes, req)
        return SingleExcitationSolution(req, excited[sel], output[sel],
                                        out_norm, refl_norm, final_exc)
    return SingleExcitationSolution(nodes, excited, output,
                                    out_norm, refl_norm, final_exc)


@dataclass
class FewPhotonState:
    """Collision-model state in the <= 2 excitation sector.

    Main-branch amplitudes (no reflection loss yet):
      one excitation:  e0 (emitter excited), g1[k] (photon in bin k)
      two excitations: e1[k] (emitter + photon), pair[j, k] (symmetric matrix
      holding the two-photon amplitudes; diagonal scaled so that the
      amplitude of a doubly occupied bin is pair[j, j]/sqrt(2))
    Reflection loss spawns orthogonal branches: ``branch_g1[b]`` /
    ``branch_e0[b]`` hold the single remaining excitation after a loss at
    bin b, and ``vacuum_weight`` absorbs fully de-excited branches.
    """

    n_photons: int
    bin_count: int
    dt: float
    bin_times: np.ndarray
    input_mode: np.ndarray  # continuum-normalized input amplitude on bins
    gamma: float
    gamma_refl: float
    e0: complex = 0.0
    g1: np.ndarray = None
    e1: np.ndarray = None
    pair: np.ndarray = None
    branch_e0: np.ndarray = None
    branch_g1: np.ndarray = None
    vacuum_weight: float = 0.0
    pe_times: np.ndarray = None
    pe_series: np.ndarray = None
    bins_scattered: int = 0
    _w: np.ndarray = field(default=None, repr=False)  # discrete input mode

    @property
    def complete(self):
        return self.bins_scattered == self.bin_count

    def norm(self):
        total = self.vacuum_weight
        if self.n_photons == 1:
            total += abs(self.e0) ** 2 + float(np.vdot(self.g1, self.g1).real)
        elif self.n_photons == 2:
            total += float(np.vdot(self.e1, self.e1).real)
            total += 0.5 * float(np.vdot(self.pair, self.pair).real)
        if self.branch_e0 is not None:
            total += float(np.vdot(self.branch_e0, self.branch_e0).real)
            total += float(np.vdot(self.branch_g1, self.branch_g1).real)
        return total

    def discrete_mode(self, mode):
        """Validate a continuum-normalized mode and return its discrete form."""
        mode = np.asarray(mode, dtype=complex)
        if mode.shape != (self.bin_count,):
            raise DimensionError(
                f"mode has shape {mode.shape}, expected ({self.bin_count},)"
            )
        w = mode * math.sqrt(self.dt)
        nrm = float(np.vdot(w, w).real)
        if abs(nrm - 1.0) > 1e-6:
            raise DimensionError(f"mode is not normalized on the bin grid: {nrm}")
        return w / math.sqrt(nrm)

    def coherence_matrix(self):
        """G1[j, k] = <b_k^dag b_j> over all branches (discrete normalization)."""
        m = self.bin_count
        g1 = np.zeros((m, m), dtype=complex)
        if self.n_photons == 1:
            g1 += np.outer(self.g1, self.g1.conj())
        elif self.n_photons == 2:
            g1 += self.pair @ self.pair.conj().T
            g1 += np.outer(self.e1, self.e1.conj())
        if self.branch_g1 is not None:
            g1 += self.branch_g1.T @ self.branch_g1.conj()
        return g1


def timebin_solve(pulse, gamma, gamma_refl=0.0, n_photons=1, M=2000):
    """Scatter an n-photon Fock pulse off the emitter, bin by bin.

    Precondition: M >= 20 * window_length * max(gamma, 1/tau), else the
    discretization cannot resolve the fastest timescale.  Vacuum input
    (n_photons = 0) is a fixed point and returns immediately-trivial data.
    """
    if n_photons not in (0, 1, 2):
        raise DimensionError(f"n_photons must be 0, 1 or 2, got {n_photons}")
    window = pulse.t_end - pulse.t_start
    m_min = 20.0 * window * max(gamma, 1.0 / pulse.tau)
    if M < m_min:
        raise ResolutionError(
            f"M = {M} is below the resolution floor {math.ceil(m_min)} for "
            f"this window and pulse width"
        )
    dt = window / M
    bin_times = pulse.t_start + (np.arange(M) + 0.5) * dt
    w = np.asarray(pulse.u(bin_times), dtype=complex) * math.sqrt(dt)
    w = w / np.linalg.norm(w)

    phi = math.sqrt(gamma * dt)
    c1, s1 = math.cos(phi), math.sin(phi)
    c2, s2 = math.cos(_SQRT2 * phi), math.sin(_SQRT2 * phi)
    phi_r = math.sqrt(gamma_refl * dt)
    cr, sr = math.cos(phi_r), math.sin(phi_r)
    lossy = gamma_refl > 0

    state = FewPhotonState(
        n_photons=n_photons,
        bin_count=M,
        dt=dt,
        bin_times=bin_times,
        input_mode=w / math.sqrt(dt),
        gamma=gamma,
        gamma_refl=gamma_refl,
        _w=w,
    )
    pe = np.empty(M)

    if n_photons == 0:
        state.g1 = np.zeros(M, dtype=complex)
        state.vacuum_weight = 1.0
        state.pe_times = bin_times + 0.5 * dt
        state.pe_series = np.zeros(M)
        state.bins_scattered = M
        return state
    if n_photons == 1:
        e0 = 0.0 + 0.0j
        g1 = w.astype(complex).copy()
        for i in range(M):
            gi = g1[i]
            e0, g1[i] = c1 * e0 - s1 * gi, s1 * e0 + c1 * gi
            if lossy:
                state.vacuum_weight += (sr * abs(e0)) ** 2
                e0 *= cr
            pe[i] = abs(e0) ** 2
        state.e0 = e0
        state.g1 = g1
    else:
        e1 = np.zeros(M, dtype=complex)
        pair = _SQRT2 * np.outer(w, w)
        if lossy:
            branch_e0 = np.zeros(M, dtype=complex)
            branch_g1 = np.zeros((M, M), dtype=complex)
        for i in range(M):
            row = pair[i, :].copy()
            dbl = row[i] / _SQRT2
            e_i = e1[i]
            e_i_new = c2 * e_i - s2 * dbl
            dbl_new = s2 * e_i + c2 * dbl
            new_e1 = c1 * e1 - s1 * row
            new_row = s1 * e1 + c1 * row
            new_e1[i] = e_i_new
            new_row[i] = _SQRT2 * dbl_new
            e1 = new_e1
            pair[i, :] = new_row
            pair[:, i] = new_row
            if lossy:
                be = branch_e0[:i]
                bg = branch_g1[:i, i]
                branch_e0[:i], branch_g1[:i, i] = c1 * be - s1 * bg, s1 * be + c1 * bg
                branch_g1[i, :] = sr * e1
                e1 = cr * e1
                state.vacuum_weight += sr**2 * float(
                    np.vdot(branch_e0[:i], branch_e0[:i]).real
                )
                branch_e0[:i] *= cr
            pe[i] = float(np.vdot(e1, e1).real)
            if lossy:
                pe[i] += float(np.vdot(branch_e0, branch_e0).real)
        state.e1 = e1
        state.pair = pair
        if lossy:
            state.branch_e0 = branch_e0
            state.branch_g1 = branch_g1

    state.pe_times = bin_times + 0.5 * dt
    state.pe_series = pe
    state.bins_scattered = M
    return state


@dataclass
class ModeDecomposition:
    """Output temporal modes sorted by occupation.

    ``modes`` rows are continuum-normalized amplitudes on the bin grid
    (orthonormal under the dt-weighted inner product); ``occupations``
    holds the full eigenvalue list, so its sum is the total emitted photon
    number.
    """

    modes: np.ndarray
    occupations: np.ndarray
    bin_times: np.ndarray
    dt: float


def output_mode_decomposition(state, max_modes=8):
    """Eigenmodes of the first-order coherence matrix of the output field."""
    if not state.complete:
        raise DimensionError("output modes require a fully scattered state")
    g1 = state.coherence_matrix()
    vals, vecs = np.linalg.eigh(g1)
    order = np.argsort(vals)[::-1]
    vals = vals[order]
    vecs = vecs[:, order]
    k = min(max_modes, len(vals))
    modes = (vecs[:, :k] / math.sqrt(state.dt)).T
    return ModeDecomposition(modes=modes, occupations=vals,
                             bin_times=state.bin_times, dt=state.dt)


def dominant_orthogonal_mode(state, reference_mode):
    """Dominant coherence eigenmode in the complement of ``reference_mode``.

    This is how the emitted mode of the photon-subtraction process is
    defined: near-perfect subtraction makes the top two eigenvalues of the
    coherence matrix nearly degenerate, so the raw eigenvectors can mix the
    kept and emitted modes arbitrarily; projecting out the reference first
    gives a well-defined emitted mode that is orthogonal by construction.

    Returns (mode, occupation) with the mode continuum-normalized.
    """
    if not state.complete:
        raise DimensionError("output modes require a fully scattered state")
    w = state.discrete_mode(reference_mode)
    g1 = state.coherence_matrix()
    # P g1 P with P = 1 - |w><w|, assembled from O(M^2) rank-one updates
    gw = g1 @ w
    wg = w.conj() @ g1
    scal = complex(w.conj() @ gw)
    g1p = (
        g1
        - np.outer(w, wg)
        - np.outer(gw, w.conj())
        + scal * np.outer(w, w.conj())
    )
    vals, vecs = np.linalg.eigh(0.5 * (g1p + g1p.conj().T))
    mode = vecs[:, -1]
    mode = mode - w * (w.conj() @ mode)
    mode = mode / np.linalg.norm(mode)
    return mode / math.sqrt(state.dt), float(vals[-1])


def project_reduced_state(state, mode):
    """Reduced density matrix (photon numbers 0..2) of one output mode.

    For Fock inputs every branch carries a definite excitation number, so
    the reduced state is diagonal in the mode's Fock basis.
    """
    if not state.complete:
        raise DimensionError("projection requires a fully scattered state")
    s = state.discrete_mode(mode).conj()
    p2 = 0.0
    nbar = 0.0
    if state.n_photons == 2:
        d = state.pair @ s
        p2 = 0.5 * abs(np.dot(s, d)) ** 2
        nbar += float(np.vdot(d, d).real)
        nbar += abs(np.dot(s, state.e1)) ** 2
    else:
        nbar += abs(np.dot(s, state.g1)) ** 2
    if state.branch_g1 is not None:
        amps = state.branch_g1 @ s
        nbar += float(np.vdot(amps, amps).real)
    p1 = max(nbar - 2.0 * p2, 0.0)
    p0 = max(1.0 - p1 - p2, 0.0)
    rho = np.diag([p0, p1, p2]).astype(complex)
    return rho


def joint_pair_population(state, mode_a, mode_b):
    """Population of |1 photon in mode_a, 1 photon in mode_b> (orthogonal modes)."""
    if state.n_photons != 2:
        raise DimensionError("joint pair population needs a two-photon state")
    if not state.complete:
        raise DimensionError("projection requires a fully scattered state")
    wa = state.discrete_mode(mode_a)
    wb = state.discrete_mode(mode_b)
    if abs(np.vdot(wa, wb)) > 1e-6:
        raise DimensionError("joint pair population needs orthogonal modes")
    amp = wb.conj() @ state.pair @ wa.conj()
    return float(abs(amp) ** 2)
