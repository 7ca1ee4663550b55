"""Model builders: Hamiltonians plus Lindblad channels for each simulation.

Every model is a ModelSpec: an ordered list of subsystem dimensions (the
two-level emitter first, then oscillators), Hamiltonian terms of the form
coefficient(t) * static_sparse_operator, and jump channels that are sums of
such terms.  Keeping the operators static and the time dependence scalar is
what lets the integrator avoid re-assembling sparse matrices at every
evaluation.

Model zoo
---------
reference_jcm    emitter + one resonant cavity mode, coupling sqrt(gamma) u(t);
                 optionally damped by emitter decay.
jcm1             emitter fed by a leaking virtual cavity that emits the pulse;
                 the waveguide output is a single interfering loss channel.
jcm2             as jcm1 plus a downstream virtual cavity that picks up a
                 chosen output temporal mode.
jcm3             the same physics as jcm2 for pick-up mode = input mode,
                 rotated to the frame where one oscillator follows the pulse.
classical_drive  emitter alone, driven by the c-number field of a coherent
                 input; exact stand-in for jcm1 with a coherent state.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.stats import poisson

from . import pulses as _pulses
from .errors import DimensionError, TruncationError
from .operators import (
    Operator,
    SystemState,
    annihilation_op,
    embed,
    lowering_op,
)
from .pulses import DEFAULT_POLICY, g_u, g_v, ip_coefficients


def _coef_value(coef, t):
    return coef(t) if callable(coef) else coef


@dataclass(frozen=True)
class ModelSpec:
    """Time-dependent master equation: H(t) and jump channels L_k(t)."""

    subsystem_dims: tuple
    hamiltonian_terms: tuple  # ((Operator, coef), ...)
    channels: tuple  # (((Operator, coef), ...), ...)
    gamma: float
    gamma_refl: float = 0.0
    breakpoints: tuple = ()
    excitation_conserving: bool = True
    label: str = "model"

    @property
    def dim(self):
        return int(np.prod(self.subsystem_dims))

    def hamiltonian(self, t):
        """Assembled H(t) as an Operator (test/inspection path)."""
        total = None
        for op, coef in self.hamiltonian_terms:
            piece = complex(_coef_value(coef, t)) * op
            total = piece if total is None else total + piece
        if total is None:
            from scipy.sparse import csr_array

            total = Operator(csr_array((self.dim, self.dim), dtype=complex),
                             self.subsystem_dims)
        return total

    def channel_operators(self, t):
        """Assembled jump operators L_k(t)."""
        out = []
        for terms in self.channels:
            op_sum = None
            for op, coef in terms:
                piece = complex(_coef_value(coef, t)) * op
                op_sum = piece if op_sum is None else op_sum + piece
            out.append(op_sum)
        return out


@dataclass(frozen=True)
class FieldStateSpec:
    """Initial state of one oscillator: fock(n) | coherent(alpha) | vacuum |
    superposition([(amplitude, n), ...])."""

    kind: str
    n: int = 0
    alpha: complex = 0.0
    terms: tuple = field(default=())

    @staticmethod
    def fock(n):
        if n < 0:
            raise TruncationError(f"photon number must be >= 0, got {n}")
        return FieldStateSpec("fock", n=int(n))

    @staticmethod
    def vacuum():
        return FieldStateSpec("vacuum")

    @staticmethod
    def coherent(alpha):
        return FieldStateSpec("coherent", alpha=complex(alpha))

    @staticmethod
    def superposition(terms):
        terms = tuple((complex(a), int(n)) for a, n in terms)
        norm = sum(abs(a) ** 2 for a, _ in terms)
        if abs(norm - 1.0) > 1e-9:
            raise DimensionError(
                f"superposition amplitudes are not normalized: sum |a|^2 = {norm}"
            )
        return FieldStateSpec("superposition", terms=terms)

    def vector(self, n_max):
        """Amplitude vector on the truncated Fock basis (unit norm)."""
        dim = n_max + 1
        vec = np.zeros(dim, dtype=complex)
        if self.kind == "vacuum":
            vec[0] = 1.0
        elif self.kind == "fock":
            if self.n > n_max:
                raise TruncationError(
                    f"fock({self.n}) does not fit truncation n_max = {n_max}"
                )
            vec[self.n] = 1.0
        elif self.kind == "coherent":
            n = np.arange(dim)
            log_fact = np.cumsum(np.concatenate([[0.0], np.log(np.arange(1, dim))]))
            amp = np.exp(-0.5 * abs(self.alpha) ** 2 + n * np.log(abs(self.alpha) + 1e-300)
                         - 0.5 * log_fact)
            phase = np.exp(1j * np.angle(self.alpha) * n) if self.alpha else 1.0
            vec = amp * phase
            deficit = 1.0 - np.vdot(vec, vec).real
            if deficit > 1e-6:
                raise TruncationError(
                    f"coherent({self.alpha}) truncated at {n_max} loses "
                    f"{deficit:.2e} of its norm; raise n_max"
                )
            vec = vec / np.linalg.norm(vec)
        elif self.kind == "superposition":
            for a, n in self.terms:
                if n > n_max:
                    raise TruncationError(
                        f"superposition component n={n} exceeds n_max = {n_max}"
                    )
                vec[n] += a
        else:
            raise DimensionError(f"unknown field state kind {self.kind!r}")
        return vec

    def mean_photons(self):
        if self.kind == "fock":
            return float(self.n)
        if self.kind == "coherent":
            return abs(self.alpha) ** 2
        if self.kind == "superposition":
            return sum(abs(a) ** 2 * n for a, n in self.terms)
        return 0.0

    def max_photons(self):
        if self.kind == "fock":
            return self.n
        if self.kind == "superposition":
            return max(n for _, n in self.terms)
        if self.kind == "coherent":
            return minimal_coherent_truncation(self.alpha)
        return 0


def minimal_coherent_truncation(alpha, tail=1e-8):
    """Smallest n_max with Poisson(|alpha|^2) tail mass below ``tail``."""
    lam = abs(alpha) ** 2
    if lam == 0:
        return 1
    n = int(lam)
    while poisson.sf(n, lam) > tail:
        n += 1
    return n


def coherent_truncation_deficit(alpha, n_max):
    """Probability mass of coherent(alpha) above the truncation."""
    return float(poisson.sf(n_max, abs(alpha) ** 2))


def _pair(x_op, coef):
    """Expand c(t) X + conj(c)(t) X^dag so H stays Hermitian."""
    if callable(coef):
        conj_coef = lambda t, _c=coef: np.conj(_c(t))  # noqa: E731
    else:
        conj_coef = np.conj(coef)
    return [(x_op, coef), (x_op.dag(), conj_coef)]


def _site_ops(dims):
    sm = embed(lowering_op(), 0, dims)
    osc = [embed(annihilation_op(d - 1), k, dims) for k, d in enumerate(dims[1:], start=1)]
    return sm, osc


def build_reference_jcm(pulse, gamma, n_max, damped=False):
    """Emitter in a single resonant cavity mode with coupling sqrt(gamma) u(t).

    H(t) = i sqrt(gamma) u(t) (a^dag sigma- - a sigma+); the damped variant
    adds emitter decay at rate gamma.
    """
    if n_max < 1:
        raise DimensionError(f"n_max must be >= 1, got {n_max}")
    dims = (2, n_max + 1)
    sm, (a,) = _site_ops(dims)
    x = a.dag() @ sm
    sqg = math.sqrt(gamma)
    h_terms = _pair(x, lambda t: 1j * sqg * pulse.u(t))
    channels = []
    if damped:
        channels.append(((sm, sqg),))
    return ModelSpec(dims, tuple(h_terms), tuple(channels), gamma,
                     label="damped-jcm" if damped else "reference-jcm")


def build_jcm1(pulse, gamma, n_max, policy=DEFAULT_POLICY):
    """Virtual emitting cavity cascaded into the emitter.

    H(t) = (i/2) sqrt(gamma) g_u(t) a_u^dag sigma- + h.c.; one waveguide
    channel L(t) = g_u^*(t) a_u + sqrt(gamma) sigma-.
    """
    if n_max < 1:
        raise DimensionError(f"n_max must be >= 1, got {n_max}")
    dims = (2, n_max + 1)
    sm, (a_u,) = _site_ops(dims)
    x = a_u.dag() @ sm
    sqg = math.sqrt(gamma)
    gu = lambda t: g_u(pulse, t, policy)  # noqa: E731
    h_terms = _pair(x, lambda t: 0.5j * sqg * gu(t))
    channel = ((sm, sqg), (a_u, lambda t: np.conj(gu(t))))
    return ModelSpec(dims, tuple(h_terms), (channel,), gamma,
                     breakpoints=pulse.cutoff_times(policy), label="jcm1")


def build_jcm2(pulse_u, pulse_v, gamma, n_max_u, n_max_v, policy=DEFAULT_POLICY):
    """Emitting cavity, emitter and pick-up cavity in a unidirectional chain.

    The pick-up cavity absorbing mode v(t) cannot act back on the emitter:
    its only influence is through the interfering loss channel.
    """
    dims = (2, n_max_u + 1, n_max_v + 1)
    sm, (a_u, a_v) = _site_ops(dims)
    sqg = math.sqrt(gamma)
    gu = lambda t: g_u(pulse_u, t, policy)  # noqa: E731
    gv = lambda t: g_v(pulse_v, t, policy)  # noqa: E731
    h_terms = []
    h_terms += _pair(a_u.dag() @ sm, lambda t: 0.5j * sqg * gu(t))
    h_terms += _pair(sm.dag() @ a_v, lambda t: 0.5j * sqg * np.conj(gv(t)))
    h_terms += _pair(a_u.dag() @ a_v, lambda t: 0.5j * gu(t) * np.conj(gv(t)))
    channel = (
        (sm, sqg),
        (a_u, lambda t: np.conj(gu(t))),
        (a_v, lambda t: np.conj(gv(t))),
    )
    cuts = sorted(set(pulse_u.cutoff_times(policy)) | set(pulse_v.cutoff_times(policy)))
    return ModelSpec(dims, tuple(h_terms), (channel,), gamma,
                     breakpoints=tuple(cuts), label="jcm2")


def build_jcm3(pulse, gamma, n_max_u, n_max_v, policy=DEFAULT_POLICY):
    """Rotated-frame model for pick-up mode equal to the input mode.

    The first oscillator follows the pulse content and couples to the
    emitter with the bare amplitude u(t); the second is a transiently
    populated ancilla that also appears in the loss channel.
    """
    dims = (2, n_max_u + 1, n_max_v + 1)
    sm, (a_u, a_v) = _site_ops(dims)
    sqg = math.sqrt(gamma)

    def c_u(t):
        return ip_coefficients(pulse, t, policy)[0]

    def c_v(t):
        return ip_coefficients(pulse, t, policy)[1]

    def c_l(t):
        return -ip_coefficients(pulse, t, policy)[2]

    h_terms = []
    h_terms += _pair(a_u.dag() @ sm, lambda t: 1j * sqg * c_u(t))
    h_terms += _pair(a_v.dag() @ sm, lambda t: 1j * sqg * c_v(t))
    channel = ((sm, sqg), (a_v, c_l))
    return ModelSpec(dims, tuple(h_terms), (channel,), gamma,
                     breakpoints=pulse.cutoff_times(policy), label="jcm3")


def build_classical_drive(pulse, alpha0, gamma, gamma_refl=0.0):
    """Emitter driven by the c-number field alpha0 u(t) of a coherent input.

    The drive prefactor is fixed by exact equivalence with a coherent-state
    input to the cascaded model: the Hamiltonian cross terms and the
    dissipator cross terms each contribute half of the effective drive, so
    no factor 1/2 appears here.
    """
    dims = (2,)
    sm = embed(lowering_op(), 0, dims)
    sqg = math.sqrt(gamma)
    drive = lambda t: 1j * sqg * np.conj(alpha0 * pulse.u(t))  # noqa: E731
    h_terms = _pair(sm, drive)
    channels = [((sm, sqg),)]
    model = ModelSpec(dims, tuple(h_terms), tuple(channels), gamma,
                      excitation_conserving=False, label="classical-drive")
    if gamma_refl:
        model = add_reflection(model, gamma_refl)
    return model


def add_reflection(model, gamma_refl):
    """Append emission into the backward direction: channel sqrt(gamma') sigma-."""
    if gamma_refl < 0:
        raise DimensionError(f"reflection rate must be >= 0, got {gamma_refl}")
    if gamma_refl == 0:
        return model
    sm = embed(lowering_op(), 0, model.subsystem_dims)
    channel = ((sm, math.sqrt(gamma_refl)),)
    return replace(model, channels=model.channels + (channel,),
                   gamma_refl=float(gamma_refl))


def initial_state(model, tls="ground", fields=()):
    """Product state: emitter (ground|excited) x given oscillator states."""
    dims = model.subsystem_dims
    fields = tuple(fields)
    if len(fields) != len(dims) - 1:
        raise DimensionError(
            f"model has {len(dims) - 1} oscillators but {len(fields)} field "
            f"states were given"
        )
    if tls not in ("ground", "excited"):
        raise DimensionError(f"tls must be 'ground' or 'excited', got {tls!r}")
    vec = np.zeros(2, dtype=complex)
    vec[1 if tls == "excited" else 0] = 1.0
    for spec, d in zip(fields, dims[1:]):
        vec = np.kron(vec, spec.vector(d - 1))
    rho = np.outer(vec, vec.conj())
    return SystemState(rho, dims, 0.0)


def total_excitation_op(dims):
    """N_tot = sigma+ sigma- + sum of oscillator number operators."""
    sm, osc = _site_ops(dims)
    total = sm.dag() @ sm
    for a in osc:
        total = total + a.dag() @ a
    return total


def observable_set(dims):
    """Standard recorded observables for a model of the given shape."""
    sm, osc = _site_ops(dims)
    obs = {"P_e": sm.dag() @ sm}
    if len(osc) >= 1:
        obs["n_u"] = osc[0].dag() @ osc[0]
    if len(osc) >= 2:
        obs["n_v"] = osc[1].dag() @ osc[1]
    obs["n_total"] = total_excitation_op(dims)
    return obs
