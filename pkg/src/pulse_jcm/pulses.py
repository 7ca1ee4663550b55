"""Temporal pulse shapes and the time-dependent virtual-cavity couplings.

A pulse is a normalized wavepacket amplitude u(t) on a finite window; the
cumulative intensity F(t) = int_{t_start}^t |u|^2 dt' drives everything
else.  The release coupling diverges as F -> 1 and the pick-up coupling as
F -> 0, so both are masked outside an active window controlled by a
CouplingPolicy.

Numerical note: F is accumulated twice, forward from t_start and backward
from t_end, and the complement G = 1 - F is always taken from whichever
accumulation is small.  Near the window edges 1 - F can be ~1e-10 while F
itself is ~1; forming it by subtraction would lose every significant digit
and corrupt the couplings right where they are largest.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.optimize import brentq

from .errors import PulseWindowError

QUADRATURE_NODES = 8192  # intervals for the cached cumulative intensity
_GL_X, _GL_W = np.polynomial.legendre.leggauss(5)


@dataclass(frozen=True)
class CouplingPolicy:
    """Regularization thresholds (on F) for the singular coupling endpoints.

    The pick-up coupling is held at zero until F first exceeds ``eps_low``;
    the release coupling is zeroed once F exceeds ``1 - eps_high``.

    The residual amplitude never transferred because of the cutoffs scales
    like sqrt(eps), so the defaults are set two orders below the naive
    target: observable agreement at 1e-6 needs eps well under 1e-10.
    """

    eps_low: float = 1e-12
    eps_high: float = 1e-12

    def __post_init__(self):
        for name, value in (("eps_low", self.eps_low), ("eps_high", self.eps_high)):
            if not 0.0 < value <= 1e-6:
                raise ValueError(f"{name} must lie in (0, 1e-6], got {value}")


DEFAULT_POLICY = CouplingPolicy()


class PulseShape:
    """Normalized temporal amplitude with cached cumulative intensity.

    Construct through :func:`gaussian_pulse`, the exponential helpers, or
    :func:`custom_pulse`.  The amplitude is renormalized so that
    F(t_end) = 1 on the window.
    """

    def __init__(self, amplitude, t_start, t_end, tau, t_c, label="custom"):
        if not t_end > t_start:
            raise PulseWindowError(f"empty window [{t_start}, {t_end}]")
        self.t_start = float(t_start)
        self.t_end = float(t_end)
        self.tau = float(tau)
        self.t_c = float(t_c)
        self.label = label
        self._raw = amplitude

        edges = np.linspace(self.t_start, self.t_end, QUADRATURE_NODES + 1)
        mid = 0.5 * (edges[:-1] + edges[1:])
        half = 0.5 * (edges[1:] - edges[:-1])
        pts = mid[:, None] + half[:, None] * _GL_X[None, :]
        intensity = np.abs(np.asarray(amplitude(pts), dtype=complex)) ** 2
        seg = (intensity * _GL_W[None, :]).sum(axis=1) * half
        fwd = np.concatenate([[0.0], np.cumsum(seg)])
        total = fwd[-1]
        if not (np.isfinite(total) and total > 0):
            raise PulseWindowError("pulse has zero or non-finite norm on the window")
        bwd = np.concatenate([np.cumsum(seg[::-1])[::-1], [0.0]])
        self._norm = 1.0 / math.sqrt(total)
        self._F = PchipInterpolator(edges, fwd / total)
        self._G = PchipInterpolator(edges, bwd / total)
        # flat copies of the piecewise-cubic coefficients for the scalar
        # fast path (the grid is uniform, so interval lookup is arithmetic)
        self._h = (self.t_end - self.t_start) / QUADRATURE_NODES
        self._Fc = np.ascontiguousarray(self._F.c.T)
        self._Gc = np.ascontiguousarray(self._G.c.T)
        sample = np.asarray(amplitude(mid), dtype=complex)
        self.is_real = bool(np.abs(sample.imag).max() <= 1e-14 * max(1.0, np.abs(sample).max()))
        self._cutoff_cache = {}

    def u(self, t):
        """Normalized amplitude; zero outside the window."""
        if np.ndim(t) == 0:
            t = float(t)
            if t < self.t_start or t > self.t_end:
                return 0.0 + 0.0j
            return complex(self._raw(t)) * self._norm
        t_arr = np.asarray(t, dtype=float)
        inside = (t_arr >= self.t_start) & (t_arr <= self.t_end)
        return np.where(inside, np.asarray(self._raw(t_arr), dtype=complex) * self._norm, 0.0)

    def _cubic_scalar(self, coefs, t):
        x = (t - self.t_start) / self._h
        i = int(x)
        if i < 0:
            i = 0
        elif i >= QUADRATURE_NODES:
            i = QUADRATURE_NODES - 1
        dx = t - (self.t_start + i * self._h)
        c0, c1, c2, c3 = coefs[i]
        val = ((c0 * dx + c1) * dx + c2) * dx + c3
        return 0.0 if val < 0.0 else (1.0 if val > 1.0 else val)

    def cumulative_intensity(self, t):
        """F(t), clipped to [0, 1] and monotone by construction."""
        if np.ndim(t) == 0:
            t = float(t)
            if t <= self.t_start:
                return 0.0
            if t >= self.t_end:
                return 1.0
            return self._cubic_scalar(self._Fc, t)
        t_arr = np.clip(np.asarray(t, dtype=float), self.t_start, self.t_end)
        return np.clip(self._F(t_arr), 0.0, 1.0)

    def complement_intensity(self, t):
        """1 - F(t), accumulated backward so it stays accurate near t_end."""
        if np.ndim(t) == 0:
            t = float(t)
            if t <= self.t_start:
                return 1.0
            if t >= self.t_end:
                return 0.0
            return self._cubic_scalar(self._Gc, t)
        t_arr = np.clip(np.asarray(t, dtype=float), self.t_start, self.t_end)
        return np.clip(self._G(t_arr), 0.0, 1.0)

    def intensity_pair(self, t):
        """(F, G) evaluated consistently: the smaller branch is authoritative."""
        F = self.cumulative_intensity(t)
        G = self.complement_intensity(t)
        if np.ndim(F) == 0:
            return (F, 1.0 - F) if F <= 0.5 else (1.0 - G, G)
        F = np.asarray(F)
        G = np.asarray(G)
        lower = F <= 0.5
        return np.where(lower, F, 1.0 - G), np.where(lower, 1.0 - F, G)

    def cutoff_times(self, policy=DEFAULT_POLICY):
        """(t_lo, t_hi): first times where F exceeds eps_low and 1 - eps_high."""
        key = (policy.eps_low, policy.eps_high)
        cached = self._cutoff_cache.get(key)
        if cached is not None:
            return cached
        t_lo = self._first_crossing(self._F, policy.eps_low)
        t_hi = self._first_crossing(lambda t: -self._G(t), -policy.eps_high)
        cutoffs = (t_lo, t_hi)
        self._cutoff_cache[key] = cutoffs
        return cutoffs

    def _first_crossing(self, fn, level):
        lo, hi = self.t_start, self.t_end
        f_lo = fn(lo) - level
        if f_lo >= 0:
            return lo
        if fn(hi) - level <= 0:
            return hi
        return float(brentq(lambda t: fn(t) - level, lo, hi, xtol=1e-14, rtol=1e-15))

    def quadrature_grid(self):
        return np.linspace(self.t_start, self.t_end, QUADRATURE_NODES + 1)


def gaussian_pulse(tau, t_c=None, t_start=None, t_end=None):
    """Gaussian wavepacket whose intensity |u|^2 has standard deviation tau.

    Window convention: t_start = 0, t_c = 6 tau, t_end = 12 tau + 5 (in units
    of the inverse emitter decay rate).  The window must leave at least 5 tau
    of margin on each side of t_c.
    """
    tau = float(tau)
    if tau <= 0:
        raise PulseWindowError(f"tau must be positive, got {tau}")
    if t_c is None:
        t_c = 6.0 * tau
    if t_start is None:
        t_start = 0.0
    if t_end is None:
        t_end = 12.0 * tau + 5.0
    if t_c - t_start < 5.0 * tau or t_end - t_c < 5.0 * tau:
        raise PulseWindowError(
            f"window [{t_start}, {t_end}] leaves less than 5*tau margin "
            f"around t_c = {t_c}"
        )
    peak = (2.0 * math.pi * tau**2) ** (-0.25)

    def amp(t):
        return peak * np.exp(-((np.asarray(t) - t_c) ** 2) / (4.0 * tau**2))

    return PulseShape(amp, t_start, t_end, tau, t_c, label="gaussian")


def decaying_exponential_pulse(rate, t_start=0.0, t_end=None):
    """u(t) = sqrt(rate) exp(-rate (t - t_start)/2): emitted by bare decay."""
    rate = float(rate)
    if rate <= 0:
        raise PulseWindowError(f"rate must be positive, got {rate}")
    if t_end is None:
        t_end = t_start + 25.0 / rate

    def amp(t):
        return np.sqrt(rate) * np.exp(-0.5 * rate * (np.asarray(t) - t_start))

    return PulseShape(amp, t_start, t_end, 1.0 / rate, t_start + 1.0 / rate,
                      label="decaying-exponential")


def rising_exponential_pulse(rate, t_start=None, t_end=0.0):
    """u(t) = sqrt(rate) exp(rate (t - t_end)/2): time-reversed decay."""
    rate = float(rate)
    if rate <= 0:
        raise PulseWindowError(f"rate must be positive, got {rate}")
    if t_start is None:
        t_start = t_end - 25.0 / rate

    def amp(t):
        return np.sqrt(rate) * np.exp(0.5 * rate * (np.asarray(t) - t_end))

    return PulseShape(amp, t_start, t_end, 1.0 / rate, t_end - 1.0 / rate,
                      label="rising-exponential")


def flat_pulse(t_start, t_end):
    """Constant amplitude 1/sqrt(T) on the window."""
    T = float(t_end) - float(t_start)

    def amp(t):
        return np.full_like(np.asarray(t, dtype=float), 1.0 / math.sqrt(T), dtype=complex)

    mid = 0.5 * (t_start + t_end)
    return PulseShape(amp, t_start, t_end, T / math.sqrt(12.0), mid, label="flat")


def custom_pulse(amplitude, t_start, t_end, tau=None, t_c=None):
    """Wrap an arbitrary amplitude callable (renormalized on the window)."""
    if tau is None:
        tau = (t_end - t_start) / 12.0
    if t_c is None:
        t_c = 0.5 * (t_start + t_end)
    return PulseShape(amplitude, t_start, t_end, tau, t_c)


def g_u(pulse, t, policy=DEFAULT_POLICY):
    """Release coupling u*(t)/sqrt(1 - F(t)), zeroed after F > 1 - eps_high.

    Depends only on the pulse shape, never on the quantum state it carries.
    """
    _, t_hi = pulse.cutoff_times(policy)
    if t > t_hi or t < pulse.t_start or t > pulse.t_end:
        return 0.0
    G = pulse.complement_intensity(t)
    return np.conj(pulse.u(t)) / math.sqrt(max(G, policy.eps_high * 1e-6))


def g_v(pulse, t, policy=DEFAULT_POLICY):
    """Pick-up coupling -v*(t)/sqrt(F(t)), zeroed before F > eps_low."""
    t_lo, _ = pulse.cutoff_times(policy)
    if t < t_lo or t < pulse.t_start or t > pulse.t_end:
        return 0.0
    F = pulse.cumulative_intensity(t)
    return -np.conj(pulse.u(t)) / math.sqrt(max(F, policy.eps_low * 1e-6))


def theta(pulse, t):
    """Mode-rotation angle: theta(t) = arcsin(sqrt(F(t))), 0 -> pi/2.

    Valid when the pick-up addresses the same temporal shape as the input.
    """
    t_arr = np.asarray(t, dtype=float)
    if t_arr.ndim:
        F, G = pulse.intensity_pair(t_arr)
        # arcsin(sqrt(F)) loses precision near pi/2; switch branch at F = 1/2
        return np.where(F <= 0.5, np.arcsin(np.sqrt(F)), np.arccos(np.sqrt(G)))
    F, G = pulse.intensity_pair(float(t))
    if F <= 0.5:
        return math.asin(math.sqrt(F))
    return math.acos(math.sqrt(G))


def ip_coefficients(pulse, t, policy=DEFAULT_POLICY):
    """Coefficients of the interaction-picture model at time t.

    Returns (c_u, c_v, c_L):
      c_u = u(t)                        pulse-mode exchange strength
      c_v = u(t) (cot - tan)(theta)/2   ancilla-mode exchange strength
      c_L = u(t) (tan + cot)(theta)     ancilla damping amplitude
    c_v and c_L are zeroed outside the active window where the underlying
    couplings are cut off.
    """
    if not pulse.is_real:
        raise PulseWindowError(
            "interaction-picture coefficients require a real pulse amplitude"
        )
    u_t = float(np.real(pulse.u(t)))
    t_lo, t_hi = pulse.cutoff_times(policy)
    if t < t_lo or t > t_hi:
        return u_t, 0.0, 0.0
    F, G = pulse.intensity_pair(t)
    F = max(F, policy.eps_low * 1e-6)
    G = max(G, policy.eps_high * 1e-6)
    sin_cos = math.sqrt(F * G)
    c_v = 0.5 * u_t * (G - F) / sin_cos
    c_L = u_t / sin_cos
    return u_t, c_v, c_L
