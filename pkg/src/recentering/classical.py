"""Classical check that the reparametrized action reproduces Hamilton's equations.

Both integrations use fixed-step classical Runge-Kutta.  Polynomial
Hamiltonians with trigonometric multipliers run on the compiled kernels;
arbitrary callables run the same loop in plain Python.
"""

from dataclasses import dataclass
import csv

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.integrate import quad
from scipy.optimize import brentq

from . import kernels
from .errors import DivergenceError, InputError

__all__ = [
    "Hamiltonian",
    "PolynomialHamiltonian",
    "TrigMultiplier",
    "oscillator",
    "free_particle",
    "constant",
    "PhasePoint",
    "ExtendedPhasePoint",
    "Trajectory",
    "ExtendedTrajectory",
    "EquivalenceReport",
    "integrate_hamilton",
    "integrate_reparam",
    "equivalence_report",
    "tau_for_time",
    "write_csv",
]


@dataclass(frozen=True)
class Hamiltonian:
    """Energy function with its two partial derivatives, all ``f(q, p)``."""
    energy: object
    dHdq: object
    dHdp: object


class PolynomialHamiltonian(Hamiltonian):
    """``H(q, p) = sum c q**i p**j`` given as ``{(i, j): c}``.

    Polynomial Hamiltonians run on the compiled integration kernels.
    """

    def __init__(self, terms):
        terms = {(int(i), int(j)): float(c) for (i, j), c in dict(terms).items()}
        ci = np.array([k[0] for k in terms], dtype=np.int64)
        cj = np.array([k[1] for k in terms], dtype=np.int64)
        cc = np.array(list(terms.values()), dtype=float)

        def energy(q, p):
            return sum(c * q ** i * p ** j for (i, j), c in terms.items()) + 0.0 * q

        def dHdq(q, p):
            return kernels._poly_grad(ci, cj, cc, q, p)[0]

        def dHdp(q, p):
            return kernels._poly_grad(ci, cj, cc, q, p)[1]
        object.__setattr__(self, "terms", terms)
        object.__setattr__(self, "arrays", (ci, cj, cc))
        super().__init__(energy, dHdq, dHdp)


def oscillator(omega=1.0):
    """``(p^2 + omega^2 q^2) / 2``."""
    return PolynomialHamiltonian({(0, 2): 0.5, (2, 0): 0.5 * float(omega) ** 2})


def free_particle(mass=1.0):
    return PolynomialHamiltonian({(0, 2): 0.5 / float(mass)})


def constant(value=0.0):
    return PolynomialHamiltonian({(0, 0): float(value)})


@dataclass(frozen=True)
class TrigMultiplier:
    """``lambda(tau) = c0 + sum_k sin_k sin(k f tau) + cos_k cos(k f tau)``."""
    c0: float = 1.0
    sin: tuple = ()
    cos: tuple = ()
    freq: float = 1.0

    def __call__(self, tau):
        tau = np.asarray(tau, dtype=float)
        val = self.c0 + 0.0 * tau
        for k, a in enumerate(self.sin, start=1):
            val = val + a * np.sin(k * self.freq * tau)
        for k, b in enumerate(self.cos, start=1):
            val = val + b * np.cos(k * self.freq * tau)
        return val if val.ndim else float(val)

    def arrays(self):
        return (float(self.c0), np.asarray(self.sin, dtype=float),
                np.asarray(self.cos, dtype=float), float(self.freq))


@dataclass(frozen=True)
class PhasePoint:
    q: float
    p: float

    def __post_init__(self):
        if not (np.isfinite(self.q) and np.isfinite(self.p)):
            raise InputError(f"non-finite phase point ({self.q}, {self.p})")


@dataclass(frozen=True)
class ExtendedPhasePoint:
    q: float
    p: float
    t: float
    s: float


@dataclass(frozen=True)
class Trajectory:
    t: np.ndarray
    q: np.ndarray
    p: np.ndarray


@dataclass(frozen=True)
class ExtendedTrajectory:
    tau: np.ndarray
    t: np.ndarray
    q: np.ndarray
    p: np.ndarray
    s: np.ndarray


@dataclass(frozen=True)
class EquivalenceReport:
    max_dev: float
    constraint_drift: float


def _callable_grad(H):
    def grad(ci, cj, cc, q, p):
        return H.dHdq(q, p), H.dHdp(q, p)
    return grad


def _callable_trig(lam):
    def trig(c0, a_sin, b_cos, freq, tau):
        return lam(tau)
    return trig


_EMPTY_I = np.zeros(0, dtype=np.int64)
_EMPTY_F = np.zeros(0)


def _hamilton_loop(H):
    if isinstance(H, PolynomialHamiltonian):
        return kernels.rk4_hamilton, H.arrays
    return kernels._make_rk4_hamilton(_callable_grad(H)), (_EMPTY_I, _EMPTY_I, _EMPTY_F)


def _reparam_loop(H, lam):
    if isinstance(H, PolynomialHamiltonian):
        grad, h_arrays = kernels._poly_grad, H.arrays
    else:
        grad, h_arrays = _callable_grad(H), (_EMPTY_I, _EMPTY_I, _EMPTY_F)
    if isinstance(lam, TrigMultiplier):
        if isinstance(H, PolynomialHamiltonian):
            return kernels.rk4_reparam, h_arrays + lam.arrays()
        return kernels._make_rk4_reparam(grad, kernels._trig_eval), h_arrays + lam.arrays()
    lam_arrays = (0.0, _EMPTY_F, _EMPTY_F, 1.0)
    return kernels._make_rk4_reparam(grad, _callable_trig(lam)), h_arrays + lam_arrays


def _steps(span, h):
    if not h > 0:
        raise InputError(f"step must be positive, got {h}")
    a, b = map(float, span)
    n = int(round((b - a) / h))
    if n < 1 or abs(a + n * h - b) > 1e-9 * max(1.0, abs(b)):
        raise InputError(f"span {span} is not an integer number of steps of {h}")
    return a, n


def _check_finite(arr, times):
    bad = ~np.all(np.isfinite(arr), axis=1)
    if bad.any():
        i = int(np.argmax(bad))
        last = float(times[i - 1]) if i > 0 else float(times[0])
        raise DivergenceError(f"integration diverged; last finite time {last}",
                              diagnostics={"last_valid_time": last})


def integrate_hamilton(H, y0, t_span, dt):
    """Fixed-step RK4 for ``dq/dt = dH/dp``, ``dp/dt = -dH/dq``."""
    t0, n = _steps(t_span, dt)
    loop, arrays = _hamilton_loop(H)
    out = loop(*arrays, float(y0.q), float(y0.p), t0, float(dt), n)
    _check_finite(out, out[:, 0])
    return Trajectory(t=out[:, 0], q=out[:, 1], p=out[:, 2])


def integrate_reparam(H, lam, y0, tau_span, dtau):
    """Fixed-step RK4 for the reparametrized system in ``tau``.

    ``dq/dtau = lam dH/dp``, ``dp/dtau = -lam dH/dq``, ``dt/dtau = lam``,
    ``ds/dtau = 0``.  The multiplier is sampled at every stage and must stay
    positive.  ``y0.s`` must satisfy the constraint ``s + H = 0``.
    """
    tau0, n = _steps(tau_span, dtau)
    if isinstance(lam, (int, float)):
        lam = TrigMultiplier(c0=float(lam))
    taus = tau0 + dtau * np.arange(2 * n + 1) / 2.0
    if isinstance(lam, TrigMultiplier):
        lam_vals = lam(taus)
    else:
        lam_vals = np.array([lam(x) for x in taus])
    if not np.all(lam_vals > 0):
        bad = taus[np.argmax(~(lam_vals > 0))]
        raise InputError(f"multiplier must be positive; lambda({bad}) = {lam(bad)}")
    e0 = H.energy(y0.q, y0.p)
    if abs(y0.s + e0) > 1e-12 * max(1.0, abs(e0)):
        raise InputError(f"initial s={y0.s} violates s + H = 0 (H = {e0})")
    loop, arrays = _reparam_loop(H, lam)
    out = loop(*arrays, float(y0.q), float(y0.p), float(y0.t), float(y0.s),
               tau0, float(dtau), n)
    _check_finite(out, out[:, 0])
    return ExtendedTrajectory(tau=out[:, 0], t=out[:, 1], q=out[:, 2], p=out[:, 3], s=out[:, 4])


def equivalence_report(traj, ext, H):
    """Compare a standard trajectory with a reparametrized one on the ``t`` grid.

    The reparametrized ``q, p`` are spline-interpolated in ``t``; the report
    gives ``max(|dq| + |dp|)`` and ``max |s + H(q, p)|`` along ``ext``.
    """
    t_ext = ext.t
    if np.any(np.diff(t_ext) <= 0):
        raise InputError("reparametrized t samples must be strictly increasing")
    lo, hi = traj.t[0], traj.t[-1]
    if t_ext[0] > hi or t_ext[-1] < lo:
        raise InputError("time ranges do not overlap")
    if t_ext[0] > lo + 1e-12 or t_ext[-1] < hi - 1e-12:
        raise InputError(f"reparametrized run covers [{t_ext[0]}, {t_ext[-1]}], "
                         f"need [{lo}, {hi}]")
    qs = CubicSpline(t_ext, ext.q)(traj.t)
    ps = CubicSpline(t_ext, ext.p)(traj.t)
    dev = np.abs(qs - traj.q) + np.abs(ps - traj.p)
    drift = np.abs(ext.s + H.energy(ext.q, ext.p))
    return EquivalenceReport(max_dev=float(dev.max()), constraint_drift=float(drift.max()))


def tau_for_time(lam, t_target, tau0=0.0):
    """Parameter value at which ``int_{tau0}^{tau} lam`` reaches ``t_target``."""
    f = lambda x: quad(lam, tau0, x, limit=200)[0] - t_target
    hi = tau0 + 1.0
    while f(hi) < 0:
        hi = tau0 + 2 * (hi - tau0)
    return brentq(f, tau0, hi, xtol=1e-14)


def write_csv(ext, path):
    """Write an extended trajectory with columns ``tau,t,q,p,s``."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["tau", "t", "q", "p", "s"])
        for row in zip(ext.tau, ext.t, ext.q, ext.p, ext.s):
            w.writerow([f"{x:.17g}" for x in row])
