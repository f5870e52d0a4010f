"""Free scalar field: from an ultralocal start to the relativistic kernel.

The ultralocal representation with parameter ``M`` puts every site (and,
because the site-to-mode map is orthogonal, every real Fourier mode) in the
ground state of an ``M``-oscillator.  Mode truncation keeps the first ``N``
modes of the free Hamiltonian; recentering replaces each retained mode's
fiducial by the ground state of its Hamiltonian, after which the kernel is
the relativistic one for mass ``m`` and ``M`` is gone.

Coherent states here use the symmetric (Weyl) phase convention
``|pi, phi> = exp(i[phi(pi) - pi(phi)]) |eta>``; the one-dof module uses
``exp(-iqP) exp(ipQ)``.  The two differ by ``exp(-i p q / 2)`` per mode.
"""

from dataclasses import dataclass, field
import math

import numpy as np
from scipy.special import gammaln

from . import kernels
from .errors import InputError
from .kernel_core import fix_phase, recenter
from .lattice import FieldConfig, LatticeSpec
from .oscillator import OscillatorRep, build_oscillator_rep, coherent_vector, harmonic

__all__ = [
    "ModeOscillator",
    "mode_dimension",
    "ultralocal_overlap",
    "ultralocal_gram",
    "relativistic_kernel",
    "relativistic_mode_kernel",
    "truncated_hamiltonian",
    "incompatibility_diagnostics",
    "DiagnosticsRow",
    "recentered_kernel",
    "RecenteredKernelReport",
    "squeezed_vacuum",
    "vacuum_overlap",
    "weyl_overlap_modes",
]


# ---------------------------------------------------------------------------
# closed forms

def vacuum_overlap(omega1, omega2):
    """``<eta_omega1 | eta_omega2>`` for oscillator ground states (real, positive)."""
    w1, w2 = float(omega1), float(omega2)
    return math.sqrt(2.0 * math.sqrt(w1 * w2) / (w1 + w2))


def squeezed_vacuum(D, M, omega):
    """Ground state of ``(P^2 + omega^2 Q^2)/2`` expanded in the ``M``-oscillator basis.

    Only even levels are populated:
    ``c_2k = (1 - t^2)^(1/4) (-t/2)^k sqrt((2k)!) / k!`` with
    ``t = (omega - M) / (omega + M)``.
    """
    t = (omega - M) / (omega + M)
    c = np.zeros(D)
    k = np.arange((D + 1) // 2)
    logmag = 0.25 * np.log1p(-t * t) + 0.5 * gammaln(2 * k + 1) - gammaln(k + 1) - k * np.log(2.0)
    if t != 0:
        logmag = logmag + k * np.log(abs(t))
        sign = np.where(k % 2 == 1, -np.sign(t), 1.0)
    else:
        logmag = np.where(k == 0, logmag, -np.inf)
        sign = np.ones_like(logmag)
    c[0::2] = sign * np.exp(logmag)
    return c


def _z(p, q, omega):
    return (np.sqrt(omega) * q + 1j * p / np.sqrt(omega)) / np.sqrt(2.0)


def weyl_overlap_modes(p2, q2, p1, q1, omega, dt=0.0):
    """Per-mode Weyl coherent-state kernel of an ``omega``-oscillator, summed in the exponent.

    ``exp(sum_n -|z2|^2/2 - |z1|^2/2 + conj(z2) exp(-i omega dt) z1)``.
    """
    omega = np.asarray(omega, dtype=float)
    z2 = _z(np.asarray(p2), np.asarray(q2), omega)
    z1 = _z(np.asarray(p1), np.asarray(q1), omega)
    expo = -0.5 * np.abs(z2) ** 2 - 0.5 * np.abs(z1) ** 2 + np.conj(z2) * np.exp(-1j * omega * dt) * z1
    return complex(np.exp(np.sum(expo)))


# ---------------------------------------------------------------------------
# ultralocal and relativistic kernels

def ultralocal_overlap(f2, f1, M, spec):
    """Coherent-state overlap of the ultralocal ``M`` representation.

    ``L2 L1 exp(cell * sum_x conj(u2) u1)``, ``u = (sqrt(M) phi + i pi / sqrt(M)) / sqrt(2)``,
    ``L = exp(-cell/2 sum |u|^2)``.
    """
    if not M > 0:
        raise InputError(f"M must be positive, got {M}")
    pi2, phi2 = f2.check(spec).flat()
    pi1, phi1 = f1.check(spec).flat()
    u2 = (np.sqrt(M) * phi2 + 1j * pi2 / np.sqrt(M)) / np.sqrt(2.0)
    u1 = (np.sqrt(M) * phi1 + 1j * pi1 / np.sqrt(M)) / np.sqrt(2.0)
    c = spec.cell
    expo = -0.5 * c * np.sum(np.abs(u2) ** 2) - 0.5 * c * np.sum(np.abs(u1) ** 2) + c * np.sum(np.conj(u2) * u1)
    return complex(np.exp(expo))


def ultralocal_gram(configs, M, spec, M_phi=None):
    """Gram matrix of the ultralocal overlap; ``M_phi`` overrides the field coefficient."""
    pis = np.array([f.check(spec).flat()[0] for f in configs])
    phis = np.array([f.flat()[1] for f in configs])
    c = np.full(spec.sites, 1.0 / M)
    d = np.full(spec.sites, float(M if M_phi is None else M_phi))
    return kernels.gaussian_weyl_gram(pis, phis, c, d, spec.cell)


def _check_mass(m, spec):
    if spec.d == 1 and not m > 0:
        raise InputError("m = 0 is excluded in one space dimension (infrared caveat); "
                         f"got m = {m}")
    if m < 0:
        raise InputError(f"m must be non-negative, got {m}")


def relativistic_kernel(f2, f1, m, dt, spec):
    """Free-field propagator between coherent states, via the discrete Fourier transform.

    ``N2 N1 exp(int conj(z2(k)) exp(-i dt omega(k)) z1(k) d^dk)`` with
    ``z = (sqrt(omega) phit + i pit / sqrt(omega)) / sqrt(2)`` and the
    unitary transform ``phit(k) = (2 pi)^(-d/2) int exp(-ikx) phi(x) d^dx``.
    """
    _check_mass(m, spec)
    f2.check(spec)
    f1.check(spec)
    axes = tuple(range(spec.d))
    norm = spec.cell / (2 * np.pi) ** (spec.d / 2)

    def ft(a):
        return norm * np.fft.fftn(np.asarray(a).reshape(spec.shape), axes=axes)

    freqs = np.meshgrid(*[2 * np.pi * np.fft.fftfreq(spec.n, d=spec.dx)] * spec.d, indexing="ij")
    k2 = sum(f * f for f in freqs)
    omega = np.sqrt(k2 + m * m)
    zero = omega == 0
    if np.any(zero):
        if np.any(np.abs(ft(f2.pi)[zero]) > 0) or np.any(np.abs(ft(f1.pi)[zero]) > 0):
            raise InputError("m = 0 with a nonzero momentum zero mode has no coherent state")
    safe = np.where(zero, 1.0, omega)

    def z(f):
        return (np.sqrt(omega) * ft(f.phi) + 1j * ft(f.pi) / np.sqrt(safe)) / np.sqrt(2.0)

    z2, z1 = z(f2), z(f1)
    dk = spec.dk
    expo = dk * (-0.5 * np.sum(np.abs(z2) ** 2) - 0.5 * np.sum(np.abs(z1) ** 2)
                 + np.sum(np.conj(z2) * np.exp(-1j * dt * omega) * z1))
    return complex(np.exp(expo))


def relativistic_mode_kernel(f2, f1, m, dt, spec, modes=None):
    """Same kernel evaluated in the real mode basis, optionally on a subset of modes."""
    _check_mass(m, spec)
    omega = spec.dispersion(m)
    p2, q2 = spec.to_modes(f2.pi), spec.to_modes(f2.phi)
    p1, q1 = spec.to_modes(f1.pi), spec.to_modes(f1.phi)
    idx = slice(None) if modes is None else np.asarray(modes)
    return weyl_overlap_modes(p2[idx], q2[idx], p1[idx], q1[idx], omega[idx], dt)


# ---------------------------------------------------------------------------
# truncated Hamiltonian

def mode_dimension(D, omega, M, eps=1e-13, margin=24):
    """Per-mode truncation: at least ``D`` and enough for the squeezing ``omega/M``.

    Floor ``40 + 20 |log(omega/M)|``, raised until the squeezed-vacuum
    amplitude at level ``D``, roughly ``t**(D/2)`` with
    ``t = |omega - M| / (omega + M)``, drops below ``eps``, plus a
    displacement margin.
    """
    t = abs(omega - M) / (omega + M)
    need = 40 + 20 * abs(math.log(omega / M))
    if t > 0:
        need = max(need, 2 * math.log(eps) / math.log(t) + margin)
    return int(max(D, math.ceil(need)))


@dataclass(frozen=True, eq=False)
class ModeOscillator:
    index: int
    k: float
    omega: float
    M: float
    rep: OscillatorRep

    @property
    def D(self):
        return self.rep.D


def truncated_hamiltonian(N, m, M, D, spec, omegas=None, adaptive=True):
    """Oscillators for the first ``N`` modes in the ``M``-fiducial representation.

    Each carries ``(p^2 + omega_n^2 q^2)/2`` normal-ordered with respect to
    the ultralocal fiducial.  Modes beyond ``N`` are untouched (identity
    dynamics).  ``omegas`` replaces the lattice dispersion when given.
    """
    if not M > 0:
        raise InputError(f"M must be positive, got {M}")
    if D < 8:
        raise InputError(f"D must be at least 8, got {D}")
    if omegas is None:
        if N > spec.sites:
            raise InputError(f"N={N} exceeds the {spec.sites} lattice modes")
        _check_mass(m, spec)
        omegas = spec.dispersion(m)[:N]
        ks = spec.mode_k[:N]
    else:
        omegas = np.asarray(omegas, dtype=float)[:N]
        ks = np.sqrt(np.maximum(omegas ** 2 - m * m, 0.0))
        if omegas.size < N:
            raise InputError(f"need {N} frequencies, got {omegas.size}")
    out = []
    cache = {}
    for i, (k, w) in enumerate(zip(ks, omegas)):
        Dn = mode_dimension(D, w, M) if adaptive else int(D)
        key = (float(w), Dn)
        if key not in cache:
            cache[key] = build_oscillator_rep(Dn, M, harmonic(w), normal_order=True)
        out.append(ModeOscillator(index=i, k=float(k), omega=float(w), M=float(M), rep=cache[key]))
    return out


# ---------------------------------------------------------------------------
# incompatibility signals

@dataclass(frozen=True)
class DiagnosticsRow:
    N: int
    damped_overlap: float
    time_kernel_modulus: float
    vacuum_overlap_bound: float
    recenter_deviation: float


def _fiducial_factors(mode, Lambda, dt):
    E, U = mode.rep.spectrum
    w = np.abs(U[0, :]) ** 2
    damped = float(w @ np.exp(-(E * E) / Lambda))
    timek = float(abs(w @ np.exp(-1j * dt * E)))
    return damped, timek


def incompatibility_diagnostics(N_list, m, M, Lambda, dt, spec, D, omegas=None,
                                labels_per_mode=None, seed=0):
    """Vanishing and discontinuity signals of the unrecentered kernel versus ``N``.

    ``damped_overlap`` is the product over retained modes of
    ``<eta_M| exp(-H_n^2/Lambda) |eta_M>``; ``time_kernel_modulus`` the
    product of ``|<eta_M| exp(-i dt H_n) |eta_M>|``.  ``recenter_deviation``
    is the largest gap between the recentered and relativistic kernels over a
    small deterministic set of mode-space labels, with the same ``N``.
    """
    if not (Lambda > 0 and M > 0):
        raise InputError("Lambda and M must be positive")
    N_list = sorted(int(n) for n in N_list)
    Nmax = N_list[-1] if N_list else 0
    modes = truncated_hamiltonian(Nmax, m, M, D, spec, omegas=omegas)
    factors = {}
    for mode in modes:
        key = id(mode.rep)
        if key not in factors:
            factors[key] = _fiducial_factors(mode, Lambda, dt)

    rng = np.random.default_rng(seed)
    J = 3 if labels_per_mode is None else int(labels_per_mode)
    lab = 0.3 * rng.standard_normal((J, Nmax, 2))
    mode_kernels = _recentered_mode_factors(modes, Lambda, lab[..., 0], lab[..., 1], [dt])

    rows = []
    damped = timek = bound = 1.0
    rec = np.ones((J, J), dtype=complex)
    rel = np.ones((J, J), dtype=complex)
    done = 0
    for N in N_list:
        while done < N:
            mode = modes[done]
            a, b = factors[id(mode.rep)]
            damped *= a
            timek *= b
            bound *= vacuum_overlap(M, mode.omega)
            rec *= mode_kernels[done][0]
            for j in range(J):
                for k in range(J):
                    rel[j, k] *= weyl_overlap_modes(lab[j, done, 0], lab[j, done, 1],
                                                    lab[k, done, 0], lab[k, done, 1],
                                                    mode.omega, dt)
            done += 1
        rows.append(DiagnosticsRow(N=N, damped_overlap=damped, time_kernel_modulus=timek,
                                   vacuum_overlap_bound=bound,
                                   recenter_deviation=float(np.abs(rec - rel).max())))
    return rows


# ---------------------------------------------------------------------------
# recentering

@dataclass(frozen=True)
class ModeRecentering:
    index: int
    omega: float
    D: int
    fiducial_overlap: float
    analytic_overlap: float
    squeezed_deviation: float
    ground_energy: float
    discarded_factor: float
    degeneracy: int


def _recenter_mode(mode, Lambda):
    """Ground state of the mode Hamiltonian found by quotient maximization.

    The quotient uses the symmetric (unordered) Hamiltonian, which is a
    nonnegative operator, so its smallest |E| is the ground level.  The
    fiducial-ordered form shifts the spectrum by ``-(omega-M)^2/4M`` and can
    put an excited level nearest zero.
    """
    rep = mode.rep
    H_sym = rep.H + rep.ordering_constant * np.eye(rep.D)
    fid = recenter(H_sym, Lambda)
    v = fid.vector
    E, U = np.linalg.eigh(H_sym)
    e0 = float(np.real(v.conj() @ H_sym @ v))
    sq = squeezed_vacuum(rep.D, mode.M, mode.omega)
    info = ModeRecentering(
        index=mode.index, omega=mode.omega, D=rep.D,
        fiducial_overlap=float(abs(v[0])),
        analytic_overlap=vacuum_overlap(mode.M, mode.omega),
        squeezed_deviation=float(np.abs(fix_phase(v) - sq).max()),
        ground_energy=e0,
        discarded_factor=fid.quotient_achieved,
        degeneracy=fid.degeneracy)
    # renormal-order with respect to the new fiducial
    return v, E - e0, U, info


def _recentered_mode_factors(modes, Lambda, P, Q, dts):
    """Per-mode kernel matrices ``<W(p_j,q_j) v| exp(-i dt H) |W(p_k,q_k) v>``.

    ``P, Q`` have shape ``(J, len(modes))``.  Returns a list (one per mode) of
    arrays of shape ``(len(dts), J, J)``.
    """
    out = []
    cache = {}
    for n, mode in enumerate(modes):
        key = id(mode.rep)
        if key not in cache:
            cache[key] = _recenter_mode(mode, Lambda)
        v, E, U, _ = cache[key]
        cols = []
        for p, q in zip(P[:, n], Q[:, n]):
            # Weyl operator = exp(-iqP) exp(ipQ) exp(ipq/2)
            cols.append(coherent_vector(mode.rep, p, q, fiducial=v) * np.exp(0.5j * p * q))
        A = U.conj().T @ np.column_stack(cols)
        mats = np.array([A.conj().T @ (np.exp(-1j * dt * E)[:, None] * A) for dt in dts])
        out.append(mats)
    return out


@dataclass(frozen=True)
class RecenteredKernelReport:
    N: int
    M: float
    m: float
    dts: tuple
    deviation_retained: float
    deviation_full: float
    modes: tuple = field(default_factory=tuple)

    @property
    def max_squeezed_deviation(self):
        return max((r.squeezed_deviation for r in self.modes), default=0.0)


def recentered_kernel(N, m, M, Lambda, dt, labels, spec, D):
    """Kernel matrix over field-configuration labels after recentering ``N`` modes.

    Parameters
    ----------
    N : int
        Number of retained modes (in mode order).
    m, M : float
        Target mass and ultralocal parameter.
    Lambda : float
        Width of the damping used in the quotient maximization.
    dt : float or sequence of float
        Time difference(s) ``t'' - t'``.
    labels : list of FieldConfig
    spec : LatticeSpec
    D : int
        Minimum per-mode truncation; raised per mode by :func:`mode_dimension`.

    Returns
    -------
    K : ndarray
        ``(J, J)`` for scalar ``dt`` or ``(T, J, J)`` for a sequence.
    report : RecenteredKernelReport
        Deviations from the relativistic kernel on the retained modes and,
        when every mode is retained, from the Fourier-route kernel.
    """
    scalar = np.isscalar(dt)
    dts = [float(dt)] if scalar else [float(x) for x in dt]
    if not Lambda > 0:
        raise InputError(f"Lambda must be positive, got {Lambda}")
    labels = [f.check(spec) for f in labels]
    modes = truncated_hamiltonian(N, m, M, D, spec)
    amps = np.array([[spec.to_modes(f.pi), spec.to_modes(f.phi)] for f in labels])
    P, Q = amps[:, 0, :], amps[:, 1, :]
    J = len(labels)

    per_mode = _recentered_mode_factors(modes, Lambda, P[:, :N], Q[:, :N], dts)
    K = np.ones((len(dts), J, J), dtype=complex)
    for mats in per_mode:
        K *= mats

    # relativistic kernel on the retained modes, closed form per mode
    omega = spec.dispersion(m)[:N]
    rel = np.empty_like(K)
    for t, dtv in enumerate(dts):
        for j in range(J):
            for k in range(J):
                rel[t, j, k] = weyl_overlap_modes(P[j, :N], Q[j, :N], P[k, :N], Q[k, :N], omega, dtv)
    dev_retained = float(np.abs(K - rel).max()) if J else 0.0

    # untouched modes keep the ultralocal fiducial and trivial dynamics
    rest = np.ones((J, J), dtype=complex)
    if N < spec.sites:
        wM = np.full(spec.sites - N, float(M))
        for j in range(J):
            for k in range(J):
                rest[j, k] = weyl_overlap_modes(P[j, N:], Q[j, N:], P[k, N:], Q[k, N:], wM)
    K = K * rest[None]

    dev_full = float("nan")
    if N == spec.sites:
        full = np.array([[[relativistic_kernel(labels[j], labels[k], m, dtv, spec)
                           for k in range(J)] for j in range(J)] for dtv in dts])
        dev_full = float(np.abs(K - full).max())

    seen = {}
    for mode in modes:
        if id(mode.rep) not in seen:
            seen[id(mode.rep)] = _recenter_mode(mode, Lambda)[3]
    infos = tuple(seen[id(mode.rep)].__class__(**{**seen[id(mode.rep)].__dict__, "index": mode.index})
                  for mode in modes)
    report = RecenteredKernelReport(N=N, M=float(M), m=float(m), dts=tuple(dts),
                                    deviation_retained=dev_retained, deviation_full=dev_full,
                                    modes=infos)
    return (K[0] if scalar else K), report
