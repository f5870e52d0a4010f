"""Single degree of freedom: truncated oscillator representation and its kernels.

Conventions (hbar = 1).  With ladder operator ``a`` of the fiducial frequency
``Omega``::

    Q = (a + a^dag) / sqrt(2 Omega)
    P = i sqrt(Omega / 2) (a^dag - a)

so that ``[Q, P] = i`` and ``(Omega Q + i P) e_0 = sqrt(2 Omega) a e_0 = 0``.
Coherent vectors follow ``|p, q> = exp(-i q P) exp(i p Q) |eta>``.

Polynomial Hamiltonians are built in a padded space and cropped, which makes
every retained matrix element exact.  "Normal ordering" means subtracting
the fiducial expectation so the fiducial has zero energy; the subtracted
constant is recorded on the representation.
"""

from dataclasses import dataclass
from functools import cached_property
from types import SimpleNamespace

import numpy as np

from . import kernels
from .errors import InputError, TruncationError

__all__ = [
    "HamiltonianSpec",
    "harmonic",
    "number_operator",
    "quartic",
    "polynomial",
    "ladder_ops",
    "OscillatorRep",
    "ConstraintSector",
    "ReducedKernelReport",
    "build_oscillator_rep",
    "coherent_vector",
    "coherent_vectors",
    "overlap_analytic",
    "overlap_matrix",
    "propagator_kernel",
    "constrained_kernel",
    "interval_constrained_kernel",
    "reduced_time_kernel",
    "s_integral",
]


@dataclass(frozen=True)
class HamiltonianSpec:
    """Recipe for a Hamiltonian matrix.

    ``build`` receives a namespace with ``a, ad, Q, P, I`` in a padded
    dimension and returns the operator there; ``degree`` is the polynomial
    degree, used to size the padding.
    """
    build: object
    degree: int
    label: str


def harmonic(omega):
    """``(P^2 + omega^2 Q^2) / 2``."""
    w2 = float(omega) ** 2
    return HamiltonianSpec(lambda o: 0.5 * (o.P @ o.P + w2 * (o.Q @ o.Q)), 2,
                           f"harmonic(omega={omega!r})")


def number_operator(omega):
    """``omega a^dag a`` in the representation's own ladder operators."""
    w = float(omega)
    return HamiltonianSpec(lambda o: w * (o.ad @ o.a), 2, f"number(omega={omega!r})")


def quartic(omega, g):
    """``omega a^dag a + g (a^dag + a)^4``."""
    w, g = float(omega), float(g)

    def build(o):
        x = o.a + o.ad
        x2 = x @ x
        return w * (o.ad @ o.a) + g * (x2 @ x2)
    return HamiltonianSpec(build, 4, f"quartic(omega={omega!r}, g={g!r})")


def polynomial(terms):
    """Sum of ``c * (Q^i P^j + P^j Q^i) / 2`` over ``terms = {(i, j): c}``."""
    terms = {(int(i), int(j)): float(c) for (i, j), c in dict(terms).items()}
    degree = max((i + j for i, j in terms), default=0)

    def build(o):
        out = np.zeros_like(o.I, dtype=complex)
        for (i, j), c in terms.items():
            Qi = np.linalg.matrix_power(o.Q, i)
            Pj = np.linalg.matrix_power(o.P, j)
            out = out + c * 0.5 * (Qi @ Pj + Pj @ Qi)
        return out
    return HamiltonianSpec(build, degree, f"polynomial({sorted(terms.items())})")


def ladder_ops(D, Omega=1.0):
    """Namespace with truncated ``a, ad, Q, P, I`` of dimension ``D``."""
    n = np.arange(D)
    a = np.diag(np.sqrt(n[1:].astype(float)), 1)
    ad = a.T.copy()
    Q = (a + ad) / np.sqrt(2.0 * Omega)
    P = 1j * np.sqrt(Omega / 2.0) * (ad - a)
    return SimpleNamespace(a=a, ad=ad, Q=Q, P=P, I=np.eye(D))


def _exact_crop(spec, D, Omega):
    pad = D + spec.degree + 2
    big = spec.build(ladder_ops(pad, Omega))
    H = np.asarray(big)[:D, :D]
    H = 0.5 * (H + H.conj().T)
    if np.allclose(H.imag, 0.0, atol=0.0):
        H = H.real.copy()
    return H


@dataclass(frozen=True, eq=False)
class OscillatorRep:
    D: int
    Omega: float
    Q: np.ndarray
    P: np.ndarray
    H: np.ndarray
    hamiltonian_label: str
    ordering: str
    ordering_constant: float

    @cached_property
    def spectrum(self):
        """Eigen-decomposition ``(E, U)`` of ``H``, ascending."""
        return np.linalg.eigh(self.H)

    @cached_property
    def _q_eig(self):
        return np.linalg.eigh(self.Q)

    @cached_property
    def _p_eig(self):
        return np.linalg.eigh(self.P)

    @property
    def fiducial(self):
        e0 = np.zeros(self.D, dtype=complex)
        e0[0] = 1.0
        return e0

    def commutator_defect(self, k=2):
        """Max entry of ``[Q, P] - i`` on the leading ``(D-k)`` block."""
        C = self.Q @ self.P - self.P @ self.Q - 1j * np.eye(self.D)
        m = self.D - k
        return float(np.abs(C[:m, :m]).max())

    def fiducial_residual(self):
        """``||(Omega Q + i P) e_0||``."""
        return float(np.linalg.norm((self.Omega * self.Q + 1j * self.P) @ self.fiducial))


def build_oscillator_rep(D, Omega=1.0, hamiltonian_spec=None, normal_order=True):
    """Truncated representation of ``(Q, P)`` with fiducial frequency ``Omega``.

    Parameters
    ----------
    D : int
        Truncation dimension, at least 8.
    Omega : float
        Fiducial frequency; ``(Omega Q + i P)`` annihilates ``e_0``.
    hamiltonian_spec : HamiltonianSpec, optional
        Defaults to ``harmonic(Omega)``.
    normal_order : bool
        Subtract ``<e_0|H|e_0>`` so the fiducial has zero energy.
    """
    D = int(D)
    if D < 8:
        raise InputError(f"D must be at least 8, got {D}")
    if not Omega > 0:
        raise InputError(f"Omega must be positive, got {Omega}")
    spec = hamiltonian_spec if hamiltonian_spec is not None else harmonic(Omega)
    if D < spec.degree + 4:
        raise InputError(f"D={D} too small for a degree-{spec.degree} Hamiltonian")
    ops = ladder_ops(D, Omega)
    H = _exact_crop(spec, D, Omega)
    const = 0.0
    if normal_order:
        const = float(np.real(H[0, 0]))
        H = H - const * np.eye(D)
    return OscillatorRep(D=D, Omega=float(Omega), Q=ops.Q, P=ops.P, H=H,
                         hamiltonian_label=spec.label,
                         ordering="fiducial" if normal_order else "none",
                         ordering_constant=const)


def _apply_exp(eig, coeff, v):
    # exp(i * coeff * A) v with A = U diag(e) U^dag
    e, U = eig
    return U @ (np.exp(1j * coeff * e) * (U.conj().T @ v))


def coherent_vector(rep, p, q, tail_tol=1e-10, fiducial=None):
    """``exp(-i q P) exp(i p Q)`` applied to the fiducial.

    The exponentials are applied through eigen-decompositions of the
    truncated ``Q`` and ``P``.  Raises :class:`TruncationError` when the top
    two levels carry more than ``tail_tol`` probability.
    """
    v = rep.fiducial if fiducial is None else np.asarray(fiducial, dtype=complex)
    v = _apply_exp(rep._q_eig, p, v)
    v = _apply_exp(rep._p_eig, -q, v)
    tail = float(np.sum(np.abs(v[-2:]) ** 2))
    if tail > tail_tol:
        raise TruncationError(
            f"coherent vector (p={p}, q={q}) leaks {tail:.3e} into the top levels "
            f"of D={rep.D}; increase D",
            diagnostics={"p": p, "q": q, "D": rep.D, "tail": tail})
    return v


def coherent_vectors(rep, labels, **kw):
    """Columns ``|p_j, q_j>`` for ``labels = [(p, q), ...]``."""
    return np.column_stack([coherent_vector(rep, p, q, **kw) for p, q in labels])


def overlap_analytic(p2, q2, p1, q1, Omega=1.0):
    """Closed-form ``<p2, q2 | p1, q1>`` for the Omega-oscillator fiducial."""
    dp = p2 - p1
    dq = q2 - q1
    return complex(np.exp(0.5j * (p2 + p1) * dq - 0.25 * (dp * dp / Omega + Omega * dq * dq)))


def overlap_matrix(labels, Omega=1.0):
    """Gram matrix of :func:`overlap_analytic` over ``labels``."""
    lab = np.asarray(labels, dtype=float).reshape(-1, 2)
    return kernels.overlap_gram_1dof(np.ascontiguousarray(lab[:, 0]),
                                     np.ascontiguousarray(lab[:, 1]), float(Omega))


def _spectral_sandwich(rep, V, weights):
    E, U = rep.spectrum
    A = U.conj().T @ V
    return A.conj().T @ (weights[:, None] * A)


def _vectors(rep, labels, vectors):
    if vectors is not None:
        V = np.asarray(vectors, dtype=complex)
        return V[:, None] if V.ndim == 1 else V
    return coherent_vectors(rep, labels)


def propagator_kernel(rep, dt, labels=None, vectors=None):
    """``<v_j| exp(-i dt H) |v_k>`` over coherent labels (or explicit vectors)."""
    V = _vectors(rep, labels, vectors)
    E, _ = rep.spectrum
    return _spectral_sandwich(rep, V, np.exp(-1j * dt * E))


@dataclass(frozen=True)
class ConstraintSector:
    """Constraint data: Gaussian width ``Lambda``, interval half-width ``delta``.

    ``s2, t2`` label the bra and ``s1, t1`` the ket.
    """
    Lambda: float
    delta: float = 1e-3
    s2: float = 0.0
    t2: float = 0.0
    s1: float = 0.0
    t1: float = 0.0

    def __post_init__(self):
        if not self.Lambda > 0:
            raise InputError(f"Lambda must be positive, got {self.Lambda}")
        if not self.delta > 0:
            raise InputError(f"delta must be positive, got {self.delta}")

    @property
    def dt(self):
        return self.t2 - self.t1


def constrained_kernel(rep, sector, labels=None, vectors=None):
    """Kernel after imposing the constraint through its Gaussian surrogate.

    Per eigenvalue ``E`` of ``H`` the channel weight is
    ``exp(-(s2+E)^2/2L) exp(-i dt E) exp(-(s1+E)^2/2L)``.
    """
    V = _vectors(rep, labels, vectors)
    E, _ = rep.spectrum
    L = sector.Lambda
    w = (np.exp(-(sector.s2 + E) ** 2 / (2 * L)) * np.exp(-1j * sector.dt * E)
         * np.exp(-(sector.s1 + E) ** 2 / (2 * L)))
    return _spectral_sandwich(rep, V, w)


def interval_constrained_kernel(rep, sector, labels=None, vectors=None):
    """Sharp spectral projection: keep channels with ``|s + E| <= delta`` on both sides."""
    V = _vectors(rep, labels, vectors)
    E, _ = rep.spectrum
    keep = (np.abs(sector.s2 + E) <= sector.delta) & (np.abs(sector.s1 + E) <= sector.delta)
    return _spectral_sandwich(rep, V, keep * np.exp(-1j * sector.dt * E))


def s_integral(energies, Lambda, step=0.5, width=40.0):
    """Trapezoid values of ``int exp(-(s + E)^2 / 2 Lambda) ds`` for each ``E``.

    All energies share one uniform ``s`` grid with spacing ``step*sqrt(Lambda)``
    extending ``width`` standard deviations past the extreme energies, so
    the per-channel integrals are computed, not assumed equal.
    """
    E = np.asarray(energies, dtype=float)
    sig = np.sqrt(Lambda)
    h = step * sig
    lo = -E.max() - width * sig
    hi = -E.min() + width * sig
    n = int(np.ceil((hi - lo) / h)) + 1
    k = int(np.ceil(width * sig / h))
    out = np.empty(E.size)
    for i, e in enumerate(E):
        # only points where the integrand is representable matter
        c = int(round((-e - lo) / h))
        seg = lo + h * np.arange(max(c - k, 0), min(c + k + 1, n))
        f = np.exp(-(seg + e) ** 2 / (2 * Lambda))
        out[i] = h * (f.sum() - 0.5 * (f[0] + f[-1]))
    return out


@dataclass(frozen=True)
class ReducedKernelReport:
    reduced: np.ndarray
    propagator: np.ndarray
    max_dev: float
    s_integrals: np.ndarray
    normalization: float


def reduced_time_kernel(rep, Lambda, dt, labels=None, vectors=None):
    """Integrate ``s2`` and ``s1`` out of the constrained kernel.

    Each channel picks up ``I(E)^2`` with ``I(E) = int exp(-(s+E)^2/2L) ds``,
    computed by quadrature; dividing by the constant ``2 pi L`` returns the
    plain propagator.  The report carries both matrices and their deviation.
    """
    if not Lambda > 0:
        raise InputError(f"Lambda must be positive, got {Lambda}")
    V = _vectors(rep, labels, vectors)
    E, _ = rep.spectrum
    I = s_integral(E, Lambda)
    norm = 2.0 * np.pi * Lambda
    reduced = _spectral_sandwich(rep, V, (I * I / norm) * np.exp(-1j * dt * E))
    prop = _spectral_sandwich(rep, V, np.exp(-1j * dt * E))
    return ReducedKernelReport(reduced=reduced, propagator=prop,
                               max_dev=float(np.abs(reduced - prop).max()),
                               s_integrals=I, normalization=norm)
