"""Reproducing-kernel machinery: Gram sections, PSD checks, quotients, recentering.

Everything here works on finite sections only.  A kernel is any callable
``kernel(label_a, label_b) -> complex``; a truncated operator is a dense
Hermitian numpy array.
"""

from dataclasses import dataclass, field
import warnings

import numpy as np

from .errors import InputError, KernelEvaluationError, NumericalError

__all__ = [
    "GramMatrix",
    "PSDReport",
    "QuotientSet",
    "RecenteredFiducial",
    "DegenerateMaximizerWarning",
    "gram_matrix",
    "psd_check",
    "quotient_set",
    "recenter",
    "fix_phase",
]


class DegenerateMaximizerWarning(UserWarning):
    """The quotient maximizer is not unique after tie-breaking."""


@dataclass(frozen=True)
class GramMatrix:
    labels: tuple
    entries: np.ndarray

    @property
    def size(self):
        return self.entries.shape[0]

    def is_hermitian(self):
        return bool(np.array_equal(self.entries, self.entries.conj().T))


@dataclass(frozen=True)
class PSDReport:
    min_eig: float
    norm: float
    tol: float
    passed: bool

    # ``pass`` is a keyword; keep the documented name available anyway.
    def __getitem__(self, key):
        if key == "pass":
            return self.passed
        return getattr(self, key)


@dataclass(frozen=True)
class QuotientSet:
    coefficients: np.ndarray
    numerators: np.ndarray
    denominators: np.ndarray
    values: np.ndarray


@dataclass(frozen=True)
class RecenteredFiducial:
    vector: np.ndarray
    quotient_achieved: float
    iterations: int
    energy: float = 0.0
    degeneracy: int = 1
    extras: dict = field(default_factory=dict)


def gram_matrix(kernel, labels):
    """Materialize ``K[j, k] = kernel(labels[j], labels[k])``.

    Only the upper triangle and diagonal are evaluated; the lower triangle is
    filled by conjugation so the result is Hermitian bit for bit.  The
    diagonal is computed, never assumed.
    """
    labels = tuple(labels)
    if not labels:
        raise InputError("gram_matrix needs at least one label")
    n = len(labels)
    K = np.empty((n, n), dtype=complex)
    for j in range(n):
        for k in range(j, n):
            val = complex(kernel(labels[j], labels[k]))
            if not np.isfinite(val):
                raise KernelEvaluationError(
                    f"non-finite kernel value {val!r} at pair ({j}, {k})", pair=(j, k))
            if j == k:
                # a Hermitian kernel is real on the diagonal; drop rounding noise
                K[j, j] = val.real
            else:
                K[j, k] = val
                K[k, j] = val.conjugate()
    return GramMatrix(labels=labels, entries=K)


def psd_check(G, tol=1e-10):
    """Smallest eigenvalue of a Hermitian matrix against a relative tolerance.

    Passes iff ``min_eig >= -tol * max(1, ||G||_2)``.
    """
    A = G.entries if isinstance(G, GramMatrix) else np.asarray(G)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InputError(f"expected a square matrix, got shape {A.shape}")
    try:
        eig = np.linalg.eigvalsh(A)
    except np.linalg.LinAlgError as exc:
        cond = np.linalg.cond(A) if np.all(np.isfinite(A)) else np.inf
        raise NumericalError(f"eigenvalue solver failed: {exc}",
                             diagnostics={"condition_number": float(cond),
                                          "shape": A.shape}) from exc
    norm = float(np.max(np.abs(eig)))
    min_eig = float(eig[0])
    passed = min_eig >= -tol * max(1.0, norm)
    return PSDReport(min_eig=min_eig, norm=norm, tol=tol, passed=bool(passed))


def _spectral(H):
    H = np.asarray(H)
    if not np.allclose(H, H.conj().T, rtol=0, atol=1e-12 * max(1.0, np.abs(H).max())):
        raise InputError("operator is not Hermitian")
    return np.linalg.eigh(H)


def quotient_set(H, vectors, Lambda, trials, spectrum=None):
    """Damped-to-plain norm quotients for linear combinations of vectors.

    For each coefficient vector ``a`` in ``trials`` and ``psi = sum_j a_j v_j``
    the value is ``<psi| exp(-H^2/Lambda) |psi> / <psi|psi>``, evaluated in
    the eigenbasis of ``H``.  ``vectors`` holds the ``v_j`` as columns.
    """
    if not Lambda > 0:
        raise InputError(f"Lambda must be positive, got {Lambda}")
    V = np.asarray(vectors)
    if V.ndim == 1:
        V = V[:, None]
    E, U = spectrum if spectrum is not None else _spectral(H)
    damp = np.exp(-(E * E) / Lambda)

    trials = np.atleast_2d(np.asarray(trials, dtype=complex))
    if trials.shape[1] != V.shape[1]:
        raise InputError(f"trial length {trials.shape[1]} does not match "
                         f"{V.shape[1]} vectors")
    nums, dens = [], []
    for a in trials:
        if not np.any(a):
            raise InputError("all-zero coefficient vector")
        psi = V @ a
        amp = U.conj().T @ psi
        w = np.abs(amp) ** 2
        nums.append(float(w @ damp))
        dens.append(float(w.sum()))
    nums = np.array(nums)
    dens = np.array(dens)
    return QuotientSet(coefficients=trials, numerators=nums,
                       denominators=dens, values=nums / dens)


def fix_phase(v):
    """Rotate ``v`` so its largest-modulus component is real and positive."""
    v = np.asarray(v, dtype=complex)
    i = int(np.argmax(np.abs(v)))
    return v * (abs(v[i]) / v[i])


def recenter(H, Lambda=1.0, span=None, degeneracy_tol=1e-10):
    """Unit vector maximizing the damped quotient of ``H``.

    Over the full truncated space the maximizer of
    ``<v|exp(-H^2/Lambda)|v>`` is the eigenvector of ``H`` whose eigenvalue
    has the smallest square.  Ties go to the smaller ``H`` eigenvalue, then
    to the lower index in the eigen-solver's ascending order.  With ``span``
    (columns spanning a subspace) the generalized eigenproblem of the
    projected damping operator is solved instead.

    A maximizer that stays degenerate after tie-breaking triggers a
    :class:`DegenerateMaximizerWarning` carrying the dimension.
    """
    if not Lambda > 0:
        raise InputError(f"Lambda must be positive, got {Lambda}")
    E, U = _spectral(H)

    if span is None:
        sq = E * E
        order = np.lexsort((np.arange(E.size), E, sq))
        best = order[0]
        tol = degeneracy_tol * max(1.0, float(sq.max()))
        tied = np.flatnonzero(np.abs(sq - sq[best]) <= tol)
        same_energy = tied[np.abs(E[tied] - E[best]) <= degeneracy_tol * max(1.0, abs(E[best]))]
        degeneracy = int(same_energy.size)
        if degeneracy > 1:
            warnings.warn(f"recenter: maximizer degenerate, dimension {degeneracy}",
                          DegenerateMaximizerWarning, stacklevel=2)
        v = fix_phase(U[:, best])
        q = float(np.exp(-sq[best] / Lambda))
        return RecenteredFiducial(vector=v, quotient_achieved=q, iterations=1,
                                  energy=float(E[best]), degeneracy=degeneracy)

    B = np.asarray(span, dtype=complex)
    if B.ndim == 1:
        B = B[:, None]
    # orthonormalize the span, dropping numerically dependent directions
    Qb, R = np.linalg.qr(B)
    keep = np.abs(np.diag(R)) > 1e-12 * max(1.0, np.abs(R).max())
    Qb = Qb[:, keep]
    A = U @ (np.exp(-(E * E) / Lambda)[:, None] * U.conj().T)
    small = Qb.conj().T @ A @ Qb
    mu, C = np.linalg.eigh(0.5 * (small + small.conj().T))
    top = mu[-1]
    degeneracy = int(np.sum(np.abs(mu - top) <= degeneracy_tol * max(1.0, abs(top))))
    if degeneracy > 1:
        warnings.warn(f"recenter: maximizer degenerate, dimension {degeneracy}",
                      DegenerateMaximizerWarning, stacklevel=2)
    v = fix_phase(Qb @ C[:, -1])
    v /= np.linalg.norm(v)
    energy = float(np.real(v.conj() @ (np.asarray(H) @ v)))
    return RecenteredFiducial(vector=v, quotient_achieved=float(top), iterations=1,
                              energy=energy, degeneracy=degeneracy)
