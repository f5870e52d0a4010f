"""Quartic lattice field on a handful of sites.

Each site carries canonical coordinates ``Q_x = sqrt(cell) phi_x`` and
``P_x = sqrt(cell) pi_x`` represented in the truncated ``M``-oscillator basis,
so the full space is the tensor product of ``sites`` copies of dimension
``D``.  In those coordinates::

    H = sum_x P_x^2 / 2 + Q^T (G + m0^2 + dm^2) Q / 2 + (g / cell) sum_x Q_x^4

with ``G`` the spectral lattice Laplacian.  ``H`` is available as a dense
matrix (small cases) and as a matrix-free site-term application.  The
ground state is found by restarted Lanczos, seeded from the product
fiducial.
"""

from dataclasses import dataclass, field, replace
import math

import numpy as np

from . import kernels
from .errors import ConvergenceError, InputError, TruncationError
from .kernel_core import fix_phase, recenter
from .lattice import FieldConfig, LatticeSpec
from .oscillator import ladder_ops, polynomial, _exact_crop

__all__ = [
    "Phi4Spec",
    "Phi4Operator",
    "GroundState",
    "Phi4KernelReport",
    "ring_laplacian",
    "phi4_hamiltonian",
    "lanczos_ground",
    "ground_state_iterative",
    "ground_state_dense",
    "krylov_propagate",
    "kurtosis_excess",
    "recentered_phi4_kernel",
]

DENSE_LIMIT = 4096
MATRIX_FREE_LIMIT = 10 ** 6


@dataclass(frozen=True)
class Phi4Spec:
    """Model data.

    ``counterterm`` is an additive mass shift ``dm^2``; ``counterterm_source``
    records where the value came from (default: none supplied).
    """
    sites: int = 2
    m0: float = 1.0
    g: float = 0.2
    M: float = 1.0
    D: int = 24
    dx: float = 1.0
    counterterm: float = 0.0
    counterterm_source: str = "none"

    def __post_init__(self):
        if int(self.sites) != self.sites or not 1 <= self.sites <= 4:
            raise InputError(f"sites must be an integer in 1..4, got {self.sites}")
        if not self.g >= 0:
            raise InputError(f"g must be non-negative, got {self.g}")
        if not self.M > 0:
            raise InputError(f"M must be positive, got {self.M}")
        if not self.dx > 0:
            raise InputError(f"dx must be positive, got {self.dx}")
        if int(self.D) != self.D or self.D < 8:
            raise InputError(f"D must be an integer >= 8, got {self.D}")
        if not np.isfinite(self.m0) or not np.isfinite(self.counterterm):
            raise InputError("m0 and counterterm must be finite")

    @property
    def cell(self):
        return float(self.dx)

    @property
    def dim(self):
        return int(self.D) ** int(self.sites)


def ring_laplacian(sites, dx):
    """Spectral Laplacian form on a ring: eigenvalues ``k_j^2``, ``k_j = 2 pi j / (sites dx)``."""
    k = 2 * np.pi * np.fft.fftfreq(sites, d=dx)
    x = np.arange(sites)
    diff = (x[:, None] - x[None, :]) * dx
    return np.real(np.exp(1j * diff[..., None] * k) @ (k * k)) / sites


def _geometry(spec, lattice):
    if lattice is None:
        return ring_laplacian(spec.sites, spec.dx), spec.cell
    if not isinstance(lattice, LatticeSpec) or lattice.d != 1 or lattice.n != spec.sites:
        raise InputError("lattice must be a one-dimensional LatticeSpec with n == sites")
    if abs(lattice.dx - spec.dx) > 1e-12 * spec.dx:
        raise InputError(f"lattice spacing {lattice.dx} != spec.dx {spec.dx}")
    return lattice.laplacian_form(), lattice.cell


@dataclass(frozen=True, eq=False)
class Phi4Operator:
    """Site-term representation of ``H`` plus helpers.

    ``single`` is the one-site matrix ``P^2/2 + A_xx Q^2/2 + (g/cell) Q^4``
    (one per site), ``coupling`` the off-diagonal ``A_xy`` with
    ``A = G + m0^2 + dm^2``.  ``shift`` is the normal-ordering constant.
    """
    spec: Phi4Spec
    single: tuple
    Q: np.ndarray
    P: np.ndarray
    coupling: np.ndarray
    shift: float
    ordering: str

    @property
    def sites(self):
        return self.spec.sites

    @property
    def D(self):
        return self.spec.D

    @property
    def dim(self):
        return self.spec.dim

    def _site(self, A, v, x, out_dtype=None):
        D, S = self.D, self.sites
        x3 = np.ascontiguousarray(v.reshape(D ** x, D, D ** (S - x - 1)), dtype=complex)
        return kernels.apply_site(np.ascontiguousarray(A, dtype=complex), x3).reshape(-1)

    def apply(self, v):
        """Matrix-free ``H v`` (``v`` flat, length ``D**sites``)."""
        v = np.asarray(v)
        out = np.zeros(self.dim, dtype=complex)
        for x in range(self.sites):
            out += self._site(self.single[x], v, x)
        for x in range(self.sites):
            for y in range(x + 1, self.sites):
                c = self.coupling[x, y]
                if c != 0.0:
                    out += c * self._site(self.Q, self._site(self.Q, v, y), x)
        out -= self.shift * v
        return out if np.iscomplexobj(v) else out.real

    def dense(self):
        """Explicit matrix; only for ``D**sites <= 4096``."""
        if self.dim > DENSE_LIMIT:
            raise InputError(f"dense H needs D**sites <= {DENSE_LIMIT}, got {self.dim}; "
                             "use the matrix-free form or lower D")
        D, S = self.D, self.sites
        eye = np.eye(D)

        def embed(ops):
            out = np.ones((1, 1))
            for x in range(S):
                out = np.kron(out, ops.get(x, eye))
            return out

        H = sum(embed({x: self.single[x]}) for x in range(S))
        for x in range(S):
            for y in range(x + 1, S):
                if self.coupling[x, y] != 0.0:
                    H = H + self.coupling[x, y] * embed({x: self.Q, y: self.Q})
        H = H - self.shift * np.eye(self.dim)
        return 0.5 * (H + H.T)


def phi4_hamiltonian(spec, lattice=None, normal_order=True):
    """Quartic lattice Hamiltonian in the product ``M``-oscillator basis.

    Parameters
    ----------
    spec : Phi4Spec
    lattice : LatticeSpec, optional
        One-dimensional lattice with ``n == spec.sites``; the ring geometry
        with spacing ``spec.dx`` is used when omitted (any site count).
    normal_order : bool
        Subtract the product-fiducial expectation so the fiducial has zero
        energy.

    Returns
    -------
    Phi4Operator
    """
    if spec.dim > MATRIX_FREE_LIMIT:
        raise InputError(f"D**sites = {spec.dim} exceeds {MATRIX_FREE_LIMIT}; "
                         f"for {spec.sites} sites use D <= "
                         f"{int(MATRIX_FREE_LIMIT ** (1 / spec.sites))}")
    G, cell = _geometry(spec, lattice)
    A = G + (spec.m0 ** 2 + spec.counterterm) * np.eye(spec.sites)
    D, M = int(spec.D), float(spec.M)
    ops = ladder_ops(D, M)
    singles = []
    for x in range(spec.sites):
        terms = {(0, 2): 0.5, (2, 0): 0.5 * A[x, x]}
        if spec.g:
            terms[(4, 0)] = spec.g / cell
        singles.append(np.real(_exact_crop(polynomial(terms), D, M)))
    coupling = np.triu(A, 1)
    Q = np.real(ops.Q)
    P = ops.P
    shift = 0.0
    op = Phi4Operator(spec=spec, single=tuple(singles), Q=Q, P=P, coupling=coupling,
                      shift=0.0, ordering="none")
    if normal_order:
        e0 = np.zeros(spec.dim)
        e0[0] = 1.0
        shift = float(np.real(op.apply(e0)[0]))
        op = replace(op, shift=shift, ordering="fiducial")
    return op


# ---------------------------------------------------------------------------
# eigen-solvers

@dataclass(frozen=True)
class GroundState:
    E0: float
    vector: np.ndarray
    residual: float
    iterations: int
    history: tuple = field(default_factory=tuple)


def lanczos_ground(apply, v0, tol=1e-9, krylov=60, max_restarts=100):
    """Lowest eigenpair by restarted Lanczos with full reorthogonalization.

    Each cycle builds a Krylov basis of size ``krylov`` from the current
    Ritz vector.  Stops when ``||H x - E x|| < tol`` and raises
    :class:`ConvergenceError` carrying the residual history otherwise.
    """
    v = np.array(v0, dtype=float if not np.iscomplexobj(v0) else complex)
    nv = np.linalg.norm(v)
    if nv == 0:
        raise InputError("Lanczos seed vector is zero")
    v = v / nv
    history = []
    total = 0
    for _ in range(max_restarts):
        V = [v]
        alpha, beta = [], []
        for j in range(krylov):
            w = apply(V[j])
            total += 1
            a = float(np.real(np.vdot(V[j], w)))
            alpha.append(a)
            B = np.array(V)
            for _pass in range(2):
                w = w - B.T @ (B.conj() @ w)
            b = float(np.linalg.norm(w))
            if b < 1e-13 * max(1.0, abs(a)) or len(V) == v.size:
                break
            beta.append(b)
            V.append(w / b)
        k = len(alpha)
        T = np.diag(alpha) + np.diag(beta[:k - 1], 1) + np.diag(beta[:k - 1], -1)
        theta, S = np.linalg.eigh(T)
        x = np.array(V[:k]).T @ S[:, 0]
        x /= np.linalg.norm(x)
        r = float(np.linalg.norm(apply(x) - theta[0] * x))
        total += 1
        history.append(r)
        if r < tol:
            return GroundState(E0=float(theta[0]), vector=x, residual=r,
                               iterations=total, history=tuple(history))
        v = x
    raise ConvergenceError(f"Lanczos did not reach residual {tol} in {max_restarts} restarts",
                           diagnostics={"residual_history": history})


def ground_state_iterative(op, tol=1e-9, krylov=60, max_restarts=100):
    """Ground state of a :class:`Phi4Operator` from matrix actions only.

    Seeded deterministically with the product fiducial.
    """
    seed = np.zeros(op.dim)
    seed[0] = 1.0
    gs = lanczos_ground(op.apply, seed, tol=tol, krylov=krylov, max_restarts=max_restarts)
    return replace(gs, vector=np.real(fix_phase(gs.vector)))


def ground_state_dense(op):
    H = op.dense()
    E, U = np.linalg.eigh(H)
    v = np.real(fix_phase(U[:, 0]))
    r = float(np.linalg.norm(H @ v - E[0] * v))
    return GroundState(E0=float(E[0]), vector=v, residual=r, iterations=1)


def krylov_propagate(apply, v, dt, krylov=30, tol=1e-12, max_sub=10000):
    """``exp(-i dt H) v`` by Lanczos on short substeps.

    The substep halves until the standard a-posteriori estimate
    ``beta_m |[exp(-i h T)]_{m,0}|`` falls below ``tol`` (per unit norm).
    """
    v = np.asarray(v, dtype=complex)
    norm = np.linalg.norm(v)
    if norm == 0 or dt == 0:
        return v.copy()
    u = v / norm
    done, h = 0.0, float(dt)
    steps = 0
    while abs(done - dt) > 1e-15 * max(1.0, abs(dt)):
        h = math.copysign(min(abs(h), abs(dt - done)), dt)
        V = [u]
        alpha, beta = [], []
        for j in range(krylov):
            w = apply(V[j])
            a = np.real(np.vdot(V[j], w))
            alpha.append(a)
            B = np.array(V)
            for _pass in range(2):
                w = w - B.T @ (B.conj() @ w)
            b = float(np.linalg.norm(w))
            beta.append(b)
            if b < 1e-13:
                break
            V.append(w / b)
        k = len(alpha)
        T = np.diag(alpha) + np.diag(beta[:k - 1], 1) + np.diag(beta[:k - 1], -1)
        th, S = np.linalg.eigh(T)
        y = S @ (np.exp(-1j * h * th) * S[0].conj())
        err = beta[k - 1] * abs(y[-1])
        if err > tol and beta[k - 1] >= 1e-13:
            h *= 0.5
            steps += 1
            if steps > max_sub:
                raise ConvergenceError("Krylov propagation failed to converge",
                                       diagnostics={"last_error": float(err)})
            continue
        u = np.array(V[:k]).T @ y
        u /= np.linalg.norm(u)
        done += h
    return norm * u


# ---------------------------------------------------------------------------
# moments and coherent vectors

def _site_expect(op, v, A, x):
    return float(np.real(np.vdot(v, op._site(A, v, x))))


def kurtosis_excess(op, v, site=0):
    """``<phi^4> - 3 <phi^2>^2`` at one site, in field units (zero for Gaussian states)."""
    cell = op.spec.cell
    Q2 = np.real(_exact_crop(polynomial({(2, 0): 1.0}), op.D, op.spec.M))
    Q4 = np.real(_exact_crop(polynomial({(4, 0): 1.0}), op.D, op.spec.M))
    m2 = _site_expect(op, v, Q2, site) / cell
    m4 = _site_expect(op, v, Q4, site) / cell ** 2
    return m4 - 3.0 * m2 * m2


def _site_weyl(op, v, p, q, x, eigs):
    (eq, Uq), (ep, Up) = eigs
    u = op._site(Uq @ np.diag(np.exp(1j * p * eq)) @ Uq.conj().T, v, x)
    u = op._site(Up @ np.diag(np.exp(-1j * q * ep)) @ Up.conj().T, u, x)
    return u * np.exp(0.5j * p * q)


def _labels_coords(labels, spec):
    out = []
    s = math.sqrt(spec.cell)
    for f in labels:
        pi = np.asarray(f.pi, dtype=float).reshape(-1)
        phi = np.asarray(f.phi, dtype=float).reshape(-1)
        if pi.size != spec.sites:
            raise InputError(f"label has {pi.size} sites, model has {spec.sites}")
        out.append((s * pi, s * phi))
    return out


def _label_vectors(op, v0, labels, tail_tol=1e-10):
    eigs = (np.linalg.eigh(op.Q), np.linalg.eigh(op.P))
    D, S = op.D, op.sites
    cols = []
    for P, Qc in _labels_coords(labels, op.spec):
        u = np.asarray(v0, dtype=complex)
        for x in range(S):
            u = _site_weyl(op, u, P[x], Qc[x], x, eigs)
        t = np.abs(u.reshape((D,) * S)) ** 2
        for x in range(S):
            marg = np.moveaxis(t, x, 0).reshape(D, -1).sum(axis=1)
            tail = float(marg[-2:].sum())
            if tail > tail_tol:
                raise TruncationError(f"label leaks {tail:.3e} into the top levels of site {x}; "
                                      "increase D or shrink the labels",
                                      diagnostics={"site": x, "tail": tail, "D": D})
        cols.append(u)
    return np.column_stack(cols)


# ---------------------------------------------------------------------------
# recentered kernel

@dataclass(frozen=True)
class Phi4KernelReport:
    E0: float
    E0_unordered: float
    residual: float
    kurtosis_excess: float
    method: str
    quotient_achieved: float
    dense_dev: float
    M_independence_dev: float
    M_values: tuple


def _single_kernel(spec, lattice, labels, dts, Lambda, method, tol):
    op = phi4_hamiltonian(spec, lattice)
    dense = spec.dim <= DENSE_LIMIT and method != "iterative"
    gs = ground_state_iterative(op, tol=tol)
    if dense:
        # the quotient maximizer over the full space, on the nonnegative
        # unordered operator so that the smallest |E| is the ground level
        Hd = op.dense()
        fid = recenter(Hd + op.shift * np.eye(op.dim), Lambda)
        v0 = np.real(fid.vector)
        if np.vdot(v0, gs.vector) < 0:
            v0 = -v0
        quot = fid.quotient_achieved
        E, U = np.linalg.eigh(Hd)
        e0 = float(E[0])
    else:
        v0 = gs.vector
        e0 = gs.E0
        quot = float(np.exp(-(e0 + op.shift) ** 2 / Lambda))
    V = _label_vectors(op, v0, labels)
    mats = []
    for dt in dts:
        if dense:
            A = U.conj().T @ V
            mats.append(A.conj().T @ (np.exp(-1j * dt * (E - e0))[:, None] * A))
        else:
            shifted = lambda x: op.apply(x) - e0 * x
            W = np.column_stack([krylov_propagate(shifted, V[:, k], dt) for k in range(V.shape[1])])
            mats.append(V.conj().T @ W)
    return np.array(mats), op, gs, quot, ("dense" if dense else "iterative"), V, v0


def recentered_phi4_kernel(spec, lattice, labels, dt, compare_M=None, Lambda=1.0,
                           method="auto", tol=1e-9):
    """Kernel between field labels displaced about the recentered fiducial.

    Parameters
    ----------
    spec : Phi4Spec
    lattice : LatticeSpec or None
    labels : list of FieldConfig
        Site values of ``pi`` and ``phi``.
    dt : float or sequence of float
    compare_M : float, optional
        Second fiducial parameter; the report carries the largest entrywise
        gap between the two kernels.
    Lambda : float
        Damping width of the quotient.
    method : {'auto', 'dense', 'iterative'}
        ``auto`` uses dense diagonalization when ``D**sites <= 4096``.
    tol : float
        Lanczos residual target.

    Returns
    -------
    K : ndarray
        ``(J, J)`` or ``(T, J, J)``.
    report : Phi4KernelReport
    """
    if method not in ("auto", "dense", "iterative"):
        raise InputError(f"method must be auto, dense or iterative, got {method!r}")
    if not Lambda > 0:
        raise InputError(f"Lambda must be positive, got {Lambda}")
    scalar = np.isscalar(dt)
    dts = [float(dt)] if scalar else [float(x) for x in dt]
    K, op, gs, quot, used, V, v0 = _single_kernel(spec, lattice, labels, dts, Lambda, method, tol)

    dense_dev = float("nan")
    if used == "iterative" and spec.dim <= DENSE_LIMIT:
        Kd = _single_kernel(spec, lattice, labels, dts, Lambda, "dense", tol)[0]
        dense_dev = float(np.abs(K - Kd).max())
    elif used == "dense":
        dense_dev = float(abs(gs.E0 - float(np.linalg.eigvalsh(op.dense())[0])))

    m_dev = float("nan")
    M_values = (spec.M,)
    if compare_M is not None:
        K2 = _single_kernel(replace(spec, M=float(compare_M)), lattice, labels, dts, Lambda,
                            method, tol)[0]
        m_dev = float(np.abs(K - K2).max())
        M_values = (spec.M, float(compare_M))

    report = Phi4KernelReport(
        E0=gs.E0, E0_unordered=gs.E0 + op.shift, residual=gs.residual,
        kurtosis_excess=kurtosis_excess(op, v0), method=used, quotient_achieved=quot,
        dense_dev=dense_dev, M_independence_dev=m_dev, M_values=M_values)
    return (K[0] if scalar else K), report
