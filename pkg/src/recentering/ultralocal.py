"""General ultralocal characteristic functionals.

Lévy measures are stored as point masses plus a density evaluated on a
symmetric quadrature grid: geometric panels on ``(0, 1]`` (halving toward
zero) and unit-half-width panels on ``[1, lam_max]``, Gauss-Legendre inside
each panel, mirrored to negative ``lambda``.  A second grid with twice the
panels and twice the cutoff serves as the refinement: an integral whose
relative change between the two exceeds ``1e-6`` is reported as infinite.
"""

from dataclasses import dataclass, field
import math

import numpy as np
from numpy.polynomial.legendre import leggauss

from . import kernels
from .errors import InadmissibleError, InputError
from .lattice import FieldConfig

__all__ = [
    "QuadratureGrid",
    "quadrature_grid",
    "LevyMeasure",
    "UltralocalParams",
    "AdmissibilityReport",
    "Classification",
    "ModelFieldSpec",
    "SuperposeResult",
    "DENSITIES",
    "admissibility_check",
    "classify_representation",
    "char_functional_field",
    "char_functional_canonical",
    "functional_gram",
    "gaussian_superpose",
    "model_field_exponent",
    "model_field_kernel",
    "fit_b",
]

REFINE_RTOL = 1e-6


# ---------------------------------------------------------------------------
# quadrature

@dataclass(frozen=True, eq=False)
class QuadratureGrid:
    nodes: np.ndarray
    weights: np.ndarray
    levels: int
    lam_max: float


def quadrature_grid(levels=30, lam_max=40.0, order=16):
    """Symmetric grid over ``(-lam_max, lam_max)`` excluding ``0``."""
    x, w = leggauss(order)
    edges = [2.0 ** -k for k in range(levels, -1, -1)]
    edges = [0.0] + edges
    n_hi = int(math.ceil(2 * (lam_max - 1.0)))
    edges += list(np.linspace(1.0, lam_max, n_hi + 1)[1:])
    nodes, weights = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        h = 0.5 * (b - a)
        nodes.append(a + h * (x + 1.0))
        weights.append(h * w)
    pos = np.concatenate(nodes)
    wpos = np.concatenate(weights)
    return QuadratureGrid(nodes=np.concatenate([-pos[::-1], pos]),
                          weights=np.concatenate([wpos[::-1], wpos]),
                          levels=levels, lam_max=float(lam_max))


_GRIDS = {}


def _grids(levels, lam_max):
    key = (levels, lam_max)
    if key not in _GRIDS:
        _GRIDS[key] = (quadrature_grid(levels, lam_max), quadrature_grid(2 * levels, 2 * lam_max))
    return _GRIDS[key]


def _prune(nodes, dw, rel=1e-18):
    """Drop nodes with negligible admissibility mass ``dw l^2/(1+l^2)``.

    Every Levy summand is bounded by that mass times ``2 + |u| + u^2``, so the
    dropped part is below ``rel (2 + |u| + u^2)`` times the total mass.
    """
    mass = dw * _admissibility_integrand(nodes)
    total = float(np.sum(mass))
    if not np.isfinite(total) or total == 0:
        return nodes, dw
    keep = mass > rel * total
    return nodes[keep], dw[keep]


def _refined_integral(f, density, levels, lam_max):
    """``int f(l) density(l) dl`` on both grids; ``inf`` if they disagree."""
    vals = []
    for g in _grids(levels, lam_max):
        with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
            vals.append(float(np.sum(g.weights * f(g.nodes) * density(g.nodes))))
    a, b = vals
    if not (np.isfinite(a) and np.isfinite(b)):
        return math.inf
    if abs(b - a) > REFINE_RTOL * max(abs(b), 1e-300):
        return math.inf
    return b


# ---------------------------------------------------------------------------
# measures and parameters

def _gauss_over(power):
    def f(lam):
        lam = np.asarray(lam, dtype=float)
        return np.exp(-lam * lam) / np.abs(lam) ** power
    return f


DENSITIES = {
    "gauss": lambda lam: np.exp(-np.asarray(lam, dtype=float) ** 2),
    "gauss_over_lambda2": _gauss_over(2),
    "gauss_over_lambda3": _gauss_over(3),
    "lebesgue": lambda lam: np.ones_like(np.asarray(lam, dtype=float)),
}


@dataclass(frozen=True, eq=False)
class LevyMeasure:
    """Point masses plus a density, optionally scaled per site.

    ``density`` is a vectorized callable of ``lambda`` or a key of
    :data:`DENSITIES`; ``kappa`` multiplies it.  ``x_scaling`` is
    ``'homogeneous'`` or an array ``s(x) >= 0`` on the sites, giving
    ``sigma(lambda; x) = s(x) sigma_0(lambda)``.
    """
    point_masses: tuple = ()
    density: object = None
    kappa: float = 1.0
    x_scaling: object = "homogeneous"
    levels: int = 30
    lam_max: float = 40.0

    def __post_init__(self):
        pts = tuple((float(l), float(w)) for l, w in self.point_masses)
        for l, w in pts:
            if not (np.isfinite(l) and w > 0 and np.isfinite(w)):
                raise InputError(f"point mass ({l}, {w}) needs finite lambda and weight > 0")
        object.__setattr__(self, "point_masses", pts)
        if isinstance(self.density, str):
            if self.density not in DENSITIES:
                raise InputError(f"unknown density {self.density!r}; choose from {sorted(DENSITIES)}")
        if not self.kappa >= 0:
            raise InputError(f"kappa must be non-negative, got {self.kappa}")
        if not isinstance(self.x_scaling, str):
            s = np.asarray(self.x_scaling, dtype=float)
            if np.any(s < 0) or not np.all(np.isfinite(s)):
                raise InputError("x_scaling must be finite and non-negative")
            object.__setattr__(self, "x_scaling", s)
        elif self.x_scaling != "homogeneous":
            raise InputError(f"x_scaling must be 'homogeneous' or an array, got {self.x_scaling!r}")

    @classmethod
    def zero(cls):
        return cls()

    @property
    def homogeneous(self):
        return isinstance(self.x_scaling, str)

    def density_fn(self):
        if self.density is None:
            return None
        f = DENSITIES[self.density] if isinstance(self.density, str) else self.density
        k = float(self.kappa)
        return lambda lam: k * np.asarray(f(lam), dtype=float)

    def scaling(self, sites):
        if self.homogeneous:
            return np.ones(sites)
        s = self.x_scaling.reshape(-1)
        if s.size != sites:
            raise InputError(f"x_scaling has {s.size} entries, lattice has {sites} sites")
        return s

    def grid_values(self):
        """Nodes and density-weighted weights on the fine grid."""
        g = _grids(self.levels, self.lam_max)[1]
        f = self.density_fn()
        if f is None:
            return g.nodes[:0], g.weights[:0]
        with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
            dw = g.weights * f(g.nodes)
        if np.any(dw < 0):
            raise InputError("density must be non-negative")
        return _prune(g.nodes, dw)

    def integral(self, f):
        """``int f dsigma_0`` with the refinement test (``inf`` if unstable)."""
        total = sum(w * float(f(np.array(l))) for l, w in self.point_masses)
        dens = self.density_fn()
        if dens is not None:
            total += _refined_integral(f, dens, self.levels, self.lam_max)
        return total

    def is_zero(self):
        if self.point_masses:
            scale_any = np.any(self.scaling(1) > 0) if self.homogeneous else np.any(self.x_scaling > 0)
            return not scale_any
        if self.density is None or self.kappa == 0:
            return True
        _, dw = self.grid_values()
        if not np.any(dw > 0):
            return True
        return not (self.homogeneous or np.any(self.x_scaling > 0))


def _admissibility_integrand(lam):
    lam = np.asarray(lam, dtype=float)
    return lam * lam / (1.0 + lam * lam)


@dataclass(frozen=True, eq=False)
class UltralocalParams:
    """Ultralocal data on the sites; scalars broadcast.

    The canonical-pair case is flagged by supplying ``d`` (then ``b`` and
    ``rho`` default to zero).
    """
    a: object = 0.0
    c: object = 0.0
    sigma: LevyMeasure = field(default_factory=LevyMeasure)
    b: object = None
    d: object = None
    rho: LevyMeasure = None

    def __post_init__(self):
        for name in ("a", "c", "b", "d"):
            val = getattr(self, name)
            if val is None:
                continue
            arr = np.asarray(val, dtype=float)
            if not np.all(np.isfinite(arr)):
                raise InputError(f"{name} must be finite")
            object.__setattr__(self, name, arr)
        if np.any(self.c < 0):
            raise InputError("c must be non-negative")
        if self.d is not None and np.any(self.d < 0):
            raise InputError("d must be non-negative")
        if self.canonical:
            if self.b is None:
                object.__setattr__(self, "b", np.asarray(0.0))
            if self.rho is None:
                object.__setattr__(self, "rho", LevyMeasure())

    @property
    def canonical(self):
        return self.d is not None

    @property
    def homogeneous(self):
        arrays = [self.a, self.c] + ([self.b, self.d] if self.canonical else [])
        flat = all(np.ndim(x) == 0 or np.all(x == np.ravel(x)[0]) for x in arrays)
        measures = [self.sigma] + ([self.rho] if self.canonical else [])
        return flat and all(m.homogeneous for m in measures)

    def site(self, name, sites):
        val = getattr(self, name)
        arr = np.broadcast_to(np.asarray(val, dtype=float), (sites,)) if np.ndim(val) == 0 \
            else np.asarray(val, dtype=float).reshape(-1)
        if arr.size != sites:
            raise InputError(f"{name} has {arr.size} entries, lattice has {sites} sites")
        return arr


# ---------------------------------------------------------------------------
# admissibility and classification

@dataclass(frozen=True)
class AdmissibilityReport:
    sigma_integral: float
    rho_integral: float
    sigma_total: float
    rho_total: float
    cd_min: float
    c_min: float
    passed: bool

    def __getitem__(self, key):
        return self.passed if key == "pass" else getattr(self, key)


def admissibility_check(params):
    """Finiteness of ``int l^2/(1+l^2) dsigma`` (and ``drho``) plus ``cd >= 1``.

    Total masses ``int dsigma`` are reported too; they may diverge for
    admissible measures.
    """
    s_int = params.sigma.integral(_admissibility_integrand)
    s_tot = params.sigma.integral(np.ones_like)
    if params.canonical:
        r_int = params.rho.integral(_admissibility_integrand)
        r_tot = params.rho.integral(np.ones_like)
        cd = np.atleast_1d(np.asarray(params.c, dtype=float) * np.asarray(params.d, dtype=float))
        cd_min = float(cd.min())
    else:
        r_int = r_tot = 0.0
        cd_min = float("nan")
    c_min = float(np.min(params.c))
    ok = math.isfinite(s_int) and math.isfinite(r_int) and c_min >= 0
    if params.canonical:
        ok = ok and cd_min >= 1.0
    return AdmissibilityReport(sigma_integral=s_int, rho_integral=r_int, sigma_total=s_tot,
                               rho_total=r_tot, cd_min=cd_min, c_min=c_min, passed=bool(ok))


@dataclass(frozen=True)
class Classification:
    kind: str
    reasons: tuple


def classify_representation(params, tol=1e-12):
    """Irreducible unless ``sigma != 0``, ``rho != 0`` or ``cd > 1`` on some site."""
    reasons = []
    if not params.sigma.is_zero():
        reasons.append("sigma != 0")
    if params.canonical:
        if not params.rho.is_zero():
            reasons.append("rho != 0")
        cd = np.atleast_1d(np.asarray(params.c, dtype=float) * np.asarray(params.d, dtype=float))
        if np.any(cd > 1.0 + tol):
            reasons.append("cd > 1")
    return Classification(kind="reducible" if reasons else "irreducible", reasons=tuple(reasons))


def _require_admissible(params):
    rep = admissibility_check(params)
    if not (math.isfinite(rep.sigma_integral) and math.isfinite(rep.rho_integral)):
        raise InadmissibleError(
            "Levy measure fails int l^2/(1+l^2) dsigma < inf "
            f"(sigma: {rep.sigma_integral}, rho: {rep.rho_integral})")
    return rep


# ---------------------------------------------------------------------------
# functionals

def _levy_exponent(measure, u, sites):
    """``sum_x s(x) int [e^{i l u} - 1 - i l u/(1+l^2)] dsigma_0`` per config row.

    ``u`` has shape ``(..., sites)``.
    """
    u = np.asarray(u, dtype=float)
    s = measure.scaling(sites)
    out = np.zeros(u.shape, dtype=complex)
    for lam, w in measure.point_masses:
        arg = lam * u
        out += w * (-2.0 * np.sin(0.5 * arg) ** 2 + 1j * (np.sin(arg) - arg / (1.0 + lam * lam)))
    nodes, dw = measure.grid_values()
    if nodes.size:
        out += kernels.levy_sum(u, nodes, dw)
    return out * s


def _field_exponent(params, pi, sites):
    a = params.site("a", sites)
    c = params.site("c", sites)
    return 1j * a * pi - 0.25 * c * pi * pi + _levy_exponent(params.sigma, pi, sites)


def _values(f, spec, attr):
    if isinstance(f, FieldConfig):
        arr = getattr(f.check(spec), attr)
    else:
        arr = np.asarray(f, dtype=float)
    arr = arr.reshape(-1)
    if arr.size != spec.sites:
        raise InputError(f"{attr} has {arr.size} entries, lattice has {spec.sites} sites")
    return arr


def char_functional_field(pi, params, spec):
    """``<exp(i phi(pi))>`` of an ultralocal single-field representation.

    ``pi`` is a :class:`FieldConfig` (its ``pi`` is used) or a site array.
    """
    _require_admissible(params)
    p = _values(pi, spec, "pi")
    return complex(np.exp(spec.cell * np.sum(_field_exponent(params, p, spec.sites))))


def char_functional_canonical(pi, phi, params, spec):
    """Canonical-pair functional with the ``-i b phi - d phi^2 / 4`` and ``rho`` terms."""
    if not params.canonical:
        raise InputError("canonical functional needs d (and optionally b, rho)")
    rep = _require_admissible(params)
    if rep.cd_min < 1.0:
        raise InputError(f"cd must be >= 1 at every site; min cd = {rep.cd_min}")
    p = _values(pi, spec, "pi")
    q = _values(phi, spec, "phi")
    S = spec.sites
    expo = _field_exponent(params, p, S)
    expo += -1j * params.site("b", S) * q - 0.25 * params.site("d", S) * q * q
    expo += _levy_exponent(params.rho, q, S)
    return complex(np.exp(spec.cell * np.sum(expo)))


def functional_gram(params, configs, spec, canonical=None):
    """Difference-kernel Gram matrix of a functional over ``configs``.

    Single field: ``C_jk = Phi(pi_j - pi_k)``.  Canonical pair:
    ``C_jk = Phi(pi_j - pi_k, phi_j - phi_k) exp(i/2 cell sum(phi_j pi_k - pi_j phi_k))``,
    the Weyl-ordered reading that makes ``cd >= 1`` the positivity condition.
    The ``cd`` condition is not enforced here so that violations can be
    observed.
    """
    _require_admissible(params)
    canonical = params.canonical if canonical is None else canonical
    S = spec.sites
    P = np.array([_values(f, spec, "pi") for f in configs])
    dP = P[:, None, :] - P[None, :, :]
    expo = _field_exponent(params, dP, S)
    if canonical:
        Q = np.array([_values(f, spec, "phi") for f in configs])
        dQ = Q[:, None, :] - Q[None, :, :]
        expo = expo - 1j * params.site("b", S) * dQ - 0.25 * params.site("d", S) * dQ * dQ
        expo = expo + _levy_exponent(params.rho, dQ, S)
        expo = expo + 0.5j * (Q[:, None, :] * P[None, :, :] - P[:, None, :] * Q[None, :, :])
    C = np.exp(spec.cell * expo.sum(axis=2))
    C = 0.5 * (C + C.conj().T)
    return C


# ---------------------------------------------------------------------------
# Gaussian superposition

@dataclass(frozen=True)
class SuperposeResult:
    value: complex
    base: complex
    params: UltralocalParams
    cd: float
    mc_mean: complex = None
    mc_stderr: float = None
    mc_samples: int = 0

    @property
    def mc_z(self):
        if self.mc_mean is None:
            return None
        return abs(self.mc_mean - self.value) / self.mc_stderr


def gaussian_superpose(M, M_tilde, f2, f1, spec, a_samples=None, n_samples=0, seed=None):
    """Average of ``a``-shifted ultralocal overlaps over Gaussian ``a(x)``.

    The shifted overlap carries ``exp(i cell sum a (phi2 - phi1))``; with
    ``a(x)`` independent centered normals of variance ``M_tilde / (2 cell)``
    the average is the ``M``-overlap times ``exp(-M_tilde cell sum (phi2 - phi1)^2 / 4)``,
    i.e. a canonical functional with ``c = 1/M`` and ``d = M + M_tilde``.

    Monte Carlo runs when ``a_samples`` (shape ``(n, sites)``) or
    ``n_samples`` with ``seed`` is given.
    """
    from .free_field import ultralocal_overlap

    if not (M > 0 and M_tilde > 0):
        raise InputError(f"M and M_tilde must be positive, got {M}, {M_tilde}")
    base = ultralocal_overlap(f2, f1, M, spec)
    dphi = (f2.phi - f1.phi).reshape(-1)
    value = base * math.exp(-0.25 * M_tilde * spec.cell * float(np.sum(dphi * dphi)))
    params = UltralocalParams(a=0.0, c=1.0 / M, b=0.0, d=M + M_tilde)
    cd = (M + M_tilde) / M

    if a_samples is None and n_samples:
        ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
        rng = np.random.default_rng(ss)
        a_samples = rng.normal(0.0, math.sqrt(M_tilde / (2 * spec.cell)), size=(int(n_samples), spec.sites))
    if a_samples is None:
        return SuperposeResult(value=complex(value), base=base, params=params, cd=cd)
    a = np.asarray(a_samples, dtype=float).reshape(-1, spec.sites)
    x = base * np.exp(1j * spec.cell * (a @ dphi))
    mean = complex(x.mean())
    se = float(np.sqrt(np.mean(np.abs(x - mean) ** 2) / x.size))
    return SuperposeResult(value=complex(value), base=base, params=params, cd=cd,
                           mc_mean=mean, mc_stderr=se, mc_samples=int(x.size))


# ---------------------------------------------------------------------------
# model fields

@dataclass(frozen=True, eq=False)
class ModelFieldSpec:
    """``b_coef`` and the even model function ``c(lambda)^2`` (callable or name)."""
    b_coef: float
    c_model: object = "gauss"
    levels: int = 30
    lam_max: float = 40.0

    def __post_init__(self):
        if not self.b_coef > 0:
            raise InputError(f"b_coef must be positive, got {self.b_coef}")
        f = self.c2()
        g = quadrature_grid(self.levels, self.lam_max)
        with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
            v = np.asarray(f(g.nodes), dtype=float)
        if np.any(v < 0):
            raise InputError("c(lambda)^2 must be non-negative")
        if not np.array_equal(v, v[::-1]):
            raise InputError("c(lambda)^2 must be even on the symmetric grid")

    def c2(self):
        if isinstance(self.c_model, str):
            if self.c_model not in DENSITIES:
                raise InputError(f"unknown model function {self.c_model!r}")
            return DENSITIES[self.c_model]
        return self.c_model


def model_field_exponent(u, model):
    """``int (1 - cos(l u)) c(l)^2 dl`` per entry of ``u`` (unit ``b``)."""
    f = model.c2()
    if not math.isfinite(_refined_integral(_admissibility_integrand, f, model.levels, model.lam_max)):
        raise InadmissibleError("int (1 - cos(l u)) c(l)^2 dl diverges for this model function")
    g = _grids(model.levels, model.lam_max)[1]
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        dw = g.weights * f(g.nodes)
    u = np.asarray(u, dtype=float)
    return -np.real(kernels.levy_sum(u, *_prune(g.nodes, dw)))


def model_field_kernel(pi2, pi1, spec, model):
    """``exp(-b cell sum_x int [1 - cos(l (pi2 - pi1))] c(l)^2 dl)``."""
    u = _values(pi2, spec, "pi") - _values(pi1, spec, "pi")
    return math.exp(-model.b_coef * spec.cell * float(np.sum(model_field_exponent(u, model))))


def fit_b(pairs, values, spec, c_model="gauss"):
    """Least-squares ``b`` from ``log K`` against the unit-``b`` exponent.

    ``pairs`` is a list of ``(pi2, pi1)``; ``values`` the kernel values.
    """
    probe = ModelFieldSpec(b_coef=1.0, c_model=c_model)
    x = np.array([spec.cell * float(np.sum(model_field_exponent(
        _values(p2, spec, "pi") - _values(p1, spec, "pi"), probe))) for p2, p1 in pairs])
    y = np.log(np.abs(np.asarray(values, dtype=complex)))
    if not np.any(x > 0):
        raise InputError("fit_b needs at least one pair with distinct configurations")
    return float(-(x @ y) / (x @ x))
