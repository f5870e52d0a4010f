"""Named experiments: parameter schemas, validation and runners.

Each runner takes validated parameters and a seed and returns
``(metrics, tables, checks)`` where ``tables`` maps a file stem to
``(columns, rows)`` and ``checks`` maps a check name to a bool.
"""

from concurrent.futures import ProcessPoolExecutor
import math

import numpy as np

from .errors import InputError

__all__ = ["SCHEMAS", "RUNNERS", "validate_parameters", "ConfigError"]


class ConfigError(InputError):
    """Invalid configuration; the message starts with the offending field path."""


# ---------------------------------------------------------------------------
# validators

def _num(path, v):
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ConfigError(f"{path}: expected a finite number, got {v!r}")
    return float(v)


def positive(path, v):
    v = _num(path, v)
    if not v > 0:
        raise ConfigError(f"{path}: must be positive, got {v}")
    return v


def nonneg(path, v):
    v = _num(path, v)
    if v < 0:
        raise ConfigError(f"{path}: must be non-negative, got {v}")
    return v


def real(path, v):
    return _num(path, v)


def integer(lo):
    def check(path, v):
        if isinstance(v, bool) or not isinstance(v, int) or v < lo:
            raise ConfigError(f"{path}: expected an integer >= {lo}, got {v!r}")
        return v
    return check


def listof(item, min_len=1):
    def check(path, v):
        if not isinstance(v, (list, tuple)) or len(v) < min_len:
            raise ConfigError(f"{path}: expected a list of at least {min_len} entries, got {v!r}")
        return [item(f"{path}[{i}]", x) for i, x in enumerate(v)]
    return check


def choice(*options):
    def check(path, v):
        if v not in options:
            raise ConfigError(f"{path}: expected one of {list(options)}, got {v!r}")
        return v
    return check


def optional(item):
    def check(path, v):
        return None if v is None or v == "none" else item(path, v)
    return check


def table(schema):
    def check(path, v):
        if not isinstance(v, dict):
            raise ConfigError(f"{path}: expected a table, got {v!r}")
        return _apply_schema(schema, v, path)
    return check


def _apply_schema(schema, given, path):
    unknown = sorted(set(given) - set(schema))
    if unknown:
        raise ConfigError(f"{path}.{unknown[0]}: unknown key (allowed: {sorted(schema)})")
    out = {}
    for key, (default, check) in schema.items():
        out[key] = check(f"{path}.{key}", given[key] if key in given else default)
    return out


# ---------------------------------------------------------------------------
# schemas

_PROFILE = {
    "c0": (1.0, positive),
    "sin": ([], listof(real, 0)),
    "cos": ([], listof(real, 0)),
    "freq": (1.0, positive),
}

DEFAULT_PROFILES = [
    {"c0": 1.0},
    {"c0": 1.0, "sin": [0.5]},
    {"c0": 2.0},
    {"c0": 1.0, "cos": [0.0, 0.3]},
    {"c0": 0.8, "sin": [0.4], "cos": [0.0, 0.0, 0.2]},
]

SCHEMAS = {
    "classical-equiv": {
        "omega": (1.0, positive),
        "q0": (1.0, real),
        "p0": (0.0, real),
        "t_end": (10.0, positive),
        "dtau": (1e-4, positive),
        "dt": (1e-3, positive),
        "profiles": (DEFAULT_PROFILES, listof(table(_PROFILE))),
        "max_dev_tol": (1e-6, positive),
        "drift_tol": (1e-8, positive),
    },
    "qm-equiv": {
        "D": (80, integer(8)),
        "Omega": (1.0, positive),
        "omega": (1.0, positive),
        "g": (0.1, nonneg),
        "hamiltonians": (["harmonic", "quartic"], listof(choice("harmonic", "quartic"))),
        "Lambda": (1.0, positive),
        "dts": ([0.0, 0.3, 0.7, 1.5, 3.0], listof(real)),
        "n_labels": (8, integer(1)),
        "label_scale": (1.0, positive),
        "tol": (1e-10, positive),
    },
    "free-field": {
        "task": ("recover", choice("recover", "incompatibility")),
        "d": (1, integer(1)),
        "n": (8, integer(2)),
        "L_box": (2 * math.pi, positive),
        "m": (2.0, nonneg),
        "M": (1.0, positive),
        "compare_M": ([], listof(positive, 0)),
        "Lambda": (1.0, positive),
        "D": (60, integer(8)),
        "N": (None, optional(integer(0))),
        "dts": ([0.0, 0.4, 1.1], listof(real)),
        "n_labels": (10, integer(1)),
        "label_scale": (0.3, positive),
        "tol": (1e-8, positive),
        "N_list": (list(range(1, 51)), listof(integer(1))),
        "omega": (None, optional(positive)),
        "dt": (0.7, real),
        "threshold": (0.01, positive),
        "threshold_N": (50, integer(1)),
    },
    "phi4": {
        "sites": (2, integer(1)),
        "m0": (1.0, real),
        "g": (0.2, nonneg),
        "M": (0.7, positive),
        "compare_M": (1.6, optional(positive)),
        "D": (24, integer(8)),
        "dx": (3.0, positive),
        "counterterm": (0.0, real),
        "Lambda": (1.0, positive),
        "dts": ([0.0, 0.5, 1.0], listof(real)),
        "n_labels": (6, integer(1)),
        "label_scale": (0.1, positive),
        "method": ("auto", choice("auto", "dense", "iterative")),
        "lanczos_tol": (1e-9, positive),
        "E0_tol": (1e-10, positive),
        "kurtosis_min": (1e-6, positive),
        "M_tol": (1e-6, positive),
    },
    "ultralocal-check": {
        "checks": (["functionals", "superposition", "model-field"],
                   listof(choice("functionals", "superposition", "model-field"))),
        "n": (8, integer(2)),
        "L_box": (2 * math.pi, positive),
        "psd_sets": (20, integer(1)),
        "psd_size": (12, integer(1)),
        "psd_tol": (1e-9, positive),
        "config_scale": (0.8, positive),
        "refine_tol": (1e-6, positive),
        "mc_samples": (100000, integer(10)),
        "mc_triples": (5, integer(1)),
        "mc_sigmas": (3.0, positive),
        "b_values": ([0.5, 1.0, 3.0], listof(positive)),
        "b_pairs": (6, integer(1)),
        "b_tol": (1e-9, positive),
    },
}


def validate_parameters(experiment, params):
    if experiment not in SCHEMAS:
        raise ConfigError(f"experiment: unknown experiment {experiment!r}; "
                          f"choose from {sorted(SCHEMAS)}")
    return _apply_schema(SCHEMAS[experiment], params or {}, "parameters")


def _map(fn, items, jobs):
    if jobs and jobs > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            return list(ex.map(fn, items))
    return [fn(x) for x in items]


# ---------------------------------------------------------------------------
# classical-equiv

def _classical_point(args):
    from . import classical as cl
    p, prof = args
    H = cl.oscillator(p["omega"])
    y0 = cl.PhasePoint(p["q0"], p["p0"])
    lam = cl.TrigMultiplier(c0=prof["c0"], sin=tuple(prof["sin"]), cos=tuple(prof["cos"]),
                            freq=prof["freq"])
    traj = cl.integrate_hamilton(H, y0, (0.0, p["t_end"]), p["dt"])
    # run in tau until t covers t_end, rounded up to whole steps
    tau_end = cl.tau_for_time(lam, p["t_end"])
    n = int(math.ceil(tau_end / p["dtau"])) + 2
    s0 = -float(H.energy(p["q0"], p["p0"]))
    ext = cl.integrate_reparam(H, lam, cl.ExtendedPhasePoint(p["q0"], p["p0"], 0.0, s0),
                               (0.0, n * p["dtau"]), p["dtau"])
    rep = cl.equivalence_report(traj, ext, H)
    return rep.max_dev, rep.constraint_drift, float(ext.s[-1] - ext.s[0])


def run_classical(p, seed, jobs=1):
    res = _map(_classical_point, [(p, prof) for prof in p["profiles"]], jobs)
    rows = [(i, dev, drift, ds) for i, (dev, drift, ds) in enumerate(res)]
    max_dev = max(r[1] for r in rows)
    drift = max(r[2] for r in rows)
    metrics = {"max_dev": max_dev, "constraint_drift": drift, "profiles": len(rows)}
    checks = {"max_dev": max_dev < p["max_dev_tol"], "constraint_drift": drift < p["drift_tol"]}
    tables = {"equivalence": (["profile", "max_dev", "constraint_drift", "s_change"], rows)}
    return metrics, tables, checks


# ---------------------------------------------------------------------------
# qm-equiv

def _qm_point(args):
    from . import oscillator as osc
    p, name, labels = args
    spec = osc.harmonic(p["omega"]) if name == "harmonic" else osc.quartic(p["omega"], p["g"])
    rep = osc.build_oscillator_rep(p["D"], p["Omega"], spec)
    V = osc.coherent_vectors(rep, labels)
    return [osc.reduced_time_kernel(rep, p["Lambda"], dt, vectors=V).max_dev for dt in p["dts"]]


def run_qm(p, seed, jobs=1):
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    labels = [tuple(x) for x in p["label_scale"] * rng.standard_normal((p["n_labels"], 2))]
    res = _map(_qm_point, [(p, h, labels) for h in p["hamiltonians"]], jobs)
    rows = [(h, dt, dev) for h, devs in zip(p["hamiltonians"], res) for dt, dev in zip(p["dts"], devs)]
    max_dev = max(r[2] for r in rows)
    metrics = {"max_dev": max_dev, "labels": [list(l) for l in labels]}
    checks = {"reduced_equals_propagator": max_dev < p["tol"]}
    return metrics, {"equivalence": (["hamiltonian", "dt", "max_dev"], rows)}, checks


# ---------------------------------------------------------------------------
# free-field

def _ff_labels(spec, p, seed):
    from .lattice import FieldConfig
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    return [FieldConfig.random(spec, rng, p["label_scale"]) for _ in range(p["n_labels"])]


def _ff_point(args):
    from . import free_field as ff
    from .lattice import LatticeSpec
    p, M, seed = args
    spec = LatticeSpec(p["d"], p["n"], p["L_box"])
    labels = _ff_labels(spec, p, seed)
    N = spec.sites if p["N"] is None else p["N"]
    K, rep = ff.recentered_kernel(N, p["m"], M, p["Lambda"], p["dts"], labels, spec, p["D"])
    return K, rep


def run_free_field(p, seed, jobs=1):
    from . import free_field as ff
    from .lattice import LatticeSpec
    spec = LatticeSpec(p["d"], p["n"], p["L_box"])
    if p["task"] == "incompatibility":
        Ns = sorted(set(p["N_list"]))
        omegas = None if p["omega"] is None else [p["omega"]] * max(Ns)
        rows = ff.incompatibility_diagnostics(Ns, p["m"], p["M"], p["Lambda"], p["dt"], spec,
                                              p["D"], omegas=omegas, seed=seed)
        damped = np.array([r.damped_overlap for r in rows])
        timek = np.array([r.time_kernel_modulus for r in rows])
        at = {r.N: r for r in rows}.get(p["threshold_N"])
        if at is None:
            raise ConfigError("parameters.threshold_N: must be one of parameters.N_list")
        checks = {
            "damped_overlap_decreasing": bool(np.all(np.diff(damped) < 0)),
            "time_kernel_modulus_decreasing": bool(np.all(np.diff(timek) < 0)),
            "damped_overlap_below_threshold": at.damped_overlap < p["threshold"],
            "time_kernel_modulus_below_threshold": at.time_kernel_modulus < p["threshold"],
            "time_kernel_within_vacuum_bound": bool(all(
                r.time_kernel_modulus <= r.vacuum_overlap_bound * (1 + 1e-12) for r in rows)),
        }
        metrics = {
            "damped_overlap_at_threshold_N": at.damped_overlap,
            "time_kernel_modulus_at_threshold_N": at.time_kernel_modulus,
            "vacuum_overlap_bound_at_threshold_N": at.vacuum_overlap_bound,
            "max_recenter_deviation": max(r.recenter_deviation for r in rows),
        }
        table = (["N", "damped_overlap", "time_kernel_modulus", "recenter_deviation"],
                 [(r.N, r.damped_overlap, r.time_kernel_modulus, r.recenter_deviation) for r in rows])
        return metrics, {"diagnostics": table}, checks

    Ms = [p["M"]] + [M for M in p["compare_M"] if M != p["M"]]
    res = _map(_ff_point, [(p, M, seed) for M in Ms], jobs)
    rows = []
    for M, (K, rep) in zip(Ms, res):
        rows.append((M, rep.deviation_retained, rep.deviation_full, rep.max_squeezed_deviation,
                     max(m.D for m in rep.modes) if rep.modes else 0))
    dev = max(r[1] for r in rows)
    m_dev = max((float(np.abs(res[0][0] - K).max()) for K, _ in res[1:]), default=0.0)
    if len(Ms) > 2:
        m_dev = max(float(np.abs(a[0] - b[0]).max()) for i, a in enumerate(res) for b in res[i + 1:])
    metrics = {"recenter_deviation": dev, "M_independence_dev": m_dev, "M_values": Ms}
    checks = {"recentered_matches_relativistic": dev < p["tol"]}
    if len(Ms) > 1:
        checks["M_independence"] = m_dev < p["tol"]
    table = (["M", "deviation_retained", "deviation_full", "squeezed_deviation", "max_D"], rows)
    return metrics, {"recovery": table}, checks


# ---------------------------------------------------------------------------
# phi4

def run_phi4(p, seed, jobs=1):
    from . import phi4
    from .lattice import FieldConfig
    spec = phi4.Phi4Spec(sites=p["sites"], m0=p["m0"], g=p["g"], M=p["M"], D=p["D"], dx=p["dx"],
                         counterterm=p["counterterm"],
                         counterterm_source="config" if p["counterterm"] else "none")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    labels = [FieldConfig(p["label_scale"] * rng.standard_normal(spec.sites),
                          p["label_scale"] * rng.standard_normal(spec.sites))
              for _ in range(p["n_labels"])]
    op = phi4.phi4_hamiltonian(spec)
    it = phi4.ground_state_iterative(op, tol=p["lanczos_tol"])
    E_dense = float("nan")
    if spec.dim <= phi4.DENSE_LIMIT:
        E_dense = phi4.ground_state_dense(op).E0
    K, rep = phi4.recentered_phi4_kernel(spec, None, labels, p["dts"], compare_M=p["compare_M"],
                                         Lambda=p["Lambda"], method=p["method"], tol=p["lanczos_tol"])
    e_dev = abs(it.E0 - E_dense)
    metrics = {"E0": it.E0, "E0_dense": E_dense, "E0_dev": e_dev, "residual": it.residual,
               "kurtosis_excess": rep.kurtosis_excess, "M_independence_dev": rep.M_independence_dev,
               "method": rep.method, "lanczos_iterations": it.iterations}
    checks = {"kurtosis_nonzero": abs(rep.kurtosis_excess) > p["kurtosis_min"]}
    if math.isfinite(E_dense):
        checks["E0_matches_dense"] = e_dev < p["E0_tol"]
    if p["compare_M"] is not None:
        checks["M_independence"] = rep.M_independence_dev < p["M_tol"]
    rows = [(t, j, k, complex(K[t, j, k]).real, complex(K[t, j, k]).imag)
            for t in range(K.shape[0]) for j in range(K.shape[1]) for k in range(K.shape[2])]
    table = (["dt_index", "j", "k", "re", "im"], rows)
    return metrics, {"kernel": table}, checks


# ---------------------------------------------------------------------------
# ultralocal-check

def _canonical_sigmas():
    from .ultralocal import LevyMeasure
    return [
        ("zero", LevyMeasure(), True),
        ("point_mass", LevyMeasure(point_masses=((1.0, 0.5),)), True),
        ("gauss_over_lambda2", LevyMeasure(density="gauss_over_lambda2"), True),
        ("gauss", LevyMeasure(density="gauss"), True),
        ("lebesgue", LevyMeasure(density="lebesgue"), False),
        ("gauss_over_lambda3", LevyMeasure(density="gauss_over_lambda3"), False),
    ]


def _functionals(p, seed):
    from . import ultralocal as ul
    from .kernel_core import psd_check
    from .lattice import FieldConfig, LatticeSpec
    rows, checks, metrics = [], {}, {}
    ok = True
    for name, meas, expected in _canonical_sigmas():
        r = ul.admissibility_check(ul.UltralocalParams(c=1.0, sigma=meas))
        finite = math.isfinite(r.sigma_integral)
        rows.append((name, r.sigma_integral, r.sigma_total, finite, expected))
        ok = ok and finite == expected
    checks["admissibility_classification"] = ok
    # refinement stability of the heavy-tailed-at-zero case
    m2 = ul.LevyMeasure(density="gauss_over_lambda2")
    a = m2.integral(lambda l: l * l / (1 + l * l))
    b = ul.LevyMeasure(density="gauss_over_lambda2", levels=2 * m2.levels,
                       lam_max=2 * m2.lam_max).integral(lambda l: l * l / (1 + l * l))
    metrics["gauss_over_lambda2_integral"] = a
    metrics["gauss_over_lambda2_refined"] = b
    checks["refinement_stable"] = bool(abs(a - b) <= p["refine_tol"] * abs(a))
    checks["divergent_total_mass"] = not math.isfinite(m2.integral(np.ones_like))

    point = ul.LevyMeasure(point_masses=((1.0, 0.5),))
    cases = {
        "sigma != 0": ul.UltralocalParams(c=1.0, d=1.0, sigma=point),
        "rho != 0": ul.UltralocalParams(c=1.0, d=1.0, rho=point),
        "cd > 1": ul.UltralocalParams(c=1.0, d=2.0),
    }
    fired = {k: ul.classify_representation(v).reasons == (k,) for k, v in cases.items()}
    fired["irreducible"] = ul.classify_representation(ul.UltralocalParams(c=1.0, d=1.0)).kind \
        == "irreducible"
    checks["classification_clauses"] = all(fired.values())

    spec = LatticeSpec(1, p["n"], p["L_box"])
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    field_params = ul.UltralocalParams(a=0.3, c=0.5, sigma=ul.LevyMeasure(
        point_masses=((1.5, 0.4),), density="gauss_over_lambda2", kappa=0.5))
    canon_params = ul.UltralocalParams(a=0.3, c=0.5, sigma=field_params.sigma, b=-0.2, d=2.5,
                                       rho=ul.LevyMeasure(density="gauss", kappa=0.3))
    model = ul.ModelFieldSpec(b_coef=1.0)
    mins = {"field": [], "canonical": [], "model_field": []}
    for _ in range(p["psd_sets"]):
        cfg = [FieldConfig.random(spec, rng, p["config_scale"]) for _ in range(p["psd_size"])]
        for key, prm in (("field", field_params), ("canonical", canon_params)):
            r = psd_check(ul.functional_gram(prm, cfg, spec), p["psd_tol"])
            mins[key].append((r.min_eig, r.passed))
        pis = np.array([f.pi.reshape(-1) for f in cfg])
        u = pis[:, None, :] - pis[None, :, :]
        C = np.exp(-spec.cell * ul.model_field_exponent(u, model).sum(axis=2))
        r = psd_check(C, p["psd_tol"])
        mins["model_field"].append((r.min_eig, r.passed))
    for key, vals in mins.items():
        checks[f"psd_{key}"] = all(v[1] for v in vals)
        metrics[f"psd_{key}_min_eig"] = min(v[0] for v in vals)
    table = (["sigma", "admissibility_integral", "total_mass", "finite", "expected_finite"], rows)
    return metrics, {"admissibility": table}, checks


def _superposition(p, seed):
    from . import ultralocal as ul
    from .lattice import FieldConfig, LatticeSpec
    spec = LatticeSpec(1, 2, 2.0)   # unit cell
    children = np.random.SeedSequence(seed).spawn(p["mc_triples"] + 1)
    rng = np.random.default_rng(children[0])
    rows, ok_mc, ok_cls = [], True, True
    for i in range(p["mc_triples"]):
        M = float(rng.uniform(0.5, 2.0))
        Mt = float(rng.uniform(0.5, 3.0))
        u = float(rng.uniform(0.3, 1.5))
        f2 = FieldConfig(np.array([0.2, 0.0]), np.array([u, 0.0]))
        f1 = FieldConfig(np.zeros(2), np.zeros(2))
        r = ul.gaussian_superpose(M, Mt, f2, f1, spec, n_samples=p["mc_samples"],
                                  seed=children[i + 1])
        cls = ul.classify_representation(r.params)
        ok_mc = ok_mc and r.mc_z <= p["mc_sigmas"]
        ok_cls = ok_cls and r.cd > 1 and cls.kind == "reducible" and "cd > 1" in cls.reasons
        rows.append((M, Mt, u, r.value.real, r.mc_mean.real, r.mc_mean.imag, r.mc_stderr, r.mc_z, r.cd))
    checks = {"monte_carlo_within_sigmas": ok_mc, "superposition_reducible": ok_cls}
    metrics = {"max_z": max(r[7] for r in rows)}
    cols = ["M", "M_tilde", "u", "closed_form", "mc_re", "mc_im", "mc_stderr", "z", "cd"]
    return metrics, {"superposition": (cols, rows)}, checks


def _model_field(p, seed):
    from . import ultralocal as ul
    from .lattice import FieldConfig, LatticeSpec
    spec = LatticeSpec(1, p["n"], p["L_box"])
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    rows = []
    for b in p["b_values"]:
        model = ul.ModelFieldSpec(b_coef=b)
        pairs = [(FieldConfig.random(spec, rng), FieldConfig.random(spec, rng))
                 for _ in range(p["b_pairs"])]
        vals = [ul.model_field_kernel(x, y, spec, model) for x, y in pairs]
        fitted = ul.fit_b(pairs, vals, spec)
        rows.append((b, fitted, abs(fitted - b)))
    worst = max(r[2] for r in rows)
    return ({"b_max_error": worst}, {"model_field": (["b", "fitted_b", "abs_error"], rows)},
            {"b_persistence": worst < p["b_tol"]})


def run_ultralocal(p, seed, jobs=1):
    parts = {"functionals": _functionals, "superposition": _superposition, "model-field": _model_field}
    metrics, tables, checks = {}, {}, {}
    for name in p["checks"]:
        m, t, c = parts[name](p, seed)
        metrics.update(m)
        tables.update(t)
        checks.update(c)
    return metrics, tables, checks


RUNNERS = {
    "classical-equiv": run_classical,
    "qm-equiv": run_qm,
    "free-field": run_free_field,
    "phi4": run_phi4,
    "ultralocal-check": run_ultralocal,
}
