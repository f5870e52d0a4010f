"""Acceptance gate: the ten criteria at their stated tolerances.

Each criterion runs a shipped config through :func:`recentering.cli.run_experiment`
and records one ``CRITERION n: PASS|FAIL`` line, printed in the pytest
terminal summary.  Run directly with ``python tests/test_acceptance.py`` to
get the lines without pytest.
"""

import filecmp
import math
import os
import sys
import tempfile
import time

import pytest

sys.path.insert(0, os.path.dirname(__file__))
import conftest  # noqa: E402

from recentering.cli import emit_report, load_config, run_experiment  # noqa: E402

CONFIGS = os.path.normpath(os.path.join(os.path.dirname(__file__), os.pardir, "configs"))
_RUNS = {}


def _run(name):
    if name not in _RUNS:
        cfg = load_config(os.path.join(CONFIGS, f"{name}.toml"))
        t0 = time.perf_counter()
        bundle = run_experiment(cfg)
        _RUNS[name] = (bundle, time.perf_counter() - t0)
    return _RUNS[name]


def _record(n, ok, detail):
    line = f"CRITERION {n}: {'PASS' if ok else 'FAIL'} {detail}"
    conftest.ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def criterion_1():
    b, t = _run("classical_equiv")
    m = b.metrics
    ok = m["profiles"] == 5 and m["max_dev"] < 1e-6 and m["constraint_drift"] < 1e-8 and t < 5
    return _record(1, ok, f"max_dev={m['max_dev']:.2e} drift={m['constraint_drift']:.2e} time={t:.2f}s")


def criterion_2():
    b, t = _run("qm_equiv")
    p = b.parameters
    ok = (b.metrics["max_dev"] < 1e-10 and p["D"] == 80 and p["n_labels"] == 8
          and len(p["dts"]) == 5 and set(p["hamiltonians"]) == {"harmonic", "quartic"} and t < 10)
    return _record(2, ok, f"max_dev={b.metrics['max_dev']:.2e} time={t:.2f}s")


def criterion_3():
    b, t = _run("free_field")
    p = b.parameters
    dev = b.metrics["recenter_deviation"]
    ok = (dev < 1e-8 and p["d"] == 1 and p["n"] == 8 and p["m"] == 2.0 and p["D"] == 60
          and p["n_labels"] >= 10 and len(p["dts"]) == 3 and t < 60)
    return _record(3, ok, f"deviation={dev:.2e} time={t:.2f}s")


def criterion_4():
    b, t = _run("free_field")
    dev = b.metrics["M_independence_dev"]
    ok = dev < 1e-8 and sorted(b.parameters["compare_M"]) == [0.5, 2.0]
    return _record(4, ok, f"M_gap={dev:.2e} over M in {b.parameters['compare_M']}")


def criterion_5():
    b, t = _run("incompatibility")
    m, c = b.metrics, b.checks
    ok = (c["damped_overlap_decreasing"] and c["time_kernel_modulus_decreasing"]
          and m["damped_overlap_at_threshold_N"] < 0.01
          and m["time_kernel_modulus_at_threshold_N"] < 0.01
          and c["time_kernel_within_vacuum_bound"] and t < 30)
    return _record(5, ok, f"damped(N=50)={m['damped_overlap_at_threshold_N']:.2e} "
                          f"|time kernel|(N=50)={m['time_kernel_modulus_at_threshold_N']:.4g} "
                          f"bound 0.8944^50={m['vacuum_overlap_bound_at_threshold_N']:.4g} time={t:.2f}s")


def criterion_6():
    b, t = _run("phi4")
    m, p = b.metrics, b.parameters
    ok = (m["E0_dev"] < 1e-10 and abs(m["kurtosis_excess"]) > 1e-6
          and m["M_independence_dev"] < 1e-6 and p["sites"] == 2 and p["g"] == 0.2
          and p["D"] == 24 and t < 120)
    return _record(6, ok, f"E0_dev={m['E0_dev']:.2e} kurtosis={m['kurtosis_excess']:.3e} "
                          f"M_gap={m['M_independence_dev']:.2e} time={t:.2f}s")


def criterion_7():
    b, t = _run("ultralocal_functionals")
    c = b.checks
    ok = all(c[k] for k in ("admissibility_classification", "refinement_stable", "divergent_total_mass",
                            "classification_clauses", "psd_field", "psd_canonical", "psd_model_field"))
    ok = ok and b.parameters["psd_sets"] == 20 and b.parameters["psd_tol"] == 1e-9
    rows = b.tables["admissibility"][1]
    ok = ok and len(rows) == 6
    return _record(7, ok, f"sigma cases={len(rows)} checks={sum(c.values())}/{len(c)} time={t:.2f}s")


def criterion_8():
    b, t = _run("superposition")
    ok = (b.checks["monte_carlo_within_sigmas"] and b.checks["superposition_reducible"]
          and b.parameters["mc_samples"] == 100000 and b.parameters["mc_triples"] == 5
          and b.parameters["mc_sigmas"] == 3.0)
    return _record(8, ok, f"max_z={b.metrics['max_z']:.2f} time={t:.2f}s")


def criterion_9():
    b, t = _run("model_field")
    err = b.metrics["b_max_error"]
    ok = err < 1e-9 and sorted(b.parameters["b_values"]) == [0.5, 1.0, 3.0]
    return _record(9, ok, f"max |b_fit - b|={err:.2e}")


def criterion_10():
    names = sorted(f[:-5] for f in os.listdir(CONFIGS) if f.endswith(".toml"))
    bad = []
    with tempfile.TemporaryDirectory() as tmp:
        for name in names:
            cfg = load_config(os.path.join(CONFIGS, f"{name}.toml"))
            dirs = []
            for rep in ("a", "b"):
                d = os.path.join(tmp, name, rep)
                emit_report(run_experiment(cfg), d, "json")
                dirs.append(d)
            files = sorted(f for f in os.listdir(dirs[0]) if f != "timing.json")
            _, mismatch, errors = filecmp.cmpfiles(dirs[0], dirs[1], files, shallow=False)
            bad += [f"{name}/{f}" for f in mismatch + errors]
    return _record(10, not bad, f"{len(names)} configs rerun" + (f", differing: {bad}" if bad else ", byte-identical"))


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
            criterion_6, criterion_7, criterion_8, criterion_9, criterion_10]


@pytest.mark.slow
@pytest.mark.parametrize("criterion", CRITERIA, ids=[f"criterion_{i}" for i in range(1, 11)])
def test_acceptance(criterion):
    assert criterion()


if __name__ == "__main__":
    results = [c() for c in CRITERIA]
    sys.exit(0 if all(results) else 1)
