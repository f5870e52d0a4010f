import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from recentering import free_field as ff
from recentering.errors import InputError
from recentering.kernel_core import psd_check
from recentering.lattice import FieldConfig, LatticeSpec

import oracles

SPEC8 = LatticeSpec(1, 8)


def _labels(spec, J, seed, scale=0.3):
    rng = np.random.default_rng(seed)
    return [FieldConfig.random(spec, rng, scale) for _ in range(J)]


def test_dispersion_example():
    assert SPEC8.dispersion(math.sqrt(3.0))[1] == pytest.approx(2.0, abs=1e-14)


def test_vacuum_overlap_values():
    assert ff.vacuum_overlap(1.0, 1.0) == 1.0
    assert ff.vacuum_overlap(1.0, 4.0) == pytest.approx(math.sqrt(0.8))
    assert ff.vacuum_overlap(1.0, 4.0) == pytest.approx(0.8944, abs=1e-4)


@pytest.mark.parametrize("M,omega", [(1.0, 4.0), (2.0, 0.5), (1.0, 1.0)])
def test_squeezed_vacuum_vs_projection(M, omega):
    D = 60
    np.testing.assert_allclose(ff.squeezed_vacuum(D, M, omega),
                               oracles.squeezed_by_projection(D, M, omega), atol=1e-9)
    assert np.linalg.norm(ff.squeezed_vacuum(200, M, omega)) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("seed", range(4))
def test_fft_matches_explicit_dft(seed):
    f2, f1 = _labels(SPEC8, 2, seed)
    for dt in (0.0, 0.4, 1.7):
        a = ff.relativistic_kernel(f2, f1, 2.0, dt, SPEC8)
        b = oracles.dft_relativistic(f2.pi, f2.phi, f1.pi, f1.phi, 2.0, dt, SPEC8.L_box, SPEC8.n)
        assert abs(a - b) < 1e-13


@pytest.mark.parametrize("d,n", [(1, 8), (2, 4), (3, 4)])
def test_fft_matches_mode_basis(d, n):
    spec = LatticeSpec(d, n, L_box=5.0)
    f2, f1 = _labels(spec, 2, 3)
    for dt in (0.0, 0.9):
        assert abs(ff.relativistic_kernel(f2, f1, 1.5, dt, spec)
                   - ff.relativistic_mode_kernel(f2, f1, 1.5, dt, spec)) < 1e-12


def test_relativistic_normalized():
    (f,) = _labels(SPEC8, 1, 9)
    assert abs(ff.relativistic_kernel(f, f, 2.0, 0.0, SPEC8) - 1) < 1e-14


def test_zero_time_identity_at_M_equals_omega():
    # when every mode has omega = M the ultralocal and relativistic overlaps coincide
    f2, f1 = _labels(SPEC8, 2, 1)
    M = 1.3
    a = ff.ultralocal_overlap(f2, f1, M, SPEC8)
    p2, q2 = SPEC8.to_modes(f2.pi), SPEC8.to_modes(f2.phi)
    p1, q1 = SPEC8.to_modes(f1.pi), SPEC8.to_modes(f1.phi)
    b = ff.weyl_overlap_modes(p2, q2, p1, q1, np.full(8, M))
    assert abs(a - b) < 1e-13


def test_massless_excluded_in_one_dimension():
    f = FieldConfig.zeros(SPEC8)
    with pytest.raises(InputError):
        ff.relativistic_kernel(f, f, 0.0, 0.1, SPEC8)


def test_massless_three_dimensions_needs_zero_momentum_mode():
    spec = LatticeSpec(3, 4)
    f = FieldConfig(np.zeros(spec.shape), np.ones(spec.shape))
    assert abs(ff.relativistic_kernel(f, f, 0.0, 0.0, spec) - 1) < 1e-12
    g = FieldConfig(np.ones(spec.shape), np.zeros(spec.shape))
    with pytest.raises(InputError):
        ff.relativistic_kernel(g, g, 0.0, 0.0, spec)


def test_ultralocal_factorizes_over_disjoint_support():
    spec = LatticeSpec(1, 8)
    a = np.zeros(8); a[:3] = [0.3, -0.2, 0.5]
    b = np.zeros(8); b[5:] = [0.1, 0.4, -0.3]
    z = FieldConfig.zeros(spec)
    fa, fb = FieldConfig(a, -a), FieldConfig(b, 0.5 * b)
    fab = FieldConfig(a + b, -a + 0.5 * b)
    lhs = ff.ultralocal_overlap(fab, z, 1.7, spec)
    rhs = ff.ultralocal_overlap(fa, z, 1.7, spec) * ff.ultralocal_overlap(fb, z, 1.7, spec)
    assert abs(lhs - rhs) < 1e-14


def test_ultralocal_spike_localized():
    spec = LatticeSpec(1, 8)
    spike = np.zeros(8); spike[2] = 1.0
    z = FieldConfig.zeros(spec)
    K = ff.ultralocal_overlap(FieldConfig(np.zeros(8), spike), z, 1.0, spec)
    assert abs(K - math.exp(-0.25 * spec.cell)) < 1e-14


@settings(max_examples=20)
@given(st.integers(0, 10 ** 6), st.floats(0.2, 5.0))
def test_gram_psd_at_zero_time(seed, M):
    labels = _labels(SPEC8, 8, seed, 0.5)
    assert psd_check(ff.ultralocal_gram(labels, M, SPEC8), 1e-9).passed
    K = np.array([[ff.relativistic_kernel(a, b, 2.0, 0.0, SPEC8) for b in labels] for a in labels])
    assert psd_check(K, 1e-9).passed


@settings(max_examples=15)
@given(st.integers(0, 10 ** 6))
def test_kernel_continuity(seed):
    f2, f1 = _labels(SPEC8, 2, seed)
    k0 = ff.relativistic_kernel(f2, f1, 2.0, 0.5, SPEC8)
    eps = 1e-7
    shifted = FieldConfig(f1.pi + eps, f1.phi - eps)
    assert abs(ff.relativistic_kernel(f2, shifted, 2.0, 0.5, SPEC8) - k0) < 1e-5
    assert abs(ff.relativistic_kernel(f2, f1, 2.0, 0.5 + eps, SPEC8) - k0) < 1e-5


def test_mode_dimension_grows_with_squeezing():
    assert ff.mode_dimension(10, 1.0, 1.0) == 40
    assert ff.mode_dimension(10, 4.0, 1.0) >= 40 + 20 * math.log(4)
    assert ff.mode_dimension(200, 4.0, 1.0) == 200


def test_diagnostics_trivial_at_zero_time_and_no_modes():
    rows = ff.incompatibility_diagnostics([0, 1, 2], 1.0, 1.0, 1.0, 0.0, SPEC8, 40,
                                          omegas=np.full(2, 4.0))
    assert rows[0].damped_overlap == 1.0 and rows[0].time_kernel_modulus == 1.0
    assert all(abs(r.time_kernel_modulus - 1) < 1e-12 for r in rows)


def test_diagnostics_signals_decrease():
    # D = 300: the cropped time kernel converges more slowly than the vacuum tail
    rows = ff.incompatibility_diagnostics(list(range(0, 11)), 1.0, 1.0, 1.0, 0.7, SPEC8, 300,
                                          omegas=np.full(10, 4.0))
    d = np.array([r.damped_overlap for r in rows])
    t = np.array([r.time_kernel_modulus for r in rows])
    assert np.all(np.diff(d) < 0) and np.all(np.diff(t) < 0)
    # per-mode closed form of |<eta_M| exp(-i dt H) |eta_M>| for a squeezed oscillator
    w, M, dt = 4.0, 1.0, 0.7
    ch = (w + M) / (2 * math.sqrt(w * M))
    sh = (w - M) / (2 * math.sqrt(w * M))
    per = (ch ** 4 + sh ** 4 - 2 * ch ** 2 * sh ** 2 * math.cos(2 * w * dt)) ** -0.25
    np.testing.assert_allclose(t, per ** np.arange(11), rtol=1e-10)
    assert all(r.recenter_deviation < 1e-10 for r in rows)


@pytest.mark.parametrize("M", [0.5, 1.0, 2.0])
def test_recentered_matches_relativistic(M):
    labels = _labels(SPEC8, 4, 7)
    K, rep = ff.recentered_kernel(8, 2.0, M, 1.0, [0.0, 0.8], labels, SPEC8, 40)
    assert rep.deviation_full < 1e-9 and rep.deviation_retained < 1e-9
    assert rep.max_squeezed_deviation < 1e-10
    for r in rep.modes:
        assert abs(r.fiducial_overlap - r.analytic_overlap) < 1e-10


def test_partial_recentering_keeps_M_on_rest():
    labels = _labels(SPEC8, 3, 2)
    K, rep = ff.recentered_kernel(3, 2.0, 1.0, 1.0, 0.0, labels, SPEC8, 40)
    assert math.isnan(rep.deviation_full)
    for j in range(3):
        for k in range(3):
            p2, q2 = SPEC8.to_modes(labels[j].pi), SPEC8.to_modes(labels[j].phi)
            p1, q1 = SPEC8.to_modes(labels[k].pi), SPEC8.to_modes(labels[k].phi)
            w = np.concatenate([SPEC8.dispersion(2.0)[:3], np.ones(5)])
            assert abs(K[j, k] - ff.weyl_overlap_modes(p2, q2, p1, q1, w)) < 1e-10


def test_ultralocal_delta_spike_weight():
    spec = LatticeSpec(1, 8, 4.0)
    w, M = 0.6, 1.8
    spike = np.zeros(8); spike[3] = w / spec.dx
    K = ff.ultralocal_overlap(FieldConfig(np.zeros(8), spike), FieldConfig.zeros(spec), M, spec)
    assert abs(abs(K) - math.exp(-M * w * w / (4 * spec.dx))) < 1e-14


def test_single_mode_half_period_vs_truncated_evolution():
    from recentering.oscillator import build_oscillator_rep, coherent_vector, number_operator
    m = 1.0
    omega = SPEC8.dispersion(m)
    k0 = 1
    amps = np.zeros(8); amps[k0] = 0.6
    f = FieldConfig(np.zeros(8), SPEC8.from_modes(amps))
    dt = math.pi / omega[k0]
    got = ff.relativistic_kernel(f, f, m, dt, SPEC8)
    # only mode k0 is displaced; the others sit in their vacuum
    rep = build_oscillator_rep(80, omega[k0], number_operator(omega[k0]))
    v = coherent_vector(rep, 0.0, 0.6)
    E, U = rep.spectrum
    ref = np.vdot(v, U @ (np.exp(-1j * dt * E) * (U.conj().T @ v)))
    assert abs(got - ref) < 1e-10
    c2w = omega[k0] * 0.36
    assert abs(got - math.exp(-c2w)) < 1e-12   # exp(-w c^2/2 - w c^2/2) with a flipped cross term


def test_no_retained_modes_gives_ultralocal_overlap():
    labels = _labels(SPEC8, 3, 4)
    K, rep = ff.recentered_kernel(0, 2.0, 1.3, 1.0, 0.0, labels, SPEC8, 40)
    ref = ff.ultralocal_gram(labels, 1.3, SPEC8)
    np.testing.assert_allclose(K, ref, atol=1e-13)
    assert ff.truncated_hamiltonian(0, 2.0, 1.3, 40, SPEC8) == []


def test_fiducial_energy_zero_after_normal_ordering():
    for mode in ff.truncated_hamiltonian(8, 2.0, 1.0, 40, SPEC8):
        assert abs(mode.rep.H[0, 0]) < 1e-12


def test_recentering_identity_when_M_equals_omega():
    labels = _labels(SPEC8, 3, 6)
    K, rep = ff.recentered_kernel(1, 2.0, 2.0, 1.0, 0.0, labels, SPEC8, 40)
    assert abs(rep.modes[0].fiducial_overlap - 1) < 1e-14
    np.testing.assert_allclose(K, ff.ultralocal_gram(labels, 2.0, SPEC8), atol=1e-13)
