import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from recentering import oscillator as osc
from recentering.errors import InputError, TruncationError
from recentering.kernel_core import gram_matrix, psd_check

import oracles


def test_matrix_elements_sign_convention():
    rep = osc.build_oscillator_rep(8, 1.0)
    assert abs(rep.Q[0, 1] - 1 / math.sqrt(2)) < 1e-15
    # P = i sqrt(Omega/2)(a^dag - a): <0|P|1> = -i/sqrt(2), <1|P|0> = +i/sqrt(2)
    assert abs(rep.P[0, 1] + 1j / math.sqrt(2)) < 1e-15
    assert abs(rep.P[1, 0] - 1j / math.sqrt(2)) < 1e-15


def test_fiducial_annihilated():
    for Om in (0.3, 1.0, 4.0):
        assert osc.build_oscillator_rep(12, Om).fiducial_residual() < 1e-12


def test_commutator_block():
    assert osc.build_oscillator_rep(40, 1.3).commutator_defect(2) < 1e-12


def test_omega_scaling():
    a = osc.build_oscillator_rep(10, 1.0)
    b = osc.build_oscillator_rep(10, 2.5)
    np.testing.assert_allclose(b.Q, a.Q / math.sqrt(2.5), rtol=1e-15)


def test_rejects_bad_sizes():
    with pytest.raises(InputError):
        osc.build_oscillator_rep(6, 1.0)
    with pytest.raises(InputError):
        osc.build_oscillator_rep(10, -1.0)
    with pytest.raises(InputError):
        osc.build_oscillator_rep(8, 1.0, osc.polynomial({(6, 0): 1.0}))


def test_coherent_fiducial_and_overlap():
    rep = osc.build_oscillator_rep(60, 1.0)
    v0 = osc.coherent_vector(rep, 0, 0)
    np.testing.assert_allclose(v0, rep.fiducial, atol=1e-14)
    v1 = osc.coherent_vector(rep, 1.0, 0.0)
    assert abs(np.vdot(v0, v1) - math.exp(-0.25)) < 1e-9


def test_coherent_norm_large_label():
    rep = osc.build_oscillator_rep(120, 1.0)
    assert abs(np.linalg.norm(osc.coherent_vector(rep, 2.0, 3.0)) - 1) < 1e-10


def test_coherent_truncation_error():
    rep = osc.build_oscillator_rep(20, 1.0)
    with pytest.raises(TruncationError):
        osc.coherent_vector(rep, 4.0, 4.0)


def test_analytic_overlap_examples():
    assert osc.overlap_analytic(0, 1, 0, 0, 1.0) == pytest.approx(math.exp(-0.25))
    assert osc.overlap_analytic(0, 1, 0, 0, 2.0) == pytest.approx(math.exp(-0.5))
    assert abs(osc.overlap_analytic(0, 1, 0, 0, 2.0) - oracles.overlap_quadrature(0, 1, 0, 0, 2.0)) < 1e-9
    # same q: the phase term vanishes and only the momentum gap survives
    v = osc.overlap_analytic(1, 5, 0, 5, 1.0)
    assert abs(v - math.exp(-0.25)) < 1e-15
    assert abs(v - oracles.overlap_quadrature(1, 5, 0, 5, 1.0)) < 1e-9


@settings(max_examples=25)
@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3))
def test_analytic_vs_construction(p2, q2, p1, q1):
    rep = _rep120()
    a = np.vdot(osc.coherent_vector(rep, p2, q2), osc.coherent_vector(rep, p1, q1))
    assert abs(a - osc.overlap_analytic(p2, q2, p1, q1, 1.0)) < 1e-9


_CACHE = {}


def _rep120():
    if "r" not in _CACHE:
        _CACHE["r"] = osc.build_oscillator_rep(120, 1.0)
    return _CACHE["r"]


@settings(max_examples=15)
@given(st.floats(-2, 2), st.floats(-2, 2), st.floats(0.2, 3.0))
def test_analytic_vs_quadrature(p, q, om):
    assert abs(osc.overlap_analytic(p, q, 0.3, -0.4, om)
               - oracles.overlap_quadrature(p, q, 0.3, -0.4, om)) < 1e-8


def test_propagator_zero_time_is_overlap():
    rep = osc.build_oscillator_rep(60, 1.0)
    labels = [(0.0, 0.0), (1.0, 0.0), (-0.5, 0.7)]
    np.testing.assert_allclose(osc.propagator_kernel(rep, 0.0, labels), osc.overlap_matrix(labels),
                               atol=1e-10)


def test_propagator_rotation():
    rep = osc.build_oscillator_rep(60, 1.0, osc.number_operator(1.0))
    K = osc.propagator_kernel(rep, math.pi, [(0.0, 0.0), (1.0, 0.0)])
    assert abs(abs(K[0, 1]) - math.exp(-0.25)) < 1e-10
    # half a period sends (1, 0) to (-1, 0): overlap exp(-|2|^2 / 4)
    assert abs(abs(K[1, 1]) - math.exp(-1)) < 1e-10
    # rotated label: z -> z e^{-i pi} maps (p, q) to (-p, -q)
    v = osc.coherent_vector(rep, -1.0, 0.0)
    w = osc.coherent_vector(rep, 1.0, 0.0)
    E, U = rep.spectrum
    w_t = U @ (np.exp(-1j * math.pi * E) * (U.conj().T @ w))
    assert abs(abs(np.vdot(v, w_t)) - 1) < 1e-10


def test_constrained_kernel_limits():
    rep = osc.build_oscillator_rep(40, 1.0, osc.quartic(1.0, 0.1))
    labels = [(0.0, 0.0), (0.5, -0.3)]
    big = osc.ConstraintSector(Lambda=1e12, t2=0.4)
    np.testing.assert_allclose(osc.constrained_kernel(rep, big, labels),
                               osc.propagator_kernel(rep, 0.4, labels), atol=1e-10)


def test_constrained_single_eigenstate():
    rep = osc.OscillatorRep(D=2, Omega=1.0, Q=np.zeros((2, 2)), P=np.zeros((2, 2)),
                            H=np.diag([2.0, 5.0]), hamiltonian_label="diag", ordering="none",
                            ordering_constant=0.0)
    e = np.array([1.0, 0.0])
    K = osc.constrained_kernel(rep, osc.ConstraintSector(Lambda=1.0), vectors=e)
    assert abs(K[0, 0] - math.exp(-4)) < 1e-15
    K = osc.constrained_kernel(rep, osc.ConstraintSector(Lambda=1.0, s1=-2.0, s2=-2.0), vectors=e)
    assert abs(K[0, 0] - 1) < 1e-15


def test_interval_projection():
    rep = osc.build_oscillator_rep(30, 1.0, osc.number_operator(1.0))
    v = osc.coherent_vector(rep, 0.5, 0.5)
    sec = osc.ConstraintSector(Lambda=1.0, delta=0.1, s1=-2.0, s2=-2.0)
    K = osc.interval_constrained_kernel(rep, sec, vectors=v)
    E, U = rep.spectrum
    amp = U.conj().T @ v
    assert abs(K[0, 0] - np.sum(np.abs(amp[np.abs(E - 2.0) <= 0.1]) ** 2)) < 1e-14


def test_sector_validation():
    with pytest.raises(InputError):
        osc.ConstraintSector(Lambda=0.0)
    with pytest.raises(InputError):
        osc.ConstraintSector(Lambda=1.0, delta=-1)


def test_s_integral_constant():
    I = osc.s_integral(np.array([-50.0, 0.0, 3.3, 400.0]), 2.0)
    np.testing.assert_allclose(I, math.sqrt(2 * math.pi * 2.0), rtol=1e-14)


@pytest.mark.parametrize("spec", [osc.harmonic(1.0), osc.number_operator(1.0), osc.quartic(1.0, 0.1)])
def test_reduced_equals_propagator(spec):
    rep = osc.build_oscillator_rep(80, 1.0, spec)
    labels = [(0.1 * j, -0.05 * j) for j in range(6)]
    for dt in (0.0, 0.7, 2.0):
        r = osc.reduced_time_kernel(rep, 1.0, dt, labels)
        assert r.max_dev < 1e-10
        assert r.normalization == pytest.approx(2 * math.pi)


def test_reduced_zero_time_is_overlap():
    rep = osc.build_oscillator_rep(60, 1.0)
    labels = [(0.0, 0.0), (0.4, 0.2)]
    r = osc.reduced_time_kernel(rep, 3.0, 0.0, labels)
    np.testing.assert_allclose(r.reduced, osc.overlap_matrix(labels), atol=1e-10)


def test_spectrum_representation_independent():
    a = osc.build_oscillator_rep(80, 1.0, osc.harmonic(2.0), normal_order=False)
    b = osc.build_oscillator_rep(80, 1.8, osc.harmonic(2.0), normal_order=False)
    np.testing.assert_allclose(a.spectrum[0][:6], b.spectrum[0][:6], atol=1e-8)
    np.testing.assert_allclose(a.spectrum[0][:6], 2.0 * (np.arange(6) + 0.5), atol=1e-8)


@settings(max_examples=10)
@given(st.integers(0, 1000))
def test_constrained_kernel_psd(seed):
    rng = np.random.default_rng(seed)
    rep = osc.build_oscillator_rep(50, 1.0, osc.quartic(1.0, 0.05))
    labels = [tuple(x) for x in 0.8 * rng.standard_normal((8, 2))]
    K = osc.constrained_kernel(rep, osc.ConstraintSector(Lambda=float(rng.uniform(0.2, 4))), labels)
    assert psd_check(K, 1e-10).passed


def test_propagator_unit_diagonal():
    rep = osc.build_oscillator_rep(80, 1.0, osc.quartic(1.0, 0.1))
    K = osc.propagator_kernel(rep, 0.9, [(0.3, 0.3), (0.3, 0.3)])
    assert abs(K[0, 1] - K[0, 0]) < 1e-14
    K = osc.propagator_kernel(rep, 0.0, [(0.7, -0.2)])
    assert abs(abs(K[0, 0]) - 1) < 1e-12
