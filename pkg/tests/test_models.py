import math

import numpy as np
import pytest
from scipy.integrate import quad_vec

from timerescale.errors import ParameterError
from timerescale.models import (
    HamiltonianSchedule,
    OscillatorParams,
    SpinParams,
    check_hermitian,
    compression_frequency,
    constant_field,
    fock_operators,
    oscillator_schedule,
    rotating_field,
    spin_schedule,
    time_rescale,
    tr_frequency,
    tr_transport_function,
    transport_function,
    transport_schedule,
)
from timerescale.rescale import RescalingSpec, eval_f, eval_f_prime

from oracles import SX, SZ


class TestSpin:
    def test_constant_z_field(self):
        Omega = 1.7
        sched = spin_schedule(SpinParams(gamma=Omega / 2, hbar=1.3), constant_field(2.0), 0, 1)
        np.testing.assert_allclose(sched(0.4), 1.3 * Omega / 2 * np.diag([1, -1]), atol=1e-15)
        assert sched.commuting_family

    def test_zero_field(self):
        sched = spin_schedule(SpinParams(), lambda t: np.zeros(np.shape(t) + (3,)), 0, 1)
        np.testing.assert_array_equal(sched(0.2), np.zeros((2, 2)))
        assert sched.commuting_family

    def test_x_field_is_off_diagonal(self):
        sched = spin_schedule(SpinParams(gamma=1.0), constant_field(2.0, axis=(1, 0, 0)), 0, 1)
        np.testing.assert_allclose(sched(0.0), 0.5 * 2.0 * SX, atol=1e-15)

    def test_rotating_field_is_not_commuting(self):
        sched = spin_schedule(SpinParams(), rotating_field(1.0, math.pi / 4, 0.5), 0, 10)
        assert not sched.commuting_family
        H0, H1 = sched(0.0), sched(3.0)
        assert np.abs(H0 @ H1 - H1 @ H0).max() > 1e-3

    def test_sign_flipping_field_along_fixed_axis_commutes(self):
        sched = spin_schedule(SpinParams(), lambda t: np.outer(np.cos(np.asarray(t)), [0, 0, 1]), 0, 10)
        assert sched.commuting_family

    def test_batch_hermitian(self):
        sched = spin_schedule(SpinParams(), rotating_field(1.0, 0.3, 2.0), 0, 5)
        H = sched.evaluate(np.linspace(0, 5, 50))
        assert H.shape == (50, 2, 2)
        assert check_hermitian(H)

    def test_zero_gamma_rejected(self):
        with pytest.raises(ParameterError):
            SpinParams(gamma=0)


class TestFock:
    @pytest.fixture
    def params(self):
        return OscillatorParams(mass=1.3, hbar=0.7, basis_dim=12, basis_frequency=2.1)

    def test_ground_state_moments(self, params):
        ops = fock_operators(params)
        assert ops.x2[0, 0] == pytest.approx(params.hbar / (2 * params.mass * params.basis_frequency), rel=1e-14)
        assert ops.p2[0, 0] == pytest.approx(params.hbar * params.mass * params.basis_frequency / 2, rel=1e-14)

    def test_canonical_commutator_away_from_edge(self, params):
        ops = fock_operators(params)
        comm = ops.x @ ops.p - ops.p @ ops.x
        n = params.basis_dim - 1
        np.testing.assert_allclose(comm[:n, :n], 1j * params.hbar * np.eye(n), atol=1e-13)
        # the last diagonal entry carries the truncation defect
        assert abs(comm[n, n] - 1j * params.hbar) > 1

    def test_squares_are_exact_projections(self, params):
        # cropped from a larger basis, x^2 keeps its correct last diagonal entry
        ops = fock_operators(params)
        N = params.basis_dim
        scale = params.hbar / (2 * params.mass * params.basis_frequency)
        assert ops.x2[N - 1, N - 1] == pytest.approx(scale * (2 * (N - 1) + 1), rel=1e-14)

    def test_basis_dim_validation(self):
        with pytest.raises(ParameterError):
            OscillatorParams(basis_dim=1)
        with pytest.raises(ParameterError):
            OscillatorParams(mass=0)


class TestOscillator:
    def test_own_basis_is_diagonal(self):
        p = OscillatorParams(hbar=1.0, basis_dim=10, basis_frequency=1.5)
        H = oscillator_schedule(p, 1.0, 1.5, 0, 1)(0.3)
        expected = np.diag(1.5 * (np.arange(10) + 0.5))
        # only the top-left block is exact; the last level feels the crop
        np.testing.assert_allclose(H[:-1, :-1], expected[:-1, :-1], atol=1e-13)
        np.testing.assert_allclose(H[-1, -1], expected[-1, -1], atol=1e-13)

    def test_compression_schedule_start(self):
        p = OscillatorParams(basis_dim=8, basis_frequency=1.0)
        ramp = oscillator_schedule(p, 1.0, lambda t: compression_frequency(1.0, 6.0, 10.0, t), 0, 10)
        static = oscillator_schedule(p, 1.0, 1.0, 0, 10)
        np.testing.assert_array_equal(ramp(0.0), static(0.0))

    def test_real_symmetric(self):
        p = OscillatorParams(basis_dim=16)
        H = oscillator_schedule(p, lambda t: 1 + t, lambda t: 2 + np.sin(t), 0, 1).evaluate(np.linspace(0, 1, 5))
        assert not np.iscomplexobj(H)
        assert check_hermitian(H)


class TestTransport:
    def test_zero_displacement_matches_oscillator(self):
        p = OscillatorParams(basis_dim=20, basis_frequency=1.0)
        om = lambda t: 1 + 0.2 * t
        a = transport_schedule(p, 1.2, om, 0.0, 0, 3).evaluate(np.linspace(0, 3, 7))
        b = oscillator_schedule(p, 1.2, om, 0, 3).evaluate(np.linspace(0, 3, 7))
        np.testing.assert_array_equal(a, b)

    def test_transport_function_boundaries(self):
        assert transport_function(5.0, 50.0, 0.0) == 0.0
        assert transport_function(5.0, 50.0, 50.0) == pytest.approx(5.0, abs=1e-15)

    @pytest.mark.parametrize("x0", [0.0, 0.7, -2.0, 3.3])
    def test_displaced_ground_energy(self, x0):
        # <0|(x - x0)^2|0> = <x^2> + x0^2 for the undisplaced Gaussian
        m, w = 1.4, 0.9
        p = OscillatorParams(mass=m, hbar=1.0, basis_dim=16, basis_frequency=w)
        H = transport_schedule(p, 1.0, w, x0, 0, 1)(0.5)
        assert H[0, 0].real - 0.5 * w == pytest.approx(0.5 * m * w**2 * x0**2, abs=1e-13)


class TestReferenceFormulas:
    def test_compression_endpoints_and_midpoint(self):
        assert compression_frequency(1, 6, 2, 0.0) == 1.0
        assert compression_frequency(1, 6, 2, 2.0) == pytest.approx(6.0, abs=1e-15)
        assert compression_frequency(1, 6, 2, 1.0) == pytest.approx(1 + 5 * math.sin(math.pi / 4) ** 2)
        assert compression_frequency(1, 6, 2, 1.0) == pytest.approx(3.5)

    def test_compression_has_flat_ends(self):
        h = 1e-6
        for t in (h, 2 - h):
            slope = (compression_frequency(1, 6, 2, t) - compression_frequency(1, 6, 2, t - h if t > 1 else 0)) / h
            assert abs(slope) < 1e-4

    def test_compression_rejects_out_of_domain(self):
        with pytest.raises(ParameterError):
            compression_frequency(1, 6, 2, 2.1)
        with pytest.raises(ParameterError):
            compression_frequency(1, 6, 2, -0.1)

    def test_tr_frequency_values(self):
        spec = RescalingSpec("sin", 2, 1)
        assert tr_frequency(1, 6, spec, 0.0) == 1.0
        assert tr_frequency(1, 6, spec, 0.5) == pytest.approx(6.0, abs=1e-14)
        assert tr_frequency(1, 6, spec, 0.25) == pytest.approx(math.sqrt(3) * 3.5, abs=1e-13)
        assert tr_frequency(1, 6, spec, 0.25) == pytest.approx(6.06218, abs=1e-5)

    @pytest.mark.parametrize("a", [1.5, 2, 4, 7])
    def test_tr_frequency_matches_closed_form(self, a):
        # explicit expression for the sinusoidal family, written out independently
        t_f, w0, wf = 3.0, 1.0, 6.0
        tau = np.linspace(0, t_f / a, 41)
        k = 2 * np.pi * a / t_f
        arg = np.pi * a / (2 * t_f) * tau - (a - 1) / (4 * a) * np.sin(k * tau)
        closed = np.sqrt(a - (a - 1) * np.cos(k * tau)) * (w0 + (wf - w0) * np.sin(arg) ** 2)
        np.testing.assert_allclose(tr_frequency(w0, wf, RescalingSpec("sin", a, t_f), tau), closed, rtol=1e-13)

    @pytest.mark.parametrize("a", [1.5, 2, 5])
    def test_tr_transport_matches_closed_form(self, a):
        t_f, d = 50.0, 5.0
        tau = np.linspace(0, t_f / a, 41)
        k = 2 * np.pi * a / t_f
        closed = d * np.sin(np.pi * a / (2 * t_f) * tau - (a - 1) / (4 * a) * np.sin(k * tau)) ** 2
        np.testing.assert_allclose(tr_transport_function(d, RescalingSpec("sin", a, t_f), tau), closed, atol=1e-13)

    def test_tr_transport_quarter_point(self):
        assert tr_transport_function(3.0, RescalingSpec("sin", 2, 1), 0.25) == pytest.approx(1.5, abs=1e-14)


def _spin_z_ref(Omega=1.0, t_f=math.pi):
    return spin_schedule(SpinParams(gamma=Omega), constant_field(1.0), 0, t_f)


def _compression_ref(N=12, t_f=10.0):
    p = OscillatorParams(basis_dim=N, basis_frequency=1.0)
    return oscillator_schedule(p, 1.0, lambda t: compression_frequency(1.0, 6.0, t_f, t), 0, t_f)


class TestTimeRescale:
    def test_identity(self):
        ref = _compression_ref()
        tr = time_rescale(ref, RescalingSpec("sin", 1, 10.0))
        assert (tr.t_start, tr.t_end) == (0.0, 10.0)
        t = np.linspace(0, 10, 9)
        np.testing.assert_array_equal(tr.evaluate(t), ref.evaluate(t))

    @pytest.mark.parametrize("a", [2, 3.5])
    def test_spin_z_prefactor(self, a):
        ref = _spin_z_ref()
        spec = RescalingSpec("sin", a, math.pi)
        tr = time_rescale(ref, spec)
        assert tr.commuting_family
        assert tr.t_end == pytest.approx(math.pi / a)
        for tau in np.linspace(0, math.pi / a, 7):
            factor = a - (a - 1) * math.cos(2 * math.pi * a * tau / math.pi)
            np.testing.assert_allclose(tr(tau), factor * 0.5 * SZ, atol=1e-14)

    def test_oscillator_kinetic_and_frequency(self):
        N, t_f, a = 10, 10.0, 3.0
        p = OscillatorParams(basis_dim=N)
        ops = fock_operators(p)
        spec = RescalingSpec("sin", a, t_f)
        tr = time_rescale(_compression_ref(N, t_f), spec)
        for tau in (0.4, 1.7, 3.1):
            rate = eval_f_prime(spec, tau)
            w_tilde = tr_frequency(1.0, 6.0, spec, tau)
            expected = rate * ops.p2 / 2 + 0.5 * w_tilde**2 * ops.x2
            np.testing.assert_allclose(tr(tau), expected, rtol=1e-13, atol=1e-13)

    @pytest.mark.parametrize("family", ["sin", "poly"])
    @pytest.mark.parametrize("a", [2, 4, 10])
    def test_endpoint_hamiltonians(self, family, a):
        ref = _compression_ref()
        tr = time_rescale(ref, RescalingSpec(family, a, 10.0))
        scale = np.abs(ref(0.0)).max()
        assert np.abs(tr(0.0) - ref(0.0)).max() <= 1e-12 * scale
        assert np.abs(tr(tr.t_end) - ref(10.0)).max() <= 1e-12 * scale

    def test_domain_mismatch(self):
        with pytest.raises(ParameterError):
            time_rescale(_compression_ref(t_f=10.0), RescalingSpec("sin", 2, 9.0))

    @pytest.mark.parametrize("family", ["sin", "poly"])
    def test_operator_integral_identity_adaptive(self, family):
        # change of variables: int H_tr dtau == int H dt, checked with adaptive quadrature
        ref = spin_schedule(SpinParams(), rotating_field(1.0, 0.6, 0.8), 0, 6.0)
        tr = time_rescale(ref, RescalingSpec(family, 3, 6.0))
        I_ref, _ = quad_vec(lambda t: ref(t), 0, 6.0, epsabs=1e-13, epsrel=1e-13)
        I_tr, _ = quad_vec(lambda t: tr(t), 0, tr.t_end, epsabs=1e-13, epsrel=1e-13)
        assert np.abs(I_tr - I_ref).max() <= 1e-8 * np.abs(I_ref).max()

    def test_from_function_wrapper(self):
        sched = HamiltonianSchedule.from_function(lambda t: t * SZ, 2, 0, 1)
        tr = time_rescale(sched, RescalingSpec("sin", 2, 1))
        np.testing.assert_allclose(tr(0.25), 3 * 0.5 * SZ, atol=1e-15)
