
import numpy as np
import pytest
import scipy.linalg

from spinlind import acp
from spinlind import lineshape as ls
from spinlind import mastereq as me
from spinlind import numutil as nu
from spinlind import spincore as sc
from spinlind.errors import ValidationError


def two_spin_system(t12=6.0, gammas=(-2.0e2, -3.0e2)):
    couplings = np.array([[0.0, t12], [t12, 0.0]])
    return sc.SpinSystem([0.5, 0.5], gammas, couplings)


class TestInteractionPicture:
    def test_zero_argument_is_identity_rotation(self):
        system = two_spin_system()
        assert np.allclose(acp.x_interaction(system, 1.0, 0.0), sc.build_x(system))

    def test_degenerate_elements_are_argument_independent(self):
        # equal gammas: the flip-flop elements connect degenerate levels
        system = two_spin_system(gammas=(-2.0e2, -2.0e2))
        x0 = sc.build_x(system)
        for s in (0.3, 1.0j, 0.2 - 0.4j):
            xs = acp.x_interaction(system, 1.0, s)
            mask = np.abs(x0) > 0
            assert np.allclose(xs[mask], x0[mask])

    def test_matches_dense_matrix_exponential(self):
        system = two_spin_system()
        zo = sc.build_zo(system, 1.0)
        x0 = sc.build_x(system)
        for s in (0.7, 0.25j, 0.1 + 0.05j):
            oracle = scipy.linalg.expm(-1j * s * zo) @ x0 @ scipy.linalg.expm(1j * s * zo)
            got = acp.x_interaction(system, 1.0, s)
            assert np.max(np.abs(got - oracle)) <= 1e-10 * np.max(np.abs(oracle))


class TestNestedIntegrals:
    def test_uncoupled_system_has_zero_moments(self):
        system = sc.SpinSystem([0.5, 0.5], [-1.0, -2.0])
        for n in (1, 2, 3):
            assert acp.y_moment(system, 1.0, n, 0.5) == 0.0

    def test_first_order_matches_elementwise_closed_form(self):
        system = two_spin_system()
        b_o, beta = 1.0, 3e-3
        y1 = acp.y_nested(system, b_o, 1, beta)
        eps = np.real(np.diag(sc.build_zo(system, b_o)))
        x0 = sc.build_x(system)
        oracle = np.zeros_like(x0)
        for a in range(4):
            for b in range(4):
                if x0[a, b] != 0:
                    gap = eps[a] - eps[b]
                    if abs(gap) < 1e-14:
                        oracle[a, b] = -x0[a, b] * beta
                    else:
                        oracle[a, b] = -x0[a, b] * (np.exp(beta * gap) - 1.0) / gap
        assert np.max(np.abs(y1 - oracle)) <= 1e-8 * max(np.max(np.abs(oracle)), 1e-300)

    def test_flip_flop_first_moment_vanishes(self):
        system = two_spin_system()
        assert abs(acp.y_moment(system, 1.0, 1, 2e-3)) < 1e-12

    def test_moment_homogeneity_in_coupling(self):
        base = two_spin_system(t12=2.0)
        scaled = two_spin_system(t12=6.0)  # X -> 3 X with identical Z0 Zeeman part
        b_o, beta = 200.0, 1e-3  # Zeeman dominates; the T Sz Sz shift is tiny but differs
        # compare against a system where only X is scaled: rebuild by hand
        eps = np.real(np.diag(sc.build_zo(base, b_o)))
        x0 = sc.build_x(base)

        def moment_of(c, n):
            rho0 = sc.boltzmann_state(eps, beta)
            y = (-1.0) ** n * acp._simplex_tensor(c * x0, eps, beta, n, 32)
            return complex(np.trace(rho0 @ y))

        for n in (1, 2, 3):
            m1 = moment_of(1.0, n)
            m3 = moment_of(3.0, n)
            assert m3 == pytest.approx(3.0 ** n * m1, rel=1e-9, abs=1e-18)

    def test_imaginary_argument_moments_real(self):
        system = two_spin_system()
        for n in (1, 2):
            m = acp.y_moment(system, 1.0, n, 4e-3)
            assert abs(m.imag) <= 1e-10 * max(abs(m), 1e-300)

    def test_order_cap(self):
        system = two_spin_system()
        with pytest.raises(ValidationError):
            acp.y_nested(system, 1.0, 5, 1e-3)


class TestZetaCoefficients:
    def test_first_coefficient_forced_by_recursion(self):
        moments = acp.AcpMoments([0.3 + 0.1j])
        zetas = acp.zeta_recursive(moments).zetas
        assert zetas[1] == pytest.approx(-(0.3 + 0.1j))

    def test_second_coefficient_hand_unrolled(self):
        y1, y2 = 0.2 - 0.5j, 1.1 + 0.3j
        zetas = acp.zeta_recursive(acp.AcpMoments([y1, y2])).zetas
        assert zetas[2] == pytest.approx(y1 * y1 - y2)
        assert acp.zeta_determinant(acp.AcpMoments([y1, y2]), 2) == pytest.approx(
            y1 * y1 - y2)

    def test_zero_moments_give_kronecker_delta(self):
        zetas = acp.zeta_recursive(acp.AcpMoments([0.0] * 5)).zetas
        assert zetas[0] == 1.0
        assert all(z == 0.0 for z in zetas[1:])

    def test_determinant_equals_recursion_random(self, rng):
        for _ in range(30):
            vals = rng.normal(size=6) + 1j * rng.normal(size=6)
            moments = acp.AcpMoments(vals)
            zetas = acp.zeta_recursive(moments).zetas
            for n in range(1, 7):
                det = acp.zeta_determinant(moments, n)
                assert abs(det - zetas[n]) < 1e-10 * max(1.0, abs(zetas[n]))

    def test_geometric_moments_collapse(self):
        q = 0.37
        moments = acp.AcpMoments([q, q ** 2, q ** 3])
        zetas = acp.zeta_recursive(moments).zetas
        # 1 / sum_k q^k l^k = 1 - q l: all higher coefficients vanish
        assert zetas[1] == pytest.approx(-q)
        assert abs(zetas[2]) < 1e-15
        assert abs(zetas[3]) < 1e-15
        assert acp.zeta_determinant(moments, 3) == pytest.approx(0.0, abs=1e-15)

    def test_determinant_validation(self):
        moments = acp.AcpMoments([1.0])
        with pytest.raises(ValidationError):
            acp.zeta_determinant(moments, 2)
        with pytest.raises(ValidationError):
            acp.zeta_determinant(moments, 0)


class TestInitialCorrections:
    def test_order_zero_is_boltzmann(self):
        system = two_spin_system()
        b_o, beta = 1.0, 2e-3
        rho = acp.initial_correction(system, b_o, 0, beta)
        eps = np.real(np.diag(sc.build_zo(system, b_o)))
        assert np.allclose(rho, sc.boltzmann_state(eps, beta))

    def test_higher_orders_traceless_hermitian(self):
        system = two_spin_system()
        report = []
        for n in (1, 2):
            rho_n = acp.initial_correction(system, 1.0, n, 2e-3,
                                           herm_report=report)
            assert abs(np.trace(rho_n)) < 1e-9
            assert np.max(np.abs(rho_n - rho_n.conj().T)) == 0.0  # hermitized output
        assert all(r < 1e-8 for r in report)

    def test_truncated_sum_approaches_gibbs_cubically(self):
        # scaling study: residual of the order-2 truncation falls as the cube
        # of the coupling scale; keep beta * energies moderate so the
        # imaginary-time quadrature stays in a healthy regime
        b_o, beta = 3.0, 0.4
        scales = np.array([0.5, 0.25, 0.125, 0.0625])
        residuals = []
        for c in scales:
            system = two_spin_system(t12=0.8 * c, gammas=(-2.0, -3.0))
            pieces = [acp.initial_correction(system, b_o, n, beta) for n in (0, 1, 2)]
            total = sum(pieces)
            h_full = sc.static_hamiltonian(system, b_o)
            gibbs = scipy.linalg.expm(-beta * h_full)
            gibbs = gibbs / np.trace(gibbs)
            residuals.append(np.max(np.abs(total - gibbs)))
        slopes = np.diff(np.log(residuals)) / np.diff(np.log(scales))
        assert np.all(np.abs(slopes - 3.0) < 0.1)


class TestOrderNPropagation:
    @pytest.fixture
    def model(self):
        system = two_spin_system()
        dist = ls.lorentzian(2.2e2, 40.0)
        field = me.FieldConfig(b_o=1.0, b_1=1e-3, dist=dist)
        return me.build_model(system, field, 2e-3)

    def test_zero_inhomogeneity_zero_start_stays_zero(self, model):
        zero = np.zeros((4, 4), dtype=complex)
        traj = acp.propagate_order_n(model, 1, lambda t: zero, 0.02, dt=2e-5,
                                     rho_n0=zero)
        assert np.max(np.abs(traj.final)) == 0.0

    def test_zero_inhomogeneity_matches_order_zero_dynamics(self, model):
        zero = np.zeros((4, 4), dtype=complex)
        rho1 = acp.initial_correction(model.system, model.field.b_o, 1, model.beta)
        traj_n = acp.propagate_order_n(model, 1, lambda t: zero, 0.01, dt=1e-5,
                                       rho_n0=rho1)
        traj_0 = me.propagate(model, rho1, 0.01, dt=1e-5, unsafe=True)
        assert np.max(np.abs(traj_n.final - traj_0.final)) < 1e-12

    def test_trace_stays_zero(self, model):
        rho1 = acp.initial_correction(model.system, model.field.b_o, 1, model.beta)
        g = np.diag([1.0, -1.0, 0.5, -0.5]).astype(complex) * 1e-3
        traj = acp.propagate_order_n(model, 1, lambda t: g, 0.02, dt=2e-5,
                                     rho_n0=rho1)
        for state in traj.states:
            assert abs(np.trace(state)) < 1e-10

    def test_constant_inhomogeneity_duhamel_oracle(self, model):
        # undriven model variant: A(t) = 0, so rho(t) = int_0^t e^{L s} G ds
        quiet = me.FieldConfig(b_o=model.field.b_o, b_1=0.0, dist=model.field.dist)
        model0 = me.build_model(model.system, quiet, model.beta)
        g = np.zeros((4, 4), dtype=complex)
        g[0, 0], g[1, 1] = 1e-2, -1e-2
        g[2, 3] = g[3, 2] = 2e-3
        zero = np.zeros_like(g)
        t_end = 0.05
        traj = acp.propagate_order_n(model0, 1, lambda t: g, t_end, dt=2e-5,
                                     rho_n0=zero)
        lmat = me.liouvillian_matrix(model0)
        aug = np.zeros((17, 17), dtype=complex)
        aug[:16, :16] = lmat
        aug[:16, 16] = nu.vec(g)
        prop = scipy.linalg.expm(aug * t_end)
        oracle = nu.unvec(prop[:16, 16], 4)
        assert np.max(np.abs(traj.final - oracle)) < 1e-9

    def test_traceful_inhomogeneity_rejected(self, model):
        bad = np.eye(4, dtype=complex)
        with pytest.raises(ValidationError):
            acp.propagate_order_n(model, 1, lambda t: bad, 0.01, dt=1e-3,
                                  rho_n0=np.zeros((4, 4), dtype=complex))

    def test_order_zero_redirected(self, model):
        with pytest.raises(ValidationError):
            acp.propagate_order_n(model, 0, lambda t: None, 0.01)
