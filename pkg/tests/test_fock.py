import math

import numpy as np
import pytest

from cvqce import algebra as alg
from cvqce import fock
from cvqce import gaussian as gs
from cvqce.gaussian import GaussianGate

N = 48


def test_zero_displacement_is_identity():
    U = fock.build_gate("D", (0.0,), N).matrix
    np.testing.assert_allclose(U, np.eye(N), atol=1e-12)


def test_fourier_keeps_vacuum():
    out = fock.apply(fock.build_gate("F", (), N), fock.fock_vacuum(N))
    assert fock.fock_fidelity(out, fock.fock_vacuum(N)) == pytest.approx(1.0, abs=1e-12)


def test_dim_below_four_rejected():
    with pytest.raises(ValueError):
        fock.build_gate("X", (0.1,), 3)


def test_budget_overrun_warns():
    with pytest.warns(fock.TruncationWarning):
        fock.build_gate("Squeeze", (2.5,), 64)


@pytest.mark.parametrize(
    "kind, params",
    [("D", (1.0 + 0.5j,)), ("X", (1.0,)), ("Z", (-1.0,)), ("U2", (0.3,)), ("U3", (0.05,)), ("Squeeze", (0.5,)), ("F", ())],
)
def test_unitary_on_bulk(kind, params):
    op = fock.build_gate(kind, params, 64)
    b = op.bulk_levels
    assert b >= 8
    U = op.matrix[:, :b]
    assert np.max(np.abs(U.conj().T @ U - np.eye(b))) <= fock.BULK_TOL


def test_bulk_shrinks_with_stronger_gates():
    sizes = [fock.build_gate("U3", (T,), 64).bulk_levels for T in (0.02, 0.05, 0.1)]
    assert sizes[0] > sizes[1] > sizes[2]


def test_u3_conjugation_matches_polynomial_map():
    T = 0.05
    M = 64
    op = fock.build_gate("U3", (T,), M)
    U = op.matrix
    q, p = fock.quadratures(M)
    pmap = alg.heisenberg([alg.U3(T)])
    # p q^2 reaches two levels above the bulk
    b = op.bulk_levels - 2
    # image of p is p + 3 T q^2 (from the symbolic engine)
    assert pmap["p0"].evaluate({"q0": 1.0, "p0": 0.0}) == pytest.approx(3 * T)
    lhs = (U.conj().T @ p @ U)[:b, :b]
    rhs = (p + 3 * T * q @ q)[:b, :b]
    assert np.max(np.abs(lhs - rhs)) < 1e-6
    assert np.max(np.abs((U.conj().T @ q @ U)[:b, :b] - q[:b, :b])) < 1e-6


def test_coherent_fidelity(oracle):
    a, b = fock.fock_coherent(0.3 + 0.4j, N), fock.fock_coherent(-0.2 + 0.1j, N)
    assert fock.fock_fidelity(a, b) == pytest.approx(oracle["coherent_overlap_root"], abs=1e-8)


def test_displacement_matches_coherent_state():
    out = fock.apply(fock.build_gate("D", (0.7 - 0.2j,), N), fock.fock_vacuum(N))
    assert fock.fock_fidelity(out, fock.fock_coherent(0.7 - 0.2j, N)) == pytest.approx(1.0, abs=1e-10)


def test_from_gaussian_reproduces_moments():
    g = gs.displace(gs.apply_gate(gs.squeezed(0.4, 0.3), GaussianGate("Rotate", (0.2,))), [0.4, -0.3])
    g = gs.apply_loss(g, 0.9)
    m = fock.moments(fock.from_gaussian(g, N))
    np.testing.assert_allclose(m.mean, g.mean, atol=1e-10)
    np.testing.assert_allclose(m.cov, g.cov, atol=1e-10)


def test_gaussian_and_fock_fidelity_agree():
    a = gs.displace(gs.squeezed(0.3), [0.2, 0.1])
    b = gs.apply_loss(gs.coherent(0.25), 0.8)
    ff = fock.fock_fidelity(fock.from_gaussian(a, N), fock.from_gaussian(b, N))
    assert ff == pytest.approx(gs.gaussian_fidelity(a, b), abs=1e-7)


def test_thermal_state_purity():
    assert fock.fock_purity(fock.fock_thermal(1.0, 80)) == pytest.approx(1 / 3, abs=1e-8)


def test_loss_on_coherent_state():
    out = fock.apply_loss(fock.fock_coherent(1.0, N), 0.6)
    assert fock.fock_fidelity(out, fock.fock_coherent(0.6, N)) == pytest.approx(1.0, abs=1e-10)


def test_wigner_matches_gaussian_formula():
    g = gs.displace(gs.squeezed(0.3), [0.5, -0.2])
    x = np.linspace(-4, 4, 41)
    Wf = fock.wigner_fock(fock.from_gaussian(g, N), x, x)
    Wg = gs.wigner_gaussian(g, x, x)
    assert np.max(np.abs(Wf - Wg)) < 1e-8


def test_wigner_of_single_photon_is_negative_at_origin():
    W = fock.wigner_fock(fock.fock_number(1, 16), np.array([0.0]), np.array([0.0]))
    assert float(np.ravel(W)[0]) == pytest.approx(-1 / math.pi, rel=1e-10)


def test_homodyne_samples_have_vacuum_variance(rng):
    x = fock.sample_homodyne_p(fock.fock_vacuum(N), 20000, rng)
    assert x.var() == pytest.approx(0.5, rel=0.05)
    assert abs(x.mean()) < 0.02


def test_homodyne_conditional_on_two_mode_product():
    rho = np.kron(fock.fock_coherent(0.5, 24).matrix, fock.fock_number(1, 24).matrix)
    m, cond = fock.homodyne_p(fock.FockDensity(rho, 24, 2), mode=0, outcome=0.3)
    assert m == 0.3
    assert fock.fock_fidelity(cond, fock.fock_number(1, 24)) == pytest.approx(1.0, abs=1e-10)


def test_teleportation_with_squeezed_ancilla_applies_fourier():
    psi = fock.fock_coherent(0.4 + 0.2j, 40)
    anc = gs.squeezed(-3.0)
    m, out, c = fock.cz_teleport(psi, anc, outcome=0.7)
    out = fock.apply(fock.build_gate("Z", (c,), 40, check_budget=False), out)
    # with a p-squeezed ancilla the corrected output is F|psi>
    target = fock.apply(fock.build_gate("F", (), 40), psi)
    assert fock.fock_fidelity(out, target) > 0.999


def test_teleportation_matches_full_two_mode_calculation():
    dim = 24
    psi = fock.fock_coherent(0.3, dim)
    anc = gs.squeezed(-0.8)
    m, out, c = fock.cz_teleport(psi, anc, outcome=0.4)
    out = fock.apply(fock.build_gate("Z", (c,), dim, check_budget=False), out)
    full = fock.FockDensity(np.kron(psi.matrix, fock.from_gaussian(anc, dim).matrix), dim, 2)
    full = fock.apply(fock.build_gate("CZ", (1.0,), dim, pad=40), full)
    _, cond = fock.homodyne_p(full, mode=0, outcome=0.4)
    cond = fock.apply(fock.build_gate("X", (-0.4,), dim, check_budget=False), cond)
    assert fock.fock_fidelity(out, cond) > 1 - 1e-5


def test_mean_photon_number_of_coherent_state():
    assert fock.mean_photon_number(fock.fock_coherent(1.2, 64)) == pytest.approx(1.44, abs=1e-8)


def test_state_shape_checked():
    with pytest.raises(ValueError):
        fock.FockDensity(np.eye(5), 4)
