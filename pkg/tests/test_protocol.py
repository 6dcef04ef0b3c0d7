import json
import math

import numpy as np
import pytest

from cvqce import fock
from cvqce import gaussian as gs
from cvqce import protocol as proto
from cvqce.gaussian import GaussianGate
from cvqce.protocol import ChannelModel, GadgetParams

from test_gaussian import random_program


def test_channel_model_validates():
    with pytest.raises(ValueError):
        ChannelModel(1.2)
    with pytest.raises(ValueError):
        ChannelModel(excess_noise=-0.1)
    assert ChannelModel.symmetric(0.8).round_trip == pytest.approx(0.64)


def test_key_has_requested_variance(rng):
    Q = [proto.draw_key(1, 3.0, rng).Q[0] for _ in range(4000)]
    assert np.var(Q) == pytest.approx(3.0, rel=0.08)


def test_lossless_round_trip_matches_plaintext(rng):
    for _ in range(20):
        prog = random_program(rng, 2, 5)
        state = gs.product(gs.coherent(0.4 - 0.2j), gs.squeezed(0.3))
        run = proto.run_gaussian_program(state, prog, 20.0, rng=rng)
        assert run.decrypted.is_close(run.plaintext, atol=1e-10)


def test_lossy_displacement_gives_t2_alpha_plus_t_beta(rng):
    alpha, beta, t = 0.7 + 0.3j, -0.4 + 0.9j, 0.7
    prog = [GaussianGate("X", (math.sqrt(2) * beta.real,)), GaussianGate("Z", (math.sqrt(2) * beta.imag,))]
    run = proto.run_gaussian_program(gs.coherent(alpha), prog, 15.0, ChannelModel.symmetric(t), rng=rng)
    expected = gs.coherent(t * t * alpha + t * beta)
    np.testing.assert_allclose(run.decrypted.mean, expected.mean, atol=1e-12)
    np.testing.assert_allclose(run.decrypted.cov, expected.cov, atol=1e-12)


def test_transcript_has_two_quantum_uses_and_no_key(rng):
    run = proto.run_gaussian_program(gs.coherent(0.5), [GaussianGate("F")], 10.0, rng=rng)
    tr = run.transcript
    assert tr.quantum_uses == 2
    text = tr.to_json()
    assert "Q" not in json.loads(text)["messages"][0]
    for v in run.key.vector:
        assert repr(float(v)) not in text


def test_transcript_rejects_private_fields():
    tr = proto.SessionTranscript()
    with pytest.raises(proto.ProtocolError):
        tr.classical("client->server", "oops", key=1.0)


def test_server_view_is_key_independent():
    views = [
        proto.run_gaussian_program(gs.coherent(0.5), [], 10.0, rng=np.random.default_rng(s)).server_view for s in (1, 2)
    ]
    assert views[0] == views[1]


def test_imperfect_key_adds_noise(rng):
    run = proto.run_gaussian_program(gs.vacuum(), [], 4.0, rng=rng, key_correlation=0.9)
    np.testing.assert_allclose(np.diag(run.decrypted.cov), 0.5 + 2 * 0.1 * 4.0)


def test_cubic_gate_rejected_on_gaussian_path(rng):
    with pytest.raises(Exception):
        proto.run_gaussian_program(gs.vacuum(), [("U3", 0.1)], 1.0, rng=rng)


def test_squeeze_gate_gains(rng):
    t, r = 0.9, 0.5
    dec, rep = proto.run_squeeze_gate(gs.coherent(0.3), r, 10.0, ChannelModel.symmetric(t), rng=rng)
    assert rep.gains == pytest.approx((t * t * math.exp(-r), t * t * math.exp(r)))
    assert rep.residual_mean_error < 1e-10


def test_u2_equals_rotated_squeeze():
    T = 0.37
    theta, r, phi = proto.u2_squeeze_equivalence(T)
    R = lambda a: np.array([[math.cos(a), -math.sin(a)], [math.sin(a), math.cos(a)]])
    M = R(theta) @ np.diag([math.exp(-r), math.exp(r)]) @ R(phi)
    np.testing.assert_allclose(M, [[1, 0], [2 * T, 1]], atol=1e-12)


def test_u2_via_squeeze_matches_direct_u2(rng):
    state = gs.displace(gs.squeezed(0.2), [0.3, -0.1])
    out, _ = proto.u2_via_squeeze(state, 0.25, 10.0, rng=rng)
    assert out.is_close(gs.apply_gate(state, GaussianGate("U2", (0.25,))), atol=1e-10)


def test_ensemble_stages_order_and_purity():
    stages = proto.ensemble_stages(gs.squeezed(math.log(2)), 0.1, 4.0)
    assert [s.name for s in stages] == ["input", "encrypted", "post-gate", "decrypted"]
    assert gs.purity(stages[1].state) < gs.purity(stages[0].state)
    assert stages[3].state.is_close(stages[0].state)


def test_gadget_reproduces_cubic_gate(rng):
    psi = fock.fock_coherent(0.4, 64)
    run = proto.run_with_gadget(psi, [("U3", 0.05)], GadgetParams(T=0.05), 0.05, rng=rng)
    assert run.fidelity >= 0.98
    assert run.transcript.quantum_uses == 3
    assert run.transcript.count("m1") == 1
    assert run.B == pytest.approx(-3 * run.key.Q[0] * 0.05 - run.A)


def test_gadget_with_gaussian_gates_around_cubic(rng):
    psi = fock.fock_coherent(0.3j, 64)
    prog = [GaussianGate("Rotate", (0.4,)), ("U3", 0.04), GaussianGate("Z", (0.2,))]
    run = proto.run_with_gadget(psi, prog, GadgetParams(T=0.04), 0.05, rng=rng)
    assert run.fidelity >= 0.98


def test_gadget_rejects_two_cubic_gates(rng):
    with pytest.raises(proto.ProtocolError):
        proto.run_with_gadget(
            fock.fock_vacuum(32), [("U3", 0.05), ("U3", 0.05)], GadgetParams(T=0.05), 0.05, rng=rng
        )


def test_gadget_leak_guard(rng):
    with pytest.raises(fock.TruncationError):
        proto.run_with_gadget(fock.fock_vacuum(24), [("U3", 0.05)], GadgetParams(T=0.05), 50.0, rng=rng)


def test_channel_estimate_is_unbiased(rng):
    est = [proto.estimate_channel(1000, 0.8, rng=rng)[0] for _ in range(10)]
    assert np.mean(est) == pytest.approx(0.8, abs=0.003)


def test_channel_estimate_needs_probes(rng):
    with pytest.raises(ValueError):
        proto.estimate_channel(5, 0.8, rng=rng)


def test_epr_conditional_state(rng, oracle):
    out = proto.epr_encryption_ensemble(2.5, 20000, rng)
    assert out["conditional_purity"] == pytest.approx(1.0, abs=1e-12)
    assert out["displacement_var_analytic"] == pytest.approx(oracle["epr_r2p5"]["sinh2"], rel=1e-12)
    assert out["excess_noise_analytic"] == pytest.approx(oracle["epr_r2p5"]["excess"], rel=1e-12)
    assert out["excess_noise_empirical"] == pytest.approx(out["excess_noise_analytic"], rel=0.05)


def test_fisher_analytic_and_validation(rng):
    assert proto.gadget_split_fisher(0.1, 2.0) == pytest.approx(9 * 0.01 / 2.0)
    with pytest.raises(ValueError):
        proto.gadget_split_fisher(0.1, 0.0)
    est = proto.gadget_split_fisher(0.1, 2.0, 50000, rng)
    assert est == pytest.approx(0.045, rel=0.03)
