"""Acceptance suite: one test per criterion, each recording a PASS/FAIL line."""

import math
import time

import numpy as np
import pytest

from cvqce import cli
from cvqce import fock
from cvqce import gaussian as gs
from cvqce import metrics as mt
from cvqce import protocol as proto
from cvqce.gaussian import GaussianGate
from cvqce.protocol import ChannelModel, GadgetParams

from test_gaussian import random_program

QUOTED_MI = 0.005
QUOTED_PURITIES = {1.0: 0.27, 4.0: 0.10, 9.0: 0.05}


def test_criterion_1_table_i(acceptance):
    t0 = time.perf_counter()
    report = cli.run_verify(fuzz=1000, seed=0, fock_checks=3, dim=64)
    elapsed = time.perf_counter() - t0
    rows = [r for r in report["rows"] if r["identity"].startswith("TableI:")]
    sym = all(r["symbolic"] and r["fuzz_failures"] == 0 for r in rows)
    worst = min(r["fock_min_fidelity"] for r in rows)
    ok = len(rows) == 6 and sym and worst >= 0.999 and elapsed < 60
    acceptance(1, ok, f"6 rows symbolic+1000 fuzz exact={sym}, min Fock fidelity {worst:.6f}, {elapsed:.1f} s")
    assert ok


def test_criterion_2_mutual_information(acceptance, oracle):
    analytic = mt.mutual_info_analytic(0.28, 31.0)
    exact = abs(analytic - oracle["mutual_info_0p28_31_nats"]) <= 1e-12
    t0 = time.perf_counter()
    errs = []
    for k, (v_in, v_enc) in enumerate([(0.28, 31.0), (0.6, 10.0)]):
        x, y = mt.simulate_encrypted_homodyne(v_in, v_enc, 10**6, np.random.default_rng(100 + k))
        ref = mt.mutual_info_gaussian_channel(v_in, v_enc)
        errs.append(abs(mt.mutual_info_estimate(x, y) / ref - 1))
    elapsed = time.perf_counter() - t0
    mc_ok = max(errs) <= 0.05 and elapsed < 10
    one_sf = float(f"{analytic:.0e}") == QUOTED_MI
    acceptance(
        2,
        exact and mc_ok and one_sf,
        f"I={analytic:.4e} nats exact={exact}; MC rel err {max(errs):.3%} in {elapsed:.1f} s; "
        f"1-s.f. value {analytic:.0e} vs quoted 0.005, match: {one_sf}",
    )
    assert exact and mc_ok


@pytest.mark.xfail(strict=True, reason="1/2 ln(1+0.28/31) = 0.0044959 rounds to 0.004, not the quoted 0.005")
def test_criterion_2_one_significant_figure():
    assert float(f"{mt.mutual_info_analytic(0.28, 31.0):.0e}") == QUOTED_MI


def test_criterion_3_purity_ladder(acceptance, oracle):
    sq = gs.squeezed(math.log(2))
    got = {d: gs.purity(gs.encrypt_ensemble(sq, d)) for d in QUOTED_PURITIES}
    quoted_ok = all(abs(got[d] - QUOTED_PURITIES[d]) <= 0.005 for d in got)
    oracle_ok = all(abs(got[d] - oracle["purity_squeezed_ln2"][str(int(d))]) <= 1e-12 for d in got)
    vac = gs.purity(gs.encrypt_ensemble(gs.vacuum(), gs.alpha_plane_to_quadrature(4.0)))
    vac_ok = abs(vac - 1 / 17) <= 1e-10
    ok = quoted_ok and oracle_ok and vac_ok
    ladder = ", ".join(f"{got[d]:.4f}" for d in sorted(got))
    acceptance(3, ok, f"squeezed purities {ladder}; vacuum alpha-plane Delta=2 purity {vac:.12f} (1/17)")
    assert ok


def test_criterion_4_loss_fidelity(acceptance, oracle):
    grid = [0.25, 0.5, 0.75, 1.0]
    est = mt.avg_fidelity_vs_t(1.0, grid, 10**5, seed=4)
    naive = mt.avg_fidelity_vs_t(1.0, grid, 10**5, seed=4, with_estimation=False)
    rel = np.abs(est.values / est.extra["closed_form"] - 1)
    oracle_vals = [oracle["avg_fidelity_delta_sq_1"][str(t)]["estimated"] for t in grid]
    closed_ok = np.allclose(est.extra["closed_form"], oracle_vals, rtol=1e-12)
    f1 = est.values[-1] == 1.0 and naive.values[-1] == 1.0
    ordered = bool(np.all(est.values[:-1] >= naive.values[:-1]))
    ok = rel.max() <= 0.005 and closed_ok and f1 and ordered
    acceptance(4, ok, f"max MC rel err {rel.max():.3%}; F(1)=1: {f1}; estimated >= naive for t<1: {ordered}")
    assert ok


def test_criterion_5_cubic_gadget(acceptance):
    fids = []
    counts_ok = True
    for T in (0.01, 0.03, 0.05):
        for k, alpha in enumerate((0.0, 0.5, 0.5j, -0.35 + 0.35j)):
            rng = np.random.default_rng(1000 + k)
            run = proto.run_with_gadget(
                fock.fock_coherent(alpha, 64), [("U3", T)], GadgetParams(T=T, r_anc=3.0), 0.05, rng=rng
            )
            fids.append(run.fidelity)
            counts_ok &= run.transcript.quantum_uses == 3 and run.transcript.count("m1") == 1
    ladder = []
    for r in (1.0, 1.5, 2.0, 2.5, 3.0):
        run = proto.run_with_gadget(
            fock.fock_coherent(0.5, 64), [("U3", 0.05)], GadgetParams(T=0.05, r_anc=r), 0.05, rng=np.random.default_rng(7)
        )
        ladder.append(run.fidelity)
    monotone = all(b >= a - 0.002 for a, b in zip(ladder, ladder[1:]))
    ok = min(fids) >= 0.98 and monotone and counts_ok
    acceptance(
        5,
        ok,
        f"min fidelity {min(fids):.5f} over 12 runs; r_anc ladder {', '.join(f'{f:.5f}' for f in ladder)}; "
        f"3 quantum uses and one m1: {counts_ok}",
    )
    assert ok


def test_criterion_6_gaussian_round_trip(acceptance):
    rng = np.random.default_rng(6)
    worst = 0.0
    for _ in range(200):
        n = int(rng.integers(1, 3))
        prog = random_program(rng, n, int(rng.integers(1, 7)))
        alphas = rng.normal(0, 0.7, (n, 2))
        state = gs.product(*[gs.coherent(complex(a, b)) for a, b in alphas])
        run = proto.run_gaussian_program(state, prog, 30.0, rng=rng)
        worst = max(worst, np.abs(run.decrypted.mean - run.plaintext.mean).max(), np.abs(run.decrypted.cov - run.plaintext.cov).max())
    lossy = 0.0
    for t in (0.3, 0.6, 0.9):
        alpha, beta = complex(*rng.normal(0, 1, 2)), complex(*rng.normal(0, 1, 2))
        for prog, target in (
            ([], t * t * alpha),
            ([GaussianGate("X", (math.sqrt(2) * beta.real,)), GaussianGate("Z", (math.sqrt(2) * beta.imag,))], t * t * alpha + t * beta),
        ):
            run = proto.run_gaussian_program(gs.coherent(alpha), prog, 30.0, ChannelModel.symmetric(t), rng=rng)
            lossy = max(lossy, np.abs(run.decrypted.mean - gs.coherent(target).mean).max())
    ok = worst <= 1e-10 and lossy <= 1e-12
    acceptance(6, ok, f"200 programs max moment error {worst:.1e}; lossy mean error vs coherent(t^2 a + t b) {lossy:.1e}")
    assert ok


def test_criterion_7_channel_estimation(acceptance):
    rngs = mt.point_rngs(7, 60)
    parts = []
    ok = True
    for i, t in enumerate((0.6, 0.8, 1.0)):
        est = np.array([proto.estimate_channel(1000, t, rng=rngs[20 * i + j])[0] for j in range(20)])
        dev = np.abs(est - t).max()
        three_sigma = 3 * est.std(ddof=1)
        ok &= dev <= 0.01 and three_sigma <= 0.01
        parts.append(f"t={t}: max dev {dev:.4f}, 3 sigma {three_sigma:.4f}")
    acceptance(7, ok, "; ".join(parts))
    assert ok


def test_criterion_8_fisher(acceptance):
    T = 0.05
    vals = {}
    for v_in in (1.0, 2.0):
        vals[v_in] = proto.gadget_split_fisher(T, v_in, 10**5, np.random.default_rng(8))
    rel = max(abs(vals[v] / (9 * T * T / v) - 1) for v in vals)
    ratio = vals[1.0] / vals[2.0]
    ok = rel <= 0.01 and abs(ratio - 2) <= 0.02
    acceptance(8, ok, f"max rel err vs 9T^2/V_in {rel:.3%}; F(V)/F(2V) = {ratio:.4f}")
    assert ok


def test_criterion_9_epr(acceptance):
    out = proto.epr_encryption_ensemble(2.5, 10**5, np.random.default_rng(9))
    v_enc = out["v_enc_equivalent"]
    excess_frac = max(out["excess_noise_analytic"], out["excess_noise_empirical"]) / v_enc
    r_grid = [0.5, 1.0, 1.5, 2.0, 2.5, 3.0]
    excess = [proto.epr_encryption_ensemble(r, 10, np.random.default_rng(0))["excess_noise_analytic"] for r in r_grid]
    mono = all(b < a for a, b in zip(excess, excess[1:]))
    ok = out["conditional_purity"] >= 0.99 and excess_frac <= 0.01 and mono
    acceptance(
        9,
        ok,
        f"purity {out['conditional_purity']:.6f}; excess {excess_frac:.2e} of v_enc; monotone decreasing in r: {mono}",
    )
    assert ok


def _fock_program(state, prog, dim):
    for g in prog:
        state = fock.apply(fock.build_gate(g.kind, g.params, dim), state)
    return state


def test_criterion_10_cross_backend(acceptance):
    rng = np.random.default_rng(10)
    worst, worst_leak = 0.0, 0.0
    dim = 64
    for _ in range(20):
        base = gs.displace(gs.squeezed(rng.uniform(-0.4, 0.4), rng.uniform(0, math.pi)), rng.uniform(-0.8, 0.8, 2))
        prog = []
        for _ in range(int(rng.integers(1, 5))):
            k = rng.choice(["X", "Z", "U2", "F", "Squeeze", "Rotate"])
            prm = () if k == "F" else (float(rng.uniform(-0.3, 0.3)),)
            prog.append(GaussianGate(k, prm))
        t = float(rng.uniform(0.6, 1.0))
        g = gs.apply_loss(gs.apply_program(base, prog), t)
        f = fock.apply_loss(_fock_program(fock.from_gaussian(base, dim), prog, dim), t)
        worst_leak = max(worst_leak, f.leak)
        m = fock.moments(f)
        for a, b in ((m.mean, g.mean), (m.cov, g.cov)):
            worst = max(worst, float(np.max(np.abs(a - b) / np.maximum(np.abs(b), 1.0))))
    ok = worst <= 1e-4 and worst_leak < 1e-4
    acceptance(10, ok, f"20 scenarios max relative moment error {worst:.1e}; max leak {worst_leak:.1e}")
    assert ok


CLI_RUNS = [
    ["verify", "--fuzz", "50", "--seed", "3"],
    ["run", "displacement_gate.cfg"],
    ["run", "squeeze_gate.cfg", "--backend", "fock"],
    ["run", "CUBIC"],
    ["sweep", "mutual-info", "--v-in", "0.6", "--v-enc", "1:40:5"],
    ["sweep", "fidelity-vs-t", "--grid", "0:1:5", "--samples", "5000", "--seed", "2", "--workers", "2"],
    ["sweep", "purity", "--delta", "1,2,3"],
    ["estimate", "--t", "0.8", "--compare", "--seed", "1"],
]

CUBIC_CFG = {
    "seed": 11,
    "input": {"kind": "coherent", "alpha": [0.4, 0.0]},
    "encryption": {"v_enc": 0.1},
    "program": [{"gate": "Rotate", "params": [0.3]}, {"gate": "U3", "params": [0.05]}],
    "backend": {"kind": "fock", "dim": 64},
    "gadget": {"r_anc": 3.0},
    "outputs": {"wigner": True, "wigner_extent": 5.0, "wigner_points": 21},
}


def test_criterion_11_reproducibility(acceptance, tmp_path, monkeypatch, capsys):
    import json

    cubic = tmp_path / "cubic.cfg"
    cubic.write_text(json.dumps(CUBIC_CFG))
    monkeypatch.chdir(tmp_path)
    mismatched = []
    for i, argv in enumerate(CLI_RUNS):
        argv = [str(cubic) if a == "CUBIC" else a for a in argv]
        snaps = []
        for rep in range(2):
            out = tmp_path / f"run{i}_{rep}"
            code = cli.main(argv + ["--out", str(out)])
            stdout = capsys.readouterr().out.replace(str(out), "<out>")
            files = {p.name: p.read_bytes() for p in sorted(out.iterdir())}
            snaps.append((code, stdout, files))
        if snaps[0] != snaps[1] or snaps[0][0] != 0 or not snaps[0][2]:
            mismatched.append(" ".join(argv[:2]))
    ok = not mismatched
    acceptance(11, ok, f"{len(CLI_RUNS)} commands run twice, byte-identical: {ok} {mismatched or ''}".rstrip())
    assert ok
