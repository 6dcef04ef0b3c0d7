"""
Command-line front end.

Subcommands: ``verify``, ``run``, ``sweep`` and ``estimate``.  Exit codes
are 0 on success, 1 when a verification fails and 2 for configuration or
usage errors.  Output files go to ``--out``, else ``$CVQCE_OUTPUT_DIR``,
else ``./cvqce_out``.  Variances on the command line and in scenario files
are in shot-noise units unless a config says ``"units": "internal"``.
"""

import argparse
import csv
import io
import json
import math
import os
from pathlib import Path
import sys
from importlib import resources

import numpy as np

from . import algebra as alg
from . import fock
from . import gaussian as gs
from . import metrics
from . import protocol as proto
from .gaussian import GaussianGate

OUTPUT_ENV = "CVQCE_OUTPUT_DIR"
EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


class ConfigError(ValueError):
    pass


def output_dir(arg):
    path = Path(arg or os.environ.get(OUTPUT_ENV) or "cvqce_out")
    path.mkdir(parents=True, exist_ok=True)
    return path


def _write(path, text):
    Path(path).write_text(text, encoding="utf-8")


def _dumps(obj):
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def bundled_scenario(name):
    """Path-like handle of a scenario file shipped with the package."""
    return resources.files("cvqce").joinpath("data", "scenarios", name)


# -- config ------------------------------------------------------------------------


def load_schema():
    return json.loads(resources.files("cvqce").joinpath("data", "scenario.schema.json").read_text())


def load_config(path):
    """Parse and validate a scenario file; raises :class:`ConfigError` with key/line detail."""
    import jsonschema

    path = Path(path)
    if not path.exists():
        alt = bundled_scenario(path.name)
        if path.parent == Path(".") or str(path).startswith("examples"):
            if alt.is_file():
                path = alt
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    validator = jsonschema.Draft202012Validator(load_schema())
    errors = sorted(validator.iter_errors(cfg), key=lambda e: list(e.path))
    if errors:
        msgs = [f"{'/'.join(str(p) for p in e.path) or '<root>'}: {e.message}" for e in errors]
        raise ConfigError(f"{path}: " + "; ".join(msgs))
    ch = cfg.get("channel", {})
    if "loss_db" in ch and ({"t_forward", "t_backward"} & set(ch)):
        raise ConfigError(f"{path}: channel: give either loss_db or t_forward/t_backward, not both")
    return cfg


class Scenario:
    """Scenario config converted to internal units and library objects."""

    def __init__(self, cfg, backend=None):
        self.cfg = cfg
        inp = cfg["input"]
        scale = 0.5 if inp.get("units", "snu") == "snu" else 1.0
        self.scale = scale
        kind = inp["kind"]
        if kind == "vacuum":
            base = gs.vacuum(1)
        elif kind == "coherent":
            re, im = inp.get("alpha", [0.0, 0.0])
            base = gs.coherent(complex(re, im))
        elif kind == "squeezed":
            base = gs.squeezed(inp.get("r", 0.0), inp.get("phi", 0.0))
        else:
            base = gs.thermal(inp.get("nbar", 0.0))
        self.base = base
        self.v_in = inp.get("v_in", 0.0) * scale
        enc = cfg["encryption"]
        v_enc = enc["v_enc"]
        if enc.get("convention", "per-quadrature") == "alpha-plane":
            # alpha-plane variance is already independent of the SNU factor
            self.v_enc = gs.alpha_plane_to_quadrature(v_enc)
        else:
            self.v_enc = v_enc * scale
        self.key_correlation = enc.get("key_correlation", 1.0)
        ch = cfg.get("channel", {})
        if "loss_db" in ch:
            t = 10 ** (-ch["loss_db"] / 20.0)
            tf = tb = t
        else:
            tf, tb = ch.get("t_forward", 1.0), ch.get("t_backward", 1.0)
        self.channel = proto.ChannelModel(tf, tb, ch.get("excess_noise", 0.0) * scale)
        self.program = []
        self.v_gate = 0.0
        self.cubic = None
        for i, item in enumerate(cfg.get("program", [])):
            g = item["gate"]
            prm = item.get("params", [])
            if g == "RandomDisplacement":
                if "variance" not in item:
                    raise ConfigError(f"program/{i}: RandomDisplacement needs 'variance'")
                if i != len(cfg["program"]) - 1:
                    raise ConfigError(f"program/{i}: RandomDisplacement must be the last gate")
                self.v_gate = item["variance"] * scale
                continue
            want = 0 if g in ("F", "Finv") else 1
            if len(prm) != want:
                raise ConfigError(f"program/{i}: {g} takes {want} parameter(s), got {len(prm)}")
            if g == "U3":
                if self.cubic is not None:
                    raise ConfigError(f"program/{i}: only one U3 per session")
                self.cubic = prm[0]
                self.program.append(("U3", prm[0]))
            else:
                self.program.append(GaussianGate(g, tuple(prm)))
        b = cfg.get("backend", {})
        self.backend = backend or b.get("kind", "gaussian")
        self.dim = b.get("dim", fock.DEFAULT_DIM)
        gad = cfg.get("gadget", {})
        self.gadget = gad
        self.seed = cfg["seed"]
        out = cfg.get("outputs", {})
        self.wigner = out.get("wigner", False)
        self.wigner_extent = out.get("wigner_extent", 8.0)
        self.wigner_points = out.get("wigner_points", 161)
        self.formats = out.get("formats", ["csv", "json"])
        if self.cubic is not None and self.backend != "fock":
            raise ConfigError("program contains U3: use backend fock")
        if self.cubic is not None and self.v_gate:
            raise ConfigError("RandomDisplacement cannot be combined with U3")


# -- verify ------------------------------------------------------------------------


SYMBOLIC_ENC = {"CZ": (("Q1", "P1"), ("Q2", "P2"))}


def _table_gate(kind, value):
    if kind == "F":
        return alg.Fourier()
    if kind == "CZ":
        return alg.CZ()
    return alg.Op(kind, (value,))


def run_verify(fuzz=1000, seed=0, inject_fault=False, fock_checks=3, dim=64):
    """Run the identity suite; returns a JSON-ready report."""
    rng = np.random.default_rng(seed)
    rows = []
    for kind in alg.TABLE_I_GATES:
        mutate = inject_fault and kind == "U2"
        sym_gate = _table_gate(kind, "T" if kind in ("U2", "U3") else "S")
        sym = alg.verify_correction(sym_gate, SYMBOLIC_ENC.get(kind, ("Q", "P")), mutate=mutate)
        failures = 0
        first_residual = None
        for _ in range(fuzz):
            x = rng.uniform(-1, 1, 5)
            gate = _table_gate(kind, float(x[0]))
            enc = ((x[1], x[2]), (x[3], x[4])) if kind == "CZ" else (x[1], x[2])
            rep = alg.verify_correction(gate, enc, mutate=mutate)
            if not rep.ok:
                failures += 1
                first_residual = first_residual or rep.residual_str()
        worst = 1.0
        for _ in range(fock_checks):
            x = rng.uniform(-0.3, 0.3, 5)
            gate = _table_gate(kind, float(x[0]))
            a = complex(*rng.uniform(-1, 1, 2))
            a = a / max(1.0, abs(a))
            if kind == "CZ":
                b = complex(*rng.uniform(-1, 1, 2))
                b = b / max(1.0, abs(b))
                kets = [np.outer(fock.coherent_ket(a, dim), fock.coherent_ket(b, dim))]
                enc = ((x[1], x[2]), (x[3], x[4]))
            else:
                kets = [fock.coherent_ket(a, dim)]
                enc = (x[1], x[2])
            worst = min(worst, alg.fock_check_correction(gate, enc, kets, dim, mutate=mutate))
        ok = sym.ok and failures == 0 and worst >= 0.999
        rows.append(
            {
                "identity": f"TableI:{kind}",
                "ok": ok,
                "symbolic": sym.ok,
                "symbolic_residual": sym.residual_str(),
                "fuzz_draws": fuzz,
                "fuzz_failures": failures,
                "fuzz_residual": first_residual or "",
                "fock_min_fidelity": round(worst, 10),
            }
        )
    rows += _slide_checks()
    rows.append(_gadget_smoke(seed))
    return {"ok": all(r["ok"] for r in rows), "rows": rows, "seed": seed, "inject_fault": inject_fault}


def _slide_checks():
    Q, S, T, P = "Q", "S", "T", "P"
    cases = [
        ("slide X through Z", [alg.X(Q)], alg.Op("Z", (S,)), [alg.X(Q)]),
        ("slide X through U2", [alg.X(Q)], alg.U2(T), [alg.X(Q), alg.Z(alg.Poly.var(Q) * alg.Poly.var(T) * -2)]),
        ("slide Z through U3", [alg.Z(P)], alg.U3(T), [alg.Z(P)]),
        ("slide X through U3", [alg.X(Q)], alg.U3(T), None),
    ]
    rows = []
    for name, corr, gate, expect in cases:
        out = alg.slide(corr, gate)
        sound = alg.heisenberg(out + [gate]).equals(alg.heisenberg([gate] + corr))
        matches = expect is None or alg.heisenberg(out).equals(alg.heisenberg(expect))
        rows.append({"identity": name, "ok": bool(sound and matches), "result": alg.word_to_str(out)})
    prog = [alg.Fourier(), alg.U2("T"), alg.CZ()]
    ok, corr, _ = alg.verify_program_correction(prog, [("Q1", "P1"), ("Q2", "P2")])
    rows.append({"identity": "compose [F, U2, CZ]", "ok": bool(ok), "result": alg.word_to_str(corr)})
    return rows


def _gadget_smoke(seed):
    rng = np.random.default_rng(seed)
    psi = fock.fock_coherent(0.5, fock.DEFAULT_DIM)
    run = proto.run_with_gadget(psi, [("U3", 0.05)], proto.GadgetParams(T=0.05, r_anc=3.0), 0.05, rng=rng)
    ok = run.fidelity >= 0.98 and run.transcript.quantum_uses == 3 and run.transcript.count("m1") == 1
    return {"identity": "U3 gadget smoke", "ok": bool(ok), "fidelity": round(run.fidelity, 10)}


def cmd_verify(args):
    report = run_verify(args.fuzz, args.seed, args.inject_fault)
    for r in report["rows"]:
        line = f"{'PASS' if r['ok'] else 'FAIL'}  {r['identity']}"
        if not r["ok"]:
            detail = r.get("symbolic_residual") or r.get("fuzz_residual") or r.get("result") or r.get("fidelity")
            line += f"  residual: {detail}"
        print(line)
    n_table = sum(r["identity"].startswith("TableI") and r["ok"] for r in report["rows"])
    print(f"Table I rows passing: {n_table}/6")
    out = output_dir(args.out)
    _write(out / "verify_report.json", _dumps(report))
    return EXIT_OK if report["ok"] else EXIT_FAIL


# -- run ---------------------------------------------------------------------------


def _moment_row(stage, backend, state, scale_to_snu=2.0):
    cov = state.cov
    return {
        "stage": stage,
        "backend": backend,
        "mean_q": state.mean[0],
        "mean_p": state.mean[1],
        "var_q_snu": cov[0, 0] * scale_to_snu,
        "cov_qp_snu": cov[0, 1] * scale_to_snu,
        "var_p_snu": cov[1, 1] * scale_to_snu,
        "excess_var_q_snu": cov[0, 0] * scale_to_snu - 1.0,
        "excess_var_p_snu": cov[1, 1] * scale_to_snu - 1.0,
        "purity": float(1.0 / (2.0 * math.sqrt(max(np.linalg.det(cov), 1e-300)))),
    }


def _rows_to_csv(rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    keys = list(rows[0])
    w.writerow(keys)
    for r in rows:
        w.writerow([repr(float(r[k])) if isinstance(r[k], (float, np.floating)) else r[k] for k in keys])
    return buf.getvalue()


def _wigner_outputs(out, name, q, W, formats):
    if "csv" in formats:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["q", "p", "W"])
        for i, qi in enumerate(q):
            for j, pj in enumerate(q):
                w.writerow([repr(float(qi)), repr(float(pj)), repr(float(W[i, j]))])
        _write(out / f"wigner_{name}.csv", buf.getvalue())
    if "json" in formats:
        doc = {
            "stage": name,
            "q": {"min": float(q[0]), "max": float(q[-1]), "n": int(q.size)},
            "p": {"min": float(q[0]), "max": float(q[-1]), "n": int(q.size)},
            "layout": "row-major, W[i][j] at (q[i], p[j])",
            "values": [[float(v) for v in row] for row in W],
        }
        _write(out / f"wigner_{name}.json", _dumps(doc))


def run_scenario(sc, out):
    """Execute a scenario and write its artifacts; returns a summary dict."""
    rng = np.random.default_rng(sc.seed)
    summary = {"backend": sc.backend}
    if sc.cubic is not None:
        return _run_cubic(sc, out, rng)
    stages = proto.ensemble_stages(
        sc.base, sc.v_in, sc.v_enc, sc.program, sc.v_gate, sc.channel, sc.key_correlation
    )
    rows = [_moment_row(st.name, "gaussian", st.state) for st in stages]
    session = proto.run_gaussian_program(
        sc.base, sc.program, sc.v_enc, sc.channel, rng, key_correlation=sc.key_correlation
    )
    tr = session.transcript
    if sc.backend == "fock":
        fstate = _fock_session(sc, session.key, rng)
        m = fock.moments(fstate)
        rows.append(_moment_row("decrypted", "fock", m))
        summary["fock_leak"] = fstate.leak
    _write(out / "transcript.json", tr.to_json() + "\n")
    _write(out / "moments.csv", _rows_to_csv(rows))
    snr = metrics.snr_stage_report(stages) if sc.v_in > 0 else []
    _write(out / "snr.json", _dumps(snr))
    if sc.wigner:
        q = np.linspace(-sc.wigner_extent, sc.wigner_extent, sc.wigner_points)
        for st in stages:
            W = gs.wigner_gaussian(st.state, q, q)
            _wigner_outputs(out, st.name.replace("-", "_"), q, W, sc.formats)
            summary[f"wigner_purity_{st.name}"] = _grid_purity(q, W)
    summary["rows"] = rows
    return summary


def _grid_purity(q, W):
    """``Tr rho^2 = 2 pi * integral W^2`` estimated on the grid."""
    dq = q[1] - q[0]
    return float(2 * math.pi * np.sum(W * W) * dq * dq)


def _fock_session(sc, key, rng):
    """Single-shot session on the Fock backend with the same key as the Gaussian run."""
    if sc.channel.excess_noise:
        raise ConfigError("excess noise is not modelled on the Fock backend")
    dim = sc.dim
    s = fock.from_gaussian(sc.base, dim)
    s = fock.add_gaussian_noise(s, sc.v_in)
    k = key.vector
    s = proto._displace_fock(s, k)
    s = fock.apply_loss(s, sc.channel.t_forward)
    for g in sc.program:
        s = proto._apply_gaussian_fock(s, g)
    s = fock.add_gaussian_noise(s, sc.v_gate)
    s = fock.apply_loss(s, sc.channel.t_backward)
    S, _ = gs.program_symplectic(sc.program, 1)
    s = proto._displace_fock(s, -sc.channel.round_trip * (S @ k))
    if s.leak > 1e-3:
        raise fock.TruncationError(f"Fock session leaked {s.leak:.2e}; raise backend.dim")
    return s


def _run_cubic(sc, out, rng):
    T = sc.cubic
    gp = proto.GadgetParams(
        T=T,
        r_anc=sc.gadget.get("r_anc", 3.0),
        v_split=sc.gadget.get("v_split", 1.0),
        v_anc_offset=sc.gadget.get("v_anc_offset", 1e3),
    )
    psi = fock.from_gaussian(sc.base, sc.dim)
    if sc.v_in:
        psi = fock.add_gaussian_noise(psi, sc.v_in)
    run = proto.run_with_gadget(psi, sc.program, gp, sc.v_enc, sc.channel, rng)
    _write(out / "transcript.json", run.transcript.to_json() + "\n")
    rows = [
        _moment_row("input", "fock", fock.moments(psi)),
        _moment_row("decrypted", "fock", fock.moments(run.decrypted)),
        _moment_row("target", "fock", fock.moments(run.target)),
    ]
    _write(out / "moments.csv", _rows_to_csv(rows))
    _write(out / "gadget.json", _dumps({"fidelity": run.fidelity, "m1": run.m1, "B": run.B, "leak": run.leak}))
    if sc.wigner:
        q = np.linspace(-sc.wigner_extent, sc.wigner_extent, sc.wigner_points)
        for name, st in (("input", psi), ("decrypted", run.decrypted), ("target", run.target)):
            _wigner_outputs(out, name, q, fock.wigner_fock(st, q, q), sc.formats)
    return {"backend": "fock", "fidelity": run.fidelity, "rows": rows}


def cmd_run(args):
    try:
        sc = Scenario(load_config(args.config), backend=args.backend)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = output_dir(args.out)
    try:
        summary = run_scenario(sc, out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except fock.TruncationError as exc:
        print(f"truncation error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for r in summary["rows"]:
        print(
            f"{r['stage']:<10} {r['backend']:<8} mean=({r['mean_q']:+.6f}, {r['mean_p']:+.6f}) "
            f"var_snu=({r['var_q_snu']:.6f}, {r['var_p_snu']:.6f}) purity={r['purity']:.4f}"
        )
    print(f"artifacts written to {out}")
    return EXIT_OK


# -- sweep --------------------------------------------------------------------------


def parse_range(text):
    """``start:stop:n`` (inclusive, ``n`` points) or a comma list."""
    try:
        if ":" in text:
            a, b, n = text.split(":")
            n = int(n)
            if n < 1:
                raise ValueError
            return np.linspace(float(a), float(b), n)
        return np.array([float(x) for x in text.split(",")])
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad grid {text!r}; use start:stop:n or a,b,c") from exc


def parse_state(text):
    """``vacuum``, ``squeezed:<r>`` (``ln2`` allowed), ``coherent:<re>,<im>`` or ``thermal:<nbar>``."""

    def num(s):
        s = s.strip()
        if s.startswith("ln"):
            return math.log(float(s[2:]))
        return float(s)

    kind, _, arg = text.partition(":")
    try:
        if kind == "vacuum":
            return gs.vacuum(1)
        if kind == "squeezed":
            return gs.squeezed(num(arg))
        if kind == "coherent":
            parts = [num(x) for x in arg.split(",")]
            return gs.coherent(complex(parts[0], parts[1] if len(parts) > 1 else 0.0))
        if kind == "thermal":
            return gs.thermal(num(arg))
    except (ValueError, IndexError) as exc:
        raise argparse.ArgumentTypeError(f"bad state {text!r}") from exc
    raise argparse.ArgumentTypeError(f"unknown state kind {kind!r}")


def _emit_sweeps(out, name, sweeps):
    csv_text = "".join(s.to_csv() if i == 0 else s.to_csv().split("\n", 1)[1] for i, s in enumerate(sweeps))
    _write(out / f"{name}.csv", csv_text)
    _write(out / f"{name}.json", _dumps([s.to_dict() for s in sweeps]))
    return csv_text


def cmd_sweep(args):
    out = output_dir(args.out)
    if args.kind == "mutual-info":
        if args.v_enc is None or np.any(args.v_enc <= 0):
            print("sweep mutual-info needs --v-enc with positive values", file=sys.stderr)
            return EXIT_CONFIG
        sweeps = [metrics.mutual_info_sweep(args.v_in, args.v_enc)]
    elif args.kind == "fidelity-vs-t":
        grid = args.grid if args.grid is not None else np.linspace(0, 1, 21)
        if np.any((grid < 0) | (grid > 1)):
            print("fidelity-vs-t grid must lie in [0, 1]", file=sys.stderr)
            return EXIT_CONFIG
        sweeps = [
            metrics.avg_fidelity_vs_t(args.delta_sq, grid, args.samples, args.seed, True, args.workers, args.sampler),
            metrics.avg_fidelity_vs_t(args.delta_sq, grid, args.samples, args.seed, False, args.workers, args.sampler),
        ]
    else:
        deltas = args.delta if args.delta is not None else np.array([0.0, 1.0, 2.0, 3.0])
        sweeps = [metrics.purity_sweep(args.state, deltas, args.convention)]
        sweeps[0].metadata["state"] = args.state_text
    try:
        text = _emit_sweeps(out, args.kind, sweeps)
    except ValueError as exc:
        print(f"bad grid: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    sys.stdout.write(text)
    return EXIT_OK


# -- estimate ------------------------------------------------------------------------


def cmd_estimate(args):
    if args.probes < 10:
        print("--probes must be at least 10", file=sys.stderr)
        return EXIT_CONFIG
    if not 0 <= args.t <= 1:
        print("--t must lie in [0, 1]", file=sys.stderr)
        return EXIT_CONFIG
    rngs = metrics.point_rngs(args.seed, 2)
    t_hat, se = proto.estimate_channel(args.probes, args.t, args.probe_variance, rngs[0])
    report = {"t_true": args.t, "t_hat": t_hat, "stderr": se, "probes": args.probes, "seed": args.seed}
    print(f"t_hat = {t_hat:.4f} +/- {se:.4f}  (true t = {args.t})")
    if args.compare:
        table = []
        grid = np.round(np.linspace(0.5, 1.0, 6), 10)
        cmp_rngs = metrics.point_rngs(args.seed + 1, grid.size)
        print(f"{'t':>6} {'t_hat':>8} {'F_estimated':>12} {'F_naive':>10}")
        for t, r in zip(grid, cmp_rngs):
            th, _ = proto.estimate_channel(args.probes, t, args.probe_variance, r)
            th = min(th, 1.0)  # a passive channel cannot amplify
            f_est = 1.0 / (1.0 + 2 * args.delta_sq * ((t * t - 1) ** 2 + (t - 1) ** 2 + (t * t - th * th) ** 2))
            f_naive = metrics.avg_fidelity_closed_form(args.delta_sq, t, with_estimation=False)
            table.append({"t": float(t), "t_hat": th, "fidelity_estimated": f_est, "fidelity_naive": f_naive})
            print(f"{t:6.3f} {th:8.4f} {f_est:12.6f} {f_naive:10.6f}")
        report["compare"] = {"delta_sq": args.delta_sq, "rows": table}
    out = output_dir(args.out)
    _write(out / "estimate.json", _dumps(report))
    return EXIT_OK


# -- entry point ---------------------------------------------------------------------


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help=f"output directory (default ${OUTPUT_ENV} or ./cvqce_out)")
    p = argparse.ArgumentParser(prog="cvqce", description="Simulate computing on displacement-encrypted CV states.")
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", parents=[common], help="check Table I corrections, sliding rules and the U3 gadget")
    v.add_argument("--fuzz", type=int, default=1000, help="random parameter draws per identity")
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--inject-fault", action="store_true", help="corrupt the U2 correction (mutation test)")
    v.set_defaults(func=cmd_verify)

    r = sub.add_parser("run", parents=[common], help="run a scenario config")
    r.add_argument("config", help="scenario file (bundled names such as displacement_gate.cfg also work)")
    r.add_argument("--backend", choices=["gaussian", "fock"], help="override the config backend")
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("sweep", parents=[common], help="emit a metric-vs-parameter table")
    s.add_argument("kind", choices=["mutual-info", "fidelity-vs-t", "purity"])
    s.add_argument("--v-in", type=float, default=0.6, help="alphabet variance (SNU)")
    s.add_argument("--v-enc", type=parse_range, help="encryption variances (SNU), start:stop:n")
    s.add_argument("--delta-sq", type=float, default=1.0, help="per-component amplitude variance")
    s.add_argument("--grid", type=parse_range, help="transmission grid start:stop:n")
    s.add_argument("--samples", type=int, default=100000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--sampler", choices=metrics.SAMPLERS, default="halton", help="fidelity-vs-t sampling scheme")
    s.add_argument("--state", dest="state_text", default="squeezed:ln2")
    s.add_argument("--convention", choices=metrics.CONVENTIONS, default="per-quadrature")
    s.add_argument("--delta", type=parse_range, help="comma list of delta values")
    s.set_defaults(func=cmd_sweep)

    e = sub.add_parser("estimate", parents=[common], help="estimate the channel transmission from probe states")
    e.add_argument("--t", type=float, default=1.0, help="true amplitude transmission")
    e.add_argument("--probes", type=int, default=1000)
    e.add_argument("--probe-variance", type=float, default=25.0)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--compare", action="store_true", help="tabulate fidelity with and without estimation")
    e.add_argument("--delta-sq", type=float, default=1.0)
    e.set_defaults(func=cmd_estimate)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "state_text", None) is not None and args.command == "sweep":
        try:
            args.state = parse_state(args.state_text)
        except argparse.ArgumentTypeError as exc:
            parser.error(str(exc))
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
