"""
Client/server simulation of computing on displacement-encrypted states.

The client encrypts with a random displacement ``D(Q, P)``, sends the mode
through a lossy channel, the server runs a publicly known program, the mode
comes back through a second lossy channel and the client removes the key
with a correction displacement.  Gaussian programs run on the exact moment
engine; the non-Gaussian cubic phase gate runs on the Fock backend through
the interactive teleportation gadget.
"""

from dataclasses import dataclass, field
import hashlib
import json
import math

import numpy as np

from . import fock
from . import gaussian as gs
from .gaussian import GaussianGate, GaussianState

#: Fields a server-bound or server-produced message may carry.
SERVER_VISIBLE_FIELDS = frozenset(
    {"step", "direction", "channel", "payload", "backend", "digest", "gates", "B", "m1", "n_modes"}
)


class ProtocolError(RuntimeError):
    pass


@dataclass(frozen=True)
class ChannelModel:
    """Amplitude transmissions of the two channel passes and optional excess noise."""

    t_forward: float = 1.0
    t_backward: float = 1.0
    excess_noise: float = 0.0

    def __post_init__(self):
        for name in ("t_forward", "t_backward"):
            t = getattr(self, name)
            if not 0.0 <= t <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {t}")
        if self.excess_noise < 0:
            raise ValueError("excess_noise must be non-negative")

    @classmethod
    def symmetric(cls, t, excess_noise=0.0):
        return cls(t, t, excess_noise)

    @property
    def round_trip(self):
        return self.t_forward * self.t_backward


@dataclass(frozen=True)
class EncryptionKey:
    """Per-mode displacement key (internal units)."""

    Q: tuple
    P: tuple
    v_enc: float

    @property
    def vector(self):
        out = np.empty(2 * len(self.Q))
        out[0::2] = self.Q
        out[1::2] = self.P
        return out


def draw_key(n_modes, v_enc, rng):
    """Independent zero-mean Gaussian key components with per-quadrature variance ``v_enc``."""
    if v_enc < 0:
        raise ValueError("v_enc must be non-negative")
    x = rng.normal(0.0, math.sqrt(v_enc), size=(n_modes, 2)) if v_enc > 0 else np.zeros((n_modes, 2))
    return EncryptionKey(tuple(float(v) for v in x[:, 0]), tuple(float(v) for v in x[:, 1]), float(v_enc))


# -- transcript -----------------------------------------------------------------


def state_digest(state):
    """Short content hash of a backend state (mean/cov or density matrix)."""
    h = hashlib.sha256()
    if isinstance(state, GaussianState):
        h.update(np.round(state.mean, 12).tobytes())
        h.update(np.round(state.cov, 12).tobytes())
    else:
        h.update(np.round(state.matrix, 12).tobytes())
    return h.hexdigest()[:16]


@dataclass
class SessionTranscript:
    """Ordered message log.  Steps are logical counters, not wall-clock times."""

    messages: list = field(default_factory=list)

    def quantum(self, direction, payload, state, **extra):
        msg = {
            "step": len(self.messages),
            "direction": direction,
            "channel": "quantum",
            "payload": payload,
            "backend": "gaussian" if isinstance(state, GaussianState) else "fock",
            "digest": state_digest(state),
        }
        msg.update(extra)
        self._add(msg)

    def classical(self, direction, payload, **values):
        msg = {"step": len(self.messages), "direction": direction, "channel": "classical", "payload": payload}
        msg.update(values)
        self._add(msg)

    def _add(self, msg):
        bad = set(msg) - SERVER_VISIBLE_FIELDS
        if bad:
            raise ProtocolError(f"message carries non-public fields {sorted(bad)}")
        self.messages.append(msg)

    @property
    def quantum_uses(self):
        return sum(m["channel"] == "quantum" for m in self.messages)

    def count(self, key):
        return sum(key in m for m in self.messages)

    def to_json(self):
        return json.dumps({"messages": self.messages}, indent=2, sort_keys=True)


def _gate_names(program):
    return [f"{g.kind}({', '.join(f'{p:.12g}' for p in g.params)})@{list(g.modes)}" for g in program]


def _check_gaussian_program(program):
    for g in program:
        if not isinstance(g, GaussianGate):
            raise ProtocolError(f"{g!r} is not a Gaussian gate; use run_with_gadget for U3")


def _lossy(state, t, excess):
    return gs.apply_loss(state, t, excess_noise=excess if t < 1 or excess else 0.0)


# -- Gaussian programs ----------------------------------------------------------


@dataclass
class GaussianRun:
    decrypted: GaussianState
    transcript: SessionTranscript
    server_view: dict
    key: EncryptionKey
    correction: np.ndarray
    plaintext: GaussianState


def plaintext_run(state, program, channel=ChannelModel()):
    """Same program and channel without any encryption."""
    s = _lossy(state, channel.t_forward, channel.excess_noise)
    s = gs.apply_program(s, program)
    return _lossy(s, channel.t_backward, channel.excess_noise)


def run_gaussian_program(state, program, v_enc, channel=ChannelModel(), rng=None, key=None, key_correlation=1.0):
    """Encrypt, send, run ``program`` on the server, return, decrypt.

    The correction is ``-t_f t_b S k`` for key ``k`` and program symplectic
    ``S``: the key is propagated through the program and scaled by both
    channel passes.  ``key_correlation < 1`` models imperfect key removal
    by adding ``2 (1 - rho) v_enc`` of residual noise per quadrature (before
    propagation), averaged over the mismatch.

    Returns a :class:`GaussianRun`.
    """
    _check_gaussian_program(program)
    if not 0.0 <= key_correlation <= 1.0:
        raise ValueError("key_correlation must lie in [0, 1]")
    n = state.n_modes
    if key is None:
        if rng is None:
            raise ValueError("need an rng to draw the key")
        key = draw_key(n, v_enc, rng)
    tr = SessionTranscript()
    encrypted = gs.displace(state, key.vector)
    at_server = _lossy(encrypted, channel.t_forward, channel.excess_noise)
    tr.quantum("client->server", "encrypted_state", at_server, n_modes=n)
    tr.classical("client->server", "program", gates=_gate_names(program))
    out = gs.apply_program(at_server, program)
    returned = _lossy(out, channel.t_backward, channel.excess_noise)
    tr.quantum("server->client", "result_state", returned, n_modes=n)
    S, _ = gs.program_symplectic(program, n)
    tf, tb = channel.t_forward, channel.t_backward
    correction = -tf * tb * (S @ key.vector)
    decrypted = gs.displace(returned, correction)
    if key_correlation < 1:
        v_res = 2.0 * (1.0 - key_correlation) * v_enc
        decrypted = gs.add_noise(decrypted, (tf * tb) ** 2 * S @ (v_res * np.eye(2 * n)) @ S.T)
    ensemble = _lossy(gs.encrypt_ensemble(state, v_enc), tf, channel.excess_noise)
    server_view = {
        "mean": ensemble.mean.tolist(),
        "cov": ensemble.cov.tolist(),
        "purity": gs.purity(ensemble),
    }
    return GaussianRun(decrypted, tr, server_view, key, correction, plaintext_run(state, program, channel))


@dataclass
class SqueezeReport:
    gains: tuple
    key: EncryptionKey
    residual_mean_error: float
    plaintext: GaussianState


def run_squeeze_gate(state, r, v_enc, channel=ChannelModel(), rng=None, key=None):
    """Encrypted squeezing ``S(r)`` with quadrature-dependent decryption gains.

    The stored key is rescaled by ``(g1, g2) = (t_f t_b e^{-r}, t_f t_b e^{r})``
    before being subtracted.
    """
    if state.n_modes != 1:
        raise ValueError("run_squeeze_gate takes a single-mode state")
    run = run_gaussian_program(state, [GaussianGate("Squeeze", (r,))], v_enc, channel, rng, key)
    g = channel.round_trip
    gains = (g * math.exp(-r), g * math.exp(r))
    expected = -np.array(gains) * run.key.vector
    if not np.allclose(run.correction, expected, rtol=0, atol=1e-12 * max(1.0, np.abs(expected).max())):
        raise ProtocolError("squeeze gains disagree with the propagated correction")
    err = float(np.max(np.abs(run.decrypted.mean - run.plaintext.mean)))
    return run.decrypted, SqueezeReport(gains, run.key, err, run.plaintext)


def u2_squeeze_equivalence(T):
    """Euler angles with ``R(theta) S(r) R(phi)`` equal to the ``U2(T)`` symplectic.

    Matrices compose right to left (``R(phi)`` acts first); ``r >= 0``.
    """
    M = np.array([[1.0, 0.0], [2.0 * T, 1.0]])
    U, sv, Vt = np.linalg.svd(M)
    if np.linalg.det(U) < 0:
        D = np.diag([1.0, -1.0])
        U, Vt = U @ D, D @ Vt
    J = np.array([[0.0, -1.0], [1.0, 0.0]])
    left, right = U @ J, J.T @ Vt
    r = math.log(sv[0])
    theta = math.atan2(left[1, 0], left[0, 0])
    phi = math.atan2(right[1, 0], right[0, 0])
    return theta, r, phi


def u2_via_squeeze(state, T, v_enc, channel=ChannelModel(), rng=None, key=None):
    """Run ``U2(T)`` as a server-side squeeze with client-side phase-reference changes.

    The client rotates the input by ``phi`` before encrypting and the
    decrypted output by ``theta``; the server only ever squeezes.
    """
    theta, r, phi = u2_squeeze_equivalence(T)
    rotated = gs.apply_gate(state, GaussianGate("Rotate", (phi,)))
    decrypted, report = run_squeeze_gate(rotated, r, v_enc, channel, rng, key)
    return gs.apply_gate(decrypted, GaussianGate("Rotate", (theta,))), report


# -- ensemble view --------------------------------------------------------------


@dataclass
class Stage:
    name: str
    state: GaussianState
    signal_cov: np.ndarray

    @property
    def noise_cov(self):
        return self.state.cov - self.signal_cov


def ensemble_stages(base, v_in, v_enc, program=(), v_gate=0.0, channel=ChannelModel(), key_correlation=1.0):
    """Ensemble-averaged moments after each protocol stage.

    The input alphabet is a Gaussian displacement ensemble of per-quadrature
    variance ``v_in`` on ``base``; the server's gate may add its own random
    displacement of variance ``v_gate`` (counted as signal).  Stages are
    input, encrypted (client side), post-gate (server side) and decrypted.
    Single-mode only.
    """
    if base.n_modes != 1:
        raise ValueError("ensemble_stages is single-mode")
    program = list(program)
    _check_gaussian_program(program)
    I = np.eye(2)
    tf, tb, ex = channel.t_forward, channel.t_backward, channel.excess_noise
    S, d = gs.program_symplectic(program, 1)
    sig_in = v_in * I
    s_in = gs.add_noise(base, sig_in)
    s_enc = gs.encrypt_ensemble(s_in, v_enc)
    s_gate = gs.apply_symplectic(_lossy(s_enc, tf, ex), S, d)
    s_gate = gs.add_noise(s_gate, v_gate * I)
    sig_gate = tf**2 * S @ sig_in @ S.T + v_gate * I
    # key removed: same chain without the key variance
    plain = gs.add_noise(gs.apply_symplectic(_lossy(s_in, tf, ex), S, d), v_gate * I)
    s_dec = _lossy(plain, tb, ex)
    if key_correlation < 1:
        v_res = 2.0 * (1.0 - key_correlation) * v_enc
        s_dec = gs.add_noise(s_dec, (tf * tb) ** 2 * S @ (v_res * I) @ S.T)
    sig_dec = tb**2 * sig_gate
    return [
        Stage("input", s_in, sig_in),
        Stage("encrypted", s_enc, sig_in),
        Stage("post-gate", s_gate, sig_gate),
        Stage("decrypted", s_dec, sig_dec),
    ]


# -- cubic phase gadget -----------------------------------------------------------


@dataclass(frozen=True)
class GadgetParams:
    """Parameters of the interactive cubic phase gate.

    ``A`` is the client's share of the key-dependent shear and ``Q_anc`` the
    random momentum offset of the ancilla.  When ``A`` or ``Q_anc`` are None
    they are drawn with variances ``v_split`` and ``v_anc_offset``.
    """

    T: float
    r_anc: float = 3.0
    A: float = None
    Q_anc: float = None
    v_split: float = 1.0
    v_anc_offset: float = 1e3


@dataclass
class GadgetRun:
    decrypted: fock.FockDensity
    transcript: SessionTranscript
    target: fock.FockDensity
    fidelity: float
    m1: float
    A: float
    B: float
    key: EncryptionKey
    correction: tuple
    leak: float


def _fock_gate(kind, params, dim):
    return fock.build_gate(kind, params, dim, check_budget=False)


def _apply_gaussian_fock(state, gate):
    return fock.apply(_fock_gate(gate.kind, gate.params, state.dim), state)


def _displace_fock(state, vec):
    if vec[0]:
        state = fock.apply(_fock_gate("X", (vec[0],), state.dim), state)
    if vec[1]:
        state = fock.apply(_fock_gate("Z", (vec[1],), state.dim), state)
    return state


def run_with_gadget(state, program, gadget, v_enc, channel=ChannelModel(), rng=None, key=None, max_leak=1e-3):
    """Encrypted single-mode program with exactly one cubic phase gate.

    ``program`` is a list of single-mode :class:`GaussianGate` objects and one
    ``("U3", T)`` marker tuple (its ``T`` must equal ``gadget.T``).  The
    client sends the encrypted mode, the ancilla ``U2(A) Z(Q') S(-r_anc)|0>``
    and ``B = -3 Q_u T - A``, where ``Q_u`` is the q-part of the key at the
    cubic gate.  The server applies ``F^dag U3(T)``, ``CZ``, measures ``p``
    of the data mode (``m1``), applies ``X(-m1)`` and ``U2(B)`` to the ancilla
    and returns it with ``m1``.  The client removes the key, now including
    ``Z(Q' + 2 m1 A)``, with a single displacement.

    The ancilla's momentum kick is carried as an exact classical frame
    (see :func:`fock.cz_teleport`) so that large ``Q'`` never enters the
    truncated space.
    """
    if state.n_modes != 1:
        raise ValueError("run_with_gadget is single-mode")
    u3_idx = [i for i, g in enumerate(program) if not isinstance(g, GaussianGate)]
    if len(u3_idx) != 1:
        raise ProtocolError("program must contain exactly one U3 (chain sessions for more)")
    k = u3_idx[0]
    kind, T = program[k]
    if kind != "U3" or T != gadget.T:
        raise ProtocolError("cubic gate marker must be ('U3', gadget.T)")
    if rng is None:
        raise ValueError("run_with_gadget needs an rng")
    dim = state.dim
    tf, tb = channel.t_forward, channel.t_backward
    if channel.excess_noise:
        raise ProtocolError("excess noise is only modelled on the Gaussian backend")
    if key is None:
        key = draw_key(1, v_enc, rng)
    A = gadget.A if gadget.A is not None else float(rng.normal(0.0, math.sqrt(gadget.v_split)))
    Q_anc = gadget.Q_anc if gadget.Q_anc is not None else float(rng.normal(0.0, math.sqrt(gadget.v_anc_offset)))

    def guard(s, where):
        if s.leak > max_leak:
            raise fock.TruncationError(f"leak {s.leak:.2e} after {where} exceeds {max_leak:g}; lower the key variance or raise dim")
        return s

    tr = SessionTranscript()
    e_sim = np.array([key.Q[0], key.P[0]])  # translation physically present in the simulated state
    e_frame = np.zeros(2)  # translation carried analytically
    s = guard(_displace_fock(state, e_sim), "encryption")
    s = fock.apply_loss(s, tf)
    e_sim = tf * e_sim
    tr.quantum("client->server", "encrypted_mode", s)

    for g in program[:k]:
        s = guard(_apply_gaussian_fock(s, g), g.kind)
        S, _ = g.symplectic(1)
        e_sim, e_frame = S @ e_sim, S @ e_frame
    if e_frame.any():
        raise ProtocolError("internal: frame must be empty before the cubic gate")

    Q_u = e_sim[0]
    B = -3.0 * Q_u * T - A
    anc = gs.squeezed(-gadget.r_anc)
    anc = gs.apply_gate(anc, GaussianGate("Z", (Q_anc,)))
    anc = gs.apply_gate(anc, GaussianGate("U2", (A,)))
    anc = gs.apply_loss(anc, tf)
    tr.quantum("client->server", "ancilla", anc)
    tr.classical("client->server", "shear_share", B=B)

    s = guard(fock.apply(_fock_gate("U3", (T,), dim), s), "U3")
    s = fock.apply(_fock_gate("Finv", (), dim), s)
    m1, s, c = fock.cz_teleport(s, anc, rng, shear=B)
    s = guard(s, "teleportation")
    e_sim = np.array([e_sim[0], e_sim[1] - 3.0 * T * e_sim[0] ** 2])
    e_frame = np.array([0.0, c])

    for g in program[k + 1 :]:
        s = guard(_apply_gaussian_fock(s, g), g.kind)
        S, _ = g.symplectic(1)
        e_sim, e_frame = S @ e_sim, S @ e_frame
    s = fock.apply_loss(s, tb)
    e_sim, e_frame = tb * e_sim, tb * e_frame
    tr.quantum("server->client", "result_mode", s)
    tr.classical("server->client", "homodyne_outcome", m1=m1)

    decrypted = guard(_displace_fock(s, -e_sim), "decryption")
    target = fock.apply_loss(state, tf)
    for g in program:
        if isinstance(g, GaussianGate):
            target = _apply_gaussian_fock(target, g)
        else:
            target = fock.apply(_fock_gate("U3", (T,), dim), target)
    target = fock.apply_loss(target, tb)
    fid = fock.fock_fidelity(decrypted.normalized(), target.normalized())
    correction = tuple(-(e_sim + e_frame))
    return GadgetRun(decrypted, tr, target, fid, m1, A, B, key, correction, max(decrypted.leak, target.leak))


# -- channel estimation -----------------------------------------------------------


def estimate_channel(n_probes, true_channel, probe_variance=25.0, rng=None, return_data=False):
    """Least-squares estimate of a symmetric channel's amplitude transmission.

    Probe ``i`` is ``coherent(alpha_i)``; the server displaces it by a known
    ``beta_i``, so the returned mean is ``sqrt2 (t^2 alpha_i + t beta_i)``.
    Shots alternate between q and p homodyne measurements (vacuum-noise
    variance 1/2).  ``alpha_i, beta_i`` have per-component variance
    ``probe_variance``.  Returns ``(t_hat, std_err)``.
    """
    if n_probes < 10:
        raise ValueError("need at least 10 probes")
    if rng is None:
        raise ValueError("estimate_channel needs an rng")
    ch = true_channel if isinstance(true_channel, ChannelModel) else ChannelModel.symmetric(float(true_channel))
    sd = math.sqrt(probe_variance)
    alpha = rng.normal(0, sd, n_probes) + 1j * rng.normal(0, sd, n_probes)
    beta = rng.normal(0, sd, n_probes) + 1j * rng.normal(0, sd, n_probes)
    if not (np.any(alpha) or np.any(beta)):
        raise ValueError("degenerate probe set (all probes zero)")
    use_q = np.arange(n_probes) % 2 == 0
    a = math.sqrt(2) * np.where(use_q, alpha.real, alpha.imag)
    b = math.sqrt(2) * np.where(use_q, beta.real, beta.imag)
    tf, tb = ch.t_forward, ch.t_backward
    noise_var = gs.VACUUM_VARIANCE + ch.excess_noise * (tb**2 + 1)
    y = tf * tb * a + tb * b + rng.normal(0.0, math.sqrt(noise_var), n_probes)
    if not (np.any(a) or np.any(b)):
        raise ValueError("degenerate design (all probe projections zero)")
    # d/dt sum (y - t^2 a - t b)^2 = 0 is a cubic in t
    coeffs = [2 * np.sum(a * a), 3 * np.sum(a * b), np.sum(b * b) - 2 * np.sum(y * a), -np.sum(y * b)]
    roots = np.roots(coeffs)
    real = roots[np.abs(roots.imag) < 1e-9].real
    rss = lambda t: float(np.sum((y - t * t * a - t * b) ** 2))
    t_hat = float(min(real, key=rss))
    jac = 2 * t_hat * a + b
    sigma2 = rss(t_hat) / (n_probes - 1)
    se = math.sqrt(sigma2 / float(np.sum(jac * jac)))
    if return_data:
        return t_hat, se, {"alpha": alpha, "beta": beta, "y": y}
    return t_hat, se


# -- entanglement-based view ----------------------------------------------------------


def epr_encryption_ensemble(r_epr, n_samples, rng):
    """Heterodyne one half of a two-mode squeezed vacuum and describe the other half.

    Returns a dict with the conditional covariance and purity of the
    remaining mode, the ensemble covariance of its conditional means
    (analytic ``sinh^2 r`` and empirical), and the excess noise left when
    the client uses the heterodyne outcome directly as the key (unit gain,
    analytic ``e^{-2r}`` and empirical).  Units are internal.
    """
    if r_epr < 0:
        raise ValueError("r_epr must be non-negative")
    tms = gs.two_mode_squeezed(r_epr)
    V = tms.cov
    VA, VB, VAB = V[:2, :2], V[2:, 2:], V[:2, 2:]
    het = VA + gs.VACUUM_VARIANCE * np.eye(2)
    gain = VAB.T @ np.linalg.inv(het)
    cond_cov = VB - gain @ VAB
    outcomes = rng.multivariate_normal(np.zeros(2), het, size=n_samples)
    cond_means = outcomes @ gain.T
    flip = np.diag([1.0, -1.0])
    key_unit = outcomes @ flip
    mismatch = cond_means - key_unit
    emp_cov = np.cov(cond_means.T)
    return {
        "conditional_cov": cond_cov,
        "conditional_purity": gs.purity(GaussianState(np.zeros(2), cond_cov)),
        "displacement_var_analytic": math.sinh(r_epr) ** 2,
        "displacement_cov_empirical": emp_cov,
        "excess_noise_analytic": math.exp(-2 * r_epr),
        "excess_noise_empirical": float(np.mean(mismatch**2)),
        "v_enc_equivalent": math.sinh(r_epr) ** 2,
    }


# -- gadget leakage ---------------------------------------------------------------


def gadget_split_fisher(T, v_in, n_samples=None, rng=None, Q=0.7, h=1e-4, method="score"):
    """Fisher information that the revealed share ``B = -3QT - A`` carries about ``Q``.

    ``A ~ N(0, v_in)`` so the exact value is ``9 T^2 / v_in``.  With
    ``n_samples`` and ``rng`` a Monte-Carlo estimate is returned instead,
    from finite differences of the log-likelihood at the true ``Q``:
    ``method="score"`` averages the squared score, ``method="curvature"``
    averages minus the second difference.
    """
    if v_in <= 0:
        raise ValueError("v_in must be positive (zero variance reveals Q exactly)")
    if n_samples is None:
        return 9.0 * T * T / v_in
    if rng is None:
        raise ValueError("numeric Fisher estimate needs an rng")
    B = -3.0 * Q * T - rng.normal(0.0, math.sqrt(v_in), n_samples)

    def loglik(q):
        return -0.5 * (B + 3.0 * q * T) ** 2 / v_in - 0.5 * math.log(2 * math.pi * v_in)

    if method == "score":
        score = (loglik(Q + h) - loglik(Q - h)) / (2 * h)
        return float(np.mean(score**2))
    if method == "curvature":
        return float(-np.mean((loglik(Q + h) - 2 * loglik(Q) + loglik(Q - h)) / h**2))
    raise ValueError(f"unknown method {method!r}")
