"""
Exact Gaussian phase-space engine.

States are stored as a mean vector and covariance matrix in the ordering
``(q1, p1, q2, p2, ...)`` with ``[q, p] = i``, so the vacuum covariance is
``I / 2``.  Shot-noise units (vacuum variance 1) are only used at the CLI
boundary through :func:`to_snu` / :func:`from_snu`.
"""

from dataclasses import dataclass, field
import math

import numpy as np

#: Vacuum quadrature variance in internal units.
VACUUM_VARIANCE = 0.5
#: Multiply an internal variance by this to get shot-noise units.
SNU_FACTOR = 2.0

SYMMETRY_TOL = 1e-12
PHYSICALITY_TOL = 1e-10

GATE_KINDS = ("X", "Z", "U2", "F", "Finv", "CZ", "Squeeze", "Rotate")


class InvalidStateError(ValueError):
    """Raised when moments do not describe a physical Gaussian state."""


def to_snu(variance):
    return np.asarray(variance) * SNU_FACTOR


def from_snu(variance):
    return np.asarray(variance) / SNU_FACTOR


def omega(n_modes):
    """Symplectic form for ``n_modes`` modes in ``(q1, p1, ...)`` ordering."""
    return np.kron(np.eye(n_modes), np.array([[0.0, 1.0], [-1.0, 0.0]]))


@dataclass(frozen=True)
class GaussianState:
    """First and second moments of an n-mode Gaussian state.

    Parameters
    ----------
    mean : array_like, shape (2n,)
        Quadrature means ordered ``(q1, p1, ..., qn, pn)``.
    cov : array_like, shape (2n, 2n)
        Symmetrised covariance ``<{dx_i, dx_j}>/2``.
    """

    mean: np.ndarray
    cov: np.ndarray
    validate: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        mean = np.array(self.mean, dtype=float).reshape(-1)
        cov = np.array(self.cov, dtype=float)
        if mean.size % 2 or mean.size == 0:
            raise InvalidStateError("mean must have even, nonzero length (q1, p1, ...)")
        if cov.shape != (mean.size, mean.size):
            raise InvalidStateError(f"cov shape {cov.shape} does not match mean length {mean.size}")
        mean.setflags(write=False)
        cov.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)
        if self.validate:
            check_physical(cov)

    @property
    def n_modes(self):
        return self.mean.size // 2

    def mode(self, k):
        """Reduced single-mode state of mode ``k``."""
        _check_mode(k, self.n_modes)
        sl = slice(2 * k, 2 * k + 2)
        return GaussianState(self.mean[sl], self.cov[sl, sl])

    def is_close(self, other, atol=1e-10):
        return (
            self.n_modes == other.n_modes
            and np.allclose(self.mean, other.mean, rtol=0, atol=atol)
            and np.allclose(self.cov, other.cov, rtol=0, atol=atol)
        )


def check_physical(cov):
    scale = max(1.0, float(np.max(np.abs(cov))))
    if np.max(np.abs(cov - cov.T)) > SYMMETRY_TOL * scale:
        raise InvalidStateError("covariance matrix is not symmetric")
    n = cov.shape[0] // 2
    eig = np.linalg.eigvalsh(cov + 0.5j * omega(n))
    if eig.min() < -PHYSICALITY_TOL * scale:
        raise InvalidStateError(
            f"covariance violates the uncertainty principle (min eigenvalue {eig.min():.3e})"
        )


def _check_mode(k, n_modes):
    if not (0 <= k < n_modes):
        raise IndexError(f"mode {k} out of range for {n_modes}-mode state")


# -- state constructors ------------------------------------------------------


def vacuum(n_modes=1):
    if n_modes < 1:
        raise ValueError("n_modes must be >= 1")
    return GaussianState(np.zeros(2 * n_modes), VACUUM_VARIANCE * np.eye(2 * n_modes))


def coherent(alpha):
    """Coherent state with ``a = (q + ip)/sqrt(2)``, i.e. mean ``sqrt(2)(Re a, Im a)``."""
    alpha = complex(alpha)
    return GaussianState(
        math.sqrt(2) * np.array([alpha.real, alpha.imag]), VACUUM_VARIANCE * np.eye(2)
    )


def thermal(nbar):
    if nbar < 0:
        raise ValueError("nbar must be non-negative")
    return GaussianState(np.zeros(2), (nbar + 0.5) * np.eye(2))


def squeezed(r, phi=0.0):
    """Squeezed vacuum ``R(phi) S(r)|0>``; ``r > 0`` squeezes q."""
    state = apply_gate(vacuum(1), GaussianGate("Squeeze", (r,)))
    if phi:
        state = apply_gate(state, GaussianGate("Rotate", (phi,)))
    return state


def two_mode_squeezed(r):
    """Two-mode squeezed vacuum (EPR-like): q1 ~ q2, p1 ~ -p2 correlations."""
    c, s = math.cosh(2 * r), math.sinh(2 * r)
    z = np.diag([1.0, -1.0])
    cov = 0.5 * np.block([[c * np.eye(2), s * z], [s * z, c * np.eye(2)]])
    return GaussianState(np.zeros(4), cov)


def product(*states):
    """Tensor product of Gaussian states."""
    mean = np.concatenate([s.mean for s in states])
    n = mean.size
    cov = np.zeros((n, n))
    i = 0
    for s in states:
        k = s.mean.size
        cov[i : i + k, i : i + k] = s.cov
        i += k
    return GaussianState(mean, cov)


# -- gates -------------------------------------------------------------------


@dataclass(frozen=True)
class GaussianGate:
    """A Gaussian unitary acting on ``modes``.

    ``kind`` is one of ``X(Q), Z(P), U2(T), F, Finv, CZ(g=1), Squeeze(r),
    Rotate(theta)``.  ``CZ`` acts on two modes, everything else on one.
    """

    kind: str
    params: tuple = ()
    modes: tuple = (0,)

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise ValueError(f"unknown Gaussian gate {self.kind!r}")
        object.__setattr__(self, "params", tuple(float(x) for x in self.params))
        modes = (self.modes,) if isinstance(self.modes, (int, np.integer)) else tuple(self.modes)
        want = 2 if self.kind == "CZ" else 1
        if self.kind == "CZ" and len(modes) == 1:
            modes = (0, 1)
        if len(modes) != want or len(set(modes)) != want:
            raise ValueError(f"{self.kind} acts on {want} distinct mode(s), got {modes}")
        object.__setattr__(self, "modes", tuple(int(m) for m in modes))

    def local_action(self):
        """Symplectic matrix and displacement on the gate's own modes."""
        k, prm = self.kind, self.params
        if k == "X":
            return np.eye(2), np.array([prm[0], 0.0])
        if k == "Z":
            return np.eye(2), np.array([0.0, prm[0]])
        if k == "U2":
            return np.array([[1.0, 0.0], [2.0 * prm[0], 1.0]]), np.zeros(2)
        if k == "F":
            return np.array([[0.0, -1.0], [1.0, 0.0]]), np.zeros(2)
        if k == "Finv":
            return np.array([[0.0, 1.0], [-1.0, 0.0]]), np.zeros(2)
        if k == "Squeeze":
            r = prm[0]
            return np.diag([math.exp(-r), math.exp(r)]), np.zeros(2)
        if k == "Rotate":
            c, s = math.cos(prm[0]), math.sin(prm[0])
            return np.array([[c, -s], [s, c]]), np.zeros(2)
        # CZ = exp(i g q1 q2): p1 -> p1 + g q2, p2 -> p2 + g q1
        g = prm[0] if prm else 1.0
        S = np.eye(4)
        S[1, 2] = g
        S[3, 0] = g
        return S, np.zeros(4)

    def symplectic(self, n_modes):
        """Affine action ``x -> S x + d`` embedded in ``n_modes`` modes."""
        for m in self.modes:
            _check_mode(m, n_modes)
        S_loc, d_loc = self.local_action()
        idx = np.array([2 * m + j for m in self.modes for j in (0, 1)])
        S = np.eye(2 * n_modes)
        d = np.zeros(2 * n_modes)
        S[np.ix_(idx, idx)] = S_loc
        d[idx] = d_loc
        return S, d

    def inverse(self):
        k, prm = self.kind, self.params
        if k == "F":
            return GaussianGate("Finv", (), self.modes)
        if k == "Finv":
            return GaussianGate("F", (), self.modes)
        if k == "CZ":
            return GaussianGate("CZ", (-(prm[0] if prm else 1.0),), self.modes)
        return GaussianGate(k, (-prm[0],), self.modes)


def is_symplectic(S, tol=SYMMETRY_TOL):
    n = S.shape[0] // 2
    W = omega(n)
    return np.max(np.abs(S @ W @ S.T - W)) <= tol


def apply_symplectic(state, S, d=None):
    mean = S @ state.mean + (0 if d is None else d)
    return GaussianState(mean, S @ state.cov @ S.T)


def apply_gate(state, gate):
    S, d = gate.symplectic(state.n_modes)
    return apply_symplectic(state, S, d)


def apply_program(state, program):
    for gate in program:
        state = apply_gate(state, gate)
    return state


def program_symplectic(program, n_modes):
    """Net affine action ``(S, d)`` of a gate sequence (first gate applied first)."""
    S = np.eye(2 * n_modes)
    d = np.zeros(2 * n_modes)
    for gate in program:
        Sg, dg = gate.symplectic(n_modes)
        S, d = Sg @ S, Sg @ d + dg
    return S, d


def displace(state, vector):
    """Translate the mean by ``vector`` (length 2n); the covariance is untouched."""
    return GaussianState(state.mean + np.asarray(vector, dtype=float), state.cov)


# -- channels ----------------------------------------------------------------


def _modes_arg(modes, n_modes):
    if modes is None:
        return range(n_modes)
    if isinstance(modes, (int, np.integer)):
        modes = (modes,)
    for m in modes:
        _check_mode(m, n_modes)
    return modes


def apply_loss(state, t, mode=None, excess_noise=0.0):
    """Pure-loss beamsplitter of amplitude transmission ``t`` on ``mode`` (all if None).

    The spare port carries vacuum; ``excess_noise`` is an optional extra
    per-quadrature variance added after the beamsplitter (default 0).
    """
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"transmission amplitude must lie in [0, 1], got {t}")
    if excess_noise < 0:
        raise ValueError("excess_noise must be non-negative")
    n = state.n_modes
    scale = np.ones(2 * n)
    noise = np.zeros(2 * n)
    for m in _modes_arg(mode, n):
        scale[2 * m : 2 * m + 2] = t
        noise[2 * m : 2 * m + 2] = (1 - t * t) * VACUUM_VARIANCE + excess_noise
    cov = state.cov * np.outer(scale, scale) + np.diag(noise)
    return GaussianState(state.mean * scale, cov)


def encrypt_ensemble(state, v_enc_quadrature, mode=None):
    """Average over Gaussian random displacements with per-quadrature variance ``v_enc_quadrature``."""
    if v_enc_quadrature < 0:
        raise ValueError("encryption variance must be non-negative")
    noise = np.zeros(2 * state.n_modes)
    for m in _modes_arg(mode, state.n_modes):
        noise[2 * m : 2 * m + 2] = v_enc_quadrature
    return GaussianState(state.mean, state.cov + np.diag(noise))


def add_noise(state, cov_noise):
    """Classical additive Gaussian noise with covariance ``cov_noise``."""
    return GaussianState(state.mean, state.cov + np.asarray(cov_noise, dtype=float))


def alpha_plane_to_quadrature(delta_sq_alpha):
    """Variance ``D^2`` of Re/Im(alpha) -> per-quadrature variance ``2 D^2`` of (q, p)."""
    return 2.0 * delta_sq_alpha


# -- figures of merit --------------------------------------------------------


def purity(state):
    """``Tr rho^2 = 1 / (2^n sqrt(det cov))``."""
    det = np.linalg.det(state.cov)
    if det <= 0:
        raise InvalidStateError("singular covariance matrix")
    return float(1.0 / (2**state.n_modes * math.sqrt(det)))


def gaussian_fidelity(s1, s2, squared=False):
    """Uhlmann fidelity ``Tr sqrt(sqrt(rho1) rho2 sqrt(rho1))`` of two single-mode states.

    Set ``squared=True`` for the squared convention (``|<a|b>|^2`` on pure states).
    """
    if s1.n_modes != s2.n_modes:
        raise ValueError("mode count mismatch")
    if s1.n_modes != 1:
        raise ValueError("only single-mode Gaussian fidelity is supported")
    sigma = s1.cov + s2.cov
    delta = s1.mean - s2.mean
    big = np.linalg.det(sigma)
    small = 4.0 * (np.linalg.det(s1.cov) - 0.25) * (np.linalg.det(s2.cov) - 0.25)
    small = max(small, 0.0)
    f2 = math.exp(-0.5 * delta @ np.linalg.solve(sigma, delta)) / (
        math.sqrt(big + small) - math.sqrt(small)
    )
    f2 = min(f2, 1.0)
    return f2 if squared else math.sqrt(f2)


def wigner_gaussian(state, q, p):
    """Wigner function on the grid ``q x p``; returns shape ``(len(q), len(p))``.

    Normalised so that the integral over the plane is one (vacuum peak ``1/pi``).
    """
    if state.n_modes != 1:
        raise ValueError("wigner_gaussian needs a single-mode state")
    det = np.linalg.det(state.cov)
    if det <= 0:
        raise InvalidStateError("singular covariance matrix")
    inv = np.linalg.inv(state.cov)
    Q, P = np.meshgrid(np.asarray(q, float) - state.mean[0], np.asarray(p, float) - state.mean[1], indexing="ij")
    quad = inv[0, 0] * Q * Q + 2 * inv[0, 1] * Q * P + inv[1, 1] * P * P
    return np.exp(-0.5 * quad) / (2 * math.pi * math.sqrt(det))


def quadrature_snr(signal_cov, noise_cov):
    """Per-quadrature ratio of signal variance to noise variance."""
    return np.diag(signal_cov) / np.diag(noise_cov)
