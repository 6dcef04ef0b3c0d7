"""
Truncated number-basis backend.

This is the oracle the Gaussian engine and the correction algebra are
checked against, and the only place the non-Gaussian cubic phase gate can be
simulated.  Operators are built from Hermitian generators on a padded space
of dimension ``dim + pad`` and then cut down to ``dim``; whatever probability
leaves the kept levels is reported as ``leak``.
"""

from dataclasses import dataclass, field
import math
import warnings

import numpy as np
from scipy.special import gammaln

from .gaussian import GaussianState, VACUUM_VARIANCE

LEAK_WARN = 1e-4
DEFAULT_DIM = 64
HOMODYNE_GRID = (-10.0, 10.0, 2001)

SINGLE_MODE_GATES = ("X", "Z", "U2", "U3", "F", "Finv", "D", "Squeeze", "Rotate")


BULK_TOL = 1e-6


class TruncationError(RuntimeError):
    """The truncated Fock space cannot hold the requested state or operation."""


class TruncationWarning(UserWarning):
    pass


def truncation_budget(dim):
    """Largest parameters expected to keep leak small at truncation ``dim``.

    Calibrated at ``dim = 64`` (``|alpha| <= 2, |r| <= 1.2, |T| <= 0.3``) and
    scaled with the number of levels.
    """
    s = dim / 64.0
    return {
        "alpha": 2.0 * math.sqrt(s),
        "r": 1.2 + 0.5 * math.log(s),
        "T": 0.3 / s**1.5,
    }


@dataclass(frozen=True)
class FockDensity:
    """Density matrix on ``n_modes`` modes, each truncated to ``dim`` levels.

    Two-mode matrices use the ``kron(mode0, mode1)`` ordering.
    """

    matrix: np.ndarray
    dim: int
    n_modes: int = 1

    def __post_init__(self):
        mat = np.array(self.matrix, dtype=complex)
        size = self.dim**self.n_modes
        if mat.shape != (size, size):
            raise ValueError(f"matrix shape {mat.shape} does not match dim={self.dim}, n_modes={self.n_modes}")
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)

    @property
    def trace(self):
        return float(np.trace(self.matrix).real)

    @property
    def leak(self):
        return max(0.0, 1.0 - self.trace)

    def normalized(self):
        return FockDensity(self.matrix / self.trace, self.dim, self.n_modes)

    def reduced(self, keep):
        """Partial trace of a two-mode state, keeping mode ``keep``."""
        if self.n_modes == 1:
            return self
        N = self.dim
        r = self.matrix.reshape(N, N, N, N)
        mat = np.einsum("ikjk->ij", r) if keep == 0 else np.einsum("kikj->ij", r)
        return FockDensity(mat, N, 1)


@dataclass(frozen=True)
class OperatorMatrix:
    """A gate as a (truncated) matrix.

    ``bulk_levels`` counts the lowest number states that the exact operator
    keeps inside the truncation (column leak at most ``BULK_TOL``); on that
    subspace ``U^dag U`` differs from the identity by at most ``BULK_TOL``.
    """

    matrix: np.ndarray
    label: str
    dim: int
    n_modes: int = 1
    bulk_levels: int = field(default=0, compare=False)

    @property
    def H(self):
        return OperatorMatrix(self.matrix.conj().T, self.label + "^dag", self.dim, self.n_modes, self.bulk_levels)

    def __matmul__(self, other):
        if (self.dim, self.n_modes) != (other.dim, other.n_modes):
            raise ValueError("operator dimension mismatch")
        return OperatorMatrix(
            self.matrix @ other.matrix,
            f"{self.label}*{other.label}",
            self.dim,
            self.n_modes,
            min(self.bulk_levels, other.bulk_levels),
        )


# -- ladder operators and quadratures ---------------------------------------


def annihilation(dim):
    return np.diag(np.sqrt(np.arange(1, dim, dtype=float)), 1).astype(complex)


def quadratures(dim):
    """Truncated ``q = (a + a^dag)/sqrt 2`` and ``p = (a - a^dag)/(i sqrt 2)``."""
    a = annihilation(dim)
    ad = a.conj().T
    return (a + ad) / math.sqrt(2), (a - ad) / (1j * math.sqrt(2))


def hermite_functions(n, x):
    """Oscillator eigenfunctions ``psi_0..psi_{n-1}`` at ``x``; shape ``(len(x), n)``."""
    x = np.asarray(x, dtype=float)
    out = np.empty(x.shape + (n,))
    out[..., 0] = math.pi**-0.25 * np.exp(-0.5 * x * x)
    if n > 1:
        out[..., 1] = math.sqrt(2.0) * x * out[..., 0]
    for k in range(1, n - 1):
        out[..., k + 1] = math.sqrt(2.0 / (k + 1)) * x * out[..., k] - math.sqrt(k / (k + 1)) * out[..., k - 1]
    return out


def momentum_functions(n, p):
    """``<p|k>`` for ``k < n``: ``(-i)^k psi_k(p)``."""
    return hermite_functions(n, p) * (-1j) ** np.arange(n)


# -- states ------------------------------------------------------------------


def from_ket(ket, dim, n_modes=1):
    ket = np.asarray(ket, dtype=complex)
    return FockDensity(np.outer(ket, ket.conj()), dim, n_modes)


def fock_vacuum(dim=DEFAULT_DIM):
    ket = np.zeros(dim, complex)
    ket[0] = 1.0
    return from_ket(ket, dim)


def fock_number(n, dim=DEFAULT_DIM):
    ket = np.zeros(dim, complex)
    ket[n] = 1.0
    return from_ket(ket, dim)


def coherent_ket(alpha, dim=DEFAULT_DIM):
    """Exact coherent-state amplitudes ``<n|alpha>`` for ``n < dim``."""
    alpha = complex(alpha)
    n = np.arange(dim)
    if alpha == 0:
        return (n == 0).astype(complex)
    logmag = -0.5 * abs(alpha) ** 2 + n * math.log(abs(alpha)) - 0.5 * gammaln(n + 1)
    return np.exp(logmag) * np.exp(1j * n * np.angle(alpha))


def fock_coherent(alpha, dim=DEFAULT_DIM):
    """Coherent state cut at ``dim`` (missing norm shows up as leak)."""
    return from_ket(coherent_ket(alpha, dim), dim)


def fock_thermal(nbar, dim=DEFAULT_DIM):
    n = np.arange(dim)
    if nbar == 0:
        probs = (n == 0).astype(float)
    else:
        probs = (nbar / (1 + nbar)) ** n / (1 + nbar)
    return FockDensity(np.diag(probs), dim)


def fock_squeezed_vacuum(r, dim=DEFAULT_DIM):
    """``S(r)|0>`` with ``S(r) = exp(r(a^2 - a^dag^2)/2)``; ``r > 0`` squeezes q."""
    ket = np.zeros(dim, complex)
    k = np.arange((dim + 1) // 2)
    c = 1.0 / math.sqrt(math.cosh(r))
    th = -math.tanh(r)
    logamp = 0.5 * gammaln(2 * k + 1) - k * math.log(2) - gammaln(k + 1)
    if th == 0:
        ket[0] = 1.0
    else:
        ket[2 * k] = c * np.sign(th) ** k * np.exp(logamp + k * math.log(abs(th)))
    return from_ket(ket, dim)


def momentum_eigenstate_approx(r_anc, dim=DEFAULT_DIM, max_leak=1e-3):
    """Finitely squeezed ``|0>_p``: p-variance ``exp(-2 r_anc)/2``."""
    if r_anc < 0:
        raise ValueError("r_anc must be non-negative")
    state = fock_squeezed_vacuum(-r_anc, dim)
    if state.leak > max_leak:
        raise TruncationError(
            f"r_anc={r_anc} needs more than {dim} levels (leak {state.leak:.2e} > {max_leak:g})"
        )
    return state


def from_gaussian(state, dim=DEFAULT_DIM):
    """Fock representation of a single-mode Gaussian state.

    Built as ``D(mean) R(theta) S(r) rho_thermal`` from the Williamson form of
    the covariance, using this module's gate matrices.
    """
    if state.n_modes != 1:
        raise ValueError("from_gaussian handles single-mode states only")
    V = state.cov
    nu = math.sqrt(np.linalg.det(V))
    lam, vec = np.linalg.eigh(V)
    if np.linalg.det(vec) < 0:
        vec[:, 1] *= -1
    r = 0.25 * math.log(lam[1] / lam[0])
    theta = math.atan2(vec[1, 0], vec[0, 0])
    rho = fock_thermal(max(nu - VACUUM_VARIANCE, 0.0), dim)
    for kind, prm in (("Squeeze", (r,)), ("Rotate", (theta,)), ("X", (state.mean[0],)), ("Z", (state.mean[1],))):
        if prm[0] != 0:
            rho = apply(build_gate(kind, prm, dim, check_budget=False), rho)
    return rho


# -- gates -------------------------------------------------------------------


def _exp_hermitian(H, scale):
    """``exp(-i scale H)`` for Hermitian ``H`` via eigendecomposition."""
    w, V = np.linalg.eigh(H)
    return (V * np.exp(-1j * scale * w)) @ V.conj().T


def _q_function(M, f):
    """``f(q)`` on an M-level space through the eigenbasis of truncated q."""
    q, _ = quadratures(M)
    w, V = np.linalg.eigh(q)
    return (V * f(w)) @ V.conj().T


def _single_mode_full(kind, params, M):
    a = annihilation(M)
    ad = a.conj().T
    n = np.arange(M)
    if kind == "X":
        _, p = quadratures(M)
        return _exp_hermitian(p, params[0])
    if kind == "Z":
        return _q_function(M, lambda x: np.exp(1j * params[0] * x))
    if kind == "U2":
        return _q_function(M, lambda x: np.exp(1j * params[0] * x**2))
    if kind == "U3":
        return _q_function(M, lambda x: np.exp(1j * params[0] * x**3))
    if kind == "F":
        # exp(i pi/4 (q^2 + p^2)) = exp(i pi/4) exp(i pi/2 n)
        return np.diag(np.exp(1j * math.pi / 4) * (1j) ** n)
    if kind == "Finv":
        return np.diag(np.exp(-1j * math.pi / 4) * (-1j) ** n)
    if kind == "Rotate":
        return np.diag(np.exp(1j * params[0] * n))
    if kind == "D":
        alpha = complex(params[0])
        K = alpha * ad - alpha.conjugate() * a
        return _exp_hermitian(1j * K, 1.0)
    if kind == "Squeeze":
        K = 0.5 * params[0] * (a @ a - ad @ ad)
        return _exp_hermitian(1j * K, 1.0)
    raise ValueError(f"unknown gate kind {kind!r}")


def _budget_check(kind, params, dim):
    budget = truncation_budget(dim)
    over = None
    if kind == "D" and abs(complex(params[0])) > budget["alpha"]:
        over = f"|alpha|={abs(complex(params[0])):.3g} > {budget['alpha']:.3g}"
    elif kind in ("X", "Z") and abs(params[0]) / math.sqrt(2) > budget["alpha"]:
        over = f"|shift|/sqrt2={abs(params[0]) / math.sqrt(2):.3g} > {budget['alpha']:.3g}"
    elif kind == "Squeeze" and abs(params[0]) > budget["r"]:
        over = f"|r|={abs(params[0]):.3g} > {budget['r']:.3g}"
    elif kind == "U3" and abs(params[0]) > budget["T"]:
        over = f"|T|={abs(params[0]):.3g} > {budget['T']:.3g}"
    if over:
        warnings.warn(f"{kind}{tuple(params)} outside truncation budget for dim={dim}: {over}", TruncationWarning, stacklevel=3)


def build_gate(kind, params=(), dim=DEFAULT_DIM, pad=None, check_budget=True):
    """Matrix of a gate on ``dim`` levels (per mode).

    Single-mode kinds: ``X(Q)=exp(-iQp)``, ``Z(P)=exp(iPq)``,
    ``U2(T)=exp(iTq^2)``, ``U3(T)=exp(iTq^3)``, ``F=exp(i pi/4 (q^2+p^2))``,
    ``Finv``, ``D(alpha)``, ``Squeeze(r)``, ``Rotate(theta)=exp(i theta n)``.
    Two-mode: ``CZ(g)=exp(i g q1 q2)`` (``g`` defaults to 1).
    """
    if dim < 4:
        raise ValueError("truncation dim must be at least 4")
    params = tuple(params)
    if pad is None:
        pad = dim if kind != "CZ" else 16
    if check_budget:
        _budget_check(kind, params, dim)
    label = f"{kind}({', '.join(f'{complex(x):.6g}' if isinstance(x, complex) else f'{x:.6g}' for x in params)})"
    M = dim + pad
    if kind == "CZ":
        g = params[0] if params else 1.0
        q, _ = quadratures(M)
        w, V = np.linalg.eigh(q)
        Vt = V[:dim, :]
        phase = np.exp(1j * g * np.outer(w, w)).reshape(-1)
        left = np.kron(Vt, Vt)
        U = (left * phase) @ left.conj().T
        return OperatorMatrix(U, label, dim, 2, 0)
    if kind not in SINGLE_MODE_GATES:
        raise ValueError(f"unknown gate kind {kind!r}")
    full = _single_mode_full(kind, params, M)
    col_leak = np.sum(np.abs(full[dim:, :dim]) ** 2, axis=0)
    bad = np.nonzero(col_leak > BULK_TOL)[0]
    bulk = int(bad[0]) if bad.size else dim
    return OperatorMatrix(full[:dim, :dim], label, dim, 1, bulk)


def embed(op, mode, n_modes=2):
    """Lift a single-mode operator to act on ``mode`` of an ``n_modes`` system."""
    if op.n_modes != 1 or n_modes != 2:
        raise ValueError("only single-mode -> two-mode embedding is supported")
    eye = np.eye(op.dim)
    mat = np.kron(op.matrix, eye) if mode == 0 else np.kron(eye, op.matrix)
    return OperatorMatrix(mat, f"{op.label}[{mode}]", op.dim, 2, op.bulk_levels)


def apply(op, state):
    """``rho -> U rho U^dag``; probability pushed out of the truncation becomes leak."""
    if (op.dim, op.n_modes) != (state.dim, state.n_modes):
        raise ValueError(
            f"operator on dim={op.dim}, modes={op.n_modes} applied to state with dim={state.dim}, modes={state.n_modes}"
        )
    U = op.matrix
    return FockDensity(U @ state.matrix @ U.conj().T, state.dim, state.n_modes)


def apply_loss(state, t):
    """Pure-loss channel of amplitude transmission ``t`` (single mode)."""
    if not 0.0 <= t <= 1.0:
        raise ValueError("transmission amplitude must lie in [0, 1]")
    if state.n_modes != 1:
        raise ValueError("Fock loss is implemented for single-mode states")
    if t == 1.0:
        return state
    N = state.dim
    n = np.arange(N)
    out = np.zeros((N, N), complex)
    rho = state.matrix
    log_t = math.log(t) if t > 0 else -np.inf
    log_r = 0.5 * math.log1p(-t * t) if t < 1 else -np.inf
    for k in range(N):
        m = n[k:]
        with np.errstate(divide="ignore", invalid="ignore"):
            logc = 0.5 * (gammaln(m + 1) - gammaln(k + 1) - gammaln(m - k + 1))
            logamp = logc + np.where(m - k > 0, (m - k) * log_t, 0.0) + (k * log_r if k else 0.0)
        amp = np.exp(logamp)
        E = np.zeros((N, N))
        E[m - k, m] = amp
        out += E @ rho @ E.T
    return FockDensity(out, N, 1)


def add_gaussian_noise(state, variance, nodes=8):
    """Average over random displacements with per-quadrature variance ``variance``.

    Gauss-Hermite quadrature over the displacement plane reproduces first and
    second moments exactly.
    """
    if variance == 0:
        return state
    x, w = np.polynomial.hermite.hermgauss(nodes)
    shifts = math.sqrt(2 * variance) * x
    weights = w / math.sqrt(math.pi)
    out = np.zeros_like(state.matrix)
    for sq, wq in zip(shifts, weights):
        for sp, wp in zip(shifts, weights):
            D = build_gate("D", (complex(sq, sp) / math.sqrt(2),), state.dim, check_budget=False)
            out += wq * wp * apply(D, state).matrix
    return FockDensity(out, state.dim, state.n_modes)


# -- measurement -------------------------------------------------------------


def _grid(spec):
    lo, hi, n = spec
    return np.linspace(lo, hi, int(n))


def _sample_from_density(x, dens, rng):
    dx = x[1] - x[0]
    cdf = np.concatenate([[0.0], np.cumsum(0.5 * (dens[1:] + dens[:-1]) * dx)])
    cdf /= cdf[-1]
    return float(np.interp(rng.random(), cdf, x))


def p_marginal(state, grid=HOMODYNE_GRID, mode=0):
    """Momentum-quadrature probability density of ``mode`` on ``grid``."""
    x = _grid(grid)
    rho = state.reduced(mode).matrix
    phi = momentum_functions(state.dim, x)
    dens = np.einsum("gi,ij,gj->g", phi, rho, phi.conj()).real
    return x, np.clip(dens, 0.0, None)


def homodyne_p(state, mode=0, rng=None, grid=HOMODYNE_GRID, outcome=None, min_mass=0.999):
    """Single-shot homodyne measurement of ``p`` on ``mode``.

    Returns ``(m, conditional)`` where ``conditional`` is the normalised state
    of the other mode for two-mode inputs and ``None`` for a single mode.
    Pass ``outcome`` to condition on a fixed value instead of sampling.
    """
    x, dens = p_marginal(state, grid, mode)
    mass = np.trapezoid(dens, x)
    if mass < min_mass * state.trace:
        raise TruncationError(f"homodyne grid holds only {mass:.4f} of the p marginal; widen it")
    if outcome is None:
        if rng is None:
            raise ValueError("homodyne_p needs an rng or a fixed outcome")
        m = _sample_from_density(x, dens, rng)
    else:
        m = float(outcome)
    if state.n_modes == 1:
        return m, None
    N = state.dim
    bra = momentum_functions(N, np.array([m]))[0]  # <m|k>
    r = state.matrix.reshape(N, N, N, N)
    if mode == 0:
        cond = np.einsum("i,ikjl,j->kl", bra, r, bra.conj())
    else:
        cond = np.einsum("k,ikjl,l->ij", bra, r, bra.conj())
    cond = cond / np.trace(cond).real
    return m, FockDensity(cond, N, 1)


def sample_homodyne_p(state, n_shots, rng, grid=HOMODYNE_GRID):
    """Many independent p-quadrature outcomes of a single-mode state."""
    x, dens = p_marginal(state, grid)
    dx = x[1] - x[0]
    cdf = np.concatenate([[0.0], np.cumsum(0.5 * (dens[1:] + dens[:-1]) * dx)])
    cdf /= cdf[-1]
    return np.interp(rng.random(n_shots), cdf, x)


def ancilla_kernel_params(ancilla):
    """Position-representation parameters of a single-mode Gaussian state.

    ``<u|rho|u'> = N(X; mu_q, V_qq) exp(i y (mu_p + kappa (X - mu_q))) exp(-s2 y^2 / 2)``
    with ``X = (u+u')/2`` and ``y = u - u'``.
    """
    V = ancilla.cov
    mu_q, mu_p = ancilla.mean
    kappa = V[0, 1] / V[0, 0]
    s2 = V[1, 1] - V[0, 1] ** 2 / V[0, 0]
    return mu_q, mu_p, V[0, 0], kappa, s2


def cz_teleport(state, ancilla, rng=None, shear=0.0, outcome=None, dx=0.05, n_m=4001):
    """Teleport ``state`` through ``CZ`` onto a Gaussian ancilla and measure ``p`` of the input.

    The circuit is: ``CZ = exp(i q1 q2)`` between ``state`` (mode 1) and
    ``ancilla`` (mode 2), homodyne ``p1 -> m``, then ``X(-m)`` and
    ``U2(shear)`` on mode 2.  With an ideal ``|0>_p`` ancilla the output is
    ``F|state>``.

    The ancilla is handled exactly in the position representation, so it can
    be far more squeezed (or displaced) than the Fock cutoff allows.  The
    output is returned in the frame of the ancilla's conditional momentum
    kick ``c = mu_p + kappa (m - mu_q)``: the physical output is
    ``Z(c) rho Z(c)^dag``.

    Returns ``(m, rho, c)``.
    """
    if state.n_modes != 1 or ancilla.n_modes != 1:
        raise ValueError("cz_teleport takes single-mode input and ancilla")
    N = state.dim
    L = math.sqrt(2 * N) + 8.0
    x = np.arange(-L, L + dx / 2, dx)
    # <k=-x|n>_p = i^n psi_n(x)
    phi = hermite_functions(N, x) * (1j) ** np.arange(N)
    sigma = phi @ state.matrix @ phi.conj().T
    mu_q, mu_p, vqq, kappa, s2 = ancilla_kernel_params(ancilla)

    def anc_marginal(u):
        return np.exp(-0.5 * (u - mu_q) ** 2 / vqq) / math.sqrt(2 * math.pi * vqq)

    diag = np.clip(np.diag(sigma).real, 0.0, None)
    if outcome is None:
        if rng is None:
            raise ValueError("cz_teleport needs an rng or a fixed outcome")
        centre = mu_q - np.sum(x * diag) / np.sum(diag)
        half = L + 8.0 * math.sqrt(vqq)
        mgrid = np.linspace(centre - half, centre + half, n_m)
        dens = anc_marginal(x[None, :] + mgrid[:, None]) @ diag * dx
        m = _sample_from_density(mgrid, dens, rng)
    else:
        m = float(outcome)
    c = mu_p + kappa * (m - mu_q)
    X = 0.5 * (x[:, None] + x[None, :]) + m
    y = x[:, None] - x[None, :]
    sq = x * x
    kernel = (
        np.exp(-0.5 * (X - mu_q) ** 2 / vqq - 0.5 * s2 * y * y)
        * np.exp(1j * (0.5 * kappa + shear) * (sq[:, None] - sq[None, :]))
    )
    R = kernel * sigma
    grid_trace = float(np.sum(np.diag(R).real) * dx)
    if grid_trace <= 0:
        raise TruncationError("teleportation outcome has vanishing probability on the grid")
    psi = hermite_functions(N, x)
    out = (psi.T @ R @ psi) * dx * dx / grid_trace
    return m, FockDensity(0.5 * (out + out.conj().T), N, 1), c


# -- figures of merit --------------------------------------------------------


def _psd_sqrt(rho):
    w, V = np.linalg.eigh(0.5 * (rho + rho.conj().T))
    return (V * np.sqrt(np.clip(w, 0.0, None))) @ V.conj().T, w


def fock_fidelity(rho0, rho1, tol=1e-8):
    """Uhlmann fidelity ``Tr sqrt(sqrt(rho0) rho1 sqrt(rho0))`` (not squared)."""
    if (rho0.dim, rho0.n_modes) != (rho1.dim, rho1.n_modes):
        raise ValueError("fidelity needs states of equal dimension")
    for a, b in ((rho0, rho1), (rho1, rho0)):
        w, V = np.linalg.eigh(0.5 * (a.matrix + a.matrix.conj().T))
        if w[-1] > 1.0 - tol and w[-1] > 0.5:
            # pure argument: F = sqrt(<psi|rho|psi>), avoids a matrix square root
            psi = V[:, -1]
            return float(math.sqrt(max(0.0, np.vdot(psi, b.matrix @ psi).real * w[-1])))
    s0, w0 = _psd_sqrt(rho0.matrix)
    w1 = np.linalg.eigvalsh(0.5 * (rho1.matrix + rho1.matrix.conj().T))
    if min(w0.min(), w1.min()) < -tol:
        raise ValueError("density matrix is not positive semidefinite")
    M = s0 @ rho1.matrix @ s0
    ev = np.linalg.eigvalsh(0.5 * (M + M.conj().T))
    return float(np.sum(np.sqrt(np.clip(ev, 0.0, None))))


def fock_purity(state):
    return float(np.real(np.trace(state.matrix @ state.matrix)))


def mean_photon_number(state):
    return float(np.real(np.trace(state.matrix @ np.diag(np.arange(state.dim)))))


def moments(state):
    """Mean and covariance of a single-mode state as a :class:`GaussianState` (no physicality check)."""
    if state.n_modes != 1:
        raise ValueError("moments handles single-mode states")
    N = state.dim
    q, p = quadratures(N + 2)
    rho = np.zeros((N + 2, N + 2), complex)
    rho[:N, :N] = state.matrix / state.trace
    ops = (q, p)
    mean = np.array([np.trace(rho @ o).real for o in ops])
    cov = np.empty((2, 2))
    for i in range(2):
        for j in range(2):
            sym = 0.5 * (ops[i] @ ops[j] + ops[j] @ ops[i])
            cov[i, j] = np.trace(rho @ sym).real - mean[i] * mean[j]
    return GaussianState(mean, cov, validate=False)


def wigner_fock(state, q, p, max_escape=1e-3):
    """Wigner function of a single-mode state on ``q x p``; shape ``(len(q), len(p))``.

    Uses the Laguerre recurrence over density-matrix elements.  On grids
    with spacing at most 0.25 a :class:`TruncationError` is raised if more
    than ``max_escape`` of the state's weight falls outside the grid.
    """
    if state.n_modes != 1:
        raise ValueError("wigner_fock needs a single-mode state")
    q = np.asarray(q, float)
    p = np.asarray(p, float)
    Q, P = np.meshgrid(q, p, indexing="ij")
    A = (Q + 1j * P) / math.sqrt(2)
    rho = state.matrix
    M = state.dim
    w_list = [np.exp(-2.0 * np.abs(A) ** 2) / math.pi]
    W = rho[0, 0].real * w_list[0].real
    for n in range(1, M):
        w_list.append(2.0 * A * w_list[n - 1] / math.sqrt(n))
        W = W + 2.0 * np.real(rho[0, n] * w_list[n])
    for m in range(1, M):
        temp = w_list[m].copy()
        w_list[m] = (2.0 * np.conj(A) * temp - math.sqrt(m) * w_list[m - 1]) / math.sqrt(m)
        W = W + np.real(rho[m, m] * w_list[m])
        for n in range(m + 1, M):
            temp2 = (2.0 * A * w_list[n - 1] - math.sqrt(m) * temp) / math.sqrt(n)
            temp = w_list[n].copy()
            w_list[n] = temp2
            W = W + 2.0 * np.real(rho[m, n] * w_list[n])
    W = np.real(W)
    # the escape check needs a grid fine enough for the sum to be a quadrature
    if q.size > 1 and p.size > 1 and max(q[1] - q[0], p[1] - p[0]) <= 0.25:
        mass = np.sum(W) * (q[1] - q[0]) * (p[1] - p[0])
        if abs(state.trace - mass) > max_escape:
            raise TruncationError(f"Wigner grid captures {mass:.5f} of trace {state.trace:.5f}")
    return W


def cz_on_ket(ket, g, dim, pad=32):
    """Apply ``exp(i g q0 q1)`` to a two-mode ket given as a ``dim x dim`` array.

    Works in the eigenbasis of the padded position operator, so no
    ``dim^2 x dim^2`` matrix is formed.
    """
    q, _ = quadratures(dim + pad)
    w, V = np.linalg.eigh(q)
    Vt = V[:dim, :]
    d = Vt.conj().T @ np.asarray(ket, dtype=complex) @ Vt.conj()
    d = d * np.exp(1j * g * np.outer(w, w))
    return Vt @ d @ Vt.T
