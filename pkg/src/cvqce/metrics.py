"""
Figures of merit and parameter sweeps.

Mutual information is computed in nats internally (:func:`nats_to_bits`
converts).  Variances passed to the mutual-information helpers are in
shot-noise units, where the vacuum contributes 1.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
import csv
import io
import json
import math
import warnings

import numpy as np
from scipy.special import ndtri
from scipy.stats import qmc

from . import gaussian as gs

LN2 = math.log(2.0)


def nats_to_bits(x):
    return x / LN2


def mutual_info_analytic(v_in, v_enc):
    """``I = 1/2 ln(1 + v_in / v_enc)`` in nats."""
    if v_in < 0:
        raise ValueError("v_in must be non-negative")
    if v_enc <= 0:
        raise ValueError("v_enc must be positive")
    return 0.5 * math.log1p(v_in / v_enc)


def mutual_info_gaussian_channel(v_in, v_enc, vacuum=1.0):
    """Information (bits) a homodyne measurement of the encrypted state gives about the alphabet.

    ``1/2 log2(1 + v_in / (v_enc + vacuum))`` with SNU variances.
    """
    return 0.5 * math.log2(1.0 + v_in / (v_enc + vacuum))


def mutual_info_estimate(alphabet, measured):
    """Covariance estimator ``1/2 log2(V_in / (V_in - C^2 / V))`` in bits.

    ``alphabet`` holds the recorded input values and ``measured`` the
    server-side quadrature samples.  A non-positive argument (possible from
    sampling noise) returns 0 with a warning.
    """
    x = np.asarray(alphabet, float)
    y = np.asarray(measured, float)
    if x.shape != y.shape or x.size < 1000:
        raise ValueError("need at least 1000 paired samples")
    c = np.cov(x, y)
    v_in, v, cxy = c[0, 0], c[1, 1], c[0, 1]
    denom = v_in - cxy * cxy / v
    if denom <= 0 or v_in <= 0:
        warnings.warn("mutual information estimate clamped to 0", RuntimeWarning, stacklevel=2)
        return 0.0
    return max(0.0, 0.5 * math.log2(v_in / denom))


def simulate_encrypted_homodyne(v_in, v_enc, n, rng, vacuum=1.0):
    """Alphabet values and one-quadrature homodyne outcomes of the encrypted state (SNU)."""
    x = rng.normal(0.0, math.sqrt(v_in), n)
    y = x + rng.normal(0.0, math.sqrt(v_enc), n) + rng.normal(0.0, math.sqrt(vacuum), n)
    return x, y


# -- sweeps -------------------------------------------------------------------


@dataclass
class SweepResult:
    """A metric evaluated over a strictly increasing parameter grid."""

    param: str
    grid: np.ndarray
    metric: str
    values: np.ndarray
    stderr: np.ndarray = None
    metadata: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        self.grid = np.asarray(self.grid, float)
        self.values = np.asarray(self.values, float)
        self.stderr = np.zeros_like(self.values) if self.stderr is None else np.asarray(self.stderr, float)
        if self.grid.ndim != 1 or self.grid.shape != self.values.shape or self.stderr.shape != self.values.shape:
            raise ValueError("grid, values and stderr must be 1-D arrays of equal length")
        if self.grid.size > 1 and np.any(np.diff(self.grid) <= 0):
            raise ValueError("sweep grid must be strictly increasing")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("sweep produced non-finite values")
        self.extra = {k: np.asarray(v, float) for k, v in self.extra.items()}

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["param", "metric", "value", "stderr"])
        for g, v, e in zip(self.grid, self.values, self.stderr):
            w.writerow([repr(float(g)), self.metric, repr(float(v)), repr(float(e))])
        return buf.getvalue()

    def to_dict(self):
        return {
            "param": self.param,
            "grid": self.grid.tolist(),
            "metric": self.metric,
            "values": self.values.tolist(),
            "stderr": self.stderr.tolist(),
            "metadata": self.metadata,
            "extra": {k: v.tolist() for k, v in self.extra.items()},
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text):
        d = json.loads(text)
        return cls(d["param"], d["grid"], d["metric"], d["values"], d["stderr"], d["metadata"], d["extra"])


def point_rngs(seed, n):
    """Independent per-grid-point generators split from a master seed with ``SeedSequence.spawn``."""
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(n)]


def parallel_map(fn, items, workers=None):
    """Ordered map over a thread pool (results keep input order)."""
    items = list(items)
    if not workers or workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def mutual_info_sweep(v_in, v_enc_grid):
    vals = [mutual_info_analytic(v_in, v) for v in v_enc_grid]
    return SweepResult(
        "v_enc",
        v_enc_grid,
        "mutual_info_nats",
        vals,
        metadata={"v_in": v_in, "units": "SNU", "convention": "I = 1/2 ln(1 + v_in/v_enc)"},
        extra={"mutual_info_bits": [nats_to_bits(v) for v in vals]},
    )


# -- loss fidelity --------------------------------------------------------------


def fidelity_coefficients(t, with_estimation=True):
    """Coefficients ``c_i`` of the residual ``delta = sum c_i z_i`` (alpha, beta, then key)."""
    c = [t * t - 1.0, t - 1.0]
    if not with_estimation:
        c.append(t * t - 1.0)
    return c


def avg_fidelity_closed_form(delta_sq, t, with_estimation=True):
    """``E exp(-|delta|^2) = 1 / (1 + 2 delta_sq sum c_i^2)``."""
    return 1.0 / (1.0 + 2.0 * delta_sq * sum(c * c for c in fidelity_coefficients(t, with_estimation)))


SAMPLERS = ("halton", "pseudo")
QMC_REPLICATES = 10


def _normal_draws(n, d, rng, sampler):
    """``QMC_REPLICATES`` blocks of standard normals (``n`` rows in total, ``d`` columns)."""
    sizes = [len(b) for b in np.array_split(np.arange(n), QMC_REPLICATES)]
    if sampler == "pseudo":
        return [rng.standard_normal((m, d)) for m in sizes]
    if sampler == "halton":
        # independent scrambles give replicate means for the standard error
        return [ndtri(qmc.Halton(d, scramble=True, seed=rng).random(m)) for m in sizes]
    raise ValueError(f"sampler must be one of {SAMPLERS}")


def _mc_fidelity(delta_sq, t, n_samples, rng, with_estimation, sampler="halton"):
    coeffs = np.array(fidelity_coefficients(t, with_estimation))
    sd = math.sqrt(delta_sq)
    means = []
    for z in _normal_draws(n_samples, 2 * coeffs.size, rng, sampler):
        delta = sd * (z[:, 0::2] + 1j * z[:, 1::2]) @ coeffs
        means.append(np.exp(-np.abs(delta) ** 2).mean())
    means = np.array(means)
    return float(means.mean()), float(means.std(ddof=1) / math.sqrt(means.size))


def avg_fidelity_vs_t(delta_sq, t_grid, n_samples, seed, with_estimation=True, workers=None, sampler="halton"):
    """Sampled average of ``|<a+b|t^2 a + t b (+ (t^2-1) g)>|^2`` over Gaussian ``a, b, g``.

    ``delta_sq`` is the per-component (real and imaginary) variance of each
    amplitude.  ``with_estimation=False`` models a client that decrypts as
    if ``t = 1``.  The closed form is stored in ``extra["closed_form"]``.
    The figure of merit is the squared overlap (``F^2`` in Uhlmann terms).

    ``sampler="halton"`` uses scrambled Halton points (randomised quasi-Monte
    Carlo); ``"pseudo"`` uses plain pseudo-random normals.  Either way the
    samples are split into ``QMC_REPLICATES`` independent blocks and the
    standard error comes from the spread of the block means.
    """
    t_grid = np.asarray(t_grid, float)
    if np.any((t_grid < 0) | (t_grid > 1)):
        raise ValueError("t_grid must lie in [0, 1]")
    if n_samples < 2 * QMC_REPLICATES:
        raise ValueError(f"need at least {2 * QMC_REPLICATES} samples")
    rngs = point_rngs(seed, t_grid.size)
    res = parallel_map(
        lambda i: _mc_fidelity(delta_sq, t_grid[i], n_samples, rngs[i], with_estimation, sampler),
        range(t_grid.size),
        workers,
    )
    vals, errs = zip(*res) if res else ((), ())
    closed = [avg_fidelity_closed_form(delta_sq, t, with_estimation) for t in t_grid]
    return SweepResult(
        "t",
        t_grid,
        "avg_fidelity_estimated" if with_estimation else "avg_fidelity_naive",
        vals,
        errs,
        metadata={
            "delta_sq": delta_sq,
            "n_samples": n_samples,
            "seed": seed,
            "sampler": sampler,
            "with_estimation": with_estimation,
            "fidelity_convention": "squared overlap |<a|b>|^2",
            "rng_split": "numpy SeedSequence(seed).spawn(len(grid))",
        },
        extra={"closed_form": closed},
    )


# -- SNR ---------------------------------------------------------------------------


def snr_stage_report(stages):
    """Per-quadrature SNR (signal variance over noise variance) for each protocol stage.

    ``stages`` are :class:`cvqce.protocol.Stage` objects.  The ratio is
    unit-free, so internal and SNU variances give the same numbers.
    """
    rows = []
    for st in stages:
        snr = gs.quadrature_snr(st.signal_cov, st.noise_cov)
        rows.append({"stage": st.name, "snr_q": float(snr[0]), "snr_p": float(snr[1])})
    return rows


# -- purity ----------------------------------------------------------------------


CONVENTIONS = ("alpha-plane", "per-quadrature")


def encryption_variance(delta, convention):
    """Per-quadrature shift variance for a given ``delta`` under a naming convention.

    ``alpha-plane``: ``delta^2`` is the variance of Re/Im(alpha), so the
    quadrature variance is ``2 delta^2``.  ``per-quadrature``: ``delta^2``
    is the quadrature variance itself.
    """
    if convention == "alpha-plane":
        return gs.alpha_plane_to_quadrature(delta * delta)
    if convention == "per-quadrature":
        return delta * delta
    raise ValueError(f"convention must be one of {CONVENTIONS}")


def purity_sweep(state, deltas, convention):
    deltas = np.asarray(deltas, float)
    vals = [gs.purity(gs.encrypt_ensemble(state, encryption_variance(d, convention))) for d in deltas]
    return SweepResult("delta", deltas, "purity", vals, metadata={"convention": convention})
