"""Mutual information, dispersion and finite-blocklength rate margin for
the discrete-input continuous-output flash read channel.

Capacity here always means the mutual information with equally likely
level inputs ("instantaneous storage capacity"); the input distribution is
never optimized. Entropy integrals run in nats and convert to bits at the
boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import log_ndtr, ndtr, ndtri

from .channel import (
    NoiseSpec,
    log_conditional_density,
    output_log_density,
    support_interval,
)

__all__ = [
    "QuadratureConfig",
    "MiEstimate",
    "NumericalFailure",
    "gaussian_tail",
    "log_gaussian_tail",
    "inverse_gaussian_tail",
    "mutual_information",
    "mutual_information_mc",
    "channel_dispersion",
    "normal_approx_rate",
]

LN2 = math.log(2.0)

# Chunk size for partitioned Monte-Carlo seeding; results are identical no
# matter how chunks are distributed across workers.
MC_CHUNK = 1 << 16


class NumericalFailure(RuntimeError):
    """Quadrature failed to converge; carries the achieved tolerance."""

    def __init__(self, message: str, achieved_tol: float):
        super().__init__(f"{message} (achieved tolerance {achieved_tol:.3e})")
        self.achieved_tol = achieved_tol


@dataclass(frozen=True)
class QuadratureConfig:
    rel_tol: float = 1e-8
    max_subdivisions: int = 2000

    def __post_init__(self):
        if self.rel_tol <= 0:
            raise ValueError("rel_tol must be positive")
        if self.max_subdivisions < 10:
            raise ValueError("max_subdivisions must be at least 10")


@dataclass(frozen=True)
class MiEstimate:
    value: float  # bits
    stderr: float  # bits; 0 for deterministic quadrature
    method: str  # "quadrature" or "monte_carlo"


def gaussian_tail(x):
    """Standard Gaussian tail probability Q(x)."""
    return ndtr(-np.asarray(x, dtype=float))


def log_gaussian_tail(x):
    """log Q(x), accurate far into the tail (x up to ~1e4 and beyond)."""
    return log_ndtr(-np.asarray(x, dtype=float))


def inverse_gaussian_tail(p: float) -> float:
    """Q^{-1}(p) for p in (0, 1)."""
    if not 0 < p < 1:
        raise ValueError("p must be in (0, 1)")
    return float(-ndtri(p))


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(20)

# Panel breakpoints per component, in units of sigma + lambda around the
# mean: dense near the peak, geometric into the tails.
_BREAKS = np.array(
    [0.0, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 6.0, 8.0, 10.0, 14.0, 20.0, 30.0, 40.0]
)


def _panel_edges(specs) -> np.ndarray:
    lo, hi = support_interval(specs)
    edges = [np.array([lo, hi])]
    for s in specs:
        scale = s.sigma + s.lam
        edges.append(s.mu + scale * _BREAKS)
        edges.append(s.mu - scale * _BREAKS)
    all_edges = np.unique(np.concatenate(edges))
    return all_edges[(all_edges >= lo) & (all_edges <= hi)]


def _adaptive_integral(f, edges: np.ndarray, cfg: QuadratureConfig) -> float:
    """Adaptive composite Gauss-Legendre quadrature of a vectorized f.

    The base panels are refined by uniform doubling until two successive
    levels agree to rel_tol; the panel budget is max_subdivisions.
    """
    prev = None
    achieved = float("inf")
    splits = 1
    while splits * (len(edges) - 1) <= max(cfg.max_subdivisions, len(edges)):
        fine = np.concatenate(
            [np.linspace(a, b, splits + 1)[:-1] for a, b in zip(edges, edges[1:])]
            + [edges[-1:]]
        )
        a, b = fine[:-1], fine[1:]
        mid = 0.5 * (a + b)
        half = 0.5 * (b - a)
        ys = mid[:, None] + half[:, None] * _GL_NODES[None, :]
        vals = f(ys.ravel()).reshape(ys.shape)
        total = float(np.sum(half[:, None] * _GL_WEIGHTS[None, :] * vals))
        if prev is not None:
            achieved = abs(total - prev) / max(abs(total), 1e-12)
            if achieved <= cfg.rel_tol:
                return total
        prev = total
        splits *= 2
    raise NumericalFailure("quadrature did not converge", achieved)


def _information_integrals(specs, cfg, power: int):
    """Per-level integrals of f_i * (ln f_i - ln f_Y)^power over the
    shared panel grid. power=1 gives the MI contributions (nats), power=2
    the second moment of the information density."""
    edges = _panel_edges(specs)

    def make_integrand(spec):
        def integrand(y):
            lf = log_conditional_density(y, spec)
            lmix = output_log_density(y, specs)
            return np.exp(lf) * (lf - lmix) ** power

        return integrand

    return [_adaptive_integral(make_integrand(s), edges, cfg) for s in specs]


def mutual_information(
    specs: list[NoiseSpec], cfg: QuadratureConfig = QuadratureConfig()
) -> MiEstimate:
    """Mutual information in bits between the (uniform) stored level and
    the read voltage, by adaptive quadrature.

    Computed as the average over levels of the KL divergence between the
    conditional output density and the mixture, which equals
    h(Y) - h(Y|X) without the cancellation error of differencing the two
    entropies.
    """
    if len(specs) < 2:
        raise ValueError("need at least 2 levels")
    terms = _information_integrals(specs, cfg, power=1)
    value = max(0.0, sum(terms) / len(terms) / LN2)
    return MiEstimate(value=value, stderr=0.0, method="quadrature")


def _mixture_sampler(specs, rng, n):
    levels = rng.integers(0, len(specs), n)
    mus = np.array([s.mu for s in specs])[levels]
    sigmas = np.array([s.sigma for s in specs])[levels]
    lams = np.array([s.lam for s in specs])[levels]
    y = mus + rng.normal(0.0, sigmas) + rng.laplace(0.0, lams)
    return levels, y


def mutual_information_mc(
    specs: list[NoiseSpec], n_samples: int, seed: int
) -> MiEstimate:
    """Monte-Carlo estimate of the mutual information (bits).

    Sample mean of the information density log2 f(y|x)/f(y) over uniform
    levels. Samples are drawn in fixed-size chunks, each seeded from its
    own child of the root seed, so a parallel run over chunks reproduces
    this sequential result exactly.
    """
    if n_samples < 1000:
        raise ValueError("n_samples must be at least 1000")
    root = np.random.SeedSequence(seed)
    n_chunks = (n_samples + MC_CHUNK - 1) // MC_CHUNK
    children = root.spawn(n_chunks)
    total = 0.0
    total_sq = 0.0
    done = 0
    for child in children:
        m = min(MC_CHUNK, n_samples - done)
        rng = np.random.default_rng(child)
        levels, y = _mixture_sampler(specs, rng, m)
        lf = np.array([log_conditional_density(y, s) for s in specs])
        lcond = lf[levels, np.arange(m)]
        lmix = np.logaddexp.reduce(lf, axis=0) - math.log(len(specs))
        info = (lcond - lmix) / LN2
        total += info.sum()
        total_sq += (info**2).sum()
        done += m
    mean = total / n_samples
    var = max(0.0, total_sq / n_samples - mean**2)
    return MiEstimate(
        value=mean, stderr=math.sqrt(var / n_samples), method="monte_carlo"
    )


def channel_dispersion(
    specs: list[NoiseSpec], cfg: QuadratureConfig = QuadratureConfig()
) -> float:
    """Variance (bits^2) of the information density under uniform inputs.

    This is the unconditional information variance, the dispersion term of
    the normal-approximation rate formula.
    """
    if len(specs) < 2:
        raise ValueError("need at least 2 levels")
    first = _information_integrals(specs, cfg, power=1)
    second = _information_integrals(specs, cfg, power=2)
    mean_nats = sum(first) / len(first)
    second_nats = sum(second) / len(second)
    var_nats = max(0.0, second_nats - mean_nats**2)
    return var_nats / LN2**2


def normal_approx_rate(n: int, eps: float, c: float, v: float) -> float:
    """Backed-off rate C - sqrt(V/n) Q^{-1}(eps) in bits per channel use.

    The O(log n)/n correction of the normal approximation is dropped; the
    formula is only used as a coarse margin assessment.
    """
    if n < 1:
        raise ValueError("blocklength must be at least 1")
    if not 0 < eps < 1:
        raise ValueError("eps must be in (0, 1)")
    if v < 0:
        raise ValueError("dispersion must be nonnegative")
    return c - math.sqrt(v / n) * inverse_gaussian_tail(eps)
