"""Seeded generators for the synthetic scenarios.

Every generator is a pure function of its parameters and an :class:`RngStream`.
A stream is identified by ``(seed, index)``; the index is the replicate number
in the experiment runner, so any replicate can be regenerated on its own.
"""
import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError
from .linalg import random_orthonormal


class RngStream:
    """PCG64 stream derived from ``SeedSequence(seed, spawn_key=(index,))``."""

    algorithm = "PCG64"

    def __init__(self, seed, index=0):
        self.seed = int(seed)
        self.index = int(index)
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.index,))
        self.generator = np.random.Generator(np.random.PCG64(ss))

    def __repr__(self):
        return f"RngStream(seed={self.seed}, index={self.index})"

    def standard_normal(self, size=None):
        return self.generator.standard_normal(size)

    def random(self, size=None):
        return self.generator.random(size)

    def choice(self, a, size=None, replace=True):
        return self.generator.choice(a, size=size, replace=replace)

    def permutation(self, x):
        return self.generator.permutation(x)


class Dist(enum.Enum):
    NORMAL = "normal"
    STUDENT_T2 = "t2"
    PARETO = "pareto"
    CAUCHY = "cauchy"
    NORMAL_SMALL = "normal-0.1"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        aliases = {"t": "t2", "student-t": "t2", "normal0.1": "normal-0.1"}
        v = str(value).lower()
        return cls(aliases.get(v, v))

    @property
    def heavy_tailed(self):
        return self in (Dist.STUDENT_T2, Dist.PARETO, Dist.CAUCHY)

    @property
    def gaussian_variance(self):
        """Variance for the Gaussian ids, ``None`` otherwise."""
        return {Dist.NORMAL: 1.0, Dist.NORMAL_SMALL: SMALL_VARIANCE}.get(self)


PARETO_SCALE = 0.5
PARETO_SHAPE = 1.5
SMALL_VARIANCE = 0.1


def sample_dist(dist, rng, size=None):
    """Draw from one of the factor distributions.

    normal      N(0, 1)
    normal-0.1  N(0, 0.1), the second parameter being a variance
    t2          Z / sqrt(W / 2) with W = -2 log U, which is chi-square(2)
    pareto      0.5 * (1 - U)^(-1/1.5), support [0.5, inf)
    cauchy      tan(pi (U - 1/2))
    """
    dist = Dist.parse(dist)
    if dist is Dist.NORMAL:
        out = rng.standard_normal(size)
    elif dist is Dist.NORMAL_SMALL:
        out = math.sqrt(SMALL_VARIANCE) * rng.standard_normal(size)
    elif dist is Dist.STUDENT_T2:
        z = rng.standard_normal(size)
        # 1 - U lies in (0, 1], keeping the log finite
        w = -2.0 * np.log1p(-rng.random(size))
        out = z / np.sqrt(w / 2.0)
    elif dist is Dist.PARETO:
        out = pareto_inverse_cdf(rng.random(size))
    else:
        out = np.tan(math.pi * (rng.random(size) - 0.5))
    if size is None:
        return float(out)
    return out


def pareto_inverse_cdf(u, scale=PARETO_SCALE, shape=PARETO_SHAPE):
    return scale * np.power(1.0 - np.asarray(u, dtype=float), -1.0 / shape)


@dataclass(frozen=True)
class FactorSpec:
    alphas: tuple = (7.0, 5.0, 3.0)
    factor_dist: Dist = Dist.NORMAL
    noise_sd: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "alphas", tuple(float(a) for a in self.alphas))
        object.__setattr__(self, "factor_dist", Dist.parse(self.factor_dist))

    def population_eigenvalues(self, p):
        """Spectrum of the covariance for unit-variance factors: ``alpha_i^2 + noise^2`` then noise."""
        noise = self.noise_sd**2
        top = [a * a + noise for a in self.alphas]
        return np.array(sorted(top, reverse=True) + [noise] * (p - len(top)))

    def covariance(self, loadings):
        """Population covariance ``B diag(alpha^2 var(k)) B^T + noise^2 I`` for Gaussian factors."""
        var = self.factor_dist.gaussian_variance
        if var is None:
            raise ValueError(f"{self.factor_dist.value} factors have no finite covariance")
        B = np.asarray(loadings, dtype=float)
        scale = var * np.asarray(self.alphas) ** 2
        return (B * scale) @ B.T + self.noise_sd**2 * np.eye(B.shape[0])


def lifted_gaussian_covariance(cov):
    """Exact covariance of ``(cos y; sin y)`` for ``y ~ N(mu, cov)`` with ``mu = 0``.

    Uses ``E exp(i t'y) = exp(-t' cov t / 2)``; the cos/sin cross block vanishes
    by symmetry of ``y``.
    """
    S = np.asarray(cov, dtype=float)
    d = np.diag(S)
    base = d[:, None] + d[None, :]
    diff = np.exp(-0.5 * (base - 2.0 * S))
    summ = np.exp(-0.5 * (base + 2.0 * S))
    m = np.exp(-0.5 * d)
    cc = 0.5 * (diff + summ) - np.outer(m, m)
    ss = 0.5 * (diff - summ)
    p = S.shape[0]
    out = np.zeros((2 * p, 2 * p))
    out[:p, :p] = cc
    out[p:, p:] = ss
    return 0.5 * (out + out.T)


@dataclass(frozen=True)
class OutlierSpec:
    proportion: float = 0.0
    sd: float = 6.0

    def __post_init__(self):
        if not 0.0 <= self.proportion < 1.0:
            raise ValueError(f"outlier proportion must be in [0, 1), got {self.proportion}")
        if self.sd < 0:
            raise ValueError("outlier sd must be non-negative")

    @classmethod
    def from_variance(cls, proportion, variance):
        return cls(proportion=proportion, sd=math.sqrt(variance))


def gen_factor_data(p, n, spec=None, rng=None, loadings=None):
    """Factor model ``y = sum_i alpha_i b_i k_i + eps``.

    Returns ``(Y, B)`` with ``Y`` of shape ``p x n`` and ``B`` the ``p x m``
    orthonormal loadings. Pass ``loadings`` to draw more samples from the
    same population.
    """
    spec = spec or FactorSpec()
    m = len(spec.alphas)
    if p < m:
        raise DimensionError(f"p={p} is smaller than the number of factors {m}")
    if loadings is None:
        B = random_orthonormal(p, m, rng)
    else:
        B = np.asarray(loadings, dtype=float)
        if B.shape != (p, m):
            raise DimensionError(f"loadings must have shape {(p, m)}, got {B.shape}")
    K = sample_dist(spec.factor_dist, rng, (m, n))
    noise = spec.noise_sd * rng.standard_normal((p, n))
    Y = (B * np.asarray(spec.alphas)) @ K + noise
    return Y, B


def gen_example1(p, n, rng):
    """Two stacked ``p/2`` blocks with factor variances 1 and 0.1."""
    if p % 2:
        raise DimensionError(f"p must be even, got {p}")
    top, _ = gen_factor_data(p // 2, n, FactorSpec(factor_dist=Dist.NORMAL), rng)
    bottom, _ = gen_factor_data(p // 2, n, FactorSpec(factor_dist=Dist.NORMAL_SMALL), rng)
    return np.vstack([top, bottom])


def outlier_count(spec, p, n):
    # guard against 0.144 * 100 * 100 landing a hair under an integer
    return int(math.floor(spec.proportion * p * n + 1e-9))


def inject_outliers(Y, spec, rng):
    """Replace ``floor(proportion * p * n)`` distinct entries with ``N(0, sd^2)`` draws."""
    Y = np.array(Y, dtype=float, copy=True)
    p, n = Y.shape
    count = outlier_count(spec, p, n)
    if count == 0:
        return Y
    flat = rng.choice(p * n, size=count, replace=False)
    Y.reshape(-1)[flat] = spec.sd * rng.standard_normal(count)
    return Y


def gen_two_class(p, n, rng, shift=1.5, spec=None):
    """Factor data whose two classes differ by ``+/- shift`` along a random unit direction.

    Returns ``(Y, labels)``; classes alternate so both have ``n // 2`` or more members.
    """
    spec = spec or FactorSpec(alphas=(1.0, 0.5), noise_sd=0.3)
    Y, B = gen_factor_data(p, n, spec, rng)
    labels = np.arange(n) % 2
    direction = random_orthonormal(p, 1, rng)[:, 0]
    Y = Y + shift * np.outer(direction, 2 * labels - 1)
    return Y, labels
