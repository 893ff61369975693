"""Probability measures on R^d: weighted point clouds and isotropic Gaussian mixtures.

Discrete measures are immutable weighted point clouds; Gaussian mixtures are
restricted to isotropic components, which is all the closed forms downstream
need.  Both expose means, moments, projections onto directions, Gaussian
smoothing and deterministic sampling.
"""

from __future__ import annotations

import numpy as np
from scipy.special import gamma as _gamma, ndtr

__all__ = [
    "DiscreteMeasure",
    "GaussianMixture",
    "RegularizerSpec",
    "ModelSetSpec",
    "make_discrete",
    "project",
    "smooth",
    "gmm_quantile",
    "sample",
    "stream_rng",
    "load_dataset",
    "save_dataset",
]

_MASS_TOL = 1e-12


def stream_rng(seed, *stream):
    """Deterministic RNG for a (seed, stream-id...) pair.

    Uses a counter-based bit generator so independent streams can be derived
    without coordination and results do not depend on draw order elsewhere.
    """
    if len(stream) > 3:
        raise ValueError("at most 3 stream levels")
    # Each stream id occupies its own 64-bit counter word, leaving the low
    # word free for the generator to advance through 2^64 blocks.
    words = [0, 0, 0]
    for i, s in enumerate(stream):
        words[i] = int(s) % 2**64
    bg = np.random.Philox(key=[int(seed) % 2**64, 0], counter=[0] + words)
    return np.random.Generator(bg)


class DiscreteMeasure:
    """Weighted point cloud sum_i w_i * delta_{x_i} with weights summing to 1.

    Duplicate atoms are allowed; every downstream formula is weight-linear so
    merging duplicates is only an optional normalization pass.
    """

    __slots__ = ("points", "weights")

    def __init__(self, points, weights):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        weights = np.asarray(weights, dtype=float).ravel()
        if points.ndim != 2 or points.shape[0] < 1:
            raise ValueError("need at least one atom")
        if weights.shape[0] != points.shape[0]:
            raise ValueError("points/weights length mismatch")
        if np.any(weights < 0):
            raise ValueError("NegativeWeight: weights must be nonnegative")
        total = weights.sum()
        if not total > 0:
            raise ValueError("weights must have positive total mass")
        weights = weights / total
        self.points = points
        self.weights = weights
        self.points.setflags(write=False)
        self.weights.setflags(write=False)
        assert abs(self.weights.sum() - 1.0) <= _MASS_TOL

    @property
    def n(self):
        return self.points.shape[0]

    @property
    def d(self):
        return self.points.shape[1]

    def mean(self):
        return self.weights @ self.points

    def moment_s(self, s):
        """E ||x||_2^s, exact weighted sum."""
        if s < 1:
            raise ValueError("s must be >= 1")
        norms = np.linalg.norm(self.points, axis=1)
        return float(self.weights @ norms**s)

    def centered(self):
        return DiscreteMeasure(self.points - self.mean(), self.weights)

    def __repr__(self):
        return f"DiscreteMeasure(n={self.n}, d={self.d})"


class GaussianMixture:
    """Isotropic-component Gaussian mixture sum_k alpha_k N(c_k, sigma_k^2 I)."""

    __slots__ = ("weights", "means", "sigmas")

    def __init__(self, weights, means, sigmas):
        weights = np.asarray(weights, dtype=float).ravel()
        means = np.atleast_2d(np.asarray(means, dtype=float))
        sigmas = np.asarray(sigmas, dtype=float).ravel()
        if means.shape[0] != weights.shape[0] or sigmas.shape[0] != weights.shape[0]:
            raise ValueError("component count mismatch")
        if np.any(weights < 0):
            raise ValueError("NegativeWeight: weights must be nonnegative")
        if np.any(sigmas <= 0):
            raise ValueError("sigmas must be positive")
        total = weights.sum()
        if not total > 0:
            raise ValueError("weights must have positive total mass")
        self.weights = weights / total
        self.means = means
        self.sigmas = sigmas
        for a in (self.weights, self.means, self.sigmas):
            a.setflags(write=False)
        assert abs(self.weights.sum() - 1.0) <= _MASS_TOL

    @property
    def K(self):
        return self.weights.shape[0]

    @property
    def d(self):
        return self.means.shape[1]

    def mean(self):
        return self.weights @ self.means

    def char_fn(self, omega):
        """Characteristic function E[e^{-i <omega, x>}] at rows of `omega`."""
        omega = np.atleast_2d(np.asarray(omega, dtype=float))
        sq = np.sum(omega**2, axis=1)
        phase = omega @ self.means.T  # (n_omega, K)
        vals = np.exp(-1j * phase - 0.5 * sq[:, None] * self.sigmas[None, :] ** 2)
        return vals @ self.weights

    def cdf(self, x):
        """CDF, d=1 only."""
        if self.d != 1:
            raise ValueError("cdf defined for d=1 only")
        x = np.asarray(x, dtype=float)
        z = (x[..., None] - self.means[:, 0]) / self.sigmas
        return ndtr(z) @ self.weights

    def moment_s(self, s):
        """E ||x||_2^s by Monte-Carlo with a fixed internal stream.

        Target relative error ~1e-4 for moderate s; exact formulas exist only
        for special cases so we integrate numerically.
        """
        if s < 1:
            raise ValueError("s must be >= 1")
        if self.d == 1:
            # Gauss-Hermite per component is exact enough in 1-D.
            nodes, wts = np.polynomial.hermite_e.hermegauss(201)
            vals = 0.0
            for ak, ck, sk in zip(self.weights, self.means[:, 0], self.sigmas):
                x = ck + sk * nodes
                vals += ak * np.sum(wts * np.abs(x) ** s) / np.sqrt(2 * np.pi)
            return float(vals)
        rng = stream_rng(0x6D6F6D, int(round(s * 64)))
        n = 4_000_000
        total = 0.0
        for ak, ck, sk in zip(self.weights, self.means, self.sigmas):
            x = ck + sk * rng.standard_normal((n, self.d))
            total += ak * np.mean(np.linalg.norm(x, axis=1) ** s)
        return float(total)

    def __repr__(self):
        return f"GaussianMixture(K={self.K}, d={self.d})"


class RegularizerSpec:
    """Even smoothing density; only the Gaussian family is supported.

    density: (2 pi sigma^2)^(-d/2) exp(-||z||^2 / (2 sigma^2)).
    """

    __slots__ = ("family", "sigma")

    def __init__(self, sigma, family="Gaussian"):
        if family != "Gaussian":
            raise ValueError("unsupported regularizer family")
        if not sigma > 0:
            raise ValueError("sigma must be positive")
        self.family = family
        self.sigma = float(sigma)

    def moment_p(self, p, d):
        """Integral of ||z||^p against the density on R^d (closed form)."""
        s = self.sigma
        return float(s**p * 2 ** (p / 2) * _gamma((p + d) / 2) / _gamma(d / 2))

    def __repr__(self):
        return f"RegularizerSpec(Gaussian, sigma={self.sigma})"


class ModelSetSpec:
    """Restricted family of distributions that bounds are stated over."""

    __slots__ = ("variant", "params")

    _VARIANTS = ("DiracMixture", "GMM1D", "BoundedMoment")

    def __init__(self, variant, **params):
        if variant not in self._VARIANTS:
            raise ValueError(f"unknown model set variant {variant!r}")
        if variant == "DiracMixture":
            if params["K"] < 1 or params["radius"] <= 0:
                raise ValueError("DiracMixture needs K >= 1, radius > 0")
        elif variant == "GMM1D":
            if params["K"] < 1 or params["sigma_min"] <= 0:
                raise ValueError("GMM1D needs K >= 1, sigma_min > 0")
        else:
            if params["M"] <= 0 or params["s"] <= 1:
                raise ValueError("BoundedMoment needs M > 0, s > 1")
        self.variant = variant
        self.params = dict(params)


def make_discrete(points, weights):
    """Normalized DiscreteMeasure from raw points and nonnegative weights."""
    return DiscreteMeasure(points, weights)


def project(mu, theta):
    """Pushforward of a discrete measure under x -> <x, theta>, theta unit."""
    theta = np.asarray(theta, dtype=float).ravel()
    if abs(np.linalg.norm(theta) - 1.0) > 1e-9:
        raise ValueError("theta must be a unit vector")
    pts = (mu.points @ theta)[:, None]
    return DiscreteMeasure(pts, mu.weights)


def smooth(mu, alpha):
    """Gaussian smoothing: one mixture component per atom of `mu`."""
    if not isinstance(alpha, RegularizerSpec):
        raise TypeError("alpha must be a RegularizerSpec")
    sig = np.full(mu.n, alpha.sigma)
    return GaussianMixture(mu.weights, mu.points, sig)


def gmm_quantile(g, q):
    """Quantile of a 1-D Gaussian mixture by bisection, |F(x)-q| <= 1e-12."""
    if g.d != 1:
        raise ValueError("gmm_quantile needs d=1")
    if not 0.0 < q < 1.0:
        raise ValueError("q must lie in (0,1)")
    span = 12.0 * float(np.max(g.sigmas)) + float(np.max(np.abs(g.means)))
    lo, hi = -span, span
    while g.cdf(np.array(lo)) > q:
        lo *= 2.0
    while g.cdf(np.array(hi)) < q:
        hi *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        f = float(g.cdf(np.array(mid)))
        if abs(f - q) <= 1e-13 or hi - lo < 1e-14 * max(1.0, abs(mid)):
            return mid
        if f < q:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def gmm_quantiles(g, qs):
    """Vectorized quantiles of a 1-D GMM (monotone bisection on a batch)."""
    qs = np.asarray(qs, dtype=float)
    span = 12.0 * float(np.max(g.sigmas)) + float(np.max(np.abs(g.means)))
    lo = np.full(qs.shape, -span)
    hi = np.full(qs.shape, span)
    while np.any(g.cdf(lo) > qs):
        lo[g.cdf(lo) > qs] *= 2.0
    while np.any(g.cdf(hi) < qs):
        hi[g.cdf(hi) < qs] *= 2.0
    for _ in range(53):
        mid = 0.5 * (lo + hi)
        below = g.cdf(mid) < qs
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return 0.5 * (lo + hi)


def sample(measure, n, rng):
    """Empirical measure of n i.i.d. draws; deterministic given the stream.

    `rng` is either a numpy Generator or a (seed, stream...) tuple fed to
    stream_rng.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if not isinstance(rng, np.random.Generator):
        rng = stream_rng(*rng) if isinstance(rng, tuple) else stream_rng(rng)
    if isinstance(measure, DiscreteMeasure):
        idx = rng.choice(measure.n, size=n, p=measure.weights)
        pts = measure.points[idx]
    elif isinstance(measure, GaussianMixture):
        idx = rng.choice(measure.K, size=n, p=measure.weights)
        pts = measure.means[idx] + measure.sigmas[idx, None] * rng.standard_normal(
            (n, measure.d)
        )
    else:
        raise TypeError("unsupported measure type")
    return DiscreteMeasure(pts, np.full(n, 1.0 / n))


# ---------------------------------------------------------------------------
# Dataset I/O: CSV (one sample per row) and raw little-endian binary.

_BINARY_MAGIC = b"WMMD1"


def load_dataset(path):
    """Load an n x d sample array from CSV or WMMD1 binary."""
    with open(path, "rb") as f:
        head = f.read(5)
    if head == _BINARY_MAGIC:
        with open(path, "rb") as f:
            f.read(5)
            n = int.from_bytes(f.read(8), "little")
            d = int.from_bytes(f.read(8), "little")
            data = np.fromfile(f, dtype="<f8", count=n * d)
        if data.size != n * d:
            raise ValueError("truncated binary dataset")
        return data.reshape(n, d)
    # CSV path: auto-detect a header by a non-numeric first row.
    with open(path, "r") as f:
        first = f.readline()
    skip = 0
    try:
        [float(tok) for tok in first.strip().split(",") if tok != ""]
    except ValueError:
        skip = 1
    data = np.loadtxt(path, delimiter=",", skiprows=skip, ndmin=2)
    return data


def save_dataset(path, X, binary=False):
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if binary:
        with open(path, "wb") as f:
            f.write(_BINARY_MAGIC)
            f.write(int(X.shape[0]).to_bytes(8, "little"))
            f.write(int(X.shape[1]).to_bytes(8, "little"))
            X.astype("<f8").tofile(f)
    else:
        np.savetxt(path, X, delimiter=",", fmt="%.17g")
