"""Random-Fourier-feature sketching: a linear, mergeable compression of data.

The feature map is Phi(x) = (1/sqrt(m)) (e^{-i<x,w_1>}, ..., e^{-i<x,w_m>})
with frequencies drawn from the kernel's Bochner spectral distribution; the
sketch of a measure is the expectation of Phi.  Sketches of data shards merge
by count-weighted averaging, exactly.
"""

from __future__ import annotations

import json

import numpy as np

from .measures import DiscreteMeasure, GaussianMixture
from .kernels import KernelSpec, kernel_to_dict, kernel_from_dict

__all__ = [
    "FeatureMap",
    "Sketch",
    "draw_features",
    "sketch_samples",
    "sketch_measure",
    "merge",
    "sketch_distance",
    "rkhs_lipschitz",
    "save_sketch",
    "load_sketch",
]

_FORMAT_TAG = "wmmd-sketch-v1"


class FeatureMap:
    """Frozen frequency matrix with the 1/sqrt(m) complex-exponential map."""

    __slots__ = ("omega", "kernel", "seed")

    def __init__(self, omega, kernel, seed):
        self.omega = np.atleast_2d(np.asarray(omega, dtype=float))
        self.omega.setflags(write=False)
        self.kernel = kernel
        self.seed = int(seed)

    @property
    def m(self):
        return self.omega.shape[0]

    @property
    def d(self):
        return self.omega.shape[1]

    def phi(self, X):
        """Feature matrix, one row of Phi(x) per sample row."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.exp(-1j * (X @ self.omega.T)) / np.sqrt(self.m)

    def same_as(self, other):
        return (
            self.seed == other.seed
            and self.omega.shape == other.omega.shape
            and np.array_equal(self.omega, other.omega)
        )


class Sketch:
    """m complex generalized moments of a measure, with provenance."""

    __slots__ = ("values", "feature_map", "n_samples")

    def __init__(self, values, feature_map, n_samples):
        self.values = np.asarray(values, dtype=complex)
        self.values.setflags(write=False)
        self.feature_map = feature_map
        self.n_samples = int(n_samples)

    @property
    def m(self):
        return self.values.shape[0]


def draw_features(kernel, m, seed):
    """Deterministic feature map for a kernel.

    Frequencies are derived per index with a counter-based generator keyed on
    (seed, index), so growing m extends the matrix without reshuffling the
    frequencies already drawn.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    rows = []
    for j in range(m):
        bg = np.random.Philox(key=[int(seed) % 2**64, 0], counter=[0, j, 0, 0])
        rng = np.random.Generator(bg)
        rows.append(kernel.spectral_sample(1, rng)[0])
    return FeatureMap(np.array(rows), kernel, seed)


def sketch_samples(F, X):
    """Average of Phi over the rows of X."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[0] == 0:
        raise ValueError("empty sample set")
    if X.shape[1] != F.d:
        raise ValueError("dimension mismatch")
    vals = F.phi(X).mean(axis=0)
    return Sketch(vals, F, X.shape[0])


def sketch_measure(F, measure):
    """Exact expectation of Phi under a discrete measure or Gaussian mixture."""
    if isinstance(measure, DiscreteMeasure):
        vals = measure.weights @ F.phi(measure.points)
        return Sketch(vals, F, 0)
    if isinstance(measure, GaussianMixture):
        vals = measure.char_fn(F.omega) / np.sqrt(F.m)
        return Sketch(vals, F, 0)
    raise TypeError("unsupported measure type")


def merge(sketches, counts=None):
    """Count-weighted average of sketches sharing one feature map."""
    sketches = list(sketches)
    if not sketches:
        raise ValueError("nothing to merge")
    F = sketches[0].feature_map
    if counts is None:
        counts = [s.n_samples for s in sketches]
    if any(not s.feature_map.same_as(F) for s in sketches):
        raise ValueError("sketches use different feature maps")
    counts = np.asarray(counts, dtype=float)
    if counts.sum() <= 0:
        raise ValueError("total count must be positive")
    vals = np.zeros(F.m, dtype=complex)
    for s, c in zip(sketches, counts):
        vals += c * s.values
    vals /= counts.sum()
    return Sketch(vals, F, int(counts.sum()))


def sketch_distance(a, b):
    """Euclidean norm of the complex difference of two sketches."""
    if not a.feature_map.same_as(b.feature_map):
        raise ValueError("sketches use different feature maps")
    return float(np.linalg.norm(a.values - b.values))


def rkhs_lipschitz(F):
    """sqrt(sum_j ||w_j||^2) / sqrt(m): Lipschitz constant of Phi.

    Each component of Phi is (||w_j||/sqrt(m))-Lipschitz, so the sketching
    operator contracts W_1 by at most this factor.
    """
    return float(np.sqrt(np.sum(F.omega**2)) / np.sqrt(F.m))


# ---------------------------------------------------------------------------
# Sketch file format (JSON).


def save_sketch(s, path):
    obj = {
        "format": _FORMAT_TAG,
        "kernel": kernel_to_dict(s.feature_map.kernel),
        "d": s.feature_map.d,
        "m": s.m,
        "seed": s.feature_map.seed,
        "n_samples": s.n_samples,
        "omega": [[float(v) for v in row] for row in s.feature_map.omega],
        "re": [float(v) for v in s.values.real],
        "im": [float(v) for v in s.values.imag],
    }
    with open(path, "w") as f:
        json.dump(obj, f, separators=(",", ":"))
        f.write("\n")


def load_sketch(path):
    with open(path) as f:
        obj = json.load(f)
    if obj.get("format") != _FORMAT_TAG:
        raise ValueError(f"unknown sketch format tag {obj.get('format')!r}")
    kernel = kernel_from_dict(obj["kernel"])
    F = FeatureMap(np.array(obj["omega"], dtype=float), kernel, obj["seed"])
    vals = np.array(obj["re"], dtype=float) + 1j * np.array(obj["im"], dtype=float)
    return Sketch(vals, F, obj["n_samples"])
