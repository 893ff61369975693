import numpy as np
import pytest

from wmmd.measures import DiscreteMeasure, GaussianMixture, make_discrete, stream_rng
from wmmd.kernels import sphere_directions
from wmmd.transport import (
    TransportPlan,
    w1d,
    w_exact,
    w_brute,
    sliced_w1,
    translation_split,
    w_rate,
)


def _uniform(points):
    points = np.atleast_2d(points)
    return DiscreteMeasure(points, np.full(points.shape[0], 1.0 / points.shape[0]))


def test_w1d_two_diracs():
    mu = make_discrete([[0.0]], [1.0])
    nu = make_discrete([[1.0]], [1.0])
    for p in (1, 1.5, 2, 3):
        assert w1d(p, mu, nu) == pytest.approx(1.0, abs=1e-14)


def test_w1d_symmetric_split():
    mu = _uniform([[0.0], [2.0]])
    nu = make_discrete([[1.0]], [1.0])
    assert w1d(1, mu, nu) == pytest.approx(1.0, abs=1e-14)
    assert w1d(2, mu, nu) == pytest.approx(1.0, abs=1e-14)


def test_w1d_rejects_bad_input():
    mu = make_discrete([[0.0]], [1.0])
    with pytest.raises(ValueError):
        w1d(0.5, mu, mu)
    with pytest.raises(ValueError):
        w1d(1, _uniform([[0.0, 1.0]]), _uniform([[0.0, 1.0]]))


def test_w1d_matches_lp_on_random_discrete_pairs():
    rng = stream_rng(101)
    for _ in range(25):
        mu = DiscreteMeasure(rng.normal(size=(6, 1)), rng.uniform(0.1, 1, 6))
        nu = DiscreteMeasure(rng.normal(size=(6, 1)), rng.uniform(0.1, 1, 6))
        for p in (1, 2):
            ref, _ = w_exact(p, mu, nu)
            assert w1d(p, mu, nu) == pytest.approx(ref, abs=1e-10)


def test_w1d_gmm_translation():
    a = GaussianMixture([1.0], [[0.3]], [1.0])
    b = GaussianMixture([1.0], [[-0.9]], [1.0])
    assert w1d(2, a, b) == pytest.approx(1.2, rel=1e-6)


def test_w1d_gmm_scale():
    # same-mean Gaussians: W_2 = |sigma - sigma'|
    a = GaussianMixture([1.0], [[0.0]], [1.0])
    b = GaussianMixture([1.0], [[0.0]], [1.5])
    assert w1d(2, a, b) == pytest.approx(0.5, rel=2e-6)


class TestExact:
    def test_matches_brute_force(self):
        rng = stream_rng(55)
        for _ in range(30):
            n = int(rng.integers(2, 7))
            d = int(rng.integers(1, 4))
            mu = _uniform(rng.normal(size=(n, d)))
            nu = _uniform(rng.normal(size=(n, d)))
            p = float(rng.choice([1.0, 2.0]))
            val, plan = w_exact(p, mu, nu)
            assert val == pytest.approx(w_brute(p, mu, nu), rel=1e-12)
            assert isinstance(plan, TransportPlan)

    def test_general_weights_lp(self):
        mu = DiscreteMeasure([[0.0], [1.0]], [0.75, 0.25])
        nu = DiscreteMeasure([[0.0], [1.0]], [0.25, 0.75])
        # move 0.5 of mass a distance of 1
        val, plan = w_exact(1, mu, nu)
        assert val == pytest.approx(0.5, abs=1e-12)
        assert plan.coupling.sum() == pytest.approx(1.0, abs=1e-9)

    def test_identity_is_zero(self):
        mu = _uniform(stream_rng(1).normal(size=(5, 2)))
        val, _ = w_exact(2, mu, mu)
        # self-distances computed via inner products carry ~1e-16 round-off,
        # and the outer ^(1/p) amplifies that to ~1e-8
        assert val == pytest.approx(0.0, abs=1e-7)

    def test_size_guard(self):
        big = _uniform(np.zeros((1001, 1)) + np.arange(1001)[:, None])
        with pytest.raises(ValueError, match="size guard"):
            w_exact(1, big, big)

    def test_plan_validation_catches_corruption(self):
        mu = _uniform([[0.0], [1.0]])
        nu = _uniform([[2.0], [3.0]])
        _, plan = w_exact(1, mu, nu)
        bad = plan.coupling.copy()
        bad[0, 0] += 0.2
        with pytest.raises(ValueError):
            TransportPlan(bad, plan.cost, plan.p, mu, nu)

    def test_plan_csv(self, tmp_path):
        mu = _uniform([[0.0], [1.0]])
        nu = _uniform([[0.5], [1.5]])
        _, plan = w_exact(2, mu, nu)
        out = tmp_path / "plan.csv"
        plan.to_csv(out)
        lines = out.read_text().strip().splitlines()
        assert lines[0] == "i,j,mass"
        mass = sum(float(l.split(",")[2]) for l in lines[1:])
        assert mass == pytest.approx(1.0, abs=1e-12)


def test_brute_rejects_nonuniform():
    mu = DiscreteMeasure([[0.0], [1.0]], [0.7, 0.3])
    with pytest.raises(ValueError):
        w_brute(1, mu, mu)


def test_sliced_w1_upper_bounded_by_w1():
    # projections are 1-Lipschitz, so every sliced term is <= W_1
    rng = stream_rng(13)
    theta = sphere_directions(16, 3, seed=2)
    mu = _uniform(rng.normal(size=(8, 3)))
    nu = _uniform(rng.normal(size=(8, 3)))
    full, _ = w_exact(1, mu, nu)
    assert sliced_w1(mu, nu, theta) <= full + 1e-12


def test_translation_split_identity():
    rng = stream_rng(77)
    for _ in range(10):
        mu = DiscreteMeasure(rng.normal(size=(5, 2)), rng.uniform(0.1, 1, 5))
        nu = DiscreteMeasure(rng.normal(size=(4, 2)) + 3.0, rng.uniform(0.1, 1, 4))
        centered_sq, gap_sq = translation_split(mu, nu)
        total, _ = w_exact(2, mu, nu)
        assert centered_sq + gap_sq == pytest.approx(total**2, abs=1e-8)


def test_translation_split_pure_shift():
    mu = _uniform([[0.0, 0.0], [1.0, 0.0]])
    nu = _uniform([[2.0, 1.0], [3.0, 1.0]])  # mu shifted by (2, 1)
    centered_sq, gap_sq = translation_split(mu, nu)
    assert centered_sq == pytest.approx(0.0, abs=1e-12)
    assert gap_sq == pytest.approx(5.0, rel=1e-12)


@pytest.mark.slow
def test_w_rate_1d_uniform_law():
    def sampler(n, rng):
        return rng.uniform(0.0, 1.0, size=(n, 1))

    fit = w_rate(sampler, 1, [2**j for j in range(6, 11)], 10, 7, d=1)
    assert fit.slope == pytest.approx(-0.5, abs=0.1)
