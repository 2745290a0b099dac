"""Dyadic hierarchy and multiscale bound tests.

Oracles: half-normal mean E max(0, W) = 1/sqrt(2 pi) for the two-point
process, the exact Gaussian increment MGF, and the exact covering oracle for
net cardinalities at the shifted scale.
"""

import numpy as np
import pytest

from epkit import chaining, metric
from epkit.rng import derive_rng

SEED = 2024


def two_point():
    return chaining.IndexSet(points=np.array([[0.0], [1.0]]), basepoint=0)


def random_cloud(rng, m, dim):
    return chaining.IndexSet(points=rng.uniform(-1, 1, size=(m, dim)), basepoint=0)


class TestCanonicalProcess:
    def test_centering(self):
        s = random_cloud(derive_rng(1, "c"), 10, 2)
        proc = chaining.CanonicalProcess(sigma=1.7)
        noise = derive_rng(2, "w").standard_normal((50, 2))
        x = proc.realize(s, noise)
        assert (x[s.basepoint] == 0).all()

    def test_increment_scale(self):
        s = two_point()
        proc = chaining.CanonicalProcess(sigma=2.0)
        noise = derive_rng(3, "w").standard_normal((200000, 1))
        x = proc.realize(s, noise)
        inc = x[1] - x[0]
        assert inc.std() == pytest.approx(2.0 * 1.0, rel=0.02)

    def test_sigma_positive(self):
        with pytest.raises(ValueError):
            chaining.CanonicalProcess(sigma=0.0)


class TestDyadicNets:
    def test_singleton_levels(self):
        s = chaining.IndexSet(points=np.array([[0.3, 0.3]]), basepoint=0)
        nets = chaining.build_dyadic_nets(s, D=1.0, K=3)
        for lv in nets.levels:
            assert list(lv.net) == [0]

    def test_grid_hierarchy_valid(self):
        s = chaining.IndexSet(points=np.linspace(0, 1, 101)[:, None], basepoint=0)
        nets = chaining.build_dyadic_nets(s, D=1.0, K=3)
        ms = s.metric_set()
        sizes = []
        for lv in nets.levels:
            assert metric.is_epsilon_net(lv.net, lv.eps, ms)
            assert len(lv.net) == lv.card_bound
            sizes.append(len(lv.net))
        assert (np.diff(sizes) >= 0).all()

    def test_diameter_guard(self):
        with pytest.raises(ValueError):
            chaining.build_dyadic_nets(two_point(), D=0.5, K=1)

    def test_cardinality_against_exact_oracle(self):
        # a maximal packing at eps is a net whose size is at most the exact
        # covering number at eps/2, i.e. two scales down from its level
        rng = derive_rng(5, "card")
        for _ in range(10):
            s = random_cloud(rng, int(rng.integers(5, 20)), 2)
            nets = chaining.build_dyadic_nets(s, K=3)
            ms = s.metric_set()
            for lv in nets.levels:
                exact = metric.exact_covering_number(lv.eps / 4.0, ms)
                assert len(lv.net) <= exact

    def test_default_depth_saturates(self):
        rng = derive_rng(6, "depth")
        s = random_cloud(rng, 12, 2)
        nets = chaining.build_dyadic_nets(s)
        assert len(nets.levels[nets.K].net) == s.m


class TestRecursiveProjection:
    def test_depth_zero_chain(self):
        s = two_point()
        nets = chaining.build_dyadic_nets(s, D=1.0, K=0)
        u = int(nets.levels[0].net[0])
        assert chaining.recursive_projection(u, nets) == [u]

    def test_step_bounds(self):
        rng = derive_rng(7, "proj")
        for _ in range(10):
            s = random_cloud(rng, int(rng.integers(5, 40)), int(rng.integers(1, 4)))
            nets = chaining.build_dyadic_nets(s)
            margins = chaining.projection_step_margins(nets)
            assert margins.min() >= -1e-12

    def test_membership_guard(self):
        s = two_point()
        nets = chaining.build_dyadic_nets(s, D=1.0, K=1)
        with pytest.raises(ValueError):
            chaining.recursive_projection(99, nets)


class TestTelescoping:
    def test_exact_identity_sweep(self):
        rng = derive_rng(8, "tele")
        s = random_cloud(rng, 20, 2)
        nets = chaining.build_dyadic_nets(s)
        proc = chaining.CanonicalProcess(sigma=1.3)
        finest = nets.levels[nets.K].net
        for _ in range(100):
            u = int(finest[rng.integers(len(finest))])
            w = rng.standard_normal(2)
            assert chaining.telescoping_residual(u, nets, proc, w) <= 1e-10

    def test_basepoint_trivial(self):
        s = two_point()
        nets = chaining.build_dyadic_nets(s, D=1.0, K=2)
        proc = chaining.CanonicalProcess(sigma=1.0)
        assert chaining.telescoping_residual(0, nets, proc, np.array([0.9])) <= 1e-12


class TestStage1:
    def test_singleton(self):
        s = chaining.IndexSet(points=np.array([[0.0]]), basepoint=0)
        nets = chaining.build_dyadic_nets(s, D=1.0, K=1)
        proc = chaining.CanonicalProcess(sigma=1.0)
        esup, bound = chaining.stage1_bound_check(nets, proc, 1000, SEED)
        assert esup.mean == 0.0
        assert bound == 0.0

    def test_two_point_oracle(self):
        nets = chaining.build_dyadic_nets(two_point(), D=1.0, K=1)
        proc = chaining.CanonicalProcess(sigma=1.0)
        esup, bound = chaining.stage1_bound_check(nets, proc, 200000, SEED)
        assert esup.mean == pytest.approx(1 / np.sqrt(2 * np.pi), abs=0.005)
        assert bound > esup.mean

    def test_requires_depth(self):
        nets = chaining.build_dyadic_nets(two_point(), D=1.0, K=0)
        with pytest.raises(ValueError):
            chaining.stage1_bound_check(
                nets, chaining.CanonicalProcess(sigma=1.0), 100, SEED)

    def test_random_sweep(self):
        rng = derive_rng(9, "s1-sweep")
        for _ in range(6):
            s = random_cloud(rng, int(rng.integers(5, 50)), 2)
            proc = chaining.CanonicalProcess(sigma=float(rng.uniform(0.5, 2)))
            nets = chaining.build_dyadic_nets(s)
            for seed in range(2):
                esup, bound = chaining.stage1_bound_check(nets, proc, 20000, seed)
                assert esup.mean <= bound + 3 * esup.stderr


class TestDudleyBound:
    def test_two_point_oracle(self):
        proc = chaining.CanonicalProcess(sigma=1.0)
        esup, rhs = chaining.dudley_bound_check(two_point(), proc, 200000, SEED)
        assert esup.mean == pytest.approx(1 / np.sqrt(2 * np.pi), abs=0.005)
        assert rhs == pytest.approx(12 * np.sqrt(2) * np.sqrt(np.log(2)), rel=1e-6)
        assert rhs == pytest.approx(14.1289, abs=0.001)

    def test_singleton(self):
        s = chaining.IndexSet(points=np.array([[1.0, 2.0]]), basepoint=0)
        esup, rhs = chaining.dudley_bound_check(
            s, chaining.CanonicalProcess(sigma=1.0), 1000, SEED)
        assert esup.mean == 0.0
        assert rhs == 0.0

    def test_sigma_homogeneity_exact(self):
        rng = derive_rng(10, "homog")
        s = random_cloud(rng, 30, 2)
        e1, r1 = chaining.dudley_bound_check(
            s, chaining.CanonicalProcess(sigma=1.0), 20000, SEED)
        e2, r2 = chaining.dudley_bound_check(
            s, chaining.CanonicalProcess(sigma=2.0), 20000, SEED)
        assert r2 == pytest.approx(2 * r1, rel=1e-12)
        assert e2.mean == pytest.approx(2 * e1.mean, rel=1e-12)

    def test_contract_on_cloud(self):
        rng = derive_rng(11, "cloud50")
        s = random_cloud(rng, 50, 2)
        proc = chaining.CanonicalProcess(sigma=2.0)
        esup, rhs = chaining.dudley_bound_check(s, proc, 20000, SEED)
        assert esup.mean <= rhs + 3 * esup.stderr


class TestSubGaussianCheck:
    def test_degenerate_pair(self):
        s = two_point()
        proc = chaining.CanonicalProcess(sigma=1.0)
        worst, rows = chaining.subgaussian_process_check(
            s, proc, [(0, 0)], [0.7], 1000, SEED)
        assert worst >= 0.0
        assert rows[0].empirical == pytest.approx(1.0)

    def test_zero_lambda(self):
        worst, rows = chaining.subgaussian_process_check(
            two_point(), chaining.CanonicalProcess(sigma=1.0),
            [(0, 1)], [0.0], 1000, SEED)
        assert rows[0].empirical == pytest.approx(1.0)
        assert rows[0].bound == pytest.approx(1.0)

    def test_gaussian_saturation(self):
        # the canonical increments are exactly Gaussian, so the empirical MGF
        # matches exp(l^2 sigma^2 d^2 / 2) within noise
        proc = chaining.CanonicalProcess(sigma=1.0)
        worst, rows = chaining.subgaussian_process_check(
            two_point(), proc, [(0, 1)], [0.5, -0.5, 1.0], 200000, SEED)
        for row in rows:
            assert row.empirical == pytest.approx(row.bound, abs=4 * row.stderr)
        assert worst >= 0.0

    def test_needs_inputs(self):
        with pytest.raises(ValueError):
            chaining.subgaussian_process_check(
                two_point(), chaining.CanonicalProcess(sigma=1.0), [], [1.0],
                100, SEED)


class TestDenseSequence:
    def test_identical_sets(self):
        s = two_point()
        chk = chaining.dense_sequence_sup_check(
            s, s, chaining.CanonicalProcess(sigma=1.0), 5000, SEED)
        assert chk.fine.mean == pytest.approx(chk.coarse.mean, abs=1e-12)
        assert chk.mesh == 0.0

    def test_grid_refinement(self):
        coarse = chaining.IndexSet(points=np.linspace(0, 1, 11)[:, None])
        fine = chaining.IndexSet(points=np.linspace(0, 1, 101)[:, None])
        proc = chaining.CanonicalProcess(sigma=1.0)
        chk = chaining.dense_sequence_sup_check(coarse, fine, proc, 100000, SEED)
        assert chk.mesh == pytest.approx(0.05, abs=1e-12)
        assert chk.gap_bound == pytest.approx(0.05 * np.sqrt(2 / np.pi), rel=1e-9)
        assert chk.margin >= 0.0
        # supremum over a superset cannot drop
        assert chk.fine.mean >= chk.coarse.mean - 3 * chk.fine.stderr

    def test_2d_refinement(self):
        rng = derive_rng(12, "dense2d")
        base = rng.uniform(0, 1, size=(15, 2))
        extra = rng.uniform(0, 1, size=(60, 2))
        coarse = chaining.IndexSet(points=base)
        fine = chaining.IndexSet(points=np.vstack([base, extra]))
        chk = chaining.dense_sequence_sup_check(
            coarse, fine, chaining.CanonicalProcess(sigma=1.5), 40000, SEED)
        assert chk.margin >= 0.0

    def test_containment_required(self):
        rng = derive_rng(13, "densebad")
        coarse = chaining.IndexSet(points=rng.uniform(0, 1, size=(5, 2)))
        fine = chaining.IndexSet(points=rng.uniform(0, 1, size=(20, 2)))
        with pytest.raises(ValueError):
            chaining.dense_sequence_sup_check(
                coarse, fine, chaining.CanonicalProcess(sigma=1.0), 100, SEED)


class TestDepthDefault:
    def test_two_point_default(self):
        assert chaining.default_depth(two_point(), 1.0) == 2

    def test_coincident_points(self):
        s = chaining.IndexSet(points=np.zeros((3, 2)))
        assert chaining.default_depth(s, 1.0) == 1
