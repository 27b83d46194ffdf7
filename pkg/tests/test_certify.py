"""Sup-norm bound arithmetic and empirical certificate soundness."""

import numpy as np
import pytest

from fieldcast import (
    Density,
    apply,
    certify_solution,
    exterior_bound,
    interior_bound,
)
from fieldcast.certify import (
    empirical_mismatches,
    exterior_sup_constant,
    interior_sup_constant,
    sample_in_ball,
    scenario_difference_fields,
)


class TestBoundArithmetic:
    def test_zero_mismatch_zero_bound(self):
        assert interior_bound(0.0, 2.0, 2.5, 2) == 0.0
        assert exterior_bound(0.0, 13.0, 15.0, 3) == 0.0

    def test_interior_constant_2d(self):
        # (a'+a) / (|B_1| a' (a'-a)) with |B_1| = pi: 4.5 / (pi*2.5*0.5)
        c = interior_sup_constant(2.0, 2.5, 2)
        assert c == pytest.approx(4.5 / (np.pi * 2.5 * 0.5), rel=1e-15)
        assert c == pytest.approx(1.1459155902616464, rel=1e-12)
        m = 0.37
        assert interior_bound(m, 2.0, 2.5, 2) == pytest.approx(
            c * np.sqrt(5 * np.pi) * m, rel=1e-15
        )

    def test_interior_constant_3d(self):
        # 5 / ((4 pi / 3) * 3 * 1)
        c = interior_sup_constant(2.0, 3.0, 3)
        assert c == pytest.approx(5.0 / ((4 * np.pi / 3) * 3.0), rel=1e-15)
        assert c == pytest.approx(0.39788735772973843, rel=1e-12)

    def test_exterior_constant_2d(self):
        # (r+r') / (|B_1| r' (r-r')): 28 / (pi*13*2)
        c = exterior_sup_constant(13.0, 15.0, 2)
        assert c == pytest.approx(28.0 / (np.pi * 13.0 * 2.0), rel=1e-15)
        assert c == pytest.approx(0.3427952620440822, rel=1e-12)

    def test_exterior_gap_doubling_shrinks_bound_3d(self):
        tight = exterior_bound(1.0, 2.0, 3.0, 3)   # gap 1
        loose = exterior_bound(1.0, 2.0, 4.0, 3)   # gap 2
        assert loose < tight
        # The squared-gap term alone would divide by 4; the numerator
        # growth makes the drop slightly less than 4x.
        assert tight / loose == pytest.approx(4 * 5 / 6, rel=1e-12)

    def test_homogeneity_in_mismatch(self):
        m = 0.123
        assert interior_bound(2 * m, 2.0, 2.5, 2) == 2 * interior_bound(m, 2.0, 2.5, 2)
        assert exterior_bound(2 * m, 13.0, 15.0, 3) == 2 * exterior_bound(m, 13.0, 15.0, 3)

    def test_blowup_as_gap_closes(self):
        gaps = [0.5, 0.2, 0.05, 0.01, 0.001]
        bounds = [interior_bound(1.0, 2.0, 2.0 + g, 3) for g in gaps]
        assert all(b2 > b1 for b1, b2 in zip(bounds, bounds[1:]))
        assert bounds[-1] > 1e5 * bounds[0]

    def test_degenerate_radii_rejected(self):
        with pytest.raises(ValueError):
            interior_bound(1.0, 2.5, 2.0, 2)
        with pytest.raises(ValueError):
            exterior_bound(1.0, 15.0, 13.0, 2)
        with pytest.raises(ValueError, match="nonnegative"):
            interior_bound(-1.0, 2.0, 2.5, 2)

    def test_conservative_dominates_sharp(self):
        for dim in (2, 3):
            cons = interior_bound(1.0, 2.0, 2.5, dim)
            sharp = interior_bound(1.0, 2.0, 2.5, dim, sharp=True)
            assert cons == pytest.approx(dim * sharp, rel=1e-15)
            assert cons >= sharp


class TestCertifySolution:
    def test_exact_data_gives_vanishing_bounds(self, demo2d_parts):
        s, antenna, controls, K, v = demo2d_parts
        rng = np.random.default_rng(5)
        h = Density(rule=antenna, values=rng.normal(size=antenna.node_count))
        exact_v = apply(K, h)
        cert = certify_solution(K, h, exact_v, s)
        scale = exact_v.norm()
        for entry in list(cert.regions) + [cert.exterior]:
            assert entry.bound_conservative <= 1e-9 * scale

    def test_certificate_structure(self, demo2d_solution):
        s, K, v, h, report = demo2d_solution
        cert = certify_solution(K, h, v, s)
        assert len(cert.regions) == 2
        for entry in list(cert.regions) + [cert.exterior]:
            assert entry.bound_conservative >= entry.bound_sharp >= 0
            assert entry.bound_conservative == pytest.approx(
                entry.constant_conservative * entry.l1_factor * entry.mismatch_l2,
                rel=1e-15,
            )
        # Residuals feeding the certificate are the solve's block residuals.
        for entry, res in zip(list(cert.regions) + [cert.exterior],
                              report.block_residuals):
            assert entry.mismatch_l2 == pytest.approx(res, rel=1e-12)

    def test_solved_density_within_bounds(self, demo2d_solution):
        s, K, v, h, report = demo2d_solution
        cert = certify_solution(K, h, v, s)
        rng = np.random.default_rng(s.seed)
        maxima, exterior_max = empirical_mismatches(
            h, scenario_difference_fields(s), s, rng, n_samples=500
        )
        for entry, observed in zip(cert.regions, maxima):
            assert observed <= entry.bound_conservative
        assert exterior_max <= cert.exterior.bound_conservative

    def test_random_densities_never_beat_their_bounds(self, demo2d_parts):
        # Soundness does not depend on the density being a solution.
        s, antenna, controls, K, v = demo2d_parts
        rng = np.random.default_rng(71)
        fields = scenario_difference_fields(s)
        for _ in range(5):
            h = Density(rule=antenna, values=rng.normal(size=antenna.node_count))
            cert = certify_solution(K, h, v, s)
            maxima, exterior_max = empirical_mismatches(h, fields, s, rng, n_samples=200)
            for entry, observed in zip(cert.regions, maxima):
                assert observed <= entry.bound_conservative
            assert exterior_max <= cert.exterior.bound_conservative


class TestSampling:
    def test_ball_samples_stay_inside(self):
        rng = np.random.default_rng(1)
        pts = sample_in_ball(rng, (1.0, -2.0), 1.5, 2, 1000)
        assert np.max(np.linalg.norm(pts - np.array([1.0, -2.0]), axis=1)) <= 1.5
