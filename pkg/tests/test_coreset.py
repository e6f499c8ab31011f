import math

import numpy as np
import pytest

from comboplan.coreset import CoreElement, CoreSet, cmax_bound
from comboplan.linalg import PrecisionState, uncertainty_quad_form
from comboplan.mdp import CoordinationEnv


def fresh_coordination_core(lam=1.0, tau=1.0):
    env = CoordinationEnv()
    fmap = env.feature_map()
    rho = env.reset()
    return CoreSet.seed(rho, (0, 0), fmap, lam=lam, tau=tau), fmap, rho


def element(phi, uncertainty=None):
    return CoreElement(state=None, action=(0,), phi=np.asarray(phi, float),
                       uncertainty=uncertainty)


class TestSeed:
    def test_single_element_with_unset_q(self):
        core, _, _ = fresh_coordination_core()
        assert len(core) == 1
        assert core.elements[0].q is None
        assert core.elements[0].action == (0, 0)

    def test_precision_reconstructs_lam_identity_plus_outer(self):
        core, fmap, rho = fresh_coordination_core(lam=0.25)
        phi = fmap.joint(rho, (0, 0))
        expected = 0.25 * np.eye(2) + np.outer(phi, phi)
        assert np.allclose(core.precision.matrix(), expected, atol=1e-12)


class TestAdd:
    def test_post_add_uncertainty_is_u_over_one_plus_u(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            d = int(rng.integers(1, 7))
            state = PrecisionState.from_features(
                rng.standard_normal((int(rng.integers(0, 5)), d)),
                lam=float(10 ** rng.uniform(-3, 0)),
                dim=d,
            )
            core = CoreSet(elements=[], precision=state, tau=1.0, lam=state.lam)
            phi = rng.standard_normal(d)
            u = uncertainty_quad_form(core.precision, phi)
            core.add(element(phi, uncertainty=u))
            after = uncertainty_quad_form(core.precision, phi)
            assert after == pytest.approx(u / (1.0 + u), rel=1e-9)
            assert after < 1.0

    def test_two_orthonormal_then_any_unit_vector(self):
        state = PrecisionState.identity(2, lam=1.0)
        core = CoreSet(elements=[], precision=state, tau=1.0, lam=1.0)
        core.add(element([1.0, 0.0]))
        core.add(element([0.0, 1.0]))
        rng = np.random.default_rng(1)
        for _ in range(100):
            phi = rng.standard_normal(2)
            phi /= np.linalg.norm(phi)
            assert uncertainty_quad_form(core.precision, phi) <= 1.0 + 1e-12

    def test_clear_q_resets_only_estimates(self):
        core, fmap, rho = fresh_coordination_core()
        core.elements[0].q = 3.0
        core.add(element([0.5, 0.5], uncertainty=2.0))
        core.elements[1].q = 1.0
        core.clear_q()
        assert all(e.q is None for e in core.elements)
        assert len(core) == 2


class TestSizeBound:
    def test_formula_values(self):
        one = cmax_bound(1, 1.0, 1.0)
        expected = math.e / (math.e - 1) * 2.0 * (2.0 * math.log(2.0))
        assert one == pytest.approx(expected, rel=1e-12)
        assert one == pytest.approx(4.3862, abs=5e-4)
        assert cmax_bound(2, 1.0, 1.0) == pytest.approx(2 * one, rel=1e-12)
        assert cmax_bound(64, 1.0, 1.0) == pytest.approx(64 * one, rel=1e-12)

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            cmax_bound(0, 1.0, 1.0)
        with pytest.raises(ValueError):
            cmax_bound(1, 0.0, 1.0)
        with pytest.raises(ValueError):
            cmax_bound(1, 1.0, -2.0)

    def test_streams_respecting_threshold_stay_bounded(self):
        rng = np.random.default_rng(2)
        for trial in range(100):
            d = int(rng.integers(1, 6))
            tau = float(rng.choice([0.25, 0.5, 1.0]))
            lam = float(rng.choice([0.05, 0.3, 1.0]))
            state = PrecisionState.identity(d, lam)
            core = CoreSet(elements=[], precision=state, tau=tau, lam=lam)
            cap = math.ceil(cmax_bound(d, tau, lam))
            rejections = 0
            while rejections < 200:
                phi = rng.standard_normal(d)
                phi /= max(np.linalg.norm(phi), 1e-12)
                u = uncertainty_quad_form(core.precision, phi)
                if u > tau:
                    core.add(element(phi, uncertainty=u))
                    rejections = 0
                else:
                    rejections += 1
            assert len(core) <= cap

    def test_added_elements_remain_in_good_set_for_tau_one(self):
        rng = np.random.default_rng(3)
        d, tau, lam = 4, 1.0, 0.1
        state = PrecisionState.identity(d, lam)
        core = CoreSet(elements=[], precision=state, tau=tau, lam=lam)
        for _ in range(300):
            phi = rng.standard_normal(d)
            phi /= np.linalg.norm(phi)
            if uncertainty_quad_form(core.precision, phi) > tau:
                core.add(element(phi))
            for past in core.elements:
                assert uncertainty_quad_form(core.precision, past.phi) <= tau + 1e-12


class TestDiagnostics:
    def test_json_roundtrip(self):
        import json

        core, _, _ = fresh_coordination_core()
        core.add(element([0.1, 0.2], uncertainty=5.0))
        data = json.loads(core.to_json())
        assert data["count"] == 2
        assert data["insertion_uncertainties"] == [None, 5.0]
        assert data["info_gain"] > 0

    def test_info_gain_matches_dense_logdet(self):
        rng = np.random.default_rng(4)
        lam = 0.2
        state = PrecisionState.identity(3, lam)
        core = CoreSet(elements=[], precision=state, tau=1.0, lam=lam)
        feats = rng.standard_normal((6, 3))
        for phi in feats:
            core.add(element(phi))
        expected = np.linalg.slogdet(np.eye(3) + feats.T @ feats / lam)[1]
        assert core.info_gain() == pytest.approx(expected, abs=1e-9)

    def test_mismatched_q_vector_raises(self):
        core, _, _ = fresh_coordination_core()
        with pytest.raises(ValueError):
            core.q_vector()
