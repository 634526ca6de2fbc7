import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qiup import Camera, ObjectMap, OpticalConfig, build_mode_grid
from qiup.engine import grid_rates
from qiup.errors import DegenerateFit, TruncationOverflow
from qiup.fock import (
    FockState,
    ModeRegistry,
    annihilate,
    product_differences,
    product_scaling_check,
    apply_detector_field,
    build_product_state,
    build_superposition_state,
    create,
    oracle_rate,
    oracle_rates,
    photon_number,
)

from conftest import random_object

CFG = OpticalConfig()
ONE = build_mode_grid(CFG, Camera(1, 1, 1e-4))
G_VALUES = (1e-4, 3e-4, 1e-3, 3e-3, 1e-2)


def uniform(T):
    return ObjectMap.uniform(T, pitch=1.0)


def modes(state, pixel=0):
    reg = state.registry
    return {lab: reg.index(lab, pixel) for lab in ("S1", "S2", "I1", "ENV")}


class TestOperators:
    def test_lowering(self):
        s = FockState({((0, 1), (2, 1)): 1.0 + 0j})
        out = annihilate(s, 0)
        assert out.terms == {((2, 1),): 1.0}

    def test_bosonic_factor(self):
        out = annihilate(FockState({((0, 2),): 1.0 + 0j}), 0)
        assert out.terms[((0, 1),)] == pytest.approx(math.sqrt(2))

    def test_vacuum_annihilates_to_zero(self):
        assert len(annihilate(FockState.vacuum(), 3)) == 0

    def test_create_twice(self):
        s = create(create(FockState.vacuum(), 1), 1)
        assert s.terms == {((1, 2),): pytest.approx(math.sqrt(2))}

    def test_truncation(self):
        s = FockState.vacuum(n_max=1)
        with pytest.raises(TruncationOverflow):
            create(create(s, 0), 0)

    def test_registry_unique(self):
        reg = ModeRegistry(3, with_unaligned=True)
        assert len(set(reg.modes)) == len(reg) == 15
        for i in range(len(reg)):
            assert reg.index(*reg.label(i)) == i
        assert ("I2", 0) not in reg.modes


class TestSuperpositionState:
    def test_single_mode_amplitudes(self):
        g = 1e-3
        s = build_superposition_state(None, CFG, ONE, phi_P=0.0, pair_scale=g)
        m = modes(s)
        assert s.amplitude({}) == 1.0
        assert s.amplitude({m["S1"]: 1, m["I1"]: 1}) == pytest.approx(g)
        assert s.amplitude({m["S2"]: 1, m["I1"]: 1}) == pytest.approx(g)
        assert len(s) == 3

    def test_empty_object_has_no_environment(self):
        s = build_superposition_state(None, CFG, build_mode_grid(CFG, Camera.square(3, 1e-4)))
        env = {s.registry.index("ENV", k) for k in range(9)}
        assert not any(m in env for key in s.terms for m, _ in key)

    def test_block_keeps_idler_only_in_first_branch(self):
        s = build_superposition_state(uniform(0.0), CFG, ONE)
        m = modes(s)
        with_idler = [key for key in s.terms if dict(key).get(m["I1"])]
        assert with_idler == [tuple(sorted(((m["S1"], 1), (m["I1"], 1))))]

    def test_occupations_bounded_and_pruned(self):
        grid = build_mode_grid(CFG, Camera.square(3, 1e-4))
        s = build_product_state(random_object(np.random.default_rng(0)), CFG, grid)
        for key, amp in s.terms.items():
            assert all(0 < n <= s.n_max for _, n in key)
            assert abs(amp) > 1e-15

    @settings(max_examples=25, deadline=None)
    @given(st.floats(0, 1), st.floats(-math.pi, math.pi), st.floats(-5, 5))
    def test_second_branch_weight_independent_of_object(self, mag, arg, phi):
        g = 1e-3
        s = build_superposition_state(uniform(mag * np.exp(1j * arg)), CFG, ONE, phi_P=phi, pair_scale=g)
        m = modes(s)
        weight = sum(abs(a) ** 2 for k, a in s.terms.items() if dict(k).get(m["S2"]) == 1)
        assert weight == pytest.approx(g * g, rel=1e-12)


class TestProductState:
    def test_second_crystal_off(self):
        cfg = CFG.with_(V_P2=0.0)
        obj = uniform(0.4 * np.exp(0.3j))
        sup = build_superposition_state(obj, cfg, ONE)
        prod = build_product_state(obj, cfg, ONE)
        assert sup.terms == prod.terms

    def test_sqrt2_cross_term(self):
        g = 1e-2
        T = 0.6
        s = build_product_state(uniform(T), CFG, ONE, phi_P=0.0, pair_scale=g)
        m = modes(s)
        amp = s.amplitude({m["S1"]: 1, m["I1"]: 2, m["S2"]: 1})
        assert amp == pytest.approx(g * g * T * math.sqrt(2), rel=1e-12)

    @pytest.mark.parametrize("g", [1e-3, 1e-2])
    def test_norm(self, g):
        s = build_product_state(None, CFG, ONE, pair_scale=g)
        assert s.norm2() - (1 + 2 * g * g) == pytest.approx(0.0, abs=3 * g ** 4)


class TestDetectorField:
    def test_reduces_photon_number_by_one(self):
        grid = build_mode_grid(CFG, Camera.square(2, 1e-4))
        s = build_product_state(random_object(np.random.default_rng(1)), CFG, grid, pair_scale=0.1)
        before = {photon_number(k) for k in s.terms}
        out = apply_detector_field(s, 1, CFG, grid)
        assert {photon_number(k) for k in out.terms} <= {n - 1 for n in before if n > 0}

    def test_vacuum_gives_zero(self):
        vac = FockState.vacuum(registry=ModeRegistry(1))
        assert len(apply_detector_field(vac, 0, CFG, ONE)) == 0


class TestOracleRate:
    def test_constructive_single_mode(self):
        s = build_superposition_state(None, CFG, ONE, phi_P=0.0)
        assert oracle_rate(s, 0, CFG, ONE) == pytest.approx(4.0, rel=1e-12)

    @pytest.mark.parametrize("phi", [0.0, 1.3, 3.0])
    def test_block_has_no_interference(self, phi):
        s = build_superposition_state(uniform(0.0), CFG, ONE, phi_P=phi)
        assert oracle_rate(s, 0, CFG, ONE) == pytest.approx(2.0, rel=1e-12)

    @settings(max_examples=25, deadline=None)
    @given(st.floats(0, 1), st.floats(-math.pi, math.pi), st.floats(0, 2 * math.pi))
    def test_difference_law(self, mag, arg, phi):
        obj = uniform(mag * np.exp(1j * arg))
        r = [oracle_rate(build_superposition_state(obj, CFG, ONE, phi_P=p), 0, CFG, ONE) for p in (0.0, math.pi)]
        assert r[0] - r[1] == pytest.approx(4 * mag * math.cos(arg), abs=1e-10)
        assert min(r) >= -1e-14

    @pytest.mark.parametrize("v2", [1.0, 0.5, 0.3 * np.exp(1.1j)])
    @pytest.mark.parametrize("envelope", ["strict", "sinc"])
    def test_matches_engine(self, v2, envelope):
        cfg = CFG.with_(V_P2=v2, V_P1=0.8 * np.exp(-0.4j), delta_S0=0.7, phi_I0=-0.2, C0=1.9,
                        tilt=(1e-4, -2e-4), envelope=envelope)
        grid = build_mode_grid(cfg, Camera.square(5, 8e-4))
        obj = random_object(np.random.default_rng(7), pitch=2e-4)
        for phi in (0.0, 2.0, 4.5):
            state = build_superposition_state(obj, cfg, grid, phi_P=phi)
            analytic = grid_rates(grid, phi, obj)
            np.testing.assert_allclose(oracle_rates(state, cfg, grid), analytic, rtol=1e-10, atol=1e-10)

    def test_conjugation_witness(self):
        for arg, same in ((0.0, True), (1.0, False)):
            obj = uniform(0.7 * np.exp(1j * arg))
            a = oracle_rate(build_superposition_state(obj, CFG, ONE, phi_P=0.4), 0, CFG, ONE)
            b = oracle_rate(build_superposition_state(obj, CFG, ONE, phi_P=0.4, conjugate_object=False), 0, CFG, ONE)
            assert (abs(a - b) < 1e-12) is same
        analytic = grid_rates(ONE, 0.4, obj)[0]
        assert a == pytest.approx(analytic, rel=1e-12)


class TestProductScaling:
    @pytest.mark.parametrize("arg", [0.0, math.pi / 3])
    def test_exponent(self, arg):
        slope = product_scaling_check(CFG, uniform(np.exp(1j * arg)), ONE, G_VALUES)
        assert 1.9 <= slope <= 2.1

    def test_second_crystal_off(self):
        diffs = product_differences(CFG.with_(V_P2=0.0), None, ONE, G_VALUES)
        assert np.all(diffs == 0.0)
        with pytest.raises(DegenerateFit):
            product_scaling_check(CFG.with_(V_P2=0.0), None, ONE, G_VALUES)

    def test_narrow_span(self):
        with pytest.raises(ValueError):
            product_scaling_check(CFG, None, ONE, (1e-3, 2e-3))
