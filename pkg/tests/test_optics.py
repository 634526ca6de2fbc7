import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qiup import ObjectMap, OpticalConfig
from qiup.errors import EvanescentMode, TotalInternalReflection, UnitarityViolation
from qiup.optics import (
    idler_angle_for_signal,
    object_point_for_pixel,
    pixel_to_signal_angle,
    reflection_magnitude,
    refract_in,
    refract_out,
    sample_object,
)

CFG = OpticalConfig()
coords = st.floats(-5e-3, 5e-3, allow_nan=False)


class TestAngles:
    @pytest.mark.parametrize("rho, expected", [
        ((0.0, 0.0), (0.0, 0.0)),
        ((0.2, 0.0), (math.pi / 4, 0.0)),
        ((1e-3, 0.0), (4.99996e-3, 0.0)),
    ])
    def test_pixel_to_signal_angle(self, rho, expected):
        assert pixel_to_signal_angle(rho, CFG) == pytest.approx(expected, rel=1e-6, abs=1e-15)

    def test_refract_out(self):
        assert refract_out(0.0, 1.6, CFG) == 0.0
        # arcsin(1.6 sin 0.1), series check: x + x^3/6 + 3x^5/40 with x = 0.1597335
        assert refract_out(0.1, 1.6, CFG) == pytest.approx(0.1604206, abs=1e-7)

    def test_refract_round_trip(self):
        assert refract_in(refract_out(0.2, 1.84, CFG), 1.84, CFG) == pytest.approx(0.2, rel=1e-14)

    def test_total_internal_reflection(self):
        with pytest.raises(TotalInternalReflection):
            refract_out(1.0, 1.84, CFG)

    @pytest.mark.parametrize("theta_S, expected", [(0.0, 0.0), (0.02, 0.038278), (-0.02, -0.038278)])
    def test_idler_angle(self, theta_S, expected):
        assert idler_angle_for_signal(theta_S, CFG) == pytest.approx(expected, abs=1e-6)

    def test_degenerate_idler_angle(self):
        cfg = CFG.with_(lambda_I=CFG.lambda_S)
        assert idler_angle_for_signal(0.3, cfg) == pytest.approx(0.3, rel=1e-15)

    def test_evanescent_idler(self):
        with pytest.raises(EvanescentMode):
            idler_angle_for_signal(1.0, CFG)


class TestObjectPoint:
    def test_axis(self):
        assert object_point_for_pixel((0.0, 0.0), CFG) == (0.0, 0.0)

    def test_reference_point(self):
        x, y = object_point_for_pixel((1e-3, 0.0), CFG)
        # exact chain arctan -> arcsin scale -> tan
        theta_I = math.asin(CFG.lambda_I / CFG.lambda_S * math.sin(math.atan(1e-3 / CFG.f_0)))
        assert x == pytest.approx(CFG.f_I * math.tan(theta_I), rel=1e-12)
        assert x == pytest.approx(0.9568219597e-3, rel=1e-9)
        assert x == pytest.approx(0.95675e-3, abs=1e-7)
        assert y == 0.0

    @given(coords, coords)
    def test_odd_symmetry(self, x, y):
        a = object_point_for_pixel((x, y), CFG)
        b = object_point_for_pixel((-x, -y), CFG)
        assert b == (-a[0], -a[1])

    @given(coords, coords)
    def test_unit_magnification_limit(self, x, y):
        cfg = CFG.with_(lambda_I=CFG.lambda_S, f_I=CFG.f_0)
        px, py = object_point_for_pixel((x, y), cfg)
        assert px == pytest.approx(x, rel=1e-12, abs=1e-18)
        assert py == pytest.approx(y, rel=1e-12, abs=1e-18)

    def test_small_angle_scale(self):
        x, _ = object_point_for_pixel((1e-6, 0.0), CFG)
        M = (CFG.f_0 / CFG.f_I) * (CFG.lambda_S / CFG.lambda_I)
        assert x == pytest.approx(1e-6 / M, rel=1e-9)


class TestObjectMap:
    def test_uniform_empty(self):
        s = sample_object(ObjectMap.uniform(1.0), (3e-4, -1e-4))
        assert s.T == 1.0 and s.R_prime_mag == 0.0

    def test_uniform_block(self):
        s = sample_object(ObjectMap.uniform(0.0), (1e-4, 1e-4))
        assert s.T == 0.0 and s.R_prime_mag == 1.0

    def test_bilinear_midpoint(self):
        obj = ObjectMap(np.array([[0.0, 1.0]]), 1.0)
        s = sample_object(obj, (0.0, 0.0))
        assert s.T == pytest.approx(0.5)
        assert s.R_prime_mag == pytest.approx(math.sqrt(0.75))

    def test_sample_nodes_exact(self):
        values = np.array([[0.1, 0.2j], [-0.3, 0.4 + 0.1j]])
        obj = ObjectMap(values, 2.0)
        x0, x1, y0, y1 = obj.extent()
        assert complex(obj.transmission(x0, y0)) == values[0, 0]
        assert complex(obj.transmission(x1, y1)) == values[1, 1]

    @pytest.mark.parametrize("policy, expected", [("transparent", 1.0), ("opaque", 0.0)])
    def test_boundary_policy(self, policy, expected):
        obj = ObjectMap(np.full((3, 3), 0.5j), 1e-4, boundary_policy=policy)
        assert complex(obj.transmission(1.0, 0.0)) == expected

    def test_center_offset(self):
        obj = ObjectMap(np.array([[0.0, 1.0]]), 1.0, center=(10.0, 0.0))
        assert complex(obj.transmission(10.5, 0.0)) == 1.0
        assert complex(obj.transmission(0.0, 0.0)) == 1.0  # outside, transparent

    def test_unitarity_violation(self):
        with pytest.raises(UnitarityViolation):
            ObjectMap(np.array([[1.01]]), 1.0)

    def test_values_read_only(self):
        obj = ObjectMap.uniform(0.5)
        with pytest.raises(ValueError):
            obj.values[0, 0] = 1.0

    @given(
        st.lists(st.tuples(st.floats(0, 1), st.floats(-math.pi, math.pi)), min_size=9, max_size=9),
        st.floats(-2.0, 2.0), st.floats(-2.0, 2.0),
    )
    def test_interpolation_stays_in_unit_disk(self, samples, x, y):
        values = np.array([m * np.exp(1j * p) for m, p in samples]).reshape(3, 3)
        s = sample_object(ObjectMap(values, 1.0), (x, y))
        assert abs(s.T) <= 1.0 + 1e-12
        assert abs(s.T) ** 2 + s.R_prime_mag ** 2 == pytest.approx(1.0, abs=1e-12)

    def test_reflection_magnitude_vectorised(self):
        T = np.array([1.0, 0.0, 0.6j])
        assert reflection_magnitude(T) == pytest.approx([0.0, 1.0, 0.8])
