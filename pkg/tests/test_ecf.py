import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shotdeconv.ecf import (
    EcfGrid,
    Histogram,
    build_histogram,
    ecf_deviation,
    ecf_direct,
    ecf_from_histogram,
    histogram_cf_bounds,
)
from shotdeconv.errors import InvalidParameterError, ResourceLimitError
from shotdeconv.model import ModelParams, PointMass

finite_floats = st.floats(
    min_value=-1e6, max_value=1e6, allow_nan=False, allow_infinity=False
)


class TestBuildHistogram:
    def test_basic_binning(self):
        hist = build_histogram(np.array([0.2, 0.7, 1.2]), 0.5)
        assert hist.l_min == 0 and hist.l_max == 2
        assert np.allclose(hist.mass, [1 / 3, 1 / 3, 1 / 3])
        assert np.allclose(hist.centers, [0.25, 0.75, 1.25])

    def test_exact_multiple_singleton(self):
        # a sample sitting exactly on a bin edge still yields one valid bin
        hist = build_histogram(np.array([2.0]), 1.0)
        assert hist.l_min == 2 and hist.l_max == 2
        assert hist.mass[0] == 1.0

    def test_upper_edge_closed(self):
        # the maximum lands in the top bin even when it is an exact edge
        hist = build_histogram(np.array([0.25, 1.0]), 0.5)
        assert hist.l_min == 0 and hist.l_max == 1
        assert np.allclose(hist.mass, [0.5, 0.5])

    def test_negative_values(self):
        hist = build_histogram(np.array([-1.2]), 0.5)
        assert hist.l_min == -3
        assert hist.centers[0] == pytest.approx(-1.25)

    def test_invalid_width(self):
        with pytest.raises(InvalidParameterError):
            build_histogram(np.array([1.0]), 0.0)

    def test_empty_sample(self):
        with pytest.raises(InvalidParameterError):
            build_histogram(np.array([]), 1.0)

    @settings(max_examples=60, deadline=None)
    @given(
        values=st.lists(finite_floats, min_size=1, max_size=60),
        width=st.floats(min_value=1e-3, max_value=1e3, allow_nan=False),
    )
    def test_mass_properties(self, values, width):
        arr = np.array(values)
        if (arr.max() - arr.min()) / width > 1e6:
            width = (arr.max() - arr.min()) / 1e6
        hist = build_histogram(arr, width)
        assert abs(float(hist.mass.sum()) - 1.0) <= 1e-12
        assert np.all(hist.mass >= 0)
        # every observation lies within the covered range
        assert hist.l_min * width <= arr.min() + 1e-9 * max(1.0, abs(arr.min()))
        assert arr.max() <= (hist.l_max + 1) * width + 1e-9 * max(1.0, abs(arr.max()))

    def test_bin_count_cap(self):
        with pytest.raises(ResourceLimitError, match="bins"):
            build_histogram(np.array([0.0, 1e6]), 1e-6)


class TestHistogramType:
    def test_mass_must_sum_to_one(self):
        with pytest.raises(InvalidParameterError, match="sum to 1"):
            Histogram(1.0, 0, 1, np.array([0.5, 0.4]))

    def test_mass_length(self):
        with pytest.raises(InvalidParameterError, match="length"):
            Histogram(1.0, 0, 2, np.array([0.5, 0.5]))

    def test_l_order(self):
        with pytest.raises(InvalidParameterError):
            Histogram(1.0, 3, 2, np.array([1.0]))


class TestEcfDirect:
    def test_two_point_sample(self):
        phi, dphi = ecf_direct(np.array([1.0, 2.0]), 0.5)
        expected_phi = (cmath.exp(0.5j) + cmath.exp(1.0j)) / 2
        expected_dphi = 1j * (1.0 * cmath.exp(0.5j) + 2.0 * cmath.exp(1.0j)) / 2
        assert phi == pytest.approx(expected_phi, rel=1e-14)
        assert dphi == pytest.approx(expected_dphi, rel=1e-14)

    def test_at_zero(self):
        values = np.array([3.0, 5.0, 7.0])
        phi, dphi = ecf_direct(values, 0.0)
        assert phi == pytest.approx(1.0 + 0.0j, abs=1e-15)
        assert dphi == pytest.approx(1j * values.mean(), rel=1e-14)

    def test_array_input(self):
        phi, dphi = ecf_direct(np.array([1.0, 4.0]), np.array([0.0, 0.3, -0.3]))
        assert phi.shape == (3,) and dphi.shape == (3,)
        assert phi[1] == pytest.approx(np.conj(phi[2]), rel=1e-14)

    def test_nonfinite_u(self):
        with pytest.raises(InvalidParameterError):
            ecf_direct(np.array([1.0]), float("nan"))


class TestEcfFromHistogram:
    def test_matches_naive_sum(self):
        rng = np.random.default_rng(12)
        values = rng.gamma(2.0, 1.0, size=400)
        hist = build_histogram(values, 0.05)
        grid = ecf_from_histogram(hist, 0.125, 32)
        centers = hist.centers
        for j in (-32, -7, 0, 7, 32):
            u = j * 0.125
            naive_phi = np.sum(hist.mass * np.exp(1j * u * centers))
            naive_dphi = np.sum(hist.mass * 1j * centers * np.exp(1j * u * centers))
            k = j + 32
            assert grid.phi[k] == pytest.approx(naive_phi, abs=1e-11)
            assert grid.phi_prime[k] == pytest.approx(naive_dphi, abs=1e-10)

    def test_grid_frequencies(self):
        hist = build_histogram(np.array([0.5, 1.5]), 1.0)
        grid = ecf_from_histogram(hist, 0.25, 4)
        assert np.allclose(grid.u, np.arange(-4, 5) * 0.25)
        assert grid.phi[4] == pytest.approx(1.0 + 0.0j, abs=1e-12)

    def test_negative_support(self):
        values = np.array([-3.0, -1.0, 2.0])
        hist = build_histogram(values, 0.5)
        grid = ecf_from_histogram(hist, 0.2, 8)
        centers = hist.centers
        u = 1.2
        naive = np.sum(hist.mass * np.exp(1j * u * centers))
        assert grid.phi[8 + 6] == pytest.approx(naive, abs=1e-12)

    def test_resource_cap(self):
        hist = build_histogram(np.array([0.5]), 1.0)
        with pytest.raises(ResourceLimitError, match="FFT"):
            ecf_from_histogram(hist, 1e-9, 2**27 + 1)

    def test_invalid_args(self):
        hist = build_histogram(np.array([0.5]), 1.0)
        with pytest.raises(InvalidParameterError):
            ecf_from_histogram(hist, 0.0, 4)
        with pytest.raises(InvalidParameterError):
            ecf_from_histogram(hist, 0.1, 0)


class TestEcfGridType:
    def _mk(self, phi, dphi, step=0.5, half=1):
        return EcfGrid(step, half, np.asarray(phi, complex), np.asarray(dphi, complex))

    def test_unit_at_zero_enforced(self):
        with pytest.raises(InvalidParameterError, match="u=0"):
            self._mk([0.5, 0.9, 0.5], [0.1j, 0.0, -0.1j])

    def test_modulus_cap(self):
        with pytest.raises(InvalidParameterError, match="exceed 1"):
            self._mk([1.5, 1.0, 1.5], [0.0, 0.0, 0.0])

    def test_conjugate_symmetry_enforced(self):
        with pytest.raises(InvalidParameterError, match="conjugate-symmetric"):
            self._mk([0.5 + 0.1j, 1.0, 0.5 + 0.2j], [0.0, 0.0, 0.0])

    def test_antisymmetry_enforced(self):
        with pytest.raises(InvalidParameterError, match="antisymmetric"):
            self._mk([0.5, 1.0, 0.5], [0.3j, 0.1j, -0.3j])

    def test_valid_grid(self):
        grid = self._mk([0.5 - 0.1j, 1.0, 0.5 + 0.1j], [0.2j, 1.0j, 0.2j])
        assert grid.half_count == 1
        assert np.allclose(grid.u, [-0.5, 0.0, 0.5])


class TestHistogramCfBounds:
    def test_bound_shapes(self):
        hist = build_histogram(np.array([0.2, 0.9]), 0.5)
        b1, b2 = histogram_cf_bounds(hist, 2.0)
        assert b1 == pytest.approx(0.5 * 0.5 * 2.0)
        assert b2 > 0

    def test_bounds_hold_randomized(self):
        # the acceptance suite runs 200 triples; this is a quick spot check
        rng = np.random.default_rng(77)
        for _ in range(40):
            n = int(rng.integers(20, 300))
            values = rng.gamma(2.0, 1.5, size=n)
            width = float(rng.uniform(0.02, 0.8))
            u = float(rng.uniform(-15.0, 15.0))
            hist = build_histogram(values, width)
            step = abs(u) if u != 0 else 1.0
            grid = ecf_from_histogram(hist, step, 1)
            hist_phi = grid.phi[2] if u >= 0 else grid.phi[0]
            hist_dphi = grid.phi_prime[2] if u >= 0 else grid.phi_prime[0]
            phi, dphi = ecf_direct(values, u)
            b1, b2 = histogram_cf_bounds(hist, u)
            assert abs(hist_phi - phi) <= b1 + 1e-10
            assert abs(hist_dphi - dphi) <= b2 + 1e-10

    @settings(max_examples=40, deadline=None)
    @given(
        values=st.lists(
            st.floats(min_value=0.0, max_value=50.0, allow_nan=False),
            min_size=2,
            max_size=40,
        ),
        width=st.floats(min_value=0.01, max_value=2.0, allow_nan=False),
        u=st.floats(min_value=0.01, max_value=10.0, allow_nan=False),
    )
    def test_bounds_hold_property(self, values, width, u):
        arr = np.array(values)
        hist = build_histogram(arr, width)
        grid = ecf_from_histogram(hist, u, 1)
        phi, dphi = ecf_direct(arr, u)
        b1, b2 = histogram_cf_bounds(hist, u)
        assert abs(grid.phi[2] - phi) <= b1 + 1e-10
        assert abs(grid.phi_prime[2] - dphi) <= b2 + 1e-10


class TestEcfDeviation:
    def test_structure_and_determinism(self):
        params = ModelParams(2.0, 1.0, 2.0)
        from shotdeconv.model import Exponential

        a = ecf_deviation(params, Exponential(1.0), (200, 400), runs=3, base_seed=5,
                          u_max=4.0, grid_count=17)
        b = ecf_deviation(params, Exponential(1.0), (200, 400), runs=3, base_seed=5,
                          u_max=4.0, grid_count=17)
        assert [r["n"] for r in a] == [200, 400]
        for ra, rb in zip(a, b):
            assert ra["mean_sup"] == rb["mean_sup"]
            assert ra["se"] >= 0.0

    def test_larger_n_smaller_deviation(self):
        params = ModelParams(2.0, 1.0, 2.0)
        from shotdeconv.model import Exponential

        out = ecf_deviation(params, Exponential(1.0), (100, 10_000), runs=5, base_seed=1,
                            u_max=4.0, grid_count=33)
        assert out[1]["mean_sup"] < out[0]["mean_sup"]

    def test_validation(self):
        params = ModelParams(1.0, 1.0, 1.0)
        with pytest.raises(InvalidParameterError):
            ecf_deviation(params, PointMass(1.0), (100,), runs=1, base_seed=0)
        with pytest.raises(InvalidParameterError):
            ecf_deviation(params, PointMass(1.0), (100,), runs=2, base_seed=0, grid_count=10)
