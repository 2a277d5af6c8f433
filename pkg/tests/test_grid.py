import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fedkmeans.errors import DataError, GridRangeError
from fedkmeans.grid import (
    GridSpec,
    fit_scale,
    flatten_index,
    grid_for,
    unflatten_index,
)


class TestFitScale:
    def test_degenerate_dimension_centers(self):
        t = fit_scale(np.array([[3.0]]))
        assert t.apply(np.array([[3.0]]))[0, 0] == 0.0
        assert t.invert(np.array([[0.0]]))[0, 0] == 3.0

    def test_minmax_to_faces(self):
        t = fit_scale(np.array([[0.0], [10.0]]))
        out = t.apply(np.array([[0.0], [10.0]]))
        assert out.tolist() == [[-0.5], [0.5]]

    def test_affine_map(self):
        t = fit_scale(np.array([[-2.0], [0.0], [2.0]]))
        out = t.apply(np.array([[-2.0], [0.0], [2.0]]))
        assert np.allclose(out, [[-0.5], [0.0], [0.5]])

    def test_roundtrip_relative_error(self):
        rng = np.random.default_rng(0)
        data = rng.random((50, 4)) * 100 - 30
        t = fit_scale(data)
        back = t.invert(t.apply(data))
        assert np.max(np.abs(back - data) / np.maximum(np.abs(data), 1)) < 1e-12

    def test_rejects_nonfinite(self):
        with pytest.raises(DataError):
            fit_scale(np.array([[np.nan], [1.0]]))
        with pytest.raises(DataError):
            fit_scale(np.array([[np.inf]]))


class TestQuantize:
    def test_examples_quarter_step(self):
        g = GridSpec(gamma=0.25, dim=1)
        assert g.quantize(np.array([0.0]))[0] == 0
        assert g.quantize(np.array([0.3]))[0] == 1
        # midpoint tie breaks toward the lower integer
        assert g.quantize(np.array([0.375]))[0] == 1

    def test_tiebreak_matches_argmin_scan(self):
        g = GridSpec(gamma=0.25, dim=1)
        for y in np.linspace(-0.5, 0.5, 2001):
            a = int(g.quantize(np.array([y]))[0])
            cands = range(-3, 4)
            best = min(cands, key=lambda j: (abs(y - 0.25 * j), j))
            assert a == best, y

    @settings(max_examples=150, deadline=None)
    @given(st.floats(min_value=-0.5, max_value=0.5),
           st.sampled_from([1, 2, 3, 4, 5, 8, 10]))
    def test_reconstruction_within_half_step(self, y, b):
        g = GridSpec(gamma=1.0 / b, dim=1)
        a = g.quantize(np.array([y]))
        assert abs(g.reconstruct(a)[0] - y) <= g.gamma / 2 + 1e-12

    def test_out_of_range_rejected(self):
        g = GridSpec(gamma=0.25, dim=1)
        with pytest.raises(GridRangeError):
            g.quantize(np.array([0.51]))

    def test_per_dim_coordinate_range(self):
        # the closed cube reaches B+1 per-dimension values, odd or even B
        for b in (1, 2, 3, 4, 5, 8, 9):
            g = GridSpec(gamma=1.0 / b, dim=1)
            seen = set()
            for y in np.linspace(-0.5, 0.5, 4 * b + 1):
                seen.add(int(g.coords(g.quantize(np.array([y])))[0]))
            assert seen == set(range(b + 1)), (b, seen)
            assert g.bins_per_dim == b + 1

    def test_idempotent(self):
        g = GridSpec(gamma=0.2, dim=3)
        rng = np.random.default_rng(1)
        for _ in range(100):
            y = rng.random(3) - 0.5
            q = g.quantize(y)
            assert np.array_equal(g.quantize(g.reconstruct(q)), q)

    def test_distortion_bound(self):
        g = GridSpec(gamma=0.125, dim=4)
        rng = np.random.default_rng(2)
        for _ in range(200):
            y = rng.random(4) - 0.5
            rec = g.reconstruct(g.quantize(y))
            assert np.linalg.norm(y - rec) <= np.sqrt(4) * g.gamma / 2 + 1e-12


class TestFlatten:
    def test_examples(self):
        assert flatten_index(np.array([0, 0]), 2) == 1
        assert flatten_index(np.array([1, 1]), 2) == 4
        assert flatten_index(np.array([1, 0, 1]), 3) == 11

    def test_bijection_exhaustive(self):
        seen = set()
        for a in range(3):
            for b in range(3):
                for c in range(3):
                    seen.add(flatten_index(np.array([a, b, c]), 3))
        assert seen == set(range(1, 28))
        for j in range(1, 82):
            assert flatten_index(unflatten_index(j, 3, 4), 3) == j

    def test_range_errors(self):
        with pytest.raises(GridRangeError):
            flatten_index(np.array([2, 0]), 2)
        with pytest.raises(GridRangeError):
            unflatten_index(0, 2, 2)
        with pytest.raises(GridRangeError):
            unflatten_index(5, 2, 2)


class TestGridEndToEnd:
    def test_bin_roundtrip_and_center(self):
        g = GridSpec(gamma=0.25, dim=2)
        rng = np.random.default_rng(3)
        for _ in range(200):
            y = rng.random(2) - 0.5
            j = g.bin_index(y)
            assert 1 <= j <= g.total_bins
            center = g.bin_center(j)
            assert np.all(np.abs(center - y) <= g.gamma / 2 + 1e-12)
            assert g.bin_index(center) == j

    def test_total_bins(self):
        g = GridSpec(gamma=0.25, dim=3)
        assert g.total_bins == 5 ** 3

    def test_auto_gamma_rule(self):
        g = grid_for(None, 2, 30000)
        assert g.bins_nominal == 173
        assert abs(g.gamma - 1 / 173) < 1e-15
        g2 = grid_for(0.5, 2, 100)
        assert g2.gamma == 0.5

    def test_shared_shift_mode(self):
        base = GridSpec(gamma=0.25, dim=2)
        shift = np.array([0.1, 0.2])
        g = GridSpec(gamma=0.25, dim=2, shift=shift)
        assert g.bins_per_dim == base.bins_per_dim + 1
        rng = np.random.default_rng(4)
        for _ in range(100):
            y = rng.random(2) - 0.5
            j = g.bin_index(y)
            assert 1 <= j <= g.total_bins
            assert np.all(np.abs(g.bin_center(j) - y) <= g.gamma / 2 + 1e-12)

    def test_invalid_specs(self):
        with pytest.raises(ValueError):
            GridSpec(gamma=0.3, dim=1)   # 1/gamma not integral
        with pytest.raises(ValueError):
            GridSpec(gamma=0.0, dim=1)
        with pytest.raises(ValueError):
            GridSpec(gamma=0.25, dim=2, shift=np.array([0.3, 0.0]))
