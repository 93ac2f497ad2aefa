import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pcveil.allocation import (
    AllocationConfig,
    AllocationWarning,
    allocate_rotations,
    allocate_scalars,
    allocation_count,
    build_assignment,
    validate_kinds,
)
from pcveil.errors import ExcludedKindError, InvalidParameterError


def smallest_cube_root_oracle(n):
    a = 1
    while a**3 < n:
        a += 1
    return a


class TestAllocationCount:
    @pytest.mark.parametrize("n,expected", [(1, 1), (10, 3), (40, 4)])
    def test_examples(self, n, expected):
        assert allocation_count(n) == expected

    @pytest.mark.parametrize("n", [1, 2, 7, 8, 9, 26, 27, 28, 63, 64, 65, 999_999, 1_000_000])
    def test_boundaries_match_oracle(self, n):
        assert allocation_count(n) == smallest_cube_root_oracle(n)

    @given(st.integers(min_value=1, max_value=1_000_000))
    @settings(deadline=None)
    def test_cube_brackets_class_count(self, n):
        a = allocation_count(n)
        assert a**3 >= n
        assert a == 1 or (a - 1) ** 3 < n

    def test_rejects_non_positive(self):
        with pytest.raises(InvalidParameterError):
            allocation_count(0)


class TestAllocateRotations:
    def test_degenerate_ranges_give_zero_triple(self):
        out = allocate_rotations(1, 0.0, 0.0, seed=5)
        assert np.array_equal(out, [[0.0, 0.0, 0.0]])

    def test_ranges_and_distinctness(self):
        out = allocate_rotations(10, 15.0, 120.0, seed=23)
        assert out.shape == (10, 3)
        assert (out[:, 0] >= 0).all() and (out[:, 0] <= 15.0).all()
        assert (out[:, 1] >= 0).all() and (out[:, 1] <= 15.0).all()
        assert (out[:, 2] >= 0).all() and (out[:, 2] <= 120.0).all()
        assert len({tuple(row) for row in out}) == 10

    def test_deterministic(self):
        a = allocate_rotations(10, 15.0, 120.0, seed=23)
        b = allocate_rotations(10, 15.0, 120.0, seed=23)
        assert np.array_equal(a, b)
        c = allocate_rotations(10, 15.0, 120.0, seed=24)
        assert not np.array_equal(a, c)


class TestAllocateScalars:
    def test_degenerate_interval(self):
        assert np.array_equal(allocate_scalars(3, 0.7, 0.7, 1, "scale"), [0.7, 0.7, 0.7])

    def test_range(self):
        out = allocate_scalars(10, 0.6, 0.8, seed=23, purpose="scale")
        assert ((out >= 0.6) & (out <= 0.8)).all()

    def test_deterministic_and_purpose_keyed(self):
        a = allocate_scalars(5, 0.0, 1.0, 7, "twist")
        assert np.array_equal(a, allocate_scalars(5, 0.0, 1.0, 7, "twist"))
        assert not np.array_equal(a, allocate_scalars(5, 0.0, 1.0, 7, "shear-s"))

    def test_rejects_inverted_bounds(self):
        with pytest.raises(InvalidParameterError):
            allocate_scalars(3, 1.0, 0.5, 1, "scale")


class TestValidateKinds:
    def test_normalizes_to_canonical_order(self):
        assert validate_kinds("SR") == ("R", "S")
        assert validate_kinds(("H", "W", "S", "R")) == ("R", "S", "W", "H")

    @pytest.mark.parametrize("tok", ["T", "F", "L"])
    def test_excluded_families_rejected(self, tok):
        with pytest.raises(ExcludedKindError):
            validate_kinds(tok)

    def test_unknown_and_duplicate_rejected(self):
        with pytest.raises(InvalidParameterError):
            validate_kinds("X")
        with pytest.raises(InvalidParameterError):
            validate_kinds("RR")
        with pytest.raises(InvalidParameterError):
            validate_kinds("")


class TestBuildAssignment:
    def test_degenerate_scaling_warns_and_repeats(self):
        config = AllocationConfig(kinds=("S",), scale_lo=0.7, scale_hi=0.7)
        with pytest.warns(AllocationWarning):
            out = build_assignment(2, config)
        assert [a.scale for a in out] == [0.7, 0.7]

    def test_defaults_produce_distinct_in_range_assignments(self):
        out = build_assignment(10, AllocationConfig(kinds=("R", "S"), seed=23))
        assert len(out) == 10
        triples = {a.rotation_deg for a in out}
        assert len(triples) == 10
        for a in out:
            assert 0 <= a.rotation_deg[0] <= 15 and 0 <= a.rotation_deg[1] <= 15
            assert 0 <= a.rotation_deg[2] <= 120
            assert 0.6 <= a.scale <= 0.8
            assert a.twist_deg is None and a.shear is None

    def test_taper_kind_rejected(self):
        with pytest.raises(ExcludedKindError):
            AllocationConfig(kinds=("R", "T"))

    def test_full_kind_set(self):
        out = build_assignment(4, AllocationConfig(kinds=("R", "S", "W", "H"), seed=1))
        for a in out:
            assert 0 <= a.twist_deg <= 20
            plane, s, t = a.shear
            assert plane == "xy" and 0 <= s <= 0.4 and 0 <= t <= 0.4

    def test_deterministic(self):
        config = AllocationConfig(kinds=("R", "S", "W", "H"), seed=23)
        assert build_assignment(25, config) == build_assignment(25, config)

    def test_rejects_empty_dataset(self):
        with pytest.raises(InvalidParameterError):
            build_assignment(0, AllocationConfig())


class TestConfigValidation:
    def test_scale_lower_bound_must_be_positive(self):
        with pytest.raises(InvalidParameterError):
            AllocationConfig(scale_lo=0.0, scale_hi=0.5)

    def test_inverted_ranges_rejected(self):
        with pytest.raises(InvalidParameterError):
            AllocationConfig(scale_lo=0.9, scale_hi=0.8)
        with pytest.raises(InvalidParameterError):
            AllocationConfig(twist_lo_deg=10.0, twist_hi_deg=5.0)
        with pytest.raises(InvalidParameterError):
            AllocationConfig(shear_lo=0.5, shear_hi=0.2)

    def test_negative_angle_ranges_rejected(self):
        with pytest.raises(InvalidParameterError):
            AllocationConfig(slight_deg=-1.0)
