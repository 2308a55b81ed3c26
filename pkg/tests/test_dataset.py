import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hpsplit.dataset import (DataSet, apply_log_transform, denormalize_target,
                             load_table, normalize, normalize_target_value,
                             save_table)
from hpsplit.errors import InputError, LoadError, TransformError


def tiny(tmp_path, text, name="data.csv"):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


class TestLoadTable:
    def test_shape(self, tmp_path):
        p = tiny(tmp_path, "id,target,d1,d2\na,1.0,2,3\nb,2.0,4,5\nc,3.0,6,7\n")
        ds = load_table(p)
        assert ds.features.shape == (3, 2)
        assert ds.ids == ("a", "b", "c")
        assert ds.descriptor_names == ("d1", "d2")

    def test_duplicate_id_named(self, tmp_path):
        p = tiny(tmp_path, "id,target,d1\nx,1,2\nx,3,4\n")
        with pytest.raises(LoadError, match="'x'"):
            load_table(p)

    def test_ragged_row_named(self, tmp_path):
        p = tiny(tmp_path, "id,target,d1\na,1,2\nb,3\n")
        with pytest.raises(LoadError, match=":3"):
            load_table(p)

    def test_non_numeric_cell_named(self, tmp_path):
        p = tiny(tmp_path, "id,target,d1\na,1,oops\n")
        with pytest.raises(LoadError, match="d1"):
            load_table(p)

    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(0)
        ds = DataSet([f"c{i}" for i in range(7)], rng.normal(size=(7, 3)),
                     rng.normal(size=7), ["a", "b", "c"])
        p = tmp_path / "out.csv"
        save_table(ds, p)
        back = load_table(p)
        assert back.ids == ds.ids
        assert np.array_equal(back.features, ds.features)
        assert np.array_equal(back.targets, ds.targets)
        save_table(back, tmp_path / "out2.csv")
        assert (tmp_path / "out.csv").read_bytes() == (tmp_path / "out2.csv").read_bytes()

    def test_preserves_row_order(self, tmp_path):
        p = tiny(tmp_path, "id,target,d\nz,1,1\na,2,2\nm,3,3\n")
        assert load_table(p).ids == ("z", "a", "m")


class TestLogTransform:
    def test_log_identities(self):
        ds = DataSet(["a", "b"], [[0.0], [0.0]], [1.0, math.e], ["d"])
        out = apply_log_transform(ds, 0.0)
        assert out.targets == pytest.approx([0.0, 1.0])

    def test_small_offset_of_zero(self):
        ds = DataSet(["a", "b"], [[0.0], [0.0]], [0.0, 1.0], ["d"])
        out = apply_log_transform(ds, 1e-8)
        assert out.targets[0] == pytest.approx(math.log(1e-8))

    def test_domain_edge_rejected(self):
        ds = DataSet(["a", "b"], [[0.0], [0.0]], [-0.5, 1.0], ["d"])
        with pytest.raises(TransformError, match="'a'"):
            apply_log_transform(ds, 0.5)


class TestNormalize:
    def test_target_range_maps_to_unit(self):
        ds = DataSet(["a", "b"], [[0.0], [1.0]], [56.1, 3607.5], ["d"])
        out, rec = normalize(ds)
        assert out.targets == pytest.approx([0.0, 1.0])
        assert rec.target_min == 56.1 and rec.target_max == 3607.5

    def test_constant_column_flagged(self):
        ds = DataSet(["a", "b", "c"], [[5.0, 1], [5.0, 2], [5.0, 3]], [1, 2, 3],
                     ["k", "d"])
        out, rec = normalize(ds)
        assert np.array_equal(out.features[:, 0], [0, 0, 0])
        assert rec.constant_columns == (0,)

    def test_midpoint(self):
        ds = DataSet(["a", "b", "c"], [[2.0], [4.0], [6.0]], [0, 1, 2], ["d"])
        out, _ = normalize(ds)
        assert out.features[:, 0] == pytest.approx([0.0, 0.5, 1.0])

    def test_idempotent(self):
        rng = np.random.default_rng(3)
        ds = DataSet([str(i) for i in range(10)], rng.normal(size=(10, 4)),
                     rng.normal(size=10), list("wxyz"))
        once, _ = normalize(ds)
        twice, _ = normalize(once)
        assert np.abs(twice.features - once.features).max() <= 1e-12
        assert np.abs(twice.targets - once.targets).max() <= 1e-12

    def test_too_small_rejected(self):
        ds = DataSet(["a"], [[1.0]], [1.0], ["d"])
        with pytest.raises(InputError):
            normalize(ds)


class TestDenormalize:
    def rec(self):
        ds = DataSet(["a", "b"], [[0.0], [1.0]], [-8.0, 3.416], ["d"])
        return normalize(ds)[1]

    def test_endpoints(self):
        rec = self.rec()
        assert denormalize_target(0.0, rec) == pytest.approx(-8.0)
        assert denormalize_target(1.0, rec) == pytest.approx(3.416)

    def test_quarter_point(self):
        # 0.25 of the way through [-8.0, 3.416] is -8 + 0.25*11.416 = -5.146
        assert denormalize_target(0.25, self.rec()) == pytest.approx(-5.146)

    def test_round_trip_with_log(self):
        ds = DataSet(["a", "b", "c"], [[0.0], [0.5], [1.0]], [0.5, 2.0, 9.0], ["d"])
        logged = apply_log_transform(ds, 1e-8)
        normed, rec = normalize(logged, log_offset=1e-8)
        for orig, v in zip(ds.targets, normed.targets):
            assert denormalize_target(v, rec) == pytest.approx(orig, abs=1e-9)
            assert normalize_target_value(orig, rec) == pytest.approx(v, abs=1e-9)

    def test_degenerate_record_rejected(self):
        ds = DataSet(["a", "b"], [[0.0], [1.0]], [2.0, 2.0], ["d"])
        _, rec = normalize(ds)
        with pytest.raises(InputError):
            denormalize_target(0.5, rec)

    @given(st.floats(min_value=0.0, max_value=1.0))
    @settings(max_examples=50, deadline=None)
    def test_normalize_denormalize_identity(self, v):
        rec = self.rec()
        a = denormalize_target(v, rec)
        assert normalize_target_value(a, rec) == pytest.approx(v, abs=1e-9)
