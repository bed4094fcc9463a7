import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cornyield.dataset import (
    Dataset,
    SmallholderScaleConfig,
    SplitSpec,
    VariableSchema,
    aggregate_mean,
    apply_minmax,
    clean,
    counts_from_ratio,
    fit_minmax,
    invert_minmax,
    load_csv,
    merge,
    one_hot,
    onehot_block_names,
    read_schema,
    scale_to_smallholder,
    select_columns,
    split,
    write_csv,
    write_schema,
)
from cornyield.errors import (
    CountMismatchError,
    EmptyDatasetError,
    MalformedCsvError,
    SchemaMismatchError,
    UnknownCategoryError,
)

SCHEMA = (
    VariableSchema("state", "categorical"),
    VariableSchema("rain", "numeric", "mm"),
    VariableSchema("yield_t_ha", "target", "t/ha"),
)


def write_lines(path, lines):
    path.write_text("\n".join(lines) + "\n")
    return path


class TestLoadCsv:
    def test_identity_parse(self, tmp_path):
        p = write_lines(tmp_path / "t.csv",
                        ["state,rain,yield_t_ha", "Abia,1.5,0.7",
                         "Edo,2.5,0.9", "Abia,3.5,1.1"])
        d = load_csv(p, SCHEMA)
        assert d.n_rows == 3
        assert d.labels("state") == ["Abia", "Edo", "Abia"]
        assert list(d.column("rain")) == [1.5, 2.5, 3.5]

    def test_blank_cell_becomes_sentinel(self, tmp_path):
        p = write_lines(tmp_path / "t.csv",
                        ["state,rain,yield_t_ha", "Abia,,0.7"])
        d = load_csv(p, SCHEMA)
        assert np.isnan(d.column("rain")[0])

    def test_header_mismatch(self, tmp_path):
        p = write_lines(tmp_path / "t.csv", ["state,precip,yield_t_ha", "Abia,1,2"])
        with pytest.raises(MalformedCsvError):
            load_csv(p, SCHEMA)

    def test_ragged_row(self, tmp_path):
        p = write_lines(tmp_path / "t.csv", ["state,rain,yield_t_ha", "Abia,1"])
        with pytest.raises(MalformedCsvError):
            load_csv(p, SCHEMA)

    def test_non_numeric_cell(self, tmp_path):
        p = write_lines(tmp_path / "t.csv", ["state,rain,yield_t_ha", "Abia,wet,0.7"])
        with pytest.raises(TypeError):
            load_csv(p, SCHEMA)

    def test_row_ids_from_state(self, tmp_path):
        p = write_lines(tmp_path / "t.csv",
                        ["state,rain,yield_t_ha", "Abia,1,2", "Edo,3,4"])
        assert load_csv(p, SCHEMA).row_ids == ("Abia", "Edo")

    def test_write_read_round_trip(self, tmp_path, small_table):
        path = tmp_path / "out.csv"
        write_csv(small_table, path)
        again = load_csv(path, small_table.schema)
        assert np.array_equal(again.rows, small_table.rows)


class TestClean:
    def make(self, rows):
        return Dataset(SCHEMA, np.asarray(rows, dtype=float),
                       tuple(str(i) for i in range(len(rows))), {"state": ("A", "B")})

    def test_no_op_when_clean(self):
        d = self.make([[0, 1, 2], [1, 3, 4]])
        assert np.array_equal(clean(d).rows, d.rows)

    def test_drops_duplicates_keeping_first(self):
        d = self.make([[0, 1, 2], [0, 1, 2], [1, 3, 4]])
        out = clean(d)
        assert out.n_rows == 2
        assert out.row_ids == ("0", "2")

    def test_drops_missing(self):
        d = self.make([[0, np.nan, 2], [1, 3, 4]])
        assert clean(d).n_rows == 1

    def test_idempotent(self):
        d = self.make([[0, 1, 2], [0, 1, 2], [1, np.nan, 4], [1, 3, 4]])
        once = clean(d)
        assert np.array_equal(clean(once).rows, once.rows)

    def test_everything_removed(self):
        d = self.make([[0, np.nan, 2]])
        with pytest.raises(EmptyDatasetError):
            clean(d)


class TestAggregateMean:
    SIDE = (VariableSchema("state", "categorical"),
            VariableSchema("v", "numeric"))

    def make(self, values, labels=("A", "B")):
        rows = np.column_stack([np.arange(len(values), dtype=float) % len(labels),
                                np.asarray(values, dtype=float)])
        return Dataset(self.SIDE, rows, tuple(labels[: len(values)]),
                       {"state": tuple(labels)})

    def test_single_table_identity(self):
        t = self.make([2.0, 4.0])
        out = aggregate_mean([t], "state")
        assert np.array_equal(out.rows, t.rows)

    def test_two_tables_average(self):
        out = aggregate_mean([self.make([2.0, 8.0]), self.make([4.0, 2.0])], "state")
        assert list(out.column("v")) == [3.0, 5.0]

    def test_four_tables_average(self):
        tables = [self.make([v, v]) for v in (1.0, 2.0, 3.0, 4.0)]
        out = aggregate_mean(tables, "state")
        assert list(out.column("v")) == [2.5, 2.5]

    def test_schema_mismatch(self):
        other = Dataset((VariableSchema("state", "categorical"),
                         VariableSchema("w", "numeric")),
                        np.array([[0.0, 1.0]]), ("A",), {"state": ("A",)})
        with pytest.raises(SchemaMismatchError):
            aggregate_mean([self.make([1.0, 2.0]), other], "state")

    def test_misaligned_keys(self):
        t1 = self.make([1.0, 2.0])
        t2 = self.make([1.0], labels=("A",))
        t2 = Dataset(self.SIDE, t2.rows, t2.row_ids, {"state": ("A", "B")})
        with pytest.raises(SchemaMismatchError):
            aggregate_mean([t1, t2], "state")


class TestSmallholderScaling:
    CFG = SmallholderScaleConfig(E_y=4.0, E_h=3.0, O_t=1000.0, O_h=500.0)

    def test_reference_value_maps_to_expected_max(self):
        assert scale_to_smallholder(1000.0, self.CFG, "yield") == 4.0
        assert scale_to_smallholder(500.0, self.CFG, "hectare") == 3.0

    def test_direct_evaluation(self):
        assert scale_to_smallholder(500.0, self.CFG, "yield") == 2.0

    def test_zero_maps_to_zero(self):
        assert scale_to_smallholder(0.0, self.CFG, "yield") == 0.0

    def test_linearity(self, rng):
        for _ in range(20):
            v, a = rng.uniform(1, 100, 2)
            lhs = scale_to_smallholder(a * v, self.CFG, "hectare")
            rhs = a * scale_to_smallholder(v, self.CFG, "hectare")
            assert lhs == pytest.approx(rhs, rel=1e-12)

    def test_zero_denominator(self):
        bad = SmallholderScaleConfig(E_y=4.0, E_h=3.0, O_t=0.0, O_h=500.0)
        with pytest.raises(ZeroDivisionError):
            scale_to_smallholder(1.0, bad, "yield")


class TestOneHot:
    def test_two_categories(self, tmp_path):
        p = write_lines(tmp_path / "t.csv",
                        ["state,rain,yield_t_ha", "B,1,2", "A,3,4"])
        d = one_hot(load_csv(p, SCHEMA), "state", ["A", "B"])
        assert d.names[:2] == ["state=A", "state=B"]
        assert list(d.rows[0, :2]) == [0.0, 1.0]
        assert list(d.rows[1, :2]) == [1.0, 0.0]

    def test_block_row_sums_are_one(self, small_table):
        states = small_table.levels["state"]
        d = one_hot(small_table, "state", states)
        block = np.column_stack([d.column(n)
                                 for n in onehot_block_names("state", states)])
        assert np.array_equal(block.sum(axis=1), np.ones(d.n_rows))

    def test_single_category(self, tmp_path):
        p = write_lines(tmp_path / "t.csv", ["state,rain,yield_t_ha", "A,1,2", "A,3,4"])
        d = one_hot(load_csv(p, SCHEMA), "state", ["A"])
        assert list(d.column("state=A")) == [1.0, 1.0]

    def test_unknown_category(self, tmp_path):
        p = write_lines(tmp_path / "t.csv", ["state,rain,yield_t_ha", "C,1,2"])
        with pytest.raises(UnknownCategoryError):
            one_hot(load_csv(p, SCHEMA), "state", ["A", "B"])


class TestSplit:
    def test_partition_sizes_and_disjointness(self, small_table):
        n = small_table.n_rows
        spec = SplitSpec(n - 4, 2, 2, seed=9)
        a, b, c = split(small_table, spec)
        assert (a.n_rows, b.n_rows, c.n_rows) == (n - 4, 2, 2)
        ids = list(a.row_ids) + list(b.row_ids) + list(c.row_ids)
        assert sorted(ids) == sorted(small_table.row_ids)

    def test_same_seed_reproduces(self, small_table):
        spec = SplitSpec(small_table.n_rows - 4, 2, 2, seed=7)
        first = split(small_table, spec)
        second = split(small_table, spec)
        for x, y in zip(first, second):
            assert np.array_equal(x.rows, y.rows)

    def test_different_seed_differs(self, small_table):
        n = small_table.n_rows
        a1, _, _ = split(small_table, SplitSpec(n - 4, 2, 2, seed=1))
        a2, _, _ = split(small_table, SplitSpec(n - 4, 2, 2, seed=2))
        assert not np.array_equal(a1.rows, a2.rows)

    def test_count_mismatch(self, small_table):
        with pytest.raises(CountMismatchError):
            split(small_table, SplitSpec(1, 1, 1, seed=0))

    def test_ratio_counts_sum(self):
        assert sum(counts_from_ratio(1632, 0.8, 0.1, 0.1)) == 1632
        assert counts_from_ratio(10, 0.8, 0.1, 0.1) == (8, 1, 1)


class TestMinMax:
    def test_definition(self):
        params = fit_minmax(np.array([[0.0], [5.0], [10.0]]))
        out = apply_minmax(params, np.array([[0.0], [5.0], [10.0]]))
        assert list(out.ravel()) == [0.0, 0.5, 1.0]

    def test_constant_column_rule(self):
        params = fit_minmax(np.array([[7.0], [7.0]]))
        assert list(apply_minmax(params, np.array([[7.0], [7.0]])).ravel()) == [0.0, 0.0]

    def test_out_of_range_passes_through_unclamped(self):
        params = fit_minmax(np.array([[0.0], [10.0]]))
        assert apply_minmax(params, np.array([[20.0]]))[0, 0] == 2.0
        assert apply_minmax(params, np.array([[-10.0]]))[0, 0] == -1.0

    def test_train_rows_in_unit_interval(self, encoded_small):
        x = encoded_small[0]
        params = fit_minmax(x)
        out = apply_minmax(params, x)
        assert out.min() >= 0.0 and out.max() <= 1.0

    @given(st.integers(0, 2 ** 31 - 1))
    @settings(max_examples=25, deadline=None)
    def test_round_trip(self, seed):
        rng = np.random.Generator(np.random.PCG64(seed))
        x = rng.uniform(-100, 100, size=(12, 4))
        params = fit_minmax(x)
        back = invert_minmax(params, apply_minmax(params, x))
        assert np.max(np.abs(back - x)) < 1e-12


class TestMergeAndColumns:
    def test_left_outer_merge_reveals_missing(self, tmp_path):
        left = load_csv(write_lines(tmp_path / "l.csv",
                                    ["state,rain", "A,1", "B,2", "C,3"]),
                        (VariableSchema("state", "categorical"),
                         VariableSchema("rain", "numeric")))
        right = load_csv(write_lines(tmp_path / "r.csv",
                                     ["state,yield_t_ha", "A,0.5", "B,0.8"]),
                         (VariableSchema("state", "categorical"),
                          VariableSchema("yield_t_ha", "target")))
        merged = merge(left, right, "state")
        assert merged.names == ["state", "rain", "yield_t_ha"]
        assert merged.column("yield_t_ha")[0] == 0.5
        assert np.isnan(merged.column("yield_t_ha")[2])
        assert clean(merged).n_rows == 2

    def test_select_columns_preserves_order(self, small_table):
        out = select_columns(small_table, ["silt_pct", "state", "yield_t_ha"])
        assert out.names == ["state", "silt_pct", "yield_t_ha"]

    def test_schema_file_round_trip(self, tmp_path, small_table):
        path = tmp_path / "schema.csv"
        write_schema(small_table.schema, path)
        assert read_schema(path) == small_table.schema
