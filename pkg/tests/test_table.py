import numpy as np
import pytest

from pgmx import DataTable, InputError, TableMeta


def test_cell_bounds_checked():
    with pytest.raises(InputError):
        DataTable(["a"], [2], np.array([[2]], dtype=np.uint8))


def test_duplicate_names_rejected():
    with pytest.raises(InputError):
        DataTable(["a", "a"], [2, 2], np.zeros((1, 2), dtype=np.uint8))


def test_meta_row_count_must_match():
    meta = TableMeta(target="a", mode="node", n=5)
    with pytest.raises(InputError):
        DataTable(["a"], [2], np.zeros((4, 1), dtype=np.uint8), meta=meta)


def test_subset_preserves_order_and_meta():
    meta = TableMeta(target="b", mode="node", n=3, p=0.5)
    data = DataTable(
        ["a", "b", "c"], [2, 4, 2],
        np.array([[0, 3, 1], [1, 0, 0], [0, 2, 1]], dtype=np.uint8), meta=meta,
    )
    sub = data.subset(["c", "a"])
    assert sub.names == ("c", "a")
    assert sub.cardinalities == (2, 2)
    assert sub.rows.tolist() == [[1, 0], [0, 1], [1, 0]]
    assert sub.meta is meta


def test_column_and_unknown_variable():
    data = DataTable(["a", "b"], [2, 2], np.array([[0, 1]], dtype=np.uint8))
    assert data.column("b").tolist() == [1]
    with pytest.raises(InputError):
        data.column("nope")


def test_csv_roundtrip(tmp_path):
    meta = TableMeta(target="1", mode="node", n=4, p=0.25, scheme="mean", seed=9, hops=2, delta=0.1)
    rows = np.array([[0, 1], [2, 3], [1, 1], [3, 0]], dtype=np.uint8)
    data = DataTable(["1", "2"], [4, 4], rows, meta=meta)
    path = tmp_path / "table.csv"
    data.save_csv(path)
    text = path.read_text().splitlines()
    assert text[0] == "1,2"
    assert text[1] == "4,4"
    assert len(text) == 6
    loaded = DataTable.load_csv(path)
    assert loaded == data
    assert loaded.meta == meta
