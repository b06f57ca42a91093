import numpy as np
import pytest

from kahler import csv_reader, csv_writer


def test_multi_item_columns_are_expanded(tmp_path):
    filename = tmp_path / "data.csv"
    with open(filename, "w", newline="") as csvfile:
        writer = csv_writer.CSVWriter(
            csvfile,
            ["t", "z", "g", "n"],
            [csv_writer.DOUBLE, csv_writer.COMPLEX, csv_writer.VECTOR2D, csv_writer.INT],
        )
        writer.writeheader()
        writer.writerow({"t": 0.5, "z": 1.0 - 2.0j, "g": (3.0, 4.0), "n": 7})
        writer.writecolumns({"t": [1.5], "z": [0.25j], "g": [(0.0, 1.0)], "n": [8]})
    with open(filename) as csvfile:
        header = csvfile.readline().strip()
    assert header == "t,z_0,z_1,g_0,g_1,n"
    with open(filename) as csvfile:
        data = csv_reader.CSVReader(csvfile)
    assert data.get_samples() == 2
    assert np.allclose(data.get_complex("z"), [1.0 - 2.0j, 0.25j])
    assert data.g_1.tolist() == [4.0, 1.0]
    assert data.n.tolist() == [7.0, 8.0]


def test_empty_file_warns(tmp_path, caplog):
    filename = tmp_path / "empty.csv"
    filename.write_text("a,b\n")
    with open(filename) as csvfile:
        data = csv_reader.CSVReader(csvfile)
    assert data.get_samples() == 0
    assert data.a.size == 0
    assert "No data read" in caplog.text


def test_unknown_type_is_rejected(tmp_path):
    with open(tmp_path / "x.csv", "w", newline="") as csvfile:
        with pytest.raises(ValueError):
            csv_writer.CSVWriter(csvfile, ["a"], ["QUATERNION"])
        with pytest.raises(ValueError):
            csv_writer.CSVWriter(csvfile, ["a", "b"], [csv_writer.DOUBLE])
