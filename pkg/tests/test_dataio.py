import hashlib

import h5py
import numpy as np
import pytest

from pdesuite import dataio
from pdesuite.metrics import MetricReport


def _sha(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


def test_file_name_roundtrip_and_validation():
    fn = dataio.FileName.from_values("advection", {"beta": 0.4}, {"Ns": 1024, "Nt": 201, "T": 2.0})
    text = fn.render()
    assert text == "advection--beta=0.4--Ns=1024_Nt=201_T=2.0.h5"
    assert dataio.FileName.parse("/some/dir/" + text) == fn
    assert dataio.FileName.from_values("swe", {}, {}).render() == "swe--default--default.h5"
    with pytest.raises(ValueError):
        dataio.FileName("a--b", "x", "y")
    with pytest.raises(ValueError):
        dataio.FileName.parse("nonsense.h5")


def test_meta_yaml_roundtrip():
    meta = {"b": (1, 2), "a": np.float64(0.5), "nested": {"x": np.arange(3)}}
    back = dataio.load_meta(dataio.dump_meta(meta))
    assert back == {"a": 0.5, "b": [1, 2], "nested": {"x": [0, 1, 2]}}


@pytest.mark.parametrize("precision", ["f32", "f64"])
def test_write_read_roundtrip(tmp_path, precision):
    rng = np.random.default_rng(0)
    arrays = {"tensor": rng.normal(size=(3, 5, 8, 1))}
    coords = {"x-coordinate": np.linspace(0, 1, 8)}
    ds = dataio.write_dataset(tmp_path / "a.h5", "advection", arrays, {"pde": "advection"}, precision, coords)
    assert ds.group == "advection" and ds.meta["precision"] == precision
    dtype = dataio.PRECISIONS[precision]
    assert ds["tensor"].dtype == dtype
    np.testing.assert_array_equal(ds["tensor"], arrays["tensor"].astype(dtype))
    np.testing.assert_array_equal(ds.coords["x-coordinate"], coords["x-coordinate"])
    with h5py.File(tmp_path / "a.h5") as f:
        assert list(f.keys()) == ["advection"]
        assert isinstance(f["advection"].attrs[dataio.META_ATTR], str)


def test_out_of_order_writes_are_byte_identical(tmp_path):
    rng = np.random.default_rng(1)
    data = rng.normal(size=(6, 4, 4))
    paths = []
    for name, order in (("in.h5", range(6)), ("out.h5", [3, 0, 5, 1, 2, 4])):
        with dataio.DatasetWriter(tmp_path / name, "g", {"u": (4, 4)}, 6, {"k": 1}) as w:
            for i in order:
                w.write_sample(i, {"u": data[i]})
        paths.append(tmp_path / name)
    assert _sha(paths[0]) == _sha(paths[1])


def test_skip_compacts_rows(tmp_path):
    with dataio.DatasetWriter(tmp_path / "s.h5", "g", {"u": (2,)}, 4, {}) as w:
        w.write_sample(1, {"u": np.ones(2)})
        w.skip(0)
        w.skip(2)
        w.write_sample(3, {"u": np.full(2, 3.0)})
        assert w.rows_written == 2
    ds = dataio.read_dataset(tmp_path / "s.h5")
    np.testing.assert_array_equal(ds["u"], [[1, 1], [3, 3]])


def test_writer_errors_remove_partial_file(tmp_path):
    p = tmp_path / "p.h5"
    with pytest.raises(dataio.DatasetError):
        with dataio.DatasetWriter(p, "g", {"u": (2,)}, 3, {}) as w:
            w.write_sample(0, {"u": np.zeros(2)})
    assert not p.exists()
    with pytest.raises(ValueError):
        with dataio.DatasetWriter(p, "g", {"u": (2,)}, 3, {}) as w:
            w.write_sample(0, {"u": np.zeros(3)})
    assert not p.exists()
    with dataio.DatasetWriter(p, "g", {"u": (2,)}, 2, {}) as w:
        w.write_sample(0, {"u": np.zeros(2)})
        with pytest.raises(ValueError):
            w.write_sample(0, {"u": np.zeros(2)})
        with pytest.raises(IndexError):
            w.write_sample(5, {"u": np.zeros(2)})
        w.write_sample(1, {"u": np.zeros(2)})


def test_read_errors(tmp_path):
    with pytest.raises(dataio.DatasetError, match="no such"):
        dataio.read_dataset(tmp_path / "missing.h5")
    junk = tmp_path / "junk.h5"
    junk.write_bytes(b"not hdf5 at all")
    with pytest.raises(dataio.DatasetError):
        dataio.read_dataset(junk)
    good = tmp_path / "good.h5"
    dataio.write_dataset(good, "g", {"u": np.zeros((2, 64, 64))}, {})
    trunc = tmp_path / "trunc.h5"
    trunc.write_bytes(good.read_bytes()[: good.stat().st_size // 2])
    with pytest.raises(dataio.DatasetError):
        dataio.read_dataset(trunc)
    two = tmp_path / "two.h5"
    with h5py.File(two, "w") as f:
        f.create_group("a")
        f.create_group("b")
    with pytest.raises(dataio.DatasetError, match="exactly one group"):
        dataio.read_dataset(two)


def test_report_text_and_json_roundtrip(tmp_path):
    rep = MetricReport({"RMSE": 0.1, "fRMSE low": 1.0 / 3.0, "max error": 2e-17}, {"note": "x"})
    txt = dataio.format_report_table(rep)
    assert dataio.parse_report_table(txt) == rep.values
    js, tx = dataio.emit_report(rep, tmp_path / "out" / "evaluate--adv--Ns=8_T=2.0")
    assert js.name == "evaluate--adv--Ns=8_T=2.0.json" and tx.name.endswith(".0.txt")
    back = dataio.load_report(js)
    assert back.values == rep.values and back.metadata == rep.metadata
