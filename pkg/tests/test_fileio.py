import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from sparse_altmin.descent import DescentConfig, run_descent
from sparse_altmin.fileio import (
    HEADER_SIZE,
    ConfigError,
    MatrixFormatError,
    decode_scmx,
    encode_scmx,
    format_trace_csv,
    parse_config,
    read_matrix,
    read_trace_csv,
    write_matrix,
    write_trace_csv,
)
from sparse_altmin.genmodel import ModelParams, generate_dictionary, stream


def test_one_by_one_layout():
    data = encode_scmx(np.array([[2.5]]))
    # magic, uint32 version, two uint64 dims, one float64
    assert len(data) == 32 == HEADER_SIZE + 8
    assert data == b"SCMX" + struct.pack("<IQQ", 1, 1, 1) + bytes.fromhex("0000000000000440")
    assert struct.unpack("<d", data[24:])[0] == 2.5


def test_column_major_payload():
    M = np.array([[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]])
    vals = struct.unpack("<6d", encode_scmx(M)[HEADER_SIZE:])
    assert vals == (1.0, 4.0, 2.0, 5.0, 3.0, 6.0)


def test_roundtrip_bitwise(tmp_path):
    M = stream(0, "m").standard_normal((16, 16))
    write_matrix(tmp_path / "m.scmx", M)
    assert read_matrix(tmp_path / "m.scmx").tobytes() == M.tobytes()


def test_csv_roundtrip(tmp_path):
    M = stream(1, "m").standard_normal((5, 7)) * 10.0 ** stream(2, "e").integers(-300, 300, (5, 7))
    write_matrix(tmp_path / "m.csv", M)
    text = (tmp_path / "m.csv").read_text()
    assert text.splitlines()[0] == "5,7"
    back = read_matrix(tmp_path / "m.csv")
    assert np.all(np.abs(back - M) <= np.spacing(np.abs(M)))


@settings(max_examples=30, deadline=None)
@given(M=arrays(float, st.tuples(st.integers(1, 4), st.integers(1, 4)),
                elements=st.floats(allow_nan=False, allow_infinity=False)))
def test_scmx_roundtrip_property(M):
    assert decode_scmx(encode_scmx(M)).tobytes() == np.asarray(M, dtype=float).tobytes()


class TestParseErrors:
    good = encode_scmx(np.arange(6.0).reshape(2, 3))

    def test_bad_magic(self):
        with pytest.raises(MatrixFormatError) as info:
            decode_scmx(b"XXXX" + self.good[4:])
        assert info.value.offset == 0

    def test_bad_version(self):
        with pytest.raises(MatrixFormatError) as info:
            decode_scmx(self.good[:4] + struct.pack("<I", 2) + self.good[8:])
        assert info.value.offset == 4

    def test_truncated_header(self):
        with pytest.raises(MatrixFormatError) as info:
            decode_scmx(self.good[:10])
        assert info.value.offset == 10

    def test_truncated_payload(self):
        with pytest.raises(MatrixFormatError, match="expected 48 bytes.*got 40") as info:
            decode_scmx(self.good[:-8])
        assert info.value.offset == HEADER_SIZE + 40

    def test_oversized_payload(self):
        with pytest.raises(MatrixFormatError, match="oversized"):
            decode_scmx(self.good + b"\0" * 8)

    def test_non_finite(self):
        bad = bytearray(self.good)
        bad[HEADER_SIZE + 16 : HEADER_SIZE + 24] = struct.pack("<d", float("nan"))
        with pytest.raises(MatrixFormatError) as info:
            decode_scmx(bytes(bad))
        assert info.value.offset == HEADER_SIZE + 16

    def test_csv_errors(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("2,2\n1,2\n")
        with pytest.raises(MatrixFormatError, match="expected 2 data rows"):
            read_matrix(p)
        p.write_text("2,2\n1,2\n3\n")
        with pytest.raises(MatrixFormatError, match="row 1"):
            read_matrix(p)
        p.write_text("two,2\n")
        with pytest.raises(MatrixFormatError):
            read_matrix(p)


class TestConfig:
    def test_parse(self):
        cfg = parse_config("# model\nn = 64\nm=64 # atoms\n\nrule = simple\neta_scale = 0.25\n")
        assert cfg == {"n": 64, "m": 64, "rule": "simple", "eta_scale": 0.25}

    def test_unknown_key(self):
        with pytest.raises(ConfigError, match="unknown key 'nn'"):
            parse_config("nn = 3")

    def test_missing_required(self):
        with pytest.raises(ConfigError, match="missing required keys: k"):
            parse_config("n = 3\nm = 3", required=("n", "m", "k"))

    def test_malformed(self):
        for text in ("n 3", "n = three", "n = 3\nn = 4"):
            with pytest.raises(ConfigError):
                parse_config(text)


def test_trace_csv(tmp_path):
    params = ModelParams(n=16, m=16, k=2)
    A = generate_dictionary(16, 16, 0)
    _, trace = run_descent(A, A + 0.01, params, DescentConfig("simple", 1.0, 4))
    write_trace_csv(tmp_path / "t.csv", trace)
    header, rows = read_trace_csv(tmp_path / "t.csv")
    assert header == ["iter", "max_col_err", "mean_col_err", "spec_ratio", "grad_norm", "eta"]
    assert rows.shape == (5, 6)
    np.testing.assert_array_equal(rows[:, 0], np.arange(5))
    np.testing.assert_array_equal(rows[:, 1], trace.column("max_col_err"))
    assert (tmp_path / "t.csv").read_bytes() == format_trace_csv(trace).encode()
