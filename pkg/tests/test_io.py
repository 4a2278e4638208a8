import json

import numpy as np
import pytest

from dynquant.hilbert import QuantizationContext
from dynquant.io import (read_fokker_planck_json, read_matrix_csv, read_operator_csv,
                         read_structured_json, read_superop_csv, write_fokker_planck_json,
                         write_matrix_csv, write_operator_csv, write_structured_json,
                         write_superop_csv)
from dynquant.lindblad import FokkerPlanckCoeffs, build_explicit_superop
from dynquant.superop import build_P1, superop_max_diff


def test_matrix_roundtrip(tmp_path, rng):
    m = rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5))
    m[2, 3] = 0
    path = tmp_path / "m.csv"
    write_matrix_csv(path, m)
    assert path.read_text().splitlines()[0] == "i,j,re,im"
    np.testing.assert_array_equal(read_matrix_csv(path, (5, 5)), m)


def test_bad_header(tmp_path):
    path = tmp_path / "m.csv"
    path.write_text("a,b,c,d\n")
    with pytest.raises(ValueError):
        read_matrix_csv(path, (2, 2))


def test_operator_and_superop_roundtrip(tmp_path):
    ctx = QuantizationContext(hbar=0.5, dim=6)
    write_operator_csv(tmp_path / "q.csv", ctx.p())
    np.testing.assert_array_equal(read_operator_csv(tmp_path / "q.csv", ctx).data, ctx.p().data)
    s = build_P1(ctx)
    write_superop_csv(tmp_path / "s.csv", s)
    assert superop_max_diff(read_superop_csv(tmp_path / "s.csv", ctx), s) == 0.0


def test_structured_roundtrip(tmp_path):
    ctx = QuantizationContext(hbar=1.0, dim=6)
    c = FokkerPlanckCoeffs(d_qq=0.1, d_pp=0.2, c_qp=1.0, c_pq=-1.0, c_pp=0.1)
    s = build_explicit_superop(c, ctx)
    path = tmp_path / "gen.json"
    write_structured_json(path, s)
    entries = json.loads(path.read_text())
    assert set(entries[0]) == {"coeff_re", "coeff_im", "left_ref", "right_ref"}
    assert any(e["left_ref"] == "identity" or e["right_ref"] == "identity" for e in entries)
    np.testing.assert_array_equal(read_structured_json(path, ctx).dense(), s.dense())


def test_fokker_planck_json(tmp_path):
    c = FokkerPlanckCoeffs(d_qq=0.1, d_pp=0.2, c_qp=1.0, c_pq=-1.0, c_pp=0.1)
    write_fokker_planck_json(tmp_path / "c.json", c)
    assert "h" not in json.loads((tmp_path / "c.json").read_text())
    assert read_fokker_planck_json(tmp_path / "c.json") == c
