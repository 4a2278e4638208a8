"""CSV/JSON dumps of operators, superoperators and coefficient sets."""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .hilbert import MatrixOperator, QuantizationContext
from .lindblad import FokkerPlanckCoeffs
from .superop import SuperOperator

__all__ = ["write_matrix_csv", "read_matrix_csv", "write_operator_csv", "read_operator_csv",
           "write_superop_csv", "read_superop_csv", "write_structured_json",
           "read_structured_json", "read_fokker_planck_json", "write_fokker_planck_json"]

IDENTITY_REF = "identity"


def write_matrix_csv(path, m: np.ndarray, tol: float = 0.0) -> None:
    """Rows ``i,j,re,im`` (0-based) for entries with modulus above ``tol``."""
    m = np.asarray(m)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["i", "j", "re", "im"])
        for i, j in zip(*np.nonzero(np.abs(m) > tol)):
            z = complex(m[i, j])
            w.writerow([int(i), int(j), format(z.real, ".17g"), format(z.imag, ".17g")])


def read_matrix_csv(path, shape: tuple[int, int]) -> np.ndarray:
    m = np.zeros(shape, dtype=complex)
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        if header != ["i", "j", "re", "im"]:
            raise ValueError(f"{path}: unexpected header {header}")
        for row in r:
            i, j = int(row[0]), int(row[1])
            m[i, j] = float(row[2]) + 1j * float(row[3])
    return m


def write_operator_csv(path, op: MatrixOperator) -> None:
    write_matrix_csv(path, op.data)


def read_operator_csv(path, ctx: QuantizationContext) -> MatrixOperator:
    return MatrixOperator(ctx, read_matrix_csv(path, (ctx.size, ctx.size)))


def write_superop_csv(path, s: SuperOperator) -> None:
    write_matrix_csv(path, s.dense())


def read_superop_csv(path, ctx: QuantizationContext) -> SuperOperator:
    side = ctx.size ** 2
    return SuperOperator(ctx, matrix=read_matrix_csv(path, (side, side)))


def write_structured_json(path, s: SuperOperator) -> None:
    """Structured form as a JSON list; factor matrices go to sibling CSV files."""
    if not s.has_terms:
        raise ValueError("superoperator has no structured form")
    path = Path(path)
    stem = path.with_suffix("")
    entries = []
    for t, (c, L, R) in enumerate(s.terms):
        refs = []
        for side, m in (("left", L), ("right", R)):
            if m is None:
                refs.append(IDENTITY_REF)
                continue
            name = f"{stem.name}_{t}_{side}.csv"
            write_matrix_csv(path.parent / name, m)
            refs.append(name)
        entries.append({"coeff_re": c.real, "coeff_im": c.imag,
                        "left_ref": refs[0], "right_ref": refs[1]})
    path.write_text(json.dumps(entries, indent=1) + "\n")


def read_structured_json(path, ctx: QuantizationContext) -> SuperOperator:
    path = Path(path)
    d = ctx.size
    terms = []
    for e in json.loads(path.read_text()):
        mats = [None if e[k] == IDENTITY_REF else read_matrix_csv(path.parent / e[k], (d, d))
                for k in ("left_ref", "right_ref")]
        terms.append((complex(e["coeff_re"], e["coeff_im"]), *mats))
    return SuperOperator(ctx, terms)


def read_fokker_planck_json(path) -> FokkerPlanckCoeffs:
    return FokkerPlanckCoeffs.from_dict(json.loads(Path(path).read_text()))


def write_fokker_planck_json(path, c: FokkerPlanckCoeffs) -> None:
    d = {k: v for k, v in c.to_dict().items() if v is not None}
    Path(path).write_text(json.dumps(d, indent=1) + "\n")
