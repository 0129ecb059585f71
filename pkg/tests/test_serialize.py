import json

import numpy as np
import pytest

from qmstab import ModelSpec, Verdict, pauli, psd_check
from qmstab.serialize import (
    FormatError,
    complex_matrix_from_json,
    complex_matrix_to_json,
    dumps_canonical,
    emit_series,
    jsonable,
    load_model,
    load_operator,
    model_from_json,
    model_to_json,
    save_model,
    save_operator,
)

from conftest import FIXTURES


class TestComplexMatrixFormat:
    def test_round_trip(self, rng):
        a = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        back = complex_matrix_from_json(complex_matrix_to_json(a))
        np.testing.assert_array_equal(a, back)

    def test_rejects_ragged(self):
        with pytest.raises(FormatError):
            complex_matrix_from_json([[[1.0, 0.0]], [[1.0, 0.0], [0.0, 0.0]]])

    def test_rejects_non_square(self):
        with pytest.raises(FormatError):
            complex_matrix_from_json([[[1.0, 0.0], [0.0, 0.0]]])


class TestModelFiles:
    def test_fixture_round_trip_is_stable(self, tmp_path):
        model, labels = load_model(FIXTURES / "twolevel.json")
        p1 = tmp_path / "a.json"
        p2 = tmp_path / "b.json"
        save_model(model, p1, labels)
        model2, labels2 = load_model(p1)
        save_model(model2, p2, labels2)
        assert p1.read_bytes() == p2.read_bytes()
        assert labels == labels2

    def test_all_fixture_models_parse(self):
        for name in (
            "oscillator_n40.json",
            "oscillator_n60.json",
            "oscillator_unstable_n40.json",
            "twolevel.json",
            "twoqubit.json",
            "twoqubit_dissipative.json",
            "qubit_decay.json",
        ):
            model, _ = load_model(FIXTURES / name)
            assert model.dim >= 2

    def test_missing_field(self):
        with pytest.raises(FormatError, match="couplings"):
            model_from_json({"dim": 2, "hamiltonian": complex_matrix_to_json(np.eye(2))})

    def test_dim_mismatch(self):
        doc = {
            "dim": 3,
            "hamiltonian": complex_matrix_to_json(np.eye(2)),
            "couplings": [complex_matrix_to_json(np.eye(2))],
        }
        with pytest.raises(FormatError, match="dim"):
            model_from_json(doc)

    def test_non_hermitian_hamiltonian(self):
        doc = model_to_json(ModelSpec(pauli("z"), [pauli("x")]))
        doc["hamiltonian"][0][1] = [5.0, 0.0]
        with pytest.raises(FormatError, match="Hermitian"):
            model_from_json(doc)

    def test_operator_file_forms(self, tmp_path):
        a = pauli("y")
        save_operator(a, tmp_path / "op.json")
        np.testing.assert_array_equal(load_operator(tmp_path / "op.json"), a)
        (tmp_path / "bare.json").write_text(json.dumps(complex_matrix_to_json(a)))
        np.testing.assert_array_equal(load_operator(tmp_path / "bare.json"), a)


class TestSeries:
    def test_csv_format(self, tmp_path):
        path = tmp_path / "s.csv"
        emit_series([0.0, 0.5, 1.0], [1.0, 1.0, 1.0], path)
        lines = path.read_text().splitlines()
        assert lines[0] == "t,value"
        assert lines[1] == "0,1"
        assert len(lines) == 4

    def test_csv_precision(self, tmp_path):
        path = tmp_path / "s.csv"
        value = 1.0 / 3.0
        emit_series([0.0], [value], path)
        stored = float(path.read_text().splitlines()[1].split(",")[1])
        assert stored == value  # 17 significant digits round-trip exactly

    def test_empty_series_rejected(self, tmp_path):
        with pytest.raises(FormatError, match="empty"):
            emit_series([], [], tmp_path / "s.csv")

    def test_svg_chart(self, tmp_path):
        path = tmp_path / "s.svg"
        t = np.linspace(0, 5, 50)
        emit_series(t, np.exp(-t), path, fmt="svg", name="w")
        text = path.read_text()
        assert text.startswith("<svg")
        assert "polyline" in text
        assert ">t<" in text and ">w<" in text
        assert "http" not in text.replace("http://www.w3.org/2000/svg", "")


class TestCanonicalJson:
    def test_sorted_and_deterministic(self):
        doc = {"b": [1.0, 2.0], "a": {"y": 1, "x": [[1.0, 0.0], [0.0, 1.0]]}}
        s1 = dumps_canonical(doc)
        s2 = dumps_canonical(json.loads(s1))
        assert s1 == s2
        assert s1.index('"a"') < s1.index('"b"')

    def test_jsonable_on_results(self):
        report = psd_check(np.diag([-1.0, 0.0]))
        doc = jsonable(report)
        assert doc["verdict"] == "fails"
        assert doc["witness"]["eigenvalue"] == -1.0
        json.dumps(doc)  # fully serializable

    def test_jsonable_verdict(self):
        assert jsonable(Verdict.HOLDS) == "holds"
        assert jsonable({"v": Verdict.INCONCLUSIVE}) == {"v": "inconclusive"}
