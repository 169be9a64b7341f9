import io
import json

import numpy as np
import pytest

from torsionzeta.errors import StructuralError
from torsionzeta.fried_dynamics import SuspensionModel, fried_zeta_truncated
from torsionzeta.graded_core import random_gluing_complex
from torsionzeta.report import (
    CSV_COLUMNS,
    complex_to_document,
    document_to_complex,
    dumps_payload,
    load_complex_document,
    save_complex_document,
    write_zeta_csv,
)


def test_document_keeps_blocks_exactly(tmp_path):
    split = random_gluing_complex(3, (2, 3, 1), (0, 1, 1), p=-1)
    path = tmp_path / "complex.json"
    save_complex_document(path, split.complex, split.representatives)
    c, reps = load_complex_document(path)
    assert c.space == split.complex.space
    assert np.array_equal(c.d.to_dense(), split.complex.d.to_dense())
    assert np.array_equal(c.delta.to_dense(), split.complex.delta.to_dense())
    for i, h in split.representatives.items():
        assert np.array_equal(reps[i], h)


def test_hand_document_layout(hand):
    doc = complex_to_document(hand)
    assert doc["degrees"] == [0, 1]
    assert doc["dims"] == [1, 1]
    assert doc["maps"]["d"] == {"shift": 1, "blocks": {"0": [[[2.0, 0.0]]]}}
    assert doc["maps"]["delta"]["blocks"] == {"1": [[[3.0, 0.0]]]}
    assert "h" not in doc
    c, reps = document_to_complex(json.loads(dumps_payload(doc)))
    assert reps is None
    assert c.laplacian().block(0)[0, 0] == pytest.approx(6.0)


@pytest.mark.parametrize("mutate", [
    lambda doc: doc.pop("dims"),
    lambda doc: doc["maps"].update(sideways={"shift": 0, "blocks": {}}),
    lambda doc: doc["maps"]["d"].update(shift=-1),
    lambda doc: doc["maps"]["d"]["blocks"].update({"0": [[1.0, 2.0]]}),
    lambda doc: doc["maps"]["delta"]["blocks"].update({"1": [[[1.0, 0.0]], [[1.0, 0.0]]]}),
])
def test_malformed_documents(hand, mutate):
    doc = complex_to_document(hand)
    mutate(doc)
    with pytest.raises(StructuralError):
        document_to_complex(doc)


def test_payload_is_stable():
    text = dumps_payload({"b": 1, "a": [1.5, 2]})
    assert text == '{\n  "a": [\n    1.5,\n    2\n  ],\n  "b": 1\n}\n'


def test_zeta_csv():
    model = SuspensionModel(((2, 1), (1, 1)))
    evaluations = [fried_zeta_truncated(model, s, 20) for s in (2.0, 0.0)]
    buffer = io.StringIO()
    write_zeta_csv(evaluations, buffer)
    lines = buffer.getvalue().splitlines()
    assert lines[0] == ",".join(CSV_COLUMNS)
    first = dict(zip(CSV_COLUMNS, lines[1].split(",")))
    assert first["K"] == "20"
    assert first["sigma_re"] == "2"
    assert float(first["value_re"]) == evaluations[0].value.real
    # σ = 0 is a pole of the closed form
    second = dict(zip(CSV_COLUMNS, lines[2].split(",")))
    assert second["closed_re"] == "nan"
    assert second["abs_diff"] == "nan"
