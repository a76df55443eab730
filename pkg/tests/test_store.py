import json

import pytest

from app.config import settings
from app.core.errors import SchemaError
from app.core.factors import SlidingBlockCode
from app.core.fan import FanSet
from app.core.lowering import PointSource, lemma_good_lower
from app.core.subsets import BlockStage, CylinderTree, FinitePointSet, StagedFamily, SubshiftSet
from app.core.symbolic import BiInfinitePoint, Subshift
from app.store.files import (
    FAN,
    dumps,
    load_document,
    load_spec,
    parse_document,
    parse_spec,
    save,
    to_document,
)
from tests.conftest import FULL2_DOC, GOLDEN_DOC


def text(data: dict) -> str:
    return json.dumps(data)


@pytest.fixture
def lowered(full2) -> StagedFamily:
    family, _ = lemma_good_lower(PointSource(full2, BiInfinitePoint.constant(0), 2), 0.2, max_stages=4)
    return family


def test_parse_subshift():
    s = parse_spec(text(GOLDEN_DOC))
    assert isinstance(s, Subshift)
    assert s == Subshift.golden_mean()
    assert s.name == "golden mean"


def test_parse_fan_and_fan_sets():
    assert parse_spec('{"kind": "fan"}') == FAN
    K = parse_spec(text({"kind": "fanset", "parts": {"2": {"kind": "whole", "ambient": FULL2_DOC}}}))
    assert isinstance(K, FanSet)
    assert K.apex and isinstance(K.parts[2], SubshiftSet)


def test_parse_code():
    doc = {
        "kind": "code",
        "source": {"kind": "subshift", "alphabet": 4},
        "target": FULL2_DOC,
        "rule": {"0": 0, "1": 1, "2": 0, "3": 1},
    }
    code = parse_spec(text(doc))
    assert isinstance(code, SlidingBlockCode)
    assert code == SlidingBlockCode.modulo(4, 2)


@pytest.mark.parametrize(
    "data, path",
    [
        ({"kind": "subshift", "alphabet": 2, "forbidden": ["3"]}, "subshift"),
        ({"kind": "subshift", "alphabet": 0}, "subshift.alphabet"),
        ({"kind": "subshift", "alphabet": 2, "colour": "red"}, "subshift.colour"),
        ({"kind": "finite", "ambient": {"kind": "subshift", "alphabet": 0}}, "finite.ambient.alphabet"),
        ({"kind": "tree", "ambient": FULL2_DOC, "depth": 2, "words": ["010"]}, "tree"),
        ({"kind": "staged", "ambient": FULL2_DOC, "limit": "0..0", "resolution": 2,
          "stages": [{"length": 1, "points": ["1..0"], "count": 1}]}, "staged"),
        ({"kind": "nonsense"}, None),
    ],
)
def test_schema_errors_carry_a_path(data, path):
    with pytest.raises(SchemaError) as info:
        parse_document(text(data))
    if path is not None:
        assert info.value.path.startswith(path)
    assert info.value.exit_code == 2


def test_invalid_json():
    with pytest.raises(SchemaError, match="not valid JSON"):
        parse_spec("{kind: subshift")


def test_domain_checks_surface_as_schema_errors():
    # 1 -> 0 is the only way between the two loops
    data = {"kind": "subshift", "alphabet": 2, "forbidden": ["01"], "mixing": True}
    with pytest.raises(SchemaError) as info:
        parse_spec(text(data))
    assert info.value.path == "subshift"


def test_fan_parts_must_be_binary():
    ternary = {"kind": "whole", "ambient": {"kind": "subshift", "alphabet": 3}}
    with pytest.raises(SchemaError):
        parse_spec(text({"kind": "fanset", "parts": {"1": ternary}}))


def test_missing_file(tmp_path):
    with pytest.raises(SchemaError, match="cannot read"):
        load_document(tmp_path / "missing.json")


def test_staged_document_is_canonical(lowered):
    config = settings.run_config(max_stages=4)
    doc_text = dumps(to_document(lowered, config))
    assert doc_text.endswith("\n")
    assert dumps(parse_document(doc_text)) == doc_text
    data = json.loads(doc_text)
    assert data["run_config"]["max_stages"] == 4
    assert data["tool_version"]
    assert data["certificate"]["lengths"] == [1, 3, 6, 10]
    assert data["stages"][0]["block"] == [-1, 1]


def test_staged_document_round_trip(lowered):
    back = parse_spec(dumps(to_document(lowered)))
    assert isinstance(back, StagedFamily)
    assert back.lengths == lowered.lengths
    assert all(isinstance(stage, BlockStage) for stage in back.stages)
    assert back.certificate.floors == lowered.certificate.floors
    assert back.certificate.bounds == lowered.certificate.bounds


def test_sets_round_trip(full2, golden):
    sets = [
        FinitePointSet(frozenset({BiInfinitePoint.parse("0.1.0"), BiInfinitePoint.constant(1)}), full2),
        CylinderTree(-1, 3, frozenset(golden.language(3)), golden),
        SubshiftSet(golden),
    ]
    for K in sets:
        assert parse_spec(dumps(to_document(K))) == K


def test_save_and_load(tmp_path, lowered):
    path = save(lowered, tmp_path / "out" / "family.json")
    assert path.exists()
    assert not [p for p in path.parent.iterdir() if p.name.endswith(".tmp")]
    again = save(load_spec(path), tmp_path / "out" / "again.json")
    assert again.read_text() == path.read_text()


def test_no_document_for_other_objects():
    with pytest.raises(SchemaError):
        to_document(3.14)
