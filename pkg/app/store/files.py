"""
Reading and writing documents.

``parse_spec`` turns JSON text into toolkit objects, ``to_document`` goes
back. Serialization is canonical (sorted keys, two-space indent, trailing
newline), so re-serializing a parsed document reproduces it byte for byte.
"""

import json
import logging
import os
import tempfile
from dataclasses import asdict
from pathlib import Path
from typing import Any, Optional, Union

from pydantic import BaseModel, TypeAdapter, ValidationError

from app import __version__
from app.config import RunConfig
from app.core.errors import PreconditionError, SchemaError
from app.core.factors import SlidingBlockCode
from app.core.fan import FanSet
from app.core.lowering import LoweringCertificate, StageBound
from app.core.subsets import (
    BlockStage,
    CylinderTree,
    FinitePointSet,
    Stage,
    StagedFamily,
    SubsetRep,
    SubshiftSet,
)
from app.core.symbolic import BiInfinitePoint, Subshift, word_from_str, word_to_str
from app.store.models import (
    AnyDoc,
    CertificateDoc,
    CodeDoc,
    FanDoc,
    FanSetDoc,
    FiniteDoc,
    StageBoundDoc,
    StagedDoc,
    StageDoc,
    SubshiftDoc,
    TreeDoc,
    WholeDoc,
)

logger = logging.getLogger(__name__)

FAN = "fan"

_any_doc = TypeAdapter(AnyDoc)

Parsed = Union[Subshift, str, SubsetRep, FanSet, SlidingBlockCode]


def _path(error: dict) -> str:
    return ".".join(str(part) for part in error["loc"]) or "<root>"


def parse_document(text: str) -> BaseModel:
    """
    Validate JSON text against the document models.

    Raises:
        SchemaError: with the dotted path of the first offending field.
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"not valid JSON: {exc.msg} at line {exc.lineno}")
    try:
        return _any_doc.validate_python(data)
    except ValidationError as exc:
        first = exc.errors()[0]
        raise SchemaError(first["msg"], _path(first)) from exc


def load_document(path: Union[str, Path]) -> BaseModel:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise SchemaError(f"cannot read {path}: {exc.strerror}")
    return parse_document(text)


# documents -> objects

def subshift_from(doc: SubshiftDoc) -> Subshift:
    return Subshift(
        doc.alphabet,
        frozenset(word_from_str(w) for w in doc.forbidden),
        mixing=doc.mixing,
        one_sided=doc.one_sided,
        name=doc.name,
    )


def _stage_from(doc: StageDoc) -> Union[Stage, BlockStage]:
    if doc.points is not None:
        return Stage(doc.length, frozenset(BiInfinitePoint.parse(p) for p in doc.points))
    lo, hi = doc.block
    return BlockStage(doc.length, lo, hi, doc.count)


def certificate_from(doc: CertificateDoc) -> LoweringCertificate:
    return LoweringCertificate(
        target=doc.target,
        resolution=doc.resolution,
        lengths=tuple(doc.lengths),
        floors=tuple(doc.floors),
        cumulative=tuple(doc.cumulative),
        capacity=doc.capacity,
        open_tail=doc.open_tail,
        bounds=tuple(StageBound(**b.model_dump()) for b in doc.bounds),
    )


def set_from(doc: BaseModel) -> SubsetRep:
    if isinstance(doc, FiniteDoc):
        ambient = subshift_from(doc.ambient)
        return FinitePointSet(frozenset(BiInfinitePoint.parse(p) for p in doc.points), ambient)
    if isinstance(doc, TreeDoc):
        return CylinderTree(doc.base, doc.depth, frozenset(word_from_str(w) for w in doc.words), subshift_from(doc.ambient))
    if isinstance(doc, WholeDoc):
        return SubshiftSet(subshift_from(doc.ambient))
    if isinstance(doc, StagedDoc):
        return StagedFamily(
            BiInfinitePoint.parse(doc.limit),
            doc.resolution,
            tuple(_stage_from(s) for s in doc.stages),
            subshift_from(doc.ambient),
            open_tail=doc.open_tail,
            certificate=certificate_from(doc.certificate) if doc.certificate else None,
        )
    raise SchemaError(f"a {doc.kind} document is not a set", "kind")


def to_object(doc: BaseModel) -> Parsed:
    if isinstance(doc, SubshiftDoc):
        return subshift_from(doc)
    if isinstance(doc, FanDoc):
        return FAN
    if isinstance(doc, FanSetDoc):
        return FanSet(
            apex=doc.apex,
            parts={n: set_from(p) for n, p in doc.parts.items()},
            full_from=doc.full_from,
            tail=set_from(doc.tail) if doc.tail is not None else None,
        )
    if isinstance(doc, CodeDoc):
        return SlidingBlockCode(
            subshift_from(doc.source),
            subshift_from(doc.target),
            doc.memory,
            doc.anticipation,
            {word_from_str(w): v for w, v in doc.rule.items()},
            name=doc.name,
        )
    return set_from(doc)


def _build(doc: BaseModel) -> Parsed:
    try:
        return to_object(doc)
    except PreconditionError as exc:
        raise SchemaError(str(exc), doc.kind) from exc


def parse_spec(text: str) -> Parsed:
    """
    Parse a system, set or code document.

    Raises:
        SchemaError: on malformed documents and on domain checks that fail
            while the objects are built.
    """
    return _build(parse_document(text))


def load_spec(path: Union[str, Path]) -> Parsed:
    return _build(load_document(path))


# objects -> documents

def subshift_doc(s: Subshift) -> SubshiftDoc:
    return SubshiftDoc(
        alphabet=s.alphabet,
        forbidden=sorted(word_to_str(w) for w in s.forbidden),
        mixing=s.mixing,
        one_sided=s.one_sided,
        name=s.name,
    )


def _points(points) -> list:
    return [p.literal() for p in sorted(points, key=lambda p: p.sort_key())]


def _stage_doc(stage: Union[Stage, BlockStage]) -> StageDoc:
    if isinstance(stage, Stage):
        return StageDoc(length=stage.length, points=_points(stage.points))
    return StageDoc(length=stage.length, block=(stage.lo, stage.hi), count=stage.count)


def certificate_doc(cert: LoweringCertificate) -> CertificateDoc:
    return CertificateDoc(
        target=cert.target,
        resolution=cert.resolution,
        lengths=list(cert.lengths),
        floors=list(cert.floors),
        cumulative=list(cert.cumulative),
        capacity=cert.capacity,
        open_tail=cert.open_tail,
        bounds=[StageBoundDoc(**asdict(b)) for b in cert.bounds],
    )


def to_document(obj: Any, run_config: Optional[RunConfig] = None) -> BaseModel:
    """
    The document of a toolkit object. Staged families carry the tool
    version and, when given, the run configuration.
    """
    if isinstance(obj, Subshift):
        return subshift_doc(obj)
    if obj == FAN:
        return FanDoc()
    if isinstance(obj, FinitePointSet):
        return FiniteDoc(ambient=subshift_doc(obj.ambient), points=_points(obj.points))
    if isinstance(obj, CylinderTree):
        return TreeDoc(
            ambient=subshift_doc(obj.ambient),
            base=obj.base,
            depth=obj.depth,
            words=sorted(word_to_str(w) for w in obj.words),
        )
    if isinstance(obj, SubshiftSet):
        return WholeDoc(ambient=subshift_doc(obj.ambient))
    if isinstance(obj, StagedFamily):
        cert = obj.certificate if isinstance(obj.certificate, LoweringCertificate) else None
        return StagedDoc(
            ambient=subshift_doc(obj.ambient),
            limit=obj.limit.literal(),
            resolution=obj.resolution,
            open_tail=obj.open_tail,
            stages=[_stage_doc(s) for s in obj.stages],
            certificate=certificate_doc(cert) if cert else None,
            tool_version=__version__,
            run_config=run_config,
        )
    if isinstance(obj, FanSet):
        return FanSetDoc(
            apex=obj.apex,
            parts={n: to_document(p) for n, p in sorted(obj.parts.items())},
            full_from=obj.full_from,
            tail=to_document(obj.tail) if obj.tail is not None else None,
        )
    if isinstance(obj, SlidingBlockCode):
        return CodeDoc(
            source=subshift_doc(obj.source),
            target=subshift_doc(obj.target),
            memory=obj.memory,
            anticipation=obj.anticipation,
            rule={word_to_str(w): v for w, v in sorted(obj.rule.items())},
            name=obj.name,
        )
    raise SchemaError(f"no document format for {type(obj).__name__}")


def dumps(doc: BaseModel) -> str:
    """Canonical JSON text of a document."""
    data = doc.model_dump(mode="json", exclude_none=True)
    return json.dumps(data, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def write_atomic(path: Union[str, Path], text: str) -> Path:
    """Write through a temporary file in the target directory and rename it into place."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    logger.debug("wrote %s (%d bytes)", path, len(text))
    return path


def save(obj: Any, path: Union[str, Path], run_config: Optional[RunConfig] = None) -> Path:
    return write_atomic(path, dumps(to_document(obj, run_config)))
