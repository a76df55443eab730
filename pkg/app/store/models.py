"""
Pydantic document models.

Every document is a JSON object with a ``kind`` tag. Unknown fields are
rejected. Words are strings of base-36 digits; points are literals of the
form ``lp.center.rp@anchor``.
"""

from typing import Annotated, Dict, List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from app.config import RunConfig
from app.core.errors import SchemaError
from app.core.symbolic import BiInfinitePoint, word_from_str


class Document(BaseModel):
    model_config = ConfigDict(extra="forbid")


def _check_word(text: str, alphabet: int) -> None:
    try:
        word = word_from_str(text)
    except SchemaError as exc:
        raise ValueError(str(exc)) from exc
    bad = [a for a in word if a >= alphabet]
    if bad:
        raise ValueError(f"symbol {bad[0]} in {text!r} is outside alphabet {alphabet}")


def _check_point(text: str, alphabet: int) -> None:
    try:
        point = BiInfinitePoint.parse(text)
    except SchemaError as exc:
        raise ValueError(str(exc)) from exc
    if point.max_symbol >= alphabet:
        raise ValueError(f"symbol {point.max_symbol} in point {text!r} is outside alphabet {alphabet}")


class SubshiftDoc(Document):
    kind: Literal["subshift"] = "subshift"
    alphabet: int = Field(ge=1, le=36)
    forbidden: List[str] = Field(default_factory=list)
    mixing: bool = False
    one_sided: bool = False
    name: Optional[str] = None

    @model_validator(mode="after")
    def _symbols_in_range(self) -> "SubshiftDoc":
        for w in self.forbidden:
            if not w:
                raise ValueError("forbidden words must be non-empty")
            _check_word(w, self.alphabet)
        return self


class FanDoc(Document):
    """The fan system: full 2-shift balls shrinking to an apex."""

    kind: Literal["fan"] = "fan"


class FiniteDoc(Document):
    kind: Literal["finite"] = "finite"
    ambient: SubshiftDoc
    points: List[str] = Field(default_factory=list)

    @model_validator(mode="after")
    def _points_in_range(self) -> "FiniteDoc":
        for p in self.points:
            _check_point(p, self.ambient.alphabet)
        return self


class TreeDoc(Document):
    kind: Literal["tree"] = "tree"
    ambient: SubshiftDoc
    base: int = 0
    depth: int = Field(ge=1)
    words: List[str] = Field(min_length=1)

    @model_validator(mode="after")
    def _words_fit(self) -> "TreeDoc":
        for w in self.words:
            _check_word(w, self.ambient.alphabet)
            if len(w) != self.depth:
                raise ValueError(f"word {w!r} does not have length {self.depth}")
        return self


class WholeDoc(Document):
    """The ambient subshift as a subset of itself."""

    kind: Literal["whole"] = "whole"
    ambient: SubshiftDoc


class StageDoc(Document):
    """A listed stage (``points``) or a block stage (``block`` and ``count``)."""

    length: int = Field(ge=1)
    points: Optional[List[str]] = None
    block: Optional[Tuple[int, int]] = None
    count: Optional[int] = Field(default=None, ge=1)

    @model_validator(mode="after")
    def _one_form(self) -> "StageDoc":
        listed = self.points is not None
        ranked = self.block is not None or self.count is not None
        if listed == ranked:
            raise ValueError("a stage has either points or block and count")
        if ranked and (self.block is None or self.count is None):
            raise ValueError("a block stage needs both block and count")
        return self


class StageBoundDoc(Document):
    length: int
    lower: int
    count: int
    upper: int
    between_checked: int = 0
    between_ok: bool = True


class CertificateDoc(Document):
    target: float
    resolution: int
    lengths: List[int]
    floors: List[int]
    cumulative: List[int]
    capacity: float
    open_tail: bool = True
    bounds: List[StageBoundDoc] = Field(default_factory=list)


class StagedDoc(Document):
    kind: Literal["staged"] = "staged"
    ambient: SubshiftDoc
    limit: str
    resolution: int = Field(ge=1)
    open_tail: bool = False
    stages: List[StageDoc] = Field(default_factory=list)
    certificate: Optional[CertificateDoc] = None
    tool_version: Optional[str] = None
    run_config: Optional[RunConfig] = None

    @model_validator(mode="after")
    def _points_in_range(self) -> "StagedDoc":
        _check_point(self.limit, self.ambient.alphabet)
        for stage in self.stages:
            for p in stage.points or ():
                _check_point(p, self.ambient.alphabet)
        return self


class FanSetDoc(Document):
    kind: Literal["fanset"] = "fanset"
    apex: bool = True
    parts: Dict[int, "SetDoc"] = Field(default_factory=dict)
    full_from: Optional[int] = Field(default=None, ge=1)
    tail: Optional["SetDoc"] = None

    @field_validator("parts")
    @classmethod
    def _balls_from_one(cls, parts: Dict[int, "SetDoc"]) -> Dict[int, "SetDoc"]:
        if any(n < 1 for n in parts):
            raise ValueError("fan balls are indexed from 1")
        return parts


class CodeDoc(Document):
    kind: Literal["code"] = "code"
    source: SubshiftDoc
    target: SubshiftDoc
    memory: int = Field(default=0, ge=0)
    anticipation: int = Field(default=0, ge=0)
    rule: Dict[str, int]
    name: Optional[str] = None

    @model_validator(mode="after")
    def _rule_fits(self) -> "CodeDoc":
        width = self.memory + self.anticipation + 1
        for word, symbol in self.rule.items():
            _check_word(word, self.source.alphabet)
            if len(word) != width:
                raise ValueError(f"rule word {word!r} does not have length {width}")
            if not 0 <= symbol < self.target.alphabet:
                raise ValueError(f"rule value {symbol} is outside alphabet {self.target.alphabet}")
        return self


SetDoc = Annotated[Union[FiniteDoc, TreeDoc, WholeDoc, StagedDoc], Field(discriminator="kind")]

AnyDoc = Annotated[
    Union[SubshiftDoc, FanDoc, FiniteDoc, TreeDoc, WholeDoc, StagedDoc, FanSetDoc, CodeDoc],
    Field(discriminator="kind"),
]

FanSetDoc.model_rebuild()
