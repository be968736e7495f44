from typing import List, Optional, Tuple

from pydantic import BaseModel, Field


class AxiomReport(BaseModel):
    """Результат проверки аксиом обобщённого четырёхугольника"""
    gq1: bool
    gq2: bool
    gq3: bool
    counts: bool
    thick: bool
    bounds: bool
    srg: Optional[bool] = None
    failures: List[str] = Field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all([self.gq1, self.gq2, self.gq3, self.counts, self.thick, self.bounds]) and self.srg is not False


class GQSummary(BaseModel):
    """Сводка по классическому четырёхугольнику"""
    name: str
    q: int
    order: Tuple[int, int]
    dual: bool = False
    points: int
    lines: int
    flags: int
    antiflags: int
    axioms: Optional[AxiomReport] = None

    class Config:
        json_schema_extra = {
            "example": {
                "name": "W3",
                "q": 3,
                "order": [3, 3],
                "dual": False,
                "points": 40,
                "lines": 40,
                "flags": 160,
                "antiflags": 1440,
            }
        }


class GQCheckResult(BaseModel):
    """Транзитивность группы на точках, прямых, флагах и антифлагах"""
    gq: str
    group: str
    points: Optional[bool] = None
    lines: Optional[bool] = None
    flags: Optional[bool] = None
    antiflags: Optional[bool] = None
    primitive_on_points: Optional[bool] = None
    implication_holds: Optional[bool] = None
