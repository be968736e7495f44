from typing import Dict, List, Optional

from pydantic import BaseModel, Field

STATUSES = ("verified", "pending", "out-of-budget", "failed", "open")


class CatalogEntry(BaseModel):
    """Строка таблицы: группа H и семейство, на котором она транзитивна"""
    id: str
    table_id: str
    ambient: str
    family: str
    descriptor: str
    recipe: str
    args: Dict[str, str] = Field(default_factory=dict)
    constraints: List[str] = Field(default_factory=list)
    flags: List[str] = Field(default_factory=list)
    source: str = ""
    line: int = 0

    @property
    def gating(self) -> bool:
        return "superset" not in self.flags

    @property
    def negative(self) -> bool:
        return "negative" in self.flags

    @property
    def constructive(self) -> bool:
        return self.recipe not in ("needs-generators", "generator-file")

    class Config:
        json_schema_extra = {
            "example": {
                "id": "T:Spa#1",
                "table_id": "T:Spa",
                "ambient": "Sp 2*a*b",
                "family": "P1",
                "descriptor": "Sp_{2a}(q^b)",
                "recipe": "field-extension",
                "args": {"inner": "Sp", "n": "2*a", "b": "b"},
                "constraints": ["b>=2"],
                "flags": [],
                "source": "symplectic.txt",
                "line": 3,
            }
        }


class GridSpec(BaseModel):
    """Границы перебора параметров"""
    max_n: int = Field(8, ge=0)
    max_q: int = Field(4, ge=0)
    tables: Optional[List[str]] = None
    include_slow: bool = False

    @property
    def empty(self) -> bool:
        return self.max_n == 0 or self.max_q < 2


class ReportEntry(BaseModel):
    """Результат проверки одной строки при фиксированных параметрах"""
    id: str
    table_id: str
    descriptor: str
    params: Dict[str, int] = Field(default_factory=dict)
    status: str = Field(..., pattern="^(verified|pending|out-of-budget|failed|open)$")
    family_size: Optional[int] = None
    orbit_count: Optional[int] = None
    # время выполнения только в текстовом отчёте
    ms: int = Field(0, exclude=True)
    gating: bool = True
    detail: str = ""


class VerificationReport(BaseModel):
    """Отчёт прогона каталога"""
    grid: GridSpec
    entries: List[ReportEntry] = Field(default_factory=list)

    @property
    def summary(self) -> Dict[str, int]:
        counts = {status: 0 for status in STATUSES}
        for entry in self.entries:
            counts[entry.status] += 1
        return counts

    @property
    def hard_failures(self) -> List[ReportEntry]:
        return [e for e in self.entries if e.status == "failed" and e.gating]


class CountResult(BaseModel):
    """Число подпространств семейства: формула и перечисление"""
    kind: str
    type: Optional[str] = None
    n: int
    q: int
    family: str
    formula: int
    enumerated: Optional[int] = None
    match: Optional[bool] = None


class OrderResult(BaseModel):
    """Порядок слоя классической группы"""
    layer: str
    kind: str
    type: Optional[str] = None
    n: int
    q: int
    formula: int
    computed: Optional[int] = None
    match: Optional[bool] = None


class CheckResult(BaseModel):
    """Транзитивность группы на семействе с профилем орбит"""
    group: str
    space: str
    family: str
    transitive: bool
    family_size: int
    orbit_lengths: List[int] = Field(default_factory=list)
