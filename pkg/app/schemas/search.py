from typing import Dict, List, Optional

from pydantic import BaseModel, Field


class AmbientSpec(BaseModel):
    """Объемлющая группа поиска: слой, вид формы, n, q"""
    layer: str = "I"
    kind: str = Field(..., pattern="^(linear|alternating|hermitian|quadratic)$")
    n: int = Field(..., ge=1)
    q: int = Field(..., ge=2)
    type: Optional[str] = Field(None, pattern="^[o+-]$")


class SearchSpec(BaseModel):
    """Воспроизводимый поиск подгруппы по зерну"""
    name: str
    method: str = Field(..., pattern="^(sylow|random-subgroup|normaliser-extension|extraspecial-sp4)$")
    ambient: AmbientSpec
    seed: int
    trials: Optional[int] = None
    prime: Optional[int] = None
    element_orders: List[int] = Field(default_factory=list)
    order: Optional[int] = None
    projective_order: Optional[int] = None
    action: Optional[str] = None
    transitive_on: Optional[str] = None
    base: Optional[str] = None
    outputs: List[str] = Field(default_factory=list)
    note: str = ""


class SearchResult(BaseModel):
    """Итог поиска: имена файлов образующих и порядки групп"""
    name: str
    seed: int
    trials_used: int
    files: Dict[str, str] = Field(default_factory=dict)
    orders: Dict[str, int] = Field(default_factory=dict)
