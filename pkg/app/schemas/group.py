from typing import List, Optional

from pydantic import BaseModel, Field

from app.schemas.field import FieldDescriptor


class FormSpec(BaseModel):
    """Пространство с формой в файле образующих"""
    field: FieldDescriptor
    kind: str = Field(..., pattern="^(linear|alternating|hermitian|quadratic)$")
    type: Optional[str] = Field(None, pattern="^[o+-]$")
    n: int = Field(..., ge=1)
    gram: Optional[List[List[int]]] = None
    quad: Optional[List[List[int]]] = None


class GeneratorEntry(BaseModel):
    """Образующая (A, e): v -> σ^e(v) A"""
    A: List[List[int]]
    e: int = Field(0, ge=0)


class GeneratorFile(BaseModel):
    """Файл образующих группы"""
    form: FormSpec
    gens: List[GeneratorEntry]
    name: str
    expected_order: Optional[int] = None
    seed: Optional[int] = None

    class Config:
        json_schema_extra = {
            "example": {
                "form": {"field": {"p": 2, "f": 2, "modulus": [1, 1, 1]}, "kind": "hermitian", "n": 3},
                "gens": [{"A": [[0, 0, 1], [0, 1, 0], [1, 0, 0]], "e": 0}],
                "name": "example",
                "expected_order": 2,
                "seed": None,
            }
        }
