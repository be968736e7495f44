from typing import List

from pydantic import BaseModel, Field


class FieldDescriptor(BaseModel):
    """Описание поля в файлах данных"""
    p: int = Field(..., ge=2)
    f: int = Field(1, ge=1)
    modulus: List[int] = Field(default_factory=list)


class LNTException(BaseModel):
    """Тройка (p, f, m), для которой q^m - 1 делит 2mf(q-1)^2"""
    p: int
    f: int
    m: int
