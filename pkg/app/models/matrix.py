from dataclasses import dataclass
from functools import cached_property
from typing import List, Tuple

from app.models.field import FiniteField

Vector = Tuple[int, ...]
Matrix = List[List[int]]


@dataclass(frozen=True)
class Subspace:
    """Подпространство GF(q)^n в приведённой ступенчатой форме

    Строки `rows` - канонический базис: ведущие столбцы строго возрастают,
    ведущие элементы равны 1, над и под ними нули.
    """
    field: FiniteField
    n: int
    rows: Tuple[Vector, ...]

    @property
    def dim(self) -> int:
        return len(self.rows)

    @property
    def is_zero(self) -> bool:
        return not self.rows

    @cached_property
    def pivots(self) -> Tuple[int, ...]:
        return tuple(next(i for i, x in enumerate(row) if x) for row in self.rows)

    @cached_property
    def key(self) -> bytes:
        """Канонический ключ: размерность и элементы базиса построчно"""
        head = bytes([self.dim])
        if self.field.q <= 256:
            return head + bytes(x for row in self.rows for x in row)
        return head + b"".join(x.to_bytes(4, "big") for row in self.rows for x in row)

    def __repr__(self) -> str:
        return f"Subspace(dim={self.dim}, n={self.n}, rows={list(self.rows)})"
