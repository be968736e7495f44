from dataclasses import dataclass, field as dc_field
from typing import Any, List, Optional, Sequence, Tuple

from app.models.field import FiniteField
from app.models.form import FormedSpace, Gram
from app.models.matrix import Matrix, Vector
from app.services.matspace_service import inverse, is_identity, mat_frob, mat_mul, vec_frob, vec_mat


@dataclass(frozen=True)
class SemilinearMap:
    """Полулинейное отображение v -> σ^e(v) A

    Произведение g * h означает "сначала g, затем h":
    (A1, e1)(A2, e2) = (σ^e2(A1) A2, e1 + e2).
    """
    field: FiniteField
    A: Gram
    e: int = 0

    @classmethod
    def of(cls, field: FiniteField, A: Sequence[Sequence[int]], e: int = 0) -> "SemilinearMap":
        return cls(field, tuple(tuple(int(x) for x in row) for row in A), e % field.f)

    @classmethod
    def identity(cls, field: FiniteField, n: int) -> "SemilinearMap":
        return cls.of(field, [[1 if i == j else 0 for j in range(n)] for i in range(n)])

    @property
    def n(self) -> int:
        return len(self.A)

    @property
    def matrix(self) -> Matrix:
        return [list(row) for row in self.A]

    def __mul__(self, other: "SemilinearMap") -> "SemilinearMap":
        left = mat_frob(self.field, self.matrix, other.e)
        return SemilinearMap.of(self.field, mat_mul(self.field, left, other.matrix), self.e + other.e)

    def __call__(self, v: Sequence[int]) -> Vector:
        return vec_mat(self.field, vec_frob(self.field, v, self.e), self.matrix)

    def inverse(self) -> "SemilinearMap":
        back = (-self.e) % self.field.f
        return SemilinearMap.of(self.field, inverse(self.field, mat_frob(self.field, self.matrix, back)), back)

    def __pow__(self, k: int) -> "SemilinearMap":
        base = self if k >= 0 else self.inverse()
        result = SemilinearMap.identity(self.field, self.n)
        for _ in range(abs(k)):
            result = result * base
        return result

    def is_identity(self) -> bool:
        return self.e % self.field.f == 0 and is_identity(self.matrix)


@dataclass
class MatrixGroup:
    """Группа, заданная полулинейными образующими пространства с формой"""
    space: FormedSpace
    generators: List[SemilinearMap]
    name: str = ""
    cached_order: Optional[int] = None
    # перестановочное представление на векторах (заполняется group_service)
    perm_cache: Optional[Any] = dc_field(default=None, repr=False)

    @property
    def field(self) -> FiniteField:
        return self.space.field

    @property
    def n(self) -> int:
        return self.space.n

    def __repr__(self) -> str:
        return f"MatrixGroup({self.name or '?'} on {self.space!r}, {len(self.generators)} gens)"


@dataclass(frozen=True)
class LayerIndices:
    """Индексы |Γ:C|, |C:I|, |I:S|, |S:Ω|"""
    gamma_c: int
    c_i: int
    i_s: int
    s_omega: int

    def as_tuple(self) -> Tuple[int, int, int, int]:
        return (self.gamma_c, self.c_i, self.i_s, self.s_omega)
