from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import List, Optional, Tuple

from app.models.field import FiniteField

Gram = Tuple[Tuple[int, ...], ...]


class FormKind(str, Enum):
    """Вид формы"""
    LINEAR = "linear"
    ALTERNATING = "alternating"
    HERMITIAN = "hermitian"
    QUADRATIC = "quadratic"


class FormType(str, Enum):
    """Тип изометрии квадратичной формы"""
    CIRCLE = "o"
    PLUS = "+"
    MINUS = "-"


@dataclass(frozen=True)
class FormedSpace:
    """Пространство с формой

    Для эрмитовых форм `field` - это GF(q^2), а `sigma` - показатель
    Фробениуса x -> x^q. Для квадратичных форм `quad` - верхнетреугольная
    матрица коэффициентов Q, `gram` - её поляризация.
    """
    field: FiniteField
    n: int
    kind: FormKind
    type: FormType
    gram: Gram
    quad: Optional[Gram] = None
    sigma: int = 0

    @property
    def q(self) -> int:
        """Порядок поля, над которым определена группа"""
        if self.kind == FormKind.HERMITIAN:
            return self.field.p ** (self.field.f // 2)
        return self.field.q

    @property
    def label(self) -> str:
        names = {
            FormKind.LINEAR: "L",
            FormKind.ALTERNATING: "Sp",
            FormKind.HERMITIAN: "U",
        }
        if self.kind == FormKind.QUADRATIC:
            return "O" if self.type == FormType.CIRCLE else f"O{self.type.value}"
        return names[self.kind]

    @cached_property
    def gram_terms(self) -> List[Tuple[int, int, int]]:
        return [(i, j, c) for i, row in enumerate(self.gram) for j, c in enumerate(row) if c]

    @cached_property
    def quad_terms(self) -> List[Tuple[int, int, int]]:
        if self.quad is None:
            return []
        return [(i, j, c) for i, row in enumerate(self.quad) for j, c in enumerate(row) if c]

    def __repr__(self) -> str:
        return f"{self.label}_{self.n}({self.q})"


class FamilyLabel(str, Enum):
    """Семейство подпространств"""
    ALL = "all"
    TOTALLY_SINGULAR = "P"
    P_PLUS = "P+"
    P_MINUS = "P-"
    P_EITHER = "Pe"
    NONDEGENERATE = "N"
    N_PLUS = "N+"
    N_MINUS = "N-"
    N_EITHER = "Ne"
    NONSINGULAR_ONE = "N1ns"


@dataclass(frozen=True)
class FamilyDescriptor:
    """Семейство k-подпространств"""
    label: FamilyLabel
    k: int

    @property
    def is_either(self) -> bool:
        return self.label in (FamilyLabel.P_EITHER, FamilyLabel.N_EITHER)

    def __str__(self) -> str:
        if self.label == FamilyLabel.ALL:
            return f"k={self.k}"
        if self.label == FamilyLabel.NONSINGULAR_ONE:
            return "N1"
        head = "P" if self.label.value.startswith("P") else "N"
        tail = {"+": "+", "-": "-", "e": "e"}.get(self.label.value[-1], "")
        return f"{head}{self.k}{tail}"


@dataclass(frozen=True)
class SubspaceClass:
    """Результат классификации подпространства"""
    kind: str
    sign: Optional[str] = None

    def __str__(self) -> str:
        return self.kind if self.sign is None else f"{self.kind}({self.sign})"
