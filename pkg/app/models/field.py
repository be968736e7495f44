from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from sympy.ntheory import primitive_root


class FiniteField:
    """Поле GF(p^f)

    Элемент кодируется целым числом sum(c_i * p^i), где c_i - коэффициенты
    многочлена по модулю `modulus`. Простое подполе совпадает с кодами 0..p-1.
    При f > 1 класс x (код p) является примитивным элементом.
    """

    def __init__(self, p: int, f: int, modulus: Sequence[int]):
        self.p = p
        self.f = f
        self.q = p**f
        self.modulus: Tuple[int, ...] = tuple(int(c) % p for c in modulus)
        self._frob_cache: Dict[int, List[int]] = {}
        self._build_tables()

    def __repr__(self) -> str:
        return f"GF({self.p}^{self.f})"

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FiniteField):
            return NotImplemented
        return (self.p, self.f, self.modulus) == (other.p, other.f, other.modulus)

    def __hash__(self) -> int:
        return hash((self.p, self.f, self.modulus))

    # Построение таблиц

    def digits(self, code: int) -> List[int]:
        out = []
        for _ in range(self.f):
            code, r = divmod(code, self.p)
            out.append(r)
        return out

    def from_digits(self, digits: Sequence[int]) -> int:
        code = 0
        for c in reversed(digits):
            code = code * self.p + (c % self.p)
        return code

    def _times_x(self, code: int) -> int:
        p, f = self.p, self.f
        if p == 2:
            code <<= 1
            if code >> f:
                code ^= self._modulus_int
            return code
        top = code // self._top_power
        shifted = (code - top * self._top_power) * p
        if top == 0:
            return shifted
        return self._digit_add(shifted, self._reduce_top[top])

    def _digit_add(self, a: int, b: int) -> int:
        p = self.p
        out, power = 0, 1
        while a or b:
            a, ra = divmod(a, p)
            b, rb = divmod(b, p)
            out += ((ra + rb) % p) * power
            power *= p
        return out

    def _build_tables(self) -> None:
        p, f, q = self.p, self.f, self.q
        self._modulus_int = self.from_digits(self.modulus[:f]) | (1 << f) if p == 2 else 0
        self._top_power = p ** (f - 1)
        # -t * (младшая часть модуля), t = 0..p-1
        self._reduce_top = [self.from_digits([(-t * c) % p for c in self.modulus[:f]]) for t in range(p)]

        if f == 1:
            self.primitive = int(primitive_root(p)) if p > 2 else 1
        else:
            self.primitive = p

        exp = [0] * (2 * (q - 1) + 1)
        log = [-1] * q
        x = 1
        for i in range(q - 1):
            if log[x] != -1:
                raise ValueError(f"{self!r}: модуль не примитивен")
            exp[i] = x
            log[x] = i
            x = self._times_x(x) if f > 1 else (x * self.primitive) % p
        for i in range(q - 1, len(exp)):
            exp[i] = exp[i - (q - 1)]
        self.exp = exp
        self.log = log

        if p == 2:
            self.neg = list(range(q))
        else:
            self.neg = [self.from_digits([(-c) % p for c in self.digits(a)]) for a in range(q)]

        self.add_table: Optional[List[List[int]]] = None
        if p != 2 and q <= 256:
            self.add_table = [[self._digit_add(a, b) for b in range(q)] for a in range(q)]

        self.exp_np = np.array(exp, dtype=np.int64)
        self.log_np = np.array(log, dtype=np.int64)
        self.neg_np = np.array(self.neg, dtype=np.int64)
        self._powers_np = np.array([p**i for i in range(f)], dtype=np.int64)

    # Скалярная арифметика

    def add(self, a: int, b: int) -> int:
        if self.p == 2:
            return a ^ b
        if self.add_table is not None:
            return self.add_table[a][b]
        return self._digit_add(a, b)

    def sub(self, a: int, b: int) -> int:
        return self.add(a, self.neg[b])

    def mul(self, a: int, b: int) -> int:
        if a == 0 or b == 0:
            return 0
        return self.exp[self.log[a] + self.log[b]]

    def inv(self, a: int) -> int:
        if a == 0:
            raise ZeroDivisionError("обращение нуля в конечном поле")
        return self.exp[(self.q - 1 - self.log[a]) % (self.q - 1)]

    def div(self, a: int, b: int) -> int:
        return self.mul(a, self.inv(b))

    def power(self, a: int, k: int) -> int:
        if a == 0:
            return 0 if k > 0 else 1
        return self.exp[(self.log[a] * k) % (self.q - 1)]

    def frob_table(self, e: int) -> List[int]:
        """Таблица x -> x^(p^e)"""
        e %= self.f
        table = self._frob_cache.get(e)
        if table is None:
            step = self.p**e
            table = [0] + [self.exp[(self.log[a] * step) % (self.q - 1)] for a in range(1, self.q)]
            self._frob_cache[e] = table
        return table

    def frob(self, a: int, e: int) -> int:
        if e % self.f == 0:
            return a
        return self.frob_table(e)[a]

    def element(self, code: int) -> "FieldElement":
        return FieldElement(self, code % self.q)

    # Векторизованная арифметика

    def mul_np(self, a: np.ndarray, b: int) -> np.ndarray:
        """Умножение массива кодов на скаляр"""
        if b == 0:
            return np.zeros_like(a)
        out = self.exp_np[(self.log_np[a] + self.log[b]) % (self.q - 1)]
        return np.where(a == 0, 0, out)

    def add_np(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        if self.p == 2:
            return np.bitwise_xor(a, b)
        out = np.zeros_like(a)
        x, y = a.copy(), b.copy()
        for power in self._powers_np:
            out += ((x % self.p + y % self.p) % self.p) * power
            x //= self.p
            y //= self.p
        return out

    def frob_np(self, a: np.ndarray, e: int) -> np.ndarray:
        if e % self.f == 0:
            return a
        return np.asarray(self.frob_table(e), dtype=np.int64)[a]


@dataclass(frozen=True)
class FieldElement:
    """Элемент конечного поля"""
    field: FiniteField
    code: int

    @property
    def coeffs(self) -> List[int]:
        return self.field.digits(self.code)

    def _wrap(self, code: int) -> "FieldElement":
        return FieldElement(self.field, code)

    def _code_of(self, other: object) -> int:
        if isinstance(other, FieldElement):
            if other.field != self.field:
                raise ValueError("элементы разных полей")
            return other.code
        if isinstance(other, int):
            return other % self.field.p
        raise TypeError(f"unsupported operand: {type(other).__name__}")

    def __add__(self, other: object) -> "FieldElement":
        return self._wrap(self.field.add(self.code, self._code_of(other)))

    __radd__ = __add__

    def __sub__(self, other: object) -> "FieldElement":
        return self._wrap(self.field.sub(self.code, self._code_of(other)))

    def __neg__(self) -> "FieldElement":
        return self._wrap(self.field.neg[self.code])

    def __mul__(self, other: object) -> "FieldElement":
        return self._wrap(self.field.mul(self.code, self._code_of(other)))

    __rmul__ = __mul__

    def __truediv__(self, other: object) -> "FieldElement":
        return self._wrap(self.field.div(self.code, self._code_of(other)))

    def __pow__(self, k: int) -> "FieldElement":
        if k < 0:
            return self._wrap(self.field.power(self.field.inv(self.code), -k))
        return self._wrap(self.field.power(self.code, k))

    def inverse(self) -> "FieldElement":
        return self._wrap(self.field.inv(self.code))

    def frobenius(self, e: int = 1) -> "FieldElement":
        return self._wrap(self.field.frob(self.code, e))

    def is_zero(self) -> bool:
        return self.code == 0

    def __repr__(self) -> str:
        return f"{self.field!r}[{self.code}]"
