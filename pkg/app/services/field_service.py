import itertools
import json
import logging
from functools import lru_cache
from math import gcd
from typing import Dict, List, Optional, Sequence, Tuple

import sympy
from sympy import Poly, Symbol

from app.core.config import settings
from app.core.exceptions import BudgetExceededError, DataFileError, InvalidInputError
from app.models.field import FieldElement, FiniteField
from app.schemas.field import FieldDescriptor, LNTException

logger = logging.getLogger(__name__)

_X = Symbol("x")


@lru_cache(maxsize=1)
def _load_moduli() -> Dict[str, List[int]]:
    """Таблица примитивных модулей из conway.json"""
    path = settings.FORMED_DATA_DIR / "conway.json"
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
        return {key: [int(c) for c in value] for key, value in data["moduli"].items()}
    except FileNotFoundError:
        logger.error(f"[FIELD] Modulus table not found: {path}")
        raise DataFileError(f"Не найдена таблица модулей: {path}")
    except (ValueError, KeyError, TypeError) as e:
        logger.error(f"[FIELD] Modulus table is malformed: {e}")
        raise DataFileError(f"Повреждена таблица модулей: {path}")


def _is_irreducible(p: int, coeffs: Sequence[int]) -> bool:
    return Poly(list(reversed(coeffs)), _X, modulus=p).is_irreducible


def _search_modulus(p: int, f: int) -> FiniteField:
    """Перебор унитарных многочленов до первого примитивного"""
    logger.info(f"[FIELD] Searching primitive modulus for GF({p}^{f})")
    for code in range(1, p**f):
        lower = [(code // p**i) % p for i in range(f)]
        if lower[0] == 0:
            continue
        coeffs = lower + [1]
        if not _is_irreducible(p, coeffs):
            continue
        try:
            return FiniteField(p, f, coeffs)
        except ValueError:
            continue
    raise InvalidInputError(f"Не найден примитивный многочлен степени {f} над GF({p})")


@lru_cache(maxsize=None)
def get_field(p: int, f: int = 1) -> FiniteField:
    """Построение поля GF(p^f) с каноническим модулем"""
    if p < 2 or not sympy.isprime(p):
        logger.error(f"[FIELD] Characteristic {p} is not prime")
        raise InvalidInputError(f"Характеристика {p} не является простым числом")
    if f < 1:
        raise InvalidInputError(f"Степень расширения должна быть положительной: {f}")
    if p**f > settings.MAX_FIELD_ORDER:
        logger.error(f"[FIELD] GF({p}^{f}) exceeds MAX_FIELD_ORDER={settings.MAX_FIELD_ORDER}")
        raise BudgetExceededError(f"Поле GF({p}^{f}) превышает бюджет")
    if f == 1:
        return FiniteField(p, 1, [0, 1])

    coeffs = _load_moduli().get(f"{p}^{f}")
    if coeffs is None:
        return _search_modulus(p, f)
    if len(coeffs) != f + 1 or coeffs[-1] != 1 or not _is_irreducible(p, coeffs):
        logger.error(f"[FIELD] Stored modulus for GF({p}^{f}) is not monic irreducible")
        raise DataFileError(f"Модуль для GF({p}^{f}) не является неприводимым")
    try:
        field = FiniteField(p, f, coeffs)
    except ValueError:
        logger.warning(f"[FIELD] Stored modulus for GF({p}^{f}) is not primitive, searching")
        return _search_modulus(p, f)
    logger.debug(f"[FIELD] Built GF({p}^{f}) with modulus {coeffs}")
    return field


def field_of_order(q: int) -> FiniteField:
    """Поле по порядку q = p^f"""
    factors = sympy.factorint(q)
    if len(factors) != 1:
        logger.error(f"[FIELD] {q} is not a prime power")
        raise InvalidInputError(f"{q} не является степенью простого")
    (p, f), = factors.items()
    return get_field(int(p), int(f))


def field_from_descriptor(desc: FieldDescriptor) -> FiniteField:
    """Поле по описанию из файла данных"""
    field = get_field(desc.p, desc.f)
    if desc.f > 1 and desc.modulus and tuple(desc.modulus) != field.modulus:
        if len(desc.modulus) != desc.f + 1 or not _is_irreducible(desc.p, desc.modulus):
            raise InvalidInputError(f"Модуль {desc.modulus} не является неприводимым")
        try:
            return FiniteField(desc.p, desc.f, desc.modulus)
        except ValueError:
            raise InvalidInputError(f"Модуль {desc.modulus} не является примитивным")
    return field


def describe_field(field: FiniteField) -> FieldDescriptor:
    return FieldDescriptor(p=field.p, f=field.f, modulus=list(field.modulus))


def frobenius(a: FieldElement, e: int = 1) -> FieldElement:
    """a -> a^(p^e)"""
    if e < 0:
        raise InvalidInputError("Показатель Фробениуса должен быть неотрицательным")
    return a.frobenius(e)


def is_square(a: FieldElement) -> bool:
    """Квадратичность ненулевого элемента поля нечётной характеристики"""
    if a.field.p == 2:
        raise InvalidInputError("Классы квадратов тривиальны в характеристике 2")
    if a.code == 0:
        raise InvalidInputError("Ноль не имеет класса квадратов")
    return a.field.log[a.code] % 2 == 0


def is_square_code(field: FiniteField, code: int) -> bool:
    return field.log[code] % 2 == 0


def sqrt_code(field: FiniteField, code: int) -> Optional[int]:
    """Квадратный корень или None"""
    if code == 0:
        return 0
    if field.p == 2:
        return field.frob(code, field.f - 1)
    k = field.log[code]
    if k % 2:
        return None
    return field.exp[k // 2]


def nonsquare_code(field: FiniteField) -> int:
    return field.exp[1]


def embed_subfield(small: FiniteField, big: FiniteField) -> List[int]:
    """Вложение GF(p^s) в GF(p^f): таблица образов кодов"""
    if small.p != big.p or big.f % small.f:
        raise InvalidInputError(f"{small!r} не является подполем {big!r}")
    if small.f == 1:
        return list(range(small.p))
    if small == big:
        return list(range(big.q))
    step = (big.q - 1) // (small.q - 1)
    for k in range(1, small.q - 1):
        if gcd(k, small.q - 1) != 1:
            continue
        root = big.exp[(k * step) % (big.q - 1)]
        value = 0
        for c in reversed(small.modulus):
            value = big.add(big.mul(value, root), c)
        if value == 0:
            images = [0] * small.q
            for i in range(small.q - 1):
                images[small.exp[i]] = big.exp[(k * step * i) % (big.q - 1)]
            return images
    raise InvalidInputError(f"Не найдено вложение {small!r} в {big!r}")


@lru_cache(maxsize=32)
def coordinates(big: FiniteField, small: FiniteField) -> Tuple[Tuple[int, ...], List[Tuple[int, ...]]]:
    """Базис 1, w, ..., w^(b-1) поля big над small и таблица координат"""
    b = big.f // small.f
    embed = embed_subfield(small, big)
    basis = tuple(big.exp[j] for j in range(b))
    table: List[Tuple[int, ...]] = [()] * big.q
    for combo in itertools.product(range(small.q), repeat=b):
        value = 0
        for c, w in zip(combo, basis):
            value = big.add(value, big.mul(embed[c], w))
        table[value] = combo
    return basis, table


def restrict_to_subfield(big: FiniteField, small: FiniteField, code: int) -> int:
    """Код элемента подполя small по его образу в big"""
    _, table = coordinates(big, small)
    coords = table[code]
    if any(coords[1:]):
        raise InvalidInputError(f"Элемент {code} не лежит в подполе {small!r}")
    return coords[0]


def trace(big: FiniteField, small: FiniteField, code: int) -> int:
    """След Tr_{big/small}, результат - код в small"""
    s = small.f
    total = 0
    for i in range(big.f // s):
        total = big.add(total, big.frob(code, i * s))
    return restrict_to_subfield(big, small, total)


def norm(big: FiniteField, small: FiniteField, code: int) -> int:
    """Норма N_{big/small}, результат - код в small"""
    return restrict_to_subfield(big, small, big.power(code, (big.q - 1) // (small.q - 1)))


def verify_l_nt(max_p: int = 7, max_f: int = 3, max_m: int = 4) -> List[LNTException]:
    """Тройки (p, f, m), m >= 2, при которых q^m - 1 делит 2mf(q-1)^2"""
    if max_p < 7 or max_f < 3 or max_m < 4:
        logger.error(f"[FIELD] Divisibility bounds ({max_p}, {max_f}, {max_m}) are below (7, 3, 4)")
        raise InvalidInputError(f"Границы ({max_p}, {max_f}, {max_m}) должны быть не меньше (7, 3, 4)")
    logger.info(f"[FIELD] Checking divisibility up to p={max_p}, f={max_f}, m={max_m}")
    found = []
    for p in sympy.primerange(2, max_p + 1):
        for f in range(1, max_f + 1):
            q = p**f
            for m in range(2, max_m + 1):
                if (2 * m * f * (q - 1) ** 2) % (q**m - 1) == 0:
                    found.append(LNTException(p=int(p), f=f, m=m))
    logger.info(f"[FIELD] Found {len(found)} exceptions")
    return found
