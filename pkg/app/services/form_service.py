import logging
import random
import re
from dataclasses import dataclass, field as dc_field
from functools import lru_cache
from typing import Dict, List, Optional, Sequence, Tuple

from app.core.config import settings
from app.core.exceptions import BudgetExceededError, InvalidInputError
from app.models.field import FiniteField
from app.models.form import (
    FamilyDescriptor, FamilyLabel, FormedSpace, FormKind, FormType, Gram, SubspaceClass,
)
from app.models.matrix import Matrix, Subspace, Vector
from app.services import field_service
from app.services.matspace_service import (
    canonicalize, contains_vector, det, enumerate_subspaces, gaussian_binomial, identity,
    intersect, left_kernel, nullspace, rref, vec_axpy, vec_frob, vec_mat, vec_scale,
)

logger = logging.getLogger(__name__)

AMBIENT_LABELS: Dict[str, Tuple[FormKind, Optional[FormType]]] = {
    "L": (FormKind.LINEAR, None),
    "Sp": (FormKind.ALTERNATING, None),
    "U": (FormKind.HERMITIAN, None),
    "O": (FormKind.QUADRATIC, None),
    "O+": (FormKind.QUADRATIC, FormType.PLUS),
    "O-": (FormKind.QUADRATIC, FormType.MINUS),
}


@dataclass
class WittBasis:
    """Гиперболические пары, анизотропная часть и радикал"""
    pairs: List[Tuple[Vector, Vector]] = dc_field(default_factory=list)
    anisotropic: List[Vector] = dc_field(default_factory=list)
    radical: List[Vector] = dc_field(default_factory=list)

    @property
    def index(self) -> int:
        return len(self.pairs)


def _freeze(M: Sequence[Sequence[int]]) -> Gram:
    return tuple(tuple(int(x) for x in row) for row in M)


def parse_ambient(label: str) -> Tuple[FormKind, Optional[FormType]]:
    """Метка объемлющего пространства: L, Sp, U, O, O+, O-"""
    key = label.strip().replace("−", "-").replace("∘", "")
    if key not in AMBIENT_LABELS:
        logger.error(f"[FORM] Unknown ambient label {label!r}")
        raise InvalidInputError(f"Неизвестный тип пространства: {label}")
    return AMBIENT_LABELS[key]


def polar_of(field: FiniteField, quad: Sequence[Sequence[int]]) -> Gram:
    n = len(quad)
    return _freeze([[field.add(quad[i][j], quad[j][i]) for j in range(n)] for i in range(n)])


def find_kappa(field: FiniteField) -> int:
    """κ с неприводимым x^2 + x + κ"""
    for c in range(field.q):
        if all(field.add(field.add(field.mul(x, x), x), c) != 0 for x in range(field.q)):
            return c
    raise InvalidInputError(f"Нет неприводимого x^2+x+κ над {field!r}")


def form_field(kind: FormKind, q: int) -> Tuple[FiniteField, int]:
    """Поле координат и показатель σ"""
    base = field_service.field_of_order(q)
    if kind == FormKind.HERMITIAN:
        return field_service.get_field(base.p, 2 * base.f), base.f
    return base, 0


@lru_cache(maxsize=None)
def standard_space(kind: FormKind, n: int, q: int, form_type: Optional[FormType] = None) -> FormedSpace:
    """Стандартное пространство в базисе (e1, f1, e2, f2, ...)

    Нечётномерная квадратичная форма: d первым, Q = z^2 + sum x_i y_i.
    Минус-тип: последний блок x^2 + xy + κy^2. Эрмитова форма нечётной
    размерности: d последним, h(d, d) = 1.
    """
    kind = FormKind(kind)
    if n < 1:
        raise InvalidInputError(f"Размерность должна быть положительной: {n}")
    field, sigma = form_field(kind, q)
    one, minus_one = 1, field.neg[1]
    G = [[0] * n for _ in range(n)]
    quad = None

    if kind == FormKind.LINEAR:
        return FormedSpace(field, n, kind, FormType.CIRCLE, _freeze(G))

    if kind == FormKind.ALTERNATING:
        if n % 2:
            logger.error(f"[FORM] Alternating form needs even dimension, got {n}")
            raise InvalidInputError(f"Знакопеременная форма требует чётной размерности: {n}")
        for i in range(0, n, 2):
            G[i][i + 1], G[i + 1][i] = one, minus_one
        return FormedSpace(field, n, kind, FormType.CIRCLE, _freeze(G))

    if kind == FormKind.HERMITIAN:
        for i in range(0, n - 1, 2):
            G[i][i + 1] = G[i + 1][i] = one
        if n % 2:
            G[n - 1][n - 1] = one
        return FormedSpace(field, n, kind, FormType.CIRCLE, _freeze(G), sigma=sigma)

    if form_type is None:
        if n % 2 == 0:
            raise InvalidInputError("Для чётной размерности нужен тип квадратичной формы (+ или -)")
        form_type = FormType.CIRCLE
    form_type = FormType(form_type)
    if (n % 2 == 1) != (form_type == FormType.CIRCLE):
        logger.error(f"[FORM] Type {form_type.value} is inadmissible for dimension {n}")
        raise InvalidInputError(f"Тип {form_type.value} недопустим для размерности {n}")

    Qm = [[0] * n for _ in range(n)]
    offset = 0
    if form_type == FormType.CIRCLE:
        Qm[0][0] = one
        offset = 1
    for i in range(offset, n, 2):
        Qm[i][i + 1] = one
    if form_type == FormType.MINUS:
        a = n - 2
        Qm[a][a] = one
        Qm[a + 1][a + 1] = find_kappa(field)
    quad = _freeze(Qm)
    space = FormedSpace(field, n, kind, form_type, polar_of(field, quad), quad, 0)
    logger.debug(f"[FORM] Built standard space {space!r}")
    return space


def make_space(
    field: FiniteField,
    kind: FormKind,
    gram: Optional[Sequence[Sequence[int]]] = None,
    quad: Optional[Sequence[Sequence[int]]] = None,
    sigma: int = 0,
    n: Optional[int] = None,
) -> FormedSpace:
    """Пространство с произвольной формой; тип определяется классификацией"""
    kind = FormKind(kind)
    if kind == FormKind.QUADRATIC:
        if quad is None:
            raise InvalidInputError("Квадратичной форме нужна матрица коэффициентов")
        dim = len(quad)
        upper = [[quad[i][j] if j >= i else 0 for j in range(dim)] for i in range(dim)]
        lower_nonzero = any(quad[i][j] for i in range(dim) for j in range(i))
        if lower_nonzero:
            # симметричная запись: q_ij + q_ji
            upper = [[(quad[i][j] if i == j else field.add(quad[i][j], quad[j][i])) if j >= i else 0
                      for j in range(dim)] for i in range(dim)]
        frozen_quad = _freeze(upper)
        space = FormedSpace(field, dim, kind, FormType.CIRCLE, polar_of(field, frozen_quad), frozen_quad)
    elif kind == FormKind.LINEAR:
        dim = n if n is not None else len(gram or [])
        space = FormedSpace(field, dim, kind, FormType.CIRCLE, _freeze([[0] * dim for _ in range(dim)]))
        return space
    else:
        if gram is None:
            raise InvalidInputError("Нужна матрица Грама")
        dim = len(gram)
        space = FormedSpace(field, dim, kind, FormType.CIRCLE, _freeze(gram), None, sigma)
    _validate(space)
    if kind == FormKind.QUADRATIC and dim % 2 == 0:
        sign = _even_sign(space, list(_identity_rows(dim)))
        space = FormedSpace(field, dim, kind, FormType(sign), space.gram, space.quad, 0)
    return space


def _identity_rows(n: int) -> List[Vector]:
    return [tuple(row) for row in identity(n)]


def _validate(space: FormedSpace) -> None:
    field, n, G = space.field, space.n, space.gram
    if space.kind == FormKind.ALTERNATING:
        for i in range(n):
            if G[i][i]:
                raise InvalidInputError("Знакопеременная форма с ненулевой диагональю")
            for j in range(n):
                if G[i][j] != field.neg[G[j][i]]:
                    raise InvalidInputError("Матрица Грама не кососимметрична")
    if space.kind == FormKind.HERMITIAN:
        for i in range(n):
            for j in range(n):
                if G[j][i] != field.frob(G[i][j], space.sigma):
                    raise InvalidInputError("Матрица Грама не эрмитова")
    rad = radical(space)
    if space.kind == FormKind.QUADRATIC and field.p == 2 and n % 2 == 1:
        if rad.dim != 1 or quad_value(space, rad.rows[0]) == 0:
            raise InvalidInputError("Радикал должен быть неособой 1-мерной прямой")
    elif rad.dim:
        logger.error(f"[FORM] Degenerate form, radical of dimension {rad.dim}")
        raise InvalidInputError("Форма вырождена")


# Вычисление форм

def quad_value(space: FormedSpace, v: Sequence[int]) -> int:
    field = space.field
    add, mul = field.add, field.mul
    total = 0
    for i, j, c in space.quad_terms:
        a, b = v[i], v[j]
        if a and b:
            total = add(total, mul(c, mul(a, b)))
    return total


def pair(space: FormedSpace, u: Sequence[int], v: Sequence[int]) -> int:
    """B(u, v) = u G σ(v)^T"""
    field = space.field
    add, mul = field.add, field.mul
    sv = vec_frob(field, v, space.sigma) if space.sigma else v
    total = 0
    for i, j, c in space.gram_terms:
        a, b = u[i], sv[j]
        if a and b:
            total = add(total, mul(a, mul(c, b)))
    return total


def evaluate(space: FormedSpace, v: Sequence[int]) -> int:
    """Q(v) для квадратичной формы, иначе B(v, v)"""
    if space.kind == FormKind.QUADRATIC:
        return quad_value(space, v)
    return pair(space, v, v)


def gram_on(space: FormedSpace, rows: Sequence[Sequence[int]]) -> Matrix:
    return [[pair(space, u, v) for v in rows] for u in rows]


def restrict(space: FormedSpace, rows: Sequence[Sequence[int]]) -> FormedSpace:
    """Ограничение формы на линейную оболочку строк (в базисе строк)"""
    k = len(rows)
    G = _freeze(gram_on(space, rows))
    quad = None
    if space.kind == FormKind.QUADRATIC:
        quad = _freeze([[quad_value(space, rows[i]) if i == j else (G[i][j] if j > i else 0)
                         for j in range(k)] for i in range(k)])
    return FormedSpace(space.field, k, space.kind, FormType.CIRCLE, G, quad, space.sigma)


def full_space(space: FormedSpace) -> Subspace:
    return Subspace(space.field, space.n, tuple(_identity_rows(space.n)))


def perp(space: FormedSpace, U: Subspace) -> Subspace:
    """U^⊥ относительно полярной (полуторалинейной) формы"""
    if space.kind == FormKind.LINEAR:
        raise InvalidInputError("У линейного пространства нет формы")
    field = space.field
    G = [list(r) for r in space.gram]
    M = [vec_mat(field, u, G) for u in U.rows]
    if not M:
        return full_space(space)
    solutions = nullspace(field, M, space.n)
    back = (field.f - space.sigma) % field.f if space.sigma else 0
    return canonicalize(field, space.n, [vec_frob(field, w, back) for w in solutions])


def radical(space: FormedSpace) -> Subspace:
    return perp(space, full_space(space))


def is_totally_singular(space: FormedSpace, U: Subspace) -> bool:
    rows = U.rows
    for i, u in enumerate(rows):
        if space.kind == FormKind.QUADRATIC and quad_value(space, u):
            return False
        for v in rows[i:]:
            if pair(space, u, v):
                return False
    return True


# Разложение Витта

def hermitian_trace_solution(field: FiniteField, sigma: int, target: int) -> int:
    """c с c + σ(c) = target"""
    for c in range(field.q):
        if field.add(c, field.frob(c, sigma)) == target:
            return c
    raise InvalidInputError(f"Элемент {target} не является следом")


def _combos(field: FiniteField, k: int):
    """Ненулевые наборы коэффициентов с первым ненулевым равным 1"""
    for lead in range(k):
        free = k - lead - 1
        for idx in range(field.q**free):
            tail = []
            for _ in range(free):
                idx, r = divmod(idx, field.q)
                tail.append(r)
            yield [0] * lead + [1] + tail


def _span_vector(field: FiniteField, coeffs: Sequence[int], rows: Sequence[Vector]) -> Vector:
    v: Vector = (0,) * len(rows[0])
    for c, r in zip(coeffs, rows):
        if c:
            v = vec_axpy(field, c, r, v)
    return v


def _find_isotropic(space: FormedSpace, work: Sequence[Vector]) -> Optional[Vector]:
    field = space.field
    if space.kind == FormKind.ALTERNATING:
        return work[0]
    window = list(work[: 3 if space.kind == FormKind.QUADRATIC else 2])
    for coeffs in _combos(field, len(window)):
        v = _span_vector(field, coeffs, window)
        if evaluate(space, v) == 0:
            return v
    return None


def _partner(space: FormedSpace, e: Vector, w: Vector) -> Vector:
    field = space.field
    if space.kind == FormKind.QUADRATIC:
        return vec_axpy(field, field.neg[quad_value(space, w)], e, w)
    if space.kind == FormKind.HERMITIAN:
        c = hermitian_trace_solution(field, space.sigma, field.neg[pair(space, w, w)])
        return vec_axpy(field, c, e, w)
    return w


def _project_out(space: FormedSpace, x: Vector, e: Vector, f: Vector) -> Vector:
    """Проекция x на <e, f>^⊥ для гиперболической пары B(e, f) = 1"""
    field = space.field
    fe = pair(space, f, e)
    b = field.div(pair(space, x, e), fe)
    a = pair(space, x, f)
    x = vec_axpy(field, field.neg[a], e, x)
    return vec_axpy(field, field.neg[b], f, x)


def witt_decomposition(space: FormedSpace, rows: Optional[Sequence[Vector]] = None) -> WittBasis:
    """Разложение на гиперболические пары, анизотропную часть и радикал"""
    field = space.field
    n = space.n
    if rows is None:
        rows = _identity_rows(n)
    rows = [tuple(r) for r in rows]
    result = WittBasis()
    if not rows:
        return result

    G_U = gram_on(space, rows)
    for rel in left_kernel(field, G_U):
        result.radical.append(_span_vector(field, rel, rows))
    work: List[Vector] = []
    spanned = list(result.radical)
    for r in rows:
        if not contains_vector(canonicalize(field, n, spanned) if spanned else Subspace(field, n, ()), r):
            work.append(r)
            spanned.append(r)

    # q чётно, нечётная размерность: сингулярные векторы поднимаются из V/V^⊥
    lift: Optional[Vector] = None
    if (space.kind == FormKind.QUADRATIC and field.p == 2 and len(result.radical) == 1
            and quad_value(space, result.radical[0])):
        lift = result.radical[0]

    while work:
        e0 = work[0] if lift is not None else _find_isotropic(space, work)
        if e0 is None:
            break
        w = next((b for b in work if pair(space, e0, b)), None)
        if w is None:
            break
        e0 = vec_scale(field, field.inv(pair(space, e0, w)), e0)
        if lift is not None:
            e, f = _lift_singular(space, e0, lift), _lift_singular(space, w, lift)
            projected = [_project_out(space, x, e0, w) for x in work]
        else:
            e, f = e0, _partner(space, e0, w)
            projected = [_project_out(space, x, e, f) for x in work]
        result.pairs.append((e, f))
        work = list(rref(field, projected, n)[0])
    result.anisotropic = work
    return result


def _lift_singular(space: FormedSpace, w: Vector, d: Vector) -> Vector:
    """w + c d с Q(w + c d) = 0, d - неособый радикал"""
    field = space.field
    c = field_service.sqrt_code(field, field.div(quad_value(space, w), quad_value(space, d)))
    return vec_axpy(field, c, d, w)


def witt_index(space: FormedSpace, U: Optional[Subspace] = None) -> int:
    """Размерность максимального вполне сингулярного подпространства"""
    rows = list(U.rows) if U is not None else None
    basis = witt_decomposition(space, rows)
    if basis.radical:
        nonsingular_line = (
            space.kind == FormKind.QUADRATIC and space.field.p == 2
            and len(basis.radical) == 1 and quad_value(space, basis.radical[0]) != 0
        )
        if not nonsingular_line:
            raise InvalidInputError("Ограничение формы вырождено")
    return basis.index


@lru_cache(maxsize=None)
def reference_maximal(space: FormedSpace) -> Subspace:
    """Опорное максимальное вполне сингулярное подпространство <e1, ..., em>"""
    basis = witt_decomposition(space)
    return canonicalize(space.field, space.n, [e for e, _ in basis.pairs])


# Инварианты типа

def absolute_trace(field: FiniteField, a: int) -> int:
    total = 0
    for i in range(field.f):
        total = field.add(total, field.frob(a, i))
    return total


def _even_sign(space: FormedSpace, rows: Sequence[Vector]) -> str:
    """Тип невырожденного ограничения чётной размерности"""
    field = space.field
    k = len(rows)
    if field.p != 2:
        d = det(field, gram_on(space, rows))
        if (k // 2) % 2:
            d = field.neg[d]
        return "+" if field_service.is_square_code(field, d) else "-"
    # инвариант Арфа в симплектическом базисе
    arf = 0
    work = [tuple(r) for r in rows]
    while work:
        u = work[0]
        w = next(b for b in work[1:] if pair(space, u, b))
        w = vec_scale(field, field.inv(pair(space, u, w)), w)
        arf = field.add(arf, field.mul(quad_value(space, u), quad_value(space, w)))
        projected = []
        for x in work:
            y = vec_axpy(field, field.neg[pair(space, x, w)], u, x)
            y = vec_axpy(field, field.neg[pair(space, x, u)], w, y)
            projected.append(y)
        work = list(rref(field, projected, space.n)[0])
    return "+" if absolute_trace(field, arf) == 0 else "-"


def classify_subspace(space: FormedSpace, U: Subspace) -> SubspaceClass:
    """Класс изометрии подпространства"""
    if space.kind == FormKind.LINEAR:
        return SubspaceClass("subspace")
    if U.dim == 0 or U.dim >= space.n:
        raise InvalidInputError("Подпространство должно быть ненулевым и собственным")
    field = space.field
    rows = list(U.rows)
    k = len(rows)
    quadratic = space.kind == FormKind.QUADRATIC
    G_U = gram_on(space, rows)
    if not any(any(r) for r in G_U):
        if not quadratic:
            return SubspaceClass("totally-isotropic")
        if not any(quad_value(space, r) for r in rows):
            return SubspaceClass("totally-singular")
    if quadratic and field.p == 2 and k == 1:
        if space.n % 2 and U == radical(space):
            return SubspaceClass("degenerate-other")
        return SubspaceClass("nonsingular-1")
    if left_kernel(field, G_U):
        return SubspaceClass("degenerate-other")
    if not quadratic:
        return SubspaceClass("nondegenerate")
    if k % 2 == 0:
        return SubspaceClass("nondegenerate", _even_sign(space, rows))
    if space.n % 2:
        return SubspaceClass("nondegenerate", _even_sign(space, list(perp(space, U).rows)))
    # k нечётно, n чётно: класс квадратов дискриминанта Q|_U
    half = field.inv(2)
    d = det(field, [[field.mul(half, x) for x in row] for row in G_U])
    return SubspaceClass("nondegenerate", "+" if field_service.is_square_code(field, d) else "-")


def pm_class(space: FormedSpace, U: Subspace) -> str:
    """Класс максимального вполне сингулярного подпространства по чётности коразмерности"""
    U0 = reference_maximal(space)
    codim = U.dim - intersect(U, U0).dim
    return "+" if codim % 2 == 0 else "-"


# Семейства

_FAMILY_RE = re.compile(r"^([PN])(\d+|m)([+\-e]?)$")


def parse_family(text: str, space: FormedSpace) -> FamilyDescriptor:
    """Разбор строки семейства: P1, Pm, Pm+, N2-, N1e, k=2"""
    t = text.strip().replace("−", "-").replace("^", "").replace("_", "")
    if t.startswith("k="):
        try:
            desc = FamilyDescriptor(FamilyLabel.ALL, int(t[2:]))
        except ValueError:
            raise InvalidInputError(f"Некорректное семейство: {text}")
        check_admissible(space, desc)
        return desc
    match = _FAMILY_RE.match(t)
    if not match:
        logger.error(f"[FORM] Cannot parse family descriptor {text!r}")
        raise InvalidInputError(f"Некорректное семейство: {text}")
    head, k_text, sign = match.groups()
    k = space.n // 2 if k_text == "m" else int(k_text)
    if head == "P":
        label = {"": FamilyLabel.TOTALLY_SINGULAR, "+": FamilyLabel.P_PLUS,
                 "-": FamilyLabel.P_MINUS, "e": FamilyLabel.P_EITHER}[sign]
    else:
        label = {"": FamilyLabel.NONDEGENERATE, "+": FamilyLabel.N_PLUS,
                 "-": FamilyLabel.N_MINUS, "e": FamilyLabel.N_EITHER}[sign]
        if (label == FamilyLabel.NONDEGENERATE and k == 1
                and space.kind == FormKind.QUADRATIC and space.field.p == 2):
            label = FamilyLabel.NONSINGULAR_ONE
    desc = FamilyDescriptor(label, k)
    check_admissible(space, desc)
    return desc


def check_admissible(space: FormedSpace, d: FamilyDescriptor) -> None:
    """Допустимость семейства для пространства"""
    n, k, label = space.n, d.k, d.label

    def reject(reason: str) -> None:
        logger.error(f"[FORM] Family {d} inadmissible for {space!r}: {reason}")
        raise InvalidInputError(f"Семейство {d} недопустимо для {space!r}: {reason}")

    if not 1 <= k < n:
        reject("размерность вне диапазона")
    if space.kind == FormKind.LINEAR:
        if label != FamilyLabel.ALL:
            reject("для линейного пространства допустимы только k-подпространства")
        return
    if label == FamilyLabel.ALL:
        reject("k-подпространства допустимы только без формы")
    quadratic = space.kind == FormKind.QUADRATIC
    even_q = space.field.p == 2
    if label in (FamilyLabel.TOTALLY_SINGULAR, FamilyLabel.P_PLUS, FamilyLabel.P_MINUS,
                 FamilyLabel.P_EITHER):
        if k > witt_index(space):
            reject("превышен индекс Витта")
        if label != FamilyLabel.TOTALLY_SINGULAR:
            if not quadratic or space.type != FormType.PLUS or 2 * k != n:
                reject("классы P_m^± существуют только для типа + и k = n/2")
        return
    if label == FamilyLabel.NONSINGULAR_ONE:
        if not (quadratic and even_q and k == 1):
            reject("неособые прямые рассматриваются только при чётном q")
        return
    signed = label in (FamilyLabel.N_PLUS, FamilyLabel.N_MINUS, FamilyLabel.N_EITHER)
    if space.kind == FormKind.ALTERNATING and k % 2:
        reject("невырожденные подпространства знакопеременной формы чётномерны")
    if signed and not quadratic:
        reject("знак определён только для квадратичных форм")
    if quadratic and k % 2 and even_q:
        reject("при чётном q нечётномерные подпространства вырождены")


def in_family(space: FormedSpace, d: FamilyDescriptor, U: Subspace) -> bool:
    if U.dim != d.k:
        return False
    label = d.label
    if label == FamilyLabel.ALL:
        return True
    cls = classify_subspace(space, U)
    if label in (FamilyLabel.TOTALLY_SINGULAR, FamilyLabel.P_EITHER):
        return cls.kind in ("totally-singular", "totally-isotropic")
    if label in (FamilyLabel.P_PLUS, FamilyLabel.P_MINUS):
        return cls.kind == "totally-singular" and pm_class(space, U) == label.value[-1]
    if label == FamilyLabel.NONSINGULAR_ONE:
        return cls.kind == "nonsingular-1"
    if label in (FamilyLabel.NONDEGENERATE, FamilyLabel.N_EITHER):
        return cls.kind in ("nondegenerate", "nonsingular-1")
    return cls.kind == "nondegenerate" and cls.sign == label.value[-1]


def signed_classes(space: FormedSpace, d: FamilyDescriptor) -> List[FamilyDescriptor]:
    """Разбиение семейства на классы, на которых Ω транзитивна"""
    label, k = d.label, d.k
    if label in (FamilyLabel.TOTALLY_SINGULAR, FamilyLabel.P_EITHER):
        if space.kind == FormKind.QUADRATIC and space.type == FormType.PLUS and 2 * k == space.n:
            return [FamilyDescriptor(FamilyLabel.P_PLUS, k), FamilyDescriptor(FamilyLabel.P_MINUS, k)]
        return [FamilyDescriptor(FamilyLabel.TOTALLY_SINGULAR, k)]
    if label in (FamilyLabel.NONDEGENERATE, FamilyLabel.N_EITHER) and space.kind == FormKind.QUADRATIC:
        return [FamilyDescriptor(FamilyLabel.N_PLUS, k), FamilyDescriptor(FamilyLabel.N_MINUS, k)]
    return [d]


def _singular_prune(space: FormedSpace):
    def prune(rows: List[Vector], _pivots: List[int]) -> bool:
        r = rows[-1]
        if evaluate(space, r):
            return False
        return all(pair(space, u, r) == 0 for u in rows[:-1])
    return prune


def find_seed(space: FormedSpace, d: FamilyDescriptor, rng: Optional[random.Random] = None) -> Subspace:
    """Представитель семейства"""
    field, n, k = space.field, space.n, d.k
    if d.label in (FamilyLabel.TOTALLY_SINGULAR, FamilyLabel.P_PLUS, FamilyLabel.P_MINUS,
                   FamilyLabel.P_EITHER):
        basis = witt_decomposition(space)
        es = [e for e, _ in basis.pairs[:k]]
        if d.label == FamilyLabel.P_MINUS:
            es[-1] = basis.pairs[k - 1][1]
        seed = canonicalize(field, n, es)
        if in_family(space, d, seed):
            return seed
    rng = rng or random.Random(settings.SEED)
    for _ in range(settings.SEARCH_TRIALS):
        rows = [[rng.randrange(field.q) for _ in range(n)] for _ in range(k)]
        U = canonicalize(field, n, rows)
        if U.dim == k and in_family(space, d, U):
            return U
    logger.error(f"[FORM] No element of {d} found in {space!r}")
    raise InvalidInputError(f"Семейство {d} пусто в {space!r}")


def enumerate_family(space: FormedSpace, d: FamilyDescriptor, max_orbit: Optional[int] = None) -> List[Subspace]:
    """Все подпространства семейства, отсортированные по ключу"""
    check_admissible(space, d)
    limit = max_orbit or settings.MAX_ORBIT
    expected = count_family(space, d)
    if expected > limit:
        logger.error(f"[FORM] Family {d} of {space!r} has {expected} > {limit} members")
        raise BudgetExceededError(f"Семейство {d} содержит {expected} элементов, бюджет {limit}")
    candidates = gaussian_binomial(space.n, d.k, space.field.q)
    logger.info(f"[FORM] Enumerating {d} in {space!r}: expected {expected}, candidates {candidates}")
    if candidates <= settings.MAX_CANDIDATES:
        prune = None
        if d.label in (FamilyLabel.TOTALLY_SINGULAR, FamilyLabel.P_PLUS, FamilyLabel.P_MINUS,
                       FamilyLabel.P_EITHER):
            prune = _singular_prune(space)
        found = [U for U in enumerate_subspaces(space.field, space.n, d.k, prune)
                 if in_family(space, d, U)]
    else:
        found = _enumerate_by_orbits(space, d, limit)
    found.sort(key=lambda U: U.key)
    logger.info(f"[FORM] Enumerated {len(found)} subspaces of {d}")
    return found


def _enumerate_by_orbits(space: FormedSpace, d: FamilyDescriptor, limit: int) -> List[Subspace]:
    from app.services import group_service, orbit_service

    group = group_service.isometry_group(space, "Ω")
    found: Dict[bytes, Subspace] = {}
    for part in signed_classes(space, d):
        try:
            seed = find_seed(space, part)
        except InvalidInputError:
            continue
        for U in orbit_service.orbit(group, seed, limit):
            found[U.key] = U
    return list(found.values())


# Формулы

def isometry_order(kind: FormKind, sign: str, n: int, q: int) -> int:
    """Порядок группы изометрий (GL, Sp, GU, GO)"""
    if n == 0:
        return 1
    prod = 1
    if kind == FormKind.LINEAR:
        for i in range(1, n + 1):
            prod *= q**i - 1
        return q ** (n * (n - 1) // 2) * prod
    if kind == FormKind.ALTERNATING:
        m = n // 2
        for i in range(1, m + 1):
            prod *= q ** (2 * i) - 1
        return q ** (m * m) * prod
    if kind == FormKind.HERMITIAN:
        for i in range(1, n + 1):
            prod *= q**i - (-1) ** i
        return q ** (n * (n - 1) // 2) * prod
    if n % 2:
        m = (n - 1) // 2
        for i in range(1, m + 1):
            prod *= q ** (2 * i) - 1
        return q ** (m * m) * prod * (2 if q % 2 else 1)
    m = n // 2
    eps = 1 if sign == "+" else -1
    for i in range(1, m):
        prod *= q ** (2 * i) - 1
    return 2 * q ** (m * (m - 1)) * (q**m - eps) * prod


def polar_rank(space: FormedSpace) -> int:
    n = space.n
    if space.kind == FormKind.QUADRATIC:
        if space.type == FormType.MINUS:
            return n // 2 - 1
        return n // 2
    return n // 2


def _polar_points(space: FormedSpace, r: int) -> int:
    """Число точек полярного пространства того же вида ранга r"""
    q = space.q
    if space.kind == FormKind.HERMITIAN:
        a = 2 * r - 1 if space.n % 2 == 0 else 2 * r + 1
        Q = q * q
    else:
        shift = {FormType.PLUS: -1, FormType.MINUS: 1}.get(space.type, 0) if space.kind == FormKind.QUADRATIC else 0
        a = r + shift
        Q = q
    return (Q**r - 1) * (q**a + 1) // (Q - 1)


def _count_totally_singular(space: FormedSpace, k: int) -> int:
    r = polar_rank(space)
    Q = space.q**2 if space.kind == FormKind.HERMITIAN else space.q
    chains, flags = 1, 1
    for i in range(k):
        chains *= _polar_points(space, r - i)
        flags *= (Q ** (i + 1) - 1) // (Q - 1)
    return chains // flags


def _space_sign(space: FormedSpace) -> str:
    return space.type.value if space.type in (FormType.PLUS, FormType.MINUS) else "o"


def _count_nondegenerate_signed(space: FormedSpace, k: int, eps: str) -> int:
    n, q = space.n, space.q
    if k % 2 == 0:
        u_sign = eps
        if n % 2 == 0:
            perp_sign = "+" if (_space_sign(space) == eps) else "-"
        else:
            perp_sign = "o"
    else:
        u_sign = "o"
        perp_sign = eps if n % 2 else "o"
    whole = isometry_order(FormKind.QUADRATIC, _space_sign(space), n, q)
    part = (isometry_order(FormKind.QUADRATIC, u_sign, k, q)
            * isometry_order(FormKind.QUADRATIC, perp_sign, n - k, q))
    return whole // part


def _count_nonsingular_one(space: FormedSpace) -> int:
    n, q = space.n, space.q
    if n % 2:
        return q ** (n - 1) - 1
    m = n // 2
    eps = 1 if space.type == FormType.PLUS else -1
    return q ** (m - 1) * (q**m - eps)


def count_family(space: FormedSpace, d: FamilyDescriptor) -> int:
    """Число подпространств семейства по замкнутой формуле"""
    check_admissible(space, d)
    n, k, q, label = space.n, d.k, space.q, d.label
    if label == FamilyLabel.ALL:
        return gaussian_binomial(n, k, q)
    if label == FamilyLabel.TOTALLY_SINGULAR or label == FamilyLabel.P_EITHER:
        return _count_totally_singular(space, k)
    if label in (FamilyLabel.P_PLUS, FamilyLabel.P_MINUS):
        return _count_totally_singular(space, k) // 2
    if space.kind in (FormKind.ALTERNATING, FormKind.HERMITIAN):
        whole = isometry_order(space.kind, "o", n, q)
        return whole // (isometry_order(space.kind, "o", k, q) * isometry_order(space.kind, "o", n - k, q))
    if label == FamilyLabel.NONSINGULAR_ONE:
        return _count_nonsingular_one(space)
    if label in (FamilyLabel.N_PLUS, FamilyLabel.N_MINUS):
        return _count_nondegenerate_signed(space, k, label.value[-1])
    return _count_nondegenerate_signed(space, k, "+") + _count_nondegenerate_signed(space, k, "-")


# Полуподобия

def similarity_factor(space: FormedSpace, A: Matrix, e: int = 0) -> Optional[int]:
    """λ с A G σ(A)^T = λ σ^e(G) и Q(b_i A) = λ σ^e(Q(b_i)), иначе None"""
    field = space.field
    if space.kind == FormKind.LINEAR:
        return 1
    n = space.n
    lam: Optional[int] = None
    checks: List[Tuple[int, int]] = []
    for i in range(n):
        for j in range(n):
            checks.append((pair(space, A[i], A[j]), field.frob(space.gram[i][j], e)))
    if space.kind == FormKind.QUADRATIC:
        for i in range(n):
            checks.append((quad_value(space, A[i]), field.frob(space.quad[i][i], e)))
    for lhs, rhs in checks:
        if rhs:
            lam = field.div(lhs, rhs)
            break
    if lam is None or lam == 0:
        return None
    for lhs, rhs in checks:
        if lhs != field.mul(lam, rhs):
            return None
    return lam


def is_isometry(space: FormedSpace, A: Matrix, e: int = 0) -> bool:
    return e % space.field.f == 0 and similarity_factor(space, A, 0) == 1
