import itertools
import logging
from typing import List, Optional, Sequence, Tuple

from app.core.exceptions import InvalidInputError
from app.models.field import FiniteField
from app.models.form import FamilyDescriptor, FormedSpace, FormKind, FormType
from app.models.group import MatrixGroup, SemilinearMap
from app.models.matrix import Matrix, Vector
from app.services import field_service, form_service, group_service
from app.services.matspace_service import (
    block_diagonal, canonicalize, identity, inverse, mat_frob, mat_mul, transpose, unit_vector, vec_add,
)

logger = logging.getLogger(__name__)


# Раздутие: пространство над GF(q^b) как пространство над GF(q)

class BlowUp:
    """Координаты V(a, q^b) -> V(ab, q) по базису 1, w, ..., w^(b-1)

    Внешний базисный вектор с номером i*b + j соответствует w^j e_i.
    """

    def __init__(self, big: FiniteField, small: FiniteField, a: int):
        if big.p != small.p or big.f % small.f:
            raise InvalidInputError(f"{small!r} не является подполем {big!r}")
        self.big = big
        self.small = small
        self.a = a
        self.b = big.f // small.f
        self.basis, self.table = field_service.coordinates(big, small)
        self.embed = field_service.embed_subfield(small, big)

    @property
    def n(self) -> int:
        return self.a * self.b

    def inner_vector(self, k: int) -> Vector:
        i, j = divmod(k, self.b)
        return unit_vector(self.a, i, self.basis[j])

    def flatten(self, v: Sequence[int]) -> Vector:
        out: List[int] = []
        for x in v:
            out.extend(self.table[x])
        return tuple(out)

    def lift(self, v: Sequence[int]) -> Vector:
        big = self.big
        out = [0] * self.a
        for k, c in enumerate(v):
            if c:
                i, j = divmod(k, self.b)
                out[i] = big.add(out[i], big.mul(self.embed[c], self.basis[j]))
        return tuple(out)

    def relative_trace(self, code: int, degree: Optional[int] = None, step: Optional[int] = None) -> int:
        """Σ σ^{i·step}(code) по i < degree, результат - код в small"""
        big = self.big
        degree = self.b if degree is None else degree
        step = self.small.f if step is None else step
        total = 0
        for i in range(degree):
            total = big.add(total, big.frob(code, i * step))
        return field_service.restrict_to_subfield(big, self.small, total)

    def outer_map(self, g: SemilinearMap) -> SemilinearMap:
        """Полулинейное над GF(q) отображение по образам w^j e_i"""
        rows = [self.flatten(g(self.inner_vector(k))) for k in range(self.n)]
        return SemilinearMap.of(self.small, rows, g.e % self.small.f)


def _outer_space(blow: BlowUp, inner: FormedSpace, outer_kind: FormKind, xi: int = 1) -> FormedSpace:
    """Форма Tr(ξ β) на раздутом пространстве"""
    small, big, n = blow.small, blow.big, blow.n
    vectors = [blow.inner_vector(k) for k in range(n)]
    if outer_kind == FormKind.LINEAR:
        return form_service.make_space(small, FormKind.LINEAR, n=n)
    if outer_kind == FormKind.QUADRATIC:
        if inner.kind == FormKind.QUADRATIC:
            def value(v: Vector) -> int:
                return blow.relative_trace(big.mul(xi, form_service.quad_value(inner, v)))
        elif inner.kind == FormKind.HERMITIAN:
            # h(v, v) лежит в неподвижном поле σ
            fixed_degree = (big.f // 2) // small.f

            def value(v: Vector) -> int:
                return blow.relative_trace(form_service.pair(inner, v, v), fixed_degree)
        else:
            raise InvalidInputError(f"Нет квадратичной формы из {inner.kind.value}")
        values = [value(v) for v in vectors]
        quad = [[0] * n for _ in range(n)]
        for i in range(n):
            quad[i][i] = values[i]
            for j in range(i + 1, n):
                both = value(vec_add(big, vectors[i], vectors[j]))
                quad[i][j] = small.sub(small.sub(both, values[i]), values[j])
        return form_service.make_space(small, FormKind.QUADRATIC, quad=quad)
    if inner.kind != outer_kind:
        raise InvalidInputError(f"Нет вложения {inner.kind.value} -> {outer_kind.value}")
    gram = [[blow.relative_trace(big.mul(xi, form_service.pair(inner, u, v))) for v in vectors]
            for u in vectors]
    sigma = small.f // 2 if outer_kind == FormKind.HERMITIAN else 0
    return form_service.make_space(small, outer_kind, gram=gram, sigma=sigma)


def embed_field_extension(
    inner_kind: FormKind,
    a: int,
    b: int,
    q: int,
    outer_kind: Optional[FormKind] = None,
    layer: str = "Ω",
    inner_type: Optional[FormType] = None,
    frob: int = 0,
    step: Optional[int] = None,
) -> MatrixGroup:
    """Группа над GF(q^b) размерности a как подгруппа внешней группы над GF(q)

    `frob` добавляет степень отображения x -> x^q (x -> x^{q^2} для эрмитовых форм);
    `step` задаёт показатель этого отображения над GF(p) явно.
    """
    inner_kind = FormKind(inner_kind)
    outer_kind = FormKind(outer_kind or inner_kind)
    if b < 1 or a < 1:
        raise InvalidInputError("Степени a и b должны быть положительны")
    if outer_kind == FormKind.HERMITIAN and b % 2 == 0:
        raise InvalidInputError("Эрмитово раздутие требует нечётного b")
    inner_q = q**b
    inner_group = group_service.classical_group(layer, inner_kind, a, inner_q, inner_type)
    inner = inner_group.space
    if inner_kind != FormKind.HERMITIAN and outer_kind == FormKind.HERMITIAN:
        raise InvalidInputError("Эрмитова внешняя форма требует эрмитовой внутренней")
    big = inner.field
    small = form_service.form_field(outer_kind, q)[0]
    blow = BlowUp(big, small, a)
    space = _outer_space(blow, inner, outer_kind)
    gens = [blow.outer_map(g) for g in inner_group.generators]
    if frob:
        step = step or small.f
        phi = SemilinearMap.of(big, identity(a), step * frob)
        if form_service.similarity_factor(inner, phi.matrix, phi.e) is None:
            raise InvalidInputError("Отображение Фробениуса не сохраняет внутреннюю форму")
        gens.append(blow.outer_map(phi))
    for g in gens:
        if form_service.similarity_factor(space, g.matrix, g.e) is None:
            logger.error(f"[GROUP] Blown-up generator does not preserve the outer form of {space!r}")
            raise InvalidInputError("Раздутая образующая не сохраняет форму")
    label = f"{inner_group.name}" + (f".{frob}" if frob else "")
    group = MatrixGroup(space, group_service._dedupe(gens), name=f"{label}<{space!r}")
    logger.info(f"[GROUP] Field extension {label} inside {space!r}")
    return group


def embed_su_into_orthogonal(m: int, q: int, b: int = 1) -> MatrixGroup:
    """SU_m(q^b) в O_{2mb}(q) с Q(v) = Tr h(v, v)"""
    return embed_field_extension(FormKind.HERMITIAN, m, b, q, FormKind.QUADRATIC, layer="S")


def singer(q: int, frob: int = 1, step: Optional[int] = None, dim: int = 3) -> MatrixGroup:
    """GU_1(q^3) ⋊ <x -> x^{q^2}> в U_3(q); при dim=4 - в U_4(q) на <d>^⊥"""
    group = embed_field_extension(FormKind.HERMITIAN, 1, 3, q, FormKind.HERMITIAN, layer="I",
                                  frob=frob, step=step)
    if dim == 4:
        group = add_orthogonal_point(group)
    elif dim != 3:
        raise InvalidInputError(f"Цикл Зингера строится в размерности 3 или 4, не {dim}")
    return group


def add_orthogonal_point(group: MatrixGroup) -> MatrixGroup:
    """Группа на V ⊕ <d> с β(d, d) = 1, тождественная на d"""
    src = group.space
    field, n = src.field, src.n
    if src.kind == FormKind.QUADRATIC:
        quad = block_diagonal([[list(r) for r in src.quad], [[1]]])
        space = form_service.make_space(field, FormKind.QUADRATIC, quad=quad)
    elif src.kind == FormKind.HERMITIAN:
        gram = block_diagonal([[list(r) for r in src.gram], [[1]]])
        space = form_service.make_space(field, FormKind.HERMITIAN, gram=gram, sigma=src.sigma)
    else:
        raise InvalidInputError(f"Неособая точка не добавляется к форме {src.kind.value}")
    gens = [SemilinearMap.of(field, block_diagonal([g.matrix, [[1]]]), g.e) for g in group.generators]
    for g in gens:
        if form_service.similarity_factor(space, g.matrix, g.e) != 1:
            raise InvalidInputError("Расширение тождеством требует изометрий")
    return MatrixGroup(space, gens, name=f"{group.name}+1", cached_order=group.cached_order)


# Подполе

def embed_subfield(inner_kind: FormKind, n: int, q0: int, q: int, layer: str = "Ω",
                   inner_type: Optional[FormType] = None) -> MatrixGroup:
    """Группа над GF(q0) в группе над GF(q); Sp над GF(q) в U над GF(q^2)"""
    inner_kind = FormKind(inner_kind)
    inner_group = group_service.classical_group(layer, inner_kind, n, q0, inner_type)
    inner = inner_group.space
    small = inner.field
    if inner_kind == FormKind.ALTERNATING and q0 == q:
        big, sigma = form_service.form_field(FormKind.HERMITIAN, q)
        outer_kind = FormKind.HERMITIAN
    else:
        big, sigma = field_service.field_of_order(q), 0
        outer_kind = inner_kind
    embed = field_service.embed_subfield(small, big)
    if outer_kind == FormKind.HERMITIAN:
        # ζ с σ(ζ) = -ζ
        zeta = next(c for c in range(1, big.q) if big.add(c, big.frob(c, sigma)) == 0)
        gram = [[big.mul(zeta, embed[x]) for x in row] for row in inner.gram]
        space = form_service.make_space(big, outer_kind, gram=gram, sigma=sigma)
    elif outer_kind == FormKind.QUADRATIC:
        quad = [[embed[x] for x in row] for row in inner.quad]
        space = form_service.make_space(big, outer_kind, quad=quad)
    elif outer_kind == FormKind.LINEAR:
        space = form_service.make_space(big, outer_kind, n=n)
    else:
        gram = [[embed[x] for x in row] for row in inner.gram]
        space = form_service.make_space(big, outer_kind, gram=gram)
    gens = []
    for g in inner_group.generators:
        if g.e:
            raise InvalidInputError("Вложение подполя не переносит полулинейные образующие")
        gens.append(SemilinearMap.of(big, [[embed[x] for x in row] for row in g.A]))
    return MatrixGroup(space, gens, name=f"{inner_group.name}<{space!r}")


# Подгруппа Леви

def levi(inner_kind: FormKind, m: int, q: int, outer_kind: FormKind = FormKind.QUADRATIC,
         layer: str = "S", similarity: bool = False) -> MatrixGroup:
    """A ⊕ A^{-T} на E ⊕ F, E и F - дополнительные максимальные вполне сингулярные

    Для эрмитовой формы A ⊕ σ(A)^{-T} с A над GF(q^2). При similarity
    добавляется подобие diag(I, ωI) с множителем ω.
    """
    outer_kind = FormKind(outer_kind)
    inner_q = q * q if outer_kind == FormKind.HERMITIAN else q
    inner_group = group_service.classical_group(layer, inner_kind, m, inner_q)
    field = inner_group.field
    n = 2 * m
    sigma = 0
    if outer_kind == FormKind.QUADRATIC:
        quad = [[1 if j == i + m else 0 for j in range(n)] for i in range(n)]
        space = form_service.make_space(field, outer_kind, quad=quad)
    elif outer_kind in (FormKind.ALTERNATING, FormKind.HERMITIAN):
        sigma = field.f // 2 if outer_kind == FormKind.HERMITIAN else 0
        gram = [[0] * n for _ in range(n)]
        for i in range(m):
            gram[i][i + m] = 1
            gram[i + m][i] = 1 if outer_kind == FormKind.HERMITIAN else field.neg[1]
        space = form_service.make_space(field, outer_kind, gram=gram, sigma=sigma)
    else:
        raise InvalidInputError(f"Подгруппа Леви не определена для {outer_kind.value}")
    gens = []
    for g in inner_group.generators:
        A = g.matrix
        dual = mat_frob(field, transpose(inverse(field, A)), sigma)
        gens.append(SemilinearMap.of(field, block_diagonal([A, dual]), g.e))
    if similarity:
        if outer_kind != FormKind.QUADRATIC:
            raise InvalidInputError("Подобие в подгруппе Леви строится только для квадратичной формы")
        omega = field.exp[1]
        gens.append(SemilinearMap.of(field, block_diagonal([identity(m), _scalar(m, omega)])))
    for g in gens:
        if form_service.similarity_factor(space, g.matrix, g.e) is None:
            raise InvalidInputError("Образующая Леви не является подобием")
    label = f"Levi({inner_group.name})" + (".ω" if similarity else "")
    return MatrixGroup(space, group_service._dedupe(gens), name=f"{label}<{space!r}")


def _scalar(m: int, c: int) -> Matrix:
    return [[c if i == j else 0 for j in range(m)] for i in range(m)]


# Приводимые подгруппы

def _extend_on_subspace(space: FormedSpace, rows: Sequence[Vector], rest: Sequence[Vector],
                        inner: MatrixGroup) -> List[SemilinearMap]:
    """g на <rows> (в базисе rows) и тождество на <rest>"""
    field = space.field
    C = [list(r) for r in rows] + [list(r) for r in rest]
    C_inv = inverse(field, C)
    out = []
    for g in inner.generators:
        if g.e:
            raise InvalidInputError("Приводимая конструкция переносит только линейные образующие")
        N = block_diagonal([g.matrix, identity(len(rest))])
        out.append(SemilinearMap.of(field, mat_mul(field, mat_mul(field, C_inv, N), C)))
    return out


def reducible(
    space: FormedSpace,
    family: FamilyDescriptor,
    mode: str = "fix",
    layer: str = "Ω",
    swap: bool = False,
) -> MatrixGroup:
    """Ω подпространства W (mode=active) или W^⊥ (mode=fix), тождественная на дополнении

    swap добавляет отражение в неособом векторе W.
    """
    if mode not in ("fix", "active"):
        raise InvalidInputError(f"Неизвестный режим {mode}")
    W = form_service.find_seed(space, family)
    W_perp = form_service.perp(space, W)
    acting, still = (W_perp, W) if mode == "fix" else (W, W_perp)
    rows, rest = list(acting.rows), list(still.rows)
    sub = form_service.restrict(space, rows)
    inner = group_service.isometry_group(sub, layer)
    gens = _extend_on_subspace(space, rows, rest, inner)
    if swap:
        if space.kind != FormKind.QUADRATIC:
            raise InvalidInputError("Перестановка классов определена для квадратичных форм")
        w = next((v for v in _span_sample(space, W.rows) if form_service.quad_value(space, v)), None)
        if w is None:
            raise InvalidInputError("В подпространстве нет неособого вектора")
        gens.append(group_service.reflection(space, w))
    name = f"{layer}({mode} {family})" + (".2" if swap else "")
    return MatrixGroup(space, group_service._dedupe(gens), name=name)


def _span_sample(space: FormedSpace, rows: Sequence[Vector]) -> List[Vector]:
    field = space.field
    out = list(rows)
    for i, u in enumerate(rows):
        for v in rows[i + 1:]:
            for c in range(1, field.q):
                out.append(tuple(field.add(x, field.mul(c, y)) for x, y in zip(u, v)))
    return out


# Квадратичное уточнение и подъём (q чётно)

def subform(m: int, q: int, form_type: FormType = FormType.MINUS) -> MatrixGroup:
    """Ω^ε_{2m}(q), сохраняющая квадратичное уточнение знакопеременной формы"""
    if q % 2:
        raise InvalidInputError("Квадратичное уточнение рассматривается при чётном q")
    orth = group_service.classical_group("Ω", FormKind.QUADRATIC, 2 * m, q, FormType(form_type))
    symp = form_service.standard_space(FormKind.ALTERNATING, 2 * m, q)
    if orth.space.gram != symp.gram:
        raise InvalidInputError("Полярная форма не совпадает со стандартной знакопеременной")
    return MatrixGroup(symp, list(orth.generators), name=f"{orth.name}<{symp!r}")


def lift(group: MatrixGroup) -> MatrixGroup:
    """Группа Sp_{2m}(q), q чётно, поднятая в O_{2m+1}(q)"""
    src = group.space
    field = src.field
    if field.p != 2 or src.kind != FormKind.ALTERNATING:
        raise InvalidInputError("Подъём определён для симплектических групп при чётном q")
    std = form_service.standard_space(FormKind.ALTERNATING, src.n, field.q)
    if src.gram != std.gram:
        raise InvalidInputError("Подъём ожидает стандартную знакопеременную форму")
    n = src.n + 1
    target = form_service.standard_space(FormKind.QUADRATIC, n, field.q, FormType.CIRCLE)
    gens = []
    for g in group.generators:
        rows = [unit_vector(n, 0)]
        for i in range(src.n):
            w = unit_vector(n, i + 1)
            image = (0,) + tuple(g(unit_vector(src.n, i)))
            qw = field.frob(form_service.quad_value(target, w), g.e)
            c = field_service.sqrt_code(field, field.add(qw, form_service.quad_value(target, image)))
            rows.append((c,) + image[1:])
        gens.append(SemilinearMap.of(field, rows, g.e))
    return MatrixGroup(target, gens, name=f"lift({group.name})", cached_order=group.cached_order)


def _frame_profile(space: FormedSpace, rows: Sequence[Vector]) -> Tuple[Matrix, List[int]]:
    return form_service.gram_on(space, rows), [form_service.evaluate(space, r) for r in rows]


def transplant(group: MatrixGroup, target: FormedSpace) -> MatrixGroup:
    """Перенос группы в изометричное пространство через реперы Витта"""
    src = group.space
    if (src.kind, src.n, src.field) != (target.kind, target.n, target.field) or (
        src.kind == FormKind.QUADRATIC and src.type != target.type
    ):
        logger.error(f"[GROUP] Cannot transplant {group.name} from {src!r} to {target!r}")
        raise InvalidInputError(f"Пространства {src!r} и {target!r} не изометричны")
    field = src.field
    frame_src, frame_tgt = group_service.frame_of(src), group_service.frame_of(target)
    rows_src, rows_tgt = frame_src.rows, frame_tgt.rows
    images = rows_tgt
    if _frame_profile(src, rows_src) != _frame_profile(target, rows_tgt):
        images = _match_tail(src, target, rows_src, rows_tgt)
    # x -> xT переводит строки репера src в images
    T = mat_mul(field, inverse(field, [list(r) for r in rows_src]), [list(r) for r in images])
    x = SemilinearMap.of(field, T)
    gens = [x.inverse() * g * x for g in group.generators]
    for g in gens:
        if form_service.similarity_factor(target, g.matrix, g.e) is None:
            raise InvalidInputError("Перенос не сохраняет форму")
    return MatrixGroup(target, gens, name=group.name, cached_order=group.cached_order)


def _match_tail(src: FormedSpace, target: FormedSpace, rows_src: List[Vector],
                rows_tgt: List[Vector]) -> List[Vector]:
    """Образы анизотропной части и радикала с теми же значениями формы"""
    field = src.field
    head = 2 * len(group_service.frame_of(src).pairs)
    tail_src, tail_tgt = rows_src[head:], rows_tgt[head:]
    k = len(tail_src)
    want = _frame_profile(src, tail_src)
    for entries in itertools.product(range(field.q), repeat=k * k):
        images = [_combine(field, entries[i * k:(i + 1) * k], tail_tgt) for i in range(k)]
        if _frame_profile(target, images) == want and canonicalize(field, src.n, images).dim == k:
            return rows_tgt[:head] + images
    raise InvalidInputError("Анизотропные части не изометричны")


def _combine(field: FiniteField, coeffs: Sequence[int], rows: Sequence[Vector]) -> Vector:
    out = tuple(0 for _ in rows[0])
    for c, r in zip(coeffs, rows):
        if c:
            out = tuple(field.add(a, field.mul(c, b)) for a, b in zip(out, r))
    return out
