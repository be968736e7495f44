import logging
from dataclasses import dataclass, field as dc_field
from typing import Dict, List, Optional, Sequence, Tuple

from sympy.combinatorics import Permutation, PermutationGroup

from app.core.config import Budget, settings
from app.core.exceptions import BudgetExceededError, InvalidInputError, MismatchError
from app.models.form import FamilyDescriptor, FamilyLabel, FormedSpace, FormKind, FormType
from app.models.group import MatrixGroup, SemilinearMap
from app.models.matrix import Subspace
from app.services import form_service, group_service
from app.services.matspace_service import enumerate_subspaces, gaussian_binomial, image

logger = logging.getLogger(__name__)


@dataclass
class OrbitInfo:
    representative: Subspace
    length: int
    min_key: bytes


@dataclass
class OrbitPartition:
    """Разбиение семейства на орбиты"""
    family_size: int
    orbits: List[OrbitInfo] = dc_field(default_factory=list)

    @property
    def lengths(self) -> List[int]:
        return [o.length for o in self.orbits]

    @property
    def is_transitive(self) -> bool:
        return len(self.orbits) == 1 and self.orbits[0].length == self.family_size


def orbit(G: MatrixGroup, seed: Subspace, limit: Optional[int] = None) -> List[Subspace]:
    """Орбита подпространства, обход в ширину по каноническим ключам"""
    limit = limit or settings.MAX_ORBIT
    seen: Dict[bytes, Subspace] = {seed.key: seed}
    frontier = [seed]
    while frontier:
        nxt = []
        for U in frontier:
            for g in G.generators:
                W = image(U, g.matrix, g.e)
                if W.key not in seen:
                    seen[W.key] = W
                    nxt.append(W)
        if len(seen) > limit:
            logger.error(f"[ORBIT] Orbit of {G.name} exceeds {limit} elements")
            raise BudgetExceededError(f"Орбита больше {limit} элементов")
        frontier = nxt
    logger.debug(f"[ORBIT] Orbit of length {len(seen)} under {G.name}")
    return list(seen.values())


def partition(G: MatrixGroup, family: Sequence[Subspace], limit: Optional[int] = None,
              check_order: bool = True) -> OrbitPartition:
    """Орбиты группы на явно заданном семействе"""
    remaining = {U.key: U for U in family}
    result = OrbitPartition(len(family))
    for key in sorted(remaining):
        if key not in remaining:
            continue
        orb = orbit(G, remaining[key], limit)
        for U in orb:
            if remaining.pop(U.key, None) is None:
                logger.error(f"[ORBIT] {G.name} moves a subspace outside the family")
                raise InvalidInputError("Группа не сохраняет семейство")
        result.orbits.append(OrbitInfo(orb[0], len(orb), min(U.key for U in orb)))
    if check_order and G.generators:
        _check_lengths(G, result)
    logger.info(f"[ORBIT] {G.name}: {len(result.orbits)} orbits, lengths {result.lengths[:8]}")
    return result


def _check_lengths(G: MatrixGroup, part: OrbitPartition) -> None:
    order = group_service.group_order(G)
    for o in part.orbits:
        if order % o.length:
            logger.error(f"[ORBIT] Orbit length {o.length} does not divide |{G.name}| = {order}")
            raise MismatchError(f"Длина орбиты {o.length} не делит порядок группы {order}")


def is_transitive(
    G: MatrixGroup,
    space: FormedSpace,
    d: FamilyDescriptor,
    budget: Optional[Budget] = None,
) -> Tuple[bool, OrbitPartition]:
    """Транзитивность на семействе и разбиение на орбиты

    Для объединений Pe и Ne достаточно транзитивности на одном из классов.
    """
    budget = budget or Budget()
    expected = form_service.count_family(space, d)
    if expected > budget.max_orbit:
        logger.error(f"[ORBIT] Family {d} of size {expected} exceeds budget")
        raise BudgetExceededError(f"Семейство {d} содержит {expected} элементов")
    classes = form_service.signed_classes(space, d) if d.is_either else [d]
    if len(classes) == 1:
        fast = _seed_check(G, space, d, expected, budget)
        if fast is not None:
            return True, fast
    members = form_service.enumerate_family(space, d, budget.max_orbit)
    if len(members) != expected:
        logger.error(f"[ORBIT] Enumerated {len(members)} members of {d}, formula gives {expected}")
        raise MismatchError(f"Перечисление {d}: {len(members)} вместо {expected}")
    part = partition(G, members, budget.max_orbit)
    if part.is_transitive:
        return True, part
    if d.is_either:
        for cls in classes:
            size = form_service.count_family(space, cls)
            if any(o.length == size and form_service.in_family(space, cls, o.representative)
                   for o in part.orbits):
                return True, part
    return False, part


def _seed_check(G: MatrixGroup, space: FormedSpace, d: FamilyDescriptor, expected: int,
                budget: Budget) -> Optional[OrbitPartition]:
    """Орбита одного представителя покрывает всё семейство"""
    try:
        seed = form_service.find_seed(space, d)
    except InvalidInputError:
        return None
    orb = orbit(G, seed, budget.max_orbit)
    if len(orb) != expected:
        return None
    if not all(form_service.in_family(space, d, U) for U in orb):
        raise InvalidInputError("Группа не сохраняет семейство")
    part = OrbitPartition(expected, [OrbitInfo(seed, len(orb), min(U.key for U in orb))])
    if G.generators:
        _check_lengths(G, part)
    return part


def scalar_kernel(G: MatrixGroup) -> int:
    """Порядок подгруппы скалярных матриц в G"""
    field, n = G.field, G.n
    if not G.generators:
        return 1
    count = 0
    for c in range(1, field.q):
        g = SemilinearMap.of(field, [[c if i == j else 0 for j in range(n)] for i in range(n)])
        if group_service.contains(G, g):
            count += 1
    return count


def is_regular(G: MatrixGroup, space: FormedSpace, d: FamilyDescriptor,
               budget: Optional[Budget] = None) -> bool:
    transitive, part = is_transitive(G, space, d, budget)
    if not transitive:
        return False
    order = group_service.group_order(G)
    return order // scalar_kernel(G) == part.family_size


# Действие на явном списке объектов

def action_on(G: MatrixGroup, objects: Sequence[Subspace]) -> List[List[int]]:
    """Перестановки, индуцированные образующими на списке подпространств"""
    index = {U.key: i for i, U in enumerate(objects)}
    perms = []
    for g in G.generators:
        images = []
        for U in objects:
            W = image(U, g.matrix, g.e)
            j = index.get(W.key)
            if j is None:
                raise InvalidInputError("Множество объектов не инвариантно")
            images.append(j)
        perms.append(images)
    return perms


def point_orbits(perms: Sequence[Sequence[int]], degree: int) -> List[List[int]]:
    """Орбиты группы перестановок на {0, ..., degree-1}"""
    seen = [False] * degree
    out = []
    for start in range(degree):
        if seen[start]:
            continue
        seen[start] = True
        orb = [start]
        i = 0
        while i < len(orb):
            x = orb[i]
            for p in perms:
                y = p[x]
                if not seen[y]:
                    seen[y] = True
                    orb.append(y)
            i += 1
        out.append(orb)
    return out


def is_primitive(G: MatrixGroup, objects: Sequence[Subspace],
                 budget: Optional[Budget] = None) -> Tuple[bool, Optional[List[int]]]:
    """Примитивность на транзитивном множестве; свидетель - минимальный блок"""
    budget = budget or Budget()
    degree = len(objects)
    if degree > budget.max_primitive:
        logger.error(f"[ORBIT] Primitivity test on {degree} points exceeds budget")
        raise BudgetExceededError(f"Проверка примитивности на {degree} точках превышает бюджет")
    perms = action_on(G, objects)
    if len(point_orbits(perms, degree)) != 1:
        raise InvalidInputError("Проверка примитивности требует транзитивного действия")
    if degree <= 2:
        return True, None
    P = PermutationGroup([Permutation(p) for p in perms])
    for other in range(1, degree):
        blocks = P.minimal_block([0, other])
        block = [i for i, b in enumerate(blocks) if b == blocks[0]]
        if len(block) < degree:
            logger.info(f"[ORBIT] Imprimitive: block of size {len(block)} on {degree} points")
            return False, block
    logger.info(f"[ORBIT] Primitive on {degree} points")
    return True, None


# Факторизации

def fixed_object(G: MatrixGroup, B: MatrixGroup, budget: Optional[Budget] = None) -> Subspace:
    """Подпространство со стабилизатором в G, равным B"""
    budget = budget or Budget()
    field, n = G.field, G.n
    order_g = group_service.group_order(G)
    order_b = group_service.group_order(B)
    for k in range(1, n):
        if gaussian_binomial(n, k, field.q) > settings.MAX_CANDIDATES:
            break
        for U in enumerate_subspaces(field, n, k):
            if all(image(U, g.matrix, g.e).key == U.key for g in B.generators):
                if len(orbit(G, U, budget.max_orbit)) * order_b == order_g:
                    return U
    logger.error(f"[ORBIT] No subspace with stabilizer {B.name} found")
    raise InvalidInputError("Не найдено подпространство со стабилизатором B")


def check_factorisation(
    G: MatrixGroup,
    A: MatrixGroup,
    B: Optional[MatrixGroup] = None,
    seed: Optional[Subspace] = None,
    budget: Optional[Budget] = None,
) -> bool:
    """G = AB тогда и только тогда, когда A транзитивна на G-орбите объекта, фиксируемого B"""
    budget = budget or Budget()
    if seed is None:
        if B is None:
            raise InvalidInputError("Нужна подгруппа B или фиксируемый ею объект")
        seed = fixed_object(G, B, budget)
    whole = orbit(G, seed, budget.max_orbit)
    part = orbit(A, seed, budget.max_orbit)
    logger.info(f"[ORBIT] Factorisation check: |G-orbit| = {len(whole)}, |A-orbit| = {len(part)}")
    return len(part) == len(whole)


# Разбиение P_m на два класса

def omega_split_Pm(space: FormedSpace, omega: Optional[MatrixGroup] = None,
                   budget: Optional[Budget] = None) -> Tuple[List[Subspace], List[Subspace]]:
    """Классы P_m^+ и P_m^-, каждый - одна Ω-орбита"""
    if space.kind != FormKind.QUADRATIC or space.type != FormType.PLUS:
        raise InvalidInputError("Разбиение P_m определено для квадратичных форм типа +")
    budget = budget or Budget()
    m = space.n // 2
    omega = omega or group_service.isometry_group(space, "Ω")
    members = form_service.enumerate_family(space, FamilyDescriptor(FamilyLabel.TOTALLY_SINGULAR, m),
                                            budget.max_orbit)
    plus = [U for U in members if form_service.pm_class(space, U) == "+"]
    minus = [U for U in members if form_service.pm_class(space, U) == "-"]
    reference = form_service.reference_maximal(space)
    orb = orbit(omega, reference, budget.max_orbit)
    if sorted(U.key for U in orb) != sorted(U.key for U in plus):
        logger.error(f"[ORBIT] Ω-orbit of the reference space differs from P_m^+ in {space!r}")
        raise MismatchError("Ω-орбита опорного пространства не совпадает с P_m^+")
    if minus:
        orb = orbit(omega, minus[0], budget.max_orbit)
        if sorted(U.key for U in orb) != sorted(U.key for U in minus):
            logger.error(f"[ORBIT] P_m^- is not a single Ω-orbit in {space!r}")
            raise MismatchError("P_m^- не является одной Ω-орбитой")
    return plus, minus


def swaps_classes(space: FormedSpace, g: SemilinearMap, plus: Sequence[Subspace],
                  minus: Sequence[Subspace]) -> bool:
    """g переводит P_m^+ в P_m^- и обратно"""
    plus_keys = {U.key for U in plus}
    minus_keys = {U.key for U in minus}
    for U in plus:
        if image(U, g.matrix, g.e).key not in minus_keys:
            return False
    for U in minus:
        if image(U, g.matrix, g.e).key not in plus_keys:
            return False
    return True