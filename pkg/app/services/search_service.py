import json
import logging
import random
import threading
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from pydantic import ValidationError
from sympy.combinatorics import Permutation, PermutationGroup

from app.core.config import Budget, settings
from app.core.exceptions import DataFileError, InvalidInputError
from app.models.form import FormedSpace, FormKind, FormType
from app.models.group import MatrixGroup, SemilinearMap
from app.models.matrix import Subspace
from app.schemas.search import SearchResult, SearchSpec
from app.services import form_service, group_service, orbit_service
from app.services.field_service import field_of_order

logger = logging.getLogger(__name__)


def data_dir() -> Path:
    return Path(settings.FORMED_DATA_DIR)


def generator_path(name: str) -> Path:
    return data_dir() / "generators" / f"{name}.json"


def load_searches(path: Optional[Path] = None) -> Dict[str, SearchSpec]:
    """Описания поисков из searches.json"""
    path = path or data_dir() / "searches.json"
    try:
        raw = json.loads(Path(path).read_text())
        specs = [SearchSpec.model_validate(item) for item in raw]
    except FileNotFoundError:
        logger.error(f"[SEARCH] Search file {path} not found")
        raise DataFileError(f"Файл поисков не найден: {path}")
    except (ValueError, ValidationError) as exc:
        logger.error(f"[SEARCH] Search file {path} is malformed: {exc}")
        raise DataFileError(f"Повреждён файл поисков {path}: {exc}")
    return {s.name: s for s in specs}


def output_names(spec: SearchSpec) -> List[str]:
    if not spec.outputs:
        return [spec.name]
    return [f"{spec.name}_{suffix}" for suffix in spec.outputs]


def search_for_file(name: str, searches: Optional[Dict[str, SearchSpec]] = None) -> Optional[SearchSpec]:
    """Поиск, который порождает файл образующих с данным именем"""
    searches = searches if searches is not None else load_searches()
    for spec in searches.values():
        if name in output_names(spec):
            return spec
    return None


_locks: Dict[str, threading.Lock] = {}
_locks_guard = threading.Lock()


def _search_lock(name: str) -> threading.Lock:
    with _locks_guard:
        return _locks.setdefault(name, threading.Lock())


def ensure_generators(name: str, budget: Optional[Budget] = None) -> MatrixGroup:
    """Файл образующих; при отсутствии материализуется записанным поиском"""
    path = generator_path(name)
    if not path.exists():
        spec = search_for_file(name)
        if spec is None:
            logger.error(f"[SEARCH] No generator file and no search for {name}")
            raise DataFileError(f"Нет файла образующих {name} и поиска для него")
        # один поиск на все файлы, которые он пишет; остальные потоки ждут результат
        with _search_lock(spec.name):
            if not path.exists():
                run_search(spec, budget)
    return group_service.load_generators(path)


def _ambient(spec: SearchSpec) -> MatrixGroup:
    a = spec.ambient
    form_type = FormType(a.type) if a.type else None
    return group_service.classical_group(a.layer, FormKind(a.kind), a.n, a.q, form_type)


def _objects(space: FormedSpace, family: str, budget: Budget) -> List[Subspace]:
    d = form_service.parse_family(family, space)
    return form_service.enumerate_family(space, d, budget.max_orbit)


def _random_of_order(G: MatrixGroup, k: int, rng: random.Random, trials: int) -> Optional[SemilinearMap]:
    """Случайный элемент порядка k как степень случайного элемента"""
    rep = group_service.permutation_representation(G)
    order = group_service.group_order(G)
    for _ in range(trials):
        perm = rep.group.coset_unrank(rng.randrange(order))
        o = perm.order()
        if o % k == 0:
            return group_service.map_from_perm(G, perm ** (o // k))
    return None


def _projective_group(H: MatrixGroup, objects: List[Subspace]) -> PermutationGroup:
    return PermutationGroup([Permutation(p) for p in orbit_service.action_on(H, objects)])


def _save(G: MatrixGroup, name: str, seed: int, result: SearchResult) -> None:
    G.name = name
    group_service.save_generators(G, generator_path(name), seed=seed)
    result.files[name] = str(generator_path(name))
    result.orders[name] = group_service.group_order(G)


def run_search(spec: SearchSpec, budget: Optional[Budget] = None) -> SearchResult:
    """Выполнение поиска и запись файлов образующих"""
    budget = budget or Budget()
    rng = random.Random(spec.seed)
    trials = spec.trials or settings.SEARCH_TRIALS
    logger.info(f"[SEARCH] Running {spec.name} ({spec.method}) with seed {spec.seed}")
    runners = {
        "sylow": _run_sylow,
        "random-subgroup": _run_random_subgroup,
        "normaliser-extension": _run_extension,
        "extraspecial-sp4": _run_extraspecial,
    }
    result = runners[spec.method](spec, rng, trials, budget)
    logger.info(f"[SEARCH] {spec.name} finished after {result.trials_used} trials: {result.orders}")
    return result


def _run_sylow(spec: SearchSpec, rng: random.Random, trials: int, budget: Budget) -> SearchResult:
    if spec.prime is None:
        raise InvalidInputError(f"Поиск {spec.name}: не задано простое число")
    G = _ambient(spec)
    rep = group_service.permutation_representation(G, budget.max_points)
    P = rep.group.sylow_subgroup(spec.prime)
    H = group_service.subgroup_from_perms(G, P.generators, spec.name)
    H.cached_order = int(P.order())
    result = SearchResult(name=spec.name, seed=spec.seed, trials_used=0)
    _save(H, output_names(spec)[0], spec.seed, result)
    return result


def _accepts(spec: SearchSpec, H: MatrixGroup, objects: Optional[List[Subspace]], budget: Budget) -> bool:
    if spec.order is not None:
        rep = group_service.permutation_representation(H, budget.max_points)
        if rep.group.order() != spec.order:
            return False
    if spec.projective_order is not None:
        P = _projective_group(H, objects)
        if P.order() != spec.projective_order or not P.is_transitive():
            return False
    if spec.transitive_on is not None:
        d = form_service.parse_family(spec.transitive_on, H.space)
        transitive, _ = orbit_service.is_transitive(H, H.space, d, budget)
        return transitive
    return True


def _run_random_subgroup(spec: SearchSpec, rng: random.Random, trials: int, budget: Budget) -> SearchResult:
    """Подгруппы <x, y> с заданными порядками образующих"""
    if len(spec.element_orders) != 2:
        raise InvalidInputError(f"Поиск {spec.name}: нужны порядки двух образующих")
    G = _ambient(spec)
    objects = _objects(G.space, spec.action, budget) if spec.action else None
    a, b = spec.element_orders
    for trial in range(1, trials + 1):
        x = _random_of_order(G, a, rng, 50)
        y = _random_of_order(G, b, rng, 50)
        if x is None or y is None:
            continue
        H = MatrixGroup(G.space, [x, y], name=spec.name)
        if _accepts(spec, H, objects, budget):
            result = SearchResult(name=spec.name, seed=spec.seed, trials_used=trial)
            _save(H, output_names(spec)[0], spec.seed, result)
            return result
    logger.error(f"[SEARCH] {spec.name}: nothing found in {trials} trials")
    raise InvalidInputError(f"Поиск {spec.name} не дал результата за {trials} попыток")


def _normalises(P: PermutationGroup, g: Permutation) -> bool:
    g_inv = ~g
    return all(P.contains(g_inv * x * g) for x in P.generators)


def _run_extension(spec: SearchSpec, rng: random.Random, trials: int, budget: Budget) -> SearchResult:
    """Надгруппы индекса 2 базовой группы, действующие на точках и прямых"""
    from app.services import gq_service

    if not spec.base or not spec.action:
        raise InvalidInputError(f"Поиск {spec.name}: нужны базовая группа и четырёхугольник")
    base = ensure_generators(spec.base, budget)
    G = _ambient(spec)
    Q = gq_service.build_classical_gq(spec.action, spec.ambient.q, budget)
    base = gq_service.on_space(Q, base)
    P = _projective_group(base, Q.points)
    reps: List[Tuple[SemilinearMap, Permutation]] = []
    trial = 0
    while len(reps) < 3 and trial < trials:
        trial += 1
        g = group_service.random_element(G, rng)
        g_perm = Permutation(orbit_service.action_on(MatrixGroup(Q.space, [g]), Q.points)[0])
        if P.contains(g_perm) or not _normalises(P, g_perm):
            continue
        if any(P.contains(g_perm * ~r) for _, r in reps):
            continue
        reps.append((g, g_perm))
        logger.info(f"[SEARCH] {spec.name}: coset representative {len(reps)} found at trial {trial}")
    if len(reps) < 3:
        logger.error(f"[SEARCH] {spec.name}: found {len(reps)} of 3 extensions in {trials} trials")
        raise InvalidInputError(f"Поиск {spec.name}: найдено {len(reps)} расширений из 3")

    groups = [MatrixGroup(Q.space, list(base.generators) + [g], name=spec.name) for g, _ in reps]
    line_transitive = [gq_service.gq_transitivity(Q, H, "lines", budget) for H in groups]
    ranked = sorted(range(3), key=lambda i: (not line_transitive[i], i))
    names = output_names(spec)
    result = SearchResult(name=spec.name, seed=spec.seed, trials_used=trial)
    for slot, i in enumerate(ranked):
        _save(groups[i], names[slot], spec.seed, result)
    full = MatrixGroup(Q.space, list(base.generators) + [g for g, _ in reps], name=spec.name)
    _save(full, names[3], spec.seed, result)
    return result


# Нормализатор экстраспециальной группы 2^{1+4}_- в CSp_4(3)

_Q8 = ([[0, 1], [2, 0]], [[1, 1], [1, 2]])
_GO2_MINUS = ([[0, 1], [2, 0]], [[1, 0], [0, 2]])
_ONE = [[1, 0], [0, 1]]
_J = [[0, 1], [2, 0]]


def _kron(A: List[List[int]], B: List[List[int]], p: int) -> List[List[int]]:
    return [[(A[i][j] * B[k][l]) % p for j in range(2) for l in range(2)]
            for i in range(2) for k in range(2)]


def _run_extraspecial(spec: SearchSpec, rng: random.Random, trials: int, budget: Budget) -> SearchResult:
    """2^{1+4}_- = Q8 ∘ D8 на J ⊗ I и подгруппы его нормализатора"""
    field = field_of_order(3)
    space = form_service.make_space(field, FormKind.ALTERNATING, gram=_kron(_J, _ONE, 3))
    E = MatrixGroup(space, [SemilinearMap.of(field, _kron(A, _ONE, 3)) for A in _Q8]
                    + [SemilinearMap.of(field, _kron(_ONE, B, 3)) for B in _GO2_MINUS], name="E")
    C = group_service.isometry_group(space, "C")
    rep = group_service.permutation_representation(C, budget.max_points)
    E_perm = PermutationGroup([group_service.perm_of_map(C, g) for g in E.generators])
    if E_perm.order() != 32:
        raise InvalidInputError("Экстраспециальная группа имеет неверный порядок")

    target = spec.order or 3840
    found: List[Permutation] = list(E_perm.generators)
    trial = 0
    while PermutationGroup(found).order() < target and trial < trials:
        trial += 1
        g = rep.group.coset_unrank(rng.randrange(group_service.group_order(C)))
        if _normalises(E_perm, g) and not PermutationGroup(found).contains(g):
            found.append(g)
    N = PermutationGroup(found)
    if N.order() != target:
        logger.error(f"[SEARCH] Normaliser of 2^(1+4) reached order {N.order()}, expected {target}")
        raise InvalidInputError(f"Нормализатор имеет порядок {N.order()} вместо {target}")

    P5 = N.sylow_subgroup(5)
    normalising = [g for g in N.generate() if _normalises(P5, g)]
    pieces = {
        "s5": N,
        "a5": N.derived_subgroup(),
        "f20": PermutationGroup(list(E_perm.generators) + normalising),
        "c5": PermutationGroup(list(E_perm.generators) + list(P5.generators)),
    }
    result = SearchResult(name=spec.name, seed=spec.seed, trials_used=trial)
    for suffix in spec.outputs:
        perm_group = pieces[suffix]
        H = group_service.subgroup_from_perms(C, perm_group.generators, f"{spec.name}_{suffix}")
        H.cached_order = int(perm_group.order())
        _save(H, f"{spec.name}_{suffix}", spec.seed, result)
    return result
