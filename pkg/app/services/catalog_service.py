import ast
import itertools
import logging
import operator
import re
import time
from dataclasses import dataclass
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Callable, Dict, List, Optional, Set, Tuple

from pydantic import ValidationError
from sympy import factorint
from sympy.combinatorics import Permutation, PermutationGroup

from app.core.config import Budget, settings
from app.core.exceptions import (
    BudgetExceededError, DataFileError, FormedSpaceError, InvalidInputError, MismatchError,
)
from app.models.form import FamilyDescriptor, FormedSpace, FormKind, FormType
from app.models.group import MatrixGroup
from app.models.matrix import Subspace
from app.models.quadrangle import GeneralizedQuadrangle
from app.schemas.catalog import CatalogEntry, GridSpec, ReportEntry, VerificationReport
from app.services import (
    construction_service, form_service, gq_service, group_service, matspace_service, orbit_service,
    search_service,
)

logger = logging.getLogger(__name__)

AMBIENTS: Dict[str, Tuple[FormKind, Optional[FormType]]] = {
    "L": (FormKind.LINEAR, None),
    "Sp": (FormKind.ALTERNATING, None),
    "U": (FormKind.HERMITIAN, None),
    "O": (FormKind.QUADRATIC, FormType.CIRCLE),
    "O+": (FormKind.QUADRATIC, FormType.PLUS),
    "O-": (FormKind.QUADRATIC, FormType.MINUS),
}
INNER_KINDS = {"L": FormKind.LINEAR, "Sp": FormKind.ALTERNATING, "U": FormKind.HERMITIAN,
               "O": FormKind.QUADRATIC}
RECIPES = ("field-extension", "subfield", "levi", "reducible", "subform", "lift",
           "su-in-orthogonal", "singer", "generator-file", "needs-generators", "classical")
FLAGS = ("superset", "open", "regular", "primitive", "negative", "slow")
# аргументы рецептов, которые являются выражениями от параметров строки
EXPR_KEYS = ("n", "a", "b", "m", "frob", "step", "dim", "q0", "order", "porder", "swap", "extend",
             "similarity")
FIELD_VARS = ("q", "p", "f")


class _Skip(InvalidInputError):
    """Параметры не дают допустимой строки (нецелое деление и т.п.)"""


class _Pending(FormedSpaceError):
    """Для строки нет конструкции"""


# Выражения и ограничения

_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
           ast.Pow: operator.pow, ast.Mod: operator.mod}


def evaluate(expr: str, env: Dict[str, int]) -> int:
    """Целочисленное выражение от параметров строки: m, a*b, 2*m-1, m/2"""
    try:
        tree = ast.parse(expr.strip(), mode="eval")
    except SyntaxError:
        raise InvalidInputError(f"Некорректное выражение: {expr}")
    return _eval(tree.body, env, expr)


def _eval(node: ast.AST, env: Dict[str, int], expr: str) -> int:
    if isinstance(node, ast.Constant) and isinstance(node.value, int):
        return node.value
    if isinstance(node, ast.Name):
        if node.id not in env:
            raise InvalidInputError(f"Неизвестная переменная {node.id} в {expr}")
        return env[node.id]
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, ast.USub):
        return -_eval(node.operand, env, expr)
    if isinstance(node, ast.BinOp):
        left = _eval(node.left, env, expr)
        right = _eval(node.right, env, expr)
        if isinstance(node.op, (ast.Div, ast.FloorDiv)):
            if right == 0 or left % right:
                raise _Skip(f"{expr}: {left} не делится на {right}")
            return left // right
        op = _BINOPS.get(type(node.op))
        if op is not None:
            return op(left, right)
    raise InvalidInputError(f"Недопустимая конструкция в выражении {expr}")


def variables(expr: str) -> Set[str]:
    try:
        tree = ast.parse(expr.strip(), mode="eval")
    except SyntaxError:
        raise InvalidInputError(f"Некорректное выражение: {expr}")
    return {node.id for node in ast.walk(tree) if isinstance(node, ast.Name)}


_IN_RE = re.compile(r"^(\w+)\s+in\s+([\d,\s]+)$")
_PARITY_RE = re.compile(r"^(.+?)\s+(even|odd|square)$")
_CMP_RE = re.compile(r"^(.+?)\s*(>=|<=|!=|=|<|>)\s*(.+)$")
_CMP_OPS: Dict[str, Callable[[int, int], bool]] = {
    ">=": operator.ge, "<=": operator.le, "!=": operator.ne,
    "=": operator.eq, "<": operator.lt, ">": operator.gt,
}

Predicate = Callable[[Dict[str, int]], bool]


def is_flag(clause: str) -> bool:
    return clause in FLAGS or re.fullmatch(r"orbits=\d+", clause) is not None


def parse_constraint(clause: str) -> Tuple[Predicate, Set[str]]:
    """Предикат от параметров и множество его переменных"""
    clause = clause.strip()
    match = _IN_RE.match(clause)
    if match:
        name = match.group(1)
        allowed = {int(x) for x in match.group(2).split(",") if x.strip()}
        return (lambda env: env[name] in allowed), {name}
    match = _PARITY_RE.match(clause)
    if match:
        expr, word = match.groups()

        def parity(env: Dict[str, int]) -> bool:
            value = evaluate(expr, env)
            if word == "square":
                root = int(round(value ** 0.5))
                return root * root == value
            return value % 2 == (0 if word == "even" else 1)
        return parity, variables(expr)
    match = _CMP_RE.match(clause)
    if match:
        lhs, op, rhs = match.groups()
        compare = _CMP_OPS[op]
        return (lambda env: compare(evaluate(lhs, env), evaluate(rhs, env))), variables(lhs) | variables(rhs)
    raise InvalidInputError(f"Некорректное ограничение: {clause}")


# Разбор строк

def _split_ambient(text: str) -> Tuple[str, str]:
    parts = text.split(None, 1)
    if len(parts) != 2:
        raise InvalidInputError(f"Некорректное объемлющее пространство: {text}")
    return parts[0], parts[1].strip()


def _check_ambient(text: str) -> None:
    token, rest = _split_ambient(text)
    if token == "GQ":
        if rest not in gq_service.CLASSICAL:
            raise InvalidInputError(f"Неизвестный четырёхугольник {rest}")
        return
    if token not in AMBIENTS and token != "Om":
        raise InvalidInputError(f"Неизвестный тип пространства {token}")
    variables(rest)


def parse_row(line: str, table_counts: Dict[str, int], source: str, lineno: int) -> CatalogEntry:
    parts = [p.strip() for p in line.split("|")]
    if len(parts) != 6:
        raise InvalidInputError(f"ожидалось 6 полей, получено {len(parts)}")
    table_id, ambient, family, descriptor, recipe_text, constraint_text = parts
    tokens = recipe_text.split()
    if not tokens or tokens[0] not in RECIPES:
        raise InvalidInputError(f"неизвестный рецепт {recipe_text!r}")
    args: Dict[str, str] = {}
    for token in tokens[1:]:
        key, sep, value = token.partition("=")
        if not sep:
            raise InvalidInputError(f"аргумент рецепта без значения: {token}")
        args[key] = value
    for key in EXPR_KEYS:
        if key in args:
            variables(args[key])
    if tokens[0] == "generator-file" and ("file" not in args or not {"order", "porder"} & set(args)):
        raise InvalidInputError("generator-file требует file= и order= или porder=")
    _check_ambient(ambient)
    clauses = [c.strip() for c in constraint_text.split(";") if c.strip()]
    flags = [c for c in clauses if is_flag(c)]
    constraints = [c for c in clauses if not is_flag(c)]
    for clause in constraints:
        parse_constraint(clause)
    table_counts[table_id] = table_counts.get(table_id, 0) + 1
    return CatalogEntry(
        id=f"{table_id}#{table_counts[table_id]}",
        table_id=table_id,
        ambient=ambient,
        family=family,
        descriptor=descriptor,
        recipe=tokens[0],
        args=args,
        constraints=constraints,
        flags=flags,
        source=source,
        line=lineno,
    )


def catalog_dir() -> Path:
    return Path(settings.FORMED_DATA_DIR) / "catalog"


def load_catalog(path: Optional[Path] = None) -> List[CatalogEntry]:
    """Все строки таблиц из catalog/*.txt"""
    path = Path(path) if path else catalog_dir()
    files = sorted(path.glob("*.txt")) if path.is_dir() else [path]
    if not files or not all(f.exists() for f in files):
        logger.error(f"[CATALOG] No catalog files under {path}")
        raise DataFileError(f"Файлы каталога не найдены: {path}")
    entries: List[CatalogEntry] = []
    counts: Dict[str, int] = {}
    for file in files:
        for lineno, raw in enumerate(file.read_text(encoding="utf-8").splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            try:
                entries.append(parse_row(line, counts, file.name, lineno))
            except (InvalidInputError, ValidationError) as exc:
                detail = exc.detail if isinstance(exc, InvalidInputError) else str(exc)
                logger.error(f"[CATALOG] {file.name}:{lineno}: {detail}")
                raise DataFileError(f"Повреждена строка {file.name}:{lineno}: {detail}")
    logger.info(f"[CATALOG] Loaded {len(entries)} rows from {len(files)} files")
    return entries


def tables(entries: List[CatalogEntry]) -> Dict[str, int]:
    out: Dict[str, int] = {}
    for e in entries:
        out[e.table_id] = out.get(e.table_id, 0) + 1
    return out


# Подстановка параметров

def prime_power(q: int) -> Optional[Tuple[int, int]]:
    if q < 2:
        return None
    factors = factorint(q)
    if len(factors) != 1:
        return None
    (p, f), = factors.items()
    return int(p), int(f)


def _constraint_predicates(entry: CatalogEntry) -> List[Tuple[Predicate, Set[str]]]:
    return [parse_constraint(c) for c in entry.constraints]


def free_variables(entry: CatalogEntry) -> List[str]:
    names: Set[str] = set()
    token, rest = _split_ambient(entry.ambient)
    if token != "GQ":
        names |= variables(rest)
    for expr in re.findall(r"\{([^}]*)\}", entry.family):
        names |= variables(expr)
    for key in EXPR_KEYS:
        if key in entry.args:
            names |= variables(entry.args[key])
    for _, used in _constraint_predicates(entry):
        names |= used
    return sorted(names - set(FIELD_VARS))


def ambient_of(entry: CatalogEntry, env: Dict[str, int]) -> Tuple[FormKind, Optional[FormType], int]:
    """Вид формы, тип и размерность объемлющего пространства строки"""
    token, rest = _split_ambient(entry.ambient)
    if token == "GQ":
        kind, n, form_type, _, _ = gq_service.CLASSICAL[rest]
        return kind, form_type, n
    n = evaluate(rest, env)
    if token == "Om":
        return FormKind.QUADRATIC, FormType.PLUS if env["m"] % 2 == 0 else FormType.MINUS, n
    kind, form_type = AMBIENTS[token]
    return kind, form_type, n


def family_text(entry: CatalogEntry, env: Dict[str, int]) -> str:
    return re.sub(r"\{([^}]*)\}", lambda m: str(evaluate(m.group(1), env)), entry.family)


def _admissible_dimension(kind: FormKind, form_type: Optional[FormType], n: int) -> bool:
    if n < 2:
        return False
    if kind == FormKind.ALTERNATING or form_type in (FormType.PLUS, FormType.MINUS):
        return n % 2 == 0
    if form_type == FormType.CIRCLE:
        return n % 2 == 1
    return True


def instantiate(entry: CatalogEntry, grid: GridSpec) -> List[Dict[str, int]]:
    """Параметры строки в пределах сетки, удовлетворяющие ограничениям"""
    if grid.empty or (grid.tables and entry.table_id not in grid.tables):
        return []
    if "slow" in entry.flags and not grid.include_slow:
        return []
    token, rest = _split_ambient(entry.ambient)
    predicates = _constraint_predicates(entry)
    free = free_variables(entry)
    out: List[Dict[str, int]] = []
    for q in range(2, grid.max_q + 1):
        pf = prime_power(q)
        if pf is None:
            continue
        if token == "GQ" and q > gq_service.CLASSICAL[rest][4]:
            continue
        for values in itertools.product(range(1, grid.max_n + 1), repeat=len(free)):
            env = dict(zip(free, values), q=q, p=pf[0], f=pf[1])
            try:
                if not all(pred(env) for pred, _ in predicates):
                    continue
                kind, form_type, n = ambient_of(entry, env)
                if not _admissible_dimension(kind, form_type, n) or n > grid.max_n:
                    continue
                family_text(entry, env)
            except _Skip:
                continue
            out.append(env)
    return out


def params_of(env: Dict[str, int]) -> Dict[str, int]:
    return {k: v for k, v in env.items() if k not in ("p", "f")}


def env_for(entry: CatalogEntry, params: Dict[str, int]) -> Dict[str, int]:
    """Окружение строки по явно заданным параметрам с проверкой ограничений"""
    if "q" not in params:
        raise InvalidInputError("Не задан порядок поля q")
    pf = prime_power(params["q"])
    if pf is None:
        raise InvalidInputError(f"{params['q']} не является степенью простого")
    env = dict(params, p=pf[0], f=pf[1])
    missing = [name for name in free_variables(entry) if name not in env]
    if missing:
        raise InvalidInputError(f"Не заданы параметры {', '.join(missing)} для {entry.id}")
    try:
        if not all(pred(env) for pred, _ in _constraint_predicates(entry)):
            raise InvalidInputError(f"Параметры {params_of(env)} нарушают ограничения {entry.id}")
        ambient_of(entry, env)
    except _Skip as exc:
        raise InvalidInputError(exc.detail)
    return env


def adhoc_entry(ambient: str, family: str, recipe: str, args: Dict[str, str]) -> CatalogEntry:
    """Строка, собранная из аргументов командной строки"""
    tokens = [recipe] + [f"{k}={v}" for k, v in args.items()]
    return parse_row(f"cli | {ambient} | {family} | {recipe} | {' '.join(tokens)} |", {}, "cli", 0)


def find_entry(entry_id: str, entries: Optional[List[CatalogEntry]] = None) -> CatalogEntry:
    for entry in entries if entries is not None else load_catalog():
        if entry.id == entry_id:
            return entry
    raise InvalidInputError(f"Строка {entry_id} не найдена в каталоге")


# Построение групп по рецептам

def _kind(token: str) -> FormKind:
    if token not in INNER_KINDS:
        raise InvalidInputError(f"Неизвестный вид внутренней группы {token}")
    return INNER_KINDS[token]


def _type(token: Optional[str]) -> Optional[FormType]:
    return FormType(token) if token else None


def _check_field(q: int) -> None:
    if q > settings.MAX_FIELD_ORDER:
        logger.error(f"[CATALOG] Inner field of order {q} exceeds the field budget")
        raise BudgetExceededError(f"Поле порядка {q} вне бюджета {settings.MAX_FIELD_ORDER}")


def build_group(entry: CatalogEntry, env: Dict[str, int], budget: Optional[Budget] = None) -> MatrixGroup:
    """Группа H строки при заданных параметрах"""
    args = entry.args
    q = env["q"]
    recipe = entry.recipe

    def value(key: str, default: Optional[int] = None) -> Optional[int]:
        return evaluate(args[key], env) if key in args else default

    outer_kind, outer_type, n = ambient_of(entry, env)
    if recipe == "needs-generators":
        raise _Pending("для строки нет образующих")
    if recipe == "generator-file":
        H = search_service.ensure_generators(args["file"], budget)
    elif recipe == "field-extension":
        inner_kind = _kind(args["inner"])
        b = value("b", 1)
        _check_field(q ** (2 * b if inner_kind == FormKind.HERMITIAN else b))
        H = construction_service.embed_field_extension(
            inner_kind, value("n"), b, q, outer_kind, layer=args.get("layer", "Ω"),
            inner_type=_type(args.get("type")), frob=value("frob", 0), step=value("step"),
        )
    elif recipe == "su-in-orthogonal":
        b = value("b", 1)
        _check_field(q ** (2 * b))
        H = construction_service.embed_su_into_orthogonal(value("m"), q, b)
    elif recipe == "subfield":
        H = construction_service.embed_subfield(
            _kind(args["inner"]), value("n", n), value("q0", q), q, layer=args.get("layer", "Ω"),
            inner_type=_type(args.get("type")),
        )
    elif recipe == "levi":
        H = construction_service.levi(_kind(args["inner"]), value("m"), q, outer_kind,
                                      layer=args.get("layer", "S"), similarity=bool(value("similarity", 0)))
    elif recipe == "reducible":
        space = form_service.standard_space(outer_kind, n, q, outer_type)
        mode = "fix" if "fix" in args else "active"
        d = form_service.parse_family(args[mode], space)
        H = construction_service.reducible(space, d, mode, layer=args.get("layer", "Ω"),
                                           swap=bool(value("swap", 0)))
    elif recipe == "subform":
        H = construction_service.subform(value("m"), q, FormType(args.get("type", "-")))
    elif recipe == "lift":
        b = value("b", 1)
        _check_field(q ** b)
        inner = construction_service.embed_field_extension(
            _kind(args.get("inner", "Sp")), value("n"), b, q, FormKind.ALTERNATING,
            layer=args.get("layer", "Ω"), frob=value("frob", 0),
        )
        dim = value("n") * b
        std = form_service.standard_space(FormKind.ALTERNATING, dim, q)
        H = construction_service.lift(construction_service.transplant(inner, std))
    elif recipe == "singer":
        _check_field(q ** 6)
        H = construction_service.singer(q, frob=value("frob", 1), step=value("step"), dim=value("dim", 3))
    elif recipe == "classical":
        space = form_service.standard_space(outer_kind, n, q, outer_type)
        H = group_service.isometry_group(space, args.get("layer", "Ω"))
    else:
        raise InvalidInputError(f"Неизвестный рецепт {recipe}")
    if value("extend", 0):
        H = construction_service.add_orthogonal_point(H)
    H.name = H.name or entry.descriptor
    return H


# Модель проверки и объекты

def _via(entry: CatalogEntry) -> Optional[Tuple[str, str]]:
    via = entry.args.get("via")
    if not via:
        return None
    model, sep, family = via.partition(":")
    if not sep:
        raise InvalidInputError(f"Некорректная модель {via}")
    return model, family


def _via_model(model: str) -> Tuple[str, Optional[FormKind], Optional[FormType], int]:
    """L4 -> линейное пространство размерности 4; H3, W3 -> четырёхугольник"""
    if model in gq_service.CLASSICAL:
        return model, None, None, 0
    match = re.fullmatch(r"(L|Sp|U|O\+|O-|O)(\d+)", model)
    if not match:
        raise InvalidInputError(f"Неизвестная модель {model}")
    kind, form_type = AMBIENTS[match.group(1)]
    return "", kind, form_type, int(match.group(2))


def rehome(H: MatrixGroup, space: FormedSpace) -> MatrixGroup:
    """Та же группа в пространстве с данной формой"""
    if H.space == space:
        return H
    if (H.space.field, H.space.n) != (space.field, space.n):
        logger.error(f"[CATALOG] {H.name} acts on {H.space!r}, expected {space!r}")
        raise MismatchError(f"Группа {H.name} действует на {H.space!r}, ожидалось {space!r}")
    if space.kind == FormKind.LINEAR:
        return MatrixGroup(space, list(H.generators), name=H.name, cached_order=H.cached_order)
    if H.space.kind != space.kind or (space.kind == FormKind.QUADRATIC and H.space.type != space.type):
        logger.error(f"[CATALOG] {H.name} acts on {H.space!r}, expected {space!r}")
        raise MismatchError(f"Группа {H.name} действует на {H.space!r}, ожидалось {space!r}")
    return H


def _same_ambient(H: MatrixGroup, kind: FormKind, form_type: Optional[FormType], n: int) -> MatrixGroup:
    """Проверка вида, типа и размерности пространства группы"""
    space = H.space
    if kind == FormKind.LINEAR:
        std = form_service.standard_space(FormKind.LINEAR, n, space.field.q)
        return rehome(H, std)
    if space.kind != kind or space.n != n or (kind == FormKind.QUADRATIC and space.type != form_type):
        logger.error(f"[CATALOG] {H.name} acts on {space!r}, expected {kind.value} {n}")
        raise MismatchError(f"Группа {H.name} действует на {space!r}, ожидалось {kind.value} {n}")
    return H


# Проверка строки

@dataclass
class Evidence:
    """Итог проверки орбит: транзитивность, размер множества и длины орбит"""
    transitive: bool
    size: int
    lengths: List[int]
    group: MatrixGroup
    quadrangle: Optional[GeneralizedQuadrangle] = None
    objects: Optional[List[Subspace]] = None
    space: Optional[FormedSpace] = None
    family: Optional[FamilyDescriptor] = None


def orbit_evidence(H: MatrixGroup, entry: CatalogEntry, env: Dict[str, int], budget: Budget) -> Evidence:
    q = env["q"]
    token, rest = _split_ambient(entry.ambient)
    target = family_text(entry, env)
    via = _via(entry)
    gq_name = rest if token == "GQ" else None
    if via is not None:
        model, target = via
        gq_model, kind, form_type, n = _via_model(model)
        gq_name = gq_model or None
        if gq_name is None:
            H = _same_ambient(H, kind, form_type, n)
    elif token != "GQ":
        kind, form_type, n = ambient_of(entry, env)
        H = _same_ambient(H, kind, form_type, n)

    if gq_name is not None:
        Q = gq_service.build_classical_gq(gq_name, q, budget)
        H = gq_service.on_space(Q, H)
        if target in ("points", "lines"):
            objects = Q.points if target == "points" else Q.lines
            orbits = orbit_service.point_orbits(orbit_service.action_on(H, objects), len(objects))
            return Evidence(len(orbits) == 1, len(objects), sorted(len(o) for o in orbits), H,
                            quadrangle=Q, objects=objects)
        transitive = gq_service.gq_transitivity(Q, H, target, budget)
        size = gq_service.flags(Q) if target == "flags" else gq_service.antiflags(Q)
        return Evidence(transitive, size, [], H, quadrangle=Q)

    d = form_service.parse_family(_first_admissible(target, H.space), H.space)
    transitive, part = orbit_service.is_transitive(H, H.space, d, budget)
    return Evidence(transitive, part.family_size, sorted(part.lengths), H, space=H.space, family=d)


def _first_admissible(target: str, space: FormedSpace) -> str:
    """Первое допустимое семейство из списка вариантов вида N1e/N1"""
    options = target.split("/")
    for option in options[:-1]:
        try:
            form_service.parse_family(option, space)
            return option
        except InvalidInputError:
            continue
    return options[-1]


def _expected_order(entry: CatalogEntry, env: Dict[str, int]) -> Optional[Tuple[int, bool]]:
    """Заявленный порядок строки: (|H|, False) для order=, (|H Z/Z|, True) для porder="""
    if "order" in entry.args:
        return evaluate(entry.args["order"], env), False
    if "porder" in entry.args:
        return evaluate(entry.args["porder"], env), True
    return None


def projective_order(H: MatrixGroup, budget: Budget) -> int:
    """Порядок образа H в действии на точках проективного пространства"""
    space = H.space
    if (space.field.q ** space.n - 1) // (space.field.q - 1) > budget.max_points:
        logger.error(f"[CATALOG] Projective points of {space!r} exceed {budget.max_points}")
        raise BudgetExceededError(f"Точек проективного пространства больше {budget.max_points}")
    points = list(matspace_service.enumerate_subspaces(space.field, space.n, 1))
    perms = orbit_service.action_on(H, points)
    return PermutationGroup([Permutation(p) for p in perms]).order()


def _regular(ev: Evidence) -> bool:
    """|H| по модулю ядра действия равен числу объектов"""
    if ev.objects is not None:
        perms = orbit_service.action_on(ev.group, ev.objects)
        return PermutationGroup([Permutation(p) for p in perms]).order() == ev.size
    return orbit_service.is_regular(ev.group, ev.space, ev.family)


def verify_entry(entry: CatalogEntry, env: Dict[str, int], budget: Optional[Budget] = None) -> ReportEntry:
    """Построение H по рецепту и проверка заявленной транзитивности"""
    budget = budget or Budget()
    start = time.perf_counter()
    report = ReportEntry(id=entry.id, table_id=entry.table_id, descriptor=entry.descriptor,
                         params=params_of(env), status="pending", gating=entry.gating)

    def done(status: str, detail: str = "") -> ReportEntry:
        report.status = status
        report.detail = detail
        report.ms = int((time.perf_counter() - start) * 1000)
        log = logger.warning if status == "failed" else logger.info
        log(f"[CATALOG] {entry.id} {entry.descriptor} {report.params}: {status} {detail}".rstrip())
        return report

    if "open" in entry.flags:
        return done("open", "утверждение не доказано")
    if entry.negative:
        return negative_check(entry, env, budget, report, start)
    try:
        H = build_group(entry, env, budget)
        expected = _expected_order(entry, env)
        if expected is not None:
            want, projective = expected
            if projective:
                actual = projective_order(H, budget)
                if actual != want:
                    return done("failed", f"|HZ/Z| = {actual}, ожидалось {want}")
            else:
                actual = group_service.group_order(H, budget.max_points)
                if actual != want:
                    return done("failed", f"|H| = {actual}, ожидалось {want}")
        ev = orbit_evidence(H, entry, env, budget)
        report.family_size, report.orbit_count = ev.size, len(ev.lengths) or None
        if not ev.transitive:
            return done("failed", f"орбиты {ev.lengths}")
        if "regular" in entry.flags and not _regular(ev):
            return done("failed", "действие не регулярно")
        if "primitive" in entry.flags:
            if ev.quadrangle is None:
                raise InvalidInputError("Примитивность проверяется на точках четырёхугольника")
            if not gq_service.is_point_primitive(ev.quadrangle, ev.group, budget):
                return done("failed", "действие на точках импримитивно")
        return done("verified")
    except _Pending as exc:
        return done("pending", exc.detail)
    except DataFileError as exc:
        return done("pending", exc.detail)
    except BudgetExceededError as exc:
        return done("out-of-budget", exc.detail)
    except FormedSpaceError as exc:
        return done("failed", exc.detail)


def negative_check(entry: CatalogEntry, env: Dict[str, int], budget: Optional[Budget] = None,
                   report: Optional[ReportEntry] = None, start: Optional[float] = None) -> ReportEntry:
    """Подтверждение заявленной нетранзитивности; orbits=k требует k орбит равной длины"""
    budget = budget or Budget()
    start = start if start is not None else time.perf_counter()
    report = report or ReportEntry(id=entry.id, table_id=entry.table_id, descriptor=entry.descriptor,
                                   params=params_of(env), status="pending", gating=entry.gating)
    want = next((int(f.split("=")[1]) for f in entry.flags if f.startswith("orbits=")), None)
    status, detail = "verified", ""
    try:
        H = build_group(entry, env, budget)
        ev = orbit_evidence(H, entry, env, budget)
        lengths = ev.lengths
        report.family_size, report.orbit_count = ev.size, len(lengths) or None
        if ev.transitive:
            status, detail = "failed", "группа транзитивна"
        elif want is not None and (len(lengths) != want or len(set(lengths)) != 1):
            status, detail = "failed", f"орбиты {lengths}, ожидалось {want} равных"
        else:
            detail = f"орбиты {lengths}" if lengths else "нетранзитивна"
    except (_Pending, DataFileError) as exc:
        status, detail = "pending", exc.detail
    except BudgetExceededError as exc:
        status, detail = "out-of-budget", exc.detail
    except FormedSpaceError as exc:
        status, detail = "failed", exc.detail
    report.status, report.detail = status, detail
    report.ms = int((time.perf_counter() - start) * 1000)
    logger.info(f"[CATALOG] Negative check {entry.id} {report.params}: {status} {detail}")
    return report


# Прогон каталога

def run_suite(grid: GridSpec, budget: Optional[Budget] = None,
              entries: Optional[List[CatalogEntry]] = None) -> VerificationReport:
    """Проверка всех строк, допускающих параметры в сетке"""
    budget = budget or Budget()
    report = VerificationReport(grid=grid)
    if grid.empty:
        return report
    entries = entries if entries is not None else load_catalog()
    tasks = [(entry, env) for entry in entries for env in instantiate(entry, grid)]
    logger.info(f"[CATALOG] Verifying {len(tasks)} instances with {budget.threads} workers")
    with ThreadPoolExecutor(max_workers=max(1, budget.threads)) as pool:
        results = list(pool.map(lambda task: verify_entry(task[0], task[1], budget), tasks))
    report.entries = sorted(results, key=lambda r: (r.table_id, _row_number(r.id), sorted(r.params.items())))
    logger.info(f"[CATALOG] Suite finished: {report.summary}")
    return report


def _row_number(entry_id: str) -> int:
    return int(entry_id.rsplit("#", 1)[1])


def report_text(report: VerificationReport) -> str:
    lines = []
    for e in report.entries:
        params = ",".join(f"{k}={v}" for k, v in sorted(e.params.items()))
        size = "" if e.family_size is None else f" |U|={e.family_size}"
        orbits = "" if e.orbit_count is None else f" orbits={e.orbit_count}"
        lines.append(f"{e.id:<24} {e.descriptor:<28} {params:<16} {e.status:<14}{size}{orbits} {e.ms}ms"
                     + (f"  {e.detail}" if e.detail else ""))
    summary = report.summary
    lines.append(" ".join(f"{k}={v}" for k, v in summary.items()))
    return "\n".join(lines)
