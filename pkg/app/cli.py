import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

from pydantic import BaseModel

from app.core.config import Budget, settings
from app.core.exceptions import (
    FormedSpaceError, IntransitiveError, InvalidInputError, MismatchError,
)
from app.models.group import MatrixGroup
from app.schemas.catalog import CatalogEntry, CheckResult, CountResult, GridSpec, OrderResult
from app.services import (
    catalog_service, field_service, form_service, gq_service, group_service, search_service,
)

logger = logging.getLogger("app.cli")

RECIPE_ALIASES = {"su-orth": "su-in-orthogonal", "ext-field": "field-extension"}
# позиционные аргументы рецепта: внутренний вид, размерность, порядок внутреннего поля
_POSITIONAL = ("inner", "n", "field")


# Вывод

def _emit(args: argparse.Namespace, payload: Any, text: str) -> None:
    if args.json:
        if isinstance(payload, BaseModel):
            print(payload.model_dump_json(indent=2))
        else:
            print(json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False))
    else:
        print(text)


def _budget(args: argparse.Namespace) -> Budget:
    return Budget.from_overrides(args.max_orbit, args.max_points, args.threads)


def _space(label: str, n: int, q: int):
    kind, form_type = form_service.parse_ambient(label)
    return form_service.standard_space(kind, n, q, form_type)


# Источник группы

def _recipe_args(tokens: Sequence[str], q: int) -> Tuple[str, Dict[str, str]]:
    """su-orth m=4 -> (su-in-orthogonal, {m: 4}); ext-field Sp 2 4 -> inner=Sp n=2 b=2"""
    if not tokens:
        raise InvalidInputError("Не указан рецепт")
    name = RECIPE_ALIASES.get(tokens[0], tokens[0])
    out: Dict[str, str] = {}
    positional = [t for t in tokens[1:] if "=" not in t]
    for token in tokens[1:]:
        if "=" in token:
            key, _, value = token.partition("=")
            out[key] = value
    if len(positional) > len(_POSITIONAL):
        raise InvalidInputError(f"Лишние аргументы рецепта: {' '.join(positional)}")
    for key, value in zip(_POSITIONAL, positional):
        if key != "field":
            out[key] = value
            continue
        order, b = int(value), 1
        while q ** b < order:
            b += 1
        if q ** b != order:
            raise InvalidInputError(f"GF({order}) не является расширением GF({q})")
        out["b"] = str(b)
    return name, out


def _source(args: argparse.Namespace, ambient: Optional[str], q: Optional[int],
            family: str, budget: Budget) -> Tuple[MatrixGroup, CatalogEntry, Dict[str, int]]:
    """Группа из файла, рецепта или слоя и строка каталога для проверки орбит"""
    if args.gens:
        H = group_service.load_generators(Path(args.gens))
        if ambient is None:
            ambient, q = f"{H.space.label} {H.space.n}", H.space.q
    if ambient is None or q is None:
        raise InvalidInputError("Нужно указать --ambient KIND N Q или --gq NAME Q")
    if args.recipe:
        name, recipe_args = _recipe_args(args.recipe, q)
        entry = catalog_service.adhoc_entry(ambient, family, name, recipe_args)
        env = catalog_service.env_for(entry, {"q": q})
        H = catalog_service.build_group(entry, env, budget)
    else:
        entry = catalog_service.adhoc_entry(ambient, family, "classical", {})
        env = catalog_service.env_for(entry, {"q": q})
        if not args.gens:
            kind, form_type, n = catalog_service.ambient_of(entry, env)
            space = form_service.standard_space(kind, n, q, form_type)
            H = group_service.isometry_group(space, group_service.parse_layer(args.layer or "Ω"))
    return H, entry, env


def _ambient_of_args(args: argparse.Namespace) -> Tuple[Optional[str], Optional[int]]:
    if args.gq:
        return f"GQ {args.gq[0]}", int(args.gq[1])
    if args.ambient:
        label, n, q = args.ambient
        return f"{label} {int(n)}", int(q)
    return None, None


# Подкоманды

def cmd_count(args: argparse.Namespace) -> int:
    budget = _budget(args)
    space = _space(args.kind, args.n, args.q)
    d = form_service.parse_family(args.family, space)
    formula = form_service.count_family(space, d)
    enumerated = None
    if not args.formula_only and formula <= budget.max_orbit:
        enumerated = len(form_service.enumerate_family(space, d, budget.max_orbit))
    result = CountResult(kind=space.label, type=space.type.value, n=args.n, q=args.q,
                         family=str(d), formula=formula, enumerated=enumerated,
                         match=None if enumerated is None else enumerated == formula)
    mark = "" if enumerated is None else f" enumerated={enumerated} {'ok' if result.match else 'MISMATCH'}"
    _emit(args, result, f"{formula}{mark}")
    if result.match is False:
        raise MismatchError(f"Формула даёт {formula}, перечисление {enumerated}")
    return 0


def cmd_enumerate(args: argparse.Namespace) -> int:
    budget = _budget(args)
    space = _space(args.kind, args.n, args.q)
    d = form_service.parse_family(args.family, space)
    members = form_service.enumerate_family(space, d, budget.max_orbit)
    rows = [[list(row) for row in U.rows] for U in members]
    _emit(args, rows, "\n".join(" ".join("".join(map(str, r)) if space.field.q < 10 else str(r)
                                         for r in U) for U in rows))
    return 0


def cmd_check(args: argparse.Namespace) -> int:
    budget = _budget(args)
    ambient, q = _ambient_of_args(args)
    H, entry, env = _source(args, ambient, q, args.family, budget)
    ev = catalog_service.orbit_evidence(H, entry, env, budget)
    result = CheckResult(group=ev.group.name, space=repr(ev.group.space), family=args.family,
                         transitive=ev.transitive, family_size=ev.size, orbit_lengths=ev.lengths)
    verdict = "transitive" if ev.transitive else "intransitive"
    lengths = f" orbits={ev.lengths}" if ev.lengths else ""
    _emit(args, result, f"{verdict} |U|={ev.size}{lengths}")
    return 0 if ev.transitive else IntransitiveError.exit_code


def cmd_order(args: argparse.Namespace) -> int:
    budget = _budget(args)
    layer = group_service.parse_layer(args.layer)
    space = _space(args.kind, args.n, args.q)
    formula = group_service.formula_order(layer, space.kind, space.type, args.n, args.q)
    computed = None
    if not args.formula_only:
        G = group_service.isometry_group(space, layer)
        computed = group_service.group_order(G, budget.max_points)
    result = OrderResult(layer=layer, kind=space.label, type=space.type.value, n=args.n, q=args.q,
                         formula=formula, computed=computed,
                         match=None if computed is None else computed == formula)
    mark = "" if computed is None else f" computed={computed} {'ok' if result.match else 'MISMATCH'}"
    _emit(args, result, f"{formula}{mark}")
    if result.match is False:
        raise MismatchError(f"|{layer}| по формуле {formula}, по цепи стабилизаторов {computed}")
    return 0


def cmd_suite(args: argparse.Namespace) -> int:
    budget = _budget(args)
    if args.grid == "empty":
        grid = GridSpec(max_n=0, max_q=0)
    else:
        tables = [t for chunk in args.tables or [] for t in chunk.split(",") if t] or None
        grid = GridSpec(max_n=args.max_n, max_q=args.max_q, tables=tables, include_slow=args.include_slow)
    report = catalog_service.run_suite(grid, budget)
    document = report.model_dump_json(indent=2)
    if args.report:
        Path(args.report).write_text(document, encoding="utf-8")
        logger.info(f"[CLI] Report written to {args.report}")
    if args.json:
        print(document)
    else:
        print(catalog_service.report_text(report))
    failures = report.hard_failures
    if failures:
        logger.error(f"[CLI] {len(failures)} catalog entries failed verification")
        return MismatchError.exit_code
    return 0


def cmd_gq_build(args: argparse.Namespace) -> int:
    Q = gq_service.build_classical_gq(args.name, args.q, _budget(args))
    if args.dual:
        Q = gq_service.dual(Q)
    summary = gq_service.summarize(Q, verify=False)
    _emit(args, summary, f"{Q!r} flags={summary.flags} antiflags={summary.antiflags}")
    return 0


def cmd_gq_verify(args: argparse.Namespace) -> int:
    Q = gq_service.build_classical_gq(args.name, args.q, _budget(args))
    if args.dual:
        Q = gq_service.dual(Q)
    summary = gq_service.summarize(Q, verify=True)
    axioms = summary.axioms
    status = "ok" if axioms and axioms.ok else f"FAILED {axioms.failures if axioms else ''}"
    _emit(args, summary, f"{Q!r}: {status}")
    if axioms is not None and not axioms.ok:
        raise MismatchError(f"{Q.label} не удовлетворяет аксиомам: {', '.join(axioms.failures)}")
    return 0


def cmd_gq_check(args: argparse.Namespace) -> int:
    budget = _budget(args)
    targets = [t for t in args.targets.split(",") if t]
    H, _, _ = _source(args, f"GQ {args.name}", args.q, "points", budget)
    Q = gq_service.build_classical_gq(args.name, args.q, budget)
    if args.dual:
        Q = gq_service.dual(Q)
    result = gq_service.check(Q, H, targets, primitive=args.primitive, budget=budget)
    values = {t: getattr(result, t) for t in targets}
    text = " ".join(f"{t}={'yes' if v else 'no'}" for t, v in values.items())
    if result.primitive_on_points is not None:
        text += f" primitive={'yes' if result.primitive_on_points else 'no'}"
    _emit(args, result, f"{H.name} on {Q.label}: {text}")
    return 0 if all(values.values()) else IntransitiveError.exit_code


def cmd_negcheck(args: argparse.Namespace) -> int:
    budget = _budget(args)
    entry = catalog_service.find_entry(args.entry)
    if not entry.negative:
        raise InvalidInputError(f"Строка {entry.id} не утверждает нетранзитивность")
    params = dict(_pairs(args.params), q=args.q)
    env = catalog_service.env_for(entry, params)
    report = catalog_service.negative_check(entry, env, budget)
    _emit(args, report, f"{entry.id} {entry.descriptor}: {report.status} {report.detail}")
    return {"verified": 0, "pending": 1, "failed": 2, "out-of-budget": 4}.get(report.status, 1)


def cmd_lnt(args: argparse.Namespace) -> int:
    found = field_service.verify_l_nt(args.max_p, args.max_f, args.max_m)
    triples = [[e.p, e.f, e.m] for e in found]
    _emit(args, triples, "\n".join(f"p={p} f={f} m={m}" for p, f, m in triples) or "none")
    return 0


def cmd_search(args: argparse.Namespace) -> int:
    specs = search_service.load_searches()
    if args.name not in specs:
        raise InvalidInputError(f"Поиск {args.name} не описан; доступны: {', '.join(sorted(specs))}")
    spec = specs[args.name]
    if args.seed is not None:
        spec = spec.model_copy(update={"seed": args.seed})
    result = search_service.run_search(spec, _budget(args))
    _emit(args, result, "\n".join(f"{name}: {path} |H|={result.orders.get(name)}"
                                  for name, path in result.files.items()))
    return 0


def cmd_catalog(args: argparse.Namespace) -> int:
    entries = catalog_service.load_catalog()
    if args.table:
        entries = [e for e in entries if e.table_id == args.table]
    payload = [e.model_dump() for e in entries]
    text = "\n".join(f"{e.id:<22} {e.ambient:<12} {e.family:<8} {e.descriptor:<26} {e.recipe}"
                     for e in entries)
    _emit(args, payload, text)
    return 0


def _pairs(items: Optional[List[str]]) -> Dict[str, int]:
    out = {}
    for item in items or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise InvalidInputError(f"Ожидалось имя=значение: {item}")
        try:
            out[key] = int(value)
        except ValueError:
            raise InvalidInputError(f"Нецелое значение параметра {item}")
    return out


# Разбор аргументов

def _add_budget_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--max-orbit", type=int, default=None, help="предел длины орбиты")
    parser.add_argument("--max-points", type=int, default=None, help="предел степени перестановок")
    parser.add_argument("--threads", type=int, default=None, help="число потоков")
    parser.add_argument("--json", action="store_true", help="машиночитаемый вывод")


def _add_source_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_mutually_exclusive_group()
    group.add_argument("--gens", help="JSON-файл образующих")
    group.add_argument("--recipe", nargs="+", metavar="ARG", help="рецепт и его аргументы")
    group.add_argument("--layer", help="слой классической группы: Γ, C, I, S, Ω")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="formed", description="Классические группы и транзитивность")
    parser.add_argument("--log-level", default=settings.LOG_LEVEL)
    sub = parser.add_subparsers(dest="command", required=True)

    def space_args(p: argparse.ArgumentParser) -> None:
        p.add_argument("kind", help="L, Sp, U, O, O+, O-")
        p.add_argument("n", type=int)
        p.add_argument("q", type=int)

    p = sub.add_parser("count", help="мощность семейства подпространств")
    space_args(p)
    p.add_argument("family")
    p.add_argument("--formula-only", action="store_true")
    _add_budget_flags(p)
    p.set_defaults(handler=cmd_count)

    p = sub.add_parser("enumerate", help="перечисление семейства")
    space_args(p)
    p.add_argument("family")
    _add_budget_flags(p)
    p.set_defaults(handler=cmd_enumerate)

    p = sub.add_parser("check", help="транзитивность группы на семействе")
    _add_source_flags(p)
    where = p.add_mutually_exclusive_group()
    where.add_argument("--ambient", nargs=3, metavar=("KIND", "N", "Q"))
    where.add_argument("--gq", nargs=2, metavar=("NAME", "Q"))
    p.add_argument("--family", required=True)
    _add_budget_flags(p)
    p.set_defaults(handler=cmd_check)

    p = sub.add_parser("order", help="порядок слоя классической группы")
    p.add_argument("layer")
    space_args(p)
    p.add_argument("--formula-only", action="store_true")
    _add_budget_flags(p)
    p.set_defaults(handler=cmd_order)

    p = sub.add_parser("suite", help="проверка строк каталога")
    p.add_argument("--max-n", type=int, default=8)
    p.add_argument("--max-q", type=int, default=4)
    p.add_argument("--tables", action="append", help="идентификаторы таблиц через запятую")
    p.add_argument("--grid", choices=("empty",))
    p.add_argument("--include-slow", action="store_true")
    p.add_argument("--report", help="файл отчёта JSON")
    _add_budget_flags(p)
    p.set_defaults(handler=cmd_suite)

    gq = sub.add_parser("gq", help="обобщённые четырёхугольники")
    gq_sub = gq.add_subparsers(dest="gq_command", required=True)
    for name, handler in (("build", cmd_gq_build), ("verify", cmd_gq_verify), ("check", cmd_gq_check)):
        p = gq_sub.add_parser(name)
        p.add_argument("name", choices=sorted(gq_service.CLASSICAL))
        p.add_argument("q", type=int)
        p.add_argument("--dual", action="store_true")
        if name == "check":
            _add_source_flags(p)
            p.add_argument("--targets", default="points,lines,flags,antiflags")
            p.add_argument("--primitive", action="store_true")
        _add_budget_flags(p)
        p.set_defaults(handler=handler)

    p = sub.add_parser("negcheck", help="проверка заявленной нетранзитивности")
    p.add_argument("entry", help="идентификатор строки, например L:temp#1")
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--param", dest="params", action="append", help="имя=значение")
    _add_budget_flags(p)
    p.set_defaults(handler=cmd_negcheck)

    p = sub.add_parser("lnt", help="тройки (p, f, m) с делимостью q^m - 1 | 2mf(q-1)^2")
    p.add_argument("--max-p", type=int, default=7)
    p.add_argument("--max-f", type=int, default=3)
    p.add_argument("--max-m", type=int, default=4)
    _add_budget_flags(p)
    p.set_defaults(handler=cmd_lnt)

    p = sub.add_parser("search", help="воспроизводимый поиск образующих")
    p.add_argument("name")
    p.add_argument("--seed", type=int, default=None)
    _add_budget_flags(p)
    p.set_defaults(handler=cmd_search)

    p = sub.add_parser("catalog", help="строки таблиц")
    p.add_argument("--table")
    _add_budget_flags(p)
    p.set_defaults(handler=cmd_catalog)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=args.log_level.upper(), stream=sys.stderr)
    echo = {k: v for k, v in sorted(vars(args).items()) if k != "handler"}
    logger.info(f"[CLI] {echo}")
    try:
        return args.handler(args)
    except FormedSpaceError as exc:
        logger.error(f"[CLI] {type(exc).__name__}: {exc.detail}")
        print(f"error: {exc.detail}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    raise SystemExit(main())
