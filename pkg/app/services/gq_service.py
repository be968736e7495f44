import logging
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import networkx as nx

from app.core.config import Budget
from app.core.exceptions import BudgetExceededError, InvalidInputError, MismatchError
from app.models.form import FamilyDescriptor, FamilyLabel, FormKind, FormType
from app.models.group import MatrixGroup
from app.models.matrix import Subspace
from app.models.quadrangle import GeneralizedQuadrangle
from app.schemas.gq import AxiomReport, GQCheckResult, GQSummary
from app.services import construction_service, form_service, orbit_service
from app.services.matspace_service import canonicalize, vec_axpy

logger = logging.getLogger(__name__)

TARGETS = ("points", "lines", "flags", "antiflags")

# имя -> (вид формы, размерность, тип, порядок (s, t) как функция q, наибольшее q)
CLASSICAL: Dict[str, Tuple[FormKind, int, Optional[FormType], Callable[[int], Tuple[int, int]], int]] = {
    "W3": (FormKind.ALTERNATING, 4, None, lambda q: (q, q), 9),
    "Q4": (FormKind.QUADRATIC, 5, FormType.CIRCLE, lambda q: (q, q), 9),
    "Q5minus": (FormKind.QUADRATIC, 6, FormType.MINUS, lambda q: (q, q * q), 9),
    "H3": (FormKind.HERMITIAN, 4, None, lambda q: (q * q, q), 9),
    "H4": (FormKind.HERMITIAN, 5, None, lambda q: (q * q, q ** 3), 3),
}


def _points_on(line: Subspace, index: Dict[bytes, int]) -> List[int]:
    field, n = line.field, line.n
    u, v = line.rows
    out = [index[canonicalize(field, n, [v]).key]]
    for c in range(field.q):
        out.append(index[canonicalize(field, n, [vec_axpy(field, c, v, u)]).key])
    return sorted(out)


def build_classical_gq(name: str, q: int, budget: Optional[Budget] = None) -> GeneralizedQuadrangle:
    """Классический четырёхугольник (P_1, P_2) пространства с формой"""
    if name not in CLASSICAL:
        logger.error(f"[GQ] Unknown quadrangle {name!r}")
        raise InvalidInputError(f"Неизвестный четырёхугольник {name}; доступны {', '.join(CLASSICAL)}")
    kind, n, form_type, order_of, max_q = CLASSICAL[name]
    if q > max_q:
        logger.error(f"[GQ] {name}({q}) exceeds the supported range q <= {max_q}")
        raise BudgetExceededError(f"{name}({q}) вне бюджета: q <= {max_q}")
    budget = budget or Budget()
    space = form_service.standard_space(kind, n, q, form_type)
    s, t = order_of(q)
    logger.info(f"[GQ] Building {name}({q}) in {space!r}, expected order ({s}, {t})")

    points = form_service.enumerate_family(space, FamilyDescriptor(FamilyLabel.TOTALLY_SINGULAR, 1),
                                           budget.max_orbit)
    lines = form_service.enumerate_family(space, FamilyDescriptor(FamilyLabel.TOTALLY_SINGULAR, 2),
                                          budget.max_orbit)
    index = {P.key: i for i, P in enumerate(points)}
    line_points = [_points_on(L, index) for L in lines]
    Q = GeneralizedQuadrangle(name, q, space, points, lines, line_points, (s, t))
    logger.info(f"[GQ] Built {Q!r}")
    return Q


def dual(Q: GeneralizedQuadrangle) -> GeneralizedQuadrangle:
    """Двойственный четырёхугольник: точки и прямые меняются местами"""
    return GeneralizedQuadrangle(
        Q.name, Q.q, Q.space,
        points=Q.lines,
        lines=Q.points,
        line_points=[list(ls) for ls in Q.point_lines],
        order=(Q.t, Q.s),
        dualized=not Q.dualized,
        point_lines=[list(ps) for ps in Q.line_points],
    )


def collinear_sets(Q: GeneralizedQuadrangle) -> List[set]:
    out: List[set] = [set() for _ in Q.points]
    for pts in Q.line_points:
        for i in pts:
            out[i].update(pts)
    for i, nbrs in enumerate(out):
        nbrs.discard(i)
    return out


def collinearity_graph(Q: GeneralizedQuadrangle) -> nx.Graph:
    """Граф коллинеарности точек"""
    G = nx.Graph()
    G.add_nodes_from(range(len(Q.points)))
    for pts in Q.line_points:
        for a in range(len(pts)):
            for b in range(a + 1, len(pts)):
                G.add_edge(pts[a], pts[b])
    return G


def is_strongly_regular(G: nx.Graph, k: int, lam: int, mu: int) -> bool:
    """Проверка параметров (v, k, λ, μ) сильно регулярного графа"""
    if any(d != k for _, d in G.degree()):
        return False
    adj = {v: set(G.adj[v]) for v in G.nodes}
    nodes = list(G.nodes)
    for i, a in enumerate(nodes):
        for b in nodes[i + 1:]:
            common = len(adj[a] & adj[b])
            if common != (lam if b in adj[a] else mu):
                return False
    return True


def verify_axioms(Q: GeneralizedQuadrangle, check_graph: bool = True) -> AxiomReport:
    """Исчерпывающая проверка GQ1-GQ3, мощностей, толщины и неравенств Хигмана"""
    s, t = Q.order
    failures: List[str] = []

    gq1 = all(len(pts) == s + 1 for pts in Q.line_points)
    gq2 = all(len(ls) == t + 1 for ls in Q.point_lines)
    if not gq1:
        failures.append(f"прямая содержит не {s + 1} точек")
    if not gq2:
        failures.append(f"точка лежит не на {t + 1} прямых")

    # две точки лежат не более чем на одной прямой
    pair_count: Dict[Tuple[int, int], int] = {}
    for pts in Q.line_points:
        for a in range(len(pts)):
            for b in range(a + 1, len(pts)):
                key = (pts[a], pts[b])
                pair_count[key] = pair_count.get(key, 0) + 1
    unique_lines = all(c == 1 for c in pair_count.values())
    if not unique_lines:
        failures.append("две точки лежат на двух прямых")

    collinear = collinear_sets(Q)
    gq3 = unique_lines
    for p in range(len(Q.points)):
        on_p = set(Q.point_lines[p])
        for j, pts in enumerate(Q.line_points):
            if j in on_p:
                continue
            if sum(1 for x in pts if x in collinear[p]) != 1:
                gq3 = False
                failures.append(f"GQ3 нарушена для точки {p} и прямой {j}")
                break
        if not gq3:
            break

    counts = len(Q.points) == (s + 1) * (s * t + 1) and len(Q.lines) == (t + 1) * (s * t + 1)
    if not counts:
        failures.append(f"|P|={len(Q.points)}, |L|={len(Q.lines)} не совпадают с формулой")
    thick = s > 1 and t > 1
    if not thick:
        failures.append("четырёхугольник не толстый")
    lo, hi = min(s, t), max(s, t)
    bounds = lo * lo >= hi
    if not bounds:
        failures.append(f"нарушено неравенство √t <= s <= t для порядка {Q.order}")

    srg = None
    if check_graph:
        srg = is_strongly_regular(collinearity_graph(Q), s * (t + 1), s - 1, t + 1)
        if not srg:
            failures.append("граф коллинеарности не сильно регулярен с ожидаемыми параметрами")

    report = AxiomReport(gq1=gq1, gq2=gq2, gq3=gq3, counts=counts, thick=thick, bounds=bounds,
                         srg=srg, failures=failures)
    if report.ok:
        logger.info(f"[GQ] Axioms verified for {Q.label}")
    else:
        logger.error(f"[GQ] Axiom check failed for {Q.label}: {failures}")
    return report


def flags(Q: GeneralizedQuadrangle) -> int:
    """|F| = (s+1)(t+1)(st+1), сверенное с перечислением инцидентностей"""
    s, t = Q.order
    counted = sum(len(pts) for pts in Q.line_points)
    formula = (s + 1) * (t + 1) * (s * t + 1)
    if counted != formula:
        logger.error(f"[GQ] {Q.label}: {counted} flags, formula gives {formula}")
        raise MismatchError(f"Число флагов {counted} вместо {formula}")
    return counted


def antiflags(Q: GeneralizedQuadrangle) -> int:
    """|A| = st(s+1)(t+1)(st+1)"""
    s, t = Q.order
    counted = len(Q.points) * len(Q.lines) - sum(len(pts) for pts in Q.line_points)
    formula = s * t * (s + 1) * (t + 1) * (s * t + 1)
    if counted != formula:
        logger.error(f"[GQ] {Q.label}: {counted} antiflags, formula gives {formula}")
        raise MismatchError(f"Число антифлагов {counted} вместо {formula}")
    return counted


def summarize(Q: GeneralizedQuadrangle, verify: bool = True) -> GQSummary:
    return GQSummary(
        name=Q.name,
        q=Q.q,
        order=Q.order,
        dual=Q.dualized,
        points=len(Q.points),
        lines=len(Q.lines),
        flags=flags(Q),
        antiflags=antiflags(Q),
        axioms=verify_axioms(Q) if verify else None,
    )


# Действие групп

def on_space(Q: GeneralizedQuadrangle, H: MatrixGroup) -> MatrixGroup:
    if H.space == Q.space:
        return H
    return construction_service.transplant(H, Q.space)


def _pair_orbits(perms_p: Sequence[Sequence[int]], perms_l: Sequence[Sequence[int]],
                 pairs: List[Tuple[int, int]]) -> int:
    """Число орбит на парах (точка, прямая)"""
    index = {pr: i for i, pr in enumerate(pairs)}
    perms = []
    for pp, pl in zip(perms_p, perms_l):
        perms.append([index[(pp[a], pl[b])] for a, b in pairs])
    return len(orbit_service.point_orbits(perms, len(pairs)))


def gq_transitivity(Q: GeneralizedQuadrangle, H: MatrixGroup, target: str,
                    budget: Optional[Budget] = None) -> bool:
    """Транзитивность H на точках, прямых, флагах или антифлагах"""
    if target not in TARGETS:
        raise InvalidInputError(f"Неизвестная цель {target}; доступны {', '.join(TARGETS)}")
    budget = budget or Budget()
    H = on_space(Q, H)
    if target == "points":
        result = len(orbit_service.point_orbits(orbit_service.action_on(H, Q.points), len(Q.points))) == 1
    elif target == "lines":
        result = len(orbit_service.point_orbits(orbit_service.action_on(H, Q.lines), len(Q.lines))) == 1
    else:
        incident = target == "flags"
        size = flags(Q) if incident else antiflags(Q)
        if size > budget.max_orbit:
            logger.error(f"[GQ] {size} {target} of {Q.label} exceed the orbit budget")
            raise BudgetExceededError(f"{size} пар превышают бюджет {budget.max_orbit}")
        pairs = [(p, j) for j in range(len(Q.lines)) for p in range(len(Q.points))
                 if (p in Q.line_points[j]) == incident]
        perms_p = orbit_service.action_on(H, Q.points)
        perms_l = orbit_service.action_on(H, Q.lines)
        result = _pair_orbits(perms_p, perms_l, pairs) == 1
    logger.info(f"[GQ] {H.name} on {target} of {Q.label}: {'transitive' if result else 'intransitive'}")
    return result


def is_point_primitive(Q: GeneralizedQuadrangle, H: MatrixGroup, budget: Optional[Budget] = None) -> bool:
    H = on_space(Q, H)
    primitive, _ = orbit_service.is_primitive(H, Q.points, budget)
    return primitive


def joint_implies_flag_check(Q: GeneralizedQuadrangle, H: MatrixGroup,
                             budget: Optional[Budget] = None) -> bool:
    """Транзитивность на точках и на прямых влечёт транзитивность на флагах"""
    if not H.generators:
        return True
    if not (gq_transitivity(Q, H, "points", budget) and gq_transitivity(Q, H, "lines", budget)):
        logger.info(f"[GQ] {H.name} on {Q.label}: implication vacuous")
        return True
    holds = gq_transitivity(Q, H, "flags", budget)
    if not holds:
        logger.error(f"[GQ] {H.name} is point- and line-transitive but not flag-transitive on {Q.label}")
    return holds


def check(Q: GeneralizedQuadrangle, H: MatrixGroup, targets: Sequence[str] = TARGETS,
          primitive: bool = False, budget: Optional[Budget] = None) -> GQCheckResult:
    result = GQCheckResult(gq=Q.label, group=H.name)
    for target in targets:
        setattr(result, target, gq_transitivity(Q, H, target, budget))
    if primitive and result.points:
        result.primitive_on_points = is_point_primitive(Q, H, budget)
    if result.points and result.lines:
        result.implication_holds = (result.flags if result.flags is not None
                                    else joint_implies_flag_check(Q, H, budget))
    return result
