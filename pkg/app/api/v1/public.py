import logging
from typing import Callable, List, Optional, TypeVar

from fastapi import APIRouter, HTTPException

from app.core.config import Budget
from app.core.exceptions import FormedSpaceError
from app.schemas.catalog import CatalogEntry, CountResult, OrderResult
from app.schemas.field import LNTException
from app.schemas.gq import GQSummary
from app.services import catalog_service, field_service, form_service, gq_service, group_service

logger = logging.getLogger(__name__)

router = APIRouter()

T = TypeVar("T")


def _call(fn: Callable[..., T], *args, **kwargs) -> T:
    try:
        return fn(*args, **kwargs)
    except FormedSpaceError as exc:
        raise HTTPException(status_code=exc.status_code, detail=exc.detail)


def _count(kind: str, n: int, q: int, family: str, enumerate_members: bool) -> CountResult:
    kind_, form_type = form_service.parse_ambient(kind)
    space = form_service.standard_space(kind_, n, q, form_type)
    d = form_service.parse_family(family, space)
    formula = form_service.count_family(space, d)
    budget = Budget()
    enumerated = None
    if enumerate_members and formula <= budget.max_orbit:
        enumerated = len(form_service.enumerate_family(space, d, budget.max_orbit))
    return CountResult(kind=space.label, type=space.type.value, n=n, q=q, family=str(d),
                       formula=formula, enumerated=enumerated,
                       match=None if enumerated is None else enumerated == formula)


def _order(layer: str, kind: str, n: int, q: int, compute: bool) -> OrderResult:
    layer = group_service.parse_layer(layer)
    kind_, form_type = form_service.parse_ambient(kind)
    space = form_service.standard_space(kind_, n, q, form_type)
    formula = group_service.formula_order(layer, space.kind, space.type, n, q)
    computed = None
    if compute:
        computed = group_service.group_order(group_service.isometry_group(space, layer))
    return OrderResult(layer=layer, kind=space.label, type=space.type.value, n=n, q=q,
                       formula=formula, computed=computed,
                       match=None if computed is None else computed == formula)


@router.get("/count/{kind}/{n}/{q}/{family}", response_model=CountResult)
def count(kind: str, n: int, q: int, family: str, enumerate_members: bool = True):
    """Число подпространств семейства по формуле и перечислением"""
    return _call(_count, kind, n, q, family, enumerate_members)


@router.get("/order/{layer}/{kind}/{n}/{q}", response_model=OrderResult)
def order(layer: str, kind: str, n: int, q: int, compute: bool = True):
    """Порядок слоя классической группы"""
    return _call(_order, layer, kind, n, q, compute)


@router.get("/gq/{name}/{q}", response_model=GQSummary)
def quadrangle(name: str, q: int, dual: bool = False, verify: bool = False):
    """Сводка по классическому обобщённому четырёхугольнику"""
    def build() -> GQSummary:
        Q = gq_service.build_classical_gq(name, q)
        return gq_service.summarize(gq_service.dual(Q) if dual else Q, verify=verify)
    return _call(build)


@router.get("/lnt", response_model=List[LNTException])
def lnt(max_p: int = 7, max_f: int = 3, max_m: int = 4):
    """Исключения делимости q^m - 1 | 2mf(q-1)^2"""
    return _call(field_service.verify_l_nt, max_p, max_f, max_m)


@router.get("/catalog", response_model=List[CatalogEntry])
def catalog(table: Optional[str] = None):
    """Строки таблиц каталога"""
    entries = _call(catalog_service.load_catalog)
    if table:
        entries = [e for e in entries if e.table_id == table]
        if not entries:
            raise HTTPException(status_code=404, detail=f"Таблица {table} не найдена")
    return entries


@router.get("/health")
async def health():
    return {"status": "ok"}
