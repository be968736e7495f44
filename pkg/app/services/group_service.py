import itertools
import json
import logging
import math
import os
import random
import tempfile
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from sympy.combinatorics import Permutation, PermutationGroup

from app.core.config import settings
from app.core.exceptions import (
    BudgetExceededError, DataFileError, InvalidInputError, NotIsometryError,
)
from app.models.field import FiniteField
from app.models.form import FormedSpace, FormKind, FormType
from app.models.group import LayerIndices, MatrixGroup, SemilinearMap
from app.models.matrix import Matrix, Subspace, Vector
from app.schemas.group import FormSpec, GeneratorEntry, GeneratorFile
from app.services import field_service, form_service
from app.services.matspace_service import (
    apply_batch, batch_index, block_diagonal, det, identity, image, inverse, left_kernel,
    mat_frob, mat_mul, rank, rref, unit_vector, vec_axpy, vec_scale,
)

logger = logging.getLogger(__name__)

LAYERS = ("Γ", "C", "I", "S", "Ω")
_LAYER_ALIASES = {
    "Γ": "Γ", "G": "Γ", "Gamma": "Γ", "gamma": "Γ",
    "C": "C", "I": "I", "S": "S",
    "Ω": "Ω", "Omega": "Ω", "omega": "Ω", "W": "Ω",
}

IN_OMEGA = "omega"
S_MINUS_OMEGA = "s-minus-omega"
OUTSIDE_S = "outside-s"

# нечётномерные ортогональные группы с |S:Ω| = 2 при q = 2
_DERIVED_OMEGA = {(3, 2), (5, 2)}

# предел полного перебора матриц малых групп
_SMALL_ENUMERATION = 1_000_000


def parse_layer(text: str) -> str:
    layer = _LAYER_ALIASES.get(text.strip())
    if layer is None:
        logger.error(f"[GROUP] Unknown layer {text!r}")
        raise InvalidInputError(f"Неизвестный слой группы: {text}")
    return layer


# Индексы и порядки

def layer_indices(kind: FormKind, form_type: Optional[FormType], n: int, q: int) -> LayerIndices:
    """Индексы |Γ:C|, |C:I|, |I:S|, |S:Ω|"""
    kind = FormKind(kind)
    p, f = _prime_power(q)
    if kind == FormKind.LINEAR:
        return LayerIndices(f, 1, q - 1, 1)
    if kind == FormKind.ALTERNATING:
        return LayerIndices(f, q - 1, 1, 1)
    if kind == FormKind.HERMITIAN:
        return LayerIndices(2 * f, q - 1, q + 1, 1)
    if n % 2:
        if q % 2:
            return LayerIndices(f, (q - 1) // 2, 2, 2)
        return LayerIndices(f, q - 1, 1, 2 if (n, q) in _DERIVED_OMEGA else 1)
    if q % 2:
        return LayerIndices(f, q - 1, 2, 2)
    return LayerIndices(f, q - 1, 1, 2)


def formula_order(layer: str, kind: FormKind, form_type: Optional[FormType], n: int, q: int) -> int:
    """Порядок слоя по формуле порядка группы изометрий и индексам"""
    layer = parse_layer(layer)
    kind = FormKind(kind)
    sign = form_type.value if form_type is not None else "o"
    order = form_service.isometry_order(kind, sign, n, q)
    idx = layer_indices(kind, form_type, n, q)
    if kind == FormKind.QUADRATIC and n <= 2:
        return _small_orthogonal_order(layer, sign, n, q, order, idx)
    if layer == "Γ":
        return order * idx.c_i * idx.gamma_c
    if layer == "C":
        return order * idx.c_i
    if layer == "I":
        return order
    if layer == "S":
        return order // idx.i_s
    return order // (idx.i_s * idx.s_omega)


def _small_orthogonal_order(layer: str, sign: str, n: int, q: int, order: int, idx: LayerIndices) -> int:
    if n == 1:
        base = {"Γ": order, "C": order, "I": order, "S": 1, "Ω": 1}
        if layer in ("Γ", "C"):
            return order * idx.c_i * (idx.gamma_c if layer == "Γ" else 1)
        return base[layer]
    # GO_2^±(q) диэдральная порядка 2(q ∓ 1)
    cyclic = q - 1 if sign == "+" else q + 1
    if layer == "Γ":
        return order * idx.c_i * idx.gamma_c
    if layer == "C":
        return order * idx.c_i
    if layer == "I":
        return order
    if layer == "S":
        return cyclic if q % 2 else order
    return cyclic // 2 if q % 2 else cyclic


def projective_indices(kind: FormKind, form_type: Optional[FormType], n: int, q: int) -> LayerIndices:
    """Индексы |PΓ:PC|, |PC:PI|, |PI:PS|, |PS:PΩ| через порядки скалярных подгрупп"""
    kind = FormKind(kind)
    idx = layer_indices(kind, form_type, n, q)
    z = scalar_orders(kind, form_type, n, q)
    return LayerIndices(
        idx.gamma_c,
        idx.c_i * z["I"] // z["C"],
        idx.i_s * z["S"] // z["I"],
        idx.s_omega * z["Ω"] // z["S"],
    )


def scalar_orders(kind: FormKind, form_type: Optional[FormType], n: int, q: int) -> Dict[str, int]:
    """Порядки Z ∩ C, Z ∩ I, Z ∩ S, Z ∩ Ω"""
    kind = FormKind(kind)
    g2 = math.gcd(2, q - 1)
    if kind == FormKind.LINEAR:
        zs = math.gcd(n, q - 1)
        return {"C": q - 1, "I": q - 1, "S": zs, "Ω": zs}
    if kind == FormKind.ALTERNATING:
        return {"C": q - 1, "I": g2, "S": g2, "Ω": g2}
    if kind == FormKind.HERMITIAN:
        zs = math.gcd(n, q + 1)
        return {"C": q * q - 1, "I": q + 1, "S": zs, "Ω": zs}
    if n % 2:
        return {"C": q - 1, "I": g2, "S": 1, "Ω": 1}
    m = n // 2
    eps = 1 if form_type == FormType.PLUS else -1
    omega = 2 if q % 2 and (q**m - eps) % 4 == 0 else 1
    return {"C": q - 1, "I": g2, "S": g2, "Ω": omega}


def _prime_power(q: int) -> Tuple[int, int]:
    field = field_service.field_of_order(q)
    return field.p, field.f


# Репер: базис Витта всего пространства

@dataclass(frozen=True)
class Frame:
    pairs: Tuple[Tuple[Vector, Vector], ...]
    anisotropic: Tuple[Vector, ...]
    radical: Tuple[Vector, ...]
    P: Tuple[Tuple[int, ...], ...]
    P_inv: Tuple[Tuple[int, ...], ...]

    @property
    def rows(self) -> List[Vector]:
        return [tuple(r) for r in self.P]


@lru_cache(maxsize=None)
def frame_of(space: FormedSpace) -> Frame:
    """Строки: e1, f1, ..., em, fm, анизотропная часть, радикал"""
    field = space.field
    if space.kind == FormKind.LINEAR:
        rows = [unit_vector(space.n, i) for i in range(space.n)]
        frozen = tuple(tuple(r) for r in rows)
        return Frame((), (), (), frozen, frozen)
    basis = form_service.witt_decomposition(space)
    rows = [v for e, f in basis.pairs for v in (e, f)] + list(basis.anisotropic) + list(basis.radical)
    P = [list(r) for r in rows]
    P_inv = inverse(field, P)
    return Frame(
        tuple((tuple(e), tuple(f)) for e, f in basis.pairs),
        tuple(tuple(v) for v in basis.anisotropic),
        tuple(tuple(v) for v in basis.radical),
        tuple(tuple(r) for r in P),
        tuple(tuple(r) for r in P_inv),
    )


def _from_frame(space: FormedSpace, N: Matrix, e: int = 0) -> SemilinearMap:
    """Отображение с матрицей N в репере: A = σ^e(P)^{-1} N P"""
    field = space.field
    frame = frame_of(space)
    P = [list(r) for r in frame.P]
    left = inverse(field, mat_frob(field, P, e)) if e else [list(r) for r in frame.P_inv]
    return SemilinearMap.of(field, mat_mul(field, mat_mul(field, left, N), P), e)


def _diagonal_in_frame(space: FormedSpace, entries: Dict[int, int]) -> SemilinearMap:
    N = identity(space.n)
    for i, c in entries.items():
        N[i][i] = c
    return _from_frame(space, N)


def _map_from_function(space: FormedSpace, fn: Callable[[Vector], Vector]) -> SemilinearMap:
    rows = [fn(unit_vector(space.n, i)) for i in range(space.n)]
    return SemilinearMap.of(space.field, rows)


# Корневые элементы

def _additive_basis(field: FiniteField, degree: Optional[int] = None, step: int = 1) -> List[int]:
    """1, ω^s, ω^{2s}, ... - базис над простым полем"""
    count = field.f if degree is None else degree
    return [field.exp[(i * step) % (field.q - 1)] for i in range(count)]


def eichler(space: FormedSpace, u: Vector, v: Vector) -> SemilinearMap:
    """x -> x + B(x,u)v - B(x,v)u - Q(v)B(x,u)u, u сингулярен, v ⊥ u"""
    field = space.field
    qv = form_service.quad_value(space, v)

    def fn(x: Vector) -> Vector:
        bu = form_service.pair(space, x, u)
        bv = form_service.pair(space, x, v)
        y = vec_axpy(field, bu, v, x)
        y = vec_axpy(field, field.neg[bv], u, y)
        return vec_axpy(field, field.neg[field.mul(qv, bu)], u, y)

    return _map_from_function(space, fn)


def symplectic_root(space: FormedSpace, u: Vector, v: Vector, c: int = 0) -> SemilinearMap:
    """x -> x + B(x,u)v + B(x,v)u + cB(x,u)u"""
    field = space.field

    def fn(x: Vector) -> Vector:
        bu = form_service.pair(space, x, u)
        bv = form_service.pair(space, x, v)
        y = vec_axpy(field, bu, v, x)
        y = vec_axpy(field, bv, u, y)
        return vec_axpy(field, field.mul(c, bu), u, y)

    return _map_from_function(space, fn)


def transvection(space: FormedSpace, u: Vector, c: int) -> SemilinearMap:
    """x -> x + cB(x,u)u"""
    field = space.field
    return _map_from_function(
        space, lambda x: vec_axpy(field, field.mul(c, form_service.pair(space, x, u)), u, x)
    )


def unitary_root(space: FormedSpace, u: Vector, v: Vector, c: int) -> SemilinearMap:
    """x -> x + h(x,u)v - h(x,v)u + c h(x,u)u, c + σ(c) = -h(v,v)"""
    field = space.field

    def fn(x: Vector) -> Vector:
        hu = form_service.pair(space, x, u)
        hv = form_service.pair(space, x, v)
        y = vec_axpy(field, hu, v, x)
        y = vec_axpy(field, field.neg[hv], u, y)
        return vec_axpy(field, field.mul(c, hu), u, y)

    return _map_from_function(space, fn)


def reflection(space: FormedSpace, v: Vector) -> SemilinearMap:
    """x -> x - B(x,v)/Q(v) v"""
    field = space.field
    qv = form_service.quad_value(space, v)
    if qv == 0:
        raise InvalidInputError("Отражение определено только для неособого вектора")
    return _map_from_function(
        space, lambda x: vec_axpy(field, field.neg[field.div(form_service.pair(space, x, v), qv)], v, x)
    )


def _trace_zero_basis(space: FormedSpace) -> List[int]:
    """Базис {c : c + σ(c) = 0} над простым полем"""
    field = space.field
    c0 = next(c for c in range(1, field.q) if field.add(c, field.frob(c, space.sigma)) == 0)
    base_basis = _additive_basis(field, field.f // 2, space.q + 1)
    return [field.mul(c0, b) for b in base_basis]


def _linear_generators(space: FormedSpace) -> List[SemilinearMap]:
    field, n = space.field, space.n
    gens = []
    for i in range(n - 1):
        for c in _additive_basis(field):
            for a, b in ((i, i + 1), (i + 1, i)):
                M = identity(n)
                M[a][b] = c
                gens.append(SemilinearMap.of(field, M))
    return gens


def _omega_root_generators(space: FormedSpace) -> List[SemilinearMap]:
    """Образующие Ω (для L, Sp, U: SL, Sp, SU) из корневых элементов"""
    field = space.field
    if space.kind == FormKind.LINEAR:
        return _linear_generators(space)
    frame = frame_of(space)
    e1, f1 = frame.pairs[0]
    rest = [v for e, f in frame.pairs[1:] for v in (e, f)] + list(frame.anisotropic) + list(frame.radical)
    scalars = _additive_basis(field)
    gens: List[SemilinearMap] = []
    if space.kind == FormKind.QUADRATIC:
        for u in (e1, f1):
            for v in rest:
                for c in scalars:
                    gens.append(eichler(space, u, vec_scale(field, c, v)))
    elif space.kind == FormKind.ALTERNATING:
        for u in (e1, f1):
            for v in rest:
                for c in scalars:
                    gens.append(symplectic_root(space, u, vec_scale(field, c, v)))
            for c in scalars:
                gens.append(transvection(space, u, c))
    else:
        for u in (e1, f1):
            for v in rest:
                for c in scalars:
                    vv = vec_scale(field, c, v)
                    target = field.neg[form_service.pair(space, vv, vv)]
                    cc = form_service.hermitian_trace_solution(field, space.sigma, target)
                    gens.append(unitary_root(space, u, vv, cc))
            for c in _trace_zero_basis(space):
                gens.append(transvection(space, u, c))
    return _dedupe(gens)


def _dedupe(gens: Sequence[SemilinearMap]) -> List[SemilinearMap]:
    seen = set()
    out = []
    for g in gens:
        if g.is_identity() or (g.A, g.e) in seen:
            continue
        seen.add((g.A, g.e))
        out.append(g)
    return out


# Малые группы: полный перебор

def _small_elements(space: FormedSpace, layer: str) -> List[SemilinearMap]:
    """Элементы слоя для пространств без гиперболической пары перебором матриц"""
    field, n = space.field, space.n
    total = field.q ** (n * n)
    if total > _SMALL_ENUMERATION:
        logger.error(f"[GROUP] Small group enumeration over {total} matrices")
        raise BudgetExceededError(f"Перебор {total} матриц превышает бюджет")
    exps = range(field.f) if layer == "Γ" else (0,)
    out: List[SemilinearMap] = []
    for e in exps:
        for entries in itertools.product(range(field.q), repeat=n * n):
            A = [list(entries[i * n:(i + 1) * n]) for i in range(n)]
            if det(field, A) == 0:
                continue
            lam = form_service.similarity_factor(space, A, e)
            if lam is None:
                continue
            if layer in ("I", "S", "Ω") and lam != 1:
                continue
            out.append(SemilinearMap.of(field, A, e))
    if layer in ("S", "Ω"):
        out = [g for g in out if _small_in_layer(space, g, layer)]
    return out


def _small_in_layer(space: FormedSpace, g: SemilinearMap, layer: str) -> bool:
    field = space.field
    if space.kind == FormKind.HERMITIAN:
        return det(field, g.matrix) == 1
    if space.n == 1:
        return g.is_identity()
    status = omega_membership(space, g)
    if layer == "S":
        return status != OUTSIDE_S
    return status == IN_OMEGA


# Слои

def _nonsquare(field: FiniteField) -> int:
    return field.exp[1]


def _orthogonal_special_extras(space: FormedSpace) -> List[SemilinearMap]:
    field = space.field
    e1, f1 = frame_of(space).pairs[0]
    if field.p == 2:
        if space.n % 2:
            return []
        return [reflection(space, vec_axpy(field, 1, e1, f1))]
    v1 = vec_axpy(field, 1, e1, f1)
    v2 = vec_axpy(field, _nonsquare(field), f1, e1)
    return [reflection(space, v1) * reflection(space, v2)]


def _unitary_torus(space: FormedSpace) -> List[SemilinearMap]:
    field, n = space.field, space.n
    frame = frame_of(space)
    base_q = space.q
    lam = field.exp[1]
    if n == 1:
        return []
    if n == 2:
        mu = field.exp[base_q + 1]
        return [_diagonal_in_frame(space, {0: mu, 1: field.inv(mu)})]
    entries = {0: lam, 1: field.inv(field.power(lam, base_q))}
    if n % 2:
        entries[2 * len(frame.pairs)] = field.power(lam, base_q - 1)
    else:
        entries[2] = field.inv(lam)
        entries[3] = field.power(lam, base_q)
    return [_diagonal_in_frame(space, entries)]


def _isometry_extras(space: FormedSpace) -> List[SemilinearMap]:
    """Элементы, дополняющие S до I"""
    field = space.field
    if space.kind == FormKind.LINEAR:
        return [_diagonal_in_frame(space, {0: field.exp[1]})]
    if space.kind == FormKind.HERMITIAN:
        frame = frame_of(space)
        omega = field.exp[1]
        return [_diagonal_in_frame(space, {0: omega, 1: field.inv(field.power(omega, space.q))})] if frame.pairs else []
    if space.kind == FormKind.QUADRATIC and field.p != 2:
        e1, f1 = frame_of(space).pairs[0]
        return [reflection(space, vec_axpy(field, 1, e1, f1))]
    return []


def _search_block(block: FormedSpace, predicate: Callable[[Matrix, int], bool], e: int) -> Matrix:
    field, k = block.field, block.n
    for entries in itertools.product(range(field.q), repeat=k * k):
        A = [list(entries[i * k:(i + 1) * k]) for i in range(k)]
        if det(field, A) == 0:
            continue
        lam = form_service.similarity_factor(block, A, e)
        if lam is not None and predicate(A, lam):
            return A
    raise InvalidInputError(f"Не найден блок подобия для {block!r}")


def _similarity_extras(space: FormedSpace) -> List[SemilinearMap]:
    """Элементы, дополняющие I до C"""
    field, n = space.field, space.n
    frame = frame_of(space)
    if space.kind == FormKind.LINEAR:
        return []
    omega = field.exp[1]
    if space.kind == FormKind.HERMITIAN or (space.kind == FormKind.QUADRATIC and n % 2):
        return [SemilinearMap.of(field, [[omega if i == j else 0 for j in range(n)] for i in range(n)])]
    entries = {2 * i: omega for i in range(len(frame.pairs))}
    N = identity(n)
    for i, c in entries.items():
        N[i][i] = c
    if frame.anisotropic:
        block = form_service.restrict(space, list(frame.anisotropic))
        B = _search_block(block, lambda A, lam: lam == omega, 0)
        offset = 2 * len(frame.pairs)
        for i, row in enumerate(B):
            for j, x in enumerate(row):
                N[offset + i][offset + j] = x
    return [_from_frame(space, N)]


def _frobenius_extra(space: FormedSpace) -> List[SemilinearMap]:
    """Полуподобие с e = 1, тождественное на гиперболических парах репера"""
    field, n = space.field, space.n
    if field.f == 1:
        return []
    if space.kind == FormKind.LINEAR:
        return [SemilinearMap.of(field, identity(n), 1)]
    frame = frame_of(space)
    blocks: List[Matrix] = [identity(2 * len(frame.pairs))] if frame.pairs else []
    if frame.anisotropic:
        block = form_service.restrict(space, list(frame.anisotropic))
        blocks.append(_search_block(block, lambda A, lam: lam == 1, 1))
    if frame.radical:
        d = frame.radical[0]
        a = form_service.quad_value(space, d)
        mu = field_service.sqrt_code(field, field.div(field.frob(a, 1), a))
        blocks.append([[mu]])
    N = block_diagonal(blocks)
    return [_from_frame(space, N, 1)]


def layer_generators(space: FormedSpace, layer: str) -> List[SemilinearMap]:
    layer = parse_layer(layer)
    kind, n, q = space.kind, space.n, space.q
    small = (kind == FormKind.QUADRATIC and n <= 2) or (kind == FormKind.HERMITIAN and n == 1)
    if small:
        return _dedupe(_small_elements(space, layer))

    gens = _omega_root_generators(space)
    if kind == FormKind.QUADRATIC and n % 2 and (n, q) in _DERIVED_OMEGA and layer == "Ω":
        whole = MatrixGroup(space, gens, name="GO")
        return derived_subgroup(whole).generators
    if layer == "Ω":
        return gens
    if kind == FormKind.QUADRATIC:
        gens = gens + _orthogonal_special_extras(space)
    elif kind == FormKind.HERMITIAN:
        gens = gens + _unitary_torus(space)
    if layer == "S":
        return _dedupe(gens)
    gens = gens + _isometry_extras(space)
    if layer == "I":
        return _dedupe(gens)
    gens = gens + _similarity_extras(space)
    if layer == "C":
        return _dedupe(gens)
    return _dedupe(gens + _frobenius_extra(space))


def isometry_group(space: FormedSpace, layer: str = "I") -> MatrixGroup:
    """Слой классической группы пространства с формой"""
    layer = parse_layer(layer)
    gens = layer_generators(space, layer)
    for g in gens:
        if form_service.similarity_factor(space, g.matrix, g.e) is None:
            logger.error(f"[GROUP] Generator of {layer}{space!r} is not a semisimilarity")
            raise InvalidInputError("Образующая не является полуподобием")
    name = f"{layer}{space.label}_{space.n}({space.q})"
    logger.info(f"[GROUP] Built {name} with {len(gens)} generators")
    return MatrixGroup(space, gens, name=name)


def classical_group(
    layer: str, kind: FormKind, n: int, q: int, form_type: Optional[FormType] = None
) -> MatrixGroup:
    kind = FormKind(kind)
    if kind == FormKind.QUADRATIC and form_type is None and n % 2 == 1:
        form_type = FormType.CIRCLE
    space = form_service.standard_space(kind, n, q, form_type)
    return isometry_group(space, layer)


# Перестановочное представление

@dataclass
class PermRep:
    vectors: np.ndarray
    index: np.ndarray
    base_positions: List[int]
    omega_position: int
    perms: List[Permutation]
    group: PermutationGroup

    @property
    def degree(self) -> int:
        return int(self.index.shape[0])


def _vector_domain(G: MatrixGroup, max_points: int) -> Tuple[np.ndarray, np.ndarray]:
    """Объединение орбит векторов e_i и ω e_1"""
    field, n = G.field, G.n
    omega = field.exp[1]
    seeds = [unit_vector(n, i) for i in range(n)] + [unit_vector(n, 0, omega)]
    frontier = np.array(seeds, dtype=np.int64)
    idx = batch_index(field, frontier)
    _, first = np.unique(idx, return_index=True)
    frontier = frontier[np.sort(first)]
    seen = set(int(i) for i in batch_index(field, frontier))
    chunks = [frontier]
    while frontier.shape[0]:
        fresh = []
        for g in G.generators:
            imgs = apply_batch(field, frontier, g.matrix, g.e)
            img_idx = batch_index(field, imgs)
            mask = np.fromiter((int(i) not in seen for i in img_idx), dtype=bool, count=img_idx.shape[0])
            if not mask.any():
                continue
            imgs, img_idx = imgs[mask], img_idx[mask]
            _, first = np.unique(img_idx, return_index=True)
            first = np.sort(first)
            imgs, img_idx = imgs[first], img_idx[first]
            seen.update(int(i) for i in img_idx)
            fresh.append(imgs)
        if len(seen) > max_points:
            logger.error(f"[GROUP] Vector domain of {G.name} exceeds {max_points} points")
            raise BudgetExceededError(f"Область действия больше {max_points} точек")
        frontier = np.concatenate(fresh) if fresh else np.zeros((0, n), dtype=np.int64)
        if frontier.shape[0]:
            chunks.append(frontier)
    vectors = np.concatenate(chunks)
    index = batch_index(field, vectors)
    order = np.argsort(index)
    return vectors[order], index[order]


def _positions(rep_index: np.ndarray, idx: np.ndarray) -> Optional[np.ndarray]:
    pos = np.searchsorted(rep_index, idx)
    pos = np.clip(pos, 0, rep_index.shape[0] - 1)
    if not np.array_equal(rep_index[pos], idx):
        return None
    return pos


def _perm_of(field: FiniteField, vectors: np.ndarray, index: np.ndarray, g: SemilinearMap) -> Optional[Permutation]:
    imgs = apply_batch(field, vectors, g.matrix, g.e)
    pos = _positions(index, batch_index(field, imgs))
    if pos is None:
        return None
    return Permutation(pos.tolist())


def permutation_representation(G: MatrixGroup, max_points: Optional[int] = None) -> PermRep:
    """Точное действие на векторах и его группа Шрайера-Симса"""
    if G.perm_cache is not None:
        return G.perm_cache
    field, n = G.field, G.n
    limit = max_points or settings.MAX_POINTS
    vectors, index = _vector_domain(G, limit)
    omega = field.exp[1]
    seeds = [unit_vector(n, i) for i in range(n)] + [unit_vector(n, 0, omega)]
    seed_pos = _positions(index, batch_index(field, np.array(seeds, dtype=np.int64)))
    perms = []
    for g in G.generators:
        perm = _perm_of(field, vectors, index, g)
        if perm is None:
            raise InvalidInputError("Область действия не замкнута относительно образующей")
        perms.append(perm)
    if not perms:
        perms = [Permutation(list(range(index.shape[0])))]
    rep = PermRep(vectors, index, [int(p) for p in seed_pos[:n]], int(seed_pos[n]), perms,
                  PermutationGroup(perms))
    logger.info(f"[GROUP] Permutation action of {G.name} on {rep.degree} vectors")
    G.perm_cache = rep
    return rep


def group_order(G: MatrixGroup, max_points: Optional[int] = None) -> int:
    if G.cached_order is not None:
        return G.cached_order
    if not G.generators:
        G.cached_order = 1
        return 1
    rep = permutation_representation(G, max_points)
    G.cached_order = int(rep.group.order())
    logger.info(f"[GROUP] |{G.name}| = {G.cached_order}")
    return G.cached_order


def map_from_perm(G: MatrixGroup, perm: Permutation) -> SemilinearMap:
    """Восстановление полулинейного отображения по перестановке векторов"""
    field = G.field
    rep = permutation_representation(G)
    array = perm.array_form
    rows = [tuple(int(x) for x in rep.vectors[array[p]]) for p in rep.base_positions]
    img = [int(x) for x in rep.vectors[array[rep.omega_position]]]
    j = next(i for i, x in enumerate(rows[0]) if x)
    lam = field.div(img[j], rows[0][j])
    log_lam = field.log[lam]
    e = 0
    if field.f > 1:
        e = next(k for k in range(field.f) if pow(field.p, k, field.q - 1) == log_lam % (field.q - 1))
    return SemilinearMap.of(field, rows, e)


def perm_of_map(G: MatrixGroup, g: SemilinearMap) -> Optional[Permutation]:
    rep = permutation_representation(G)
    return _perm_of(G.field, rep.vectors, rep.index, g)


def contains(G: MatrixGroup, g: SemilinearMap) -> bool:
    perm = perm_of_map(G, g)
    if perm is None:
        return False
    return bool(permutation_representation(G).group.contains(perm))


def random_element(G: MatrixGroup, rng: Optional[random.Random] = None) -> SemilinearMap:
    rng = rng or random.Random(settings.SEED)
    rep = permutation_representation(G)
    order = group_order(G)
    return map_from_perm(G, rep.group.coset_unrank(rng.randrange(order)))


def subgroup_from_perms(G: MatrixGroup, perms: Sequence[Permutation], name: str) -> MatrixGroup:
    gens = _dedupe([map_from_perm(G, p) for p in perms])
    return MatrixGroup(G.space, gens, name=name)


def derived_subgroup(G: MatrixGroup) -> MatrixGroup:
    rep = permutation_representation(G)
    D = rep.group.derived_subgroup()
    H = subgroup_from_perms(G, D.generators, f"[{G.name},{G.name}]")
    H.cached_order = int(D.order())
    return H


def conjugate(G: MatrixGroup, x: SemilinearMap) -> MatrixGroup:
    """x^{-1} G x"""
    x_inv = x.inverse()
    return MatrixGroup(G.space, [x_inv * g * x for g in G.generators],
                       name=f"{G.name}^x", cached_order=G.cached_order)


# Стабилизатор подпространства

def stabilizer_of_subspace(G: MatrixGroup, U: Subspace, max_orbit: Optional[int] = None) -> MatrixGroup:
    """Образующие Шрайера стабилизатора, пока |G| = |орбита| |стабилизатор|"""
    limit = max_orbit or settings.MAX_ORBIT
    identity_map = SemilinearMap.identity(G.field, G.n)
    transversal: Dict[bytes, SemilinearMap] = {U.key: identity_map}
    orbit_list = [U]
    i = 0
    while i < len(orbit_list):
        x = orbit_list[i]
        t_x = transversal[x.key]
        for s in G.generators:
            y = image(x, s.matrix, s.e)
            if y.key not in transversal:
                transversal[y.key] = t_x * s
                orbit_list.append(y)
                if len(orbit_list) > limit:
                    logger.error(f"[GROUP] Orbit of {U!r} under {G.name} exceeds {limit}")
                    raise BudgetExceededError(f"Орбита больше {limit}")
        i += 1
    order = group_order(G)
    target = order // len(orbit_list)
    name = f"Stab_{G.name}"
    logger.info(f"[GROUP] Orbit of length {len(orbit_list)}, stabilizer order {target}")
    if target == 1:
        return MatrixGroup(G.space, [], name=name, cached_order=1)

    rep = permutation_representation(G)
    stab_gens: List[SemilinearMap] = []
    stab_perms: List[Permutation] = []
    current = 1
    for x in orbit_list:
        t_x = transversal[x.key]
        for s in G.generators:
            y = image(x, s.matrix, s.e)
            g = t_x * s * transversal[y.key].inverse()
            if g.is_identity():
                continue
            perm = _perm_of(G.field, rep.vectors, rep.index, g)
            if stab_perms and PermutationGroup(stab_perms).contains(perm):
                continue
            stab_gens.append(g)
            stab_perms.append(perm)
            current = int(PermutationGroup(stab_perms).order())
            if current == target:
                break
        if current == target:
            break
    return MatrixGroup(G.space, stab_gens, name=name, cached_order=current)


# Спинорная норма и инвариант Диксона

def _solve_left(field: FiniteField, M: Matrix, w: Vector) -> Vector:
    """y с yM = w"""
    stacked = [list(r) for r in M] + [list(field.neg[x] for x in w)]
    for rel in left_kernel(field, stacked):
        c = rel[-1]
        if c:
            t = field.inv(c)
            return tuple(field.mul(t, x) for x in rel[:-1])
    raise InvalidInputError("Вектор не лежит в образе")


def omega_membership(space: FormedSpace, g: SemilinearMap) -> str:
    """Положение изометрии: Ω, S∖Ω или вне S"""
    field, n = space.field, space.n
    if space.kind != FormKind.QUADRATIC:
        raise InvalidInputError("Проверка Ω определена для квадратичных пространств")
    if g.e % field.f or form_service.similarity_factor(space, g.matrix, 0) != 1:
        logger.error(f"[GROUP] Element is not an isometry of {space!r}")
        raise NotIsometryError("Элемент не является изометрией формы")
    A = g.matrix
    M = [[field.sub(A[i][j], 1 if i == j else 0) for j in range(n)] for i in range(n)]
    if field.p == 2:
        if n % 2:
            if (n, field.q) in _DERIVED_OMEGA:
                omega = isometry_group(space, "Ω")
                return IN_OMEGA if contains(omega, g) else S_MINUS_OMEGA
            return IN_OMEGA
        return IN_OMEGA if rank(field, M, n) % 2 == 0 else S_MINUS_OMEGA
    if det(field, A) != 1:
        return OUTSIDE_S
    W, _ = rref(field, M, n)
    if not W:
        return IN_OMEGA
    ys = [_solve_left(field, M, w) for w in W]
    chi = [[form_service.pair(space, w, y) for y in ys] for w in W]
    theta = det(field, chi)
    if len(W) % 2:
        theta = field.neg[theta]
    return IN_OMEGA if field_service.is_square_code(field, theta) else S_MINUS_OMEGA


# Файлы образующих

def space_of_spec(spec: FormSpec) -> FormedSpace:
    kind = FormKind(spec.kind)
    field = field_service.field_from_descriptor(spec.field)
    form_type = FormType(spec.type) if spec.type else None
    if spec.gram is None:
        q = field.p ** (field.f // 2) if kind == FormKind.HERMITIAN else field.q
        return form_service.standard_space(kind, spec.n, q, form_type)
    sigma = field.f // 2 if kind == FormKind.HERMITIAN else 0
    return form_service.make_space(field, kind, spec.gram, spec.quad, sigma, spec.n)


def spec_of_space(space: FormedSpace) -> FormSpec:
    return FormSpec(
        field=field_service.describe_field(space.field),
        kind=space.kind.value,
        type=space.type.value if space.kind == FormKind.QUADRATIC else None,
        n=space.n,
        gram=[list(r) for r in space.gram],
        quad=[list(r) for r in space.quad] if space.quad is not None else None,
    )


def group_from_file(doc: GeneratorFile) -> MatrixGroup:
    space = space_of_spec(doc.form)
    gens = [SemilinearMap.of(space.field, entry.A, entry.e) for entry in doc.gens]
    for g in gens:
        if len(g.A) != space.n or any(len(r) != space.n for r in g.A):
            raise InvalidInputError("Размер образующей не совпадает с размерностью пространства")
        if form_service.similarity_factor(space, g.matrix, g.e) is None:
            logger.error(f"[GROUP] Generator in file {doc.name} is not a semisimilarity")
            raise InvalidInputError(f"Образующая группы {doc.name} не является полуподобием")
    return MatrixGroup(space, gens, name=doc.name)


def group_to_file(G: MatrixGroup, seed: Optional[int] = None, expected_order: Optional[int] = None) -> GeneratorFile:
    return GeneratorFile(
        form=spec_of_space(G.space),
        gens=[GeneratorEntry(A=[list(r) for r in g.A], e=g.e) for g in G.generators],
        name=G.name,
        expected_order=expected_order if expected_order is not None else G.cached_order,
        seed=seed,
    )


def load_generators(path: Path) -> MatrixGroup:
    try:
        doc = GeneratorFile.model_validate(json.loads(Path(path).read_text()))
    except FileNotFoundError:
        logger.error(f"[GROUP] Generator file {path} not found")
        raise DataFileError(f"Файл образующих не найден: {path}")
    except (ValueError, TypeError) as exc:
        logger.error(f"[GROUP] Generator file {path} is malformed: {exc}")
        raise DataFileError(f"Повреждён файл образующих {path}: {exc}")
    return group_from_file(doc)


def save_generators(G: MatrixGroup, path: Path, seed: Optional[int] = None) -> None:
    doc = group_to_file(G, seed=seed)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    # читатели не должны видеть недописанный файл
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.stem}.", suffix=".tmp")
    with os.fdopen(fd, "w", encoding="utf-8") as fh:
        fh.write(doc.model_dump_json(indent=1))
    os.replace(tmp, path)
    logger.info(f"[GROUP] Saved {len(G.generators)} generators of {G.name} to {path}")
