import itertools
import logging
from typing import Callable, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from app.core.exceptions import InvalidInputError
from app.models.field import FiniteField
from app.models.matrix import Matrix, Subspace, Vector

logger = logging.getLogger(__name__)


# Векторы и матрицы

def identity(n: int) -> Matrix:
    return [[1 if i == j else 0 for j in range(n)] for i in range(n)]


def zero_vector(n: int) -> Vector:
    return (0,) * n


def unit_vector(n: int, i: int, value: int = 1) -> Vector:
    return tuple(value if j == i else 0 for j in range(n))


def vec_add(field: FiniteField, u: Sequence[int], v: Sequence[int]) -> Vector:
    add = field.add
    return tuple(add(a, b) for a, b in zip(u, v))


def vec_scale(field: FiniteField, c: int, v: Sequence[int]) -> Vector:
    mul = field.mul
    return tuple(mul(c, x) for x in v)


def vec_axpy(field: FiniteField, c: int, u: Sequence[int], v: Sequence[int]) -> Vector:
    """c*u + v"""
    add, mul = field.add, field.mul
    return tuple(add(mul(c, a), b) for a, b in zip(u, v))


def vec_frob(field: FiniteField, v: Sequence[int], e: int) -> Vector:
    if e % field.f == 0:
        return tuple(v)
    table = field.frob_table(e)
    return tuple(table[x] for x in v)


def dot(field: FiniteField, u: Sequence[int], v: Sequence[int]) -> int:
    add, mul = field.add, field.mul
    total = 0
    for a, b in zip(u, v):
        if a and b:
            total = add(total, mul(a, b))
    return total


def vec_mat(field: FiniteField, v: Sequence[int], A: Matrix) -> Vector:
    """Произведение строки на матрицу: vA"""
    add, mul = field.add, field.mul
    out = [0] * len(A[0])
    for a, row in zip(v, A):
        if a == 0:
            continue
        for j, x in enumerate(row):
            if x:
                out[j] = add(out[j], mul(a, x))
    return tuple(out)


def mat_mul(field: FiniteField, A: Matrix, B: Matrix) -> Matrix:
    return [list(vec_mat(field, row, B)) for row in A]


def mat_frob(field: FiniteField, A: Matrix, e: int) -> Matrix:
    if e % field.f == 0:
        return [list(row) for row in A]
    table = field.frob_table(e)
    return [[table[x] for x in row] for row in A]


def transpose(A: Matrix) -> Matrix:
    return [list(col) for col in zip(*A)]


def mat_scale(field: FiniteField, c: int, A: Matrix) -> Matrix:
    return [list(vec_scale(field, c, row)) for row in A]


def mat_equal(A: Matrix, B: Matrix) -> bool:
    return all(list(a) == list(b) for a, b in zip(A, B)) and len(A) == len(B)


def is_identity(A: Matrix) -> bool:
    return all(x == (1 if i == j else 0) for i, row in enumerate(A) for j, x in enumerate(row))


def block_diagonal(blocks: Sequence[Matrix]) -> Matrix:
    n = sum(len(b) for b in blocks)
    out = [[0] * n for _ in range(n)]
    offset = 0
    for block in blocks:
        for i, row in enumerate(block):
            for j, x in enumerate(row):
                out[offset + i][offset + j] = x
        offset += len(block)
    return out


# Гауссово исключение

def rref(field: FiniteField, rows: Sequence[Sequence[int]], n: int) -> Tuple[List[Vector], List[int]]:
    """Приведённая ступенчатая форма; ведущий столбец - наименьший возможный"""
    add, mul, neg, inv = field.add, field.mul, field.neg, field.inv
    M = [list(r) for r in rows if any(r)]
    pivots: List[int] = []
    r = 0
    for c in range(n):
        if r == len(M):
            break
        piv = next((i for i in range(r, len(M)) if M[i][c]), None)
        if piv is None:
            continue
        M[r], M[piv] = M[piv], M[r]
        lead = M[r][c]
        if lead != 1:
            t = inv(lead)
            M[r] = [mul(t, x) for x in M[r]]
        pivot_row = M[r]
        for i in range(len(M)):
            if i != r and M[i][c]:
                t = neg[M[i][c]]
                M[i] = [add(a, mul(t, b)) if b else a for a, b in zip(M[i], pivot_row)]
        pivots.append(c)
        r += 1
    return [tuple(row) for row in M[:r]], pivots


def rank(field: FiniteField, rows: Sequence[Sequence[int]], n: int) -> int:
    return len(rref(field, rows, n)[0])


def canonicalize(field: FiniteField, n: int, rows: Sequence[Sequence[int]]) -> Subspace:
    """Канонический базис линейной оболочки строк"""
    for row in rows:
        if len(row) != n:
            logger.error(f"[SPACE] Row of length {len(row)} in ambient dimension {n}")
            raise InvalidInputError(f"Строка длины {len(row)} не лежит в GF(q)^{n}")
    basis, _ = rref(field, rows, n)
    return Subspace(field, n, tuple(basis))


def subspace_key(U: Subspace) -> bytes:
    return U.key


def nullspace(field: FiniteField, M: Sequence[Sequence[int]], n: int) -> List[Vector]:
    """Базис {x : M x^T = 0}"""
    basis, pivots = rref(field, M, n)
    pivot_set = set(pivots)
    out = []
    for free in range(n):
        if free in pivot_set:
            continue
        x = [0] * n
        x[free] = 1
        for row, p in zip(basis, pivots):
            if row[free]:
                x[p] = field.neg[row[free]]
        out.append(tuple(x))
    return out


def left_kernel(field: FiniteField, M: Matrix) -> List[Vector]:
    """Базис {v : vM = 0}"""
    return nullspace(field, transpose(M), len(M))


def _check_ambient(U: Subspace, W: Subspace) -> None:
    if U.n != W.n or U.field != W.field:
        logger.error(f"[SPACE] Ambient mismatch: {U.n} vs {W.n}")
        raise InvalidInputError("Подпространства лежат в разных объемлющих пространствах")


def sum_spaces(U: Subspace, W: Subspace) -> Subspace:
    _check_ambient(U, W)
    return canonicalize(U.field, U.n, list(U.rows) + list(W.rows))


def intersect(U: Subspace, W: Subspace) -> Subspace:
    """U ∩ W через левое ядро составной матрицы"""
    _check_ambient(U, W)
    field = U.field
    if U.is_zero or W.is_zero:
        return Subspace(field, U.n, ())
    stacked = [list(r) for r in U.rows] + [list(r) for r in W.rows]
    relations = left_kernel(field, stacked)
    vectors = []
    for rel in relations:
        v = [0] * U.n
        for c, row in zip(rel[: U.dim], U.rows):
            if c:
                v = list(vec_axpy(field, c, row, v))
        vectors.append(v)
    return canonicalize(field, U.n, vectors)


def contains_vector(U: Subspace, v: Sequence[int]) -> bool:
    """Принадлежность вектора подпространству через редукцию по ведущим столбцам"""
    field = U.field
    w = list(v)
    for row, p in zip(U.rows, U.pivots):
        if w[p]:
            w = list(vec_axpy(field, field.neg[w[p]], row, w))
    return not any(w)


def contains(U: Subspace, W: Subspace) -> bool:
    return all(contains_vector(U, row) for row in W.rows)


def image(U: Subspace, A: Matrix, e: int = 0) -> Subspace:
    """Образ подпространства под v -> σ^e(v) A"""
    field = U.field
    rows = [vec_mat(field, vec_frob(field, row, e), A) for row in U.rows]
    return canonicalize(field, U.n, rows)


def span_vectors(U: Subspace) -> Iterator[Vector]:
    """Все векторы подпространства"""
    field = U.field
    for coeffs in itertools.product(range(field.q), repeat=U.dim):
        v: Vector = zero_vector(U.n)
        for c, row in zip(coeffs, U.rows):
            if c:
                v = vec_axpy(field, c, row, v)
        yield v


def det(field: FiniteField, A: Matrix) -> int:
    add, mul, neg, inv = field.add, field.mul, field.neg, field.inv
    M = [list(r) for r in A]
    n = len(M)
    result = 1
    for c in range(n):
        piv = next((i for i in range(c, n) if M[i][c]), None)
        if piv is None:
            return 0
        if piv != c:
            M[c], M[piv] = M[piv], M[c]
            result = neg[result]
        result = mul(result, M[c][c])
        t0 = inv(M[c][c])
        for i in range(c + 1, n):
            if M[i][c]:
                t = neg[mul(M[i][c], t0)]
                M[i] = [add(a, mul(t, b)) for a, b in zip(M[i], M[c])]
    return result


def inverse(field: FiniteField, A: Matrix) -> Matrix:
    n = len(A)
    augmented = [list(row) + list(unit_vector(n, i)) for i, row in enumerate(A)]
    basis, pivots = rref(field, augmented, 2 * n)
    if pivots[:n] != list(range(n)) or len(basis) < n:
        raise InvalidInputError("Матрица вырождена")
    return [list(row[n:]) for row in basis[:n]]


def gaussian_binomial(n: int, k: int, q: int) -> int:
    """Число k-мерных подпространств GF(q)^n"""
    if k < 0 or k > n:
        return 0
    num, den = 1, 1
    for i in range(k):
        num *= q ** (n - i) - 1
        den *= q ** (i + 1) - 1
    return num // den


def enumerate_subspaces(
    field: FiniteField,
    n: int,
    k: int,
    prune: Optional[Callable[[List[Vector], List[int]], bool]] = None,
) -> Iterator[Subspace]:
    """Перебор k-подпространств по шаблонам ведущих столбцов

    `prune(rows, pivots)` вызывается после построения очередной строки;
    False отсекает ветку.
    """
    q = field.q
    for pivots in itertools.combinations(range(n), k):
        pivot_set = set(pivots)
        free = [[j for j in range(p + 1, n) if j not in pivot_set] for p in pivots]

        def extend(rows: List[Vector], i: int) -> Iterator[Subspace]:
            if i == k:
                yield Subspace(field, n, tuple(rows))
                return
            base = [0] * n
            base[pivots[i]] = 1
            for values in itertools.product(range(q), repeat=len(free[i])):
                row = list(base)
                for j, x in zip(free[i], values):
                    row[j] = x
                rows.append(tuple(row))
                if prune is None or prune(rows, list(pivots[: i + 1])):
                    yield from extend(rows, i + 1)
                rows.pop()

        yield from extend([], 0)


# Векторные таблицы для быстрых орбит точек

def vector_index(field: FiniteField, v: Sequence[int]) -> int:
    idx = 0
    for x in reversed(v):
        idx = idx * field.q + x
    return idx


def index_vector(field: FiniteField, idx: int, n: int) -> Vector:
    out = []
    for _ in range(n):
        idx, r = divmod(idx, field.q)
        out.append(r)
    return tuple(out)


def apply_batch(field: FiniteField, vecs: np.ndarray, A: Matrix, e: int = 0) -> np.ndarray:
    """Образы пачки векторов (N x n) под v -> σ^e(v) A"""
    src = field.frob_np(vecs, e)
    n_out = len(A[0])
    out = np.zeros((src.shape[0], n_out), dtype=np.int64)
    for i, row in enumerate(A):
        col = src[:, i]
        for j, x in enumerate(row):
            if x:
                out[:, j] = field.add_np(out[:, j], field.mul_np(col, x))
    return out


def batch_index(field: FiniteField, vecs: np.ndarray) -> np.ndarray:
    powers = np.array([field.q**i for i in range(vecs.shape[1])], dtype=np.int64)
    return vecs @ powers


def normalize_batch(field: FiniteField, vecs: np.ndarray) -> np.ndarray:
    """Нормировка: первый ненулевой элемент каждого вектора равен 1"""
    nonzero = vecs != 0
    first = np.argmax(nonzero, axis=1)
    lead = vecs[np.arange(vecs.shape[0]), first]
    inv_log = (field.q - 1 - field.log_np[lead]) % (field.q - 1)
    out = np.zeros_like(vecs)
    for j in range(vecs.shape[1]):
        col = vecs[:, j]
        val = field.exp_np[(field.log_np[col] + inv_log) % (field.q - 1)]
        out[:, j] = np.where(col == 0, 0, val)
    return out
