import random

import pytest

from app.core.exceptions import BudgetExceededError, InvalidInputError
from app.models.form import FamilyLabel, FormKind, FormType
from app.services import form_service, group_service
from app.services.form_service import (
    classify_subspace,
    count_family,
    enumerate_family,
    parse_ambient,
    parse_family,
    standard_space,
    witt_index,
)
from app.services.matspace_service import canonicalize, image


def _space(label: str, n: int, q: int):
    kind, form_type = parse_ambient(label)
    return standard_space(kind, n, q, form_type)


class TestStandardSpaces:
    def test_ambient_labels(self):
        assert parse_ambient("O+") == (FormKind.QUADRATIC, FormType.PLUS)
        assert parse_ambient("O−") == (FormKind.QUADRATIC, FormType.MINUS)
        with pytest.raises(InvalidInputError):
            parse_ambient("G2")

    def test_odd_alternating(self):
        with pytest.raises(InvalidInputError):
            standard_space(FormKind.ALTERNATING, 3, 2)

    def test_even_quadratic_needs_type(self):
        with pytest.raises(InvalidInputError):
            standard_space(FormKind.QUADRATIC, 4, 3)
        with pytest.raises(InvalidInputError):
            standard_space(FormKind.QUADRATIC, 5, 3, FormType.PLUS)

    def test_hermitian_field(self, u3_2):
        assert u3_2.field.q == 4
        assert u3_2.q == 2
        assert u3_2.label == "U"

    def test_quadratic_values(self, o6plus_2):
        e1 = (1, 0, 0, 0, 0, 0)
        e1f1 = (1, 1, 0, 0, 0, 0)
        assert form_service.quad_value(o6plus_2, e1) == 0
        assert form_service.quad_value(o6plus_2, e1f1) == 1
        assert form_service.pair(o6plus_2, e1, (0, 1, 0, 0, 0, 0)) == 1

    def test_hermitian_pair_is_sesquilinear(self, u3_2):
        F = u3_2.field
        u, v = (1, 0, 2), (0, 1, 1)
        c = 2
        scaled = tuple(F.mul(c, x) for x in v)
        assert form_service.pair(u3_2, u, scaled) == F.mul(F.frob(c, 1), form_service.pair(u3_2, u, v))


class TestWittIndex:
    @pytest.mark.parametrize("label,n,q,expected", [
        ("Sp", 4, 3, 2),
        ("O-", 6, 2, 2),
        ("O+", 6, 2, 3),
        ("O", 7, 3, 3),
        ("U", 3, 2, 1),
        ("U", 4, 2, 2),
    ])
    def test_index(self, label, n, q, expected):
        assert witt_index(_space(label, n, q)) == expected

    def test_perp(self, sp4_2):
        e1 = canonicalize(sp4_2.field, 4, [[1, 0, 0, 0]])
        assert form_service.perp(sp4_2, e1).rows == ((1, 0, 0, 0), (0, 0, 1, 0), (0, 0, 0, 1))

    def test_nondegenerate(self, sp4_2):
        assert form_service.radical(sp4_2).is_zero


class TestClassification:
    def test_symplectic(self, sp4_2):
        F = sp4_2.field
        assert classify_subspace(sp4_2, canonicalize(F, 4, [[1, 0, 0, 0]])).kind == "totally-isotropic"
        assert classify_subspace(sp4_2, canonicalize(F, 4, [[1, 0, 0, 0], [0, 1, 0, 0]])).kind == "nondegenerate"
        assert classify_subspace(sp4_2, canonicalize(F, 4, [[1, 0, 0, 0], [0, 0, 1, 0]])).kind == "totally-isotropic"

    def test_orthogonal_even_q(self, o6plus_2):
        F = o6plus_2.field
        assert classify_subspace(o6plus_2, canonicalize(F, 6, [[1, 0, 0, 0, 0, 0]])).kind == "totally-singular"
        assert classify_subspace(o6plus_2, canonicalize(F, 6, [[1, 1, 0, 0, 0, 0]])).kind == "nonsingular-1"
        hyperbolic = classify_subspace(o6plus_2, canonicalize(F, 6, [[1, 0, 0, 0, 0, 0], [0, 1, 0, 0, 0, 0]]))
        assert (hyperbolic.kind, hyperbolic.sign) == ("nondegenerate", "+")
        assert str(hyperbolic) == "nondegenerate(+)"

    def test_degenerate(self, o6plus_2):
        F = o6plus_2.field
        U = canonicalize(F, 6, [[1, 0, 0, 0, 0, 0], [0, 0, 1, 1, 0, 0]])
        assert classify_subspace(o6plus_2, U).kind == "degenerate-other"

    def test_nucleus_of_odd_dimension(self):
        space = _space("O", 5, 2)
        nucleus = form_service.radical(space)
        assert nucleus.dim == 1
        assert classify_subspace(space, nucleus).kind == "degenerate-other"

    def test_linear(self):
        space = _space("L", 3, 2)
        U = canonicalize(space.field, 3, [[1, 0, 0]])
        assert classify_subspace(space, U).kind == "subspace"

    def test_improper_subspace(self, sp4_2):
        with pytest.raises(InvalidInputError):
            classify_subspace(sp4_2, canonicalize(sp4_2.field, 4, []))


class TestFamilies:
    def test_parse(self, o6plus_2):
        assert parse_family("Pm", o6plus_2).k == 3
        assert parse_family("P3+", o6plus_2).label == FamilyLabel.P_PLUS
        assert str(parse_family("N2-", o6plus_2)) == "N2-"
        d = parse_family("N1", o6plus_2)
        assert d.label == FamilyLabel.NONSINGULAR_ONE and str(d) == "N1"

    def test_parse_linear(self):
        d = parse_family("k=2", _space("L", 5, 2))
        assert d.label == FamilyLabel.ALL and str(d) == "k=2"

    @pytest.mark.parametrize("label,n,q,family", [
        ("Sp", 4, 3, "P3"),
        ("Sp", 4, 3, "N1"),
        ("U", 4, 2, "N2+"),
        ("Sp", 4, 3, "k=2"),
        ("L", 4, 2, "P1"),
        ("O+", 6, 2, "P2+"),
        ("O-", 6, 2, "P3"),
        ("O", 7, 2, "N3"),
        ("Sp", 4, 3, "X1"),
    ])
    def test_inadmissible(self, label, n, q, family):
        with pytest.raises(InvalidInputError):
            parse_family(family, _space(label, n, q))


class TestCounting:
    @pytest.mark.parametrize("label,n,q,family,expected", [
        ("U", 3, 2, "P1", 9),
        ("U", 3, 2, "N1", 12),
        ("L", 5, 2, "k=2", 155),
        ("O", 3, 2, "P1", 3),
        ("O", 3, 4, "N2-", 6),
        ("Sp", 4, 3, "P2", 40),
        ("O", 7, 3, "P3", 1120),
        ("O+", 6, 2, "P3+", 15),
        ("O", 5, 2, "N1", 15),
        ("O-", 8, 2, "N2+", 3808),
        ("O+", 8, 2, "N2+", 4320),
    ])
    def test_formula(self, label, n, q, family, expected):
        space = _space(label, n, q)
        assert count_family(space, parse_family(family, space)) == expected

    @pytest.mark.parametrize("label,n,q,family", [
        ("U", 3, 2, "P1"),
        ("U", 3, 2, "N1"),
        ("O", 3, 4, "N2-"),
        ("Sp", 4, 3, "P2"),
        ("O+", 6, 2, "P3-"),
        ("O-", 6, 2, "N2e"),
        ("O", 5, 3, "N1+"),
        ("O+", 8, 2, "N2+"),
    ])
    def test_enumeration_matches_formula(self, label, n, q, family):
        space = _space(label, n, q)
        d = parse_family(family, space)
        members = enumerate_family(space, d)
        assert len(members) == count_family(space, d)
        assert len({U.key for U in members}) == len(members)

    def test_budget(self, sp4_2):
        with pytest.raises(BudgetExceededError):
            enumerate_family(sp4_2, parse_family("P1", sp4_2), max_orbit=5)

    def test_isometry_orders(self):
        assert form_service.isometry_order(FormKind.ALTERNATING, "o", 4, 3) == 51840
        assert form_service.isometry_order(FormKind.HERMITIAN, "o", 3, 2) == 648
        assert form_service.isometry_order(FormKind.QUADRATIC, "+", 6, 2) == 40320


def _random_subspace(space, rng):
    while True:
        k = rng.randrange(1, space.n)
        rows = [[rng.randrange(space.field.q) for _ in range(space.n)] for _ in range(k)]
        U = canonicalize(space.field, space.n, rows)
        if U.dim == k:
            return U


@pytest.mark.slow
class TestInvariantsUnderIsometries:
    SPACES = [("O", 5, 3), ("O-", 6, 2), ("U", 4, 2), ("Sp", 6, 3)]

    @pytest.mark.parametrize("label,n,q", SPACES)
    def test_classification_is_invariant(self, label, n, q):
        space = _space(label, n, q)
        G = group_service.isometry_group(space, "I")
        rng = random.Random(20240917)
        for _ in range(1000):
            U = _random_subspace(space, rng)
            g = group_service.random_element(G, rng)
            assert classify_subspace(space, image(U, g.matrix, g.e)) == classify_subspace(space, U)

    @pytest.mark.parametrize("label,n,q", SPACES)
    def test_double_perp(self, label, n, q):
        space = _space(label, n, q)
        rng = random.Random(7)
        for _ in range(500):
            U = _random_subspace(space, rng)
            W = form_service.perp(space, U)
            assert W.dim == n - U.dim
            assert form_service.perp(space, W).key == U.key
