import pytest

from app.core.exceptions import BudgetExceededError, InvalidInputError, MismatchError
from app.models.form import FormKind, FormType
from app.models.group import SemilinearMap
from app.services import construction_service, form_service, group_service, orbit_service
from app.services.matspace_service import canonicalize


@pytest.fixture
def sp4_group(sp4_2):
    return group_service.isometry_group(sp4_2, "I")


class TestTransitivity:
    def test_small_orthogonal(self):
        G = group_service.classical_group("Ω", FormKind.QUADRATIC, 3, 2)
        space = G.space
        d = form_service.parse_family("P1", space)
        transitive, part = orbit_service.is_transitive(G, space, d)
        assert transitive and part.family_size == 3
        assert orbit_service.is_regular(G, space, d)

    @pytest.mark.parametrize("family,size", [("P1", 15), ("P2", 15), ("N2", 20)])
    def test_symplectic_families(self, sp4_group, sp4_2, family, size):
        transitive, part = orbit_service.is_transitive(sp4_group, sp4_2, form_service.parse_family(family, sp4_2))
        assert transitive
        assert part.lengths == [size]

    def test_point_stabilizer_orbits(self, sp4_group, sp4_2, budget):
        U = canonicalize(sp4_2.field, 4, [[1, 0, 0, 0]])
        H = group_service.stabilizer_of_subspace(sp4_group, U)
        transitive, part = orbit_service.is_transitive(H, sp4_2, form_service.parse_family("P1", sp4_2), budget)
        assert not transitive
        assert sorted(part.lengths) == [1, 6, 8]

    def test_field_extension_on_points(self, budget):
        H = construction_service.embed_field_extension(FormKind.ALTERNATING, 2, 2, 2)
        d = form_service.parse_family("P1", H.space)
        transitive, _ = orbit_service.is_transitive(H, H.space, d, budget)
        assert transitive

    def test_either_family(self, o6plus_2):
        omega = group_service.isometry_group(o6plus_2, "Ω")
        transitive, part = orbit_service.is_transitive(omega, o6plus_2, form_service.parse_family("P3", o6plus_2))
        assert not transitive and part.lengths == [15, 15]
        transitive, _ = orbit_service.is_transitive(omega, o6plus_2, form_service.parse_family("P3e", o6plus_2))
        assert transitive

    def test_budget(self, sp4_group, sp4_2, budget):
        small = budget.__class__(max_orbit=10, max_points=budget.max_points,
                                 max_primitive=budget.max_primitive, threads=1)
        with pytest.raises(BudgetExceededError):
            orbit_service.is_transitive(sp4_group, sp4_2, form_service.parse_family("P1", sp4_2), small)


class TestPrimitivity:
    def test_points_of_symplectic_quadrangle(self, sp4_group, sp4_2):
        points = form_service.enumerate_family(sp4_2, form_service.parse_family("P1", sp4_2))
        primitive, block = orbit_service.is_primitive(sp4_group, points)
        assert primitive and block is None

    def test_nondegenerate_lines_pair_up(self, sp4_group, sp4_2):
        lines = form_service.enumerate_family(sp4_2, form_service.parse_family("N2", sp4_2))
        primitive, block = orbit_service.is_primitive(sp4_group, lines)
        assert not primitive
        assert 1 < len(block) < 20 and 20 % len(block) == 0

    def test_prime_degree(self):
        G = group_service.classical_group("Ω", FormKind.QUADRATIC, 3, 2)
        points = form_service.enumerate_family(G.space, form_service.parse_family("P1", G.space))
        assert orbit_service.is_primitive(G, points)[0]

    def test_intransitive_input(self, sp4_group, sp4_2):
        U = canonicalize(sp4_2.field, 4, [[1, 0, 0, 0]])
        H = group_service.stabilizer_of_subspace(sp4_group, U)
        points = form_service.enumerate_family(sp4_2, form_service.parse_family("P1", sp4_2))
        with pytest.raises(InvalidInputError):
            orbit_service.is_primitive(H, points)

    def test_point_orbits(self):
        assert orbit_service.point_orbits([[1, 0, 2, 4, 3]], 5) == [[0, 1], [2], [3, 4]]


class TestFactorisation:
    def test_transitive_factor(self, sp4_group, sp4_2):
        U = canonicalize(sp4_2.field, 4, [[1, 0, 0, 0]])
        A = group_service.derived_subgroup(sp4_group)
        assert orbit_service.check_factorisation(sp4_group, A, seed=U)

    def test_stabilizer_is_not_a_factor(self, sp4_group, sp4_2):
        U = canonicalize(sp4_2.field, 4, [[1, 0, 0, 0]])
        A = group_service.stabilizer_of_subspace(sp4_group, U)
        assert not orbit_service.check_factorisation(sp4_group, A, seed=U)

    def test_needs_seed_or_subgroup(self, sp4_group):
        with pytest.raises(InvalidInputError):
            orbit_service.check_factorisation(sp4_group, sp4_group)


class TestMaximalClasses:
    def test_split(self, o6plus_2):
        plus, minus = orbit_service.omega_split_Pm(o6plus_2)
        assert len(plus) == len(minus) == 15
        omega = group_service.isometry_group(o6plus_2, "Ω")
        assert sorted(U.key for U in orbit_service.orbit(omega, minus[0])) == sorted(U.key for U in minus)

    def test_split_rejects_broken_minus_class(self, o6plus_2, monkeypatch):
        reference = form_service.reference_maximal(o6plus_2)
        real_orbit = orbit_service.orbit

        def truncated(G, seed, limit=None):
            found = real_orbit(G, seed, limit)
            return found if seed.key == reference.key else found[:-1]

        monkeypatch.setattr(orbit_service, "orbit", truncated)
        with pytest.raises(MismatchError):
            orbit_service.omega_split_Pm(o6plus_2)

    def test_reflection_swaps(self, o6plus_2):
        plus, minus = orbit_service.omega_split_Pm(o6plus_2)
        r = group_service.reflection(o6plus_2, (1, 1, 0, 0, 0, 0))
        assert orbit_service.swaps_classes(o6plus_2, r, plus, minus)
        identity = SemilinearMap.identity(o6plus_2.field, 6)
        assert not orbit_service.swaps_classes(o6plus_2, identity, plus, minus)

    def test_minus_type(self):
        space = form_service.standard_space(FormKind.QUADRATIC, 6, 2, FormType.MINUS)
        with pytest.raises(InvalidInputError):
            orbit_service.omega_split_Pm(space)


def test_partition_rejects_non_invariant_family(sp4_group, sp4_2):
    family = [canonicalize(sp4_2.field, 4, [[1, 0, 0, 0]])]
    with pytest.raises(InvalidInputError):
        orbit_service.partition(sp4_group, family)



def _orthogonal_families(space):
    """Семейства P_k, P_m^±, N_k^± и N_1 ортогонального пространства"""
    n, q_even = space.n, space.field.p == 2
    names = [f"P{k}" for k in range(1, n) if 2 * k < n]
    if space.type == FormType.PLUS:
        names += [f"P{n // 2}+", f"P{n // 2}-"]
    for k in range(1, n // 2 + 1):
        if k % 2 == 0 or (not q_even and (n % 2 == 0 or 2 * k < n)):
            names += [f"N{k}+", f"N{k}-"]
    if q_even:
        names.append("N1")
        if n % 2:
            names += [f"N{n - 1}+", f"N{n - 1}-"]
    return list(dict.fromkeys(names))


@pytest.mark.slow
@pytest.mark.parametrize("label,n,q", [
    (label, n, q)
    for label, dims in (("O", (3, 5, 7)), ("O+", (6, 8)), ("O-", (4, 6, 8)))
    for n in dims
    for q in (2, 3)
])
def test_omega_transitive_on_every_family(label, n, q, budget):
    kind, form_type = form_service.parse_ambient(label)
    G = group_service.classical_group("Ω", kind, n, q, form_type)
    space = G.space
    for name in _orthogonal_families(space):
        d = form_service.parse_family(name, space)
        if form_service.count_family(space, d) > 20_000:
            continue
        transitive, part = orbit_service.is_transitive(G, space, d, budget)
        assert transitive, f"{name}: {part.lengths}"
