import json
from dataclasses import replace

import pytest

from app.core.config import Budget
from app.core.exceptions import BudgetExceededError, DataFileError, InvalidInputError
from app.schemas.catalog import GridSpec
from app.services import catalog_service, search_service
from app.services.catalog_service import evaluate, parse_constraint, parse_row


@pytest.fixture(scope="module")
def entries():
    return catalog_service.load_catalog()


def _row(line: str):
    return parse_row(line, {}, "test", 1)


class TestExpressions:
    def test_arithmetic(self):
        assert evaluate("2*m-1", {"m": 3}) == 5
        assert evaluate("a*b", {"a": 2, "b": 3}) == 6
        assert evaluate("m/2", {"m": 4}) == 2
        assert evaluate("q**2", {"q": 3}) == 9

    def test_non_integral_division(self):
        with pytest.raises(InvalidInputError):
            evaluate("m/2", {"m": 3})

    def test_unknown_variable(self):
        with pytest.raises(InvalidInputError):
            evaluate("m+k", {"m": 1})

    def test_calls_are_rejected(self):
        with pytest.raises(InvalidInputError):
            evaluate("__import__('os')", {})

    @pytest.mark.parametrize("clause,env,expected", [
        ("q in 2,4", {"q": 4}, True),
        ("q in 2,4", {"q": 3}, False),
        ("q even", {"q": 8}, True),
        ("q odd", {"q": 8}, False),
        ("q square", {"q": 9}, True),
        ("m>=2", {"m": 1}, False),
        ("m=2*a", {"m": 4, "a": 2}, True),
        ("b!=1", {"b": 1}, False),
    ])
    def test_constraints(self, clause, env, expected):
        predicate, _ = parse_constraint(clause)
        assert predicate(env) is expected

    def test_malformed_constraint(self):
        with pytest.raises(InvalidInputError):
            parse_constraint("whenever")


class TestRows:
    def test_parse(self):
        entry = _row("T:X | Sp 2*a*b | P1 | Sp_{2a}(q^b) | field-extension inner=Sp n=2*a b=b | b>=2; slow")
        assert entry.id == "T:X#1"
        assert entry.args == {"inner": "Sp", "n": "2*a", "b": "b"}
        assert entry.constraints == ["b>=2"]
        assert entry.flags == ["slow"]
        assert catalog_service.free_variables(entry) == ["a", "b"]

    @pytest.mark.parametrize("line", [
        "T:X | Sp 4 | P1 | H | field-extension",
        "T:X | Sp 4 | P1 | H | teleport | ",
        "T:X | Sp 4 | P1 | H | field-extension inner | ",
        "T:X | G2 4 | P1 | H | needs-generators | ",
        "T:X | GQ W5 | points | H | needs-generators | ",
        "T:X | Sp 4 | P1 | H | needs-generators | q at most 4",
        "T:X | U 3 | P1 | H | generator-file file=sylow3_su3_2 | q=2",
        "T:X | U 3 | P1 | H | generator-file order=27 | q=2",
    ])
    def test_malformed(self, line):
        with pytest.raises(InvalidInputError):
            _row(line)

    def test_broken_file(self, tmp_path):
        (tmp_path / "bad.txt").write_text("T:X | Sp 4 | P1\n")
        with pytest.raises(DataFileError):
            catalog_service.load_catalog(tmp_path)

    def test_missing_directory(self, tmp_path):
        with pytest.raises(DataFileError):
            catalog_service.load_catalog(tmp_path / "absent")


class TestCatalogData:
    def test_row_count(self, entries):
        assert len(entries) == 250

    @pytest.mark.parametrize("table,count", [
        ("T6", 11), ("T7", 7), ("T8", 7), ("T:SLa", 11), ("T:SLbigN", 3), ("T:Spa", 6),
        ("T:Spc", 4), ("T:Spd", 7), ("T:Oa", 6), ("T:Oc", 4), ("T:Oc2", 5),
        ("tab:Ooddqeven", 4), ("T:OEvenP1", 4), ("T:OEvenN1", 4), ("T:GOminus6q", 7),
        ("T:OPlusN1", 37), ("T:OPlusb", 22), ("T:OPlusBoth", 15), ("T:flag", 10),
        ("tab:transGQP1", 16), ("tab:transGQP2", 16), ("L:temp", 1), ("L:SUorthog", 1),
    ])
    def test_table_sizes(self, entries, table, count):
        assert catalog_service.tables(entries)[table] == count

    def test_ids_are_unique(self, entries):
        assert len({e.id for e in entries}) == len(entries)

    def test_find_entry(self, entries):
        assert catalog_service.find_entry("L:temp#1", entries).negative
        with pytest.raises(InvalidInputError):
            catalog_service.find_entry("T:none#1", entries)


class TestInstantiation:
    def test_grid(self, entries):
        entry = catalog_service.find_entry("T:Spa#1", entries)
        envs = catalog_service.instantiate(entry, GridSpec(max_n=8, max_q=4))
        pairs = {(env["a"], env["b"], env["q"]) for env in envs}
        assert pairs == {(a, b, q) for a, b in [(1, 2), (1, 3), (1, 4), (2, 2)] for q in (2, 3, 4)}

    def test_empty_grid(self, entries):
        grid = GridSpec(max_n=0, max_q=0)
        assert grid.empty
        assert all(not catalog_service.instantiate(e, grid) for e in entries)
        assert catalog_service.run_suite(grid).entries == []

    def test_slow_rows_need_opt_in(self, entries):
        slow = next(e for e in entries if "slow" in e.flags)
        assert catalog_service.instantiate(slow, GridSpec(max_n=12, max_q=16)) == []

    def test_env_for(self, entries):
        entry = catalog_service.find_entry("T:Spa#1", entries)
        env = catalog_service.env_for(entry, {"q": 2, "a": 1, "b": 2})
        assert (env["p"], env["f"]) == (2, 1)
        with pytest.raises(InvalidInputError):
            catalog_service.env_for(entry, {"q": 2, "a": 1})
        with pytest.raises(InvalidInputError):
            catalog_service.env_for(entry, {"q": 2, "a": 1, "b": 1})
        with pytest.raises(InvalidInputError):
            catalog_service.env_for(entry, {"q": 6, "a": 1, "b": 2})


class TestVerification:
    def test_verified_row(self, entries, budget):
        entry = catalog_service.find_entry("T:Spa#1", entries)
        env = catalog_service.env_for(entry, {"q": 2, "a": 1, "b": 2})
        report = catalog_service.verify_entry(entry, env, budget)
        assert report.status == "verified"
        assert report.family_size == 15 and report.orbit_count == 1

    def test_pending_row(self, entries, budget):
        entry = catalog_service.find_entry("T:Spa#2", entries)
        env = catalog_service.env_for(entry, {"q": 2, "b": 1})
        assert catalog_service.verify_entry(entry, env, budget).status == "pending"

    def test_open_row(self, budget):
        entry = _row("T:X | Sp 4 | P1 | H | needs-generators | open")
        assert catalog_service.verify_entry(entry, {"q": 2, "p": 2, "f": 1}, budget).status == "open"

    def test_failed_row(self, budget):
        entry = _row("T:X | Sp 4 | P2 | Sp_2(4) | field-extension inner=Sp n=2 b=2 | q=2")
        report = catalog_service.verify_entry(entry, catalog_service.env_for(entry, {"q": 2}), budget)
        assert report.status == "failed"
        assert report.family_size == 15 and report.orbit_count == 2

    def test_adhoc_entry(self, budget):
        entry = catalog_service.adhoc_entry("Sp 4", "P1", "field-extension", {"inner": "Sp", "n": "2", "b": "2"})
        assert entry.id == "cli#1"
        report = catalog_service.verify_entry(entry, catalog_service.env_for(entry, {"q": 2}), budget)
        assert report.status == "verified"

    def test_suite_and_report(self, budget):
        rows = [
            _row("T:X | Sp 2*a*b | P1 | Sp_{2a}(q^b) | field-extension inner=Sp n=2*a b=b | b>=2"),
            parse_row("T:Y | Sp 4 | P2 | Sp_2(4) | field-extension inner=Sp n=2 b=2 | q=2; superset",
                      {}, "test", 2),
        ]
        report = catalog_service.run_suite(GridSpec(max_n=4, max_q=3), budget, entries=rows)
        assert [(e.id, e.params["q"], e.status) for e in report.entries] == [
            ("T:X#1", 2, "verified"), ("T:X#1", 3, "verified"), ("T:Y#1", 2, "failed"),
        ]
        assert report.hard_failures == []
        assert report.summary["verified"] == 2
        text = catalog_service.report_text(report)
        assert "verified=2" in text and "failed=1" in text

    def test_report_document_is_reproducible(self, budget):
        rows = [_row("T:X | Sp 2*a*b | P1 | Sp_{2a}(q^b) | field-extension inner=Sp n=2*a b=b | b>=2")]
        grid = GridSpec(max_n=4, max_q=3)
        first = catalog_service.run_suite(grid, budget, entries=rows)
        second = catalog_service.run_suite(grid, budget, entries=rows)
        assert first.model_dump_json() == second.model_dump_json()
        assert "ms" not in first.model_dump()["entries"][0]
        assert catalog_service.report_text(first).splitlines()[0].split()[-1].endswith("ms")


class TestGeneratorFileOrders:
    def test_row_order_verified(self, data_dir, budget):
        entry = _row("T:X | U 3 | P1 | 3_+^{1+2} | generator-file file=sylow3_su3_2 order=27 | q=2")
        report = catalog_service.verify_entry(entry, catalog_service.env_for(entry, {"q": 2}), budget)
        assert report.status == "verified"
        assert report.family_size == 9 and report.orbit_count == 1

    def test_wrong_row_order_fails(self, data_dir, budget):
        entry = _row("T:X | U 3 | P1 | 3_+^{1+2} | generator-file file=sylow3_su3_2 order=54 | q=2")
        report = catalog_service.verify_entry(entry, catalog_service.env_for(entry, {"q": 2}), budget)
        assert report.status == "failed"
        assert report.detail == "|H| = 27, ожидалось 54"

    def test_order_recorded_in_file_is_ignored(self, data_dir, budget):
        path = data_dir / "generators" / "sylow3_su3_2.json"
        doc = json.loads(path.read_text())
        doc["expected_order"] = 54
        path.write_text(json.dumps(doc))
        entry = _row("T:X | U 3 | P1 | 3_+^{1+2} | generator-file file=sylow3_su3_2 order=27 | q=2")
        report = catalog_service.verify_entry(entry, catalog_service.env_for(entry, {"q": 2}), budget)
        assert report.status == "verified"

    def test_projective_order(self, data_dir, budget):
        # центр ω·I действует на точках тривиально
        entry = _row("T:X | U 3 | P1 | 3^2 | generator-file file=sylow3_su3_2 porder=9 | q=2")
        report = catalog_service.verify_entry(entry, catalog_service.env_for(entry, {"q": 2}), budget)
        assert report.status == "verified"
        entry = _row("T:X | U 3 | P1 | 3^2 | generator-file file=sylow3_su3_2 porder=27 | q=2")
        report = catalog_service.verify_entry(entry, catalog_service.env_for(entry, {"q": 2}), budget)
        assert report.detail == "|HZ/Z| = 9, ожидалось 27"

    def test_projective_order_budget(self, data_dir, budget):
        H = search_service.ensure_generators("sylow3_su3_2", budget)
        with pytest.raises(BudgetExceededError):
            catalog_service.projective_order(H, replace(budget, max_points=20))

    def test_shipped_rows_state_orders(self, entries):
        rows = [e for e in entries if e.recipe == "generator-file"]
        assert len(rows) == 55
        assert all({"order", "porder"} & set(e.args) for e in rows)


@pytest.mark.slow
def test_field_extension_with_frobenius_has_two_orbits(entries, budget):
    entry = catalog_service.find_entry("L:temp#1", entries)
    report = catalog_service.negative_check(entry, catalog_service.env_for(entry, {"q": 2}), budget)
    assert report.status == "verified"
    assert report.orbit_count == 2


@pytest.mark.slow
def test_default_grid_has_no_hard_failures(data_dir):
    report = catalog_service.run_suite(GridSpec(), Budget())
    assert report.entries
    assert report.hard_failures == [], [(e.id, e.params, e.detail) for e in report.hard_failures]
    by_id = {e.id: e for e in catalog_service.load_catalog()}
    assert all(e.status != "pending" for e in report.entries if by_id[e.id].constructive)
