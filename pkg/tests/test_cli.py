import json

import pytest

from app.cli import main
from app.models.form import FormKind
from app.services import construction_service, group_service


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out.strip(), err


class TestCount:
    def test_count_and_enumerate(self, capsys):
        assert run(capsys, "count", "U", "3", "2", "P1")[:2] == (0, "9 enumerated=9 ok")

    def test_formula_only(self, capsys):
        assert run(capsys, "count", "O-", "8", "2", "N2+", "--formula-only")[:2] == (0, "3808")

    def test_json(self, capsys):
        code, out, _ = run(capsys, "count", "Sp", "4", "3", "P2", "--json")
        doc = json.loads(out)
        assert code == 0
        assert (doc["formula"], doc["enumerated"], doc["match"]) == (40, 40, True)

    def test_invalid_space(self, capsys):
        code, _, err = run(capsys, "count", "Sp", "5", "2", "P1")
        assert code == 1
        assert err.startswith("error:")

    def test_enumerate(self, capsys):
        code, out, _ = run(capsys, "enumerate", "O", "3", "2", "P1", "--json")
        assert code == 0
        assert len(json.loads(out)) == 3


class TestOrder:
    def test_computed(self, capsys):
        assert run(capsys, "order", "S", "L", "3", "2")[:2] == (0, "168 computed=168 ok")

    def test_omega_alias(self, capsys):
        assert run(capsys, "order", "Omega", "O", "5", "3", "--formula-only")[:2] == (0, "25920")


class TestCheck:
    def test_recipe(self, capsys):
        code, out, _ = run(capsys, "check", "--recipe", "ext-field", "Sp", "2", "4",
                           "--ambient", "Sp", "4", "2", "--family", "P1")
        assert code == 0
        assert out.startswith("transitive |U|=15")

    def test_intransitive_exit_code(self, capsys):
        code, out, _ = run(capsys, "check", "--recipe", "ext-field", "Sp", "2", "4",
                           "--ambient", "Sp", "4", "2", "--family", "P2")
        assert code == 3
        assert out.startswith("intransitive |U|=15")

    def test_layer(self, capsys):
        code, out, _ = run(capsys, "check", "--layer", "Ω", "--ambient", "O+", "6", "2", "--family", "P3")
        assert code == 3
        assert "orbits=[15, 15]" in out

    def test_generator_file(self, capsys, tmp_path):
        path = tmp_path / "sp2_4.json"
        group_service.save_generators(
            construction_service.embed_field_extension(FormKind.ALTERNATING, 2, 2, 2), path)
        code, out, _ = run(capsys, "check", "--gens", str(path), "--family", "P1", "--json")
        assert code == 0
        doc = json.loads(out)
        assert doc["transitive"] and doc["family_size"] == 15

    def test_wrong_field(self, capsys):
        code, _, _ = run(capsys, "check", "--recipe", "ext-field", "Sp", "2", "8",
                         "--ambient", "Sp", "4", "3", "--family", "P1")
        assert code == 1

    def test_needs_ambient(self, capsys):
        code, _, err = run(capsys, "check", "--family", "P1")
        assert code == 1
        assert "error:" in err

    @pytest.mark.slow
    def test_unitary_group_in_orthogonal_space(self, capsys):
        code, out, _ = run(capsys, "check", "--recipe", "su-orth", "m=4", "--ambient", "O+", "8", "2",
                           "--family", "N2+")
        assert code == 0
        assert out.startswith("transitive |U|=4320")


class TestSuite:
    def test_empty_grid(self, capsys):
        code, out, _ = run(capsys, "suite", "--grid", "empty", "--json")
        assert code == 0
        assert json.loads(out)["entries"] == []

    def test_report_file(self, capsys, tmp_path, data_dir):
        report = tmp_path / "report.json"
        code, out, _ = run(capsys, "suite", "--tables", "T:Spa", "--max-n", "4", "--max-q", "2",
                           "--threads", "1", "--report", str(report))
        assert code == 0
        assert "verified=1" in out
        doc = json.loads(report.read_text())
        assert [e["id"] for e in doc["entries"]] == ["T:Spa#1"]
        assert "ms" not in doc["entries"][0]

    def test_json_report_is_reproducible(self, capsys, data_dir):
        argv = ("suite", "--tables", "T:Spa,T7", "--max-n", "4", "--max-q", "2", "--threads", "2", "--json")
        _, first, _ = run(capsys, *argv)
        _, second, _ = run(capsys, *argv)
        assert first == second
        assert all("ms" not in e for e in json.loads(first)["entries"])


class TestQuadrangles:
    def test_build(self, capsys):
        code, out, _ = run(capsys, "gq", "build", "W3", "2")
        assert code == 0
        assert "flags=45 antiflags=180" in out

    def test_verify_dual(self, capsys):
        code, out, _ = run(capsys, "gq", "verify", "Q5minus", "2", "--dual")
        assert code == 0
        assert out.endswith("ok")

    def test_out_of_range(self, capsys):
        assert run(capsys, "gq", "build", "H4", "4")[0] == 4

    def test_check_full_group(self, capsys):
        code, out, _ = run(capsys, "gq", "check", "W3", "2", "--targets", "points,lines", "--primitive")
        assert code == 0
        assert "points=yes lines=yes primitive=yes" in out

    def test_check_recipe(self, capsys):
        code, out, _ = run(capsys, "gq", "check", "W3", "2", "--recipe", "ext-field", "Sp", "2", "4",
                           "--targets", "points,lines")
        assert code == 3
        assert "points=yes lines=no" in out


class TestMisc:
    def test_lnt(self, capsys):
        code, out, _ = run(capsys, "lnt", "--json")
        assert code == 0
        assert json.loads(out) == [[3, 1, 2], [7, 1, 2]]

    def test_lnt_bounds_below_minimum(self, capsys):
        assert run(capsys, "lnt", "--max-p", "5")[0] == 1

    def test_catalog_table(self, capsys):
        code, out, _ = run(capsys, "catalog", "--table", "T:Spa", "--json")
        assert code == 0
        assert [e["recipe"] for e in json.loads(out)][:2] == ["field-extension", "needs-generators"]

    def test_negcheck_rejects_positive_rows(self, capsys):
        assert run(capsys, "negcheck", "T:Spa#1", "--q", "2", "--param", "a=1", "--param", "b=2")[0] == 1

    def test_unknown_search(self, capsys, data_dir):
        assert run(capsys, "search", "nothing")[0] == 1

    def test_search(self, capsys, data_dir):
        code, out, _ = run(capsys, "search", "sylow3_su3_2")
        assert code == 0
        assert out.startswith("sylow3_su3_2:") and out.endswith("|H|=27")

    @pytest.mark.slow
    def test_negcheck(self, capsys):
        code, out, _ = run(capsys, "negcheck", "L:temp#1", "--q", "2")
        assert code == 0
        assert "verified" in out
