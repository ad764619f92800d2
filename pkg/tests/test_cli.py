import json

import pytest

from rcndl import ConditionalConstraint, MarginalConstraint, ParseError, parse_evidence
from rcndl.cli import main
from tests.conftest import CANCER, THREE_VARS


class TestEvidenceGrammar:
    def test_marginal_line(self):
        (c,) = parse_evidence("P(C) = 0.95")
        assert isinstance(c, MarginalConstraint)
        assert c.scope.vars == ("C",)
        assert c.targets == pytest.approx((0.05, 0.95))
        assert c.threshold is None

    def test_bayesian_shorthand(self):
        cs = parse_evidence("D = false\nE = TRUE")
        assert cs[0].targets == (1.0, 0.0)
        assert cs[1].targets == (0.0, 1.0)
        assert all(c.is_bayesian for c in cs)

    def test_conditional_with_negation(self):
        (c,) = parse_evidence("P(X | Y, !Z) = 0.7")
        assert isinstance(c, ConditionalConstraint)
        assert c.target == "X"
        assert c.condition == (("Y", True), ("Z", False))
        assert c.prob == 0.7

    def test_threshold_suffix(self):
        (c,) = parse_evidence("P(C) = 0.95 threshold 0.0001")
        assert c.threshold == 0.0001

    def test_comments_and_blank_lines(self):
        cs = parse_evidence("# a comment\n\nP(C) = 0.95  # trailing\n")
        assert len(cs) == 1

    def test_order_preserved(self):
        cs = parse_evidence("P(B) = 0.33\nP(C) = 0.95")
        assert cs[0].scope.vars == ("B",)
        assert cs[1].scope.vars == ("C",)

    def test_bad_line_rejected_with_position(self):
        with pytest.raises(ParseError) as err:
            parse_evidence("P(C) = 0.95\nP(C = oops")
        assert err.value.line == 2

    def test_out_of_range_probability(self):
        with pytest.raises(ParseError):
            parse_evidence("P(C) = 1.5")


@pytest.fixture
def model_file(tmp_path):
    p = tmp_path / "model.rcndl"
    p.write_text(THREE_VARS)
    return str(p)


@pytest.fixture
def cancer_file(tmp_path):
    p = tmp_path / "cancer.rcndl"
    p.write_text(CANCER)
    return str(p)


def evidence_file(tmp_path, text):
    p = tmp_path / "evidence.txt"
    p.write_text(text)
    return str(p)


class TestCheckCommand:
    def test_intermediate_form(self, model_file, capsys):
        assert main(["check", model_file]) == 0
        out = capsys.readouterr().out
        assert "A -> B : [0.240000, 0.060000, 0.420000, 0.280000]." in out
        assert "A -> C : [0.060000, 0.240000, 0.630000, 0.070000]." in out
        assert "B : [0.660000, 0.340000]." in out
        assert "C : [0.690000, 0.310000]." in out

    def test_single_query_model(self, tmp_path, capsys):
        p = tmp_path / "one.rcndl"
        p.write_text("?- A : [0.25, 0.75].\n")
        assert main(["check", str(p)]) == 0
        assert capsys.readouterr().out == "?- A : [0.250000, 0.750000].\n"

    def test_parse_error_exit_code(self, tmp_path, capsys):
        p = tmp_path / "bad.rcndl"
        p.write_text("?- A : [0.3, 0.7]")
        assert main(["check", str(p)]) == 1
        assert "error" in capsys.readouterr().err

    def test_missing_file(self, capsys):
        assert main(["check", "/nonexistent/model.rcndl"]) == 1


class TestRunCommand:
    def test_converged_run(self, model_file, tmp_path, capsys):
        ev = evidence_file(tmp_path, "P(B) = 0.33\nP(C) = 0.95")
        code = main(["run", model_file, ev, "--threshold", "0.001"])
        out = capsys.readouterr().out
        assert code == 0
        assert "P(A) = 0.274341" in out
        assert "converged after 2 pass(es)" in out

    def test_empty_evidence_reports_priors(self, model_file, tmp_path, capsys):
        ev = evidence_file(tmp_path, "# nothing\n")
        assert main(["run", model_file, ev]) == 0
        out = capsys.readouterr().out
        assert "converged after 0 pass(es)" in out
        assert "P(A) = 0.700000" in out

    def test_cancer_bayesian(self, cancer_file, tmp_path, capsys):
        ev = evidence_file(tmp_path, "D = false\nE = true")
        assert main(["run", cancer_file, ev]) == 0
        out = capsys.readouterr().out
        assert "converged after 1 pass(es)" in out
        assert "P(A) = 0.097276" in out

    def test_nonconvergence_exit_code(self, model_file, tmp_path, capsys):
        ev = evidence_file(tmp_path, "P(B) = 0.33\nP(C) = 0.95")
        code = main(["run", model_file, ev,
                     "--threshold", "0", "--max-passes", "2"])
        assert code == 2
        assert "did not converge" in capsys.readouterr().out

    def test_infeasible_evidence_exit_code(self, tmp_path, capsys):
        p = tmp_path / "zero.rcndl"
        p.write_text("?- A : [1.0, 0.0]. A -> B : [0.0, 1.0]. B.")
        ev = evidence_file(tmp_path, "B = true")
        assert main(["run", str(p), ev]) == 1
        assert "error" in capsys.readouterr().err

    def test_trace_flag(self, model_file, tmp_path, capsys):
        ev = evidence_file(tmp_path, "P(C) = 0.95")
        main(["run", model_file, ev, "--trace"])
        out = capsys.readouterr().out
        assert "pass 1: use P(C)=0.95" in out

    def test_dump_intermediate_flag(self, model_file, tmp_path, capsys):
        ev = evidence_file(tmp_path, "P(C) = 0.95")
        main(["run", model_file, ev, "--dump-intermediate"])
        out = capsys.readouterr().out
        assert "A -> B : [0.240000, 0.060000, 0.420000, 0.280000]." in out

    def test_program_order_flag(self, model_file, tmp_path, capsys):
        ev = evidence_file(tmp_path, "P(B) = 0.33\nP(C) = 0.95")
        main(["run", model_file, ev, "--order", "program-order", "--trace",
              "--max-passes", "1", "--threshold", "0"])
        out = capsys.readouterr().out
        assert out.index("P(B)=0.33") < out.index("P(C)=0.95")

    def test_json_output_contains_every_number(self, model_file, tmp_path,
                                               capsys):
        ev = evidence_file(tmp_path, "P(B) = 0.33\nP(C) = 0.95")
        code = main(["run", model_file, ev, "--threshold", "0.001", "--json"])
        assert code == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["converged"] is True
        assert payload["passes"] == 2
        assert payload["posteriors"]["A"] == pytest.approx(0.2743407, abs=1e-6)
        assert set(payload["posteriors"]) == {"A", "B", "C"}
        assert len(payload["steps"]) == 4
        assert payload["final_gradients"]["P(C)=0.95"] == pytest.approx(
            1.37e-5, abs=1e-6
        )


class TestOracleCommand:
    def test_comparison_report(self, model_file, tmp_path, capsys):
        ev = evidence_file(tmp_path, "P(B) = 0.33\nP(C) = 0.95")
        code = main(["oracle", model_file, ev, "--threshold", "0.001"])
        out = capsys.readouterr().out
        assert code == 0
        assert "scheduler" in out and "oracle" in out
        line = next(l for l in out.splitlines() if l.startswith("A"))
        fields = line.split()
        assert float(fields[1]) == pytest.approx(0.274341, abs=1e-6)
        assert float(fields[2]) == pytest.approx(0.274332, abs=1e-6)

    def test_empty_evidence_identical(self, model_file, tmp_path, capsys):
        ev = evidence_file(tmp_path, "")
        assert main(["oracle", model_file, ev, "--json"]) == 0
        payload = json.loads(capsys.readouterr().out)
        for v, d in payload["differences"].items():
            assert d <= 1e-12

    def test_json_sides_match_text(self, cancer_file, tmp_path, capsys):
        ev = evidence_file(tmp_path, "P(D) = 0.75\nP(E) = 0.10")
        assert main(["oracle", cancer_file, ev, "--json",
                     "--threshold", "1e-9"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["posteriors"]["A"] == pytest.approx(0.336010, abs=1e-5)
        assert payload["oracle"]["A"] == pytest.approx(0.336010, abs=1e-5)


class TestVersionFlag:
    def test_version(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["--version"])
        assert exc.value.code == 0
