import numpy as np
import pytest

from rcndl import (
    ArityError,
    ObservationClause,
    ParseError,
    QueryClause,
    RuleClause,
    parse_program,
    render_program,
)
from tests.conftest import CANCER, THREE_VARS


class TestParseProgram:
    def test_three_vars_program(self):
        p = parse_program(THREE_VARS)
        assert len(p.clauses) == 5
        q, r1, r2, o1, o2 = p.clauses
        assert isinstance(q, QueryClause)
        assert q.cliques[0][0].vars == ("A",)
        assert q.cliques[0][1] == (0.3, 0.7)
        assert isinstance(r1, RuleClause)
        assert r1.head.vars == ("A",) and r1.body == "B"
        assert r1.cond == (0.2, 0.4)
        assert r2.body == "C" and r2.cond == (0.8, 0.1)
        assert isinstance(o1, ObservationClause) and o1.vars == ("B",)
        assert o2.vars == ("C",)

    def test_cancer_program_two_variable_head(self):
        p = parse_program(CANCER)
        rule_d = p.clauses[3]
        assert isinstance(rule_d, RuleClause)
        assert rule_d.head.vars == ("B", "C")
        assert rule_d.body == "D"
        assert rule_d.cond == (0.05, 0.8, 0.8, 0.8)

    def test_empty_input(self):
        assert parse_program("").clauses == ()
        assert parse_program("   % only a comment\n").clauses == ()

    def test_comments_and_whitespace_insignificant(self):
        text = "?- A % prior\n : [0.3,\n0.7]. % done\nA->B:[0.2,0.4]."
        p = parse_program(text)
        assert len(p.clauses) == 2

    def test_query_prefix_may_contain_space(self):
        p = parse_program("? - A : [0.3, 0.7].")
        assert isinstance(p.clauses[0], QueryClause)

    def test_multiple_cliques_in_query(self):
        p = parse_program("?- A : [0.5, 0.5]; B, C : [0.1, 0.2, 0.3, 0.4].")
        q = p.clauses[0]
        assert len(q.cliques) == 2
        assert q.cliques[1][0].vars == ("B", "C")

    def test_unknown_sentinel_accepted(self):
        p = parse_program("?- A : [-1.0, 0.7].")
        assert p.clauses[0].cliques[0][1] == (-1.0, 0.7)

    def test_positions_attached(self):
        p = parse_program("\n\n  ?- A : [0.3, 0.7].")
        assert p.clauses[0].pos.line == 3
        assert p.clauses[0].pos.column == 3


class TestParseErrors:
    def test_out_of_range_literal(self):
        with pytest.raises(ParseError):
            parse_program("?- A : [1.5, 0.7].")

    def test_negative_non_sentinel(self):
        with pytest.raises(ParseError):
            parse_program("?- A : [-0.5, 0.7].")

    def test_wrong_list_length_for_rule(self):
        with pytest.raises(ArityError):
            parse_program("?- A : [0.3, 0.7]. A -> B : [0.2, 0.4, 0.5].")

    def test_wrong_list_length_for_query(self):
        with pytest.raises(ArityError):
            parse_program("?- A, B : [0.3, 0.7].")

    def test_multiple_queries_rejected(self):
        with pytest.raises(ParseError):
            parse_program("?- A : [0.3, 0.7]. ?- B : [0.5, 0.5].")

    def test_missing_period(self):
        with pytest.raises(ParseError):
            parse_program("?- A : [0.3, 0.7]")

    def test_stray_character(self):
        with pytest.raises(ParseError) as err:
            parse_program("?- A : [0.3, 0.7]. @")
        assert err.value.line == 1

    def test_error_carries_position(self):
        with pytest.raises(ParseError) as err:
            parse_program("?- A : [0.3,\n 2.0].")
        assert err.value.line == 2

    def test_duplicate_head_variable(self):
        with pytest.raises(Exception):
            parse_program("?- A : [0.3, 0.7]. A, A -> B : [0.1, 0.2, 0.3, 0.4].")

    def test_rule_missing_arrow_or_period(self):
        with pytest.raises(ParseError):
            parse_program("A B.")


class TestRenderProgram:
    def test_round_trip_three_vars(self):
        p = parse_program(THREE_VARS)
        again = parse_program(render_program(p))
        assert _strip_positions(again) == _strip_positions(p)

    def test_round_trip_cancer(self):
        p = parse_program(CANCER)
        again = parse_program(render_program(p))
        assert _strip_positions(again) == _strip_positions(p)

    def test_empty_program_renders_empty(self):
        assert render_program(parse_program("")) == ""

    def test_round_trip_random_programs(self):
        rng = np.random.default_rng(3)
        for _ in range(25):
            n_vars = int(rng.integers(1, 5))
            names = [f"V{i}" for i in range(n_vars)]
            lines = [f"?- {names[0]} : [{rng.uniform():.17g}, "
                     f"{rng.uniform():.17g}]."]
            for i in range(1, n_vars):
                head = names[max(0, i - 2):i]
                conds = ", ".join(
                    f"{rng.uniform():.17g}" for _ in range(2 ** len(head))
                )
                lines.append(f"{', '.join(head)} -> {names[i]} : [{conds}].")
            lines.append(f"{names[-1]}.")
            p = parse_program("\n".join(lines))
            again = parse_program(render_program(p))
            assert _strip_positions(again) == _strip_positions(p)

    def test_full_precision_literals_survive(self):
        p = parse_program("?- A : [0.12345678901234567, 0.87654321098765433].")
        again = parse_program(render_program(p))
        assert again.clauses[0].cliques[0][1] == p.clauses[0].cliques[0][1]


def _strip_positions(program):
    out = []
    for c in program.clauses:
        if isinstance(c, QueryClause):
            out.append(("q", c.cliques))
        elif isinstance(c, RuleClause):
            out.append(("r", c.head.vars, c.body, c.cond))
        else:
            out.append(("o", c.vars))
    return out
