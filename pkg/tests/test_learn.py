import io
import json
import sys

import pytest

from modalchar.config import get_fragment_preset
from modalchar.errors import OracleProtocolError
from modalchar.kripke import chain, dumps_model, single_point
from modalchar.learn import (
    MembershipOracle,
    SimulatedOracle,
    StdioOracle,
    answer_queries,
    learn_version_space,
    simulate_oracle,
)
from modalchar.semantics import satisfies
from modalchar.syntax import Atom, Dia, conj, enumerate_formulas, parse_formula

p, q = Atom("p"), Atom("q")


class RecordingOracle(MembershipOracle):
    """Answers from a formula and remembers the queried models."""

    def __init__(self, hidden):
        super().__init__()
        self.hidden = hidden
        self.asked = []
        self.announced = None

    def _answer(self, model):
        self.asked.append(model)
        return satisfies(model, self.hidden)

    def announce(self, formula):
        self.announced = formula


def teach_command(formula, props):
    return [sys.executable, "-m", "modalchar.cli", "teach", "--formula", formula, "--props", props]


class TestLearnVersionSpace:
    """Test the membership-query learner."""

    def test_diamond(self):
        """Test learning <>p among conjunction/diamond formulas."""
        oracle = simulate_oracle(Dia(p))
        fr = get_fragment_preset("conj-diamond", ["p"])
        assert learn_version_space(fr, 1, oracle) == Dia(p)
        assert 1 <= oracle.queries <= 2

    def test_single_candidate_needs_no_queries(self):
        """Test that a one-class fragment is learned without asking."""
        oracle = simulate_oracle(p)
        assert learn_version_space(get_fragment_preset("conj", ["p"]), 0, oracle) == p
        assert oracle.queries == 0

    def test_queries_are_counted(self):
        """Test that each asked model increments the counter."""
        oracle = RecordingOracle(conj(p, q))
        learn_version_space(get_fragment_preset("conj", ["p", "q"]), 0, oracle)
        assert oracle.queries == len(oracle.asked) > 0

    def test_hypothesis_is_announced(self):
        """Test that the oracle receives the final answer."""
        oracle = RecordingOracle(Dia(q))
        result = learn_version_space(get_fragment_preset("conj-diamond", ["p", "q"]), 1, oracle)
        assert oracle.announced == result == Dia(q)

    def test_exact_over_two_atoms(self):
        """Test that every class of depth one is identified."""
        fr = get_fragment_preset("conj-diamond", ["p", "q"])
        for f in enumerate_formulas(fr, 1):
            assert learn_version_space(fr, 1, SimulatedOracle(f)) == f

    def test_grafted_queries(self):
        """Test learning with the loop-grafted query universe."""
        fr = get_fragment_preset("positive", ["p"])
        hidden = parse_formula("[]p")
        oracle = RecordingOracle(hidden)
        assert learn_version_space(fr, 1, oracle, graft_loops=True) == hidden
        assert oracle.queries > 0

    def test_answers_are_consistent_with_result(self):
        """Test that the learned formula agrees with every answer given."""
        hidden = parse_formula("p & <>q")
        oracle = RecordingOracle(hidden)
        result = learn_version_space(get_fragment_preset("conj-diamond", ["p", "q"]), 1, oracle)
        for m in oracle.asked:
            assert satisfies(m, result) == satisfies(m, hidden)


class TestStdioOracle:
    """Test the external oracle protocol."""

    def test_learn_through_subprocess(self):
        """Test learning against the bundled teach command."""
        fr = get_fragment_preset("conj-diamond", ["p", "q"])
        with StdioOracle(teach_command("<>(p & q)", "p,q")) as oracle:
            result = learn_version_space(fr, 1, oracle)
        assert result == Dia(conj(p, q))
        assert oracle.process.returncode == 0

    def test_every_class_through_subprocess(self):
        """Test that each depth-one class over p, q is learned from a teach process."""
        fr = get_fragment_preset("conj-diamond", ["p", "q"])
        for f in enumerate_formulas(fr, 1):
            with StdioOracle(teach_command(f.render(), "p,q")) as oracle:
                assert learn_version_space(fr, 1, oracle) == f
            assert oracle.process.returncode == 0

    def test_missing_command(self):
        """Test that an unstartable oracle is reported."""
        with pytest.raises(OracleProtocolError):
            StdioOracle(["/nonexistent/modalchar-oracle"])

    def test_unexpected_reply(self):
        """Test that replies other than TRUE and FALSE are rejected."""
        script = "import sys; sys.stdin.readline(); print('MAYBE', flush=True)"
        with StdioOracle([sys.executable, "-c", script]) as oracle:
            with pytest.raises(OracleProtocolError):
                oracle.ask(single_point(["p"]))

    def test_string_command_is_split(self):
        """Test shell-style command strings."""
        with StdioOracle(f'"{sys.executable}" -c "pass"') as oracle:
            assert oracle.command[1:] == ["-c", "pass"]


class TestAnswerQueries:
    """Test the answering side of the protocol."""

    def test_answers_until_answer_line(self):
        """Test TRUE/FALSE replies and the closing ANSWER."""
        lines = [
            f"QUERY {dumps_model(chain(1, label=['p']))}",
            f"QUERY {dumps_model(single_point(['p']))}",
            "ANSWER <>p",
            f"QUERY {dumps_model(single_point(['p']))}",
        ]
        stdout = io.StringIO()
        answered = answer_queries(Dia(p), ["p"], io.StringIO("\n".join(lines) + "\n"), stdout)
        assert answered == 2
        assert stdout.getvalue() == "TRUE\nFALSE\n"

    def test_end_of_input(self):
        """Test that the session also ends with the input."""
        stdout = io.StringIO()
        assert answer_queries(p, ["p"], io.StringIO("\n"), stdout) == 0
        assert stdout.getvalue() == ""

    def test_unknown_command(self):
        """Test protocol violations."""
        with pytest.raises(OracleProtocolError):
            answer_queries(p, ["p"], io.StringIO("HELLO\n"), io.StringIO())

    def test_malformed_query(self):
        """Test that query payloads must be JSON."""
        with pytest.raises(OracleProtocolError):
            answer_queries(p, ["p"], io.StringIO("QUERY {\n"), io.StringIO())

    def test_props_are_extended(self):
        """Test that queries without q can be answered for formulas over q."""
        payload = json.dumps({"worlds": ["w0"], "relation": [], "valuation": {"w0": ["p"]}, "point": "w0"})
        stdout = io.StringIO()
        answer_queries(parse_formula("p & ~q"), ["p", "q"], io.StringIO(f"QUERY {payload}\n"), stdout)
        assert stdout.getvalue() == "TRUE\n"
