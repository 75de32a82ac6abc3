import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from modalchar.config import get_fragment_preset
from modalchar.errors import FormulaSyntaxError, FragmentError, ResourceLimitExceeded
from modalchar.kripke import enumerate_models
from modalchar.semantics import equivalent, satisfies
from modalchar.syntax import (
    Atom,
    Bot,
    Box,
    Conj,
    Connective,
    Dia,
    Disj,
    NegAtom,
    Polarity,
    Top,
    box,
    conj,
    dia,
    disj,
    enumerate_formula_classes,
    enumerate_formulas,
    in_fragment,
    negate,
    parse_formula,
    parse_fragment,
    render_fragment,
)

p, q, r = Atom("p"), Atom("q"), Atom("r")


def formulas(props=("p", "q")):
    """NNF formulas over props."""
    leaves = st.one_of(
        st.sampled_from(props).map(Atom),
        st.sampled_from(props).map(NegAtom),
        st.just(Top()),
        st.just(Bot()),
    )
    return st.recursive(
        leaves,
        lambda inner: st.one_of(
            st.builds(Dia, inner),
            st.builds(Box, inner),
            st.builds(lambda a, b: conj(a, b), inner, inner),
            st.builds(lambda a, b: disj(a, b), inner, inner),
        ),
        max_leaves=6,
    )


def lattice_over(leaves):
    return st.recursive(
        leaves,
        lambda inner: st.one_of(
            st.builds(lambda a, b: conj(a, b), inner, inner),
            st.builds(lambda a, b: disj(a, b), inner, inner),
        ),
        max_leaves=5,
    )


def positive_depth_one():
    """Formulas of the positive fragment over p with modal depth at most one."""
    flat = lattice_over(st.just(p))
    return lattice_over(st.one_of(flat, st.builds(Dia, flat), st.builds(Box, flat)))


class TestFormula:
    """Test formula construction and metrics."""

    def test_modal_depth(self):
        """Test modal depth of nested modalities."""
        assert p.modal_depth == 0
        assert dia(p, 3).modal_depth == 3
        assert conj(Dia(p), Box(Dia(q))).modal_depth == 2

    def test_variables(self):
        """Test variable sets ignore polarity."""
        assert conj(p, NegAtom("q"), Dia(r)).variables == frozenset({"p", "q", "r"})
        assert Box(Bot()).variables == frozenset()

    def test_conj_flattens_and_deduplicates(self):
        """Test that <>p & <>p collapses to <>p."""
        assert conj(Dia(p), Dia(p)) == Dia(p)
        assert conj(p, conj(q, p)) == conj(p, q)
        assert isinstance(conj(p, q), Conj)

    def test_operand_order_is_canonical(self):
        """Test that operand order does not matter."""
        assert conj(q, p) == conj(p, q)
        assert disj(Dia(p), q, p) == disj(p, disj(q, Dia(p)))

    def test_direct_constructor_rejects_singletons(self):
        """Test that Conj needs two distinct operands."""
        with pytest.raises(ValueError):
            Conj((p, p))

    def test_invalid_atom_name(self):
        """Test that atom names are validated."""
        with pytest.raises(ValueError):
            Atom("P")

    def test_negate_is_dual(self):
        """Test the NNF dual on a mixed formula."""
        f = conj(p, Dia(disj(NegAtom("q"), Top())))
        assert negate(f) == disj(NegAtom("p"), Box(conj(q, Bot())))

    @given(formulas())
    @settings(max_examples=50, deadline=None)
    def test_negate_is_involution(self, f):
        """Test that negating twice gives the formula back."""
        assert negate(negate(f)) == f


class TestParser:
    """Test parsing and printing."""

    def test_parse_precedence(self):
        """Test that & binds tighter than |."""
        assert parse_formula("p & q | r") == disj(conj(p, q), r)
        assert parse_formula("p & (q | r)") == conj(p, disj(q, r))

    def test_parse_modalities(self):
        """Test unary operators."""
        assert parse_formula("<>[]p") == Dia(Box(p))
        assert parse_formula("[]F") == Box(Bot())
        assert parse_formula("<>T & ~p") == conj(Dia(Top()), NegAtom("p"))

    def test_render(self):
        """Test canonical rendering."""
        assert parse_formula("q & p").render() == "p & q"
        assert conj(p, disj(q, r)).render() == "p & (q | r)"
        assert Dia(conj(p, q)).render() == "<>(p & q)"
        assert disj(conj(box(Bot(), 3), dia(Top(), 2)), Box(Bot())).render() == (
            "[]F | <><>T & [][][]F"
        )

    def test_negation_only_before_atoms(self):
        """Test that ~ in front of a compound is rejected."""
        with pytest.raises(FormulaSyntaxError) as exc:
            parse_formula("~(p & q)")
        assert exc.value.position == 1

    def test_unexpected_character(self):
        """Test error position for illegal characters."""
        with pytest.raises(FormulaSyntaxError) as exc:
            parse_formula("p $ q")
        assert exc.value.position == 2

    def test_unbalanced_parenthesis(self):
        """Test missing closing parenthesis."""
        with pytest.raises(FormulaSyntaxError):
            parse_formula("(p & q")

    def test_empty_input(self):
        """Test that empty text is rejected."""
        with pytest.raises(FormulaSyntaxError):
            parse_formula("   ")

    @given(formulas())
    @settings(max_examples=100, deadline=None)
    def test_printed_text_parses_back(self, f):
        """Test that rendering produces parseable text for the same formula."""
        assert parse_formula(f.render()) == f


class TestFragment:
    """Test fragments and membership."""

    def test_parse_fragment(self):
        """Test fragment notation parsing."""
        fr = parse_fragment("pos:&,|,<>,[]", ["q", "p"])
        assert fr.polarity is Polarity.POSITIVE
        assert fr.connectives == {Connective.AND, Connective.OR, Connective.DIA, Connective.BOX}
        assert fr.props == ("p", "q")
        assert render_fragment(fr) == "pos:&,|,<>,[]"

    def test_parse_fragment_errors(self):
        """Test bad prefixes and tokens."""
        with pytest.raises(FragmentError):
            parse_fragment("&,|", ["p"])
        with pytest.raises(FragmentError):
            parse_fragment("sometimes:&", ["p"])
        with pytest.raises(FragmentError):
            parse_fragment("pos:&,->", ["p"])

    def test_membership_by_polarity(self):
        """Test literal polarity checks."""
        positive = get_fragment_preset("positive", ["p"])
        negative = get_fragment_preset("negative", ["p"])
        assert in_fragment(Dia(p), positive)
        assert not in_fragment(NegAtom("p"), positive)
        assert in_fragment(Box(NegAtom("p")), negative)
        assert not in_fragment(p, negative)

    def test_membership_by_connective(self):
        """Test that T, F and modalities need their connective."""
        fr = get_fragment_preset("conj-diamond", ["p", "q"])
        assert conj(p, Dia(q)) in fr
        assert Box(p) not in fr
        assert disj(p, q) not in fr
        assert Dia(Top()) not in fr
        assert Box(Bot()) in get_fragment_preset("positive-bot", ["p"])

    def test_membership_by_props(self):
        """Test that unknown propositions are outside."""
        fr = get_fragment_preset("positive", ["p"])
        assert q not in fr


class TestEnumeration:
    """Test enumeration of formulas modulo equivalence."""

    def test_conj_diamond_depth_one(self):
        """Test the three classes p, <>p, p & <>p."""
        fr = get_fragment_preset("conj-diamond", ["p"])
        assert enumerate_formulas(fr, 1) == [p, Dia(p), conj(p, Dia(p))]

    def test_conjunctions_of_three_atoms(self):
        """Test that only & gives the seven non-empty conjunctions."""
        fr = get_fragment_preset("conj", ["p", "q", "r"])
        assert len(enumerate_formulas(fr, 0)) == 7

    def test_free_distributive_lattice(self):
        """Test the 18 positive boolean functions of three atoms."""
        fr = parse_fragment("pos:&,|", ["p", "q", "r"])
        result = enumerate_formulas(fr, 0)
        assert len(result) == 18
        assert disj(conj(p, q), r) in result

    def test_full_language_over_one_atom(self):
        """Test the four boolean functions of p."""
        fr = get_fragment_preset("full", ["p"])
        result = enumerate_formulas(fr, 0)
        assert set(result) == {Top(), Bot(), p, NegAtom("p")}

    def test_full_language_without_atoms(self):
        """Test depth-one classes over the empty proposition set."""
        fr = get_fragment_preset("full", [])
        result = enumerate_formulas(fr, 1)
        assert set(result) == {Top(), Bot(), Dia(Top()), Box(Bot())}

    def test_output_order(self):
        """Test canonical order: shallower first, then smaller."""
        fr = get_fragment_preset("positive", ["p"])
        result = enumerate_formulas(fr, 1)
        depths = [f.modal_depth for f in result]
        assert depths == sorted(depths)
        assert result[0] == p

    def test_classes_are_pairwise_inequivalent(self):
        """Test that representatives are distinct up to equivalence."""
        fr = get_fragment_preset("positive", ["p"])
        result = enumerate_formulas(fr, 1)
        for i, f in enumerate(result):
            assert f in fr
            for g in result[i + 1 :]:
                assert not equivalent(f, g, ["p"])

    def test_vectors_match_satisfaction(self):
        """Test that truth vectors record satisfaction on the universe."""
        fr = get_fragment_preset("positive", ["p"])
        universe = enumerate_models(["p"], 1)
        for f, vector in enumerate_formula_classes(fr, 1, universe):
            for i, m in enumerate(universe):
                assert bool((vector >> i) & 1) == satisfies(m, f)

    def test_positive_formulas_hold_at_full_loop(self):
        """Test that every positive formula holds at the full-valuation loop."""
        from modalchar.kripke import reflexive_point

        fr = get_fragment_preset("positive", ["p"])
        loop = reflexive_point(["p"])
        assert all(satisfies(loop, f) for f in enumerate_formulas(fr, 1))

    def test_budget(self):
        """Test that the class budget is enforced."""
        fr = parse_fragment("pos:&,|", ["p", "q", "r"])
        with pytest.raises(ResourceLimitExceeded):
            enumerate_formulas(fr, 0, max_formulas=5)

    def test_positive_lattice_over_two_atoms(self):
        """Test the four classes p, q, p & q, p | q."""
        fr = parse_fragment("pos:&,|", ["p", "q"])
        assert set(enumerate_formulas(fr, 0)) == {p, q, conj(p, q), disj(p, q)}

    def test_no_atoms_and_no_constants(self):
        """Test that a fragment without atoms or constants has no members."""
        fr = parse_fragment("pos:&,|,<>,[]", [])
        assert enumerate_formulas(fr, 2) == []

    @settings(max_examples=200, deadline=None)
    @given(f=positive_depth_one())
    def test_every_member_has_one_class(self, f):
        """Test that each positive formula of depth one matches exactly one representative."""
        fr = get_fragment_preset("positive", ["p"])
        assert f in fr
        universe = enumerate_models(["p"], 1)
        vector = sum(1 << i for i, m in enumerate(universe) if satisfies(m, f))
        classes = enumerate_formula_classes(fr, 1, universe)
        assert [v for _, v in classes].count(vector) == 1
