import json
import math
from itertools import combinations

import pytest

from modalchar.errors import ModelError, ResourceLimitExceeded
from modalchar.kripke import (
    ExampleSet,
    KripkeModel,
    PointedModel,
    chain,
    count_models,
    enumerate_models,
    height,
    load_example_set,
    load_model,
    model_from_dict,
    model_to_dict,
    reflexive_point,
    save_example_set,
    single_point,
    truncate,
)
from modalchar.semantics import satisfies
from modalchar.simulation import bisimilar
from modalchar.syntax import Top, dia


def two_cycle(label=()):
    model = KripkeModel.build(
        ["a", "b"], [("a", "b"), ("b", "a")], {"a": label, "b": label}, props=label
    )
    return PointedModel(model, "a")


class TestKripkeModel:
    """Test model construction and validation."""

    def test_single_point(self):
        """Test the one-world model without successors."""
        m = single_point(["p", "q"])
        assert m.model.worlds == ("w0",)
        assert m.model.relation == frozenset()
        assert m.model.label("w0") == frozenset({"p", "q"})
        assert m.props == frozenset({"p", "q"})

    def test_reflexive_point(self):
        """Test the one-world loop."""
        m = reflexive_point([], props=["p"])
        assert m.model.successors("w0") == ("w0",)
        assert m.model.label("w0") == frozenset()
        assert m.props == frozenset({"p"})

    def test_edge_outside_worlds(self):
        """Test that dangling edges are rejected."""
        with pytest.raises(ModelError):
            KripkeModel.build(["a"], [("a", "b")], {"a": []})

    def test_label_outside_props(self):
        """Test that labels must stay inside the ambient set."""
        with pytest.raises(ModelError):
            KripkeModel.build(["a"], [], {"a": ["p"]}, props=["q"])

    def test_point_must_be_a_world(self):
        """Test the point invariant."""
        model = KripkeModel.build(["a"], [], {"a": []})
        with pytest.raises(ModelError):
            PointedModel(model, "b")

    def test_to_graph(self):
        """Test the networkx view."""
        graph = chain(2).model.to_graph()
        assert set(graph.edges) == {("w0", "w1"), ("w1", "w2")}
        assert graph.nodes["w0"]["label"] == frozenset()


class TestHeight:
    """Test height computation."""

    def test_deadlock(self):
        """Test that a single point has height 0."""
        assert height(single_point([])) == 0

    def test_chain(self):
        """Test chains of several lengths."""
        assert height(chain(1)) == 1
        assert height(chain(4)) == 4

    def test_loop(self):
        """Test that reachable cycles give infinity."""
        assert height(reflexive_point([])) == math.inf
        assert height(two_cycle()) == math.inf

    def test_unreachable_cycle_is_ignored(self):
        """Test that only the part below the point counts."""
        model = KripkeModel.build(
            ["a", "b", "c"], [("a", "b"), ("c", "c")], {"a": [], "b": [], "c": []}
        )
        assert height(PointedModel(model, "a")) == 1


class TestTruncate:
    """Test unraveling and cutting."""

    def test_loop_becomes_chain(self):
        """Test truncate of the loop at depth 2."""
        result = truncate(reflexive_point([]), 2)
        assert height(result) == 2
        assert len(result.model.worlds) == 3
        assert all(label == frozenset() for _, label in result.model.valuation)

    def test_point_is_unchanged(self):
        """Test that a depth-0 tree survives truncation."""
        result = truncate(single_point(["p"]), 5)
        assert bisimilar(result, single_point(["p"])) is not None

    def test_diamond_chain_matches_height(self):
        """Test that the cut model satisfies <>^d T iff the height is at least d."""
        for m in (single_point([]), chain(1), chain(3), reflexive_point([]), two_cycle()):
            for d in range(4):
                cut = truncate(m, d)
                assert satisfies(cut, dia(Top(), d)) == (height(m) >= d)

    def test_world_budget(self):
        """Test the unraveling budget."""
        with pytest.raises(ResourceLimitExceeded):
            truncate(reflexive_point([]), 50, max_worlds=10)


class TestEnumerateModels:
    """Test bounded universes."""

    def test_depth_zero(self):
        """Test the two valuations over one atom."""
        models = enumerate_models(["p"], 0)
        assert len(models) == 2
        assert {m.model.label("w0") for m in models} == {frozenset(), frozenset({"p"})}

    def test_depth_one_counts(self):
        """Test plain counts at depth 1."""
        assert len(enumerate_models(["p"], 1)) == 8
        assert len(enumerate_models(["p", "q"], 1)) == 64

    def test_grafted_depth_zero(self):
        """Test that both loops are available."""
        models = enumerate_models(["p"], 0, graft_loops=True)
        assert len(models) == 8
        loops = [reflexive_point([], ["p"]), reflexive_point(["p"], ["p"])]
        for loop in loops:
            assert any(bisimilar(m, loop) for m in models)

    def test_grafted_depth_one_count(self):
        """Test the grafted count at depth 1."""
        assert len(enumerate_models(["p"], 1, graft_loops=True)) == 512

    def test_pairwise_non_bisimilar(self):
        """Test that no two universe models are bisimilar."""
        for universe in (enumerate_models(["p"], 1), enumerate_models(["p"], 0, True)):
            for a, b in combinations(universe, 2):
                assert bisimilar(a, b) is None

    def test_deterministic_order(self):
        """Test that repeated calls give the same sequence."""
        assert enumerate_models(["p"], 1) == enumerate_models(["p"], 1)

    def test_count_models(self):
        """Test counts without enumeration."""
        assert count_models(["p"], 0) == 2
        assert count_models(["p"], 1) == 8
        assert count_models(["p"], 0, graft_loops=True) == 8
        assert count_models(["p"], 1, graft_loops=True) == 512
        assert count_models(["p", "q"], 1, graft_loops=True) == 262144
        assert count_models([], 0, graft_loops=True) == 2

    def test_count_models_is_capped(self):
        """Test that huge universes are reported as cap + 1."""
        assert count_models(["p"], 2, graft_loops=True, cap=1000) == 1001
        assert count_models(["p", "q"], 5, cap=10**6) == 10**6 + 1

    def test_budget_fails_fast(self):
        """Test that oversized universes raise before enumerating."""
        with pytest.raises(ResourceLimitExceeded):
            enumerate_models(["p"], 2, graft_loops=True)
        with pytest.raises(ResourceLimitExceeded):
            enumerate_models(["p"], 1, max_models=5)


class TestSerialization:
    """Test the JSON formats."""

    def test_model_to_dict(self):
        """Test the canonical model object."""
        m = chain(1, label=["p"])
        assert model_to_dict(m) == {
            "worlds": ["w0", "w1"],
            "relation": [["w0", "w1"]],
            "valuation": {"w0": ["p"], "w1": ["p"]},
            "point": "w0",
        }

    def test_props_key_when_unused(self):
        """Test that unused ambient propositions are kept in the file."""
        data = model_to_dict(reflexive_point([], props=["p"]))
        assert data["props"] == ["p"]
        assert model_from_dict(data).props == frozenset({"p"})

    def test_load_model(self, tmp_path):
        """Test reading a model file."""
        path = tmp_path / "m.json"
        path.write_text(
            '{"worlds":["w0","w1"],"relation":[["w0","w1"]],'
            '"valuation":{"w0":["p"],"w1":[]},"point":"w0"}'
        )
        m = load_model(path, ["q"])
        assert m.point == "w0"
        assert m.props == frozenset({"p", "q"})
        assert m.model.successors("w0") == ("w1",)

    def test_load_model_errors(self, tmp_path):
        """Test missing keys, bad JSON and missing files."""
        bad = tmp_path / "bad.json"
        bad.write_text('{"worlds": ["w0"]}')
        with pytest.raises(ModelError):
            load_model(bad)
        broken = tmp_path / "broken.json"
        broken.write_text("{")
        with pytest.raises(ModelError):
            load_model(broken)
        with pytest.raises(ModelError):
            load_model(tmp_path / "missing.json")

    def test_labels_must_be_lists(self):
        """Test that a string label is not split into propositions."""
        data = {"worlds": ["w0"], "relation": [], "valuation": {"w0": "pq"}, "point": "w0"}
        with pytest.raises(ModelError):
            model_from_dict(data)
        with pytest.raises(ModelError):
            model_from_dict({**data, "valuation": [["w0", ["p"]]]})
        assert model_from_dict({**data, "valuation": {"w0": ["p", "q"]}}).props == frozenset({"p", "q"})

    def test_example_set_file(self, tmp_path):
        """Test saving and loading an example set."""
        e = ExampleSet(("p", "q"), (single_point(["p", "q"]),), (single_point(["p"]),))
        path = tmp_path / "e.json"
        save_example_set(e, path)
        data = json.loads(path.read_text())
        assert data["props"] == ["p", "q"]
        assert "props" not in data["negative"][0]
        assert load_example_set(path) == e

    def test_example_set_rejects_foreign_props(self):
        """Test that examples must stay inside the declared props."""
        with pytest.raises(ModelError):
            ExampleSet(("p",), (single_point(["q"]),), ())

    def test_example_set_normalizes_props(self):
        """Test that every example ranges over the set's props."""
        e = ExampleSet(("p", "q"), (single_point(["p"]),), ())
        assert e.positive[0].props == frozenset({"p", "q"})
