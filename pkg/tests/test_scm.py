"""Model construction, evaluation, abduction, intervention, counterfactuals."""

from fractions import Fraction as F
from itertools import product

import pytest

import multiagent_recourse as mr

# Inline payoff lookup for the classic matrix, used as an independent check
# against the model's equations: (own action, other action) -> own payoff.
PAYOFF = {(0, 1): F(1), (1, 1): F("3.5"), (0, 0): F(5), (1, 0): F(10)}


def chain_scm():
    # u -> m -> h, all binary, identity equations
    return mr.Scm(
        (
            mr.VariableDecl("u", mr.EXOGENOUS, (0, 1)),
            mr.VariableDecl("m", mr.ENDOGENOUS, (0, 1)),
            mr.VariableDecl("h", mr.ENDOGENOUS, (0, 1)),
        ),
        (
            mr.StructuralEquation("m", ("u",), {(F(0),): F(0), (F(1),): F(1)}),
            mr.StructuralEquation("h", ("m",), {(F(0),): F(0), (F(1),): F(1)}),
        ),
    )


def constant_scm():
    # h1 is 5 regardless of x1, so observing h1 alone cannot pin x1
    return mr.Scm(
        (
            mr.VariableDecl("x1", mr.EXOGENOUS, (0, 1)),
            mr.VariableDecl("h1", mr.ENDOGENOUS, (5,)),
        ),
        (mr.StructuralEquation("h1", ("x1",), {(F(0),): F(5), (F(1),): F(5)}),),
    )


class TestBuild:
    def test_pd_shape(self, pd1):
        assert len(pd1.variables) == 4
        assert len(pd1.equations) == 2
        assert pd1.exogenous_names == ("x1", "x2")
        assert pd1.endogenous_names == ("h1", "h2")

    def test_build_from_dict(self):
        data = {
            "variables": [
                {"name": "x1", "kind": "exogenous", "domain": [0, 1]},
                {"name": "h1", "kind": "endogenous", "domain": [0, 1]},
            ],
            "equations": [
                {
                    "target": "h1",
                    "parents": ["x1"],
                    "table": [{"in": [0], "out": 1}, {"in": [1], "out": 0}],
                }
            ],
        }
        scm = mr.scm_from_dict(data)
        assert scm.evaluate({"x1": 0}) == {"x1": F(0), "h1": F(1)}

    def test_self_loop_is_a_cycle(self):
        with pytest.raises(mr.CycleError):
            mr.Scm(
                (mr.VariableDecl("h1", mr.ENDOGENOUS, (0, 1)),),
                (mr.StructuralEquation("h1", ("h1",), {(F(0),): F(0), (F(1),): F(1)}),),
            )

    def test_two_node_cycle(self):
        with pytest.raises(mr.CycleError):
            mr.Scm(
                (
                    mr.VariableDecl("a", mr.ENDOGENOUS, (0, 1)),
                    mr.VariableDecl("b", mr.ENDOGENOUS, (0, 1)),
                ),
                (
                    mr.StructuralEquation("a", ("b",), {(F(0),): F(0), (F(1),): F(1)}),
                    mr.StructuralEquation("b", ("a",), {(F(0),): F(0), (F(1),): F(1)}),
                ),
            )

    def test_missing_table_row(self):
        with pytest.raises(mr.IncompleteTableError):
            mr.Scm(
                (
                    mr.VariableDecl("x1", mr.EXOGENOUS, (0, 1)),
                    mr.VariableDecl("x2", mr.EXOGENOUS, (0, 1)),
                    mr.VariableDecl("h1", mr.ENDOGENOUS, (1, F("3.5"), 5, 10)),
                ),
                (
                    mr.StructuralEquation(
                        "h1",
                        ("x1", "x2"),
                        {  # (x_i=1, x_j=1) row left out
                            (F(0), F(1)): F(1),
                            (F(0), F(0)): F(5),
                            (F(1), F(0)): F(10),
                        },
                    ),
                ),
            )

    def test_duplicate_equation(self):
        eq = mr.StructuralEquation("h1", (), {(): F(0)})
        with pytest.raises(mr.DuplicateEquationError):
            mr.Scm((mr.VariableDecl("h1", mr.ENDOGENOUS, (0, 1)),), (eq, eq))

    def test_out_of_domain_table_output(self):
        with pytest.raises(mr.DomainError):
            mr.Scm(
                (mr.VariableDecl("h1", mr.ENDOGENOUS, (0, 1)),),
                (mr.StructuralEquation("h1", (), {(): F(7)}),),
            )

    def test_stray_table_row(self):
        with pytest.raises(mr.DomainError):
            mr.Scm(
                (
                    mr.VariableDecl("x1", mr.EXOGENOUS, (0, 1)),
                    mr.VariableDecl("h1", mr.ENDOGENOUS, (0, 1)),
                ),
                (
                    mr.StructuralEquation(
                        "h1", ("x1",), {(F(0),): F(0), (F(1),): F(1), (F(2),): F(0)}
                    ),
                ),
            )

    def test_unknown_parent(self):
        with pytest.raises(mr.DomainError):
            mr.Scm(
                (mr.VariableDecl("h1", mr.ENDOGENOUS, (0, 1)),),
                (mr.StructuralEquation("h1", ("ghost",), {(F(0),): F(0)}),),
            )

    def test_exogenous_with_equation(self):
        with pytest.raises(mr.ScmValidationError):
            mr.Scm(
                (mr.VariableDecl("x1", mr.EXOGENOUS, (0, 1)),),
                (mr.StructuralEquation("x1", (), {(): F(0)}),),
            )

    def test_endogenous_without_equation(self):
        with pytest.raises(mr.ScmValidationError):
            mr.Scm((mr.VariableDecl("h1", mr.ENDOGENOUS, (0, 1)),), ())

    def test_duplicate_variable_name(self):
        with pytest.raises(mr.ScmValidationError):
            mr.Scm(
                (
                    mr.VariableDecl("x1", mr.EXOGENOUS, (0, 1)),
                    mr.VariableDecl("x1", mr.EXOGENOUS, (0, 1)),
                ),
                (),
            )

    def test_empty_and_repeated_domain(self):
        with pytest.raises(mr.ScmValidationError):
            mr.Scm((mr.VariableDecl("x1", mr.EXOGENOUS, ()),), ())
        with pytest.raises(mr.ScmValidationError):
            mr.Scm((mr.VariableDecl("x1", mr.EXOGENOUS, (1, 1)),), ())


class TestEvaluate:
    @pytest.mark.parametrize(
        "x1,x2",
        [(0, 1), (1, 1), (0, 0), (1, 0)],
    )
    def test_pd_matches_payoff_table(self, pd1, x1, x2):
        state = pd1.evaluate({"x1": x1, "x2": x2})
        assert state["h1"] == PAYOFF[(x1, x2)]
        assert state["h2"] == PAYOFF[(x2, x1)]

    def test_missing_exogenous(self, pd1):
        with pytest.raises(mr.MissingExogenousError):
            pd1.evaluate({"x1": 0})

    def test_rejects_endogenous_input(self, pd1):
        with pytest.raises(mr.DomainError):
            pd1.evaluate({"x1": 0, "x2": 1, "h1": 1})

    def test_rejects_out_of_domain(self, pd1):
        with pytest.raises(mr.DomainError):
            pd1.evaluate({"x1": 2, "x2": 0})

    def test_rejects_unknown_variable(self, pd1):
        with pytest.raises(mr.DomainError):
            pd1.evaluate({"x1": 0, "x2": 0, "zz": 1})


class TestAbduct:
    def test_unique_from_payoffs(self, pd1):
        # Independent derivation: enumerate the four exogenous assignments
        # against the inline payoff lookup and keep the consistent one.
        consistent = [
            (a, b)
            for a, b in product((0, 1), repeat=2)
            if PAYOFF[(a, b)] == F(1) and PAYOFF[(b, a)] == F(10)
        ]
        assert consistent == [(0, 1)]
        state = pd1.abduct({"h1": 1, "h2": 10})
        assert state == {"x1": F(0), "x2": F(1), "h1": F(1), "h2": F(10)}

    def test_full_exogenous_observation(self, pd1):
        state = pd1.abduct({"x1": 1, "x2": 0})
        assert state == pd1.evaluate({"x1": 1, "x2": 0})
        assert state["h1"] == F(10) and state["h2"] == F(1)

    def test_constant_equation_not_invertible(self):
        with pytest.raises(mr.NonInvertibleError):
            constant_scm().abduct({"h1": 5})

    def test_impossible_observation(self, pd1):
        with pytest.raises(mr.NonInvertibleError):
            pd1.abduct({"h1": 1, "h2": 1})


class TestIntervene:
    def test_pin_exogenous(self, pd1):
        pinned = pd1.intervene({"x1": 1})
        assert pinned.exogenous_names == ("x2",)
        assert pinned.graph().in_degree("x1") == 0
        state = pinned.evaluate({"x2": 1})
        assert state == {"x1": F(1), "x2": F(1), "h1": F("3.5"), "h2": F("3.5")}
        # graph otherwise unchanged
        assert set(pinned.graph().edges) == set(pd1.graph().edges)

    def test_chain_edge_removed(self):
        scm = chain_scm()
        pinned = scm.intervene({"m": 1})
        assert ("u", "m") not in pinned.graph().edges
        assert ("m", "h") in pinned.graph().edges
        assert pinned.graph().in_degree("m") == 0
        for u in (0, 1):
            state = pinned.evaluate({"u": u})
            assert state["m"] == F(1) and state["h"] == F(1)

    def test_empty_intervention_is_identity(self, pd1):
        assert pd1.intervene({}) is pd1

    def test_pin_endogenous(self, pd1):
        pinned = pd1.intervene({"h1": 5})
        state = pinned.evaluate({"x1": 1, "x2": 1})
        assert state["h1"] == F(5)
        assert state["h2"] == F("3.5")

    def test_out_of_domain_pin(self, pd1):
        with pytest.raises(mr.DomainError):
            pd1.intervene({"x1": 3})


class TestCounterfactual:
    def test_flip_from_silent(self, pd1):
        state = pd1.counterfactual({"x1": 0, "x2": 1}, {"x1": 1})
        assert state == {"x1": F(1), "x2": F(1), "h1": F("3.5"), "h2": F("3.5")}

    def test_empty_action_returns_completed_factual(self, pd1):
        state = pd1.counterfactual({"x1": 0, "x2": 1}, {})
        assert state == pd1.evaluate({"x1": 0, "x2": 1})

    def test_flip_from_mutual_silence(self, pd1):
        state = pd1.counterfactual({"x1": 0, "x2": 0}, {"x1": 1})
        assert state["h1"] == F(10) and state["h2"] == F(1)

    def test_propagates_non_invertible(self):
        with pytest.raises(mr.NonInvertibleError):
            constant_scm().counterfactual({"h1": 5}, {"x1": 1})


class TestGraph:
    def test_pd_nodes_and_edges(self, pd1):
        graph = pd1.graph()
        assert set(graph.nodes) == {"x1", "x2", "h1", "h2"}
        assert set(graph.edges) == {
            ("x1", "h1"),
            ("x1", "h2"),
            ("x2", "h1"),
            ("x2", "h2"),
        }

    def test_no_endogenous_variables(self):
        scm = mr.Scm((mr.VariableDecl("x1", mr.EXOGENOUS, (0, 1)),), ())
        graph = scm.graph()
        assert graph.nodes == ("x1",)
        assert graph.edges == ()

    def test_dot_deterministic_and_sorted(self, pd1):
        dot = mr.graph_to_dot(pd1.graph())
        assert dot == mr.graph_to_dot(pd1.graph())
        assert dot == (
            "digraph causal_model {\n"
            '    "h1";\n'
            '    "h2";\n'
            '    "x1";\n'
            '    "x2";\n'
            '    "x1" -> "h1";\n'
            '    "x1" -> "h2";\n'
            '    "x2" -> "h1";\n'
            '    "x2" -> "h2";\n'
            "}\n"
        )


class TestFiles:
    def test_round_trip(self, pd1):
        data = mr.scm_to_dict(pd1)
        again = mr.scm_from_dict(data)
        assert again == pd1

    def test_load_scm(self, tmp_path, pd1):
        import json

        path = tmp_path / "model.json"
        path.write_text(json.dumps(mr.scm_to_dict(pd1)))
        assert mr.load_scm(path) == pd1

    def test_malformed_json_reports_line(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text('{\n  "variables": [,]\n}')
        with pytest.raises(mr.ParseError, match="line 2"):
            mr.load_scm(path)

    def test_unknown_field_rejected(self):
        with pytest.raises(mr.ParseError):
            mr.scm_from_dict({"variables": [], "equations": [], "bogus": 1})

    def test_fractional_values_survive(self, pd1):
        data = mr.scm_to_dict(pd1)
        h1 = next(e for e in data["equations"] if e["target"] == "h1")
        outs = {row["out"] for row in h1["table"]}
        assert "3.5" in outs  # exact decimal text, not a float


def test_pure_functions_are_repeatable(pd1):
    for _ in range(2):
        assert pd1.evaluate({"x1": 0, "x2": 1})["h1"] == F(1)
        assert pd1.abduct({"h1": 1, "h2": 10})["x1"] == F(0)
        assert pd1.counterfactual({"x1": 0, "x2": 1}, {"x1": 1})["h1"] == F("3.5")
