"""Presentations: term elaboration, leaf paths, coherence checking."""
import pytest

from opmodel.portgraph import (
    Architecture,
    TypeTable,
    ValidationError,
    Wire,
    at,
    boundary,
    outer,
)
from opmodel.presentation import (
    CoherenceEquation,
    OperadPresentation,
    Term,
    TermSyntaxError,
    check_equation,
    compile_presentation,
    elaborate,
    leaf_paths,
    parse_term,
    resolve_leaf,
)


class TestParseTerm:
    def test_bare_generator(self):
        assert parse_term("tau") == Term("tau")

    def test_nested(self):
        t = parse_term("phi(ls->lambda, ts->tau(ba->beta))")
        assert t.generator == "phi"
        assert t.child("ts").child("ba") == Term("beta")
        assert str(t) == "phi(ls->lambda, ts->tau(ba->beta))"

    @pytest.mark.parametrize("bad", [
        "", "f(", "f(x)", "f(x->)", "f(x->g", "f()", "f(x->g) extra"])
    def test_syntax_errors(self, bad):
        with pytest.raises(TermSyntaxError):
            parse_term(bad)


class TestElaborate:
    def test_leaf_slots_are_dotted_paths(self, pres):
        arch = elaborate(pres, parse_term("phi(ls->lambda)"))
        assert set(arch.slots) == {"ls.in", "ls.op", "ls.ch", "ts"}

    def test_compositional(self, pres):
        one_shot = elaborate(pres, parse_term("phi(ts->tau(ba->beta))"))
        staged_pres = OperadPresentation(
            pres.type_table, pres.boundaries,
            {**pres.generators,
             "taubeta": elaborate(pres, parse_term("tau(ba->beta)"))})
        staged = elaborate(staged_pres, parse_term("phi(ts->taubeta)"))
        assert one_shot == staged

    def test_six_components_on_both_equation_sides(self, pres):
        lhs = elaborate(pres, parse_term("phi(ls->lambda, ts->tau)"))
        rhs = elaborate(pres, parse_term("kappa(sn->sigma, ac->alpha)"))
        assert len(lhs.inputs) == len(rhs.inputs) == 6

    def test_unknown_slot_rejected(self, pres):
        with pytest.raises(ValidationError, match="no slot"):
            elaborate(pres, parse_term("phi(nope->tau)"))


class TestLeafResolution:
    def test_leaf_paths_in_slot_order(self, pres):
        t = parse_term("phi(ls->lambda, ts->tau)")
        assert leaf_paths(pres, t) == (
            ("ls.in", "Intfr"), ("ls.op", "Optics"), ("ls.ch", "Chassis"),
            ("ts.ba", "Bath"), ("ts.bt", "Box"), ("ts.rt", "Lab"))

    def test_exact_suffix_and_boundary_selectors(self, pres):
        t = parse_term("phi(ts->tau(ba->beta))")
        assert resolve_leaf(pres, t, "ts.ba.ht") == "ts.ba.ht"
        assert resolve_leaf(pres, t, "ht") == "ts.ba.ht"
        assert resolve_leaf(pres, t, "heater") == "ts.ba.ht"

    def test_unknown_selector(self, pres):
        t = parse_term("phi(ls->lambda, ts->tau)")
        with pytest.raises(ValidationError, match="no leaf"):
            resolve_leaf(pres, t, "zz")

    def test_ambiguous_selector(self):
        b = boundary("B", p="physical")
        a = boundary("A", p="physical")
        arch = Architecture(
            (("x", b), ("y", b)), a,
            (Wire(frozenset({at("x", "p"), at("y", "p"), outer("p")}),
                  "physical"),))
        tiny = OperadPresentation(
            TypeTable({"physical": "physical"}),
            {"A": a, "B": b}, {"f": arch}, ())
        t = parse_term("f")
        with pytest.raises(ValidationError, match="ambiguous"):
            resolve_leaf(tiny, t, "b")
        assert resolve_leaf(tiny, t, "x") == "x"


class TestCheckEquation:
    def test_corpus_equation_passes(self, pres):
        report = check_equation(pres, pres.equations[0])
        assert report.passed
        assert "pass" in str(report)

    def test_wire_deletion_fails_with_diff(self, pres):
        sigma = pres.generators["sigma"]
        mutated = Architecture(sigma.inputs, sigma.output, sigma.wires[1:])
        generators = {**pres.generators, "sigma": mutated}
        mutated_pres = OperadPresentation(
            pres.type_table, pres.boundaries, generators, pres.equations)
        report = check_equation(mutated_pres, pres.equations[0])
        assert not report.passed
        assert report.diff is not None
        assert report.diff.only_left or report.diff.only_right

    def test_error_reported_not_raised(self, pres):
        eq = CoherenceEquation(parse_term("phi(ls->beta)"), parse_term("kappa"))
        report = check_equation(pres, eq)
        assert not report.passed
        assert "expects boundary" in report.error


class TestCompile:
    def test_corpus_counts(self, pres):
        report = compile_presentation(pres)
        assert report.success
        assert (report.boundary_count, report.generator_count,
                report.equation_count) == (14, 7, 1)
        assert report.failure_count == 0
        assert str(report).startswith(
            "compile ok: 14 boundaries, 7 generators, 1 equations")

    def test_empty_presentation(self):
        report = compile_presentation(
            OperadPresentation(TypeTable({}), {}, {}, ()))
        assert report.success
        assert report.boundary_count == 0

    def test_undeclared_type_and_partial_wiring_reported(self):
        b = boundary("B", a="mystery")
        out = boundary("O", x="mystery", y="mystery")
        arch = Architecture(
            (("s", b),), out,
            (Wire(frozenset({at("s", "a"), outer("x")}), "mystery"),))
        report = compile_presentation(OperadPresentation(
            TypeTable({}), {"B": b, "O": out}, {"f": arch}, ()))
        assert not report.success
        assert any("undeclared type" in e for e in report.errors)
        assert any("unwired ports" in e for e in report.errors)

    def test_undeclared_boundary_reported(self, pres):
        report = compile_presentation(OperadPresentation(
            pres.type_table, {}, {"tau": pres.generators["tau"]}, ()))
        assert any("undeclared" in e for e in report.errors)
