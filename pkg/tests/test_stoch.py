"""Stochastic kernels, pointed kernels, projections, lifting and diagnosis."""
import random
from fractions import Fraction

import pytest

from opmodel.modes import ModeSet
from opmodel.portgraph import ValidationError
from opmodel.presentation import parse_term
from opmodel.prob import compose_dist
from opmodel.stoch import (
    Kernel,
    Point,
    PtKernel,
    StochFunctor,
    aggr,
    check_lifting,
    compose_kernel,
    compose_pt,
    diagnose,
    format_posterior,
    identity_kernel,
    pt_condition,
    supp,
    term_pt_kernel,
)
from randgen import (
    compose_kernel_oracle,
    compose_rel_oracle,
    consistent_ptkernel,
    random_modeset,
    random_point,
)

F = Fraction

X = ModeSet("X", ("x",))
Y = ModeSet("Y", ("y1", "y2"))
Z = ModeSet("Z", ("u", "v"))


class TestKernelBasics:
    def test_rows_must_sum_to_one(self):
        with pytest.raises(ValidationError, match="sums to"):
            Kernel(X, (("a", Y),), {("x", "a", "y1"): F(1, 2)})

    def test_unknown_mode_rejected(self):
        with pytest.raises(ValidationError, match="unknown"):
            Kernel(X, (("a", Y),), {("x", "a", "zz"): F(1)})

    def test_zero_entries_are_dropped(self):
        k = Kernel(X, (("a", Y),),
                   {("x", "a", "y1"): F(1), ("x", "a", "y2"): F(0)})
        assert ("x", "a", "y2") not in k.entries
        assert k("x", "a", "y2") == 0

    def test_identity_kernel(self):
        k = identity_kernel(Y, "s")
        assert k("y1", "s", "y1") == 1
        assert k("y1", "s", "y2") == 0

    def test_point_must_sum_to_one(self):
        with pytest.raises(ValidationError, match="sum to 1"):
            Point(Y, {"y1": F(1, 3)})


class TestComposeKernel:
    def test_hand_marginalization(self):
        p = Kernel(X, (("a", Y),),
                   {("x", "a", "y1"): F(1, 2), ("x", "a", "y2"): F(1, 2)})
        q = Kernel(Y, (("b", Z),),
                   {("y1", "b", "u"): F(1),
                    ("y2", "b", "u"): F(1, 2), ("y2", "b", "v"): F(1, 2)})
        composed = compose_kernel(p, {"a": q})
        assert composed("x", "a.b", "u") == F(3, 4)
        assert composed("x", "a.b", "v") == F(1, 4)

    def test_rows_stay_normalized_and_match_oracle(self):
        rng = random.Random(401)
        for _ in range(300):
            src = random_modeset(rng, "S", max_modes=3)
            mid = random_modeset(rng, "M", max_modes=3)
            other = random_modeset(rng, "N", max_modes=2)
            leaf = random_modeset(rng, "L", max_modes=3)
            p = consistent_ptkernel(rng, src, (("a", mid), ("b", other))).kernel
            q = consistent_ptkernel(rng, mid, (("c", leaf),)).kernel
            composed = compose_kernel(p, {"a": q})
            assert dict(composed.entries) == compose_kernel_oracle(p, {"a": q})
            for x in src.modes:
                row = sum(v for (x2, _, _), v in composed.entries.items()
                          if x2 == x)
                assert row == 1

    def test_supp_flips_to_cause_convention(self):
        p = Kernel(X, (("a", Y),),
                   {("x", "a", "y1"): F(1, 2), ("x", "a", "y2"): F(1, 2)})
        assert supp(p).slot("a") == frozenset({("y1", "x"), ("y2", "x")})


class TestPointedKernels:
    def test_pt_condition_holds_by_construction(self):
        rng = random.Random(402)
        src = random_modeset(rng, "S")
        k = consistent_ptkernel(rng, src, (("a", Y), ("b", Z)))
        assert pt_condition(k).holds

    def test_perturbed_slot_prior_violates(self):
        rng = random.Random(403)
        k = consistent_ptkernel(rng, Y, (("a", Z),))
        skewed = PtKernel(k.kernel, k.source_prior,
                          {"a": Point(Z, {"u": F(1)})})
        report = pt_condition(skewed)
        assert not report.holds
        assert report.max_residual > 0

    def test_zero_weight_slot_is_a_violation(self):
        kern = Kernel(X, (("a", Y), ("b", Z)),
                      {("x", "a", "y1"): F(1)})
        k = PtKernel(kern, Point(X, {"x": F(1)}),
                     {"a": Point(Y, {"y1": F(1)}),
                      "b": Point(Z, {"u": F(1)})})
        report = pt_condition(k)
        assert not report.holds
        assert any("zero aggregate weight" in v for v in report.violations)

    def test_compose_pt_requires_matching_priors(self):
        rng = random.Random(404)
        outerk = consistent_ptkernel(rng, X, (("a", Y),))
        derived = outerk.slot_priors["a"]
        other = Point(Y, {"y1": F(1)})
        if other.same_as(derived):
            other = Point(Y, {"y2": F(1)})
        mismatched = consistent_ptkernel(rng, Y, (("c", Z),),
                                         source_prior=other)
        with pytest.raises(ValidationError, match="prior"):
            compose_pt(outerk, {"a": mismatched})


class TestProjectionProperties:
    """Randomized functoriality of aggr/supp and closure of the pt condition.

    The acceptance suite runs the same properties at full volume.
    """

    CASES = 150

    def _composed_pair(self, rng):
        src = random_modeset(rng, "S", max_modes=3)
        mid = random_modeset(rng, "M", max_modes=3)
        other = random_modeset(rng, "N", max_modes=2)
        leaf = random_modeset(rng, "L", max_modes=3)
        p = consistent_ptkernel(rng, src, (("a", mid), ("b", other)))
        q = consistent_ptkernel(rng, mid, (("c", leaf),),
                                source_prior=p.slot_priors["a"])
        return p, q, compose_pt(p, {"a": q})

    def test_pt_condition_closed_under_composition(self):
        rng = random.Random(405)
        for _ in range(self.CASES):
            _, _, composed = self._composed_pair(rng)
            assert pt_condition(composed).holds

    def test_aggr_functorial(self):
        rng = random.Random(406)
        for _ in range(self.CASES):
            p, q, composed = self._composed_pair(rng)
            assert aggr(composed).as_dict() == \
                compose_dist(aggr(p), {"a": aggr(q)}).as_dict()

    def test_supp_functorial_vs_witness_search(self):
        rng = random.Random(407)
        for _ in range(self.CASES):
            p, q, composed = self._composed_pair(rng)
            oracle = compose_rel_oracle(supp(p.kernel), {"a": supp(q.kernel)})
            got = supp(composed.kernel)
            assert set(got.pairs) == set(oracle.pairs)
            for slot in got.pairs:
                assert got.slot(slot) == oracle.slot(slot)


class TestCorpusLifting:
    def test_aggr_of_phi(self, lsi):
        k = lsi.stoch_functors["S"].pt_kernel(lsi.presentation, "phi")
        assert aggr(k).as_dict() == {"ls": F(2, 5), "ts": F(3, 5)}

    def test_lifting_passes(self, lsi):
        report = check_lifting(
            lsi.presentation, lsi.stoch_functors["S"],
            lsi.prob_functors["P"], lsi.mode_functors["M"])
        assert report.passed
        # three projection rows per generator plus one per equation
        assert len(report.rows) == 3 * 7 + 1

    def test_zeroed_entry_fails(self, lsi):
        S = lsi.stoch_functors["S"]
        tau = S.kernels["tau"]
        entries = dict(tau.entries)
        removed = entries.pop(("laser_low", "rt", "too_cold"))
        entries[("laser_low", "ba", "too_cold")] += removed
        mutated = StochFunctor(S.priors, {
            **S.kernels,
            "tau": Kernel(tau.source, tau.slots, entries)})
        report = check_lifting(
            lsi.presentation, mutated,
            lsi.prob_functors["P"], lsi.mode_functors["M"])
        assert not report.passed
        assert any("support" in r.subject and not r.passed
                   for r in report.rows)


class TestDiagnose:
    def test_chain_rule_oracle_two_levels(self, lsi):
        S = lsi.stoch_functors["S"]
        phi, tau = S.kernels["phi"], S.kernels["tau"]
        posterior = diagnose(lsi.presentation, S,
                             parse_term("phi(ts->tau)"), "bad_length")
        expected_ba_cold = (
            phi("bad_length", "ts", "laser_low") * tau("laser_low", "ba", "too_cold")
            + phi("bad_length", "ts", "laser_high") * tau("laser_high", "ba", "too_cold"))
        assert posterior["ts.ba.too_cold"] == expected_ba_cold == F(6, 25)
        assert posterior["ls.no_fringe"] == F(1, 5)

    def test_low_observation_rules_out_hot_lab(self, lsi):
        posterior = diagnose(lsi.presentation, lsi.stoch_functors["S"],
                             parse_term("tau(ba->beta)"), "laser_low")
        assert posterior["rt.too_hot"] == 0
        assert posterior["ba.ht.malfunction"] == F(2, 5)
        text = format_posterior(posterior)
        assert text.splitlines()[1] == "  ba.ht.malfunction: 2/5 (40%)"

    def test_unknown_observation_rejected(self, lsi):
        with pytest.raises(ValidationError, match="unknown mode"):
            diagnose(lsi.presentation, lsi.stoch_functors["S"],
                     parse_term("tau"), "nonsense")

    def test_term_pt_kernel_matches_manual_composition(self, lsi):
        S = lsi.stoch_functors["S"]
        manual = compose_pt(
            S.pt_kernel(lsi.presentation, "tau"),
            {"ba": S.pt_kernel(lsi.presentation, "beta")})
        viaterm = term_pt_kernel(lsi.presentation, S,
                                 parse_term("tau(ba->beta)"))
        assert viaterm.kernel == manual.kernel
        assert viaterm.source_prior.same_as(manual.source_prior)
