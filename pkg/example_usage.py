#!/usr/bin/env python3
"""
Quick Start Example: the four gallery items end to end.

Each example builds a gallery item, runs the relevant checker and prints the
certificate next to the closed-form value it should reproduce.
"""

from services import gallery
from services.convergence import check_alpha_p, check_in_measure, synthesize_witness
from services.func_model import instantiate, split_divergence_test
from services.measure_core import Interval, IntervalSet, complement
from services.weak_spaces import (
    check_ap_membership, check_weak_lp_convergence, weak_lp_quasinorm, weak_to_ap_embedding,
)


def banner(title):
    print("=" * 70)
    print(title)
    print("=" * 70)


def example_1_concentrating_spikes():
    """Example 1: n^{1/p} on [0, 1/n] converges in measure and α_p, but not in weak L_p."""
    banner("Example 1: concentrating spikes (E1, p = 2)")
    item = gallery.build("E1", 2.0)
    f = item.limit()

    for n in (1, 4, 16):
        rep = weak_lp_quasinorm(instantiate(item.sequence, n), 2.0)
        print(f"   n={n:<3} quasinorm = {rep.value:.6f} at δ = {rep.maximizer_delta:.4f}")

    rep = check_in_measure(item.sequence, f, 0.5, 100)
    print(f"   in measure (δ=0.5, H=100): {rep.verdict.value}, μ at H = {rep.measures[-1]:.4f}")

    witness = synthesize_witness(item.sequence, f, 2.0, 200)
    alpha = check_alpha_p(item.sequence, f, 2.0, witness, 200)
    print(f"   synthesized witness: N_1..N_3 = {witness.thresholds[:3]}, truncated at level {witness.truncated_at}")
    print(f"   α_2 at H=200: {alpha.verdict.value}")

    weak = check_weak_lp_convergence(item.sequence, f, 2.0, 64)
    print(f"   weak L_2 at H=64: {weak.verdict.value} (quasinorm stays at {weak.per_n[-1]:.3f})\n")


def example_2_spreading_tails():
    """Example 2: (n x)^{-1/p} on [1, ∞) converges in weak L_p, yet no witness rescues α_p."""
    banner("Example 2: spreading tails (E2, p = 2)")
    item = gallery.build("E2", 2.0)
    f = item.limit()

    weak = check_weak_lp_convergence(item.sequence, f, 2.0, 256)
    print(f"   weak L_2 at H=256: {weak.verdict.value}, per_n[:4] = {[round(v, 4) for v in weak.per_n[:4]]}")

    X = item.domain
    f5 = instantiate(item.sequence, 5)
    hole = IntervalSet.of(Interval.closed(2.0, 2.2))
    B = complement(hole, X)
    split = split_divergence_test(f5, 2.0, B, X)
    print(f"   ∫ over [1,∞) minus [2, 2.2] at n=5: {split}")

    from services.convergence import IntervalTemplate, WitnessTemplate
    from services.func_model import Monomial, Slot
    hole_n = IntervalTemplate(Slot.const(2.0), Slot((Monomial(2.0), Monomial(1.0, b=-1.0))))
    tpl = WitnessTemplate("complement", (hole_n,))
    witness = tpl.realize(X, 2.0, 32)
    alpha = check_alpha_p(item.sequence, f, 2.0, witness, 32)
    print(f"   α_2 with B_n = [1,∞) minus [2, 2 + 1/n]: {alpha.verdict.value}\n")


def example_3_singular_at_zero():
    """Example 3: x^{-2} on (0, 1) has infinite quasinorm but lies in A_p."""
    banner("Example 3: singular at zero (E3, p = 1)")
    item = gallery.build("E3", 1.0)

    rep = weak_lp_quasinorm(item.function, 1.0)
    print(f"   quasinorm: {rep.tag} ({rep.reason})")
    for delta in (1.0, 4.0, 16.0):
        print(f"   F({delta:g}) = {gallery.expected_probe(item, delta):.4f}")

    cert = check_ap_membership(item.function, 1.0)
    print(f"   A_1 membership: {cert.status.value}")
    for w in cert.witness_map:
        print(f"      δ={w.delta:<6g} μ(E_δ)={w.measure:.3g}  ∫ off E_δ = {w.integral}")
    print()


def example_4_heavy_tail():
    """Example 4: x^{-1/p} on [1, ∞) is in weak L_p but not in A_p."""
    banner("Example 4: heavy tail (E4, p = 2)")
    item = gallery.build("E4", 2.0)

    rep = weak_lp_quasinorm(item.function, 2.0)
    where = "attained" if rep.attained else "approached"
    print(f"   quasinorm = {rep.value:.6f} ({where}: {rep.reason})")

    cert = check_ap_membership(item.function, 2.0)
    print(f"   A_2 membership: {cert.status.value}, obstruction: {cert.obstruction}\n")


def example_5_embedding():
    """Example 5: on a finite domain weak L_p sits inside A_p, with an explicit level K."""
    banner("Example 5: weak L_1 to A_1 for x^{-1/2} on (0, 1)")
    from services.func_model import Expr, single_piece
    f = single_piece(gallery.OPEN_UNIT, Expr.power(1.0, -0.5))

    for delta in (0.1, 0.01):
        res = weak_to_ap_embedding(f, 1.0, delta)
        print(f"   δ={delta:<5g} C={res.C:.3f} K={res.K} μ(E_δ)={res.measure:.3g} "
              f"∫ off E_δ = {res.integral.value:.4f} <= {res.bound:g}: {res.holds}")
    print()


def main():
    """Run all examples."""

    print("\n")
    print("convlab - Quick Start Examples")
    print("=" * 70)
    print()

    example_1_concentrating_spikes()
    example_2_spreading_tails()
    example_3_singular_at_zero()
    example_4_heavy_tail()
    example_5_embedding()

    print("=" * 70)
    print("All Examples Completed!")
    print("=" * 70)
    print()
    print("Next Steps:")
    print("  1. Review the command reference in docs/CLI_USAGE.md")
    print("  2. Run the test suite: pytest")
    print("  3. Try your own sequence: python3 app.py check-in-measure --spec specs/shrinking-step.json")
    print()


if __name__ == "__main__":
    main()
