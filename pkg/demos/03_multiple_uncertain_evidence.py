"""Reasoning with two simultaneous uncertain constraints.

Each pass uses every constraint set once, most violated first.  Used
constraint sets get disturbed again when later updates propagate back
through the shared variables, so several passes may be needed; the
gradient thresholds decide when the result is good enough.

Run:  python demos/03_multiple_uncertain_evidence.py
"""

from pathlib import Path

from rcndl import (
    EvidenceSet,
    parse_evidence,
    parse_program,
    posterior_marginal,
    preprocess,
    run_reasoning,
)

here = Path(__file__).parent
net = preprocess(parse_program((here / "models" / "three_vars.rcndl").read_text()))
constraints = tuple(parse_evidence((here / "evidence_uncertain.txt").read_text()))

for threshold in (0.01, 0.001, 1e-8):
    posterior, trace = run_reasoning(
        net, EvidenceSet(constraints, default_threshold=threshold)
    )
    print(f"threshold {threshold:g}:")
    for step in trace.steps:
        print(f"  pass {step.pass_no}: used {step.constraint} "
              f"(|gradient| was {step.gradient_before:.6f})")
    pa = posterior_marginal(posterior, "A")[1]
    print(f"  -> P(A) = {pa:.6f} after {trace.passes} pass(es); "
          f"final gradients "
          + ", ".join(f"{k}: {v:.6f}" for k, v in trace.final_gradients.items()))
    print()

print("The tighter the thresholds, the closer the iteration gets to the")
print("joint minimum-cross-entropy solution over both constraints at once.")
