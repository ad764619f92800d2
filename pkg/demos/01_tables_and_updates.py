"""Joint tables and the three MCE update kernels, on a two-variable example.

Run:  python demos/01_tables_and_updates.py
"""

import numpy as np

from rcndl import (
    ConditionalConstraint,
    JointTable,
    LinearConstraint,
    MarginalConstraint,
    Scope,
    conditional_update,
    cross_entropy,
    jeffrey_update,
    lec_solve,
    marginalize,
)

# A joint over (A, C): first scope variable is the most significant bit,
# so the layout is [p(~A,~C), p(~A,C), p(A,~C), p(A,C)].
prior = JointTable(Scope(("A", "C")), [0.06, 0.24, 0.63, 0.07])
print("prior:            ", prior)
print("marginal over C:  ", marginalize(prior, Scope(("C",))))

# Marginal evidence P(C) = 0.95.  The Jeffrey update rescales each C-event
# and is the exact minimum-cross-entropy posterior for this constraint.
c95 = MarginalConstraint(Scope(("C",)), (0.05, 0.95))
posterior = jeffrey_update(prior, c95)
print("\nafter P(C)=0.95:  ", posterior)
print("cross entropy to prior:", f"{cross_entropy(posterior, prior):.6f}")

# The same constraint expressed as one linear equality row and solved
# through the dual gives the same distribution.
row = (0.0, 1.0, 0.0, 1.0)             # coefficient 1 on the C=true states
linear = LinearConstraint(Scope(("A", "C")), (row,), (0.95,))
via_dual, state = lec_solve(prior, linear)
print("\nvia the dual:     ", via_dual)
print("multiplier:", state.lambdas, " dual iterations:", state.iterations)
print("max entry difference:",
      f"{np.abs(via_dual.probs - posterior.probs).max():.2e}")

# A conditional constraint P(C | A) = 0.5 tilts only the A=true part.
cond = ConditionalConstraint("C", (("A", True),), 0.5)
tilted = conditional_update(prior, cond)
print("\nafter P(C|A)=0.5: ", tilted)
print("P(C|A) now:", f"{tilted.probs[3] / (tilted.probs[2] + tilted.probs[3]):.6f}")
