"""Absolute probability sequences: computation, uniqueness, and the failure mode.

The defining relation is pi'(t) = pi'(t+1) A(t).  For ergodic chains the
backward products A(t+T-1)...A(t) collapse to a rank-one matrix whose row is
the unique adjoint vector; for chains of invertible matrices with stochastic
inverses (permutations) the adjoint sequence is massively non-unique.
"""
import numpy as np

from consensus_lab import (GraphSequence, MatrixSequence, assemble_adjoint,
                           backward_product_adjoint, permutation_counterexample,
                           uniform_adjoint, window_averaged_product)

# 1. a reducible constant chain: one agent never listens
seq = MatrixSequence.custom([np.array([[1.0, 0.0], [0.5, 0.5]])])
phi = backward_product_adjoint(seq, 0)
print("constant chain [[1,0],[.5,.5]] -> adjoint vector", np.round(phi, 12))
print("   (all weight on the stubborn agent)")
print()

# 2. time-varying random rooted graphs: assembled sequence with residuals
gseq = GraphSequence.random_rooted(8, 0.3, seed=11)
mseq = MatrixSequence.from_scheme(gseq, "equal-neighbor")
aps = assemble_adjoint(mseq, 50)
print("random rooted chain over 50 steps:")
print("   delta (min entry)      :", aps.delta)
print("   max L1 residual        :", float(aps.residuals.max()))
print("   pi(0)                  :", np.round(aps.vectors[0], 6))
print()

# 3. window-doubling agreement: T and 2T windows give the same vector
for window in (8, 16, 32, 64, 128, 256, 512):
    vec, spread = window_averaged_product(mseq, 0, window)
    print(f"   window {window:4d}: column spread {spread:.3e}")
    if spread <= 1e-10:
        vec2, _ = window_averaged_product(mseq, 0, 2 * window)
        print("   doubling the window moves the vector by",
              float(np.abs(vec - vec2).max()))
        break
print()

# 4. doubly stochastic chains have the uniform adjoint
quarter = MatrixSequence.from_scheme(
    GraphSequence.random_rooted(6, 1.0, seed=0), "lazy-metropolis")
uni = uniform_adjoint(quarter, 10)
print("lazy-metropolis chain: uniform adjoint, delta =", uni.delta)
print()

# 5. permutation chains: two different valid adjoint sequences
_, first, second = permutation_counterexample(4, seed=3)
print("permutation chain counterexample (residuals are exactly zero):")
print("   sequence A, pi(0):", np.round(first.vectors[0], 6),
      "residual", float(first.residuals.max()))
print("   sequence B, pi(0):", np.round(second.vectors[0], 6),
      "residual", float(second.residuals.max()))
print("   both satisfy the defining relation at every step, so the adjoint")
print("   sequence of a non-ergodic chain need not be unique.")
