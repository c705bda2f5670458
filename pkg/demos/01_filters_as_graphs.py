"""
Smoothing filters as graphs
===========================

A bilateral or guided filter sweep is a matrix-vector product y = D^-1 W x,
where W holds the filter weights and D their row sums. Here we build both
operators on a tiny signal and look at them.
"""

import numpy as np

from cgsmooth import BfParams, GfParams, bf_build, dense_oracle, gf_build

np.set_printoptions(precision=3, suppress=True, linewidth=120)

# a step with a little noise: the edge should cut the graph in two
g = np.array([0.1, 0.12, 0.09, 0.11, 0.9, 0.88, 0.91, 0.9])

bf = bf_build(g, BfParams(sigma_d=0.5, sigma_r=0.1, half_width=2))
print("BF weights (5 diagonals):")
print(dense_oracle(bf))
print("degrees:", bf.degrees)

# weights across the edge are ~exp(-32); the Laplacian is almost block diagonal
lap = np.diag(bf.degrees) - dense_oracle(bf)
ev = np.linalg.eigvalsh(lap)
print("BF Laplacian eigenvalues:", ev)
print("two near-zero eigenvalues -> two connected pieces:", np.sum(ev < 1e-6))

# The guided filter gives a symmetric matrix with unit row sums, so D = I.
gf = gf_build(g, GfParams(epsilon=1e-3, rho=1))
w = dense_oracle(gf)
print("\nGF matrix (2*rho = 2 off-diagonals each side):")
print(w)
print("row sums:", w.sum(axis=1))
print("eigenvalues of I - W:", np.linalg.eigvalsh(np.eye(len(g)) - w))
