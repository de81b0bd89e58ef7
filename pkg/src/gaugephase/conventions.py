"""Numeric conventions used throughout.

All derivatives are second-order stencils (np.gradient, edge_order=2) and all
quadrature is trapezoidal, so smooth-field identities close at O(h^2) on the
lattice, never exactly.  Functional derivatives use a symmetric difference
with step EPS_FS*(1+|phi|)/(1+|X|) and one Richardson halving.

Sign conventions:
  * default metric signature is (+,-,-,...) with time first;
  * the Hodge dual of a p-form keeps sqrt|det g| and the Levi-Civita symbol
    of (index tuple, complement) in that order, so *(*w) = sgn(det g)
    * (-1)^(p(n-p)) w;
  * boundary integrals orient faces by the outward coordinate convention
    sum_a (-1)^a [x_a = max  minus  x_a = min].
"""

# algebra membership / projection drift
EPS_ALG = 1e-10
# matrix exponential accuracy target (inverse-product check level)
EPS_EXP = 1e-12
# metric / tetrad nondegeneracy floor on |det|
EPS_DET = 1e-12
# functional-derivative base step factor
EPS_FS = 1e-4
# conjugate-gradient relative tolerance for orbit-orthogonality solves
EPS_CG = 1e-8
# maximum CG iterations
CG_MAXITER = 10_000
# polar dressing modulus floor
EPS_RHO = 1e-8

DEFAULT_TIME_FIRST_SIGNATURE = (1, -1, -1, -1)
