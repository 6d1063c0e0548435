"""Frozen calibration constants.

The Clifford model used throughout is e = v + xi acting as i_v + (xi ^ .),
which satisfies e.e' + e'.e = 2<e, e'> for the neutral pairing
<v + xi, u + eta> = (xi(u) + eta(v)) / 2, and spinor lines are normalized
as psi = e^{b + i omega} (unit constant term).  Those two choices determine
every sign and scale below.  Each value was calibrated once at n = 1 against
the direct-contraction route (tests/test_calibration.py re-derives all of
them on every run) and is frozen here; do not edit one without the others.
"""

# <e . alpha, beta>_s = ADJUNCTION_SIGN * <alpha, e . beta>_s for every
# generalized vector e; independent of the degrees of alpha and beta.
ADJUNCTION_SIGN = -1.0

# <e_i, e_j> vol = PAIR_RE_SIGN * Re[i^{-n} <e_i . psi, e_j . psibar>_s]
PAIR_RE_SIGN = -1.0

# <J_psi e_i, e_j> vol = PAIR_IM_SIGN * Im[i^{-n} <e_i . psi, e_j . psibar>_s]
PAIR_IM_SIGN = 1.0

# d/dt|_0 moment_value(conn + t a, xi)
#     = MOMENT_DERIVATIVE_SIGN * gm_symplectic(D_conn xi, a)
MOMENT_DERIVATIVE_SIGN = 1.0

# For any two-form B and psi = e^{b + i omega}:
# the psi-line coefficient of B ^ psi equals KAHLER_UPROJ_COEFF * trace(B Omega^{-1}) / 2
# i.e. mean curvature of a plain Hermitian connection is -(i/2) Lambda_omega F_A.
KAHLER_UPROJ_COEFF = -0.5j

# Line-bundle Einstein-Hermitian condition with psi = e^{c omega + i omega}:
# Lambda_omega(F_A + c i L_v omega) = LINE_EH_SCALE * lambda * i
LINE_EH_SCALE = 2.0

# Mean curvature with b = 0 and vector part W in the unitary (1,0)-frame:
# K = COHIGGS_SCALE * (COHIGGS_F_SIGN * i Lambda_omega F_A + sum_i [W_i, W_i^dag])
COHIGGS_F_SIGN = -1.0
COHIGGS_SCALE = 0.5
