from .bpr import bpr_batch, bpr_gradients, bpr_term
from .gradcheck import finite_difference_check
from .mmd import (
    AlignmentAnchor,
    alignment_loss,
    make_alignment_anchor,
    median_heuristic_gamma,
    mmd_sq,
    mmd_sq_grad,
)
from .objective import alignment_objective, compute_objective, objective_closure, total_loss
from .regularization import l2_term
from .uniformity import uniformity_loss, uniformity_side, uniformity_value
