from .interactions import (
    assign_groups,
    compute_popularity,
    filter_k_core,
    from_pairs,
    load_interactions,
    load_split,
    split_per_user,
    write_split,
)
from .synthetic import generate_synthetic
