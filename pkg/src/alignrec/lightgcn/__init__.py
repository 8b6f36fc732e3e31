from .lightgcn import LightGCN, build_normalized_adjacency, propagate
