from .embeddings import (
    init_state,
    init_xavier,
    l2_normalize_rows,
    l2_normalize_rows_backward,
    load_checkpoint,
    load_checkpoint_meta,
    save_checkpoint,
)
