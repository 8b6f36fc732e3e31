from .diagnostics import (
    angular_density,
    angular_density_frame,
    exposure_baseline,
    group_exposure,
    loss_gap,
    mean_score_gap,
    representation_properties,
    score_gap,
)
from .metrics import (
    accuracy_histogram,
    dp_at_k,
    dp_from_accuracy,
    hr_at_k,
    jsd,
    ndcg_at_k,
    pru,
    pru_with_counts,
    spearman,
)
from .ranking import model_representations, rank_items, rank_users
from .report import (
    REPORT_SCHEMA,
    angular_density_figure,
    audit_bundle,
    evaluate,
    exposure_figure,
    exposure_frame,
    report_to_dict,
    summary_frame,
    validate_report,
    validation_ndcg,
    validation_pru,
    write_report,
)
