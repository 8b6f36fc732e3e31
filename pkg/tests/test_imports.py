def test_regular_imports():
    from alignrec.base.base import RecommenderBase
    from alignrec.bprmf.bprmf import BPRMF
    from alignrec.cli import main
    from alignrec.dataset.interactions import load_interactions
    from alignrec.dataset.synthetic import generate_synthetic
    from alignrec.embeddings.embeddings import save_checkpoint
    from alignrec.evaluation.metrics import pru
    from alignrec.evaluation.report import evaluate
    from alignrec.lightgcn.lightgcn import LightGCN
    from alignrec.losses.mmd import mmd_sq
    from alignrec.mock.recommenders import StaticRecommender
    from alignrec.trainer.adam import adam_step


def test_shortcut_imports():
    from alignrec.base import RecommenderBase, score, score_all
    from alignrec.bprmf import BPRMF
    from alignrec.dataset import filter_k_core, split_per_user
    from alignrec.embeddings import load_checkpoint
    from alignrec.evaluation import dp_at_k, ndcg_at_k
    from alignrec.lightgcn import LightGCN, build_normalized_adjacency, propagate
    from alignrec.losses import alignment_loss, uniformity_loss
    from alignrec.mock import popularity_recommender, random_recommender
    from alignrec.trainer import fit, make_recommender
