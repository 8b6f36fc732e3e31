from .base import RecommenderBase, score, score_all
