from .recommenders import StaticRecommender, popularity_recommender, random_recommender
