from .adam import adam_step
from .fit import fit, make_recommender
from .sampling import make_batches, sample_negative, sample_negatives
