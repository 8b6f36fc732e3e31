"""
Debiased collaborative filtering.

`alignrec` trains implicit-feedback recommenders (matrix factorization or a
light graph convolution) with a BPR ranking loss plus two representation
regularizers: an MMD term that pulls tail users and items toward the
distribution of popular ones, and a Gaussian-potential uniformity term
that spreads all representations over the unit sphere.

```python
from alignrec.dataset import generate_synthetic, filter_k_core, split_per_user
from alignrec.trainer import make_recommender

rec = make_recommender({"backbone": "lightgcn", "lambda1": 0.1, "lambda2": 0.1})
state, history = rec.fit(split, groups)
```
"""

__version__ = "0.1.0"
