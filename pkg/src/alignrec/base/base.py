r"""

# Nomenclature

| Prefix | Definition | Examples |
| --- | --- | --- |
| `rec.prepare` | Builds whatever the backbone needs from the training interactions | [`rec.prepare(...)`][alignrec.base.base.RecommenderBase.prepare] |
| `rec.propagate` | Maps layer-0 embeddings to final representations | [`rec.propagate(...)`][alignrec.base.base.RecommenderBase.propagate] |
| `rec.backpropagate` | Pulls gradients on final representations back to layer-0 | [`rec.backpropagate(...)`][alignrec.base.base.RecommenderBase.backpropagate] |
| `rec.fit` | Trains the embeddings with the debiasing objective | [`rec.fit(...)`][alignrec.base.base.RecommenderBase.fit] |
| `rec.score_` | Scores user-item pairs by inner product | [`rec.score_all(...)`][alignrec.base.base.RecommenderBase.score_all] |

# Extending

`alignrec.base.RecommenderBase` owns the embedding tables, the training loop
and scoring. Backbones subclass it and implement the three abstract methods.
`alignrec.bprmf.BPRMF` uses the layer-0 rows directly, `alignrec.lightgcn.LightGCN`
averages them over graph propagation layers.

```mermaid
flowchart
    subgraph RecommenderBase
        fit
        training_step
        score_all
    end

    subgraph BPRMF
        prepare
        propagate
        backpropagate
    end

    subgraph LightGCN
        build_normalized_adjacency
        propagate_layers
    end
```

"""

import time
from abc import ABC, abstractmethod
from typing import Callable, List, Tuple, Union

import numpy as np

from ..embeddings import init_state
from ..evaluation.diagnostics import representation_properties
from ..evaluation.report import validation_ndcg, validation_pru
from ..exceptions import SamplingError, TrainingAbortedError
from ..losses import compute_objective, make_alignment_anchor
from ..trainer.adam import adam_step
from ..trainer.sampling import make_batches
from ..types import (
    AdamState,
    EmbeddingState,
    GroupAssignment,
    InteractionSet,
    LossBreakdown,
    Split,
    TrainBatch,
    TrainConfig,
)
from ..utils import parse_bool

LOSS_FIELDS = ("rec", "align", "uniform", "l2", "total")


def score(z_u: np.ndarray, h_i: np.ndarray) -> float:
    return float(np.dot(z_u, h_i))


def score_all(user: int, reps: Tuple[np.ndarray, np.ndarray]) -> np.ndarray:
    user_reps, item_reps = reps
    return item_reps @ user_reps[user]


class RecommenderBase(ABC):
    def __init__(self, config=None):
        if config is None:
            config = {}

        self.config = config
        self.train_config = TrainConfig.from_config(config)
        self.verbose = parse_bool(self.config.get("verbose", True))
        self.state: Union[EmbeddingState, None] = None
        self.train_set: Union[InteractionSet, None] = None

    def log(self, message: str, title: str = "Info"):
        if self.verbose:
            print(f"{title}: {message}")

    @property
    def is_identity(self) -> bool:
        """True when final representations are the layer-0 rows themselves."""
        return False

    # ----------------- Backbone hooks ----------------- #

    @abstractmethod
    def prepare(self, train: InteractionSet):
        pass

    @abstractmethod
    def propagate(self, user_emb: np.ndarray, item_emb: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        pass

    @abstractmethod
    def backpropagate(self, grad_user: np.ndarray, grad_item: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        pass

    # ----------------- Scoring ----------------- #

    def load_state(self, state: EmbeddingState, train: InteractionSet):
        """Attaches trained embeddings, e.g. from a checkpoint."""
        self.prepare(train)
        self.train_set = train
        self.state = state

    def final_representations(self, state: Union[EmbeddingState, None] = None) -> Tuple[np.ndarray, np.ndarray]:
        state = state or self.state
        if state is None:
            raise ValueError("The recommender has no embeddings yet. Call fit() or load_state() first.")
        return self.propagate(state.user_emb, state.item_emb)

    def score_all(self, user: int) -> np.ndarray:
        """
        Example:
        ```python
        rec.score_all(0).argsort()[::-1][:20]
        ```

        Scores every item for `user` by the inner product of final representations.

        Args:
            user (int): Dense user index.

        Returns:
            np.ndarray: One score per item.
        """
        return score_all(user, self.final_representations())

    # ----------------- Training ----------------- #

    def training_step(self, batch: TrainBatch, groups: GroupAssignment, adam: AdamState) -> LossBreakdown:
        cfg = self.train_config
        state = self.state
        reps = self.propagate(state.user_emb, state.item_emb)

        anchor = None
        if cfg.lambda1 > 0:
            anchor = make_alignment_anchor(
                state.user_emb, state.item_emb, reps[0], reps[1], batch, groups, cfg.kernel, sides=cfg.sides
            )

        breakdown, grad_user, grad_item = compute_objective(
            self,
            state.user_emb,
            state.item_emb,
            batch,
            cfg.lambda1,
            cfg.lambda2,
            cfg.l2_reg,
            t=cfg.kernel.t,
            anchor=anchor,
            reps=reps,
            sides=cfg.sides,
        )
        if not np.isfinite(breakdown.total):
            raise TrainingAbortedError(
                f"Non-finite loss {breakdown.total}",
                diagnostics={field: getattr(breakdown, field) for field in LOSS_FIELDS},
            )

        adam_step([state.user_emb, state.item_emb], [grad_user, grad_item], adam, cfg.lr)
        return breakdown

    def fit(
        self,
        split: Split,
        groups: GroupAssignment,
        on_epoch: Union[Callable[[dict], None], None] = None,
        on_improve: Union[Callable[[EmbeddingState, dict], None], None] = None,
    ) -> Tuple[EmbeddingState, List[dict]]:
        """
        Example:
        ```python
        state, history = rec.fit(split, groups)
        ```

        Trains the embeddings on `split.train` with mini-batch Adam. After each
        epoch NDCG@K is measured on `split.validation`; the best state is kept
        and training stops once `patience` epochs pass without improvement or
        `epochs_max` is reached. When no user has validation interactions the
        metric is recorded as None and the epoch with the lowest training loss
        is kept.

        Args:
            split (Split): Train / validation / test interactions.
            groups (GroupAssignment): Popular and tail groups for the alignment term.
            on_epoch: Called with every epoch record.
            on_improve: Called with the new best state and its epoch record.

        Returns:
            Tuple[EmbeddingState, List[dict]]: The best state and the epoch records.
        """
        cfg = self.train_config
        train = split.train
        if len(train) == 0:
            raise ValueError("Cannot fit on an empty training set")
        if cfg.lambda1 > 0 and (
            not groups.user_popular.any() or groups.user_popular.all()
            or not groups.item_popular.any() or groups.item_popular.all()
        ):
            raise SamplingError("The alignment term needs nonempty popular and tail groups on both sides")

        self.prepare(train)
        self.train_set = train
        self.state = init_state(train.num_users, train.num_items, cfg.dim, cfg.seed)
        adam = AdamState.for_params([self.state.user_emb, self.state.item_emb])
        rng = np.random.default_rng(cfg.seed)

        best_score = -np.inf
        best_state = self.state.copy()
        since_best = 0
        history = []
        metric_name = f"val_ndcg{cfg.eval_k}"

        for epoch in range(1, cfg.epochs_max + 1):
            started = time.perf_counter()
            batches = make_batches(train, cfg.batch_size, rng, groups, cfg.align_sample_cap)

            sums = dict.fromkeys(LOSS_FIELDS, 0.0)
            for number, batch in enumerate(batches):
                try:
                    breakdown = self.training_step(batch, groups, adam)
                except TrainingAbortedError as e:
                    e.diagnostics.update({"epoch": epoch, "batch": number})
                    raise
                for field in LOSS_FIELDS:
                    sums[field] += getattr(breakdown, field) * len(batch)

            record = {"epoch": epoch}
            record.update({field: sums[field] / len(train) for field in LOSS_FIELDS})
            record[metric_name] = validation_ndcg(self, split, cfg.eval_k)
            if cfg.track_properties:
                record.update(
                    representation_properties(
                        self, groups, t=cfg.kernel.t, cap=cfg.property_sample_cap, seed=cfg.seed + epoch
                    )
                )
                record["val_pru"] = validation_pru(self, split)
            record["elapsed_s"] = time.perf_counter() - started
            history.append(record)

            metric = record[metric_name]
            self.log(
                title=f"Epoch {epoch}",
                message=f"total={record['total']:.5f} rec={record['rec']:.5f} "
                        f"align={record['align']:.5f} uniform={record['uniform']:.5f} "
                        f"{metric_name}={'n/a' if metric is None else f'{metric:.5f}'}",
            )
            if on_epoch is not None:
                on_epoch(record)

            # without validation interactions the lowest training loss selects the state
            score = -record["total"] if metric is None else metric
            if score > best_score:
                best_score = score
                best_state = self.state.copy()
                since_best = 0
                if on_improve is not None:
                    on_improve(best_state, record)
            else:
                since_best += 1

            if since_best >= cfg.patience:
                self.log(title="Early stop", message=f"no improvement for {since_best} epoch(s)")
                break

        self.state = best_state
        return best_state, history
