from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, List, Optional, Union

import numpy as np

from ..exceptions import ImproperlyConfigured
from ..utils import parse_bool, parse_int_list

POPULAR = "popular"
TAIL = "tail"


@dataclass(frozen=True, eq=False)
class InteractionSet:
    num_users: int
    num_items: int
    users: np.ndarray
    items: np.ndarray
    user_ids: List[str]
    item_ids: List[str]

    def __len__(self) -> int:
        return int(self.users.shape[0])

    @property
    def interactions(self) -> List[tuple]:
        return list(zip(self.users.tolist(), self.items.tolist()))

    @cached_property
    def user_items(self) -> List[np.ndarray]:
        order = np.lexsort((self.items, self.users))
        users, items = self.users[order], self.items[order]
        bounds = np.searchsorted(users, np.arange(self.num_users + 1))
        return [items[bounds[u]:bounds[u + 1]] for u in range(self.num_users)]

    @cached_property
    def keys(self) -> np.ndarray:
        """Sorted `u * N + i` codes, for fast membership tests."""
        return np.sort(self.users.astype(np.int64) * self.num_items + self.items)

    @cached_property
    def user_index(self) -> Dict[str, int]:
        """Raw user ID -> dense index, the inverse of `user_ids`."""
        return {raw: idx for idx, raw in enumerate(self.user_ids)}

    def user_degrees(self) -> np.ndarray:
        return np.bincount(self.users, minlength=self.num_users)

    def item_degrees(self) -> np.ndarray:
        return np.bincount(self.items, minlength=self.num_items)


@dataclass(frozen=True, eq=False)
class Split:
    train: InteractionSet
    validation: InteractionSet
    test: InteractionSet
    seed: int


@dataclass(frozen=True, eq=False)
class PopularityTable:
    user_pop: np.ndarray
    item_pop: np.ndarray


@dataclass(frozen=True, eq=False)
class GroupAssignment:
    user_popular: np.ndarray
    item_popular: np.ndarray
    top_fraction: float

    @property
    def popular_users(self) -> np.ndarray:
        return np.flatnonzero(self.user_popular)

    @property
    def tail_users(self) -> np.ndarray:
        return np.flatnonzero(~self.user_popular)

    @property
    def popular_items(self) -> np.ndarray:
        return np.flatnonzero(self.item_popular)

    @property
    def tail_items(self) -> np.ndarray:
        return np.flatnonzero(~self.item_popular)

    def user_labels(self) -> List[str]:
        return [POPULAR if flag else TAIL for flag in self.user_popular.tolist()]

    def item_labels(self) -> List[str]:
        return [POPULAR if flag else TAIL for flag in self.item_popular.tolist()]


@dataclass(eq=False)
class EmbeddingState:
    user_emb: np.ndarray
    item_emb: np.ndarray

    @property
    def dim(self) -> int:
        return int(self.user_emb.shape[1])

    @property
    def num_users(self) -> int:
        return int(self.user_emb.shape[0])

    @property
    def num_items(self) -> int:
        return int(self.item_emb.shape[0])

    def copy(self) -> EmbeddingState:
        return EmbeddingState(self.user_emb.copy(), self.item_emb.copy())


@dataclass
class BackboneConfig:
    kind: str = "bprmf"
    layers: int = 3

    KINDS = ("bprmf", "lightgcn")

    @classmethod
    def from_config(cls, config: dict) -> BackboneConfig:
        kind = str(config.get("backbone", "bprmf")).lower()
        layers = int(config.get("layers", 3))
        if kind not in cls.KINDS:
            raise ImproperlyConfigured(f"Unknown backbone {kind!r}, expected one of {cls.KINDS}")
        if not 0 <= layers <= 4:
            raise ImproperlyConfigured(f"layers must be within 0..4, got {layers}")
        return cls(kind=kind, layers=layers)


@dataclass
class KernelConfig:
    bandwidth_rule: str = "median"
    gamma: float = 1.0
    t: float = 2.0

    @classmethod
    def from_config(cls, config: dict) -> KernelConfig:
        rule = str(config.get("bandwidth_rule", "median")).lower()
        gamma = float(config.get("gamma", 1.0))
        t = float(config.get("temperature", 2.0))
        if rule not in ("median", "fixed"):
            raise ImproperlyConfigured(f"bandwidth_rule must be 'median' or 'fixed', got {rule!r}")
        if gamma <= 0 or t <= 0:
            raise ImproperlyConfigured("gamma and temperature must be positive")
        return cls(bandwidth_rule=rule, gamma=gamma, t=t)


@dataclass
class TrainConfig:
    batch_size: int = 2048
    lr: float = 0.001
    epochs_max: int = 200
    patience: int = 10
    lambda1: float = 0.1
    lambda2: float = 0.1
    l2_reg: float = 1e-4
    dim: int = 64
    neg_per_pos: int = 1
    seed: int = 2024
    backbone: BackboneConfig = field(default_factory=BackboneConfig)
    kernel: KernelConfig = field(default_factory=KernelConfig)
    align_sample_cap: int = 512
    top_fraction: float = 0.2
    eval_k: int = 20
    track_properties: bool = False
    property_sample_cap: int = 1024
    regularize_users: bool = True
    regularize_items: bool = True

    @classmethod
    def from_config(cls, config: dict) -> TrainConfig:
        cfg = cls(
            batch_size=int(config.get("batch_size", 2048)),
            lr=float(config.get("lr", 0.001)),
            epochs_max=int(config.get("epochs_max", 200)),
            patience=int(config.get("patience", 10)),
            lambda1=float(config.get("lambda1", 0.1)),
            lambda2=float(config.get("lambda2", 0.1)),
            l2_reg=float(config.get("l2_reg", 1e-4)),
            dim=int(config.get("dim", 64)),
            neg_per_pos=int(config.get("neg_per_pos", 1)),
            seed=int(config.get("seed", 2024)),
            backbone=BackboneConfig.from_config(config),
            kernel=KernelConfig.from_config(config),
            align_sample_cap=int(config.get("align_sample_cap", 512)),
            top_fraction=float(config.get("top_fraction", 0.2)),
            eval_k=int(config.get("eval_k", 20)),
            track_properties=parse_bool(config.get("track_properties", False)),
            property_sample_cap=int(config.get("property_sample_cap", 1024)),
            regularize_users=parse_bool(config.get("regularize_users", True)),
            regularize_items=parse_bool(config.get("regularize_items", True)),
        )
        cfg.validate()
        return cfg

    def validate(self):
        if self.batch_size < 1:
            raise ImproperlyConfigured(f"batch_size must be >= 1, got {self.batch_size}")
        for name in ("lr", "lambda1", "lambda2", "l2_reg"):
            if getattr(self, name) < 0:
                raise ImproperlyConfigured(f"{name} must be non-negative")
        if self.neg_per_pos != 1:
            raise ImproperlyConfigured("Only one negative per positive is supported")
        if self.dim < 1 or self.epochs_max < 1 or self.patience < 0:
            raise ImproperlyConfigured("dim and epochs_max must be >= 1, patience >= 0")
        if not 0 < self.top_fraction < 1:
            raise ImproperlyConfigured(f"top_fraction must be in (0, 1), got {self.top_fraction}")
        if self.align_sample_cap < 1:
            raise ImproperlyConfigured("align_sample_cap must be >= 1")
        if not (self.regularize_users or self.regularize_items):
            raise ImproperlyConfigured("regularize_users and regularize_items cannot both be off")

    @property
    def sides(self) -> tuple:
        """(users, items) switches of the alignment and uniformity terms."""
        return self.regularize_users, self.regularize_items

    def to_dict(self) -> dict:
        return {
            "batch_size": self.batch_size,
            "lr": self.lr,
            "epochs_max": self.epochs_max,
            "patience": self.patience,
            "lambda1": self.lambda1,
            "lambda2": self.lambda2,
            "l2_reg": self.l2_reg,
            "dim": self.dim,
            "neg_per_pos": self.neg_per_pos,
            "seed": self.seed,
            "backbone": self.backbone.kind,
            "layers": self.backbone.layers,
            "bandwidth_rule": self.kernel.bandwidth_rule,
            "gamma": self.kernel.gamma,
            "temperature": self.kernel.t,
            "align_sample_cap": self.align_sample_cap,
            "top_fraction": self.top_fraction,
            "eval_k": self.eval_k,
            "track_properties": self.track_properties,
            "property_sample_cap": self.property_sample_cap,
            "regularize_users": self.regularize_users,
            "regularize_items": self.regularize_items,
        }


@dataclass
class ExperimentConfig:
    train: TrainConfig
    dataset: Optional[str] = None
    data_dir: Optional[str] = None
    out: str = "runs"
    ks: List[int] = field(default_factory=lambda: [20])
    k_core: int = 5
    split_ratios: tuple = (0.7, 0.1, 0.2)
    synthetic: bool = False
    num_users: int = 2000
    num_items: int = 1500
    num_interactions: int = 40000
    zipf_exponent: float = 1.0
    activity_skew: float = 1.0
    num_clusters: int = 20
    affinity: float = 0.7
    cluster_zipf_exponent: float = 0.5
    angular_density: bool = False
    density_bandwidth: float = 0.2
    checkpoint: Optional[str] = None
    audit_users: List[str] = field(default_factory=list)

    @classmethod
    def from_config(cls, config: dict) -> ExperimentConfig:
        out = str(config.get("out", "runs"))
        ks = parse_int_list(config.get("ks", [20]))
        if not ks or any(k < 1 for k in ks):
            raise ImproperlyConfigured(f"K values must be >= 1, got {ks}")
        ratios = tuple(
            float(config.get(key, default))
            for key, default in (("train_ratio", 0.7), ("valid_ratio", 0.1), ("test_ratio", 0.2))
        )
        if abs(sum(ratios) - 1.0) > 1e-9:
            raise ImproperlyConfigured(f"split ratios must sum to 1, got {ratios}")
        return cls(
            train=TrainConfig.from_config(config),
            dataset=config.get("dataset"),
            data_dir=config.get("data_dir") or out,
            out=out,
            ks=ks,
            k_core=int(config.get("k_core", 5)),
            split_ratios=ratios,
            synthetic=parse_bool(config.get("synthetic", False)),
            num_users=int(config.get("num_users", 2000)),
            num_items=int(config.get("num_items", 1500)),
            num_interactions=int(config.get("num_interactions", 40000)),
            zipf_exponent=float(config.get("zipf_exponent", 1.0)),
            activity_skew=float(config.get("activity_skew", 1.0)),
            num_clusters=int(config.get("num_clusters", 20)),
            affinity=float(config.get("affinity", 0.7)),
            cluster_zipf_exponent=float(config.get("cluster_zipf_exponent", 0.5)),
            angular_density=parse_bool(config.get("angular_density", False)),
            density_bandwidth=float(config.get("density_bandwidth", 0.2)),
            checkpoint=config.get("checkpoint"),
            audit_users=[raw.strip() for raw in str(config.get("audit_users", "")).split(",") if raw.strip()],
        )


@dataclass
class LossBreakdown:
    rec: float
    align: float
    uniform: float
    l2: float
    total: float
    lambda1: float
    lambda2: float
    lam: float


@dataclass(eq=False)
class TrainBatch:
    users: np.ndarray
    pos_items: np.ndarray
    neg_items: np.ndarray
    align_users_pop: np.ndarray
    align_users_tail: np.ndarray
    align_items_pop: np.ndarray
    align_items_tail: np.ndarray
    uniform_users: np.ndarray
    uniform_items: np.ndarray

    def __len__(self) -> int:
        return int(self.users.shape[0])


@dataclass(eq=False)
class AdamState:
    m: List[np.ndarray]
    v: List[np.ndarray]
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_params(cls, params: List[np.ndarray], **kwargs) -> AdamState:
        return cls(
            m=[np.zeros_like(p) for p in params],
            v=[np.zeros_like(p) for p in params],
            **kwargs,
        )


@dataclass(eq=False)
class RankedList:
    user: int
    items: np.ndarray
    k: int

    def top(self, k: Union[int, None] = None) -> np.ndarray:
        return self.items[: (self.k if k is None else k)]

    def positions(self) -> Dict[int, int]:
        """1-based position of every ranked item."""
        return {item: pos + 1 for pos, item in enumerate(self.items.tolist())}


@dataclass
class MetricReport:
    ks: List[int]
    hr: Dict[str, float]
    ndcg: Dict[str, float]
    dp: Dict[str, Optional[float]]
    pru: Optional[float]
    group_hr: Dict[str, Dict[str, float]]
    group_ndcg: Dict[str, Dict[str, float]]
    group_exposure: Dict[str, Dict[str, float]]
    exposure_baseline: Dict[str, float]
    loss_gap: Optional[float]
    score_gap: Optional[float]
    users_evaluated: int
    users_skipped: int
    pru_evaluated: int
    pru_skipped: int
    conventions: Dict[str, str] = field(default_factory=dict)
