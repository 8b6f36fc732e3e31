from ..types import BackboneConfig


def make_recommender(config: dict):
    """Builds the recommender named by `config["backbone"]`."""
    kind = BackboneConfig.from_config(config).kind
    if kind == "lightgcn":
        from ..lightgcn import LightGCN

        return LightGCN(config=config)

    from ..bprmf import BPRMF

    return BPRMF(config=config)


def fit(split, groups, config: dict, on_epoch=None, on_improve=None):
    """Trains a recommender from `config` and returns (best EmbeddingState, epoch log)."""
    recommender = make_recommender(config)
    return recommender.fit(split, groups, on_epoch=on_epoch, on_improve=on_improve)
