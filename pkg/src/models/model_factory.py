from src.models.base_model import Variant
from src.models.deplda_scorer import DePldaScorer
from src.models.plda_scorer import PldaScorer


def create_scorer(config):
    """
    Factory function to create the scorer for a configuration.

    Parameters:
    ----------
    config : ScorerConfig
        Validated scorer configuration

    Returns:
    -------
    TrialScorer
        PldaScorer or DePldaScorer
    """
    if config.variant == Variant.PLDA:
        return PldaScorer(config)
    elif config.variant == Variant.DEPLDA:
        return DePldaScorer(config)
    else:
        raise ValueError(f"Unknown scorer variant: {config.variant}")
