from abc import ABC, abstractmethod
from dataclasses import dataclass
from enum import Enum
import time

import numpy as np

from src.data.data_handling import ScoredTrial
from src.models.plda_model import enroll_posterior, log_gaussian, log_marginal, project
from src.models.preprocess import LnMode, apply_front_end
from src.utils.exceptions import DataFormatError, ScorerConfigError


class Variant(str, Enum):
    PLDA = 'plda'
    DEPLDA = 'deplda'


@dataclass(frozen=True, eq=False)
class ScorerConfig:
    """
    Everything needed to score trials.

    Parameters:
    ----------
    variant : Variant
        plda or deplda
    ln_mode : LnMode
        none, full or partial (partial requires deplda)
    global_model : GlobalModel
    local_model : LocalModel, optional
        Required for deplda
    front : LdaTransform, optional
        Centering/LDA front-end applied before LN and projection
    """
    variant: Variant
    ln_mode: LnMode
    global_model: object
    local_model: object = None
    front: object = None

    def __post_init__(self):
        try:
            object.__setattr__(self, 'variant', Variant(self.variant))
            object.__setattr__(self, 'ln_mode', LnMode(self.ln_mode))
        except ValueError as e:
            raise ScorerConfigError(str(e)) from None

        dim = self.global_model.dim
        if self.variant == Variant.DEPLDA:
            if self.local_model is None:
                raise ScorerConfigError("deplda scoring requires a local model")
            if self.local_model.dim != dim:
                raise ScorerConfigError(
                    f"local model dimension {self.local_model.dim} does not match global dimension {dim}")
        if self.ln_mode == LnMode.PARTIAL and self.variant != Variant.DEPLDA:
            raise ScorerConfigError("partial length normalization requires the deplda variant")
        if self.front is not None and self.front.output_dim != dim:
            raise ScorerConfigError(
                f"front-end output dimension {self.front.output_dim} does not match global dimension {dim}")


@dataclass(frozen=True, eq=False)
class PreparedVectors:
    """
    Vectors mapped into model space.

    ``global_set`` feeds enrollment and normalization; ``local_values`` (same
    row order) feeds the prediction component.
    """
    global_set: object
    local_values: np.ndarray


def normalized_likelihood(global_model, post_mean, post_var, x_pred, x_norm):
    '''
    Log NL score: log N(x_pred; post_mean, 1 + post_var) - log p_g(x_norm),
    summed over dimensions. All arguments broadcast row-wise.
    '''
    numerator = log_gaussian(x_pred, post_mean, 1.0 + post_var).sum(axis=-1)
    return numerator - log_marginal(global_model, x_norm)


class TrialScorer(ABC):
    """
    Abstract base class for trial scorers.

    Implements the shared pipeline (front-end -> LN -> projection,
    enrollment, trial resolution); subclasses supply the per-trial score.
    """

    def __init__(self, name, config):
        self.name = name
        self.config = config
        self.runtime = 0
        self.start_time = None
        self.num_scored = 0

    @abstractmethod
    def score_batch(self, post_mean, post_var, x_global, x_local):
        """Scores for row-aligned posterior parameters and projected test vectors"""
        pass

    def start_timer(self):
        self.start_time = time.time()

    def stop_timer(self):
        if self.start_time:
            self.runtime = time.time() - self.start_time

    def prepare(self, vector_set):
        '''
        Map raw vectors into model space for both scoring components.

        Returns:
        -----
            PreparedVectors
        '''
        config = self.config
        normalize = config.ln_mode in (LnMode.FULL, LnMode.PARTIAL)
        processed = apply_front_end(vector_set, config.front, normalize=normalize)
        global_set = processed.with_values(project(config.global_model, processed.values))

        if config.ln_mode == LnMode.PARTIAL:
            raw = apply_front_end(vector_set, config.front, normalize=False)
            local_values = project(config.global_model, raw.values)
        else:
            local_values = global_set.values
        return PreparedVectors(global_set, local_values)

    def enroll(self, enroll_map, prepared, enroll_ids=None):
        '''
        Enrollment posteriors for the requested enroll ids (all by default).

        Returns:
        -----
            dict enroll_id -> EnrollPosterior
        '''
        global_set = prepared.global_set
        posteriors = {}
        for enroll_id in (enroll_map.models if enroll_ids is None else enroll_ids):
            if enroll_id not in enroll_map:
                raise ValueError(f"unknown enroll id '{enroll_id}'")
            utterances = enroll_map[enroll_id]
            missing = [uid for uid in utterances if uid not in global_set]
            if missing:
                raise ValueError(
                    f"enroll id '{enroll_id}' references unknown utterance '{missing[0]}'")
            rows = [global_set.position(uid) for uid in utterances]
            posteriors[enroll_id] = enroll_posterior(self.config.global_model, global_set.values[rows])
        return posteriors

    def score_trials(self, trials, posteriors, prepared):
        '''
        Score every trial, in trial-list order.

        Returns:
        -----
            list of ScoredTrial
        '''
        global_set = prepared.global_set
        rows = []
        for line_no, trial in enumerate(trials, start=1):
            if trial.enroll_id not in posteriors:
                raise DataFormatError(f"unknown enroll id '{trial.enroll_id}'", line=line_no)
            if trial.test_id not in global_set:
                raise DataFormatError(f"unknown test utterance '{trial.test_id}'", line=line_no)
            rows.append(global_set.position(trial.test_id))
        if not rows:
            return []

        post_mean = np.array([posteriors[t.enroll_id].mean for t in trials])
        post_var = np.array([posteriors[t.enroll_id].variance for t in trials])
        scores = self.score_batch(post_mean, post_var, global_set.values[rows], prepared.local_values[rows])
        self.num_scored += len(rows)
        return [ScoredTrial(t.enroll_id, t.test_id, t.label, float(s)) for t, s in zip(trials, scores)]

    def print_summary(self):
        config = self.config
        print(f"\n{self.name} scoring summary:")
        print(f"Variant: {config.variant.value}, length normalization: {config.ln_mode.value}")
        print(f"Model dimension: {config.global_model.dim}")
        print(f"Trials scored: {self.num_scored}")
        print(f"Scoring time: {self.runtime:.2f} seconds")
