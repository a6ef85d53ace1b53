from dataclasses import dataclass

import numpy as np
import pandas as pd

from src.data.data_handling import TrialLabel


@dataclass(frozen=True)
class EerResult:
    """
    Equal error rate operating point.

    threshold is the first distinct score at which the miss rate no longer
    exceeds the false-alarm rate.
    """
    eer: float
    threshold: float
    num_targets: int
    num_nontargets: int

    @property
    def counts(self):
        return self.num_targets, self.num_nontargets

    @property
    def percent(self):
        return 100.0 * self.eer


def _split_scores(scored_trials):
    targets, nontargets = [], []
    for trial in scored_trials:
        if trial.label == TrialLabel.TARGET:
            targets.append(trial.score)
        elif trial.label == TrialLabel.NONTARGET:
            nontargets.append(trial.score)
        else:
            raise ValueError(
                f"trial ({trial.enroll_id}, {trial.test_id}) has no target/nontarget label")
    if not targets:
        raise ValueError("EER needs at least one target trial")
    if not nontargets:
        raise ValueError("EER needs at least one nontarget trial")
    return np.array(targets, dtype=np.float64), np.array(nontargets, dtype=np.float64)


def roc_points(scored_trials):
    '''
    False-alarm and miss rates at every distinct score threshold.

    A trial is accepted iff score >= threshold. The first point is the
    threshold +inf (nothing accepted).

    Returns:
    -----
        (thresholds, false_alarm, miss), each ndarray ordered by
        descending threshold
    '''
    targets, nontargets = _split_scores(scored_trials)
    thresholds = np.unique(np.concatenate([targets, nontargets]))[::-1]

    accepted_tar = len(targets) - np.searchsorted(np.sort(targets), thresholds, side='left')
    accepted_non = len(nontargets) - np.searchsorted(np.sort(nontargets), thresholds, side='left')
    false_alarm = accepted_non / len(nontargets)
    miss = (len(targets) - accepted_tar) / len(targets)

    return (np.concatenate([[np.inf], thresholds]),
            np.concatenate([[0.0], false_alarm]),
            np.concatenate([[1.0], miss]))


def compute_eer(scored_trials):
    '''
    Equal error rate from labeled scored trials.

    The miss-vs-false-alarm polyline through the distinct-threshold ROC
    points is linearly interpolated where it crosses miss = false alarm.

    Parameters:
    ------
    scored_trials: sequence of ScoredTrial
        With at least one target and one nontarget, no unknown labels

    Returns:
    -----
        EerResult
    '''
    scored_trials = list(scored_trials)
    thresholds, false_alarm, miss = roc_points(scored_trials)
    diff = miss - false_alarm
    # diff[0] = 1 and diff[-1] = -1, so a crossing always exists
    k = int(np.argmax(diff <= 0))
    if diff[k] == 0:
        eer = false_alarm[k]
    else:
        alpha = diff[k - 1] / (diff[k - 1] - diff[k])
        eer = false_alarm[k - 1] + alpha * (false_alarm[k] - false_alarm[k - 1])

    num_targets = sum(1 for t in scored_trials if t.label == TrialLabel.TARGET)
    return EerResult(
        eer=float(min(max(eer, 0.0), 1.0)),
        threshold=float(thresholds[k]),
        num_targets=num_targets,
        num_nontargets=len(scored_trials) - num_targets)


def roc_frame(scored_trials):
    thresholds, false_alarm, miss = roc_points(scored_trials)
    return pd.DataFrame({'threshold': thresholds, 'false_alarm': false_alarm, 'miss': miss})
