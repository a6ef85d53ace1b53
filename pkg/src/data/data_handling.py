import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from src.utils.exceptions import DataFormatError

# Class-id placeholder for unlabeled (test-side) vectors
ABSENT_CLASS = '-'


def _is_token(text):
    return isinstance(text, str) and text != '' and len(text.split()) == 1 and text == text.strip()


def _format_float(value):
    # repr() of a Python float is the shortest decimal that round-trips
    return repr(float(value))


@dataclass(frozen=True, eq=False)
class VectorSet:
    """
    Labeled collection of fixed-dimension utterance vectors.

    Parameters:
    ----------
    ids : sequence of str
        Unique utterance ids (whitespace-free tokens)
    class_ids : sequence of str or None
        Class (speaker) id per record, None when absent
    values : array-like, shape (N, d)
        Finite 64-bit vectors, one row per record
    """
    ids: tuple
    class_ids: tuple
    values: np.ndarray
    _positions: dict = field(init=False, repr=False)
    _class_index: dict = field(init=False, repr=False)

    def __post_init__(self):
        ids = tuple(self.ids)
        class_ids = tuple(self.class_ids)
        values = np.array(self.values, dtype=np.float64)

        if values.ndim != 2:
            raise ValueError(f"values must be a 2-D array, got {values.ndim} dimension(s)")
        if values.shape[0] == 0:
            raise ValueError("a VectorSet must contain at least one record")
        if values.shape[1] < 1:
            raise ValueError("vector dimension must be at least 1")
        if len(ids) != values.shape[0] or len(class_ids) != values.shape[0]:
            raise ValueError(
                f"got {len(ids)} ids and {len(class_ids)} class ids for {values.shape[0]} vectors")
        if not np.all(np.isfinite(values)):
            bad = int(np.argwhere(~np.isfinite(values))[0][0])
            raise ValueError(f"non-finite value in vector '{ids[bad]}'")

        positions = {}
        class_index = {}
        for pos, (uid, cid) in enumerate(zip(ids, class_ids)):
            if not _is_token(uid):
                raise ValueError(f"invalid utterance id {uid!r}")
            if uid in positions:
                raise ValueError(f"duplicate utterance id '{uid}'")
            positions[uid] = pos
            if cid is not None:
                if not _is_token(cid) or cid == ABSENT_CLASS:
                    raise ValueError(f"invalid class id {cid!r} for '{uid}'")
                class_index.setdefault(cid, []).append(pos)

        values.setflags(write=False)
        object.__setattr__(self, 'ids', ids)
        object.__setattr__(self, 'class_ids', class_ids)
        object.__setattr__(self, 'values', values)
        object.__setattr__(self, '_positions', positions)
        object.__setattr__(self, '_class_index', {k: tuple(v) for k, v in class_index.items()})

    def __len__(self):
        return self.values.shape[0]

    @property
    def dim(self):
        return self.values.shape[1]

    @property
    def class_index(self):
        """Mapping class_id -> record positions, in first-appearance order"""
        return dict(self._class_index)

    @property
    def classes(self):
        return list(self._class_index)

    @property
    def num_classes(self):
        return len(self._class_index)

    @property
    def is_labeled(self):
        return all(cid is not None for cid in self.class_ids)

    def __contains__(self, utterance_id):
        return utterance_id in self._positions

    def position(self, utterance_id):
        try:
            return self._positions[utterance_id]
        except KeyError:
            raise KeyError(f"unknown utterance id '{utterance_id}'") from None

    def vector(self, utterance_id):
        return self.values[self.position(utterance_id)]

    def class_labels(self):
        """
        Integer class label per record (index into ``classes``).

        Raises ValueError if any record is unlabeled.
        """
        if not self.is_labeled:
            missing = next(uid for uid, cid in zip(self.ids, self.class_ids) if cid is None)
            raise ValueError(f"record '{missing}' has no class label")
        lookup = {cid: k for k, cid in enumerate(self._class_index)}
        return np.array([lookup[cid] for cid in self.class_ids], dtype=np.intp)

    def subset(self, utterance_ids):
        rows = [self.position(uid) for uid in utterance_ids]
        return VectorSet(
            [self.ids[r] for r in rows],
            [self.class_ids[r] for r in rows],
            self.values[rows])

    def with_values(self, values):
        """Same records, new vectors (the dimension may change)"""
        return VectorSet(self.ids, self.class_ids, values)


class TrialLabel(str, Enum):
    TARGET = 'target'
    NONTARGET = 'nontarget'
    UNKNOWN = 'unknown'


@dataclass(frozen=True)
class Trial:
    enroll_id: str
    test_id: str
    label: TrialLabel = TrialLabel.UNKNOWN


@dataclass(frozen=True)
class TrialList:
    """Ordered sequence of verification trials"""
    entries: tuple

    def __post_init__(self):
        object.__setattr__(self, 'entries', tuple(self.entries))

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __getitem__(self, index):
        return self.entries[index]

    @property
    def is_labeled(self):
        return all(t.label != TrialLabel.UNKNOWN for t in self.entries)


@dataclass(frozen=True)
class EnrollMap:
    """Mapping enroll_id -> non-empty tuple of enrollment utterance ids"""
    models: dict

    def __post_init__(self):
        models = {}
        for enroll_id, utterances in dict(self.models).items():
            utterances = tuple(utterances)
            if not _is_token(enroll_id):
                raise ValueError(f"invalid enroll id {enroll_id!r}")
            if not utterances:
                raise ValueError(f"enroll id '{enroll_id}' has no utterances")
            models[enroll_id] = utterances
        object.__setattr__(self, 'models', models)

    def __len__(self):
        return len(self.models)

    def __contains__(self, enroll_id):
        return enroll_id in self.models

    def __getitem__(self, enroll_id):
        return self.models[enroll_id]

    def check_against(self, vector_set):
        """Raise ValueError naming the first utterance id missing from ``vector_set``"""
        for enroll_id, utterances in self.models.items():
            for uid in utterances:
                if uid not in vector_set:
                    raise ValueError(
                        f"enroll id '{enroll_id}' references unknown utterance '{uid}'")


@dataclass(frozen=True)
class ScoredTrial:
    enroll_id: str
    test_id: str
    label: TrialLabel
    score: float

    def __post_init__(self):
        if not math.isfinite(self.score):
            raise ValueError(
                f"non-finite score for trial ({self.enroll_id}, {self.test_id})")


def _data_lines(path):
    """Yield (line_number, fields) for every non-blank line of a UTF-8 text file"""
    with open(path, 'r', encoding='utf-8') as f:
        for line_no, line in enumerate(f, start=1):
            fields = line.split()
            if fields:
                yield line_no, fields


def read_vectors(path):
    '''
    Read a vector set from a text file.

    Each non-empty line is ``<utterance_id> <class_id> <v1> ... <vd>``,
    with ``-`` standing for an absent class id.

    Parameters:
    ------
    path: str
        Path to the vector file

    Returns:
    -----
        VectorSet
    '''
    ids, class_ids, rows = [], [], []
    first_seen = {}
    dim = None
    for line_no, fields in _data_lines(path):
        if len(fields) < 3:
            raise DataFormatError(
                "expected '<utterance_id> <class_id> <v1> ... <vd>'", path, line_no)
        uid, cid = fields[0], fields[1]
        try:
            values = [float(tok) for tok in fields[2:]]
        except ValueError:
            bad = next(tok for tok in fields[2:] if not _parses_as_float(tok))
            raise DataFormatError(f"unparseable number '{bad}'", path, line_no) from None
        if not all(math.isfinite(v) for v in values):
            raise DataFormatError("non-finite value", path, line_no)
        if dim is None:
            dim = len(values)
        elif len(values) != dim:
            raise DataFormatError(
                f"dimension {len(values)} does not match dimension {dim} of earlier lines",
                path, line_no)
        if uid in first_seen:
            raise DataFormatError(
                f"duplicate utterance id '{uid}' (first seen on line {first_seen[uid]})",
                path, line_no)
        first_seen[uid] = line_no
        ids.append(uid)
        class_ids.append(None if cid == ABSENT_CLASS else cid)
        rows.append(values)

    if not ids:
        raise DataFormatError("file contains no vectors", path)
    return VectorSet(ids, class_ids, np.array(rows, dtype=np.float64))


def _parses_as_float(token):
    try:
        float(token)
        return True
    except ValueError:
        return False


def write_vectors(vector_set, path):
    '''
    Write a vector set so that read_vectors() reproduces it bit-exactly.

    Parameters:
    ------
    vector_set: VectorSet
        The set to save
    path: str
        Output path
    '''
    if len(vector_set) == 0:
        raise ValueError("cannot write an empty vector set")
    with open(path, 'w', encoding='utf-8') as f:
        for uid, cid, row in zip(vector_set.ids, vector_set.class_ids, vector_set.values.tolist()):
            label = ABSENT_CLASS if cid is None else cid
            f.write(f"{uid} {label} {' '.join(_format_float(v) for v in row)}\n")


def read_trials(path):
    '''
    Read a trial list: ``<enroll_id> <test_utterance_id> [target|nontarget]`` per line.

    Returns:
    -----
        TrialList in file order
    '''
    entries = []
    for line_no, fields in _data_lines(path):
        if len(fields) not in (2, 3):
            raise DataFormatError(
                "expected '<enroll_id> <test_utterance_id> [target|nontarget]'", path, line_no)
        label = TrialLabel.UNKNOWN
        if len(fields) == 3:
            if fields[2] not in (TrialLabel.TARGET.value, TrialLabel.NONTARGET.value):
                raise DataFormatError(f"invalid trial label '{fields[2]}'", path, line_no)
            label = TrialLabel(fields[2])
        entries.append(Trial(fields[0], fields[1], label))

    if not entries:
        raise DataFormatError("file contains no trials", path)
    return TrialList(entries)


def write_trials(trials, path):
    with open(path, 'w', encoding='utf-8') as f:
        for trial in trials:
            if trial.label == TrialLabel.UNKNOWN:
                f.write(f"{trial.enroll_id} {trial.test_id}\n")
            else:
                f.write(f"{trial.enroll_id} {trial.test_id} {trial.label.value}\n")


def read_enroll_map(path):
    '''
    Read an enrollment map: ``<enroll_id> <utt_1> ... <utt_n>`` per line.

    Returns:
    -----
        EnrollMap
    '''
    models = {}
    for line_no, fields in _data_lines(path):
        if len(fields) < 2:
            raise DataFormatError(
                "expected '<enroll_id> <utterance_id> ...'", path, line_no)
        if fields[0] in models:
            raise DataFormatError(f"duplicate enroll id '{fields[0]}'", path, line_no)
        models[fields[0]] = fields[1:]

    if not models:
        raise DataFormatError("file contains no enrollment entries", path)
    return EnrollMap(models)


def write_enroll_map(enroll_map, path):
    with open(path, 'w', encoding='utf-8') as f:
        for enroll_id, utterances in enroll_map.models.items():
            f.write(f"{enroll_id} {' '.join(utterances)}\n")


def write_scores(scored_trials, path):
    '''
    Write one ``<enroll_id> <test_utterance_id> <score>`` line per trial,
    scores with 17 significant digits.
    '''
    with open(path, 'w', encoding='utf-8') as f:
        for trial in scored_trials:
            f.write(f"{trial.enroll_id} {trial.test_id} {trial.score:.17g}\n")


def read_scores(path):
    '''
    Read a score file written by write_scores().

    Returns:
    -----
        list of ScoredTrial with unknown labels
    '''
    scored = []
    for line_no, fields in _data_lines(path):
        if len(fields) != 3:
            raise DataFormatError(
                "expected '<enroll_id> <test_utterance_id> <score>'", path, line_no)
        try:
            score = float(fields[2])
        except ValueError:
            raise DataFormatError(f"unparseable score '{fields[2]}'", path, line_no) from None
        if not math.isfinite(score):
            raise DataFormatError("non-finite score", path, line_no)
        scored.append(ScoredTrial(fields[0], fields[1], TrialLabel.UNKNOWN, score))

    if not scored:
        raise DataFormatError("file contains no scores", path)
    return scored


def label_scores(scored_trials, trials):
    '''
    Attach trial-list labels to scores read from a score file.

    Scores are matched to trials by (enroll_id, test_utterance_id).

    Returns:
    -----
        list of ScoredTrial in trial-list order
    '''
    by_key = {(s.enroll_id, s.test_id): s.score for s in scored_trials}
    labeled = []
    for line_no, trial in enumerate(trials, start=1):
        key = (trial.enroll_id, trial.test_id)
        if key not in by_key:
            raise DataFormatError(
                f"no score for trial '{trial.enroll_id} {trial.test_id}'", line=line_no)
        labeled.append(ScoredTrial(trial.enroll_id, trial.test_id, trial.label, by_key[key]))
    return labeled
