"""
Versioned text format for fitted models.

    deplda-model 1
    kind global|local|front
    dim <d> [<p>]
    <block-name> <count>
    <count whitespace-separated values>
    ...

Blocks with count 0 have no value line. Values use the shortest decimal
that round-trips, so load_model(save_model(m)) is bit-exact.
"""
import math

import numpy as np

from src.data.data_handling import _data_lines, _format_float
from src.models.deplda_model import LocalModel, TrainHistory
from src.models.plda_model import GlobalModel
from src.models.preprocess import LdaTransform
from src.utils.exceptions import ModelFormatError

FORMAT_TAG = 'deplda-model'
FORMAT_VERSION = '1'


def _write_block(f, name, values):
    values = np.asarray(values, dtype=np.float64).reshape(-1)
    f.write(f"{name} {values.shape[0]}\n")
    if values.shape[0]:
        f.write(' '.join(_format_float(v) for v in values.tolist()) + '\n')


def save_model(model, path):
    '''
    Save a GlobalModel, LocalModel or LdaTransform.

    Parameters:
    ------
    model: GlobalModel | LocalModel | LdaTransform
    path: str
    '''
    with open(path, 'w', encoding='utf-8') as f:
        f.write(f"{FORMAT_TAG} {FORMAT_VERSION}\n")
        if isinstance(model, GlobalModel):
            f.write("kind global\n")
            f.write(f"dim {model.dim}\n")
            _write_block(f, 'mean', model.mean)
            _write_block(f, 'W', model.transform)
            _write_block(f, 'epsilon', model.epsilon)
        elif isinstance(model, LocalModel):
            f.write("kind local\n")
            f.write(f"dim {model.dim}\n")
            _write_block(f, 'm_diag', model.m_diag)
            _write_block(f, 'best_epoch', [model.best_epoch])
            if model.monitor_eer_at_best is not None:
                _write_block(f, 'monitor_eer', [model.monitor_eer_at_best])
            if model.history is not None:
                history = model.history
                _write_block(f, 'history_baseline', [history.baseline_objective, history.baseline_eer])
                _write_block(f, 'history_objective', history.objectives)
                _write_block(f, 'history_eer', history.monitor_eers)
        elif isinstance(model, LdaTransform):
            f.write("kind front\n")
            f.write(f"dim {model.input_dim} {model.output_dim}\n")
            _write_block(f, 'mean', model.mean)
            _write_block(f, 'projection', model.projection)
        else:
            raise TypeError(f"cannot save object of type {type(model).__name__}")


def _parse_int(token, path, line_no, what):
    try:
        value = int(token)
    except ValueError:
        raise ModelFormatError(f"invalid {what} '{token}'", path, line_no) from None
    if value < 0:
        raise ModelFormatError(f"negative {what} {value}", path, line_no)
    return value


def _read_sections(path):
    """Parse the whole file into (kind, dims, blocks); blocks map name -> (line_no, values)"""
    lines = list(_data_lines(path))
    if not lines:
        raise ModelFormatError("empty model file", path)

    line_no, fields = lines[0]
    if len(fields) != 2 or fields[0] != FORMAT_TAG:
        raise ModelFormatError(f"missing '{FORMAT_TAG} {FORMAT_VERSION}' header", path, line_no)
    if fields[1] != FORMAT_VERSION:
        raise ModelFormatError(
            f"unsupported format version '{fields[1]}', expected version '{FORMAT_VERSION}'",
            path, line_no)

    if len(lines) < 3:
        raise ModelFormatError("truncated model file (missing kind or dim line)", path)
    line_no, fields = lines[1]
    if len(fields) != 2 or fields[0] != 'kind':
        raise ModelFormatError("expected 'kind <global|local|front>'", path, line_no)
    kind = fields[1]
    line_no, fields = lines[2]
    if len(fields) not in (2, 3) or fields[0] != 'dim':
        raise ModelFormatError("expected 'dim <d> [<p>]'", path, line_no)
    dims = [_parse_int(tok, path, line_no, 'dimension') for tok in fields[1:]]
    dim_line = line_no

    blocks = {}
    pos = 3
    while pos < len(lines):
        line_no, fields = lines[pos]
        if len(fields) != 2:
            raise ModelFormatError("expected '<block-name> <count>'", path, line_no)
        name = fields[0]
        count = _parse_int(fields[1], path, line_no, 'block length')
        if name in blocks:
            raise ModelFormatError(f"duplicate block '{name}'", path, line_no)
        values = []
        pos += 1
        if count:
            if pos >= len(lines):
                raise ModelFormatError(f"block '{name}' has no values", path, line_no)
            values_line, tokens = lines[pos]
            try:
                values = [float(tok) for tok in tokens]
            except ValueError:
                raise ModelFormatError(f"unparseable number in block '{name}'", path, values_line) from None
            if len(values) != count:
                raise ModelFormatError(
                    f"block '{name}' declares {count} values but has {len(values)}", path, values_line)
            if not all(math.isfinite(v) for v in values):
                raise ModelFormatError(f"non-finite value in block '{name}'", path, values_line)
            pos += 1
        blocks[name] = (line_no, np.array(values, dtype=np.float64))
    return kind, (dims, dim_line), blocks


def _block(blocks, name, length, path, optional=False):
    if name not in blocks:
        if optional:
            return None
        raise ModelFormatError(f"missing block '{name}'", path)
    line_no, values = blocks[name]
    if length is not None and values.shape[0] != length:
        raise ModelFormatError(
            f"block '{name}' has {values.shape[0]} values, expected {length} for the declared dimension",
            path, line_no)
    return values


def load_model(path):
    '''
    Load a model written by save_model().

    Returns:
    -----
        GlobalModel, LocalModel or LdaTransform depending on the file kind
    '''
    kind, (dims, dim_line), blocks = _read_sections(path)

    if kind == 'global':
        if len(dims) != 1:
            raise ModelFormatError("global model needs a single dimension", path, dim_line)
        d = dims[0]
        model_args = (
            _block(blocks, 'mean', d, path),
            _block(blocks, 'W', d * d, path).reshape(d, d),
            _block(blocks, 'epsilon', d, path))
        try:
            return GlobalModel(*model_args)
        except ValueError as e:
            raise ModelFormatError(str(e), path) from None

    if kind == 'local':
        if len(dims) != 1:
            raise ModelFormatError("local model needs a single dimension", path, dim_line)
        d = dims[0]
        m_diag = _block(blocks, 'm_diag', d, path)
        best_epoch = _block(blocks, 'best_epoch', 1, path)[0]
        if best_epoch != int(best_epoch):
            raise ModelFormatError("best_epoch must be an integer", path, blocks['best_epoch'][0])
        monitor_eer = _block(blocks, 'monitor_eer', 1, path, optional=True)

        history = None
        baseline = _block(blocks, 'history_baseline', 2, path, optional=True)
        if baseline is not None:
            objectives = _block(blocks, 'history_objective', None, path)
            eers = _block(blocks, 'history_eer', len(objectives), path)
            history = TrainHistory(
                baseline_objective=float(baseline[0]),
                baseline_eer=float(baseline[1]),
                objectives=objectives.tolist(),
                monitor_eers=eers.tolist())
        try:
            return LocalModel(
                m_diag,
                best_epoch=int(best_epoch),
                monitor_eer_at_best=None if monitor_eer is None else float(monitor_eer[0]),
                history=history)
        except ValueError as e:
            raise ModelFormatError(str(e), path) from None

    if kind == 'front':
        if len(dims) != 2:
            raise ModelFormatError("front-end needs input and output dimensions", path, dim_line)
        d, p = dims
        if p < 1 or d < 1:
            raise ModelFormatError("front-end dimensions must be positive", path, dim_line)
        model_args = (
            _block(blocks, 'projection', p * d, path).reshape(p, d),
            _block(blocks, 'mean', d, path))
        try:
            return LdaTransform(*model_args)
        except ValueError as e:
            raise ModelFormatError(str(e), path) from None

    raise ModelFormatError(f"unknown model kind '{kind}'", path, 2)
