"""Versioned model checkpoints.

A checkpoint is a single ``.npz`` archive holding every parameter array
plus three metadata entries:

* ``__format_version__`` — integer, bumped on any layout change;
* ``__config__`` — JSON echo of the builder kwargs needed to rebuild the
  parameter object with matching shapes;
* ``__vocab_hash__`` — content hash of the vocabulary the model was
  trained against.  Loading refuses to proceed when the caller supplies a
  different hash, because item/region ids would silently mean different
  things.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import ConsistencyError, VocabMismatchError
from .student import StudentParams
from .teacher import TeacherParams

CHECKPOINT_FORMAT_VERSION = 1

_META_KEYS = ("__format_version__", "__config__", "__vocab_hash__")

__all__ = [
    "CHECKPOINT_FORMAT_VERSION",
    "save_checkpoint",
    "load_arrays",
    "load_teacher",
    "load_student",
]


def save_checkpoint(path, params, config: dict, vocab_hash: str) -> None:
    """Write ``params`` (a Teacher/Student parameter object) to ``path``."""
    arrays = {name: t.data for name, t in params.as_dict().items()}
    for key in _META_KEYS:
        if key in arrays:
            raise ConsistencyError(f"parameter name collides with metadata key {key!r}")
    payload = dict(arrays)
    payload["__format_version__"] = np.array(CHECKPOINT_FORMAT_VERSION)
    payload["__config__"] = np.array(json.dumps(config, sort_keys=True))
    payload["__vocab_hash__"] = np.array(vocab_hash)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savez(path, **payload)


def load_arrays(path, expected_vocab_hash: str | None = None):
    """Read a checkpoint; returns ``(arrays, config, vocab_hash)``."""
    with np.load(Path(path), allow_pickle=False) as z:
        if "__format_version__" not in z:
            raise ConsistencyError(f"{path}: not a model checkpoint")
        version = int(z["__format_version__"])
        if version != CHECKPOINT_FORMAT_VERSION:
            raise ConsistencyError(
                f"{path}: checkpoint format {version} unsupported "
                f"(expected {CHECKPOINT_FORMAT_VERSION})")
        config = json.loads(str(z["__config__"]))
        vocab_hash = str(z["__vocab_hash__"])
        arrays = {k: z[k] for k in z.files if k not in _META_KEYS}
    if expected_vocab_hash is not None and vocab_hash != expected_vocab_hash:
        raise VocabMismatchError(
            f"{path}: checkpoint was trained against vocabulary "
            f"{vocab_hash[:12]}… but the data on hand hashes to "
            f"{expected_vocab_hash[:12]}…; rebuild or re-train")
    return arrays, config, vocab_hash


def _restore(params, arrays, path) -> None:
    want = params.as_dict()
    missing = sorted(set(want) - set(arrays))
    extra = sorted(set(arrays) - set(want))
    if missing or extra:
        raise ConsistencyError(
            f"{path}: parameter set mismatch (missing={missing}, extra={extra})")
    for name, tensor in want.items():
        if arrays[name].shape != tensor.data.shape:
            raise ConsistencyError(
                f"{path}: shape mismatch for {name}: "
                f"{arrays[name].shape} vs {tensor.data.shape}")
        tensor.data[:] = arrays[name]


def load_teacher(path, expected_vocab_hash: str | None = None):
    """Rebuild a :class:`TeacherParams` from a checkpoint."""
    arrays, config, vocab_hash = load_arrays(path, expected_vocab_hash)
    params = TeacherParams(**config)
    _restore(params, arrays, path)
    return params, config, vocab_hash


def load_student(path, expected_vocab_hash: str | None = None):
    """Rebuild a :class:`StudentParams` from a checkpoint."""
    arrays, config, vocab_hash = load_arrays(path, expected_vocab_hash)
    params = StudentParams(**config)
    _restore(params, arrays, path)
    return params, config, vocab_hash
