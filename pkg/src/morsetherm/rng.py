"""Counter-based random substreams.

Every batch of samples is drawn from a Philox generator keyed by
(seed, batch index), so the stream a batch sees is a pure function of
those two integers. Any assignment of batches to workers therefore
produces identical samples, and reductions over exact integer counts
are merge-order independent.
"""

import os

import numpy as np

BATCH_SIZE = 1 << 16
_MASK = (1 << 64) - 1


def substream(seed, index):
    """Independent generator for (seed, index); pure function of its key."""
    key = np.array([seed & _MASK, index & _MASK], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def batch_plan(n_samples, batch_size=BATCH_SIZE):
    """Yield (batch_index, count) pairs covering n_samples."""
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    full, rem = divmod(int(n_samples), batch_size)
    for b in range(full):
        yield b, batch_size
    if rem:
        yield full, rem


def default_worker_count():
    env = os.environ.get("MORSETHERM_WORKERS")
    if env:
        return max(1, int(env))
    return 1
