"""Counter-based random streams.

Every stream is a Philox generator keyed by the run seed and a tuple of
non-negative integers (tuple index, group, purpose), so a value never
depends on the order in which streams are consumed.
"""
import numpy as np

STREAM_RASTER = 0
STREAM_POINTS = 1
STREAM_LABELS = 2
STREAM_FALSE_NEGATIVES = 3
STREAM_FALSE_POSITIVES = 4


def stream(seed, *key):
    sequence = np.random.SeedSequence(
        entropy=int(seed) & (2 ** 64 - 1), spawn_key=tuple(int(k) for k in key)
    )
    return np.random.Generator(np.random.Philox(sequence))
