"""Named, counter-based random streams.

Every consumer of randomness inside a run (environment, behavior policy,
replay sampling, posterior sampling, relabeling, bootstrap-action draws,
each evaluation episode) gets its own stream derived from the experiment
seed and a stream name. Streams never interact, so adding draws to one
consumer cannot shift any other consumer's sequence.
"""

from __future__ import annotations

import zlib

import numpy as np


def named_stream(seed: int, name: str) -> np.random.Generator:
    """A Philox generator keyed by (seed, name)."""
    token = zlib.crc32(name.encode("utf-8"))
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, token])))
