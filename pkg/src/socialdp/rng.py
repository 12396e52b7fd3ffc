"""Counter-based random stream derivation.

Every random draw in a run comes from a stream keyed by
``(run_seed, stage, round, ...)``. Streams are built from a ``SeedSequence``
over the key and a Philox bit generator, so a stream's output depends only on
its key and never on how many other streams were consumed before it.
"""

from __future__ import annotations

import numpy as np

# stage tags; part of the stream key, never reorder
GRAPH = 1
QUALITY = 2
PERTURB = 3
DISSEMINATE = 4
SAMPLE = 5
ADOPT = 6
SPECTRAL = 7

_MASK64 = (1 << 64) - 1


def stream(seed: int, *keys: int) -> np.random.Generator:
    """Return the generator for ``(seed, *keys)``.

    Negative seeds are folded into the unsigned 64-bit range.
    """
    entropy = [int(seed) & _MASK64, *(int(k) & _MASK64 for k in keys)]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))
