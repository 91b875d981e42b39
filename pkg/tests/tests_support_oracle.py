"""Shared oracle stand-ins for evaluation and CLI tests."""

import numpy as np

from logan.colors import CLASSES, canonical_shade


class CanonicalStubBundle:
    """Bundle-shaped object that always emits perfect canonical-shade icons."""

    checkpoint_id = "oracle-canonical"
    generator_steps = 0
    critic_steps = 0
    q_steps = 0

    def generate(self, class_idx, count, seed):
        shade = canonical_shade(CLASSES[class_idx])
        return np.full((count, 32, 32, 3), shade, dtype=np.uint8)
