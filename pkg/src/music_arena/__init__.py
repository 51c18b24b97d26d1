"""Arena-style evaluation suite for generative music systems.

Subpackages cover the full evaluation pipeline: corpus preparation and the
dataset census (:mod:`.corpus`, :mod:`.audio`), prompt generation
(:mod:`.prompts`), objective metrics over ingested features
(:mod:`.metrics`), the pairwise human-evaluation service and its durable
log (:mod:`.store`, :mod:`.service`), ELO leaderboards (:mod:`.ratings`),
weighted inter-annotator agreement (:mod:`.agreement`), and a reference
bottleneck residual adapter kernel (:mod:`.adapter`).
"""

__version__ = "0.1.0"
