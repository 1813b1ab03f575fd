"""Three-speed ballistic annihilation laboratory.

Monte Carlo estimators, an exact rational-polynomial engine, and a
deterministic event-driven collision engine for the particle system where
i.i.d. speeds in {-1, 0, +1} annihilate on contact.
"""

from .model import (Configuration, Mode, ModelParams, Particle, RngStream,
                    Side, Speed, derive_stream, sample_fullline,
                    sample_halfline)
from .engine import (CollisionEvent, Resolution, count_survivors, finality,
                     resolve, resolve_oracle, restrict)

__all__ = [
    "Configuration", "Mode", "ModelParams", "Particle", "RngStream", "Side",
    "Speed", "derive_stream", "sample_fullline", "sample_halfline",
    "CollisionEvent", "Resolution", "count_survivors", "finality", "resolve",
    "resolve_oracle", "restrict",
]
