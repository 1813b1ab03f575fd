"""Domain types and random initial conditions for three-speed ballistic annihilation.

Particles sit on a half-line or full line, each with speed -1, 0 or +1.
Speed 0 has probability p, speeds -1 and +1 each have probability
pbar = (1 - p)/2.  In continuous mode the inter-particle gaps are i.i.d.
unit-mean exponentials (a Poisson process of intensity 1); in lattice mode
particles occupy consecutive integer sites, one per site.

Randomness is counter-based: every trial owns a Philox stream keyed by
(master_seed, trial_index), so trials are reproducible and embarrassingly
parallel regardless of scheduling.  Exponential variates are produced by
inverse CDF (-log1p(-u)) rather than ziggurat so that the exact byte
sequence is reproducible anywhere numpy runs.
"""

from __future__ import annotations

import enum
import io
from dataclasses import dataclass

import numpy as np


class Speed(enum.IntEnum):
    LEFT = -1
    STILL = 0
    RIGHT = 1


class Mode(enum.Enum):
    CONTINUOUS = "continuous"
    LATTICE = "lattice"


class Side(enum.Enum):
    HALF_LINE = "half_line"
    FULL_LINE = "full_line"


@dataclass(frozen=True)
class ModelParams:
    """Free parameters of the model: p is the only numeric knob."""

    p: float
    mode: Mode = Mode.CONTINUOUS
    side: Side = Side.HALF_LINE

    def __post_init__(self):
        if not (0.0 <= self.p <= 1.0):
            raise ValueError(f"p must lie in [0, 1], got {self.p}")

    @property
    def pbar(self) -> float:
        """Probability of each moving speed, (1 - p)/2."""
        return (1.0 - self.p) / 2.0


@dataclass(frozen=True)
class Particle:
    """One particle; index is the 1-based ordinal in its configuration."""

    index: int
    position: float
    speed: Speed


@dataclass
class Configuration:
    """An ordered initial condition.

    positions are strictly increasing; in lattice mode they are integer
    sites.  forced_origin marks a conditioned stationary particle at 0
    (full-line only), inserted by sample_fullline(condition_origin=True).
    """

    mode: Mode
    side: Side
    positions: np.ndarray
    speeds: np.ndarray
    forced_origin: bool = False

    def __post_init__(self):
        self.positions = np.asarray(self.positions)
        self.speeds = np.asarray(self.speeds, dtype=np.int8)
        if self.positions.shape != self.speeds.shape:
            raise ValueError("positions and speeds must have equal length")
        if self.size > 1 and not np.all(np.diff(self.positions) > 0):
            raise ValueError("positions must be strictly increasing")
        if self.mode is Mode.LATTICE:
            if not np.issubdtype(self.positions.dtype, np.integer):
                raise ValueError("lattice positions must be integers")
        else:
            self.positions = np.asarray(self.positions, dtype=np.float64)

    @property
    def size(self) -> int:
        return int(self.positions.shape[0])

    def particles(self) -> list[Particle]:
        return [
            Particle(i + 1, float(x), Speed(int(s)))
            for i, (x, s) in enumerate(zip(self.positions, self.speeds))
        ]

    def to_csv(self) -> str:
        """Serialize as `index,position,speed` rows (positions round-trip exactly)."""
        buf = io.StringIO()
        buf.write("index,position,speed\n")
        lattice = self.mode is Mode.LATTICE
        for i in range(self.size):
            pos = int(self.positions[i]) if lattice else f"{self.positions[i]:.17g}"
            buf.write(f"{i + 1},{pos},{int(self.speeds[i])}\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, mode: Mode = Mode.CONTINUOUS,
                 side: Side = Side.HALF_LINE) -> "Configuration":
        rows = [ln for ln in text.strip().splitlines()[1:] if ln]
        pos = []
        spd = []
        for ln in rows:
            _, x, s = ln.split(",")
            pos.append(int(x) if mode is Mode.LATTICE else float(x))
            spd.append(int(s))
        dtype = np.int64 if mode is Mode.LATTICE else np.float64
        return cls(mode, side, np.asarray(pos, dtype=dtype),
                   np.asarray(spd, dtype=np.int8))


# ---------------------------------------------------------------------------
# Deterministic stream derivation
# ---------------------------------------------------------------------------

_U64 = np.uint64


class RngStream:
    """A single-consumer uniform stream keyed by (master_seed, trial_index).

    The Philox key holds (master_seed, trial_index); the counter's upper
    words hold a `domain` pair so that independent substreams (e.g. the two
    sides of a full-line sample, or distinct estimators sharing one trial
    grid) never overlap.  Equal (master_seed, trial_index, domain) always
    reproduces the identical variate sequence.
    """

    def __init__(self, master_seed: int, trial_index: int,
                 domain: tuple[int, ...] = ()):
        if len(domain) > 2:
            raise ValueError("domain depth is limited to 2")
        self.master_seed = int(master_seed)
        self.trial_index = int(trial_index)
        self.domain = tuple(int(d) for d in domain)
        d1 = self.domain[0] if len(self.domain) > 0 else 0
        d2 = self.domain[1] if len(self.domain) > 1 else 0
        counter = [0, d1, d2, 0]
        key = [self.master_seed & 0xFFFFFFFFFFFFFFFF,
               self.trial_index & 0xFFFFFFFFFFFFFFFF]
        self._gen = np.random.Generator(np.random.Philox(counter=counter, key=key))

    def substream(self, *ids: int) -> "RngStream":
        """Fresh stream with the same key and a distinct counter domain."""
        return RngStream(self.master_seed, self.trial_index, self.domain + ids)

    def uniforms(self, n: int) -> np.ndarray:
        return self._gen.random(n)

    def exponential_gaps(self, n: int) -> np.ndarray:
        """Unit-mean exponentials by inverse CDF (platform-stable)."""
        return -np.log1p(-self._gen.random(n))


def derive_stream(master_seed: int, trial_index: int) -> RngStream:
    """Deterministic, collision-free per-trial stream."""
    return RngStream(master_seed, trial_index)


def speeds_from_uniforms(u: np.ndarray, p: float) -> np.ndarray:
    """Map uniforms to speeds: [0,pbar) -> -1, [pbar,pbar+p) -> 0, rest -> +1."""
    lo = (1.0 - p) / 2.0
    hi = (1.0 + p) / 2.0
    return np.where(u < lo, -1, np.where(u < hi, 0, 1)).astype(np.int8)


# ---------------------------------------------------------------------------
# Samplers
# ---------------------------------------------------------------------------

def sample_halfline(params: ModelParams, k: int, stream: RngStream) -> Configuration:
    """Sample k particles on (0, inf).

    Continuous mode consumes 2k uniforms, interleaved (gap, speed) per
    particle, so that a k'-prefix of the same stream yields exactly the
    first k' particles.  Lattice mode consumes one uniform per particle.
    """
    if k < 1:
        raise ValueError("cannot sample an empty configuration (k >= 1 required)")
    if params.mode is Mode.LATTICE:
        u = stream.uniforms(k)
        positions = np.arange(1, k + 1, dtype=np.int64)
        speeds = speeds_from_uniforms(u, params.p)
    else:
        u = stream.uniforms(2 * k)
        gaps = -np.log1p(-u[0::2])
        positions = np.cumsum(gaps)
        speeds = speeds_from_uniforms(u[1::2], params.p)
    return Configuration(params.mode, Side.HALF_LINE, positions, speeds)


def sample_fullline(params: ModelParams, k_left: int, k_right: int,
                    condition_origin: bool, stream: RngStream) -> Configuration:
    """Two independent half-line samples, the left one reflected through 0.

    With condition_origin a stationary particle is placed at 0; by the
    independence of Poisson locations and speeds this realizes conditioning
    on a stationary particle at the origin.
    """
    if k_left < 1 or k_right < 1:
        raise ValueError("k_left and k_right must be >= 1")
    half = ModelParams(params.p, params.mode, Side.HALF_LINE)
    right = sample_halfline(half, k_right, stream.substream(0))
    left = sample_halfline(half, k_left, stream.substream(1))

    left_pos = -left.positions[::-1]
    left_spd = (-left.speeds[::-1]).astype(np.int8)
    if condition_origin:
        zero = np.asarray([0], dtype=right.positions.dtype)
        positions = np.concatenate([left_pos, zero, right.positions])
        speeds = np.concatenate([left_spd, np.asarray([0], dtype=np.int8),
                                 right.speeds])
    else:
        positions = np.concatenate([left_pos, right.positions])
        speeds = np.concatenate([left_spd, right.speeds])
    return Configuration(params.mode, Side.FULL_LINE, positions, speeds,
                         forced_origin=condition_origin)
