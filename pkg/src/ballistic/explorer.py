"""Finitary window statistics and the block-renewal exploration.

N(i, j) is the surviving-still minus surviving-left count of the restriction
to particles i..j.  When the prefix restriction has no surviving right mover
the count is superadditive across a split, which makes the following
exploration well-behaved: repeatedly discover k fresh particles, then extend
one particle at a time until the discovered region's resolution again has no
surviving right mover.  The per-block statistics are then i.i.d. copies of
the k-window count, and a first block of k survivors plus partial sums
staying above k certify that the origin is never reached in the explored
realization.

Extensions must be re-resolved from scratch after every appended particle: a
fresh left mover can preempt collisions deep inside the discovered region
and unleash a right mover, so no survivor-stack shortcut is sound.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from . import _kernels
from ._kernels import FATE_LEFT, FATE_RIGHT, FATE_STILL
from .engine import count_survivors, resolve, restrict
from .estimators import SUB_ENK, Estimate, parallel_sum, sample_arrays
from .model import Configuration, Mode, ModelParams, RngStream, Side, \
    derive_stream, speeds_from_uniforms


def compute_N(config: Configuration, i: int, j: int) -> int:
    """Surviving still minus surviving left in the restriction to i..j (1-based)."""
    res = resolve(restrict(config, i, j))
    n_left, n_still, _ = count_survivors(res)
    return n_still - n_left


def check_superadditivity(config: Configuration, k: int, l: int) -> bool | None:
    """N(1,l) >= N(1,k) + N(k+1,l), applicable when the k-prefix restriction
    has no surviving right mover.  Returns None when not applicable."""
    if not (1 <= k < l <= config.size):
        raise ValueError("need 1 <= k < l <= size")
    prefix = resolve(restrict(config, 1, k))
    if count_survivors(prefix)[2] > 0:
        return None
    return compute_N(config, 1, l) >= compute_N(config, 1, k) + compute_N(config, k + 1, l)


@dataclass
class ExplorationTrace:
    block_size: int
    K: tuple[int, ...]
    N_tilde: tuple[int, ...]
    extended_by: tuple[int, ...]
    truncated: bool
    positions: np.ndarray
    speeds: np.ndarray

    @property
    def partial_sums(self) -> tuple[int, ...]:
        out = []
        acc = 0
        for n in self.N_tilde:
            acc += n
            out.append(acc)
        return tuple(out)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("iter,K,N_tilde,extended_by,truncated\n")
        for i, (kk, nt, eb) in enumerate(zip(self.K, self.N_tilde,
                                             self.extended_by), start=1):
            buf.write(f"{i},{kk},{nt},{eb},{int(self.truncated)}\n")
        return buf.getvalue()


class _LazyParticles:
    """Grow a configuration particle by particle from one stream.

    Consumes the stream exactly like sample_halfline: interleaved
    (gap, speed) uniform pairs in continuous mode, one speed uniform per
    particle on the lattice, so a discovered prefix is bit-identical to a
    bulk sample from the same stream.
    """

    _BLOCK = 2048

    def __init__(self, p: float, lattice: bool, stream: RngStream, cap: int = 64):
        self.p = p
        self.lattice = lattice
        self.stream = stream
        self.pos = np.empty(cap, np.int64 if lattice else np.float64)
        self.spd = np.empty(cap, np.int8)
        self.n = 0
        self._last = 0.0

    def ensure(self, n: int):
        while self.n < n:
            take = max(self._BLOCK, n - self.n)
            if self.n + take > self.pos.shape[0]:
                grow = max(2 * self.pos.shape[0], self.n + take)
                self.pos = np.resize(self.pos, grow)
                self.spd = np.resize(self.spd, grow)
            if self.lattice:
                u = self.stream.uniforms(take)
                self.pos[self.n:self.n + take] = np.arange(
                    self.n + 1, self.n + take + 1, dtype=np.int64)
                self.spd[self.n:self.n + take] = speeds_from_uniforms(u, self.p)
            else:
                u = self.stream.uniforms(2 * take)
                gaps = -np.log1p(-u[0::2])
                self.pos[self.n:self.n + take] = self._last + np.cumsum(gaps)
                self._last = self.pos[self.n + take - 1]
                self.spd[self.n:self.n + take] = speeds_from_uniforms(u[1::2], self.p)
            self.n += take


def explore_blocks(params: ModelParams, k: int, n_iters: int, stream: RngStream,
                   extension_budget: int = 10 ** 6) -> ExplorationTrace:
    """Run the block-renewal exploration for n_iters iterations.

    Each iteration discovers k particles, records the block-only count, then
    extends until the discovered region has no surviving right mover.  An
    iteration whose extension exhausts the budget is dropped and the trace is
    flagged truncated (such traces are excluded from i.i.d. statistics).
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    lattice = params.mode is Mode.LATTICE
    gen = _LazyParticles(params.p, lattice, stream)
    bufs = _kernels.make_buffers(max(4 * k, 256), lattice)
    block_bufs = _kernels.make_buffers(k, lattice)

    Ks: list[int] = []
    Ns: list[int] = []
    exts: list[int] = []
    truncated = False
    base = 0
    for _ in range(n_iters):
        gen.ensure(base + k)
        _kernels.resolve_arrays(gen.pos[base:base + k], gen.spd[base:base + k],
                                lattice, block_bufs)
        f = block_bufs["fate"][:k]
        n_tilde = int(np.count_nonzero(f == FATE_STILL)
                      - np.count_nonzero(f == FATE_LEFT))
        m = base + k
        ext = 0
        while True:
            if bufs["fate"].shape[0] < m + 1:
                bufs = _kernels.make_buffers(2 * m, lattice)
            _kernels.resolve_arrays(gen.pos[:m], gen.spd[:m], lattice, bufs)
            if not (bufs["fate"][:m] == FATE_RIGHT).any():
                break
            if ext >= extension_budget:
                truncated = True
                break
            gen.ensure(m + 1)
            m += 1
            ext += 1
        if truncated:
            break
        Ks.append(m)
        Ns.append(n_tilde)
        exts.append(ext)
        base = m

    total = Ks[-1] if Ks else 0
    return ExplorationTrace(k, tuple(Ks), tuple(Ns), tuple(exts), truncated,
                            gen.pos[:total].copy(), gen.spd[:total].copy())


def survival_certificate(trace: ExplorationTrace, k: int) -> bool:
    """True when the explored prefix provably shields the origin.

    Requires an untruncated trace whose first block consists of k survivors
    (all still) and whose partial sums stay strictly above k from the second
    iteration on: then every discovered prefix keeps at least k+1 surviving
    stationary particles, and the first one blocks the origin forever.
    """
    if trace.truncated or len(trace.N_tilde) < 2 or trace.block_size != k:
        return False
    if trace.N_tilde[0] != k or not (trace.speeds[:k] == 0).all():
        return False
    return all(s > k for s in trace.partial_sums[1:])


def estimate_ENk(params: ModelParams, k: int, trials: int, master_seed: int,
                 workers: int = 1) -> Estimate:
    """Sample mean of the k-window count over independent windows."""
    if k < 1:
        raise ValueError("k must be >= 1")
    lattice = params.mode is Mode.LATTICE

    def chunk(lo: int, hi: int) -> np.ndarray:
        bufs = _kernels.make_buffers(k, lattice)
        s = 0
        s2 = 0
        for t in range(lo, hi):
            st = derive_stream(master_seed, t).substream(SUB_ENK)
            pos, spd = sample_arrays(params.p, k, lattice, st)
            _kernels.resolve_arrays(pos, spd, lattice, bufs)
            f = bufs["fate"][:k]
            n = int(np.count_nonzero(f == FATE_STILL)
                    - np.count_nonzero(f == FATE_LEFT))
            s += n
            s2 += n * n
        return np.asarray([s, s2], dtype=np.int64)

    s, s2 = map(int, parallel_sum(trials, workers, chunk))
    mean = s / trials
    var = max(s2 / trials - mean * mean, 0.0)
    return Estimate(mean, (var / trials) ** 0.5, trials, 0, master_seed,
                    {"estimator": "ENk", "p": params.p, "k": k,
                     "mode": params.mode.value})


def extend_configuration(trace: ExplorationTrace, params: ModelParams,
                         factor: int, stream: RngStream) -> Configuration:
    """The trace's realization extended by (factor-1) times more fresh particles."""
    lattice = params.mode is Mode.LATTICE
    n0 = trace.positions.shape[0]
    extra = max((factor - 1) * n0, 1)
    gen = _LazyParticles(params.p, lattice, stream)
    gen.ensure(extra)
    if lattice:
        ext_pos = gen.pos[:extra] + (trace.positions[-1] if n0 else 0)
    else:
        ext_pos = gen.pos[:extra] + (trace.positions[-1] if n0 else 0.0)
    positions = np.concatenate([trace.positions, ext_pos])
    speeds = np.concatenate([trace.speeds, gen.spd[:extra]])
    return Configuration(params.mode, Side.HALF_LINE, positions, speeds)
