"""Two-lane lattice gas for cream diffusing into coffee, and its Apparent
Complexity after coarse graining.

Nodes 1..N are joined by N-1 segments.  Every segment carries exactly one
right-moving and one left-moving particle (cream = 1, coffee = 0).  Each
step the two particles meeting at an interior node pass each other or bounce
back with probability 1/2 each; at the two end nodes the arriving particle
always bounces back.
"""
from __future__ import annotations

import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .compression import rle_count

CREAM, COFFEE = 1, 0


@dataclass(frozen=True)
class SimConfig:
    n_nodes: int
    total_steps: int
    split_node: Optional[int] = None  # default: half of the segments are cream
    seed: int = 0
    replicas: int = 1

    def __post_init__(self):
        if self.n_nodes < 2:
            raise ValueError("need at least two nodes")
        if self.total_steps < 0:
            raise ValueError("total_steps must be >= 0")
        if self.replicas < 1:
            raise ValueError("replicas must be >= 1")
        if self.split_node is None:
            object.__setattr__(self, "split_node", (self.n_nodes - 1) // 2 + 1)
        if not 1 <= self.split_node <= self.n_nodes:
            raise ValueError("split_node must lie in 1..n_nodes")

    @property
    def n_segments(self) -> int:
        return self.n_nodes - 1


@dataclass(frozen=True)
class AutomatonState:
    """Species on each lane segment; the leading axis, if any, is the replica."""

    right_lane: np.ndarray
    left_lane: np.ndarray
    time: int = 0

    @property
    def n_nodes(self) -> int:
        return self.right_lane.shape[-1] + 1

    def cream_count(self):
        return self.right_lane.sum(axis=-1) + self.left_lane.sum(axis=-1)


def init_state(cfg: SimConfig, replicas: Optional[int] = None) -> AutomatonState:
    """Cream on every segment between nodes 1..split_node, coffee elsewhere."""
    lane = np.zeros(cfg.n_segments, dtype=np.int8)
    lane[: cfg.split_node - 1] = CREAM
    if replicas is not None:
        lane = np.tile(lane, (replicas, 1))
    return AutomatonState(lane.copy(), lane.copy(), 0)


def draw_lights(rng: np.random.Generator, n_nodes: int, steps: int = 1) -> np.ndarray:
    """Green (True) or red for every interior node, one row per step.

    One uniform draw per interior node per step, whatever the particles.
    """
    return rng.random((steps, max(n_nodes - 2, 0))) < 0.5


def step(state: AutomatonState, rng: Optional[np.random.Generator] = None,
         lights: Optional[np.ndarray] = None) -> AutomatonState:
    """Advance every node simultaneously by one time step.

    ``lights`` (True = green = pass) overrides the random draw; it has one
    entry per interior node 2..N-1, with a leading replica axis when the
    state has one.
    """
    right, left = state.right_lane, state.left_lane
    if lights is None:
        if rng is None:
            raise ValueError("need an rng or explicit lights")
        shape = right.shape[:-1] + (max(right.shape[-1] - 1, 0),)
        lights = rng.random(shape) < 0.5
    green = np.asarray(lights, dtype=bool)

    new_right = np.empty_like(right)
    new_left = np.empty_like(left)
    # end nodes reflect
    new_right[..., 0] = left[..., 0]
    new_left[..., -1] = right[..., -1]
    # interior node between segment i and i+1
    r_in = right[..., :-1]   # arrives from the left
    l_in = left[..., 1:]     # arrives from the right
    new_right[..., 1:] = np.where(green, r_in, l_in)
    new_left[..., :-1] = np.where(green, l_in, r_in)
    return AutomatonState(new_right, new_left, state.time + 1)


def color_profile(state: AutomatonState) -> np.ndarray:
    """Per-segment colour: mean species of its two particles (0, 1/2 or 1)."""
    return 0.5 * (state.right_lane + state.left_lane)


def fraction_top(state: AutomatonState, split_node: int):
    """Share of all cream found on the segments between nodes 1..split_node."""
    lanes = state.right_lane + state.left_lane
    total = lanes.sum(axis=-1)
    if np.any(total == 0):
        raise ZeroDivisionError("no cream particles: the fraction is undefined")
    return lanes[..., : split_node - 1].sum(axis=-1) / total


@dataclass(frozen=True)
class CoarseProfile:
    group_means: np.ndarray
    bin_indices: np.ndarray
    groups: int
    bins: int


def bin_index(means, bins: int) -> np.ndarray:
    """Nearest multiple of 1/bins, labelled 1..bins.

    With 12 bins: 1.0 maps to 12, 0.0 to 1 and an even mix 0.5 sits in the
    middle of bin 6.
    """
    return np.clip(np.floor(np.asarray(means) * bins + 0.5), 1, bins).astype(int)


def coarse_grain(profile, groups: int, bins: int,
                 replica_profiles: Optional[Sequence] = None) -> CoarseProfile:
    """Average contiguous groups of segments, then bin the group means.

    ``replica_profiles`` (rows = replicas) are averaged first; a 2-D
    ``profile`` is treated the same way.
    """
    prof = np.asarray(profile if replica_profiles is None else replica_profiles, dtype=float)
    if prof.ndim == 2:
        prof = prof.mean(axis=0)
    if groups < 1 or bins < 1:
        raise ValueError("groups and bins must be positive")
    if prof.size % groups:
        raise ValueError(f"{prof.size} segments do not split into {groups} equal groups")
    means = prof.reshape(groups, -1).mean(axis=1)
    return CoarseProfile(means, bin_index(means, bins), groups, bins)


def apparent_complexity(cp: CoarseProfile) -> int:
    """Number of RLE pairs of the binned coarse profile."""
    return rle_count(cp.bin_indices)


@dataclass
class ExperimentResult:
    times: list
    complexity: list
    fraction_top: list
    profiles: dict  # time -> replica-averaged per-segment colour
    coarse: dict    # time -> CoarseProfile

    def curve_csv(self) -> str:
        out = io.StringIO()
        out.write("time,apparent_complexity,fraction_top\n")
        for t, c, ft in zip(self.times, self.complexity, self.fraction_top):
            out.write(f"{t},{c},{float(ft)!r}\n")
        return out.getvalue()

    def profile_csv(self, time: int) -> str:
        out = io.StringIO()
        out.write("segment,color\n")
        for i, c in enumerate(self.profiles[time]):
            out.write(f"{i},{float(c)!r}\n")
        return out.getvalue()


def _run_replicas(cfg: SimConfig, replica_ids, sample_times, chunk=1024):
    """Colour profiles and cream fractions of the given replicas at each sample time."""
    rngs = [np.random.Generator(np.random.PCG64(cfg.seed + k)) for k in replica_ids]
    state = init_state(cfg, replicas=len(replica_ids))
    wanted = sorted(set(sample_times))
    out_prof, out_frac = {}, {}
    n_light = max(cfg.n_nodes - 2, 0)
    t = 0
    buf, pos = None, chunk
    for target in wanted:
        while t < target:
            if pos == chunk:
                # each replica consumes its own stream, one row per step
                buf = np.stack([rng.random((chunk, n_light)) < 0.5 for rng in rngs], axis=1)
                pos = 0
            state = step(state, lights=buf[pos])
            pos += 1
            t += 1
        out_prof[target] = color_profile(state).astype(float)
        out_frac[target] = fraction_top(state, cfg.split_node)
    return out_prof, out_frac


def run_experiment(cfg: SimConfig, groups: int = 20, bins: int = 12,
                   sample_times: Optional[Sequence[int]] = None,
                   threads: int = 1) -> ExperimentResult:
    """Replica-averaged Apparent Complexity at each sample time.

    Replica k uses a PCG64 stream seeded with ``cfg.seed + k``, so results
    depend only on the configuration, not on ``threads``.
    """
    if sample_times is None:
        sample_times = [0, cfg.total_steps]
    sample_times = sorted(set(int(t) for t in sample_times))
    if sample_times and (sample_times[0] < 0 or sample_times[-1] > cfg.total_steps):
        raise ValueError("sample times must lie in [0, total_steps]")
    ids = list(range(cfg.replicas))
    threads = max(1, min(threads, len(ids)))
    parts = [ids[i::threads] for i in range(threads)]
    if threads == 1:
        results = [_run_replicas(cfg, parts[0], sample_times)]
    else:
        with ThreadPoolExecutor(threads) as pool:
            results = list(pool.map(lambda p: _run_replicas(cfg, p, sample_times), parts))

    # put replicas back in id order so the float sums do not depend on threads
    order = np.argsort(np.concatenate(parts), kind="stable")
    res = ExperimentResult([], [], [], {}, {})
    for t in sample_times:
        profiles = np.concatenate([r[0][t] for r in results], axis=0)[order]
        fracs = np.concatenate([r[1][t] for r in results])[order]
        mean_profile = profiles.mean(axis=0)
        cp = coarse_grain(mean_profile, groups, bins)
        res.times.append(t)
        res.complexity.append(apparent_complexity(cp))
        res.fraction_top.append(float(fracs.mean()))
        res.profiles[t] = mean_profile
        res.coarse[t] = cp
    return res


def diffusion_time(steps, n_segments: int):
    """Diffusion-equation time of an automaton step count (domain [-1, 1])."""
    return 2.0 * np.asarray(steps, dtype=float) / n_segments ** 2


def segment_centres(n_segments: int) -> np.ndarray:
    return -1.0 + (np.arange(n_segments) + 0.5) * 2.0 / n_segments
