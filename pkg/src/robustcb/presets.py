"""Benchmark instances: chain, confounded parallel, hierarchical, and the
hard lower-bound construction.

Edge weights follow the benchmark convention: observational column norms
0.5 and interventional norms 1.0.  Noise means default to one uniform [0, 2]
draw that is keyed to the preset identity (not to run seeds), so a
configuration always denotes the same instance while seed lists may be
permuted or extended freely; ``nu_override`` pins them exactly.
"""

from __future__ import annotations

import zlib

import numpy as np

from .sem import Dag, NoiseSpec, SemInstance, chain_dag, validate
from .theory import hierarchical_dag, theorem2_instance

_PRESET_STREAM_TAG = 0x5EED


def preset_noise_means(key: str, n: int) -> np.ndarray:
    """Deterministic per-preset U[0, 2] noise means."""
    rng = np.random.default_rng(np.random.SeedSequence([_PRESET_STREAM_TAG, zlib.crc32(key.encode())]))
    return rng.uniform(0.0, 2.0, size=n)


def chain_instance(n: int, nu: np.ndarray | None = None) -> SemInstance:
    """Path graph 0 -> 1 -> ... -> n-1 with edge weights 0.5 (obs) / 1.0 (int)."""
    if n < 2:
        raise ValueError("chain preset needs at least 2 nodes")
    dag = chain_dag(n)
    if nu is None:
        nu = preset_noise_means(f"chain:{n}", n)
    b_obs = [[]] + [[0.5] for _ in range(n - 1)]
    b_int = [[]] + [[1.0] for _ in range(n - 1)]
    return SemInstance.build(dag, b_obs, b_int, NoiseSpec("uniform", tuple(nu)))


def confounded_parallel_instance(n: int, nu: np.ndarray | None = None) -> SemInstance:
    """Node 0 parents all others; the reward node is the child of all others.

    Middle nodes carry weights 0.5 / 1.0; the reward column spreads
    0.5/sqrt(n-1) and 1/sqrt(n-1) over its n-1 parents so its norms stay at
    0.5 and 1.
    """
    if n < 3:
        raise ValueError("confounded parallel preset needs at least 3 nodes")
    parents: list[tuple[int, ...]] = [()]
    parents += [(0,) for _ in range(n - 2)]
    parents.append(tuple(range(n - 1)))
    dag = validate(Dag(tuple(parents)))
    if nu is None:
        nu = preset_noise_means(f"confounded_parallel:{n}", n)
    root = 1.0 / np.sqrt(n - 1)
    b_obs = [[]] + [[0.5] for _ in range(n - 2)] + [[0.5 * root] * (n - 1)]
    b_int = [[]] + [[1.0] for _ in range(n - 2)] + [[root] * (n - 1)]
    return SemInstance.build(dag, b_obs, b_int, NoiseSpec("uniform", tuple(nu)))


def hierarchical_instance(widths: list[int], nu: np.ndarray | None = None) -> SemInstance:
    """Fully connected consecutive layers feeding the reward node; node
    weights 0.5/sqrt(|pa|) and 1/sqrt(|pa|)."""
    dag = hierarchical_dag(widths)
    n = dag.n_nodes
    if nu is None:
        nu = preset_noise_means(f"hierarchical:{','.join(map(str, widths))}", n)
    b_obs = []
    b_int = []
    for i in range(n):
        k = len(dag.parents[i])
        if k == 0:
            b_obs.append([])
            b_int.append([])
        else:
            b_obs.append([0.5 / np.sqrt(k)] * k)
            b_int.append([1.0 / np.sqrt(k)] * k)
    return SemInstance.build(dag, b_obs, b_int, NoiseSpec("uniform", tuple(nu)))


def theorem2_preset(d: int, big_l: int) -> SemInstance:
    sem, _ = theorem2_instance(d, big_l)
    return sem
