# core/mcmc/chains.py
from __future__ import annotations

import copy
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from typing import List

import numpy as np

from core.model.types import Dataset
from .base_sampler import BaseSampler
from .settings import ChainOutput

logger = logging.getLogger(__name__)


def chain_seeds(seed: int, n_chains: int) -> List[int]:
    """Chain 0 keeps the master seed; further chains get seeds spawned from it."""
    if n_chains == 1:
        return [int(seed)]
    children = np.random.SeedSequence(int(seed)).spawn(n_chains - 1)
    return [int(seed)] + [int(child.generate_state(1)[0]) for child in children]


def _run_one(sampler: BaseSampler, data: Dataset) -> ChainOutput:
    return sampler.run(data)


def run_chains(sampler: BaseSampler, data: Dataset) -> List[ChainOutput]:
    """
    Runs `sampler.settings.n_chains` independent chains, each with its own seed.
    Chains go to a process pool when there is more than one; results keep chain order.
    """
    settings = sampler.settings
    seeds = chain_seeds(settings.seed, settings.n_chains)
    clones = []
    for seed in seeds:
        clone = copy.copy(sampler)
        clone.settings = replace(settings, seed=seed, n_chains=1)
        clones.append(clone)

    if len(clones) == 1:
        return [clones[0].run(data)]

    logger.info("Running %d chains in parallel (seeds %s)", len(clones), seeds)
    with ProcessPoolExecutor(max_workers=len(clones)) as pool:
        futures = [pool.submit(_run_one, clone, data) for clone in clones]
        return [f.result() for f in futures]
