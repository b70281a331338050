"""Seeded generators: every random draw in the toolkit is a function of an explicit seed"""
from typing import List

import numpy as np

_SEED_MODULUS = 2 ** 64


def make_rng(seed: int) -> np.random.Generator:
    """PCG64 generator for a 64-bit seed (negative seeds wrap modulo 2**64)"""
    return np.random.default_rng(int(seed) % _SEED_MODULUS)


def chunk_seeds(seed: int, chunks: int) -> List[int]:
    """Chunk i of a split run uses seed + i"""
    return [(int(seed) + i) % _SEED_MODULUS for i in range(chunks)]
