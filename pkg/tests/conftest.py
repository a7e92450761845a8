import numpy as np
import pytest

from multiband import (
    FrequencyGrid,
    PhaseDraw,
    derive_seed,
    mix,
    partition_subbands,
    random_mixing_matrix,
    random_psd_spec,
    synthesize_latents,
)


def make_model(T=64, N=6, M=3, seed=0, width_range=(2, 6), max_blocks=3):
    grid = FrequencyGrid(T)
    specs = [
        random_psd_spec(grid, derive_seed(seed, m), max_blocks, width_range=width_range, index=m)
        for m in range(M)
    ]
    U = random_mixing_matrix(N, M, derive_seed(seed, 100))
    A = synthesize_latents(specs, PhaseDraw.draw(M, T, derive_seed(seed, 200)))
    return specs, U, A, mix(U, A)


@pytest.fixture
def small_model():
    specs, U, A, X = make_model()
    return specs, partition_subbands(specs), U, A, X


def rel_err(a, b):
    a, b = np.asarray(a), np.asarray(b)
    return np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-300)
