"""Shared fixtures: reusable synthetic populations at different scales."""

import pytest

from xvecanon import PopulationSpec, generate_population


@pytest.fixture(scope="session")
def default_population():
    """The full default population (500 speakers, dim 64, seed 0)."""
    return generate_population(PopulationSpec())


@pytest.fixture(scope="session")
def small_population():
    """Desk-scale population for fast functional tests."""
    spec = PopulationSpec(n_speakers=60, utterances_per_speaker=3, dim=24,
                          n_modes=3, seed=11)
    return generate_population(spec)
