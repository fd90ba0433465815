"""Shared fixtures: deterministic datasets and their statistics catalogues."""

import pytest

from gopt.datagen import marketplace_fixture, social_fixture, transfer_fixture
from gopt.glogue import build
from gopt.graph import type_counts


@pytest.fixture(scope="session")
def marketplace():
    schema, g = marketplace_fixture()
    return schema, g


@pytest.fixture(scope="session")
def marketplace_stats(marketplace):
    schema, g = marketplace
    return build(g, schema, k=3), type_counts(g)


@pytest.fixture(scope="session")
def social():
    schema, g = social_fixture()
    return schema, g


@pytest.fixture(scope="session")
def social_stats(social):
    schema, g = social
    return build(g, schema, k=3), type_counts(g)


@pytest.fixture(scope="session")
def transfer():
    schema, g = transfer_fixture()
    return schema, g


@pytest.fixture(scope="session")
def transfer_stats(transfer):
    schema, g = transfer
    return build(g, schema, k=3), type_counts(g)
