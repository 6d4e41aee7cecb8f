from fractions import Fraction

import pytest

from bwcsynth.instances import load


@pytest.fixture
def commute():
    g, _, m, _ = load("commute.g", "commute.m")
    return g, m


@pytest.fixture
def simple():
    g, _, m, _ = load("simple.g", "simple.m")
    return g, m


@pytest.fixture
def wec():
    g, _, m, _ = load("wec.g", "wec.m")
    return g, m


def strat(name, game):
    return load(game, None, name)[3]


F = Fraction
