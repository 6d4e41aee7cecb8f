"""Bundled example instances."""

from importlib import resources

from ..textformat import parse_game, parse_model, parse_strategy


def text(name):
    return resources.files(__name__).joinpath(name).read_text(encoding="utf-8")


def path(name):
    return str(resources.files(__name__).joinpath(name))


def load(game, model=None, strategy=None):
    """Load bundled files by name. Returns ``(g, measure, m, s)``."""
    g, measure = parse_game(text(game))
    m = parse_model(text(model), g) if model else None
    s = parse_strategy(text(strategy), g) if strategy else None
    return g, measure, m, s
