"""Parameter synthesis for attack-fault trees via parametric weighted timed automata."""

from importlib import resources

__version__ = "0.1.0"


def model_path(name: str):
    """Path of a bundled example model, e.g. ``model_path("iot.galileo")``."""
    return resources.files(__package__).joinpath("models", name)
