from fedclinic.commands.backdoor import backdoor
from fedclinic.commands.budget import budget
from fedclinic.commands.environment import environment
from fedclinic.commands.fetch import fetch
from fedclinic.commands.run import run

__all__ = [
    "run",
    "backdoor",
    "budget",
    "fetch",
    "environment",
]
