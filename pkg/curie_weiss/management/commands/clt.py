from curie_weiss.config import ExperimentKind
from curie_weiss.management.commands._base import ExperimentCommand


class Command(ExperimentCommand):
    help = "Compares scaled estimator errors with their limiting normal distribution."

    kind = ExperimentKind.CLT
