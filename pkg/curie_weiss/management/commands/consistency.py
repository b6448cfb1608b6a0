from curie_weiss.config import ExperimentKind
from curie_weiss.management.commands._base import ExperimentCommand


class Command(ExperimentCommand):
    help = "Tracks estimation error quantiles as the number of observations grows."

    kind = ExperimentKind.CONSISTENCY
