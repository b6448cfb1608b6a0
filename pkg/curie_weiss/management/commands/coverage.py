from curie_weiss.config import ExperimentKind
from curie_weiss.management.commands._base import ExperimentCommand


class Command(ExperimentCommand):
    help = "Measures empirical coverage of the asymptotic confidence intervals."

    kind = ExperimentKind.COVERAGE
