from curie_weiss.config import ExperimentKind
from curie_weiss.management.commands._base import ExperimentCommand


class Command(ExperimentCommand):
    help = "Audits the agreement between the pair and squared-sum estimators over a population grid."

    kind = ExperimentKind.EQUIVALENCE
