from curie_weiss.config import ExperimentKind
from curie_weiss.management.commands._base import ExperimentCommand


class Command(ExperimentCommand):
    help = "Compares exact moments with their large-population approximations."

    kind = ExperimentKind.APPROX_ERROR
