from curie_weiss.config import ExperimentKind
from curie_weiss.management.commands._base import ExperimentCommand


class Command(ExperimentCommand):
    help = "Compares closed-form estimates with a numerical solution of the ML condition."

    kind = ExperimentKind.ML_COMPARE
