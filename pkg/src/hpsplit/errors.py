"""Exception hierarchy shared by all hpsplit modules.

Every error carries the name of the module that raised it so the CLI can
render module-qualified messages.
"""


class ToolkitError(Exception):
    """Base class for all hpsplit errors."""

    module = "hpsplit"

    def __str__(self):
        return f"{self.module}: {super().__str__()}"


class InputError(ToolkitError):
    """Malformed input: bad dimensions, bad values, unparseable text."""


class SolverFailure(ToolkitError):
    """An iterative solver gave up (iteration cap, non-convergence).

    Deliberately distinct from an infeasible problem, which is a valid
    solver outcome, not a failure.
    """


class LoadError(InputError):
    module = "dataset"


class TransformError(ToolkitError):
    module = "dataset"


class DegenerateSplitError(ToolkitError):
    module = "splitter"


class UndefinedMetricError(ToolkitError):
    module = "evaluation"


class GraphFormatError(InputError):
    module = "chemgraph"


class ValenceError(InputError):
    module = "chemgraph"


class ExtractionError(ToolkitError):
    module = "chemgraph"


class SpecFormatError(InputError):
    module = "specvalidator"


class WitnessError(ToolkitError):
    """The witness is inconsistent with the graph (not a rule violation)."""

    module = "specvalidator"


class SearchCapError(ToolkitError):
    """Embedding search refused: instance exceeds the documented size caps."""

    module = "specvalidator"
