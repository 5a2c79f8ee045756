"""Exception hierarchy shared by every erclear module."""

from dataclasses import dataclass


@dataclass(frozen=True)
class Issue:
    """One validation finding.

    ``kind`` is a stable machine-readable tag (``"Disconnected"``,
    ``"DuplicateId"``, ...), ``where`` a dotted/JSON path or object id.
    """

    kind: str
    where: str
    message: str

    def __str__(self):
        return f"{self.kind} at {self.where}: {self.message}"


class ErclearError(Exception):
    pass


class IssuesError(ErclearError):
    """Raised with the complete list of findings, never only the first."""

    def __init__(self, issues):
        self.issues = list(issues)
        super().__init__("; ".join(str(i) for i in self.issues))


class GridError(IssuesError):
    pass


class SingularNetworkMatrix(ErclearError):
    pass


class UnknownLine(ErclearError, KeyError):
    pass


class IslandingOutage(ErclearError):
    pass


class ScenarioError(ErclearError):
    pass


class NegativePostFluctuationDemand(ScenarioError):
    pass


class UnknownScenario(ErclearError, KeyError):
    pass


class UnknownGenerator(ErclearError, KeyError):
    pass


class PeriodOutOfRange(ErclearError, IndexError):
    pass


class MissingInitialState(ErclearError):
    pass


class LPError(ErclearError):
    status = "error"


class Infeasible(LPError):
    status = "infeasible"


class Unbounded(LPError):
    status = "unbounded"


class NumericalFailure(LPError):
    status = "numerical_failure"


class RecourseInfeasible(Infeasible):
    """The fixed reserves of a dispatch cannot cover a scenario."""


class CaseFileError(IssuesError):
    pass


class ParseError(CaseFileError):
    pass


class SchemaError(CaseFileError):
    pass


class SemanticError(CaseFileError):
    pass
