"""Mixed-integer linear programming layer: model container, bounded-variable
simplex, branch and bound, exhaustive oracle, and LP text exchange."""

from .branch_bound import (
    MilpSolution,
    SolveOptions,
    solve,
    solve_builtin,
    solve_exhaustive,
    solve_lp_relaxation,
)
from .lpio import (
    ImportedSolution,
    LpioError,
    export_model,
    import_model,
    import_solution,
    models_equivalent,
    write_solution,
)
from .model import LinearRow, LinExpr, MilpModel, ModelError, Variable
from .simplex import LpResult, solve_lp

__all__ = [
    "ImportedSolution",
    "LinearRow",
    "LinExpr",
    "LpResult",
    "LpioError",
    "MilpModel",
    "MilpSolution",
    "ModelError",
    "SolveOptions",
    "Variable",
    "export_model",
    "import_model",
    "import_solution",
    "models_equivalent",
    "solve",
    "solve_builtin",
    "solve_exhaustive",
    "solve_lp",
    "solve_lp_relaxation",
    "write_solution",
]
