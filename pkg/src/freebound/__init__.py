"""Free-boundary problems solved by damped motion of a tracked interface."""
from .driver import (
    DivergenceError,
    FreeBoundaryProblem,
    InterfaceCollapseError,
    MotionRejectedError,
    RunResult,
    SolverConfig,
    evaluate,
    run,
    step,
)
from .mesh import InterfaceCurve, Marker, Mesh, MeshError, Region
from .tracking import JumpCondition, TauPolicy

__version__ = "0.1.0"
