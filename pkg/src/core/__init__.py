# Core numerics: expressions, forms, the neutral group and connections
from src.core.connection import ConnectionForm
from src.core.expr import Expr, parse
from src.core.exterior import DifferentialForm, MatrixForm
from src.core.structures import FrameField

__all__ = ["ConnectionForm", "DifferentialForm", "Expr", "FrameField", "MatrixForm", "parse"]
