"""Equal bi-vectorized (EbV) parallel LU solver."""
from .errors import (
    MemoryBudgetError,
    ParameterError,
    ParseError,
    SingularDiagonalError,
    SingularPivotError,
)
from .lu import (
    LUFactors,
    OpCount,
    PivotPolicy,
    backward_substitute,
    factorize_seq,
    forward_substitute,
    solve_seq,
)
from .matrix import (
    DenseMatrix,
    RowScaling,
    SparseMatrix,
    dump_matrix_market,
    generate,
    load_matrix_market,
    normalize_unit_diagonal,
    residual_inf,
    to_dense,
)
from .parallel import ExecConfig, WorkCounters, factorize_par, solve_par, solve_system_par
from .plan import (
    EbvPlan,
    PairedUnit,
    VectorDescriptor,
    WorkSummary,
    assign,
    bivectorize,
    equalize,
    make_plan,
    plan_stats,
)

__version__ = "0.1.0"
