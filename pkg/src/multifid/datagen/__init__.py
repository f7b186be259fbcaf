"""Multi-fidelity data generation: analytic benchmarks, PDE solvers, dataset IO."""

from .analytic import (  # noqa: F401
    ANALYTIC_BENCHMARKS,
    InputSpec,
    eval_borehole,
    eval_currin,
    eval_park,
    evaluate_batch,
    input_spec,
    sample_inputs,
)
from .pde import (  # noqa: F401
    FieldGrid,
    solve_burgers,
    solve_laplace_dirichlet,
    solve_poisson,
    upscale_bilinear,
)
from .dataset import (  # noqa: F401
    FidelityDataset,
    FidelityLevel,
    generate_dataset,
    read_dataset,
    write_dataset,
)
