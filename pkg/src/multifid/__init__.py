"""Multi-fidelity surrogate learning with differentiable architecture search.

The package trains DAG-structured networks whose edges mix five candidate
operations through softmax-weighted logits, transfers low-fidelity knowledge
to high-fidelity models, and tunes hyperparameters with pruning schedulers.
"""

from .autodiff import ParamGroup, Tape, Tensor, backward, fd_gradient, sgd_step  # noqa: F401
from .candidates import CandidateOp, MixedEdge, OpKind, build_candidate  # noqa: F401
from .dag import DagConfig, DmfNetwork, build_dag, dag_forward, param_groups  # noqa: F401
from .training import TrainConfig, TrainTrace, alternate_train, joint_train, loss_total  # noqa: F401
from .fusion import (  # noqa: F401
    Dmf2Model,
    FinetuneConfig,
    LowModel,
    TransModel,
    build_trans,
    finetune_trans,
    predict_high,
    pretrain_low,
    train_dmf2,
    train_variant,
)
from .hpo import (  # noqa: F401
    HyperbandPlan,
    SearchSpace,
    Trial,
    grid_configs,
    hyperband_plan,
    median_should_prune,
    run_study,
    sha_schedule,
)
from .metrics import mae_field, r_squared, rmse  # noqa: F401
from .experiment import ExperimentSpec, RmseCurve, prop1_check, run_experiment  # noqa: F401

__version__ = "0.1.0"
