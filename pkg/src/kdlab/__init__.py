"""Knowledge-distillation toolkit at desk scale.

Trains small dense students against frozen teachers with an annealed-hinge
composite objective and the usual baselines (scratch, vanilla KD, TAKD,
two-stage annealing), on a minimal tape-based autodiff core with a
compiled kernel backend and a numpy fallback.
"""

__version__ = "0.1.0"

from .autodiff import Graph, ShapeError, Tensor, grad_check
from .data import Dataset, gen_gaussian_mixture, gen_noisy_sine, load_dataset, save_dataset, split
from .distill import (ConfigError, DistillConfig, NumericError, OptimizerState, RunRecord,
                      evaluate, sgd_step, train_annealing, train_continuation, train_scratch,
                      train_takd, train_vanilla)
from .kernels import backend_name
from .losses import (LossHyper, annealing_loss, composite_loss, continuation_kd_loss,
                     cross_entropy, mse_regression, vanilla_kd_loss, vanilla_kd_regression_loss)
from .models import (LayerSpec, Network, TeacherSource, forward, init_network, load_network,
                     mlp_spec, predict, save_network, teacher_logits)
from .schedules import (PsiSpec, TemperatureLadder, phi_of_temperature, phi_schedule, psi,
                        temperature_at_epoch, temperature_schedule)
