from .kernel_dto import AngularKernel, KernelConfig
from .experiment_dto import ConvergenceSummary, ExperimentConfig, RunSummary
