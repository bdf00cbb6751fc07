from .priors import (PriorSpec, SGPriorSpec, MoGPriorSpec, VampPriorSpec,
                     VampDataPriorSpec, WeightedVampPriorSpec, PRIOR_KINDS, make_prior_spec)
from .model_spec import Likelihood, ModelSpec
from .training import TrainConfig, EpochRecord, TrainLog
from .evaluation import (ActiveUnits, ElboDecomposition, EvalConfig, EvalReport, Histogram,
                         CompareRow, CompareReport, PairedVerdict, SweepCell, SweepRun)
from .dataset import Binarization, Dataset, DatasetProfile
from .run import DataSource, RunConfig
