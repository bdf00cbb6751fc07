from .training_service import TrainingService, OptState, FitResult
from .evaluation_service import EvaluationService
from .dataset_service import DatasetService, PROFILES
from .comparison_service import ComparisonService
