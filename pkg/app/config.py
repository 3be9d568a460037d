from pydantic_settings import BaseSettings


class Settings(BaseSettings):
    # Optimiser defaults
    FIT_MAX_ITER: int = 75
    FIT_TOL: float = 0.001
    FIT_DIVERGENCE_FACTOR: float = 10.0
    STEP_PRESETS: dict[str, float] = {
        "high": 0.0035,
        "moderate": 0.035,
        "low": 0.07,
    }

    # Tuning-parameter selection
    CV_FOLDS: int = 4
    GRID_SIZE: int = 5
    RANK_UPPER_BOUND_CAP: int = 16  # floor(min(50, 5000) / 3)

    # Rank-r completion (hard thresholding)
    COMPLETION_TOL: float = 1e-9
    COMPLETION_MAX_ITER: int = 500

    # Varimax
    VARIMAX_TOL: float = 1e-10
    VARIMAX_MAX_ITER: int = 500

    # Simulation harness
    SIM_REPS: int = 10
    DEFAULT_THREADS: int = -1  # joblib convention: all logical cores

    LOG_LEVEL: str = "INFO"
    SCHEMA_VERSION: str = "1.0"

    model_config = {"env_file": ".env", "env_prefix": "LEARNER_", "extra": "ignore"}


settings = Settings()
