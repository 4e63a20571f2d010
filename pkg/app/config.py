"""
Application configuration settings
"""

import os


class Settings:
    """Application settings"""

    # Application
    APP_TITLE: str = "TPA Metrology Toolkit"
    APP_VERSION: str = "1.0.0"
    LOG_LEVEL: str = os.getenv("TPA_LOG_LEVEL", "WARNING")
    WORKERS: int = int(os.getenv("TPA_WORKERS", 1))

    # Fock-basis construction
    TAIL_TOL: float = 1e-10
    DIM_SEARCH_START: int = 8
    DIM_SEARCH_LIMIT: int = 512
    NORM_TOL: float = 1e-12

    # Density-matrix invariants
    HERMITIAN_TOL: float = 1e-12
    TRACE_TOL: float = 1e-10
    POSITIVITY_TOL: float = 1e-10

    # Channel
    ODE_MIN_STEPS: int = 1000
    ODE_STEPS_PER_EPS: int = 2000
    # h * |fastest decay rate| allowed when the step count is chosen automatically,
    # and the edge of the classical RK4 stability interval on the negative real axis
    ODE_STIFF_STEP: float = 1.0
    RK4_STABILITY_LIMIT: float = 2.785
    # Largest tolerated cancellation bound of the alternating series before a
    # chain of coefficients is rebuilt from its bidiagonal generator.
    SERIES_CONDITION_LIMIT: float = 1e-13
    COEFFICIENT_CACHE_SIZE: int = 64

    # Metrology
    SLD_CUTOFF_REL: float = 1e-12
    PN_FLOOR: float = 1e-300
    PN_NUMERATOR_FLAG: float = 1e-12
    FI_BOUND_RTOL: float = 1e-6

    # Probe optimisation defaults
    OPT_NMAX: int = 10
    OPT_POPULATION: int = 64
    OPT_GENERATIONS: int = 200
    OPT_MUTATION_SIGMA: float = 0.3
    OPT_MUTATION_DECAY: float = 0.985
    OPT_ELITE_FRACTION: float = 0.25
    OPT_LOCAL_ITERS: int = 500
    OPT_LOCAL_STEP: float = 1e-2
    OPT_FD_STEP: float = 1e-5
    OPT_LOCAL_RTOL: float = 1e-9
    OPT_RESTARTS: int = 8
    OPT_SEED: int = 20240917
    OPT_DISTINCT_L1: float = 0.05
    PROJECTION_TOL: float = 1e-15
    OPT_NORM_TOL: float = 1e-9
    OPT_MEAN_TOL: float = 1e-6

    # Gamma grid defaults (endpoints excluded, QFI diverges there)
    GAMMA_MIN: float = 1e-3
    GAMMA_MAX: float = 1 - 1e-3
    GAMMA_COUNT: int = 60
    GAMMA_SPACING: str = "log"
    SCALING_GAMMA: float = 0.01

    # Output
    CSV_FLOAT_FORMAT: str = "%.15g"

    # Column sets per command
    @property
    def CSV_COLUMNS(self) -> dict:
        return {
            "qfi": ["gamma", "probe_id", "nbar", "qfi", "fi_pn"],
            "scaling": ["gamma", "probe_id", "nbar", "qfi", "fi_pn"],
            "advantage": ["gamma", "probe_id", "nbar", "qfi", "fi_pn", "qa", "eta_pn"],
            "efficiency": ["gamma", "probe_id", "nbar", "qfi", "fi_pn", "qa", "eta_pn"],
            "optimize": ["gamma", "j", "p_j"],
            "distribution": ["n", "p_n"],
        }

    # Probe spec kinds accepted on the command line
    PROBE_KINDS = {
        "fock": "Fock state |n>",
        "coherent": "Coherent state with real amplitude sqrt(nbar)",
        "sv": "Squeezed vacuum with real squeezing asinh(sqrt(nbar))",
        "on": "Vacuum plus |N> weighted to the requested mean",
        "dv": "Real nonnegative DV coefficients read from a JSON or CSV file",
        "opt": "Optimal DV probe re-optimised at every grid point",
    }


# Global settings instance
settings = Settings()
