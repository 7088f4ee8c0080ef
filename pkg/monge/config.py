import os
from dotenv import load_dotenv

# Load environment variables from .env file
basedir = os.path.abspath(os.path.dirname(__file__))
load_dotenv(os.path.join(basedir, '..', '.env'))


class Config:
    """Library and experiment configuration"""

    # Runtime settings. Numeric values stay raw strings here; ExperimentConfig
    # and the CLI options convert them and report bad values as usage errors
    LOG_LEVEL = os.environ.get('MONGE_LOG_LEVEL', 'INFO').upper()
    THREADS = os.environ.get('MONGE_THREADS', '1')
    SEED = os.environ.get('MONGE_SEED', '0')

    # Monte-Carlo protocol
    TRIALS = os.environ.get('MONGE_TRIALS', '10')
    N_EVAL = os.environ.get('MONGE_N_EVAL', '100000')
    DIMS = os.environ.get('MONGE_DIMS', '2,10,50')
    N_GRID = (100, 316, 1000, 3162, 10000)
    N_L_GRID = (100, 316, 1000, 3162, 10000)
    DA_DIMS = (10,)

    # Convolutional experiment
    CONV_N_GRID = (10, 31, 100, 316, 1000)
    CONV_N_EVAL = 2000
    IMAGE_SHAPE = (28, 28)
    BLUR_LENGTH = 5
    BLUR_ANGLE = 45.0
    IMAGE_SPECTRUM_CUTOFF = 4.0

    # Shrinkage: none on simulations, a touch on image data
    SIM_ALPHA = 0.0
    IMAGE_ALPHA = 1e-6

    # Problem generators
    MEAN_VARIANCE = 10.0
    DA_SHIFT = 10.0

    # Numerical tolerances
    SYMMETRY_TOL = 1e-10
    SYM_EIG_TOL = 1e-8
    EIG_CLAMP_TOL = 1e-10
    ILL_CONDITIONED_RATIO = 1e-14
    WISHART_REDRAW_RATIO = 1e-12
    SPECTRAL_RESIDUE_TOL = 1e-8
    BURES_CLAMP_TOL = 1e-9

    # Evaluation chunking keeps divergence estimates bounded in memory
    DIVERGENCE_CHUNK = 8192
