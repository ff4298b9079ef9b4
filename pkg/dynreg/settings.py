"""dynreg/dynreg/settings.py.

Global variables/constants that's used throughout `dynreg`.
"""

TOLERANCE = 1e-10

FLOAT_DTYPE = "float64"
INT_DTYPE = "int32"

NTHREADS = 1

# log progress every this many frames
LOG_EVERY = 50

# power iteration
POWER_ITERATIONS = 500
POWER_TOLERANCE = 1e-10

# batch primal-dual oracle
BATCH_TOLERANCE = 1e-9
BATCH_MAX_ITERATIONS = 20000

# alpha continuation for minimum-R solutions, alpha_j = 10^(-j/2)
CONTINUATION_STEPS = 12
CONSTRAINT_TOLERANCE = 1e-8

# noise level condition defaults
NOISE_Q = 1.0
NOISE_C_PRIME = 1.0

# log rule domain of the α schedule
ALPHA_DELTA_MIN = 1e-10
ALPHA_DELTA_MAX = 1.0

# desk-scale scenario defaults
LINEAR_GRID = (32, 32)
LINEAR_FRAMES = 200
LINEAR_RAMP = 140
EIT_FRAMES = 100
EIT_RAMP = 70
EIT_RINGS = 8
N_ELECTRODES = 16
ELECTRODE_COVERAGE = 0.5
CONTACT_IMPEDANCE = 0.01
BACKGROUND = 1.0
INCLUSION_CONTRAST = 2.0
INCLUSION_RADIUS = 0.15  # fraction of domain radius
EIT_PRECISION = 10.0
LINEAR_PRECISION = 2.0
SIGMA_MIN = 0.5
SIGMA_MAX = 3.0

# built-in scenarios translate with known velocity
PREDICTOR_PRIMAL = "known_flow_translation"

# online primal-dual steps
LINEAR_TAU = 0.25
LINEAR_SIGMA = 0.25
EIT_TAU = 0.0053
EIT_SIGMA = 10.0
STEP_SAFETY = 0.9

# Horn-Schunck optical flow
FLOW_SWEEPS = 20
FLOW_SMOOTHNESS = 0.1

# source witness ridge λ = WITNESS_RIDGE * δ, never below WITNESS_RIDGE_MIN
WITNESS_RIDGE = 1.0
WITNESS_RIDGE_MIN = 1e-10

# linearisation constant used in the theorem checks
ETA = 0.4

DELTAS = (0.1, 0.05, 0.01, 0.005)
EIT_DELTAS = (0.1, 0.01)
