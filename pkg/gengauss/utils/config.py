import os

# Precision
DEFAULT_PRECISION = "double"
PRECISION_ENV_VAR = "GENGAUSS_PRECISION"
PRECISION_CHOICES = ("double", "double-double")
DOUBLE_DOUBLE_BITS = 106
AUTO_DOUBLE_DOUBLE_MULTIPLICITY = 8  # r + s above this switches the chain to 106 bits

# Rule construction tolerances
POSITIVITY_TOL = 1e-12      # relative to beta_0
EXACTNESS_TOL = 1e-8        # relative to the magnitude of the rule's terms
NODE_GAP_TOL = 1e-13        # relative to (b - a), or max(1, |tau|) when unbounded
MAX_MULTIPLICITY = 40

# Stieltjes discretisation
STIELTJES_START_POINTS = 128
STIELTJES_MAX_POINTS = 8192
STIELTJES_TOL = 1e-10

# Reference integrals (remainder without a closed form)
REFERENCE_POINTS = 200
REFERENCE_CHECK_POINTS = 250
REFERENCE_AGREEMENT_TOL = 1e-12

# Spline pipeline
SPLINE_MOMENT_POINTS = 64
SPLINE_MOMENT_CHECK_POINTS = 96
SPLINE_AGREEMENT_TOL = 1e-12
SIGN_CHECK_SAMPLES = 1001

# Level sets
SUPPORT_NEWTON_START = (-0.5, 0.5)
SUPPORT_NEWTON_MAXITER = 100
SUPPORT_RESIDUAL_TOL = 1e-12
LOG_LEVEL_CEILING = 50.0    # clamp for log(level) at the poles a, b
MIN_GRID = 64
POLE_RAYS = 64

# Rate studies
ROUNDOFF_FACTOR = 100.0
FIT_SKIP = 2                # smallest n values excluded from the geometric fit
MIN_FIT_POINTS = 3
CQ_TARGET_TOL = 1e-4

# Parallelism (joblib); results are merged in a fixed order whatever the value
N_JOBS = int(os.environ.get("GENGAUSS_JOBS", "1"))

# Output
FLOAT_FORMAT = "%.17g"
SIGNIFICANT_DIGITS = 17

# Measure spec mini-grammar families
MEASURE_FAMILIES = ["jacobi", "laguerre", "density"]

# Expression language
EXPR_FUNCTIONS = ["exp", "log", "sin", "cos", "sqrt", "abs"]
EXPR_VARIABLE = "t"
EXPR_CONSTANTS = {"pi": 3.141592653589793, "e": 2.718281828459045}
SUGGESTION_CUTOFF = 60      # rapidfuzz ratio for "did you mean"
SINGULARITY_SCAN_POINTS = 4097
SINGULARITY_TOL = 1e-12     # |g| relative to max |g| on the scan that counts as a zero

# Runtime checks (check command)
CHECK_EXACTNESS_TOL = 1e-10     # relative to max(1, |mu_k|)
CHECK_LEADING_REL_TOL = 1e-9
CHECK_LEADING_ABS_TOL = 1e-12   # times the sum of |terms| of Q(pi_K), the rounding floor of R(pi_K)

# Front doors
DEFAULT_RESOLUTION = (512, 512)
DEFAULT_SPLINE_SAMPLES = 201
DENSITY_EXTRA_COEFFICIENTS = 8
