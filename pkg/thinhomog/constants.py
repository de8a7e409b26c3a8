# numerical defaults shared across modules; study files override most of them

CG_RTOL = 1e-10
CG_MAXITER_FACTOR = 50  # iteration cap = factor * sqrt(node count)

CELLS_PER_PERIOD = 8  # minimum horizontal cells per oscillation period
VERTICAL_CELLS = 16
ETA_SAMPLES_PER_PERIOD = 32
SIMPSON_INTERVALS = 64  # vertical quadrature in the thickness average

QUAD_RTOL = 1e-10
QUAD_MAX_POINTS = 2**20
RATIONAL_TOL = 1e-9
RATIONAL_MAX_DENOMINATOR = 10**6
ERGODIC_TOL = 1e-4
REITERATED_SAMPLES = 64

EIG_RESIDUAL_TOL = 1e-8
EIG_CLUSTER_RTOL = 1e-6
EIG_MAX_RESTARTS = 3
MAX_EIGENPAIRS = 12

NEWTON_TOL = 1e-9
NEWTON_MAXITER = 50
DEDUP_TOL = 1e-6
CLAMP_WINDOW = 3.0
DT = 1e-3

SEED = 42
PROBES = 20

LIMIT_RHS_SAMPLES = 64  # boundary phases per period and axis
LIMIT_RHS_GAUSS = 8
LIMIT_RHS_TOL = 1e-3
LIMIT_RHS_HALVINGS = 12
LADDER_MIN_ORDER = 0.1  # slowest accepted decay dist_total ~ eps^order
