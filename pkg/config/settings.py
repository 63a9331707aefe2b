"""
Central configuration for the microforge inverse-design toolkit.
All defaults in one place - stage configs and presets start from these.
"""
import os
from pathlib import Path
from dotenv import load_dotenv

# Load environment variables
BASE_DIR = Path(__file__).resolve().parent.parent
load_dotenv(BASE_DIR / ".env")

TOOL_VERSION = "0.3.0"

# --- Runtime ---
# Worker pool cap for campaign stages (phase-field ICs, FEM pairs, CNN modes)
MICROFORGE_THREADS = max(1, int(os.getenv("MICROFORGE_THREADS", str(os.cpu_count() or 1))))
MICROFORGE_SEED = int(os.getenv("MICROFORGE_SEED", "20240501"))
MICROFORGE_OUT = Path(os.getenv("MICROFORGE_OUT", str(BASE_DIR / "runs")))
LOG_LEVEL = os.getenv("MICROFORGE_LOG_LEVEL", "INFO").upper()
LOG_FORMAT = "  [%(name)s] %(levelname)s: %(message)s"

# --- Image Grid ---
IMAGE_SIZE = 32
DOMAIN_LENGTH_UM = 31.0         # 31 um square, one pixel = one cell = one element
DATASET_SCHEMA_VERSION = 1

# --- Phase-Field (Allen-Cahn, 2-D) ---
PF_DELTA_F_KJ_MOL = 1.0         # chemical driving force
PF_LANDAU_A = 0.15              # A + B + C = 0: stable well at phi = 1
PF_LANDAU_B = -2.3
PF_LANDAU_C = 2.15
PF_GRAD_COEFF_SQ = 5.0e-15      # a^2 [J m^2 / mol]
PF_MOBILITY = 1.0               # M_phi [1/(J s)]
PF_C11_GPA = 397.0
PF_C44_GPA = 123.5
PF_C12_GPA = 150.0
PF_EIGENSTRAIN_A = 0.0015       # 0.1 freezes the transformation; see DESIGN.md
PF_EIGENSTRAIN_B = 0.0015
PF_MOLAR_VOLUME = 7.09e-6       # iron [m^3/mol]
PF_DT_SAFETY = 0.2              # dt = 0.2 x stability bound
PF_N_SNAPSHOTS = 10
PF_SNAPSHOT_INTERVAL = 400
PF_N_INITIAL_CONDITIONS = 170

# Initial-condition ranges (boundary band parallel to x)
IC_HALF_WIDTH_RANGE = (1, 12)
IC_NOISE_RANGE = (0.075, 0.099)

# --- CPFEM (plane strain, Q4, one element per pixel) ---
FEM_STRAIN_RATE = 1.0e-4        # [1/s]
FEM_LATTICE_ROTATION_DEG = 10.0
FEM_SLIP_ANGLES_DEG = (0.0, 60.0, -60.0)
FEM_VARIANT_OFFSETS_DEG = {0: 0.0, 1: 0.0, 2: 90.0}
FEM_STRAIN_INCREMENT = 1.0e-3
FEM_MIN_STRAIN_INCREMENT = 1.0e-7
FEM_MAX_STRAIN = 0.6
FEM_NECKING_MARGIN = 0.02
FEM_MAX_SLIP_INCREMENT = 5.0e-3  # per load step; larger steps are cut back
FEM_MAX_SUBSTEP_SLIP = 1.0e-4    # per state substep
FEM_THETA = 0.5                  # rate-tangent implicitness
FEM_RHO_FLOOR = 1.0e-4           # [1/um^2]
FEM_MEAN_FREE_PATH_MAX = 1.0e3   # [um]
FEM_SAVGOL_WINDOW = 5

# --- GAN ---
GAN_LATENT_DIM = 2
GAN_LATENT_LOW = 0.0
GAN_LATENT_HIGH = 100.0
GAN_ITERATIONS = 1_000_000
GAN_BATCH_SIZE = 32
GAN_CYCLE = 10                   # last iteration of each cycle trains the generator (9:1)
GAN_CLIP = 0.01
GAN_LEARNING_RATE = 1.0e-4
GAN_CHECKPOINT_EVERY = 1000
LEAKY_SLOPE = 0.2

# --- Adam ---
ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1.0e-8

# --- CNN regressor ---
CNN_SPLIT = (96, 10, 10)
CNN_ITERATIONS = 1200
CNN_BATCH_TENSILE = 1
CNN_BATCH_SHEAR = 4
CNN_LEARNING_RATE = 1.0e-4
CNN_N_IMAGES = 116

# --- Search ---
SEARCH_ITERATIONS = 5000
COMPARE_N_GRID = tuple(range(100, 1001, 100))
COMPARE_REPEATS = 10
COMPARE_REFERENCE_POINTS = 5000
HEATMAP_RESOLUTION = 101
LHS_CANDIDATES = 20
MATCHED_FRACTION_TOLERANCE = 0.02

# --- Artifact file names ---
DATASET_MANIFEST = "manifest.json"
RUN_MANIFEST = "run_manifest.json"
PROPS_FILE = "props.csv"
SEARCH_TRACE_FILE = "search_trace.csv"
COMPARE_FILE = "compare.csv"
CHECKPOINT_SUFFIX = ".mfnn"
