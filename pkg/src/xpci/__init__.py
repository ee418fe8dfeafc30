"""xpci: simulation and inversion toolkit for X-ray phase-contrast imaging.

Forward-models scalar wave propagation through samples and linear
shift-invariant imaging systems (coherent or partially coherent), and
solves the matching inverse problems: single-image thickness retrieval,
regularised transfer-function inversion, multi-image field recovery,
rocking-curve refraction retrieval, and parallel-beam tomography.
"""

__version__ = "0.1.0"

from .errors import (
    ChecksumError,
    FormatError,
    GridMismatchError,
    NumericalError,
    SchemaError,
    ToolkitError,
    TruncatedPayloadError,
    ValidationError,
    WavelengthMismatchError,
)
from .field import (
    ComplexField,
    Grid2D,
    IntensityImage,
    PhaseMap,
    compose_field,
    extract_intensity,
    extract_phase,
    total_power,
)
from .propagation import (
    Analyser,
    Custom,
    FreeSpace,
    LinearSystem,
    TransferFunction,
    analyser_transfer,
    apply_system,
    apply_transfer,
    compose,
    fresnel_propagate,
)
from .sample import (
    EffectiveGeometry,
    FresnelVerdict,
    Material,
    ProjectedObject,
    RefractiveVolume,
    TransmissionFunction,
    apply_sample,
    diffraction_spread,
    effective_geometry,
    fresnel_number,
    mu_from_beta,
    multislice,
    project,
    sphere_phantom,
    transmission_function,
)
from .tie import TieTerms, tie_forward, tie_terms
from .retrieval import (
    RetrievalConfig,
    invert_transfer_single,
    paganin_retrieve,
    schiske_combine,
)
from .coherence import (
    ModeEnsemble,
    PolyState,
    RandomPhaseScreen,
    SourceModel,
    TiltedPlaneWaves,
    apply_pipeline,
    cross_spectral_density,
    detected_intensity,
    make_ensemble,
    penumbral_blur,
    propagate_ensemble,
    spectral_density,
    spectral_density_stderr,
)
from .gradient import (
    AngularKernel,
    DeiResult,
    KernelRetrieval,
    RockingCurve,
    convolution_forward,
    deconvolution_retrieve,
    dei_two_image,
    geometric_forward,
    scatter_forward,
)
from .tomo import (
    ReconSlice,
    Sinogram,
    fbp_reconstruct,
    forward_sinogram,
    paganin_fbp,
    region_snr,
)
from .fileio import (
    GenericMap,
    load_volume,
    read_raster,
    read_rocking_curve,
    read_sidecar,
    save_volume,
    write_raster,
    write_rocking_curve,
)
from .config import ExperimentConfig, load_config, validate_config
from .pipelines import (
    PipelineResult,
    SweepCell,
    detect_rim_fringe,
    run_pipeline,
    sphere_sweep,
)
