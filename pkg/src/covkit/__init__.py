"""covkit: limited-range coverage optimization for planar agent networks."""

__version__ = "0.1.0"

from .dynamics import (  # noqa: F401
    ALGORITHMS,
    CONTINUOUS_EULER,
    LINE_SEARCH,
    MAX_STEP,
    AscentReport,
    NetworkEvaluation,
    NetworkState,
    Scenario,
    StepDiagnostics,
    StepRecord,
    continuous_step,
    evaluate_network,
    line_search_step,
    max_step,
    run,
)
from .errors import (  # noqa: F401
    CoincidentAgentsError,
    CovkitError,
    DegenerateMassError,
    DomainError,
    GeometryError,
    GraphMismatchError,
    QuadratureAccuracyError,
    RenderError,
    ScenarioError,
    StepFailureError,
)
from .geometry import (  # noqa: F401
    LENS_BOUND_CONSTANT,
    BoundaryPiece,
    CellRegion,
    ClosedBall,
    ConvexPolygon,
    cell_ball_region,
    check_admissible,
    clip_halfplane,
    lens_area,
    polygon_diameter,
    polygon_region,
    voronoi_cells,
)
from .objective import (  # noqa: F401
    ApproximationBounds,
    DensityField,
    GradientReport,
    PerformanceFunction,
    Piece,
    approximation_bounds,
    area_performance,
    cell_value_and_gradient,
    centroid_performance,
    coverage_fraction,
    eval_performance,
    fixed_partition_value,
    gradient_vectors,
    mixed_continuous_performance,
    mixed_discontinuous_performance,
    multicenter_gradient,
    multicenter_value,
    normalized,
    one_center_gradient,
    one_center_value,
    truncate_performance,
)
from .proximity import (  # noqa: F401
    ProximityGraph,
    delaunay_graph,
    disk_graph,
    euclidean_mst,
    gabriel_graph,
    graph_intersection,
    graph_union,
    is_connected,
    is_subgraph,
    limited_delaunay_graph,
    local_limited_delaunay,
    r_delaunay_graph,
)
from .quadrature import (  # noqa: F401
    DEFAULT_SPEC,
    QuadratureSpec,
    comparison_slack,
    integrate_polar,
    mass_and_centroid,
    polar_nodes,
)
from .render import LAYERS, RenderSpec, render_frame, write_frame  # noqa: F401
from .scenario import (  # noqa: F401
    PRESETS,
    ScenarioDocument,
    build_performance,
    documents_equal,
    load_scenario,
    parse_scenario,
    sample_positions,
    serialize_scenario,
)
