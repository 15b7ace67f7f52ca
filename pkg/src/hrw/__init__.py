"""Computable non-Archimedean field, expression calculus and integration lab."""

from .field import (
    Classification,
    DEFAULT_FIELD,
    ExtendedReal,
    Field,
    HyperReal,
    apply_analytic,
    classify,
    close_of_order,
    compare,
    epsilon,
    in_monad,
    in_order_ideal,
    infinitely_close,
    parse_hyperreal,
    st,
)
from .exprs import Expr, eval_hyper, eval_real, parse, render, symbolic_derivative
from .calculus import (
    CurveDef,
    CurvatureResult,
    Jet,
    JacobianResult,
    LimitResult,
    continuity_check,
    curvature,
    derivative,
    fn_limit,
    jacobian,
    kinematics,
    nth_increment,
    seq_limit,
    tangent_certificate,
    taylor_jet,
    unit_tangent,
)
from .integration import (
    ConvergenceReport,
    Gauge,
    PartitionSpec,
    Rect,
    Region,
    TaggedPartition,
    adaptive_simpson,
    converge_study,
    cousin_partition,
    darboux_bounds,
    gauge_sum,
    impulse,
    inner_sum,
    line_integral_work,
    measure_area_between,
    measure_curve_length,
    measure_mass_moment_com,
    measure_moment,
    measure_surface_revolution,
    measure_volume_revolution,
    morley_strip_sum,
    riemann_stieltjes_sum,
    riemann_sum,
    supernearness_probe,
    tagged_partition,
)

__all__ = [name for name in dir() if not name.startswith("_")]
