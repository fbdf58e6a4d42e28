"""Constrained portfolio construction toolkit.

Ingests daily prices, aggregates them to beginning-of-month observations,
estimates both the full-covariance and single-index input sets, solves
minimum-variance / maximum-Sharpe / target-return problems under five
constraint regimes, traces efficient frontiers with capital allocation
lines, and assembles dual-model comparison reports.
"""

__version__ = "0.1.0"

from .constraints import ConstraintSet, FeasibilityReport, check_feasible
from .errors import (
    ConfigError,
    ConvergenceError,
    DegenerateSharpeError,
    InfeasibleError,
    InsufficientDataError,
    ParseError,
    PortoptError,
    SamplingError,
    SingularMatrixError,
    ValidationError,
)
from .estimation import (
    IndexModelEstimates,
    MarkowitzEstimates,
    PortfolioStats,
    estimator_count,
    im_covariance,
    index_model_estimates,
    markowitz_estimates,
    portfolio_stats,
    sharpe_ratio,
)
from .frontier import (
    CloudSample,
    FrontierCurve,
    capital_allocation_line,
    cloud_points,
    sample_cloud,
    trace_frontier,
)
from .ingest import (
    DailyPriceTable,
    MonthlyReturnTable,
    RiskFreeSeries,
    annual_to_monthly_rate,
    average_risk_free,
    compute_monthly_returns,
    parse_price_table,
    parse_riskfree_table,
    select_bom,
)
from .report import ComparisonReport, ReportCell, compare_models
from .solver import (
    PortfolioSolution,
    attainable_return_range,
    closed_form_min_variance,
    closed_form_tangency,
    kkt_residual,
    solve_max_sharpe,
    solve_min_variance,
    solve_target_return,
)

__all__ = [
    "ConstraintSet", "FeasibilityReport", "check_feasible",
    "PortoptError", "ParseError", "ValidationError", "ConfigError",
    "InsufficientDataError", "InfeasibleError", "SingularMatrixError",
    "DegenerateSharpeError", "ConvergenceError", "SamplingError",
    "MarkowitzEstimates", "IndexModelEstimates", "PortfolioStats",
    "markowitz_estimates", "index_model_estimates", "im_covariance",
    "portfolio_stats", "sharpe_ratio", "estimator_count",
    "DailyPriceTable", "MonthlyReturnTable", "RiskFreeSeries",
    "parse_price_table", "parse_riskfree_table", "select_bom",
    "compute_monthly_returns", "annual_to_monthly_rate", "average_risk_free",
    "PortfolioSolution", "solve_min_variance", "solve_max_sharpe",
    "solve_target_return", "closed_form_min_variance", "closed_form_tangency",
    "kkt_residual", "attainable_return_range",
    "FrontierCurve", "CloudSample", "trace_frontier",
    "capital_allocation_line", "sample_cloud", "cloud_points",
    "ComparisonReport", "ReportCell", "compare_models",
]
