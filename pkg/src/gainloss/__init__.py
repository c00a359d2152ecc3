"""Equilibrium asset prices with expectations-based reference-dependent preferences
and a stochastic consumption-dividend ratio."""
from .processes import (MarketState, ProcessParams, SamplePath, TABLE1, cdf_eps,
                        dividend_growth, lognormal_moment, log_y_ratio_dists, mle_calibrate,
                        sample_path, stationary_log_y, step_log_y)
from .preferences import PreferenceParams, m, mu, weight_contemp, weight_prosp
from .numerics import (Grid2D, GridFunction, QuadratureRule, bisect, default_grid,
                       expect_eps, expect_joint, fixed_point, gauss_hermite, interp)
from .model2 import (EquilibriumPrices, cw_ratio2, growth_condition2, price2, sdf2,
                     statics_thresholds)
from .model1 import (HSolution, cw_ratio1, euler_residuals, h_lower_bound, price1, sdf1,
                     solve_h, t_operator)
from .montecarlo import MomentReport, SimConfig, conditional_series, simulate_moments, sweep

__version__ = "0.1.0"
