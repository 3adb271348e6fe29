"""Mean-absolute-deviation risk parity portfolios."""
from .kernels import BACKEND as KERNEL_BACKEND
from .risk import (PortfolioWeights, RiskContributionVector, closed_form_rp, is_additive,
                   mad, mad_subgradient, msad, rho_mad, risk_contributions, volatility)
from .scenarios import (PriceSeries, ScenarioMatrix, load_csv, returns_from_prices,
                        synth_comonotone)

__version__ = "0.1.0"
