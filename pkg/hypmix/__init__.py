"""hypmix: suspension flows over non-compact skew products.

hypmix is a package for the skew product P(x, y) = (f0(x), g0(y)) left of
x = 1 and (x - 1, y + 1) right of it, its suspension by the roof rho and
the inducing scheme F, Fhat, Ftilde that turns it into a Gibbs-Markov
suspension. It verifies the hypotheses of exponential mixing numerically
(exactly where the maps are rational) and estimates the decay of
correlations of the geodesic flow on the modular surface, the instance
f0(x) = x / (1 - x), rho0 = 1/2.

the best start is modular_family and check_assumptions, then locate and
Fhat_eval for the inducing scheme, the roof tower in roof, and correlate
for the Monte Carlo experiment. The command hypmix runs the same steps
from a configuration file.

examples
--------
>>> from fractions import Fraction
>>> from hypmix import (
...     DensitySpec,
...     Fhat_eval,
...     PlanePoint,
...     check_assumptions,
...     locate,
...     modular_family,
...     rho_eval,
... )
>>> family = modular_family()
>>> check_assumptions(family, n_max=100).passed
True
>>> locate(family, Fraction(11, 20))[0]
BranchIndex(2, 4)
>>> Fhat_eval(family, Fraction(11, 20))[0]
Fraction(2, 3)
>>> round(rho_eval(family, PlanePoint(0.5, 1.0)), 12)
0.69314718056
>>> round(DensitySpec(family).nu_normalizer, 12)
0.69314718056

>>> from hypmix import correlate, default_observables, time_grid
>>> u, v = default_observables()
>>> estimate = correlate(
...     DensitySpec(family), u, v, time_grid(10.0, 0.5), 10**6, seed=42
... )  # doctest: +SKIP
>>> estimate.plot()  # doctest: +SKIP
"""

from typing import List

__all__: List[str] = [
    "CorrelationEstimate",
    "DensitySpec",
    "F_eval",
    "Fhat_eval",
    "FlowPoint",
    "Ftilde_eval",
    "MapFamily",
    "Observable",
    "P_step",
    "Phat_step",
    "PlanePoint",
    "Ptilde_step",
    "RoofConfig",
    "RunConfig",
    "bowen_u",
    "check_assumptions",
    "correlate",
    "default_observables",
    "fit_decay",
    "flow_advance",
    "hm_params",
    "interval_I",
    "interval_J",
    "inverse_branch",
    "locate",
    "modular_family",
    "project_pi",
    "read_config",
    "rho_eval",
    "sample_m_rho",
    "sample_nu_r",
    "tails_partial",
    "time_grid",
    "transfer_residual",
    "uni_check",
]

from hypmix.flow_sim import (
    CorrelationEstimate,
    FlowPoint,
    Observable,
    correlate,
    default_observables,
    fit_decay,
    flow_advance,
    project_pi,
    time_grid,
)
from hypmix.inducing import (
    F_eval,
    Fhat_eval,
    Ftilde_eval,
    interval_I,
    interval_J,
    inverse_branch,
    locate,
)
from hypmix.map_family import MapFamily, check_assumptions, modular_family
from hypmix.measure import (
    DensitySpec,
    sample_m_rho,
    sample_nu_r,
    transfer_residual,
)
from hypmix.parameters_settings import RunConfig, hm_params, read_config
from hypmix.roof import RoofConfig, bowen_u, rho_eval
from hypmix.skew import P_step, Phat_step, PlanePoint, Ptilde_step
from hypmix.verify import tails_partial, uni_check
