"""Optimal control of separable network dynamics.

Systems of the form dz/dt = mu(t) h(z, p) with a scalar control mu reduce,
through the rescaling tau = int mu, to a single autonomous flow; the three
observable-constrained control problems (maximize the terminal observable
under a cost budget, minimize cost to a target, minimize time to a target
under a budget) then collapse to constant-control reference problems that
are solved in closed form.  This package implements both routes, the
analytic one and a KKT solver over Chebyshev control coefficients, and
cross-validates them.
"""

from .control import ControlPolynomial, CostFunction, constant_control, eval_mu, integral_G, integral_I
from .core import (SeparableSystem, Trajectory, forward_sensitivities,
                   integrate_controlled, integrate_rescaled,
                   lie_derivative_phi, observable_curve)
from .coupling import CouplingResult, find_phi_h_roots, solve_c2
from .models import (ClassDistribution, Graph, adn_initial_state, adn_system,
                     default_graph, kuramoto_system, oa_initial_state,
                     oa_system, power_law_weights, splay_state)
from .ocp import (OCProblem, SolverOptions, StationaryPoint, classify_sp,
                  enumerate_sps, kkt_residual, solve_stationary)
from .reference import (ReferenceSolution, map_multipliers,
                        solve_budgeted_reach, solve_min_horizon,
                        solve_prescribed_reach)

__version__ = "0.1.0"
