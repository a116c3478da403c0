"""Minimax regret and capacity-achieving priors under model misspecification."""

__version__ = "0.1.0"

from .families import (BERNOULLI, MARKOV, ParamGrid, build_bernoulli_grid, build_markov_grid,
                       build_multinomial_grid, type_classes)
from .measures import Prior, project_onto_theta, theta_epsilon_shell
from .solvers import ABConfig, SolverReport, ab_misspecified, capacity_batch, capacity_online
from .constrained import ConstrainedReport, ab_two_stage, mixture_projection
from .predictors import mixture_table, nml_bernoulli, pnml_batch

__all__ = ["BERNOULLI", "MARKOV", "ParamGrid", "build_bernoulli_grid", "build_markov_grid",
           "build_multinomial_grid", "type_classes", "Prior", "project_onto_theta",
           "theta_epsilon_shell", "ABConfig", "SolverReport", "ab_misspecified", "capacity_batch",
           "capacity_online", "ConstrainedReport", "ab_two_stage", "mixture_projection",
           "mixture_table", "nml_bernoulli", "pnml_batch", "__version__"]
