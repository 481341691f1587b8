"""qmpe-lab: star-topology Davies generator workbench.

Assembles the dissipative generator of a d-level probe thermalizing through
its ground state, reproduces its exact spectrum, evaluates thermometric
distinguishability against the analytic roof, detects anomalous-relaxation
exceedance between trajectories, and stress-tests the supporting trace-norm
inequalities and Haar-concentration statistics.
"""

__version__ = "0.1.0"
