"""Finite-field laboratory for corners generated by rational functions.

Counting operators, Fourier and Gowers-norm inequality chains, Roth-variety
point counts, Jacobian identity checks and the degree-lowering trace.
"""

from .ratfun import BadPrime, RatFunFp, RatFunQ, parse_ratfun, reduce_mod_p, reduce_pair_mod_p
from .grid import GridFn, dft2, generate
from .kernel import KernelTable, kernel_table
from .counting import corner_operator, degree_lowering_trace, main_term
from .varieties import roth_count, roth_count_charsum

__version__ = "0.1.0"
