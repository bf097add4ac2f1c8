"""Representations by x^2 + d y^2: class groups, L(1, chi) and coverage sieves."""

from .arith import (FactoredInteger, FundDisc, SieveTables, assoc_discriminant, build_sieve,
                    factorize, gamma_W, gaussian_cdf, kronecker, one_star_chi)
from .classgroup import (ClassCharacter, ClassGroup, R_D, build_class_group, characters,
                         compose, genus_characters, r_coeff)
from .coverage import (CoverageBitmap, KCountTable, count_by_k, coverage_bitmap,
                       phase_experiment, prop41_count, selberg_compare, squarefree_equivalent)
from .lfunctions import LEstimate, genus_factorization_residual, h_from_formula, l1_truncated
from .quadforms import QuadForm, enumerate_reduced, principal_rep_count, rep_count

__version__ = "0.1.0"
