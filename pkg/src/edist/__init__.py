"""Sublinear-query approximation of edit distance via a hierarchical tree distance."""

from .text import Text, as_text, codes, decode, encode
from .exact import ed, edd, lcs, extract_alignment, is_alignment, edd_certified
from .etree import (TreeParams, distance_transform, e_from_Z, exact_e_distance, optimal_z,
                    pad_pair, pad_to_power, zvector_cost)
from .sampling import PrecisionDist, SampleTree, build_sample_tree, query_count, sample_precision
from .estimation import (EstimateReport, GuardedText, RangeMin, approximate_ed, dtep_decide,
                         dtep_report, estimate_e_distance, reconstruct_R, shift_grid)
from .hard import (HardInstance, HardInstanceParams, SubstitutionMap, cyclic_shift, gen_hard_pair,
                   lambda_B, substitution_product)
from .similarity import (ExplicitDist, distinguisher_experiment, optimal_tree, projected_pmf,
                         similarity_alpha, uniform_similarity)

__version__ = "0.1.0"
