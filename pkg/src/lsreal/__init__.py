"""Realization and moment-matching tools for linear switched systems.

Construct generalized Markov parameters from a switched state-space model,
assemble their finite Hankel blocks, and recover (partial) realizations via
the column-space or factorization algorithm.  The :mod:`lsreal.series`
module exposes the underlying rational power-series representations, and
:mod:`lsreal.analysis` provides reachability/observability certificates and
isomorphism search.  The ``lsreal`` command line wraps the same operations
over JSON files.
"""

from . import errors
from .analysis import (
    MinimalityCertificate,
    SubspaceBasis,
    certify_minimal,
    find_isomorphism,
    lss_match_order,
    markov_match_order,
    obs_space,
    reach_space,
)
from .hankel import (
    ColIndexing,
    HankelBlock,
    RankTolerance,
    RowIndexing,
    build_block,
    enumerate_words,
    find_stable_N,
    numerical_rank,
)
from .lss import (
    Alphabet,
    InitialTag,
    InputChannel,
    Lss,
    MarkovFamily,
    PiecewiseConstantInput,
    Realization,
    SeriesIndex,
    SwitchingSequence,
    Word,
    canonical_indices,
    finite_diff_markov,
    kernel_G,
    kernel_K,
    markov_from_lss,
    mode_exp,
    simulate,
)
from .realize import (
    RankConditionReport,
    check_rank_condition,
    minimal_realize,
    realize_columns,
    realize_factor,
    reduce,
    represent_factor,
)
from .series import (
    Representation,
    TruncatedSeries,
    family_from_markov,
    lss_to_representation,
    representation_to_lss,
    series_eval,
    shift,
)

__version__ = "0.1.0"
