"""Exact-integer construction and verification of dimension-certifying covers.

The library builds covers of Z^d whose r-components are uniformly bounded,
covers of free symbolic dynamical systems (p-adic odometers and Sturmian
shifts) whose F-chain components are S-bounded, combines covers of unions,
and runs the zero-dimensional tower pipeline that converts a (d+1)-color
cover into an (asdim+1)-color cover.  Every construction is checked by an
independent verifier and every verdict is a replayable certificate.  All
arithmetic is exact integer arithmetic.
"""

from coverdim.group import FiniteSubset, ball, product, power, diam, symmetrize
from coverdim.systems import (
    OdometerSystem,
    SturmianSystem,
    RestrictedSystem,
    TranslationSystem,
    OdometerClopen,
    SturmianClopen,
    restrict,
    translate,
    refine,
    admissible_words,
    check_free,
    open_enlarge,
)
from coverdim.chains import (
    ComponentAutomaton,
    f_components,
    is_s_bounded,
    f_separated,
    component_of_in,
)
from coverdim.asdim import (
    GroupCover,
    grid_cover,
    verify_group_cover,
    control_function,
    gamma_action_cover,
    verify_translation_cover,
)
from coverdim.covers import (
    Cover,
    Certificate,
    ScaleSchedule,
    TowerDecomposition,
    verify_dad_cover,
    combine_union,
    scale_schedule,
    tower_decomposition,
    cover_tower,
    reduce_cover,
    restrict_cover,
    orbit_transport,
)

__all__ = [name for name in dir() if not name.startswith("_")]
