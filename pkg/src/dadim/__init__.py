"""Finite-scale witnesses for dynamic asymptotic dimension.

Exact symbolic models of minimal Z-systems, finite etale groupoids,
single-scale coarse covers, simplicial-nerve machinery, almost-invariant
partitions of unity, and the cut-down decomposition of finite groupoid
convolution algebras -- with every certificate verifiable in exact
arithmetic where the mathematics allows it.
"""

from .coarse import (
    AsdimWitness,
    FiniteMetricSpace,
    Grid1dSpace,
    Grid2dSpace,
    GroupBallSpace,
    TableMetricSpace,
    bridge_to_groupoid,
    construct_grid_witness,
    exhaustive_min_colors,
    verify_asdim_witness,
)
from .convolution import (
    BlockDecomposition,
    ConvElement,
    adjoint,
    block_decompose,
    commutator_report,
    convolve,
    cutdown,
    decompose_via_pou,
    reduced_norm,
    regular_representation,
)
from .groupoid import (
    FiniteGroupoid,
    GroupoidDadWitness,
    TransformationGroupoid,
    TubePairGroupoid,
    generate_subgroupoid,
    pair_groupoid,
    transformation_groupoid,
    verify_groupoid_dad,
)
from .nerve import (
    SimplicialComplex,
    SimplicialPoint,
    check_equivariance,
    cover_from_map,
    dad_witness_from_blr,
    distance_to_skeleton,
    l1_distance,
    map_from_cover,
    nice_cover_assign,
    nice_cover_membership,
    perturb_to_finite_support,
)
from .pipeline import corpus_check, run_pipeline
from .pou import (
    NestedColorTower,
    PartitionOfUnity,
    build_pou,
    build_tower,
    enlarge_cover,
    pou_from_group_action,
    verify_pou,
)
from .symbolic import (
    ClopenSet,
    ForbiddenWordSubshift,
    Odometer,
    ReturnTimeReport,
    SubstitutionSubshift,
    SymbolicSystem,
    disjoint_translates_radius,
    return_time_report,
    translate,
)
from .witness import DadWitness, construct_minimal_z_witness, verify_dad_witness

__version__ = "0.1.0"
