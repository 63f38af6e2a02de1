//! Quadratic bistochastic operators on the standard simplex.
//!
//! The crate covers the majorization preorder on probability vectors, an
//! operator algebra (quadratic tensors, coordinate permutations, doubly
//! stochastic maps, convex mixes), certification and falsification of
//! bistochasticity, trajectory dynamics with periodic-orbit detection, and
//! relative-interior geometry of finitely generated polytopes.

pub mod bistochastic;
pub mod cli;
pub mod dynamics;
pub mod error;
mod lp;
pub mod operator;
pub mod polytope;
mod refine;
pub mod sampling;
pub mod simplex;

pub use bistochastic::{
    certify_bistochastic, falsify_bistochastic, make_family_va, sorting_cone_invariance_check,
    Certificate, CertificateResult, Counterexample, FalsifyReport, FalsifyVerdict,
};
pub use dynamics::{
    check_mix_fix_identity, classify_regularity, find_fixed_points, iterate, omega_limit_estimate,
    periodic_points_probe, Classification, DynamicsConfig, RegularityVerdict, Tolerances,
    TrajectoryRecord, TrajectoryVerdict,
};
pub use error::{Error, Result};
pub use operator::{
    all_permutation_operators, compose_with_permutation, fixture_counterexample_pair, mix,
    DoublyStochasticMatrix, MixTerm, Mixture, OperatorSpec, PermutationOperator, QsoTensor,
};
pub use polytope::{
    check_irredundant, closure_density_test, half_open_segment_property_test,
    qbo_interior_mix_generator, ri_membership, ri_sample, segment_extension_test, PolytopeSpec,
};
pub use simplex::{
    barycenter, in_permutation_polytope, l1_distance, majorizes, sort_descending, SimplexPoint,
    SortedPoint,
};
