//! Feynman diagrams: enumeration, canonical forms, momentum-space valuation,
//! power counting, the extraction–contraction Hopf algebra and BPHZ.

pub mod canon;
pub mod diagram;
pub mod generate;
pub mod hopf;
pub mod valuate;

pub use canon::{canonical, isomorphic_brute};
pub use diagram::{named, Diagram, DiagramSum, Vertex};
pub use generate::{generate_diagrams, generate_with, generate_with_loops};
pub use hopf::{
    bphz_valuate, ck_coproduct, coassociativity, contract, degree, degree_symbolic,
    divergent_forests, divergent_subgraphs, is_divergent, weinberg_check, Antipode, Forest,
    ForestSum, TensorSum,
};
pub use valuate::{
    lattice_model, two_point_value, valuate, valuate_external, valuate_position_mc,
    valuate_with_budget, Valuator,
};
