//! Graph active learning with a contrastive GCN encoder and minimax
//! homophilous node selection.
//!
//! The pieces compose bottom-up: [`graph`] and [`dataset`] hold the data,
//! [`augment`] draws stochastic views, [`model`] and [`objective`] define the
//! encoder and its loss, [`training`] runs the optimizer, [`selection`] picks
//! nodes to label, [`eval`] measures the result and [`experiment`] wires the
//! whole loop together.

pub mod augment;
pub mod cli;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod graph;
pub mod model;
pub mod objective;
pub mod rng;
pub mod selection;
pub mod training;

pub use error::{Error, Result};
pub use graph::{ego_homophily, k_hop_neighbors, mean_graph_homophily, normalize_adjacency, Csr, Graph};
pub use selection::{minimax_select, ALState, Strategy};
