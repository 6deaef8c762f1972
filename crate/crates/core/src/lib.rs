//! Poissonian Markov loop ensembles on finite weighted graphs, the Eulerian
//! and even networks they induce, and exact laws to check samples against.

pub mod complete;
pub mod configs;
pub mod enumerate;
pub mod error;
pub mod field;
pub mod genfunc;
pub mod graph;
pub mod homology;
pub mod identities;
pub mod io;
pub mod linalg;
pub mod maps;
pub mod networks;
pub mod quad;
pub mod rng;
pub mod soup;
pub mod stats;
pub mod suite;
pub mod wick;
pub mod wilson;

pub use error::{Error, Result};
pub use graph::{DualityMeasure, Edge, GreenFunction, TransitionMatrix, WeightedGraph};
pub use homology::{HarmonicBasis, OneForm};
pub use networks::{EulerianNetwork, EvenNetwork, Flow, HomologyClass};
pub use soup::{DiscreteLoop, LoopEnsemble, LoopSoup, OccupationField};
pub use stats::{GofReport, McEstimate};
