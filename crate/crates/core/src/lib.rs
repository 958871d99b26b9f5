//! Simulation laboratory for multiplicative random graphs.
//!
//! A w-multiplicative random graph puts an edge between vertices `i` and `j`
//! independently with probability `1 - exp(-w_i w_j / σ_1(w))`.  This crate
//! implements two queue encodings of such graphs: a LIFO queue without
//! repetition, and a Markovian LIFO queue with i.i.d. client types together
//! with its Galton–Watson coupling and blue/red decomposition.  Around them
//! sit a direct sampler, coded (pinched) metric spaces with a GHP upper
//! bound, Laplace-exponent diagnostics for scaling families, a grid simulator
//! for the continuum limit process and the statistics used to compare laws
//! at desk scale.
//!
//! Module map:
//!
//! | module | contents |
//! |--------|----------|
//! | [`weights`] | weight sequences, moments, ER / power-law scaling families |
//! | [`scaling`] | Laplace exponents, inverse, extinction profile, regime reports |
//! | [`direct_graph`] | independent-coin sampler, components, BFS distances |
//! | [`lifo_coder`] | LIFO queue, load/height paths, surplus pinches, graph assembly |
//! | [`markov_coder`] | Markovian queue, GW forest coding, blue/red time changes |
//! | [`excursions`] | excursion intervals, ordering, pinch localisation |
//! | [`coded_metric`] | tree pseudometric, pinched distances, GHP bound |
//! | [`continuum`] | grid simulation of the limit load process and its masses |
//! | [`stat_harness`] | chi-square / KS tests, two-construction comparison |
//! | [`cli`] | command-line entry point |

pub mod cli;
pub mod coded_metric;
pub mod continuum;
pub mod direct_graph;
pub mod excursions;
pub mod io;
pub mod lifo_coder;
pub mod markov_coder;
pub mod numeric;
pub mod rng;
pub mod scaling;
pub mod stat_harness;
pub mod weights;

pub use weights::{LimitParams, ScalingTriple, WeightSeq};
