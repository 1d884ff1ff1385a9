//! Melodic similarity toolkit for a cappella flamenco cantes (deblas and
//! martinetes).
//!
//! The pipeline runs from frame-level pitch/energy data to symbolic
//! melodies ([`transcription`]), compares melodies by their interval
//! contour ([`contour`]) and expert annotations by a feature-vector distance
//! ([`midlevel`]), fuses both into an integrated distance and evaluates it
//! with distance-based classifiers ([`analysis`]), and exports trees and
//! distance files for phylogenetic tooling ([`phylo`]). [`pipeline`] ties
//! these together over a corpus manifest.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod contour;
pub mod midlevel;
pub mod phylo;
pub mod pipeline;
pub mod symbolic;
pub mod transcription;

pub use symbolic::{
    DistanceMatrix, IntervalSequence, Melody, NoteEvent, StyleLabel, SymbolicError,
};
