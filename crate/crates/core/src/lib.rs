//! Knowledge-base agnostic, multilingual entity linking.
//!
//! The offline phase ([`kb`], [`index`]) turns a triple dump into a bundle of
//! retrieval indices. The online phase ([`text`], [`candidates`],
//! [`disambiguation`]) links the mentions of a document against that bundle.
//! [`linker`] ties the two steps together and produces the JSON wire format
//! shared by the HTTP [`service`] and the command line ([`cli`]).

pub mod candidates;
pub mod cli;
pub mod disambiguation;
pub mod eval;
pub mod index;
pub mod kb;
pub mod linker;
pub mod properties;
pub mod rank;
pub mod service;
pub mod text;
