//! Finds facts present in other-language Wikipedia articles but absent from
//! the English one, and packages them as per-topic datasets.
//!
//! Stages run in order: [`corpus`] fetches and segments articles,
//! [`decompose`] splits paragraphs into atomic facts, [`align`] classifies
//! each target fact as aligned or a gap, [`gapselect`] caps the gaps per
//! language, [`enrich`] translates and anchors them, and [`datastore`]
//! writes and serves the result. [`pipeline`] wires the stages together.
//!
//! Embedding math is generic over the float type; the aliases below fix
//! it to `f64` for the pipeline.

pub mod align;
pub mod config;
pub mod corpus;
pub mod datastore;
pub mod decompose;
pub mod enrich;
pub mod gapselect;
pub mod pipeline;
pub mod prompts;
pub mod provider;

pub type Scalar = f64;
pub type Embedding = align::EmbeddingVector<Scalar>;
pub type EmbeddingF32 = align::EmbeddingVector<f32>;
pub type Neighbors = align::NeighborSet<Scalar>;
pub type Gap = align::GapFact<Scalar>;
pub type Alignment = align::ArticleAlignment<Scalar>;
pub type Inventory = gapselect::GapInventory<Scalar>;
