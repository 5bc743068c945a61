//! Formal concept analysis over a registry of metadata-described data sources.
//!
//! Sources and their metadata terms form a [`FormalContext`]. The context is
//! organised into a [`ConceptLattice`], built incrementally one source at a
//! time. Queries are inserted into a copy of the lattice as a virtual object
//! and answered by walking the subsumers of the query concept
//! ([`retrieval::search`]). When a query fails, an [`Ontology`] over the
//! metadata vocabulary can generalize or specialize its terms.

pub mod context;
pub mod error;
pub mod lattice;
pub mod ontology;
pub mod registry;
pub mod retrieval;

pub use context::{Attribute, Category, FormalContext, SourceId};
pub use error::{Error, Result};
pub use lattice::{Concept, ConceptId, ConceptLattice, Labeling};
pub use ontology::{Hops, Ontology, RefineMode, RefinementReport};
pub use registry::{BinarizationConfig, MetadataRecord};
pub use retrieval::{Query, RankedResult, ResultSet};
