use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("identifier must not be empty")]
    EmptyIdentifier,
    #[error("unknown source `{0}`")]
    UnknownSource(String),
    #[error("unknown attribute `{0}`")]
    UnknownAttribute(String),
    #[error("duplicate source `{0}`")]
    DuplicateSource(String),
    #[error("duplicate attribute `{0}`")]
    DuplicateAttribute(String),
    #[error("source id `{0}` is reserved for query objects")]
    ReservedSource(String),
    #[error("invalid category `{0}`")]
    InvalidCategory(String),
    #[error("term `{term}` is ambiguous, candidates: {}", candidates.join(", "))]
    AmbiguousTerm { term: String, candidates: Vec<String> },

    #[error("context has {attributes} attributes; brute-force enumeration is limited to {limit} (test-scale use only)")]
    ContextTooLarge { attributes: usize, limit: usize },
    #[error("concept with intent {{{0}}} is not in the lattice")]
    ConceptNotFound(String),
    #[error("lattice document is inconsistent with its context: {0}")]
    InconsistentLattice(String),

    #[error("query has no terms")]
    EmptyQuery,
    #[error("query label `{0}` collides with a source id")]
    LabelCollision(String),

    #[error("ontology contains a cycle: {}", .0.join(" -> "))]
    OntologyCycle(Vec<String>),
    #[error("ontology term `{0}` is not reachable from the root")]
    UnreachableTerm(String),
    #[error("duplicate ontology term `{0}`")]
    DuplicateTerm(String),
    #[error("unknown ontology term `{0}`")]
    UnknownTerm(String),

    #[error("record is missing an id")]
    MissingId,
    #[error("duplicate record id `{0}`")]
    DuplicateRecord(String),
    #[error("record `{record}` uses undeclared ontology prefix `{prefix}`")]
    UndeclaredPrefix { record: String, prefix: String },
    #[error("term `{term}` is listed under both {first} and {second}")]
    CategoryConflict { term: String, first: crate::context::Category, second: crate::context::Category },
    #[error("binarization must include at least one category")]
    NoCategories,

    #[error("malformed cross table: {0}")]
    CrossTable(String),
    #[error("malformed document: {0}")]
    Document(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Toml(#[from] toml::de::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
