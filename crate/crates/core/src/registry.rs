//! Registry records describing data sources, and their binarization into a
//! formal context.
//!
//! A corpus is a TOML document holding `[[source]]` tables, or a directory of
//! such documents read in file-name order. Indexing terms are written
//! `PREFIX:term`, where the prefix names an ontology declared in the record's
//! `ontologies_used`; the reserved prefix `free` marks uncontrolled terms.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::path::Path;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::context::{Attribute, Category, FormalContext, SourceId};
use crate::error::{Error, Result};
use crate::ontology::Ontology;

/// Prefix of terms that come from no ontology.
pub const FREE_PREFIX: &str = "free";

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PrefixedTerm {
    pub prefix: String,
    pub term: String,
}

impl PrefixedTerm {
    pub fn parse(text: &str) -> Result<Self> {
        let (prefix, term) = text.split_once(':').unwrap_or((FREE_PREFIX, text));
        let (prefix, term) = (prefix.trim(), term.trim());
        if prefix.is_empty() || term.is_empty() {
            return Err(Error::Document(format!("malformed term `{text}`")));
        }
        Ok(PrefixedTerm { prefix: prefix.to_string(), term: term.to_string() })
    }

    pub fn is_free(&self) -> bool {
        self.prefix == FREE_PREFIX
    }

    fn to_attribute(&self, category: Category) -> Attribute {
        let attr = if self.is_free() {
            Attribute::new(&self.term, category)
        } else {
            Attribute::prefixed(&self.prefix, &self.term, category)
        };
        attr.expect("prefixed terms are non-empty")
    }
}

impl fmt::Display for PrefixedTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.prefix, self.term)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OntologyRef {
    pub prefix: String,
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub version: String,
    #[serde(default)]
    pub location: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MetadataRecord {
    pub id: SourceId,
    /// Title, publisher, update frequency, dates.
    pub identification: BTreeMap<String, String>,
    pub subjects: Vec<PrefixedTerm>,
    pub organisms: Vec<PrefixedTerm>,
    pub quality: Vec<PrefixedTerm>,
    /// Coverage counts and similar figures, kept as opaque text.
    pub quality_metrics: BTreeMap<String, String>,
    /// Access URLs and constraints.
    pub availability: BTreeMap<String, String>,
    pub ontologies_used: Vec<OntologyRef>,
}

impl MetadataRecord {
    pub fn terms(&self, category: Category) -> &[PrefixedTerm] {
        match category {
            Category::Subject => &self.subjects,
            Category::Organism => &self.organisms,
            Category::Quality => &self.quality,
            Category::Identification | Category::Availability => &[],
        }
    }

    fn section(&self, section: RecordSection) -> &BTreeMap<String, String> {
        match section {
            RecordSection::Identification => &self.identification,
            RecordSection::Availability => &self.availability,
            RecordSection::QualityMetrics => &self.quality_metrics,
        }
    }
}

#[derive(Default, Serialize, Deserialize)]
struct CorpusDoc {
    #[serde(default)]
    source: Vec<RecordDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RecordDoc {
    id: Option<String>,
    #[serde(default)]
    subjects: Vec<String>,
    #[serde(default)]
    organisms: Vec<String>,
    #[serde(default)]
    quality: Vec<String>,
    #[serde(default)]
    identification: BTreeMap<String, String>,
    #[serde(default)]
    quality_metrics: BTreeMap<String, String>,
    #[serde(default)]
    availability: BTreeMap<String, String>,
    #[serde(default)]
    ontologies_used: Vec<OntologyRef>,
}

impl TryFrom<RecordDoc> for MetadataRecord {
    type Error = Error;
    fn try_from(doc: RecordDoc) -> Result<Self> {
        let id = match doc.id {
            Some(id) if !id.trim().is_empty() => SourceId::new(id)?,
            _ => return Err(Error::MissingId),
        };
        let terms = |list: Vec<String>| list.iter().map(|t| PrefixedTerm::parse(t)).collect::<Result<Vec<_>>>();
        let record = MetadataRecord {
            id,
            identification: doc.identification,
            subjects: terms(doc.subjects)?,
            organisms: terms(doc.organisms)?,
            quality: terms(doc.quality)?,
            quality_metrics: doc.quality_metrics,
            availability: doc.availability,
            ontologies_used: doc.ontologies_used,
        };
        let declared: HashSet<&str> = record.ontologies_used.iter().map(|o| o.prefix.as_str()).collect();
        for t in record.subjects.iter().chain(&record.organisms).chain(&record.quality) {
            if !t.is_free() && !declared.contains(t.prefix.as_str()) {
                return Err(Error::UndeclaredPrefix { record: record.id.to_string(), prefix: t.prefix.clone() });
            }
        }
        Ok(record)
    }
}

impl From<&MetadataRecord> for RecordDoc {
    fn from(r: &MetadataRecord) -> Self {
        let terms = |list: &[PrefixedTerm]| list.iter().map(ToString::to_string).collect();
        RecordDoc {
            id: Some(r.id.to_string()),
            subjects: terms(&r.subjects),
            organisms: terms(&r.organisms),
            quality: terms(&r.quality),
            identification: r.identification.clone(),
            quality_metrics: r.quality_metrics.clone(),
            availability: r.availability.clone(),
            ontologies_used: r.ontologies_used.clone(),
        }
    }
}

/// Parses one corpus document.
pub fn parse_records(doc: &str) -> Result<Vec<MetadataRecord>> {
    parse_documents([doc])
}

/// Parses several documents as one corpus; ids must be unique across all.
pub fn parse_documents<'a>(docs: impl IntoIterator<Item = &'a str>) -> Result<Vec<MetadataRecord>> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for doc in docs {
        let corpus: CorpusDoc = toml::from_str(doc)?;
        for raw in corpus.source {
            let record = MetadataRecord::try_from(raw)?;
            if !seen.insert(record.id.clone()) {
                return Err(Error::DuplicateRecord(record.id.to_string()));
            }
            out.push(record);
        }
    }
    Ok(out)
}

/// Reads a corpus file, or every `.toml` file of a directory in name order.
pub fn read_corpus(path: impl AsRef<Path>) -> Result<Vec<MetadataRecord>> {
    let path = path.as_ref();
    if !path.is_dir() {
        return parse_records(&std::fs::read_to_string(path)?);
    }
    let mut files: Vec<_> = std::fs::read_dir(path)?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    files.retain(|p| p.extension().is_some_and(|e| e == "toml"));
    files.sort();
    let texts = files.iter().map(std::fs::read_to_string).collect::<std::io::Result<Vec<_>>>()?;
    parse_documents(texts.iter().map(String::as_str))
}

/// Serializes records back into the corpus format.
pub fn write_records(records: &[MetadataRecord]) -> String {
    let doc = CorpusDoc { source: records.iter().map(RecordDoc::from).collect() };
    toml::to_string(&doc).expect("records serialize")
}

/// Which free-text section of a record a mapping rule reads.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RecordSection {
    Identification,
    Availability,
    QualityMetrics,
}

/// Emits `attribute` for every record whose `section[field]` equals `equals`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MappingRule {
    pub section: RecordSection,
    pub field: String,
    pub equals: String,
    pub attribute: Attribute,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinarizationConfig {
    categories: Vec<Category>,
    rules: Vec<MappingRule>,
}

impl Default for BinarizationConfig {
    fn default() -> Self {
        BinarizationConfig {
            categories: vec![Category::Subject, Category::Organism, Category::Quality],
            rules: Vec::new(),
        }
    }
}

impl BinarizationConfig {
    /// Only Subject, Organism and Quality hold indexing terms.
    pub fn new(categories: impl IntoIterator<Item = Category>) -> Result<Self> {
        let mut cats: Vec<Category> = Vec::new();
        for c in categories {
            if matches!(c, Category::Identification | Category::Availability) {
                return Err(Error::InvalidCategory(c.to_string()));
            }
            if !cats.contains(&c) {
                cats.push(c);
            }
        }
        if cats.is_empty() {
            return Err(Error::NoCategories);
        }
        Ok(BinarizationConfig { categories: cats, rules: Vec::new() })
    }

    pub fn with_rule(mut self, rule: MappingRule) -> Self {
        self.rules.push(rule);
        self
    }

    pub fn categories(&self) -> &[Category] {
        &self.categories
    }
}

/// One object per record, one attribute per distinct term of an included
/// category (first-occurrence order), plus rule-generated attributes.
pub fn build_context(records: &[MetadataRecord], cfg: &BinarizationConfig) -> Result<FormalContext> {
    if cfg.categories.is_empty() {
        return Err(Error::NoCategories);
    }
    let mut categories: HashMap<Attribute, Category> = HashMap::new();
    let mut rows = Vec::with_capacity(records.len());
    for r in records {
        let mut attrs = Vec::new();
        for &cat in &[Category::Subject, Category::Organism, Category::Quality] {
            if !cfg.categories.contains(&cat) {
                continue;
            }
            attrs.extend(r.terms(cat).iter().map(|t| t.to_attribute(cat)));
        }
        for rule in &cfg.rules {
            if r.section(rule.section).get(&rule.field).is_some_and(|v| v.trim() == rule.equals) {
                attrs.push(rule.attribute.clone());
            }
        }
        for a in &attrs {
            let cat = *categories.entry(a.clone()).or_insert(a.category());
            if cat != a.category() {
                return Err(Error::CategoryConflict { term: a.key(), first: cat, second: a.category() });
            }
        }
        let mut seen = HashSet::new();
        attrs.retain(|a| seen.insert(a.clone()));
        rows.push((r.id.clone(), attrs));
    }
    FormalContext::from_rows(rows)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Severity {
    Info,
    Warning,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FindingKind {
    TermNotFound { category: Category, term: String },
    EmptyCategory(Category),
    MalformedDate { field: String, value: String },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Finding {
    pub severity: Severity,
    pub kind: FindingKind,
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let level = match self.severity {
            Severity::Info => "info",
            Severity::Warning => "warning",
        };
        match &self.kind {
            FindingKind::TermNotFound { category, term } => {
                write!(f, "{level}: {category} term `{term}` is not in its ontology")
            }
            FindingKind::EmptyCategory(c) => write!(f, "{level}: no {c} terms"),
            FindingKind::MalformedDate { field, value } => write!(f, "{level}: `{field}` = `{value}` is not a W3CDTF date"),
        }
    }
}

fn is_date_field(name: &str) -> bool {
    matches!(name, "date" | "created" | "modified" | "issued" | "available") || name.ends_with("_date")
}

fn is_w3cdtf(value: &str) -> bool {
    static SHAPE: OnceLock<Regex> = OnceLock::new();
    let re = SHAPE.get_or_init(|| {
        Regex::new(
            r"^(\d{4})(?:-(\d{2})(?:-(\d{2})(?:T\d{2}:\d{2}(?::\d{2}(?:\.\d+)?)?(?:Z|[+-]\d{2}:\d{2}))?)?)?$",
        )
        .unwrap()
    });
    let Some(caps) = re.captures(value.trim()) else {
        return false;
    };
    let in_range = |i: usize, hi: u32| caps.get(i).is_none_or(|m| (1..=hi).contains(&m.as_str().parse().unwrap_or(0)));
    in_range(2, 12) && in_range(3, 31)
}

/// Checks a record against the loaded ontologies. Terms whose prefix has no
/// loaded ontology are not checked.
pub fn validate_record(record: &MetadataRecord, ontologies: &[Ontology]) -> Vec<Finding> {
    let mut findings = Vec::new();
    for cat in [Category::Subject, Category::Organism, Category::Quality] {
        let terms = record.terms(cat);
        if terms.is_empty() {
            findings.push(Finding { severity: Severity::Info, kind: FindingKind::EmptyCategory(cat) });
        }
        for t in terms {
            let Some(ont) = ontologies.iter().find(|o| o.prefix() == t.prefix) else {
                continue;
            };
            if !ont.contains(&t.term) {
                findings.push(Finding {
                    severity: Severity::Warning,
                    kind: FindingKind::TermNotFound { category: cat, term: t.to_string() },
                });
            }
        }
    }
    for (field, value) in &record.identification {
        if is_date_field(field) && !is_w3cdtf(value) {
            findings.push(Finding {
                severity: Severity::Warning,
                kind: FindingKind::MalformedDate { field: field.clone(), value: value.clone() },
            });
        }
    }
    findings
}
