//! Formal contexts: sources, metadata attributes and their incidence.

use std::collections::HashMap;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::io::Read;
use std::str::FromStr;

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Object label reserved for the virtual object a query is inserted as.
pub const QUERY_LABEL: &str = "Query";

/// Identifier of a data source (an object of the context).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct SourceId(String);

impl SourceId {
    pub fn new(value: impl Into<String>) -> Result<Self> {
        let value = value.into();
        if value.trim().is_empty() {
            return Err(Error::EmptyIdentifier);
        }
        Ok(SourceId(value))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for SourceId {
    type Error = Error;
    fn try_from(value: String) -> Result<Self> {
        SourceId::new(value)
    }
}

impl From<SourceId> for String {
    fn from(id: SourceId) -> String {
        id.0
    }
}

impl fmt::Display for SourceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl AsRef<str> for SourceId {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

/// Metadata category of an attribute.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Category {
    Identification,
    Subject,
    Organism,
    Quality,
    Availability,
}

impl Category {
    pub const ALL: [Category; 5] = [
        Category::Identification,
        Category::Subject,
        Category::Organism,
        Category::Quality,
        Category::Availability,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Category::Identification => "Identification",
            Category::Subject => "Subject",
            Category::Organism => "Organism",
            Category::Quality => "Quality",
            Category::Availability => "Availability",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Category {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Category::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidCategory(s.to_string()))
    }
}

/// A metadata term, optionally prefixed by the ontology it comes from.
///
/// Identity is the `(prefix, term)` pair; the category is carried along but
/// does not take part in equality, hashing or ordering.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Attribute {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    prefix: Option<String>,
    term: String,
    category: Category,
}

impl Attribute {
    pub fn new(term: impl Into<String>, category: Category) -> Result<Self> {
        let term = term.into();
        if term.trim().is_empty() {
            return Err(Error::EmptyIdentifier);
        }
        Ok(Attribute { prefix: None, term, category })
    }

    pub fn prefixed(prefix: impl Into<String>, term: impl Into<String>, category: Category) -> Result<Self> {
        let prefix = prefix.into();
        if prefix.trim().is_empty() {
            return Err(Error::EmptyIdentifier);
        }
        let mut attr = Attribute::new(term, category)?;
        attr.prefix = Some(prefix);
        Ok(attr)
    }

    /// Unprefixed subject attribute; the default category of a bare term.
    pub fn subject(term: impl Into<String>) -> Result<Self> {
        Attribute::new(term, Category::Subject)
    }

    /// Parses `prefix:term@Category`, where prefix and category are optional.
    pub fn parse(spec: &str) -> Result<Self> {
        let (body, category) = match spec.rsplit_once('@') {
            Some((body, cat)) => (body, cat.parse()?),
            None => (spec, Category::Subject),
        };
        match body.split_once(':') {
            Some((prefix, term)) => Attribute::prefixed(prefix.trim(), term.trim(), category),
            None => Attribute::new(body.trim(), category),
        }
    }

    pub fn prefix(&self) -> Option<&str> {
        self.prefix.as_deref()
    }

    pub fn term(&self) -> &str {
        &self.term
    }

    pub fn category(&self) -> Category {
        self.category
    }

    /// `prefix:term`, or the bare term.
    pub fn key(&self) -> String {
        self.to_string()
    }

    /// Full cross-table header form, `prefix:term@Category`.
    pub fn spec(&self) -> String {
        format!("{self}@{}", self.category)
    }
}

impl PartialEq for Attribute {
    fn eq(&self, other: &Self) -> bool {
        self.prefix == other.prefix && self.term == other.term
    }
}

impl Eq for Attribute {}

impl Hash for Attribute {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.prefix.hash(state);
        self.term.hash(state);
    }
}

impl PartialOrd for Attribute {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Attribute {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (&self.prefix, &self.term).cmp(&(&other.prefix, &other.term))
    }
}

impl fmt::Display for Attribute {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.prefix {
            Some(p) => write!(f, "{p}:{}", self.term),
            None => f.write_str(&self.term),
        }
    }
}

/// The triple (G, M, I): sources, attributes and the incidence between them.
///
/// Incidence is kept twice, as one bit set per row and one per column, so
/// both derivation operators reduce to intersections. Rows and columns keep
/// insertion order, which is the canonical order of every output.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(try_from = "ContextDoc", into = "ContextDoc")]
pub struct FormalContext {
    objects: Vec<SourceId>,
    attributes: Vec<Attribute>,
    rows: Vec<FixedBitSet>,
    cols: Vec<FixedBitSet>,
    object_index: HashMap<SourceId, usize>,
    attribute_index: HashMap<Attribute, usize>,
}

impl PartialEq for FormalContext {
    fn eq(&self, other: &Self) -> bool {
        self.objects == other.objects
            && self.attributes.len() == other.attributes.len()
            && self
                .attributes
                .iter()
                .zip(&other.attributes)
                .all(|(a, b)| a == b && a.category == b.category)
            && self.rows == other.rows
    }
}

impl Eq for FormalContext {}

impl FormalContext {
    pub fn new() -> Self {
        Self::default()
    }

    /// A context with the given attributes and no objects.
    pub fn with_attributes(attributes: impl IntoIterator<Item = Attribute>) -> Result<Self> {
        let mut ctx = FormalContext::new();
        for attr in attributes {
            if ctx.attribute_index.contains_key(&attr) {
                return Err(Error::DuplicateAttribute(attr.key()));
            }
            ctx.push_attribute(attr);
        }
        Ok(ctx)
    }

    /// Builds a context from `(source, attributes)` rows; attributes are
    /// appended in first-occurrence order.
    pub fn from_rows<I, A>(rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = (SourceId, A)>,
        A: AsRef<[Attribute]>,
    {
        let mut ctx = FormalContext::new();
        for (id, attrs) in rows {
            ctx.push_object(id, attrs.as_ref())?;
        }
        Ok(ctx)
    }

    /// Returns a copy extended by one row. Unknown attributes are appended to
    /// the attribute list in the given order.
    pub fn add_object(&self, id: SourceId, attrs: &[Attribute]) -> Result<Self> {
        if id.as_str() == QUERY_LABEL {
            return Err(Error::ReservedSource(id.0));
        }
        let mut ctx = self.clone();
        ctx.push_object(id, attrs)?;
        Ok(ctx)
    }

    fn push_attribute(&mut self, attr: Attribute) -> usize {
        let m = self.attributes.len();
        self.attribute_index.insert(attr.clone(), m);
        self.attributes.push(attr);
        self.cols.push(FixedBitSet::with_capacity(self.objects.len()));
        for row in &mut self.rows {
            row.grow(m + 1);
        }
        m
    }

    /// Appends a row without the reserved-label check. Returns the new
    /// object index.
    pub(crate) fn push_object(&mut self, id: SourceId, attrs: &[Attribute]) -> Result<usize> {
        if self.object_index.contains_key(&id) {
            return Err(Error::DuplicateSource(id.0));
        }
        let cols: Vec<usize> = attrs
            .iter()
            .map(|a| match self.attribute_index.get(a) {
                Some(&m) => m,
                None => self.push_attribute(a.clone()),
            })
            .collect();
        let g = self.objects.len();
        self.object_index.insert(id.clone(), g);
        self.objects.push(id);
        let mut row = FixedBitSet::with_capacity(self.attributes.len());
        for col in &mut self.cols {
            col.grow(g + 1);
        }
        for m in cols {
            row.insert(m);
            self.cols[m].insert(g);
        }
        self.rows.push(row);
        Ok(g)
    }

    pub fn objects(&self) -> &[SourceId] {
        &self.objects
    }

    pub fn attributes(&self) -> &[Attribute] {
        &self.attributes
    }

    pub fn object_count(&self) -> usize {
        self.objects.len()
    }

    pub fn attribute_count(&self) -> usize {
        self.attributes.len()
    }

    pub fn object_index(&self, id: &str) -> Option<usize> {
        // SourceId construction cannot fail for lookups of existing ids.
        SourceId::new(id).ok().and_then(|id| self.object_index.get(&id).copied())
    }

    pub fn attribute_index(&self, attr: &Attribute) -> Option<usize> {
        self.attribute_index.get(attr).copied()
    }

    pub fn contains_attribute(&self, attr: &Attribute) -> bool {
        self.attribute_index.contains_key(attr)
    }

    pub fn has(&self, object: usize, attribute: usize) -> bool {
        self.rows[object].contains(attribute)
    }

    /// Attributes of one object, as a bit set over attribute indices.
    pub fn row(&self, object: usize) -> &FixedBitSet {
        &self.rows[object]
    }

    /// Objects having one attribute, as a bit set over object indices.
    pub fn column(&self, attribute: usize) -> &FixedBitSet {
        &self.cols[attribute]
    }

    /// Number of incidences, |I|.
    pub fn incidence_count(&self) -> usize {
        self.rows.iter().map(|r| r.count_ones(..)).sum()
    }

    pub fn object_set<S: AsRef<str>>(&self, ids: &[S]) -> Result<FixedBitSet> {
        let mut set = FixedBitSet::with_capacity(self.objects.len());
        for id in ids {
            let g = self
                .object_index(id.as_ref())
                .ok_or_else(|| Error::UnknownSource(id.as_ref().to_string()))?;
            set.insert(g);
        }
        Ok(set)
    }

    pub fn attribute_set(&self, attrs: &[Attribute]) -> Result<FixedBitSet> {
        let mut set = FixedBitSet::with_capacity(self.attributes.len());
        for a in attrs {
            let m = self
                .attribute_index(a)
                .ok_or_else(|| Error::UnknownAttribute(a.key()))?;
            set.insert(m);
        }
        Ok(set)
    }

    /// A′: the attributes shared by every object in `objects`.
    pub fn intent_of(&self, objects: &FixedBitSet) -> FixedBitSet {
        let mut out = FixedBitSet::with_capacity(self.attributes.len());
        out.insert_range(..);
        for g in objects.ones() {
            out.intersect_with(&self.rows[g]);
        }
        out
    }

    /// B′: the objects having every attribute in `attributes`.
    pub fn extent_of(&self, attributes: &FixedBitSet) -> FixedBitSet {
        let mut out = FixedBitSet::with_capacity(self.objects.len());
        out.insert_range(..);
        for m in attributes.ones() {
            out.intersect_with(&self.cols[m]);
        }
        out
    }

    pub fn close_intent(&self, attributes: &FixedBitSet) -> FixedBitSet {
        self.intent_of(&self.extent_of(attributes))
    }

    pub fn close_extent(&self, objects: &FixedBitSet) -> FixedBitSet {
        self.extent_of(&self.intent_of(objects))
    }

    pub fn objects_in(&self, set: &FixedBitSet) -> Vec<SourceId> {
        set.ones().map(|g| self.objects[g].clone()).collect()
    }

    pub fn attributes_in(&self, set: &FixedBitSet) -> Vec<Attribute> {
        set.ones().map(|m| self.attributes[m].clone()).collect()
    }

    /// Attributes common to all the given sources (all of M for none).
    pub fn derive_objects<S: AsRef<str>>(&self, ids: &[S]) -> Result<Vec<Attribute>> {
        let set = self.object_set(ids)?;
        Ok(self.attributes_in(&self.intent_of(&set)))
    }

    /// Sources having all the given attributes (all of G for none).
    pub fn derive_attributes(&self, attrs: &[Attribute]) -> Result<Vec<SourceId>> {
        let set = self.attribute_set(attrs)?;
        Ok(self.objects_in(&self.extent_of(&set)))
    }

    pub fn close_attributes(&self, attrs: &[Attribute]) -> Result<Vec<Attribute>> {
        let set = self.attribute_set(attrs)?;
        Ok(self.attributes_in(&self.close_intent(&set)))
    }

    fn restrict(&self, objects: &FixedBitSet, attributes: &FixedBitSet) -> Self {
        let mut ctx = FormalContext::with_attributes(self.attributes_in(attributes))
            .expect("attributes of a valid context are unique");
        for g in objects.ones() {
            let mut row = self.rows[g].clone();
            row.intersect_with(attributes);
            let attrs = self.attributes_in(&row);
            ctx.push_object(self.objects[g].clone(), &attrs)
                .expect("objects of a valid context are unique");
        }
        ctx
    }

    /// View restricted to the attributes of one category and to the objects
    /// having at least one of them.
    pub fn project_by_category(&self, category: Category) -> Self {
        let mut attributes = FixedBitSet::with_capacity(self.attributes.len());
        for (m, a) in self.attributes.iter().enumerate() {
            if a.category == category {
                attributes.insert(m);
            }
        }
        let mut objects = FixedBitSet::with_capacity(self.objects.len());
        for m in attributes.ones() {
            objects.union_with(&self.cols[m]);
        }
        self.restrict(&objects, &attributes)
    }

    /// View restricted to the sources having `attr`, over every attribute
    /// those sources carry.
    pub fn select_by_attribute(&self, attr: &Attribute) -> Result<Self> {
        let m = self
            .attribute_index(attr)
            .ok_or_else(|| Error::UnknownAttribute(attr.key()))?;
        let objects = self.cols[m].clone();
        let mut attributes = FixedBitSet::with_capacity(self.attributes.len());
        for g in objects.ones() {
            attributes.union_with(&self.rows[g]);
        }
        Ok(self.restrict(&objects, &attributes))
    }

    /// Resolves a user-supplied term name: an exact `prefix:term` key wins,
    /// otherwise the bare term is matched ignoring prefixes. Returns `None`
    /// when nothing matches.
    pub fn resolve_term(&self, name: &str) -> Result<Option<&Attribute>> {
        let name = name.trim();
        if let Some(a) = self.attributes.iter().find(|a| a.key() == name) {
            return Ok(Some(a));
        }
        let matches: Vec<&Attribute> = self.attributes.iter().filter(|a| a.term == name).collect();
        match matches.as_slice() {
            [] => Ok(None),
            [one] => Ok(Some(one)),
            many => Err(Error::AmbiguousTerm {
                term: name.to_string(),
                candidates: many.iter().map(|a| a.key()).collect(),
            }),
        }
    }

    /// Reads the cross-table CSV format: an empty corner cell, attribute
    /// headers as `prefix:term@Category`, then one `0`/`1` row per source.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut records = rdr.records();
        let header = match records.next() {
            Some(h) => h?,
            None => return Ok(FormalContext::new()),
        };
        let attributes = header
            .iter()
            .skip(1)
            .map(Attribute::parse)
            .collect::<Result<Vec<_>>>()?;
        let mut ctx = FormalContext::with_attributes(attributes)?;
        for (line, record) in records.enumerate() {
            let record = record?;
            let mut cells = record.iter();
            let id = SourceId::new(cells.next().unwrap_or_default())?;
            let cells: Vec<&str> = cells.collect();
            if cells.len() != ctx.attributes.len() {
                return Err(Error::CrossTable(format!(
                    "row {} (`{id}`) has {} cells, expected {}",
                    line + 2,
                    cells.len(),
                    ctx.attributes.len()
                )));
            }
            let mut attrs = Vec::new();
            for (m, cell) in cells.into_iter().enumerate() {
                match cell {
                    "1" => attrs.push(ctx.attributes[m].clone()),
                    "0" => {}
                    other => {
                        return Err(Error::CrossTable(format!(
                            "row {} (`{id}`) has cell `{other}`, expected 0 or 1",
                            line + 2
                        )))
                    }
                }
            }
            ctx.push_object(id, &attrs)?;
        }
        Ok(ctx)
    }

    pub fn from_csv_str(text: &str) -> Result<Self> {
        Self::read_csv(text.as_bytes())
    }

    pub fn to_csv_string(&self) -> String {
        let mut wtr = csv::Writer::from_writer(Vec::new());
        let header: Vec<String> = std::iter::once(String::new())
            .chain(self.attributes.iter().map(Attribute::spec))
            .collect();
        wtr.write_record(&header).expect("in-memory write");
        for (g, id) in self.objects.iter().enumerate() {
            let row: Vec<&str> = std::iter::once(id.as_str())
                .chain((0..self.attributes.len()).map(|m| if self.has(g, m) { "1" } else { "0" }))
                .collect();
            wtr.write_record(&row).expect("in-memory write");
        }
        String::from_utf8(wtr.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
    }
}

#[derive(Serialize, Deserialize)]
struct ContextDoc {
    objects: Vec<SourceId>,
    attributes: Vec<Attribute>,
    /// Attribute indices of each object, in object order.
    incidence: Vec<Vec<usize>>,
}

impl From<FormalContext> for ContextDoc {
    fn from(ctx: FormalContext) -> Self {
        ContextDoc {
            incidence: ctx.rows.iter().map(|r| r.ones().collect()).collect(),
            objects: ctx.objects,
            attributes: ctx.attributes,
        }
    }
}

impl TryFrom<ContextDoc> for FormalContext {
    type Error = Error;
    fn try_from(doc: ContextDoc) -> Result<Self> {
        if doc.objects.len() != doc.incidence.len() {
            return Err(Error::Document(format!(
                "{} objects but {} incidence rows",
                doc.objects.len(),
                doc.incidence.len()
            )));
        }
        let mut ctx = FormalContext::with_attributes(doc.attributes)?;
        for (id, cols) in doc.objects.into_iter().zip(doc.incidence) {
            let attrs = cols
                .into_iter()
                .map(|m| {
                    ctx.attributes
                        .get(m)
                        .cloned()
                        .ok_or_else(|| Error::Document(format!("attribute index {m} out of range")))
                })
                .collect::<Result<Vec<_>>>()?;
            ctx.push_object(id, &attrs)?;
        }
        Ok(ctx)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TABLE1: &str = include_str!("../../../fixtures/table1.csv");

    fn table1() -> FormalContext {
        FormalContext::from_csv_str(TABLE1).unwrap()
    }

    fn attrs(ctx: &FormalContext, names: &[&str]) -> Vec<Attribute> {
        names.iter().map(|n| ctx.resolve_term(n).unwrap().unwrap().clone()).collect()
    }

    fn terms(attrs: &[Attribute]) -> Vec<&str> {
        attrs.iter().map(Attribute::term).collect()
    }

    fn ids(objs: &[SourceId]) -> Vec<&str> {
        objs.iter().map(SourceId::as_str).collect()
    }

    #[test]
    fn table1_shape() {
        let ctx = table1();
        assert_eq!(ctx.object_count(), 8);
        assert_eq!(ctx.attribute_count(), 8);
        assert_eq!(ctx.incidence_count(), 21);
        assert_eq!(ctx.attributes()[7].category(), Category::Quality);
    }

    #[test]
    fn derive_objects_examples() {
        let ctx = table1();
        assert_eq!(terms(&ctx.derive_objects(&["S7"]).unwrap()), ["PS", "Mo"]);
        assert_eq!(ctx.derive_objects::<&str>(&[]).unwrap().len(), 8);
        assert_eq!(terms(&ctx.derive_objects(&["S3", "S5"]).unwrap()), ["NS", "Hu"]);
        assert!(matches!(ctx.derive_objects(&["S42"]), Err(Error::UnknownSource(id)) if id == "S42"));
    }

    #[test]
    fn derive_attributes_examples() {
        let ctx = table1();
        assert_eq!(ids(&ctx.derive_attributes(&attrs(&ctx, &["Hu"])).unwrap()), ["S3", "S5"]);
        assert_eq!(ctx.derive_attributes(&[]).unwrap().len(), 8);
        assert_eq!(ids(&ctx.derive_attributes(&attrs(&ctx, &["NS", "MR"])).unwrap()), ["S2"]);
        let unknown = Attribute::subject("Ch").unwrap();
        assert!(matches!(ctx.derive_attributes(&[unknown]), Err(Error::UnknownAttribute(t)) if t == "Ch"));
    }

    #[test]
    fn close_attributes_examples() {
        let ctx = table1();
        assert_eq!(terms(&ctx.close_attributes(&attrs(&ctx, &["Hu"])).unwrap()), ["NS", "Hu"]);
        assert!(ctx.close_attributes(&[]).unwrap().is_empty());
        let s2 = attrs(&ctx, &["NS", "PS", "AO", "MR"]);
        assert_eq!(ctx.close_attributes(&s2).unwrap(), s2);
    }

    #[test]
    fn project_by_category_examples() {
        let ctx = table1();
        let subj = ctx.project_by_category(Category::Subject);
        assert_eq!(terms(subj.attributes()), ["NS", "PS"]);
        assert_eq!(subj.object_count(), 8);

        let qual = ctx.project_by_category(Category::Quality);
        assert_eq!(terms(qual.attributes()), ["MR"]);
        assert_eq!(ids(qual.objects()), ["S1", "S2", "S4"]);

        let avail = ctx.project_by_category(Category::Availability);
        assert_eq!(avail.attribute_count(), 0);
        assert_eq!(avail.object_count(), 0);

        assert!(matches!("Colour".parse::<Category>(), Err(Error::InvalidCategory(_))));
    }

    #[test]
    fn select_by_attribute_examples() {
        let ctx = table1();
        let hu = ctx.select_by_attribute(&attrs(&ctx, &["Hu"])[0]).unwrap();
        assert_eq!(ids(hu.objects()), ["S3", "S5"]);
        assert_eq!(terms(hu.attributes()), ["NS", "PS", "Hu"]);

        let ao = ctx.select_by_attribute(&attrs(&ctx, &["AO"])[0]).unwrap();
        assert_eq!(ids(ao.objects()), ["S1", "S2", "S4"]);
        assert_eq!(terms(ao.attributes()), ["NS", "PS", "AO", "MR"]);

        let mo = ctx.select_by_attribute(&attrs(&ctx, &["Mo"])[0]).unwrap();
        assert_eq!(ids(mo.objects()), ["S7"]);
        assert_eq!(terms(mo.attributes()), ["PS", "Mo"]);

        let unknown = Attribute::subject("Ch").unwrap();
        assert!(ctx.select_by_attribute(&unknown).is_err());
    }

    #[test]
    fn add_object_examples() {
        let ps = Attribute::subject("PS").unwrap();
        let ao = Attribute::new("AO", Category::Organism).unwrap();
        let mr = Attribute::new("MR", Category::Quality).unwrap();
        let one = FormalContext::new()
            .add_object(SourceId::new("S1").unwrap(), &[ps, ao, mr])
            .unwrap();
        assert_eq!((one.object_count(), one.attribute_count()), (1, 3));

        let ctx = table1();
        let ns = attrs(&ctx, &["NS"]);
        let nine = ctx.add_object(SourceId::new("S9").unwrap(), &ns).unwrap();
        assert_eq!((nine.object_count(), nine.attribute_count()), (9, 8));
        assert_eq!(nine.row(0), ctx.row(0));

        assert!(matches!(
            ctx.add_object(SourceId::new("S1").unwrap(), &ns),
            Err(Error::DuplicateSource(_))
        ));
        assert!(matches!(
            ctx.add_object(SourceId::new(QUERY_LABEL).unwrap(), &ns),
            Err(Error::ReservedSource(_))
        ));
    }

    #[test]
    fn attribute_identity_ignores_category_but_not_prefix() {
        let a = Attribute::new("Hu", Category::Organism).unwrap();
        let b = Attribute::new("Hu", Category::Subject).unwrap();
        let c = Attribute::prefixed("NCBI", "Hu", Category::Organism).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(FormalContext::with_attributes([a.clone(), b]).is_err());
        assert!(FormalContext::with_attributes([a, c]).is_ok());
    }

    #[test]
    fn attribute_spec_parsing() {
        let a = Attribute::parse("NCBI:Hu@Organism").unwrap();
        assert_eq!((a.prefix(), a.term(), a.category()), (Some("NCBI"), "Hu", Category::Organism));
        assert_eq!(Attribute::parse("NS").unwrap().category(), Category::Subject);
        assert_eq!(Attribute::parse(&a.spec()).unwrap().spec(), a.spec());
        assert!(Attribute::parse("x@Nowhere").is_err());
        assert!(Attribute::parse("").is_err());
        assert!(Attribute::parse(":x").is_err());
    }

    #[test]
    fn resolve_term_by_bare_name_and_ambiguity() {
        let ctx = FormalContext::with_attributes([
            Attribute::prefixed("MESH", "NS", Category::Subject).unwrap(),
            Attribute::prefixed("NCBI", "Hu", Category::Organism).unwrap(),
            Attribute::prefixed("OTHER", "Hu", Category::Organism).unwrap(),
        ])
        .unwrap();
        assert_eq!(ctx.resolve_term("NS").unwrap().unwrap().key(), "MESH:NS");
        assert_eq!(ctx.resolve_term("NCBI:Hu").unwrap().unwrap().key(), "NCBI:Hu");
        assert!(ctx.resolve_term("Ch").unwrap().is_none());
        match ctx.resolve_term("Hu") {
            Err(Error::AmbiguousTerm { candidates, .. }) => assert_eq!(candidates, ["NCBI:Hu", "OTHER:Hu"]),
            other => panic!("expected ambiguity, got {other:?}"),
        }
    }

    #[test]
    fn csv_round_trip_and_errors() {
        let ctx = table1();
        let again = FormalContext::from_csv_str(&ctx.to_csv_string()).unwrap();
        assert_eq!(ctx, again);
        assert_eq!(ctx.to_csv_string(), TABLE1);

        assert!(FormalContext::from_csv_str(",A\nS1,2\n").is_err());
        assert!(FormalContext::from_csv_str(",A,B\nS1,1\n").is_err());
        assert!(FormalContext::from_csv_str(",A\nS1,1\nS1,0\n").is_err());
        assert!(FormalContext::from_csv_str(",A,A\nS1,1,1\n").is_err());
        assert_eq!(FormalContext::from_csv_str("").unwrap(), FormalContext::new());
    }

    #[test]
    fn json_round_trip() {
        let ctx = table1();
        let json = serde_json::to_string(&ctx).unwrap();
        let back: FormalContext = serde_json::from_str(&json).unwrap();
        assert_eq!(ctx, back);
        assert!(serde_json::from_str::<FormalContext>(
            r#"{"objects":["S1"],"attributes":[],"incidence":[[0]]}"#
        )
        .is_err());
    }
}
