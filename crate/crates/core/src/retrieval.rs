//! Ranked source retrieval by query-concept insertion.
//!
//! A query is inserted into a copy of the lattice as a virtual object whose
//! intent is the query's term set. Sources are then collected breadth-first
//! from the query concept upwards: a source's rank is the distance of the
//! first concept whose extent contributed it. Concepts with an empty intent
//! never contribute.

use std::cmp::Ordering;
use std::fmt::Write as _;

use fixedbitset::FixedBitSet;
use serde::{Serialize, Serializer};

use crate::context::{Attribute, FormalContext, SourceId, QUERY_LABEL};
use crate::error::{Error, Result};
use crate::lattice::{ConceptId, ConceptLattice};
use crate::ontology::{Hops, Ontology, RefineMode, RefinementReport};

pub(crate) fn serialize_keys<S: Serializer>(attrs: &[Attribute], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(attrs.iter().map(Attribute::key))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Query {
    label: String,
    #[serde(serialize_with = "serialize_keys")]
    terms: Vec<Attribute>,
}

impl Query {
    /// A query labelled `Query`; duplicate terms are dropped.
    pub fn new(terms: impl IntoIterator<Item = Attribute>) -> Self {
        Query { label: QUERY_LABEL.to_string(), terms: Vec::new() }.with_terms(terms)
    }

    /// Builds a query from term names, resolved against the context's
    /// attributes (see [`FormalContext::resolve_term`]). Names matching no
    /// attribute are kept as bare terms.
    pub fn from_names<S: AsRef<str>>(ctx: &FormalContext, names: &[S]) -> Result<Self> {
        let terms = names
            .iter()
            .map(|n| match ctx.resolve_term(n.as_ref())? {
                Some(a) => Ok(a.clone()),
                None => Attribute::parse(n.as_ref()),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Query::new(terms))
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Result<Self> {
        let label = label.into();
        if label.trim().is_empty() {
            return Err(Error::EmptyIdentifier);
        }
        self.label = label;
        Ok(self)
    }

    pub(crate) fn with_terms(&self, terms: impl IntoIterator<Item = Attribute>) -> Self {
        let mut out: Vec<Attribute> = Vec::new();
        for t in terms {
            if !out.contains(&t) {
                out.push(t);
            }
        }
        Query { label: self.label.clone(), terms: out }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn terms(&self) -> &[Attribute] {
        &self.terms
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RankedResult {
    pub source: SourceId,
    /// Distance from the query concept to the first concept that
    /// contributed this source.
    pub rank: usize,
    /// Query terms the source carries.
    #[serde(serialize_with = "serialize_keys")]
    pub shared: Vec<Attribute>,
    #[serde(serialize_with = "serialize_keys")]
    pub via_intent: Vec<Attribute>,
    /// After refinement: ontology distance from the original query terms to
    /// the closest shared term.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub refinement_distance: Option<u32>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ResultSet {
    pub query: Query,
    pub results: Vec<RankedResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub refinement_applied: Option<RefinementReport>,
}

/// Default result order: rank, then more shared terms, then closer
/// refinement distance, then source id.
pub fn default_order(a: &RankedResult, b: &RankedResult) -> Ordering {
    a.rank
        .cmp(&b.rank)
        .then(b.shared.len().cmp(&a.shared.len()))
        .then(a.refinement_distance.cmp(&b.refinement_distance))
        .then(a.source.cmp(&b.source))
}

/// Inserts the query as a virtual object into a copy of `lat`. Returns the
/// augmented lattice and its query concept (the object concept of the
/// virtual object).
pub fn insert_query(lat: &ConceptLattice, query: &Query) -> Result<(ConceptLattice, ConceptId)> {
    if query.terms.is_empty() {
        return Err(Error::EmptyQuery);
    }
    let ctx = lat.context();
    if ctx.object_index(&query.label).is_some() {
        return Err(Error::LabelCollision(query.label.clone()));
    }
    let terms: Vec<Attribute> = query
        .terms
        .iter()
        .map(|t| ctx.attribute_index(t).map_or_else(|| t.clone(), |m| ctx.attributes()[m].clone()))
        .collect();
    let mut overlay = lat.clone();
    let g = overlay.absorb(SourceId::new(query.label.clone())?, &terms)?;
    let concept = overlay.object_concept(g);
    Ok((overlay, concept))
}

pub fn search(lat: &ConceptLattice, query: &Query) -> Result<ResultSet> {
    search_by(lat, query, default_order)
}

/// [`search`] with a caller-supplied result order.
pub fn search_by<F>(lat: &ConceptLattice, query: &Query, order: F) -> Result<ResultSet>
where
    F: FnMut(&RankedResult, &RankedResult) -> Ordering,
{
    let mut results = collect(lat, query)?;
    results.sort_by(order);
    Ok(ResultSet { query: query.clone(), results, refinement_applied: None })
}

fn collect(lat: &ConceptLattice, query: &Query) -> Result<Vec<RankedResult>> {
    let (overlay, start) = insert_query(lat, query)?;
    let ctx = overlay.context();
    let virtual_object = ctx.object_index(&query.label).expect("query object was just inserted");
    let query_terms = ctx.row(virtual_object);

    let walk = overlay.subsumers(start);
    let mut collected = FixedBitSet::with_capacity(ctx.object_count());
    collected.insert(virtual_object);
    let mut results = Vec::new();
    for level in walk.chunk_by(|a, b| a.1 == b.1) {
        let contributing: Vec<ConceptId> = level
            .iter()
            .map(|&(c, _)| c)
            .filter(|&c| !overlay.concept(c).intent().is_clear())
            .collect();
        if contributing.is_empty() {
            break;
        }
        for c in contributing {
            let concept = overlay.concept(c);
            let mut fresh = concept.extent().clone();
            fresh.difference_with(&collected);
            collected.union_with(&fresh);
            for g in fresh.ones() {
                let mut shared = ctx.row(g).clone();
                shared.intersect_with(query_terms);
                results.push(RankedResult {
                    source: ctx.objects()[g].clone(),
                    rank: level[0].1,
                    shared: ctx.attributes_in(&shared),
                    via_intent: ctx.attributes_in(concept.intent()),
                    refinement_distance: None,
                });
            }
        }
    }
    Ok(results)
}

/// Refines the query through the ontology, then searches the original
/// lattice with the refined query. Refined results are additionally ordered
/// by their ontology distance to the original terms.
pub fn search_refined(
    lat: &ConceptLattice,
    query: &Query,
    ontology: &Ontology,
    mode: RefineMode,
    hops: Hops,
) -> Result<ResultSet> {
    if query.terms.is_empty() {
        return Err(Error::EmptyQuery);
    }
    let (refined, report) = ontology.refine(query, lat.context(), mode, hops);
    let mut results = collect(lat, &refined)?;
    if !report.added.is_empty() {
        for r in &mut results {
            r.refinement_distance = r
                .shared
                .iter()
                .filter_map(|s| {
                    if query.terms.contains(s) {
                        Some(0)
                    } else {
                        ontology.attribute_distance(&query.terms, s)
                    }
                })
                .min();
        }
    }
    results.sort_by(default_order);
    Ok(ResultSet { query: refined, results, refinement_applied: Some(report) })
}

impl ResultSet {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("result set serializes") + "\n"
    }

    /// Plain-text table; `styled` bolds the header with ANSI escapes.
    pub fn to_table(&self, styled: bool) -> String {
        let mut out = String::new();
        if let Some(r) = &self.refinement_applied {
            let added: Vec<String> = r.added.iter().map(Attribute::key).collect();
            let _ = writeln!(out, "refinement: {} added [{}]", r.mode, added.join(", "));
        }
        if self.results.is_empty() {
            out.push_str("no relevant sources\n");
            return out;
        }
        let rows: Vec<[String; 4]> = self
            .results
            .iter()
            .map(|r| {
                let join = |v: &[Attribute]| v.iter().map(Attribute::key).collect::<Vec<_>>().join(", ");
                [r.rank.to_string(), r.source.to_string(), join(&r.shared), join(&r.via_intent)]
            })
            .collect();
        let header = ["RANK", "SOURCE", "SHARED", "VIA"];
        let mut widths = header.map(str::len);
        for row in &rows {
            for (w, cell) in widths.iter_mut().zip(row) {
                *w = (*w).max(cell.chars().count());
            }
        }
        let line = |cells: &[&str]| -> String {
            let padded: Vec<String> = cells.iter().zip(widths).map(|(c, w)| format!("{c:<w$}")).collect();
            padded.join("  ").trim_end().to_string()
        };
        let head = line(&header);
        if styled {
            let _ = writeln!(out, "\x1b[1m{head}\x1b[0m");
        } else {
            let _ = writeln!(out, "{head}");
        }
        for row in &rows {
            let cells: Vec<&str> = row.iter().map(String::as_str).collect();
            let _ = writeln!(out, "{}", line(&cells));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table1() -> ConceptLattice {
        ConceptLattice::build(&FormalContext::from_csv_str(include_str!("../../../fixtures/table1.csv")).unwrap())
    }

    fn organisms() -> Ontology {
        Ontology::parse(include_str!("../../../fixtures/organisms.ont")).unwrap()
    }

    fn query(lat: &ConceptLattice, names: &[&str]) -> Query {
        Query::from_names(lat.context(), names).unwrap()
    }

    /// (source, rank, shared) triples.
    fn summary(rs: &ResultSet) -> Vec<(String, usize, Vec<String>)> {
        rs.results
            .iter()
            .map(|r| (r.source.to_string(), r.rank, r.shared.iter().map(Attribute::key).collect()))
            .collect()
    }

    fn row(source: &str, rank: usize, shared: &[&str]) -> (String, usize, Vec<String>) {
        (source.to_string(), rank, shared.iter().map(|s| s.to_string()).collect())
    }

    #[test]
    fn insert_query_examples() {
        let lat = table1();
        let (overlay, qc) = insert_query(&lat, &query(&lat, &["NS", "Hu", "MR"])).unwrap();
        assert_eq!(overlay.extent_ids(qc).iter().map(SourceId::as_str).collect::<Vec<_>>(), ["Query"]);
        assert_eq!(overlay.intent_attributes(qc).iter().map(Attribute::key).collect::<Vec<_>>(), ["NS", "Hu", "MR"]);

        let (overlay, qc) = insert_query(&lat, &query(&lat, &["NS", "An"])).unwrap();
        assert_eq!(overlay.extent_ids(qc).iter().map(SourceId::as_str).collect::<Vec<_>>(), ["S6", "Query"]);

        let (overlay, qc) = insert_query(&lat, &query(&lat, &["Ch"])).unwrap();
        assert_eq!(overlay.extent_ids(qc).iter().map(SourceId::as_str).collect::<Vec<_>>(), ["Query"]);
        // Apart from the virtual object itself, every pre-existing extent
        // survives unchanged; only the bottom intent grows by the new term.
        let extents: Vec<_> = overlay
            .shape()
            .concepts
            .into_iter()
            .map(|(mut e, _)| {
                e.remove("Query");
                e
            })
            .collect();
        for (extent, _) in lat.shape().concepts {
            assert!(extents.contains(&extent), "{extent:?} changed");
        }
        assert_eq!(overlay.len(), lat.len() + 1);
    }

    #[test]
    fn insert_query_errors() {
        let lat = table1();
        assert!(matches!(insert_query(&lat, &Query::new([])), Err(Error::EmptyQuery)));
        let q = query(&lat, &["NS"]).with_label("S1").unwrap();
        assert!(matches!(insert_query(&lat, &q), Err(Error::LabelCollision(_))));
        assert!(search(&lat, &Query::new([])).is_err());
    }

    #[test]
    fn query_concept_is_a_known_extent_plus_the_query() {
        let lat = table1();
        let (overlay, qc) = insert_query(&lat, &query(&lat, &["NS", "Hu"])).unwrap();
        let ids: Vec<String> = overlay.extent_ids(qc).iter().map(ToString::to_string).collect();
        assert_eq!(ids, ["S3", "S5", "Query"]);
    }

    #[test]
    fn golden_ns_hu_mr() {
        let lat = table1();
        let rs = search(&lat, &query(&lat, &["NS", "Hu", "MR"])).unwrap();
        assert_eq!(
            summary(&rs),
            [
                row("S2", 1, &["NS", "MR"]),
                row("S3", 1, &["NS", "Hu"]),
                row("S5", 1, &["NS", "Hu"]),
                row("S1", 2, &["MR"]),
                row("S4", 2, &["MR"]),
                row("S6", 2, &["NS"]),
            ]
        );
    }

    #[test]
    fn exact_match_has_rank_zero() {
        let lat = table1();
        let rs = search(&lat, &query(&lat, &["Mo"])).unwrap();
        assert_eq!(summary(&rs), [row("S7", 0, &["Mo"])]);
    }

    #[test]
    fn unknown_term_yields_nothing() {
        let lat = table1();
        assert!(search(&lat, &query(&lat, &["Ch"])).unwrap().results.is_empty());
    }

    #[test]
    fn generalized_chicken() {
        let (lat, ont) = (table1(), organisms());
        let rs = search_refined(&lat, &query(&lat, &["Ch"]), &ont, RefineMode::Generalize, Hops::Unlimited).unwrap();
        assert_eq!(
            summary(&rs),
            [
                row("S8", 1, &["Ve"]),
                row("S6", 1, &["An"]),
                row("S1", 1, &["AO"]),
                row("S2", 1, &["AO"]),
                row("S4", 1, &["AO"]),
            ]
        );
        let distances: Vec<Option<u32>> = rs.results.iter().map(|r| r.refinement_distance).collect();
        assert_eq!(distances, [Some(1), Some(2), Some(5), Some(5), Some(5)]);
        let report = rs.refinement_applied.unwrap();
        assert_eq!(report.mode, RefineMode::Generalize);
        assert_eq!(report.added.len(), 3);
    }

    #[test]
    fn specialized_eucaryotes() {
        let (lat, ont) = (table1(), organisms());
        let rs = search_refined(&lat, &query(&lat, &["Eu"]), &ont, RefineMode::Specialize, Hops::Unlimited).unwrap();
        let mut got: Vec<(String, usize)> = rs.results.iter().map(|r| (r.source.to_string(), r.rank)).collect();
        got.sort();
        let want: Vec<(String, usize)> =
            ["S3", "S5", "S6", "S7", "S8"].iter().map(|s| (s.to_string(), 1)).collect();
        assert_eq!(got, want);
    }

    #[test]
    fn zero_hop_refinement_equals_plain_search() {
        let (lat, ont) = (table1(), organisms());
        let q = query(&lat, &["Hu"]);
        let refined = search_refined(&lat, &q, &ont, RefineMode::Generalize, Hops::Limited(0)).unwrap();
        let plain = search(&lat, &q).unwrap();
        assert_eq!(refined.results, plain.results);
        assert_eq!(refined.query, plain.query);
    }

    #[test]
    fn search_leaves_base_lattice_untouched() {
        let lat = table1();
        let before = lat.clone();
        search(&lat, &query(&lat, &["NS", "Hu", "MR"])).unwrap();
        assert_eq!(lat, before);
    }

    #[test]
    fn custom_order_hook() {
        let lat = table1();
        let rs = search_by(&lat, &query(&lat, &["NS", "Hu", "MR"]), |a, b| b.source.cmp(&a.source)).unwrap();
        let ids: Vec<&str> = rs.results.iter().map(|r| r.source.as_str()).collect();
        assert_eq!(ids, ["S6", "S5", "S4", "S3", "S2", "S1"]);
    }

    #[test]
    fn machine_and_table_output() {
        let lat = table1();
        let rs = search(&lat, &query(&lat, &["Mo"])).unwrap();
        let json: serde_json::Value = serde_json::from_str(&rs.to_json()).unwrap();
        assert_eq!(json["results"][0]["source"], "S7");
        assert_eq!(json["results"][0]["via_intent"], serde_json::json!(["Mo"]));
        let table = rs.to_table(false);
        assert!(table.starts_with("RANK  SOURCE  SHARED  VIA\n"));
        assert!(table.contains("0     S7      Mo      Mo\n"));
        assert!(rs.to_table(true).contains("\x1b[1m"));
        let empty = search(&lat, &query(&lat, &["Ch"])).unwrap();
        assert_eq!(empty.to_table(false), "no relevant sources\n");
    }
}
