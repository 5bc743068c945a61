//! Browser bindings. Every export takes and returns JSON text so the page
//! needs no generated type glue beyond strings.

use fca_registry::retrieval::{search, search_refined};
use fca_registry::{Category, ConceptLattice, FormalContext, Hops, Ontology, Query, RefineMode, ResultSet};
use serde::Serialize;
use wasm_bindgen::prelude::*;

pub const SAMPLE_CONTEXT: &str = include_str!("../../../fixtures/table1.csv");
pub const SAMPLE_ONTOLOGY: &str = include_str!("../../../fixtures/organisms.ont");

#[derive(Serialize)]
struct NodeView {
    id: usize,
    extent: Vec<String>,
    intent: Vec<String>,
    /// Objects and attributes introduced here (reduced labeling).
    own_objects: Vec<String>,
    own_attributes: Vec<String>,
}

#[derive(Serialize)]
struct LatticeView {
    objects: usize,
    attributes: usize,
    height: usize,
    nodes: Vec<NodeView>,
    covers: Vec<(usize, usize)>,
}

#[derive(Serialize)]
struct Hit<'a> {
    source: &'a str,
    rank: usize,
    shared: Vec<String>,
    via_intent: Vec<String>,
    refinement_distance: Option<u32>,
    /// Concept of the base lattice introducing the source.
    concept: usize,
}

#[derive(Serialize)]
struct QueryView<'a> {
    terms: Vec<String>,
    added: Vec<String>,
    results: Vec<Hit<'a>>,
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn layout(lat: &ConceptLattice) -> LatticeView {
    let ctx = lat.context();
    let mut nodes: Vec<NodeView> = lat
        .concepts()
        .iter()
        .enumerate()
        .map(|(i, c)| NodeView {
            id: i,
            extent: ctx.objects_in(c.extent()).iter().map(ToString::to_string).collect(),
            intent: ctx.attributes_in(c.intent()).iter().map(|a| a.key()).collect(),
            own_objects: Vec::new(),
            own_attributes: Vec::new(),
        })
        .collect();
    for (g, id) in ctx.objects().iter().enumerate() {
        nodes[lat.object_concept(g).0].own_objects.push(id.to_string());
    }
    for (m, a) in ctx.attributes().iter().enumerate() {
        nodes[lat.attribute_concept(m).0].own_attributes.push(a.key());
    }
    LatticeView {
        objects: ctx.object_count(),
        attributes: ctx.attribute_count(),
        height: lat.height(),
        nodes,
        covers: lat.covers().iter().map(|&(c, p)| (c.0, p.0)).collect(),
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<String, String> {
    serde_json::to_string(value).map_err(err)
}

fn lattice_of(csv: &str) -> Result<ConceptLattice, String> {
    Ok(ConceptLattice::build(&FormalContext::from_csv_str(csv).map_err(err)?))
}

fn query_view<'a>(lat: &ConceptLattice, rs: &'a ResultSet, original: &Query) -> QueryView<'a> {
    let keys = |v: &[fca_registry::Attribute]| v.iter().map(|a| a.key()).collect::<Vec<_>>();
    QueryView {
        terms: keys(original.terms()),
        added: rs.refinement_applied.as_ref().map(|r| keys(&r.added)).unwrap_or_default(),
        results: rs
            .results
            .iter()
            .map(|r| Hit {
                source: r.source.as_str(),
                rank: r.rank,
                shared: keys(&r.shared),
                via_intent: keys(&r.via_intent),
                refinement_distance: r.refinement_distance,
                concept: lat.context().object_index(r.source.as_str()).map_or(lat.top(), |g| lat.object_concept(g)).0,
            })
            .collect(),
    }
}

/// Lattice layout of a cross-table CSV.
pub fn lattice_json(csv: &str) -> Result<String, String> {
    to_json(&layout(&lattice_of(csv)?))
}

/// Ranked sources for comma-separated `terms`. `mode` is empty for a plain
/// search, otherwise `generalize`, `specialize` or `both`; `hops` is a
/// number or `unlimited`.
pub fn query_json(csv: &str, terms: &str, mode: &str, hops: &str, ontology: &str) -> Result<String, String> {
    let lat = lattice_of(csv)?;
    let names: Vec<&str> = terms.split(',').map(str::trim).filter(|t| !t.is_empty()).collect();
    if names.is_empty() {
        return Err("enter at least one term".into());
    }
    let q = Query::from_names(lat.context(), &names).map_err(err)?;
    let rs = if mode.trim().is_empty() {
        search(&lat, &q).map_err(err)?
    } else {
        let mode: RefineMode = mode.parse().map_err(err)?;
        let hops: Hops = hops.parse().map_err(err)?;
        let ont = Ontology::parse(ontology).map_err(err)?;
        search_refined(&lat, &q, &ont, mode, hops).map_err(err)?
    };
    to_json(&query_view(&lat, &rs, &q))
}

/// Layout of one classification view: `view` is a category name or an
/// attribute term.
pub fn classify_json(csv: &str, view: &str) -> Result<String, String> {
    let ctx = FormalContext::from_csv_str(csv).map_err(err)?;
    let projected = match view.parse::<Category>() {
        Ok(cat) => ctx.project_by_category(cat),
        Err(_) => {
            let attr = ctx.resolve_term(view).map_err(err)?.ok_or_else(|| format!("unknown attribute `{view}`"))?;
            ctx.select_by_attribute(&attr.clone()).map_err(err)?
        }
    };
    to_json(&layout(&ConceptLattice::build(&projected)))
}

#[wasm_bindgen]
pub fn sample_context() -> String {
    SAMPLE_CONTEXT.to_string()
}

#[wasm_bindgen]
pub fn sample_ontology() -> String {
    SAMPLE_ONTOLOGY.to_string()
}

#[wasm_bindgen]
pub fn lattice(csv: &str) -> Result<String, JsValue> {
    lattice_json(csv).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn query(csv: &str, terms: &str, mode: &str, hops: &str, ontology: &str) -> Result<String, JsValue> {
    query_json(csv, terms, mode, hops, ontology).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn classify(csv: &str, view: &str) -> Result<String, JsValue> {
    classify_json(csv, view).map_err(|e| JsValue::from_str(&e))
}
