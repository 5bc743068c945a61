mod common;

use common::*;
use fca_registry::retrieval::{insert_query, search, search_refined};
use fca_registry::{Attribute, ConceptLattice, FormalContext, Hops, Ontology, Query, RefineMode};
use proptest::prelude::*;

/// Sources sharing at least one term with the query, straight from the incidence.
fn brute_force(ctx: &FormalContext, terms: &[Attribute]) -> Vec<String> {
    let mut out: Vec<String> = (0..ctx.object_count())
        .filter(|&g| terms.iter().any(|t| ctx.attribute_index(t).is_some_and(|m| ctx.has(g, m))))
        .map(|g| ctx.objects()[g].to_string())
        .collect();
    out.sort();
    out
}

fn arb_lattice_and_query() -> impl Strategy<Value = (ConceptLattice, Query)> {
    arb_context().prop_filter("needs attributes", |c| c.attribute_count() > 0).prop_flat_map(|ctx| {
        let m = ctx.attribute_count();
        (prop::collection::vec(0..m + 2, 1..5), Just(ctx)).prop_map(|(picks, ctx)| {
            // Indices >= m stand for terms unknown to the context.
            let terms: Vec<Attribute> = picks
                .into_iter()
                .map(|i| ctx.attributes().get(i).cloned().unwrap_or_else(|| Attribute::subject(format!("x{i}")).unwrap()))
                .collect();
            (ConceptLattice::build(&ctx), Query::new(terms))
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn search_is_sound_and_complete((lat, q) in arb_lattice_and_query()) {
        let before = lat.clone();
        let rs = search(&lat, &q).unwrap();
        prop_assert_eq!(&lat, &before);

        let mut got: Vec<String> = rs.results.iter().map(|r| r.source.to_string()).collect();
        got.sort();
        let mut dedup = got.clone();
        dedup.dedup();
        prop_assert_eq!(&got, &dedup);
        prop_assert_eq!(got, brute_force(lat.context(), q.terms()));
        for r in &rs.results {
            prop_assert!(!r.shared.is_empty());
            prop_assert!(r.shared.iter().all(|s| q.terms().contains(s)));
        }
    }

    #[test]
    fn ranks_respect_shared_inclusion((lat, q) in arb_lattice_and_query()) {
        let rs = search(&lat, &q).unwrap();
        for a in &rs.results {
            for b in &rs.results {
                let strictly_more = a.shared.len() > b.shared.len() && b.shared.iter().all(|s| a.shared.contains(s));
                if strictly_more {
                    prop_assert!(a.rank <= b.rank, "{} rank {} vs {} rank {}", a.source, a.rank, b.source, b.rank);
                }
            }
        }
    }

    #[test]
    fn rank_zero_means_every_query_term((lat, q) in arb_lattice_and_query()) {
        let rs = search(&lat, &q).unwrap();
        for r in &rs.results {
            prop_assert_eq!(r.rank == 0, r.shared.len() == q.terms().len());
        }
    }

    #[test]
    fn repeated_queries_are_identical((lat, q) in arb_lattice_and_query()) {
        let first = search(&lat, &q).unwrap();
        let second = search(&lat, &q).unwrap();
        prop_assert_eq!(first.to_json(), second.to_json());
        prop_assert_eq!(first, second);
    }

    #[test]
    fn query_concept_contains_the_virtual_object((lat, q) in arb_lattice_and_query()) {
        let (overlay, qc) = insert_query(&lat, &q).unwrap();
        let extent = overlay.extent_ids(qc);
        prop_assert!(extent.iter().any(|id| id.as_str() == "Query"));
        prop_assert_eq!(overlay.shape(), ConceptLattice::build(overlay.context()).shape());
    }
}

#[test]
fn generalization_only_returns_sources_carrying_related_terms() {
    let ont = Ontology::parse(ORGANISMS).unwrap();
    let lat = ConceptLattice::build(&table1());
    let ctx = lat.context();
    for term in ont.terms() {
        let q = Query::from_names(ctx, &[ont.abbreviation(term).unwrap()]).unwrap();
        let original = ont.match_attribute(&q.terms()[0]).unwrap().to_string();
        let mut related = ont.ancestors(&original, Hops::Unlimited).unwrap();
        related.push(&original);
        let rs = search_refined(&lat, &q, &ont, RefineMode::Generalize, Hops::Unlimited).unwrap();
        for r in &rs.results {
            let g = ctx.object_index(r.source.as_str()).unwrap();
            let carries = ctx
                .attributes_in(ctx.row(g))
                .iter()
                .any(|a| ont.match_attribute(a).is_some_and(|t| related.contains(&t)));
            assert!(carries, "{} returned for {term}", r.source);
        }
    }
}
