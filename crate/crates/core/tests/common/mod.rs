#![allow(dead_code)]

use fca_registry::{Attribute, Category, FormalContext, SourceId};
use proptest::prelude::*;
use rand::Rng;

pub const TABLE1: &str = include_str!("../../../../fixtures/table1.csv");
pub const ORGANISMS: &str = include_str!("../../../../fixtures/organisms.ont");

pub fn table1() -> FormalContext {
    FormalContext::from_csv_str(TABLE1).unwrap()
}

pub fn attribute(i: usize) -> Attribute {
    let cat = [Category::Subject, Category::Organism, Category::Quality][i % 3];
    Attribute::new(format!("m{i}"), cat).unwrap()
}

pub fn context_from_matrix(matrix: &[Vec<bool>], attrs: usize) -> FormalContext {
    let mut ctx = FormalContext::with_attributes((0..attrs).map(attribute)).unwrap();
    for (g, row) in matrix.iter().enumerate() {
        let present: Vec<Attribute> = row.iter().enumerate().filter(|(_, &b)| b).map(|(m, _)| attribute(m)).collect();
        ctx = ctx.add_object(SourceId::new(format!("g{g}")).unwrap(), &present).unwrap();
    }
    ctx
}

pub fn random_context(rng: &mut impl Rng, max_objects: usize, max_attrs: usize, density: f64) -> FormalContext {
    let n = rng.gen_range(0..=max_objects);
    let m = rng.gen_range(0..=max_attrs);
    let matrix: Vec<Vec<bool>> = (0..n).map(|_| (0..m).map(|_| rng.gen_bool(density)).collect()).collect();
    context_from_matrix(&matrix, m)
}

/// Contexts of up to 10 objects and 8 attributes.
pub fn arb_context() -> impl Strategy<Value = FormalContext> {
    (0usize..=10, 0usize..=8, prop::sample::select(vec![0.2, 0.4, 0.6])).prop_flat_map(|(n, m, density)| {
        prop::collection::vec(prop::collection::vec(prop::bool::weighted(density), m), n)
            .prop_map(move |matrix| context_from_matrix(&matrix, m))
    })
}
