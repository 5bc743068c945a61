//! Concept lattices, built incrementally one object at a time.
//!
//! Insertion of an object with intent `B` walks the existing concepts in
//! order of increasing intent size. A concept whose intent is contained in
//! `B` is *modified*: it gains the object. Any other concept meets `B` in
//! `intent ∩ B`; the first concept producing an intersection that is not yet
//! an intent is that intersection's *generator*, and a new concept
//! `(extent(generator) ∪ {g}, intent ∩ B)` is created. Cover edges are then
//! recomputed from extents alone (see [`ConceptLattice::covers`]).

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt::Write as _;
use std::path::Path;

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};

use crate::context::{Attribute, FormalContext, SourceId, QUERY_LABEL};
use crate::error::{Error, Result};

pub mod oracle;

/// Index of a concept in a lattice's canonical order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ConceptId(pub usize);

/// A closed (extent, intent) pair over the owning context's indices.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Concept {
    extent: FixedBitSet,
    intent: FixedBitSet,
}

impl Concept {
    pub fn new(extent: FixedBitSet, intent: FixedBitSet) -> Self {
        Concept { extent, intent }
    }

    pub fn extent(&self) -> &FixedBitSet {
        &self.extent
    }

    pub fn intent(&self) -> &FixedBitSet {
        &self.intent
    }

    fn sort_key(&self) -> (usize, Vec<usize>) {
        (self.intent.count_ones(..), self.intent.ones().collect())
    }
}

/// How concept nodes are labelled in DOT output.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Labeling {
    /// Every node shows its full extent and intent.
    #[default]
    Full,
    /// Each object appears only at its object concept and each attribute
    /// only at its attribute concept.
    Reduced,
}

/// Name-based view of a lattice, independent of object/attribute order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LatticeShape {
    pub concepts: BTreeSet<(BTreeSet<String>, BTreeSet<String>)>,
    /// Cover edges as (child intent, parent intent).
    pub covers: BTreeSet<(BTreeSet<String>, BTreeSet<String>)>,
}

#[derive(Clone, Debug)]
pub struct ConceptLattice {
    context: FormalContext,
    concepts: Vec<Concept>,
    covers: Vec<(ConceptId, ConceptId)>,
    upper: Vec<Vec<ConceptId>>,
    lower: Vec<Vec<ConceptId>>,
    by_intent: HashMap<FixedBitSet, ConceptId>,
}

impl PartialEq for ConceptLattice {
    fn eq(&self, other: &Self) -> bool {
        self.context == other.context && self.concepts == other.concepts && self.covers == other.covers
    }
}

impl Eq for ConceptLattice {}

impl ConceptLattice {
    /// Lattice of a context with no objects: the single concept (∅, M).
    fn seed(attributes: &[Attribute]) -> Self {
        let context = FormalContext::with_attributes(attributes.iter().cloned())
            .expect("attributes of a valid context are unique");
        let mut intent = FixedBitSet::with_capacity(attributes.len());
        intent.insert_range(..);
        let mut lat = ConceptLattice {
            context,
            concepts: vec![Concept::new(FixedBitSet::new(), intent)],
            covers: Vec::new(),
            upper: Vec::new(),
            lower: Vec::new(),
            by_intent: HashMap::new(),
        };
        lat.reindex();
        lat
    }

    /// Builds the lattice of `ctx` by inserting its objects in row order.
    pub fn build(ctx: &FormalContext) -> Self {
        let mut lat = ConceptLattice::seed(ctx.attributes());
        for (g, id) in ctx.objects().iter().enumerate() {
            let attrs = ctx.attributes_in(ctx.row(g));
            lat.absorb(id.clone(), &attrs).expect("objects of a valid context are unique");
        }
        lat
    }

    /// Returns the lattice of the context extended by one object.
    pub fn insert_object(&self, id: SourceId, attrs: &[Attribute]) -> Result<Self> {
        if id.as_str() == QUERY_LABEL {
            return Err(Error::ReservedSource(id.to_string()));
        }
        let mut lat = self.clone();
        lat.absorb(id, attrs)?;
        Ok(lat)
    }

    /// In-place insertion without the reserved-label check; used for query
    /// overlays.
    pub(crate) fn absorb(&mut self, id: SourceId, attrs: &[Attribute]) -> Result<usize> {
        let old_m = self.context.attribute_count();
        let g = self.context.push_object(id, attrs)?;
        let n_attrs = self.context.attribute_count();
        let n_objs = self.context.object_count();

        for c in &mut self.concepts {
            c.extent.grow(n_objs);
            c.intent.grow(n_attrs);
        }
        if n_attrs > old_m {
            // New attributes belong to no existing object, so the concept with
            // empty extent takes them all (and is created if it was missing).
            match self.concepts.iter_mut().find(|c| c.extent.is_clear()) {
                Some(bottom) => bottom.intent.insert_range(old_m..),
                None => {
                    let mut intent = FixedBitSet::with_capacity(n_attrs);
                    intent.insert_range(..);
                    self.concepts.push(Concept::new(FixedBitSet::with_capacity(n_objs), intent));
                }
            }
        }

        let new_intent = self.context.row(g).clone();
        let mut order: Vec<usize> = (0..self.concepts.len()).collect();
        order.sort_by_key(|&i| self.concepts[i].intent.count_ones(..));

        let mut known: HashSet<FixedBitSet> = self.concepts.iter().map(|c| c.intent.clone()).collect();
        let mut created = Vec::new();
        for i in order {
            let concept = &mut self.concepts[i];
            if concept.intent.is_subset(&new_intent) {
                concept.extent.insert(g);
                continue;
            }
            let mut meet = concept.intent.clone();
            meet.intersect_with(&new_intent);
            if !known.insert(meet.clone()) {
                continue;
            }
            let mut extent = concept.extent.clone();
            extent.insert(g);
            created.push(Concept::new(extent, meet));
        }
        self.concepts.extend(created);
        self.reindex();
        Ok(g)
    }

    /// Restores canonical concept order and recomputes covers.
    ///
    /// The upper covers of a concept with extent `E` are found among the
    /// closures of `E ∪ {h}` for `h ∉ E`: a candidate `P` is a cover exactly
    /// when it is produced by every object of `extent(P) \ E`.
    fn reindex(&mut self) {
        self.concepts.sort_by_cached_key(Concept::sort_key);
        self.by_intent = self
            .concepts
            .iter()
            .enumerate()
            .map(|(i, c)| (c.intent.clone(), ConceptId(i)))
            .collect();

        let n = self.concepts.len();
        let mut upper = vec![Vec::new(); n];
        let mut lower = vec![Vec::new(); n];
        let mut covers = Vec::new();
        for (i, c) in self.concepts.iter().enumerate() {
            let mut hits: HashMap<ConceptId, usize> = HashMap::new();
            for h in 0..self.context.object_count() {
                if c.extent.contains(h) {
                    continue;
                }
                let mut intent = c.intent.clone();
                intent.intersect_with(self.context.row(h));
                let p = self.by_intent[&intent];
                *hits.entry(p).or_default() += 1;
            }
            let mut parents: Vec<ConceptId> = hits
                .into_iter()
                .filter(|&(p, count)| {
                    let parent = &self.concepts[p.0].extent;
                    parent.count_ones(..) - c.extent.count_ones(..) == count
                })
                .map(|(p, _)| p)
                .collect();
            parents.sort();
            for &p in &parents {
                covers.push((ConceptId(i), p));
                lower[p.0].push(ConceptId(i));
            }
            upper[i] = parents;
        }
        covers.sort();
        self.covers = covers;
        self.upper = upper;
        self.lower = lower;
    }

    pub fn context(&self) -> &FormalContext {
        &self.context
    }

    pub fn concepts(&self) -> &[Concept] {
        &self.concepts
    }

    pub fn len(&self) -> usize {
        self.concepts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.concepts.is_empty()
    }

    pub fn concept(&self, id: ConceptId) -> &Concept {
        &self.concepts[id.0]
    }

    /// Hasse edges, child → parent, sorted.
    pub fn covers(&self) -> &[(ConceptId, ConceptId)] {
        &self.covers
    }

    /// The concept with extent G.
    pub fn top(&self) -> ConceptId {
        ConceptId(0)
    }

    /// The concept with intent M.
    pub fn bottom(&self) -> ConceptId {
        ConceptId(self.concepts.len() - 1)
    }

    pub fn find_by_intent(&self, intent: &FixedBitSet) -> Option<ConceptId> {
        self.by_intent.get(intent).copied()
    }

    /// Looks up a concept from its (named) intent.
    pub fn find(&self, intent: &[Attribute]) -> Result<ConceptId> {
        let not_found = || Error::ConceptNotFound(intent.iter().map(Attribute::key).collect::<Vec<_>>().join(", "));
        let set = self.context.attribute_set(intent).map_err(|_| not_found())?;
        self.find_by_intent(&set).ok_or_else(not_found)
    }

    /// The object concept (g″, g′) of object index `g`.
    pub fn object_concept(&self, g: usize) -> ConceptId {
        self.by_intent[self.context.row(g)]
    }

    /// The attribute concept (m′, m″) of attribute index `m`.
    pub fn attribute_concept(&self, m: usize) -> ConceptId {
        let intent = self.context.intent_of(self.context.column(m));
        self.by_intent[&intent]
    }

    pub fn upper_covers(&self, id: ConceptId) -> &[ConceptId] {
        &self.upper[id.0]
    }

    pub fn lower_covers(&self, id: ConceptId) -> &[ConceptId] {
        &self.lower[id.0]
    }

    pub fn extent_ids(&self, id: ConceptId) -> Vec<SourceId> {
        self.context.objects_in(&self.concepts[id.0].extent)
    }

    pub fn intent_attributes(&self, id: ConceptId) -> Vec<Attribute> {
        self.context.attributes_in(&self.concepts[id.0].intent)
    }

    /// Length of the longest chain, in cover edges.
    pub fn height(&self) -> usize {
        // Canonical order sorts by intent size, so every parent precedes its
        // children and one forward pass suffices.
        let mut depth = vec![0usize; self.concepts.len()];
        for i in 0..self.concepts.len() {
            for &p in &self.upper[i] {
                depth[i] = depth[i].max(depth[p.0] + 1);
            }
        }
        depth.into_iter().max().unwrap_or(0)
    }

    pub fn shape(&self) -> LatticeShape {
        let names = |c: &Concept| -> (BTreeSet<String>, BTreeSet<String>) {
            (
                c.extent.ones().map(|g| self.context.objects()[g].to_string()).collect(),
                c.intent.ones().map(|m| self.context.attributes()[m].key()).collect(),
            )
        };
        LatticeShape {
            concepts: self.concepts.iter().map(names).collect(),
            covers: self
                .covers
                .iter()
                .map(|&(c, p)| (names(&self.concepts[c.0]).1, names(&self.concepts[p.0]).1))
                .collect(),
        }
    }

    /// Breadth-first walk upwards from `start`, yielding each concept once
    /// with its distance.
    pub fn subsumers(&self, start: ConceptId) -> Vec<(ConceptId, usize)> {
        let mut seen = vec![false; self.concepts.len()];
        let mut out = Vec::new();
        let mut queue = VecDeque::from([(start, 0)]);
        seen[start.0] = true;
        while let Some((c, d)) = queue.pop_front() {
            out.push((c, d));
            for &p in &self.upper[c.0] {
                if !seen[p.0] {
                    seen[p.0] = true;
                    queue.push_back((p, d + 1));
                }
            }
        }
        out
    }

    pub fn to_dot(&self, labeling: Labeling) -> String {
        let mut own_objects = vec![Vec::new(); self.concepts.len()];
        let mut own_attributes = vec![Vec::new(); self.concepts.len()];
        if labeling == Labeling::Reduced {
            for (g, id) in self.context.objects().iter().enumerate() {
                own_objects[self.object_concept(g).0].push(id.to_string());
            }
            for (m, a) in self.context.attributes().iter().enumerate() {
                own_attributes[self.attribute_concept(m).0].push(a.key());
            }
        }

        let mut out = String::from("digraph lattice {\n  rankdir=BT;\n  node [shape=box];\n");
        for (i, c) in self.concepts.iter().enumerate() {
            let (objs, attrs) = match labeling {
                Labeling::Full => (
                    self.context.objects_in(&c.extent).iter().map(ToString::to_string).collect(),
                    self.context.attributes_in(&c.intent).iter().map(Attribute::key).collect(),
                ),
                Labeling::Reduced => (own_objects[i].clone(), own_attributes[i].clone()),
            };
            let label = format!("{{{}}}\\n{{{}}}", escape(&objs.join(", ")), escape(&attrs.join(", ")));
            let _ = writeln!(out, "  c{i} [label=\"{label}\"];");
        }
        for (c, p) in &self.covers {
            let _ = writeln!(out, "  c{} -> c{};", c.0, p.0);
        }
        out.push_str("}\n");
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&LatticeDoc::from(self)).expect("lattice serializes") + "\n"
    }

    /// Reloads a saved lattice. The file's concepts and covers are checked
    /// against a fresh build of its context.
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: LatticeDoc = serde_json::from_str(text)?;
        let lat = ConceptLattice::build(&doc.context);
        let expected = LatticeDoc::from(&lat);
        if expected.concepts != doc.concepts {
            return Err(Error::InconsistentLattice("concept list differs".into()));
        }
        if expected.covers != doc.covers {
            return Err(Error::InconsistentLattice("cover relation differs".into()));
        }
        Ok(lat)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

#[derive(Serialize, Deserialize, PartialEq)]
struct ConceptDoc {
    extent: Vec<String>,
    intent: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct LatticeDoc {
    context: FormalContext,
    concepts: Vec<ConceptDoc>,
    covers: Vec<[usize; 2]>,
}

impl From<&ConceptLattice> for LatticeDoc {
    fn from(lat: &ConceptLattice) -> Self {
        LatticeDoc {
            context: lat.context.clone(),
            concepts: (0..lat.len())
                .map(|i| ConceptDoc {
                    extent: lat.extent_ids(ConceptId(i)).iter().map(ToString::to_string).collect(),
                    intent: lat.intent_attributes(ConceptId(i)).iter().map(Attribute::key).collect(),
                })
                .collect(),
            covers: lat.covers.iter().map(|&(c, p)| [c.0, p.0]).collect(),
        }
    }
}
