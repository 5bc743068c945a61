//! Specialization hierarchies over metadata terms and query refinement.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::context::{Attribute, FormalContext};
use crate::error::{Error, Result};
use crate::retrieval::Query;

/// Bound on the number of ontology edges a refinement may follow.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Hops {
    Limited(u32),
    #[default]
    Unlimited,
}

impl Hops {
    fn allows(self, distance: u32) -> bool {
        match self {
            Hops::Limited(k) => distance <= k,
            Hops::Unlimited => true,
        }
    }
}

impl FromStr for Hops {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "unlimited" | "all" => Ok(Hops::Unlimited),
            n => n
                .parse()
                .map(Hops::Limited)
                .map_err(|_| Error::Document(format!("invalid hop count `{s}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RefineMode {
    Generalize,
    Specialize,
    Both,
}

impl fmt::Display for RefineMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RefineMode::Generalize => "generalize",
            RefineMode::Specialize => "specialize",
            RefineMode::Both => "both",
        })
    }
}

impl FromStr for RefineMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "generalize" => Ok(RefineMode::Generalize),
            "specialize" => Ok(RefineMode::Specialize),
            "both" => Ok(RefineMode::Both),
            _ => Err(Error::Document(format!("invalid refinement mode `{s}`"))),
        }
    }
}

/// What a refinement added to a query, and what it had to leave out.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RefinementReport {
    pub mode: RefineMode,
    #[serde(serialize_with = "crate::retrieval::serialize_keys")]
    pub added: Vec<Attribute>,
    /// Related ontology terms skipped because no context attribute carries them.
    pub dropped_candidates: Vec<String>,
    /// Query terms the ontology does not know.
    pub unmatched_terms: Vec<String>,
    /// Largest ontology distance among the added terms.
    pub hops_used: u32,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct OntologyDoc {
    prefix: String,
    root: String,
    #[serde(default)]
    terms: Vec<String>,
    #[serde(default)]
    edges: Vec<(String, String)>,
    #[serde(default)]
    abbreviations: BTreeMap<String, String>,
}

/// A rooted DAG of terms whose edges run from a general term to a more
/// specific one.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ontology {
    prefix: String,
    root: usize,
    names: Vec<String>,
    abbreviations: Vec<Option<String>>,
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
    lookup: HashMap<String, usize>,
}

impl Ontology {
    /// Parses and validates an ontology document (TOML with `prefix`,
    /// `root`, `edges = [[parent, child], ...]`, and optional `terms` and
    /// `[abbreviations]`).
    pub fn parse(doc: &str) -> Result<Self> {
        let doc: OntologyDoc = toml::from_str(doc)?;
        if doc.prefix.trim().is_empty() || doc.root.trim().is_empty() {
            return Err(Error::EmptyIdentifier);
        }

        let mut declared = std::collections::HashSet::new();
        for t in &doc.terms {
            if !declared.insert(t.as_str()) {
                return Err(Error::DuplicateTerm(t.clone()));
            }
        }

        let mut names: Vec<String> = Vec::new();
        let mut index: HashMap<String, usize> = HashMap::new();
        let mut intern = |name: &str, names: &mut Vec<String>| -> usize {
            *index.entry(name.to_string()).or_insert_with(|| {
                names.push(name.to_string());
                names.len() - 1
            })
        };
        let root = intern(&doc.root, &mut names);
        for t in &doc.terms {
            intern(t, &mut names);
        }
        let edges: Vec<(usize, usize)> = doc
            .edges
            .iter()
            .map(|(p, c)| (intern(p, &mut names), intern(c, &mut names)))
            .collect();

        let n = names.len();
        let mut parents = vec![Vec::new(); n];
        let mut children = vec![Vec::new(); n];
        for (p, c) in edges {
            if !children[p].contains(&c) {
                children[p].push(c);
                parents[c].push(p);
            }
        }

        let mut lookup: HashMap<String, usize> = names.iter().cloned().zip(0..).collect();
        let mut abbreviations = vec![None; n];
        for (term, abbrev) in doc.abbreviations {
            let t = *lookup.get(&term).ok_or_else(|| Error::UnknownTerm(term.clone()))?;
            if lookup.get(&abbrev).is_some_and(|&other| other != t) {
                return Err(Error::DuplicateTerm(abbrev));
            }
            lookup.insert(abbrev.clone(), t);
            abbreviations[t] = Some(abbrev);
        }

        let ont = Ontology { prefix: doc.prefix, root, names, abbreviations, parents, children, lookup };
        if let Some(cycle) = ont.find_cycle() {
            return Err(Error::OntologyCycle(cycle));
        }
        let reached = ont.walk(root, &ont.children, Hops::Unlimited);
        let mut seen = vec![false; n];
        seen[root] = true;
        for (t, _) in reached {
            seen[t] = true;
        }
        if let Some(t) = seen.iter().position(|s| !s) {
            return Err(Error::UnreachableTerm(ont.names[t].clone()));
        }
        Ok(ont)
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    fn find_cycle(&self) -> Option<Vec<String>> {
        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            New,
            Open,
            Done,
        }
        let n = self.names.len();
        let mut mark = vec![Mark::New; n];
        for start in 0..n {
            if mark[start] != Mark::New {
                continue;
            }
            // Iterative DFS; `path` holds the open chain.
            let mut path = vec![start];
            let mut next = vec![0usize];
            mark[start] = Mark::Open;
            while let Some(&t) = path.last() {
                let i = next.last_mut().unwrap();
                if let Some(&c) = self.children[t].get(*i) {
                    *i += 1;
                    match mark[c] {
                        Mark::Open => {
                            let from = path.iter().position(|&x| x == c).unwrap();
                            let mut witness: Vec<String> =
                                path[from..].iter().map(|&x| self.names[x].clone()).collect();
                            witness.push(self.names[c].clone());
                            return Some(witness);
                        }
                        Mark::New => {
                            mark[c] = Mark::Open;
                            path.push(c);
                            next.push(0);
                        }
                        Mark::Done => {}
                    }
                } else {
                    mark[t] = Mark::Done;
                    path.pop();
                    next.pop();
                }
            }
        }
        None
    }

    /// Terms reachable from `from` along `edges`, with shortest distances,
    /// ordered by (distance, name). Excludes `from`.
    fn walk(&self, from: usize, edges: &[Vec<usize>], hops: Hops) -> Vec<(usize, u32)> {
        let mut dist: Vec<Option<u32>> = vec![None; self.names.len()];
        dist[from] = Some(0);
        let mut queue = VecDeque::from([from]);
        let mut out = Vec::new();
        while let Some(t) = queue.pop_front() {
            let d = dist[t].unwrap() + 1;
            if !hops.allows(d) {
                continue;
            }
            for &u in &edges[t] {
                if dist[u].is_none() {
                    dist[u] = Some(d);
                    out.push((u, d));
                    queue.push_back(u);
                }
            }
        }
        out.sort_by(|a, b| (a.1, &self.names[a.0]).cmp(&(b.1, &self.names[b.0])));
        out
    }

    pub fn prefix(&self) -> &str {
        &self.prefix
    }

    pub fn root(&self) -> &str {
        &self.names[self.root]
    }

    pub fn terms(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn abbreviation(&self, term: &str) -> Option<&str> {
        self.index(term).ok().and_then(|t| self.abbreviations[t].as_deref())
    }

    /// `(parent, child)` pairs in declaration order.
    pub fn edges(&self) -> Vec<(&str, &str)> {
        self.children
            .iter()
            .enumerate()
            .flat_map(|(p, cs)| cs.iter().map(move |&c| (self.names[p].as_str(), self.names[c].as_str())))
            .collect()
    }

    /// Index of a term given by full name or abbreviation.
    fn index(&self, term: &str) -> Result<usize> {
        self.lookup.get(term).copied().ok_or_else(|| Error::UnknownTerm(term.to_string()))
    }

    pub fn contains(&self, term: &str) -> bool {
        self.lookup.contains_key(term)
    }

    /// Full name of a term given by name or abbreviation.
    pub fn canonical_name(&self, term: &str) -> Result<&str> {
        Ok(&self.names[self.index(term)?])
    }

    pub fn is_leaf(&self, term: &str) -> Result<bool> {
        Ok(self.children[self.index(term)?].is_empty())
    }

    pub fn is_root(&self, term: &str) -> Result<bool> {
        Ok(self.index(term)? == self.root)
    }

    /// The ontology term an attribute denotes: same or no prefix, and a term
    /// equal to a name or abbreviation.
    fn attribute_term(&self, attr: &Attribute) -> Option<usize> {
        if attr.prefix().is_some_and(|p| p != self.prefix) {
            return None;
        }
        self.lookup.get(attr.term()).copied()
    }

    /// Full name of the ontology term an attribute denotes.
    pub fn match_attribute(&self, attr: &Attribute) -> Option<&str> {
        self.attribute_term(attr).map(|t| self.names[t].as_str())
    }

    pub fn ancestors(&self, term: &str, hops: Hops) -> Result<Vec<&str>> {
        let t = self.index(term)?;
        Ok(self.walk(t, &self.parents, hops).into_iter().map(|(u, _)| self.names[u].as_str()).collect())
    }

    pub fn descendants(&self, term: &str, hops: Hops) -> Result<Vec<&str>> {
        let t = self.index(term)?;
        Ok(self.walk(t, &self.children, hops).into_iter().map(|(u, _)| self.names[u].as_str()).collect())
    }

    /// Shortest path length between two terms when one is an ancestor of the
    /// other; `None` for unrelated terms.
    pub fn term_distance(&self, a: &str, b: &str) -> Result<Option<u32>> {
        let (a, b) = (self.index(a)?, self.index(b)?);
        Ok(self.distance(a, b))
    }

    fn distance(&self, a: usize, b: usize) -> Option<u32> {
        if a == b {
            return Some(0);
        }
        let find = |from: usize, to: usize, edges: &[Vec<usize>]| {
            self.walk(from, edges, Hops::Unlimited).into_iter().find(|&(u, _)| u == to).map(|(_, d)| d)
        };
        find(a, b, &self.parents).or_else(|| find(a, b, &self.children))
    }

    /// Smallest ontology distance between an attribute and any of `origins`.
    pub(crate) fn attribute_distance(&self, origins: &[Attribute], attr: &Attribute) -> Option<u32> {
        let target = self.attribute_term(attr)?;
        origins
            .iter()
            .filter_map(|o| self.attribute_term(o))
            .filter_map(|o| self.distance(o, target))
            .min()
    }

    /// Refinement mode for a query when the user did not pick one: queries
    /// on leaves generalize, queries on the root specialize, anything else
    /// needs an explicit choice.
    pub fn default_mode(&self, query: &Query) -> Option<RefineMode> {
        let matched: Vec<usize> = query.terms().iter().filter_map(|a| self.attribute_term(a)).collect();
        if matched.is_empty() {
            None
        } else if matched.iter().all(|&t| self.children[t].is_empty()) {
            Some(RefineMode::Generalize)
        } else if matched.iter().all(|&t| t == self.root) {
            Some(RefineMode::Specialize)
        } else {
            None
        }
    }

    /// Adds to the query the context attributes denoting ancestors and/or
    /// descendants (within `hops` edges) of the query's ontology terms.
    pub fn refine(&self, query: &Query, ctx: &FormalContext, mode: RefineMode, hops: Hops) -> (Query, RefinementReport) {
        let mut terms: Vec<Attribute> = query.terms().to_vec();
        let mut report = RefinementReport {
            mode,
            added: Vec::new(),
            dropped_candidates: Vec::new(),
            unmatched_terms: Vec::new(),
            hops_used: 0,
        };
        for attr in query.terms() {
            let Some(t) = self.attribute_term(attr) else {
                report.unmatched_terms.push(attr.key());
                continue;
            };
            let mut related = Vec::new();
            if matches!(mode, RefineMode::Generalize | RefineMode::Both) {
                related.extend(self.walk(t, &self.parents, hops));
            }
            if matches!(mode, RefineMode::Specialize | RefineMode::Both) {
                related.extend(self.walk(t, &self.children, hops));
            }
            for (r, d) in related {
                let carriers: Vec<&Attribute> =
                    ctx.attributes().iter().filter(|a| self.attribute_term(a) == Some(r)).collect();
                if carriers.is_empty() {
                    let name = &self.names[r];
                    if !report.dropped_candidates.contains(name) {
                        report.dropped_candidates.push(name.clone());
                    }
                    continue;
                }
                for a in carriers {
                    if !terms.contains(a) {
                        terms.push(a.clone());
                        report.added.push(a.clone());
                        report.hops_used = report.hops_used.max(d);
                    }
                }
            }
        }
        (query.with_terms(terms), report)
    }

    pub fn refine_generalize(&self, query: &Query, ctx: &FormalContext, hops: Hops) -> (Query, RefinementReport) {
        self.refine(query, ctx, RefineMode::Generalize, hops)
    }

    pub fn refine_specialize(&self, query: &Query, ctx: &FormalContext, hops: Hops) -> (Query, RefinementReport) {
        self.refine(query, ctx, RefineMode::Specialize, hops)
    }

    pub fn refine_both(&self, query: &Query, ctx: &FormalContext, hops: Hops) -> (Query, RefinementReport) {
        self.refine(query, ctx, RefineMode::Both, hops)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const ORGANISMS: &str = include_str!("../../../fixtures/organisms.ont");

    fn organisms() -> Ontology {
        Ontology::parse(ORGANISMS).unwrap()
    }

    fn table1() -> FormalContext {
        FormalContext::from_csv_str(include_str!("../../../fixtures/table1.csv")).unwrap()
    }

    fn query(ctx: &FormalContext, names: &[&str]) -> Query {
        Query::from_names(ctx, names).unwrap()
    }

    fn keys(attrs: &[Attribute]) -> Vec<String> {
        attrs.iter().map(Attribute::key).collect()
    }

    #[test]
    fn loads_sample_organisms() {
        let ont = organisms();
        assert_eq!(ont.len(), 8);
        assert_eq!(ont.root(), "Any Organism");
        assert_eq!(ont.prefix(), "NCBI");
        assert_eq!(ont.canonical_name("Ch").unwrap(), "Chicken");
        assert_eq!(ont.abbreviation("Vertebrates"), Some("Ve"));
    }

    #[test]
    fn load_edge_cases() {
        let single = Ontology::parse("prefix = \"X\"\nroot = \"Thing\"\n").unwrap();
        assert_eq!(single.len(), 1);
        assert!(single.is_leaf("Thing").unwrap() && single.is_root("Thing").unwrap());

        let self_loop = "prefix = \"X\"\nroot = \"A\"\nedges = [[\"A\", \"B\"], [\"B\", \"B\"]]\n";
        assert!(matches!(Ontology::parse(self_loop), Err(Error::OntologyCycle(w)) if w == ["B", "B"]));

        let cycle = "prefix = \"X\"\nroot = \"A\"\nedges = [[\"A\", \"B\"], [\"B\", \"C\"], [\"C\", \"B\"]]\n";
        assert!(matches!(Ontology::parse(cycle), Err(Error::OntologyCycle(w)) if w == ["B", "C", "B"]));

        let orphan = "prefix = \"X\"\nroot = \"A\"\nedges = [[\"A\", \"B\"], [\"C\", \"D\"]]\n";
        assert!(matches!(Ontology::parse(orphan), Err(Error::UnreachableTerm(t)) if t == "C"));

        let dup = "prefix = \"X\"\nroot = \"A\"\nterms = [\"B\", \"B\"]\n";
        assert!(matches!(Ontology::parse(dup), Err(Error::DuplicateTerm(t)) if t == "B"));

        let dup_abbrev = "prefix = \"X\"\nroot = \"A\"\nedges = [[\"A\", \"B\"]]\n[abbreviations]\nA = \"B\"\n";
        assert!(matches!(Ontology::parse(dup_abbrev), Err(Error::DuplicateTerm(_))));

        let diamond = "prefix = \"X\"\nroot = \"A\"\nedges = [[\"A\", \"B\"], [\"A\", \"C\"], [\"B\", \"D\"], [\"C\", \"D\"]]\n";
        let ont = Ontology::parse(diamond).unwrap();
        assert_eq!(ont.ancestors("D", Hops::Unlimited).unwrap(), ["B", "C", "A"]);
    }

    #[test]
    fn ancestors_examples() {
        let ont = organisms();
        assert_eq!(
            ont.ancestors("Chicken", Hops::Unlimited).unwrap(),
            ["Vertebrates", "Animals", "Eucaryotes", "Cellular Organisms", "Any Organism"]
        );
        assert!(ont.ancestors("Any Organism", Hops::Unlimited).unwrap().is_empty());
        assert_eq!(ont.ancestors("Chicken", Hops::Limited(1)).unwrap(), ["Vertebrates"]);
        assert!(matches!(ont.ancestors("Dog", Hops::Unlimited), Err(Error::UnknownTerm(_))));
    }

    #[test]
    fn descendants_examples() {
        let ont = organisms();
        assert_eq!(
            ont.descendants("Eucaryotes", Hops::Unlimited).unwrap(),
            ["Animals", "Vertebrates", "Chicken", "Human", "Mouse"]
        );
        assert!(ont.descendants("Chicken", Hops::Unlimited).unwrap().is_empty());
        assert_eq!(ont.descendants("Animals", Hops::Limited(1)).unwrap(), ["Vertebrates"]);
        assert!(ont.descendants("Animals", Hops::Limited(0)).unwrap().is_empty());
    }

    #[test]
    fn term_distance_examples() {
        let ont = organisms();
        assert_eq!(ont.term_distance("Human", "Vertebrates").unwrap(), Some(1));
        assert_eq!(ont.term_distance("Vertebrates", "Human").unwrap(), Some(1));
        assert_eq!(ont.term_distance("Mouse", "Mouse").unwrap(), Some(0));
        assert_eq!(ont.term_distance("Human", "Mouse").unwrap(), None);
        assert_eq!(ont.term_distance("Ch", "AO").unwrap(), Some(5));
        assert!(ont.term_distance("Human", "Dog").is_err());
    }

    #[test]
    fn generalize_examples() {
        let (ont, ctx) = (organisms(), table1());
        let (q, report) = ont.refine_generalize(&query(&ctx, &["Ch"]), &ctx, Hops::Unlimited);
        assert_eq!(keys(q.terms()), ["Ch", "Ve", "An", "AO"]);
        assert_eq!(keys(&report.added), ["Ve", "An", "AO"]);
        assert_eq!(report.dropped_candidates, ["Eucaryotes", "Cellular Organisms"]);
        assert_eq!(report.hops_used, 5);

        let (q, report) = ont.refine_generalize(&query(&ctx, &["AO"]), &ctx, Hops::Limited(3));
        assert_eq!(keys(q.terms()), ["AO"]);
        assert!(report.added.is_empty());

        let (q, report) = ont.refine_generalize(&query(&ctx, &["Ch"]), &ctx, Hops::Limited(1));
        assert_eq!(keys(q.terms()), ["Ch", "Ve"]);
        assert_eq!(report.hops_used, 1);
    }

    #[test]
    fn specialize_examples() {
        let (ont, ctx) = (organisms(), table1());
        let (q, report) = ont.refine_specialize(&query(&ctx, &["Eu"]), &ctx, Hops::Unlimited);
        let mut got = keys(q.terms());
        got.sort();
        assert_eq!(got, ["An", "Eu", "Hu", "Mo", "Ve"]);
        assert_eq!(report.dropped_candidates, ["Chicken"]);

        let (q, _) = ont.refine_specialize(&query(&ctx, &["Ch"]), &ctx, Hops::Unlimited);
        assert_eq!(keys(q.terms()), ["Ch"]);

        let (q, _) = ont.refine_specialize(&query(&ctx, &["An"]), &ctx, Hops::Limited(1));
        assert_eq!(keys(q.terms()), ["An", "Ve"]);
    }

    #[test]
    fn both_examples() {
        let (ont, ctx) = (organisms(), table1());
        let (q, report) = ont.refine_both(&query(&ctx, &["An"]), &ctx, Hops::Unlimited);
        let mut got = keys(q.terms());
        got.sort();
        assert_eq!(got, ["AO", "An", "Hu", "Mo", "Ve"]);
        assert_eq!(report.mode, RefineMode::Both);

        let (q, report) = ont.refine_both(&query(&ctx, &["NS"]), &ctx, Hops::Unlimited);
        assert_eq!(keys(q.terms()), ["NS"]);
        assert_eq!(report.unmatched_terms, ["NS"]);

        let (both, _) = ont.refine_both(&query(&ctx, &["Ch"]), &ctx, Hops::Unlimited);
        let (gen, _) = ont.refine_generalize(&query(&ctx, &["Ch"]), &ctx, Hops::Unlimited);
        assert_eq!(both, gen);
    }

    #[test]
    fn zero_hops_is_identity() {
        let (ont, ctx) = (organisms(), table1());
        for mode in [RefineMode::Generalize, RefineMode::Specialize, RefineMode::Both] {
            let q = query(&ctx, &["An", "NS"]);
            let (refined, report) = ont.refine(&q, &ctx, mode, Hops::Limited(0));
            assert_eq!(refined, q);
            assert!(report.added.is_empty());
        }
    }

    #[test]
    fn prefixed_attributes_match_their_ontology_only() {
        let ont = organisms();
        let ncbi = Attribute::prefixed("NCBI", "Hu", crate::Category::Organism).unwrap();
        let other = Attribute::prefixed("MESH", "Hu", crate::Category::Subject).unwrap();
        assert_eq!(ont.match_attribute(&ncbi), Some("Human"));
        assert_eq!(ont.match_attribute(&other), None);
    }

    #[test]
    fn default_mode_heuristic() {
        let (ont, ctx) = (organisms(), table1());
        assert_eq!(ont.default_mode(&query(&ctx, &["Ch"])), Some(RefineMode::Generalize));
        assert_eq!(ont.default_mode(&query(&ctx, &["AO"])), Some(RefineMode::Specialize));
        assert_eq!(ont.default_mode(&query(&ctx, &["An"])), None);
        assert_eq!(ont.default_mode(&query(&ctx, &["NS"])), None);
    }

    #[test]
    fn hops_parse() {
        assert_eq!("unlimited".parse::<Hops>().unwrap(), Hops::Unlimited);
        assert_eq!("2".parse::<Hops>().unwrap(), Hops::Limited(2));
        assert!("-1".parse::<Hops>().is_err());
    }
}
