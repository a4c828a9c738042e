use std::collections::{BTreeMap, HashMap};

use super::Catalog;
use crate::domain::{Airing, Program, ProgramId};

/// Two same-title airings are one broadcast when their intervals overlap by
/// at least this fraction of the longer one.
pub const SIMULCAST_MIN_OVERLAP: f64 = 0.9;

/// Intersection length over the longer interval's length.
pub fn overlap_ratio(a: &Airing, b: &Airing) -> f64 {
    let inter = (a.end.min(b.end) - a.start.max(b.start)).max(0);
    let longer = (a.end - a.start).max(b.end - b.start);
    if longer <= 0 {
        0.0
    } else {
        inter as f64 / longer as f64
    }
}

struct UnionFind {
    parent: HashMap<ProgramId, ProgramId>,
}

impl UnionFind {
    fn find(&mut self, x: ProgramId) -> ProgramId {
        let p = *self.parent.get(&x).unwrap_or(&x);
        if p == x {
            return x;
        }
        let root = self.find(p);
        self.parent.insert(x, root);
        root
    }

    /// The smaller id always becomes the root, so the canonical id of a
    /// group is its minimum.
    fn union(&mut self, a: ProgramId, b: ProgramId) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent.insert(hi, lo);
        }
    }
}

/// Folds programs broadcast simultaneously on several channels (same title,
/// near-identical interval) into one canonical program, the lowest id of each
/// group. Airings of merged programs move to the canonical id and the merged
/// ids are kept as aliases so view logs can be remapped.
pub fn merge_simulcasts(catalog: &Catalog) -> Catalog {
    let mut by_title: BTreeMap<&str, Vec<&Airing>> = BTreeMap::new();
    for a in catalog.airings() {
        if let Some(p) = catalog.program(a.program) {
            by_title.entry(p.title.as_str()).or_default().push(a);
        }
    }

    let mut uf = UnionFind { parent: HashMap::new() };
    for group in by_title.values() {
        // already sorted by start through the catalog order
        for (i, a) in group.iter().enumerate() {
            for b in &group[i + 1..] {
                if b.start >= a.end {
                    break;
                }
                if a.program != b.program && overlap_ratio(a, b) >= SIMULCAST_MIN_OVERLAP {
                    uf.union(a.program, b.program);
                }
            }
        }
    }

    let mut programs: BTreeMap<ProgramId, Program> = BTreeMap::new();
    let mut aliases = BTreeMap::new();
    for p in catalog.programs() {
        let root = uf.find(p.id);
        if root != p.id {
            aliases.insert(p.id, root);
        }
    }
    for p in catalog.programs() {
        let root = uf.find(p.id);
        let first = p.first_broadcast;
        programs
            .entry(root)
            .and_modify(|kept| kept.first_broadcast = kept.first_broadcast.min(first))
            .or_insert_with(|| {
                let mut kept = catalog.program(root).cloned().unwrap_or_else(|| p.clone());
                kept.first_broadcast = kept.first_broadcast.min(first);
                kept
            });
    }
    for (&alias, &target) in catalog.aliases() {
        aliases.insert(alias, uf.find(target));
    }

    let airings = catalog
        .airings()
        .iter()
        .map(|a| Airing {
            program: uf.find(a.program),
            ..*a
        })
        .collect();

    Catalog::with_aliases(programs.into_values().collect(), airings, aliases)
        .expect("merging preserves catalog invariants")
}
