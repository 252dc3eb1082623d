use std::collections::HashMap;

use crate::dataset::Dataset;
use crate::model::{Constraint, SemanticLabel, SemanticType, Value};

/// Column values replaced by dense class ids; `None` marks a null cell.
struct Column {
    classes: Vec<u32>,
    nulls: Vec<bool>,
}

fn encode(dataset: &Dataset, idx: usize) -> Column {
    let mut ids: HashMap<Option<&Value>, u32> = HashMap::new();
    let mut classes = Vec::with_capacity(dataset.len());
    let mut nulls = Vec::with_capacity(dataset.len());
    for row in &dataset.rows {
        let cell = row[idx].as_ref().filter(|v| !v.is_null());
        let next = ids.len() as u32;
        classes.push(*ids.entry(cell).or_insert(next));
        nulls.push(cell.is_none());
    }
    Column { classes, nulls }
}

/// Refines a row partition by one more column.
fn refine(groups: &[u32], col: &Column) -> Vec<u32> {
    let mut ids: HashMap<(u32, u32), u32> = HashMap::new();
    groups
        .iter()
        .zip(&col.classes)
        .map(|(&g, &c)| {
            let next = ids.len() as u32;
            *ids.entry((g, c)).or_insert(next)
        })
        .collect()
}

fn group_count(groups: &[u32]) -> usize {
    groups.iter().copied().max().map_or(0, |m| m as usize + 1)
}

fn determines(groups: &[u32], rhs: &Column) -> bool {
    let mut seen: Vec<Option<u32>> = vec![None; group_count(groups)];
    for (&g, &c) in groups.iter().zip(&rhs.classes) {
        match seen[g as usize] {
            None => seen[g as usize] = Some(c),
            Some(prev) if prev != c => return false,
            _ => {}
        }
    }
    true
}

/// Column subsets of size `0..=max` in lexicographic order, smallest first.
fn subsets(n: usize, max: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    let mut frontier = vec![vec![]];
    for _ in 0..max.min(n) {
        let mut next = Vec::new();
        for s in &frontier {
            let start = s.last().map_or(0, |&l: &usize| l + 1);
            for c in start..n {
                let mut t: Vec<usize> = s.clone();
                t.push(c);
                next.push(t);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

fn is_subset(a: &[usize], b: &[usize]) -> bool {
    a.iter().all(|x| b.contains(x))
}

/// Exact discovery of all minimal unique column combinations and all minimal
/// functional dependencies with at most `max_lhs` left-hand-side columns.
///
/// Unique combinations consider only columns without nulls. Dependencies
/// treat null as an ordinary value. Dependencies sharing a left-hand side are
/// grouped into one constraint.
pub fn discover_constraints(dataset: &Dataset, max_lhs: usize) -> Vec<Constraint> {
    let max_lhs = max_lhs.max(1);
    let n = dataset.paths.len();
    let cols: Vec<Column> = (0..n).map(|i| encode(dataset, i)).collect();
    let rows = dataset.len();
    let mut partitions: HashMap<Vec<usize>, Vec<u32>> = HashMap::new();
    partitions.insert(vec![], vec![0; rows]);
    let all = subsets(n, max_lhs);
    for s in all.iter().filter(|s| !s.is_empty()) {
        let parent = partitions[&s[..s.len() - 1]].clone();
        partitions.insert(s.clone(), refine(&parent, &cols[*s.last().unwrap()]));
    }

    let mut out = Vec::new();
    let mut uniques: Vec<Vec<usize>> = Vec::new();
    for s in all.iter().filter(|s| !s.is_empty()) {
        if s.iter().any(|&c| cols[c].nulls.iter().any(|&b| b)) || uniques.iter().any(|u| is_subset(u, s)) {
            continue;
        }
        if group_count(&partitions[s]) == rows {
            uniques.push(s.clone());
            out.push(Constraint::Unique { paths: s.iter().map(|&c| dataset.paths[c].clone()).collect() });
        }
    }

    // found[a] holds left-hand sides already known to determine column a.
    let mut found: Vec<Vec<Vec<usize>>> = vec![Vec::new(); n];
    for lhs in &all {
        let groups = &partitions[lhs];
        let mut rhs = Vec::new();
        for a in (0..n).filter(|a| !lhs.contains(a)) {
            if found[a].iter().any(|f| is_subset(f, lhs)) {
                continue;
            }
            if determines(groups, &cols[a]) {
                found[a].push(lhs.clone());
                rhs.push(a);
            }
        }
        if !rhs.is_empty() {
            out.push(Constraint::FunctionalDependency {
                lhs: lhs.iter().map(|&c| dataset.paths[c].clone()).collect(),
                rhs: rhs.iter().map(|&c| dataset.paths[c].clone()).collect(),
            });
        }
    }
    out
}

/// Drops dependencies whose left-hand side takes more than half as many
/// distinct values as there are rows. Such dependencies are artifacts of
/// near-unique columns and would otherwise tie most attributes together.
/// Dependencies with an empty left-hand side (constant columns) are kept.
pub fn prune_incidental_dependencies(dataset: &Dataset, constraints: Vec<Constraint>) -> Vec<Constraint> {
    let rows = dataset.len();
    constraints
        .into_iter()
        .filter(|c| match c {
            Constraint::FunctionalDependency { lhs, .. } if !lhs.is_empty() => {
                let idxs: Vec<usize> = lhs.iter().filter_map(|p| dataset.position(p)).collect();
                let distinct: std::collections::HashSet<Vec<Option<&Value>>> = dataset
                    .rows
                    .iter()
                    .map(|r| idxs.iter().map(|&i| r[i].as_ref().filter(|v| !v.is_null())).collect())
                    .collect();
                distinct.len() * 2 <= rows
            }
            _ => true,
        })
        .collect()
}

/// Unique single identifier columns additionally get a no-reuse guarantee:
/// once a value is held it is never assigned to another entity.
pub fn temporal_uniques(unique: &[Constraint], semantic: impl Fn(&crate::model::AttributePath) -> SemanticType) -> Vec<Constraint> {
    unique
        .iter()
        .filter_map(|c| match c {
            Constraint::Unique { paths } if paths.len() == 1 && semantic(&paths[0]).label == SemanticLabel::Identifier => {
                Some(Constraint::TemporalUnique { paths: paths.clone() })
            }
            _ => None,
        })
        .collect()
}
