use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use rayon::prelude::*;
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet};

use super::{escalate, truant, GramLattice};
use crate::error::{Error, Result};
use crate::quadfield::{
    decompose_oracle, enumerate_region, same_square_class, sort_canonical, FieldContext, QuadInt,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchLimits {
    /// Stop once a level holds more lattices than this.
    pub max_nodes_per_level: usize,
    pub keep_tree: bool,
}

impl Default for SearchLimits {
    fn default() -> Self {
        SearchLimits {
            max_nodes_per_level: 100_000,
            keep_tree: false,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct NodeRecord {
    pub id: usize,
    pub parent: Option<usize>,
    pub depth: usize,
    pub added_target: Option<QuadInt>,
    pub cross_vector: Vec<QuadInt>,
    pub truant: Option<QuadInt>,
    pub gram: GramLattice,
}

#[derive(Debug, Clone, Serialize)]
pub struct RankBound {
    #[serde(rename = "D", serialize_with = "ser_field_d")]
    pub field: FieldContext,
    pub queue: Vec<QuadInt>,
    pub bound: usize,
    /// Number of lattices at each rank.
    pub tree_summary: Vec<usize>,
    pub exhaustive: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tree: Option<Vec<NodeRecord>>,
}

fn ser_field_d<S: serde::Serializer>(f: &FieldContext, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&f.d().to_string())
}

/// Built-in queues. `paper73` is `[1, rho, sigma, rho', sigma', 2, rho' sigma, rho sigma]`
/// over `Q(sqrt 73)` with `rho = 4 + w`, `sigma = 83 + 22w`.
pub fn named_queue(name: &str, field: &FieldContext) -> Result<Vec<QuadInt>> {
    match name {
        "paper73" => {
            if field.d() != &BigInt::from(73) {
                return Err(Error::QueueInvalid("paper73 needs D = 73".into()));
            }
            let rho = field.elem(4, 1);
            let sigma = field.elem(83, 22);
            let (rp, sp) = (rho.conjugate(), sigma.conjugate());
            Ok(vec![
                field.one(),
                rho.clone(),
                sigma.clone(),
                rp.clone(),
                sp,
                field.int(2),
                &rp * &sigma,
                &rho * &sigma,
            ])
        }
        _ => Err(Error::QueueInvalid(format!("unknown queue {name}"))),
    }
}

fn validate_queue(field: &FieldContext, queue: &[QuadInt]) -> Result<()> {
    if queue.first() != Some(&field.one()) {
        return Err(Error::QueueInvalid("queue must start with 1".into()));
    }
    for (i, q) in queue.iter().enumerate() {
        if q.field() != field {
            return Err(Error::MixedFields);
        }
        if !q.is_totally_positive() {
            return Err(Error::QueueInvalid(format!("{q} is not totally positive")));
        }
        if queue[..i].contains(q) {
            return Err(Error::QueueInvalid(format!("{q} is repeated")));
        }
    }
    Ok(())
}

pub fn lower_bound_search(field: &FieldContext, queue: &[QuadInt], max_depth: usize) -> Result<RankBound> {
    lower_bound_search_with(field, queue, max_depth, &SearchLimits::default())
}

/// Breadth-first escalation by truants from the queue. The bound is the
/// largest `d <= max_depth` such that every lattice of rank below `d` misses
/// some queue element.
pub fn lower_bound_search_with(
    field: &FieldContext,
    queue: &[QuadInt],
    max_depth: usize,
    limits: &SearchLimits,
) -> Result<RankBound> {
    validate_queue(field, queue)?;
    let mut tree: Vec<NodeRecord> = Vec::new();
    let mut level: Vec<(GramLattice, Option<usize>)> = vec![(GramLattice::empty(field), None)];
    let mut summary = Vec::new();
    let mut bound = max_depth;
    let mut exhaustive = true;
    for depth in 0..max_depth {
        summary.push(level.len());
        let truants: Vec<Option<QuadInt>> = level.par_iter().map(|(l, _)| truant(l, queue)).collect();
        let mut ids = Vec::with_capacity(level.len());
        for ((l, parent), t) in level.iter().zip(&truants) {
            let id = tree.len();
            ids.push(id);
            if limits.keep_tree {
                let n = l.rank();
                tree.push(NodeRecord {
                    id,
                    parent: *parent,
                    depth,
                    added_target: (n > 0).then(|| l.entry(n - 1, n - 1).clone()),
                    cross_vector: (0..n.saturating_sub(1)).map(|i| l.entry(i, n - 1).clone()).collect(),
                    truant: t.clone(),
                    gram: l.clone(),
                });
            } else {
                tree.push(NodeRecord {
                    id,
                    parent: *parent,
                    depth,
                    added_target: None,
                    cross_vector: Vec::new(),
                    truant: None,
                    gram: GramLattice::empty(field),
                });
            }
        }
        if truants.iter().any(|t| t.is_none()) {
            bound = depth;
            break;
        }
        if depth + 1 == max_depth {
            break;
        }
        let children: Vec<Vec<GramLattice>> = level
            .par_iter()
            .zip(truants.par_iter())
            .map(|((l, _), t)| escalate(l, t.as_ref().expect("truant exists")))
            .collect::<Result<Vec<_>>>()?;
        let mut next: BTreeMap<Vec<(String, String)>, (GramLattice, Option<usize>)> = BTreeMap::new();
        for (kids, &pid) in children.into_iter().zip(&ids) {
            for k in kids {
                next.entry(k.key()).or_insert((k, Some(pid)));
            }
        }
        if next.len() > limits.max_nodes_per_level {
            exhaustive = false;
            bound = depth + 1;
            break;
        }
        level = next.into_values().collect();
    }
    Ok(RankBound {
        field: field.clone(),
        queue: queue.to_vec(),
        bound,
        tree_summary: summary,
        exhaustive,
        tree: limits.keep_tree.then_some(tree),
    })
}

/// Every multiset of at least two totally positive elements summing to `a`.
/// Sets `truncated` when the cap cut the recursion short.
fn splits(a: &QuadInt, cap: usize, truncated: &mut bool) -> Vec<Vec<QuadInt>> {
    let field = a.field();
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    let c = a.to_surd().scale(&half);
    let r = c.square();
    let mut parts: Vec<QuadInt> = enumerate_region(field, &c, &r, &r.conj())
        .into_iter()
        .filter(|b| b.is_totally_positive() && (a - b).is_totally_positive())
        .collect();
    sort_canonical(&mut parts);
    let mut out: BTreeSet<Vec<(String, String)>> = BTreeSet::new();
    let mut res = Vec::new();
    for b in parts {
        let rest = a - &b;
        let mut tails: Vec<Vec<QuadInt>> = vec![vec![rest.clone()]];
        if res.len() < cap {
            tails.extend(splits(&rest, cap, truncated));
        } else {
            *truncated = true;
        }
        for t in tails {
            let mut m = t;
            m.push(b.clone());
            sort_canonical(&mut m);
            let key: Vec<(String, String)> = m.iter().map(|e| (e.x.to_string(), e.y.to_string())).collect();
            if out.insert(key) {
                res.push(m);
            }
        }
    }
    res
}

#[derive(Debug, Clone, Serialize)]
pub struct DiagonalReport {
    pub bound: usize,
    /// Indices of the listed elements grouped by square class.
    pub classes: Vec<Vec<usize>>,
    pub indecomposable: Vec<bool>,
    /// Classes with an indecomposable member.
    pub counted_classes: usize,
    /// Decomposable elements in an uncounted class none of whose splittings
    /// uses distinct counted classes.
    pub forcing: Vec<usize>,
}

/// Lower bound for the number of variables of a universal diagonal form.
///
/// Each square class holding an indecomposable listed element needs its own
/// coefficient. A decomposable element in a new class adds one more variable
/// when every way of writing it as a sum of totally positive elements needs
/// two summands from one counted class or one from an uncounted class; at
/// most one such variable is added. Elements with too many splittings to
/// list never add one.
pub fn diagonal_report(field: &FieldContext, elems: &[QuadInt]) -> Result<DiagonalReport> {
    for e in elems {
        if e.field() != field {
            return Err(Error::MixedFields);
        }
        if !e.is_totally_positive() {
            return Err(Error::NotTotallyPositive);
        }
    }
    let mut classes: Vec<Vec<usize>> = Vec::new();
    for (i, e) in elems.iter().enumerate() {
        let mut placed = false;
        for c in classes.iter_mut() {
            if same_square_class(&elems[c[0]], e)? {
                c.push(i);
                placed = true;
                break;
            }
        }
        if !placed {
            classes.push(vec![i]);
        }
    }
    let indecomposable: Vec<bool> = elems
        .iter()
        .map(|e| decompose_oracle(e).map(|d| d.is_none()))
        .collect::<Result<_>>()?;
    let counted: Vec<&Vec<usize>> = classes.iter().filter(|c| c.iter().any(|&i| indecomposable[i])).collect();
    let counted_reps: Vec<&QuadInt> = counted.iter().map(|c| &elems[c[0]]).collect();
    let class_of = |x: &QuadInt| -> Result<Option<usize>> {
        for (k, r) in counted_reps.iter().enumerate() {
            if same_square_class(r, x)? {
                return Ok(Some(k));
            }
        }
        Ok(None)
    };
    let mut forcing = Vec::new();
    for c in &classes {
        if counted.contains(&c) {
            continue;
        }
        for &i in c {
            let mut truncated = false;
            let all = splits(&elems[i], 10_000, &mut truncated);
            // an incomplete list cannot show that no cheap splitting exists
            let mut cheap = truncated;
            for s in all {
                let mut seen = BTreeSet::new();
                let mut ok = true;
                for part in &s {
                    match class_of(part)? {
                        Some(k) if seen.insert(k) => {}
                        _ => {
                            ok = false;
                            break;
                        }
                    }
                }
                if ok {
                    cheap = true;
                    break;
                }
            }
            if !cheap {
                forcing.push(i);
            }
        }
    }
    let counted_classes = counted.len();
    let bound = counted_classes + usize::from(!forcing.is_empty());
    Ok(DiagonalReport {
        bound,
        classes,
        indecomposable,
        counted_classes,
        forcing,
    })
}

pub fn diagonal_lower_bound(field: &FieldContext, elems: &[QuadInt]) -> Result<usize> {
    Ok(diagonal_report(field, elems)?.bound)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadfield::{check_prop24, make_field, Cond4Mode};

    fn k73() -> FieldContext {
        make_field(&BigInt::from(73)).unwrap()
    }

    #[test]
    fn small_queues() {
        let k = k73();
        let q = named_queue("paper73", &k).unwrap();
        let r = lower_bound_search(&k, &q[..1], 8).unwrap();
        assert_eq!((r.bound, r.exhaustive), (1, true));
        let r = lower_bound_search(&k, &q[..3], 8).unwrap();
        assert_eq!((r.bound, r.exhaustive), (3, true));
        let c = check_prop24(&k, &q[..3], Cond4Mode::Brute).unwrap();
        assert_eq!(c.conclusion_m, Some(r.bound));
        assert!(matches!(lower_bound_search(&k, &q[1..], 8), Err(Error::QueueInvalid(_))));
        let dup = vec![k.one(), k.elem(4, 1), k.elem(4, 1)];
        assert!(matches!(lower_bound_search(&k, &dup, 8), Err(Error::QueueInvalid(_))));
    }

    #[test]
    fn first_levels_follow_the_hand_computation() {
        let k = k73();
        let q = named_queue("paper73", &k).unwrap();
        let limits = SearchLimits {
            keep_tree: true,
            ..Default::default()
        };
        let r = lower_bound_search_with(&k, &q, 5, &limits).unwrap();
        assert_eq!(r.bound, 5);
        // ranks 0..3 are forced; rank 4 splits on the entry between rho and rho'
        assert_eq!(&r.tree_summary[..4], &[1, 1, 1, 1]);
        assert_eq!(r.tree_summary[4], 2);
        let tree = r.tree.unwrap();
        let rank3 = tree.iter().find(|n| n.depth == 3).unwrap();
        assert!(rank3.gram.is_diagonal());
        assert_eq!(rank3.truant, Some(q[3].clone()));
        for n in tree.iter().filter(|n| n.depth == 4) {
            assert_eq!(n.truant, Some(q[4].clone()));
        }
    }

    #[test]
    fn diagonal_bounds() {
        let k = k73();
        let rho = k.elem(4, 1);
        let sigma = k.elem(83, 22);
        let eps = k.elem(943, 250);
        assert_eq!(diagonal_lower_bound(&k, &[k.one(), rho.clone()]), Ok(2));
        assert_eq!(diagonal_lower_bound(&k, &[k.one(), rho.clone(), &rho * &eps.square()]), Ok(2));
        let (rp, sp) = (rho.conjugate(), sigma.conjugate());
        let ten = vec![
            k.one(),
            k.int(2),
            rho.clone(),
            rp.clone(),
            sigma.clone(),
            sp.clone(),
            &rho * &sigma,
            &rho * &sp,
            &rp * &sigma,
            &rp * &sp,
        ];
        let r = diagonal_report(&k, &ten).unwrap();
        assert_eq!(r.bound, 10);
        assert_eq!(r.counted_classes, 9);
        assert_eq!(r.forcing, vec![1]);
    }

    #[test]
    fn escalations_represent_their_targets() {
        let k = k73();
        let q = named_queue("paper73", &k).unwrap();
        let limits = SearchLimits {
            keep_tree: true,
            ..Default::default()
        };
        let r = lower_bound_search_with(&k, &q, 7, &limits).unwrap();
        for n in r.tree.unwrap() {
            if let Some(t) = &n.added_target {
                assert!(super::super::represents(&n.gram, t).is_some());
            }
        }
    }

    #[test]
    fn certified_family_sets_escalate_diagonally() {
        let inst = crate::family::instantiate(&BigInt::from(2), 7, &BigInt::from(1)).unwrap();
        let set = crate::family::build_candidate_set(&inst, crate::family::RangeMode::Direct).unwrap();
        let k = set[0].field().clone();
        let limits = SearchLimits {
            keep_tree: true,
            ..Default::default()
        };
        let r = lower_bound_search_with(&k, &set, 3, &limits).unwrap();
        assert_eq!((r.bound, r.exhaustive), (3, true));
        assert_eq!(r.tree_summary, vec![1, 1, 1]);
        for n in r.tree.unwrap() {
            assert!(n.gram.is_diagonal());
        }
    }
}
