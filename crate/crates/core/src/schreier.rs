//! Reidemeister-Schreier presentations of congruence subgroups from the
//! coset action on the finite quotient, followed by bounded Tietze
//! simplification.
//!
//! Cosets are right cosets of the image subgroup H inside G = SL2(O/a);
//! the coset graph is the action of the parent generators by right
//! multiplication, so no Todd-Coxeter enumeration is needed.

use std::collections::{HashMap, HashSet};

use num_bigint::BigInt;
use num_traits::ToPrimitive;

use crate::congruence::{MatrixModA, QuotientRing, SubgroupKind, SubgroupSpec};
use crate::error::{Error, Result};
use crate::mat2::Mat2;
use crate::presentation::GroupPresentation;
use crate::words::{canonical_rotation, cyclic_reduce, free_reduce, invert_word, Letter, Word};

#[derive(Debug, Clone, serde::Serialize)]
pub struct SchreierStats {
    pub cosets: usize,
    pub schreier_generators_pre: usize,
    pub relators_pre: usize,
    pub generators_post: usize,
    pub relators_post: usize,
    pub total_relator_length_post: usize,
    pub eliminations: usize,
}

pub struct SubgroupPresentation {
    pub parent: GroupPresentation,
    pub spec: SubgroupSpec,
    pub quotient: QuotientRing,
    pub image: Vec<MatrixModA>,
    pub index: usize,
    pub coset_reps: Vec<MatrixModA>,
    pub transversal_words: Vec<Word>,
    pub transversal_mats: Vec<Mat2>,
    /// Final (simplified) generators.
    pub gen_matrices: Vec<Mat2>,
    pub gen_names: Vec<String>,
    /// Relators over the final generator alphabet.
    pub relators: Vec<Word>,
    pub stats: SchreierStats,
    // Coset action per parent generator: act_pos[g][c] = c * g,
    // act_neg[g][c] = c * g^-1.
    act_pos: Vec<Vec<u32>>,
    act_neg: Vec<Vec<u32>>,
    // Schreier generator ids: (coset, parent gen) -> dense id, or None for
    // spanning-tree pairs.
    sgen_ids: Vec<Option<u32>>,
    parent_gen_count: usize,
    // Original Schreier generator matrices (index = dense id).
    orig_matrices: Vec<Mat2>,
    // orig id -> final id (1-based), None when eliminated.
    live_map: Vec<Option<u32>>,
    // orig id -> definition over orig alphabet, for eliminated generators.
    definitions: Vec<Option<Word>>,
    coset_index: HashMap<MatrixModA, u32>,
}

#[derive(Debug, Clone, Copy)]
pub struct SimplifyOptions {
    /// Stop eliminating once this many generators remain (0 = minimum).
    pub target_generators: usize,
    /// Abort elimination when total relator length exceeds this.
    pub max_total_length: usize,
    /// Cap on a single expanded word during rewriting.
    pub max_expanded_length: usize,
}

impl Default for SimplifyOptions {
    fn default() -> Self {
        SimplifyOptions {
            target_generators: 0,
            max_total_length: 40_000_000,
            max_expanded_length: 20_000_000,
        }
    }
}

/// Builds the subgroup presentation for the given congruence spec.
pub fn subgroup_presentation(
    parent: &GroupPresentation,
    spec: &SubgroupSpec,
    opts: SimplifyOptions,
) -> Result<SubgroupPresentation> {
    let q = spec.quotient()?;
    let h = spec.image_subgroup(&q);
    let field = &parent.field;
    let g_count = parent.gen_matrices.len();
    let red: Vec<MatrixModA> =
        parent.gen_matrices.iter().map(|m| MatrixModA::reduce(m, &q)).collect();
    let red_inv: Vec<MatrixModA> = red.iter().map(|m| m.inverse(&q)).collect();
    let principal = spec.kind == SubgroupKind::Principal;
    let canon = |m: MatrixModA| -> MatrixModA {
        if principal {
            m
        } else {
            h.iter().map(|x| x.mul(&m, &q)).min().unwrap()
        }
    };

    // BFS over the coset graph.
    let start = canon(MatrixModA::identity(&q));
    let mut coset_reps = vec![start];
    let mut coset_index: HashMap<MatrixModA, u32> = HashMap::new();
    coset_index.insert(start, 0);
    let mut tree: Vec<Option<(u32, Letter)>> = vec![None];
    let mut queue = std::collections::VecDeque::new();
    queue.push_back(0u32);
    let mut act_pos: Vec<Vec<u32>> = vec![Vec::new(); g_count];
    let mut act_neg: Vec<Vec<u32>> = vec![Vec::new(); g_count];
    while let Some(c) = queue.pop_front() {
        for gi in 0..g_count {
            for sign in [1i32, -1] {
                let m = if sign > 0 {
                    coset_reps[c as usize].mul(&red[gi], &q)
                } else {
                    coset_reps[c as usize].mul(&red_inv[gi], &q)
                };
                let cm = canon(m);
                if !coset_index.contains_key(&cm) {
                    let id = coset_reps.len() as u32;
                    coset_index.insert(cm, id);
                    coset_reps.push(cm);
                    tree.push(Some((c, sign * (gi as i32 + 1))));
                    queue.push_back(id);
                }
            }
        }
    }
    let n = coset_reps.len();
    let expected = spec.index()?;
    if BigInt::from(n) != expected {
        return Err(Error::CosetGraphNotTransitive {
            reached: n,
            expected: expected.to_usize().unwrap_or(usize::MAX),
        });
    }
    for gi in 0..g_count {
        act_pos[gi] = vec![0; n];
        act_neg[gi] = vec![0; n];
        for c in 0..n {
            let p = canon(coset_reps[c].mul(&red[gi], &q));
            let m = canon(coset_reps[c].mul(&red_inv[gi], &q));
            act_pos[gi][c] = coset_index[&p];
            act_neg[gi][c] = coset_index[&m];
        }
    }

    // Transversal words and matrices along the tree.
    let mut transversal_words: Vec<Word> = vec![Vec::new(); n];
    let mut transversal_mats: Vec<Mat2> = vec![Mat2::identity(); n];
    // tree is in BFS discovery order, so parents are resolved first.
    for c in 1..n {
        let (p, l) = tree[c].unwrap();
        let mut w = transversal_words[p as usize].clone();
        w.push(l);
        transversal_words[c] = w;
        let gm = &parent.gen_matrices[(l.unsigned_abs() - 1) as usize];
        let gm = if l > 0 { gm.clone() } else { gm.inverse_unimodular() };
        transversal_mats[c] = transversal_mats[p as usize].mul(&gm, field);
    }

    // Schreier generators: non-tree (coset, generator) pairs.
    let mut sgen_ids: Vec<Option<u32>> = vec![None; n * g_count];
    let mut trivial: Vec<bool> = vec![false; n * g_count];
    for c in 1..n {
        let (p, l) = tree[c].unwrap();
        let gi = (l.unsigned_abs() - 1) as usize;
        if l > 0 {
            trivial[p as usize * g_count + gi] = true;
        } else {
            trivial[c * g_count + gi] = true;
        }
    }
    let mut orig_matrices = Vec::new();
    let mut next_id = 0u32;
    for c in 0..n {
        for gi in 0..g_count {
            if trivial[c * g_count + gi] {
                continue;
            }
            sgen_ids[c * g_count + gi] = Some(next_id);
            next_id += 1;
            let cx = act_pos[gi][c] as usize;
            let m = transversal_mats[c]
                .mul(&parent.gen_matrices[gi], field)
                .mul(&transversal_mats[cx].inverse_unimodular(), field);
            // Membership: the Schreier matrix must reduce into H.
            let rm = MatrixModA::reduce(&m, &q);
            if principal {
                if !rm.is_identity(&q) {
                    return Err(Error::Parse(format!(
                        "schreier generator does not reduce to the identity at coset {c}"
                    )));
                }
            } else if !h.contains(&rm) {
                return Err(Error::Parse(format!(
                    "schreier generator does not land in the image subgroup at coset {c}"
                )));
            }
            orig_matrices.push(m);
        }
    }
    let sgen_pre = orig_matrices.len();
    assert_eq!(sgen_pre, n * (g_count - 1) + 1, "Schreier index formula");

    // Rewrite t_c r t_c^-1 for every coset and parent relator.
    let rewrite = |start: u32, w: &[Letter]| -> (Word, u32) {
        let mut cur = start;
        let mut out: Word = Vec::with_capacity(w.len());
        for &l in w {
            let gi = (l.unsigned_abs() - 1) as usize;
            if l > 0 {
                if let Some(id) = sgen_ids[cur as usize * g_count + gi] {
                    out.push(id as i32 + 1);
                }
                cur = act_pos[gi][cur as usize];
            } else {
                let prev = act_neg[gi][cur as usize];
                if let Some(id) = sgen_ids[prev as usize * g_count + gi] {
                    out.push(-(id as i32 + 1));
                }
                cur = prev;
            }
        }
        (out, cur)
    };
    let mut raw_relators: Vec<Word> = Vec::with_capacity(n * parent.relators.len());
    for c in 0..n as u32 {
        for r in &parent.relators {
            let (w, end) = rewrite(c, r);
            debug_assert_eq!(end, c, "relator action must be trivial on cosets");
            let w = cyclic_reduce(&w);
            if !w.is_empty() {
                raw_relators.push(w);
            }
        }
    }
    let relators_pre = raw_relators.len();

    // Tietze elimination.
    let mut simp = Simplifier::new(sgen_pre, raw_relators, opts);
    simp.run();
    let (live_map, definitions, final_relators, eliminations) = simp.finish();

    let mut gen_matrices = Vec::new();
    let mut gen_names = Vec::new();
    for (orig, slot) in live_map.iter().enumerate() {
        if slot.is_some() {
            gen_matrices.push(orig_matrices[orig].clone());
            gen_names.push(format!("s{orig}"));
        }
    }
    let total_len: usize = final_relators.iter().map(|r| r.len()).sum();
    let stats = SchreierStats {
        cosets: n,
        schreier_generators_pre: sgen_pre,
        relators_pre,
        generators_post: gen_matrices.len(),
        relators_post: final_relators.len(),
        total_relator_length_post: total_len,
        eliminations,
    };
    Ok(SubgroupPresentation {
        parent: parent.clone(),
        spec: spec.clone(),
        quotient: q,
        image: h,
        index: n,
        coset_reps,
        transversal_words,
        transversal_mats,
        gen_matrices,
        gen_names,
        relators: final_relators,
        stats,
        act_pos,
        act_neg,
        sgen_ids,
        parent_gen_count: g_count,
        orig_matrices,
        live_map,
        definitions,
        coset_index,
    })
}

impl SubgroupPresentation {
    pub fn coset_of(&self, m: &MatrixModA) -> Option<u32> {
        if self.spec.kind == SubgroupKind::Principal {
            self.coset_index.get(m).copied()
        } else {
            let c = self.image.iter().map(|x| x.mul(m, &self.quotient)).min().unwrap();
            self.coset_index.get(&c).copied()
        }
    }

    pub fn coset_act(&self, c: u32, l: Letter) -> u32 {
        let gi = (l.unsigned_abs() - 1) as usize;
        if l > 0 {
            self.act_pos[gi][c as usize]
        } else {
            self.act_neg[gi][c as usize]
        }
    }

    /// Rewrites a parent-alphabet word that lies in the subgroup into the
    /// final generator alphabet.
    pub fn rewrite_parent_word(&self, w: &[Letter], max_len: usize) -> Result<Word> {
        let mut cur = 0u32;
        let mut out: Word = Vec::with_capacity(w.len());
        for &l in w {
            let gi = (l.unsigned_abs() - 1) as usize;
            if l > 0 {
                if let Some(id) = self.sgen_ids[cur as usize * self.parent_gen_count + gi] {
                    out.push(id as i32 + 1);
                }
                cur = self.act_pos[gi][cur as usize];
            } else {
                let prev = self.act_neg[gi][cur as usize];
                if let Some(id) = self.sgen_ids[prev as usize * self.parent_gen_count + gi] {
                    out.push(-(id as i32 + 1));
                }
                cur = prev;
            }
        }
        if cur != 0 {
            return Err(Error::Parse("word does not lie in the subgroup".into()));
        }
        self.expand_to_final(&out, max_len)
    }

    /// Expands eliminated generators and renames live ones to final ids.
    pub fn expand_to_final(&self, w: &[Letter], max_len: usize) -> Result<Word> {
        let mut out: Word = Vec::new();
        // Work stack of (orig-alphabet word, position, sign).
        let mut stack: Vec<(std::rc::Rc<Word>, usize, i32)> =
            vec![(std::rc::Rc::new(w.to_vec()), 0, 1)];
        while let Some((word, pos, sign)) = stack.pop() {
            if pos >= word.len() {
                continue;
            }
            // For inverted frames walk right-to-left.
            let idx = if sign > 0 { pos } else { word.len() - 1 - pos };
            let l = word[idx] * sign;
            stack.push((word.clone(), pos + 1, sign));
            let orig = (l.unsigned_abs() - 1) as usize;
            match self.live_map[orig] {
                Some(fin) => {
                    out.push(if l > 0 { fin as i32 } else { -(fin as i32) });
                    if out.len() > max_len {
                        return Err(Error::Parse("expanded word exceeds the length cap".into()));
                    }
                }
                None => {
                    let def = self.definitions[orig]
                        .as_ref()
                        .expect("eliminated generator must have a definition");
                    stack.push((std::rc::Rc::new(def.clone()), 0, l.signum()));
                }
            }
        }
        Ok(free_reduce(&out))
    }

    /// Matrix of a final-alphabet word.
    pub fn evaluate_final(&self, w: &[Letter]) -> Mat2 {
        crate::words::evaluate(w, &self.gen_matrices, &self.parent.field)
    }
}

/// Tietze generator elimination over a fixed original alphabet.
struct Simplifier {
    gen_count: usize,
    relators: Vec<Option<Word>>,
    occ: Vec<HashMap<usize, u32>>, // gen -> relator id -> occurrence count
    heap: std::collections::BinaryHeap<std::cmp::Reverse<(usize, usize)>>,
    canonical: HashMap<Word, usize>,
    live_gen: Vec<bool>,
    definitions: Vec<Option<Word>>,
    total_length: usize,
    eliminations: usize,
    opts: SimplifyOptions,
}

impl Simplifier {
    fn new(gen_count: usize, relators: Vec<Word>, opts: SimplifyOptions) -> Self {
        let mut s = Simplifier {
            gen_count,
            relators: Vec::new(),
            occ: vec![HashMap::new(); gen_count],
            heap: Default::default(),
            canonical: HashMap::new(),
            live_gen: vec![true; gen_count],
            definitions: vec![None; gen_count],
            total_length: 0,
            eliminations: 0,
            opts,
        };
        for r in relators {
            s.insert_relator(r);
        }
        s
    }

    fn canonical_form(w: &[Letter]) -> Word {
        let c1 = canonical_rotation(w);
        let c2 = canonical_rotation(&invert_word(w));
        c1.min(c2)
    }

    fn insert_relator(&mut self, w: Word) {
        let w = cyclic_reduce(&w);
        if w.is_empty() {
            return;
        }
        let canon = Self::canonical_form(&w);
        if self.canonical.contains_key(&canon) {
            return;
        }
        let id = self.relators.len();
        self.canonical.insert(canon, id);
        for &l in &w {
            *self.occ[(l.unsigned_abs() - 1) as usize].entry(id).or_insert(0) += 1;
        }
        self.total_length += w.len();
        self.heap.push(std::cmp::Reverse((w.len(), id)));
        self.relators.push(Some(w));
    }

    fn remove_relator(&mut self, id: usize) -> Option<Word> {
        let w = self.relators[id].take()?;
        for &l in &w {
            let gi = (l.unsigned_abs() - 1) as usize;
            if let Some(c) = self.occ[gi].get_mut(&id) {
                *c -= 1;
                if *c == 0 {
                    self.occ[gi].remove(&id);
                }
            }
        }
        self.total_length -= w.len();
        self.canonical.remove(&Self::canonical_form(&w));
        Some(w)
    }

    /// A generator occurring exactly once (counting both signs) in relator w.
    fn unique_gen(&self, w: &[Letter]) -> Option<usize> {
        let mut counts: HashMap<usize, u32> = HashMap::new();
        for &l in w {
            *counts.entry((l.unsigned_abs() - 1) as usize).or_insert(0) += 1;
        }
        let mut best: Option<usize> = None;
        for (&g, &c) in &counts {
            if c == 1 && self.live_gen[g] {
                // Prefer the generator occurring in the fewest other relators.
                let cost = self.occ[g].len();
                match best {
                    Some(b) if (self.occ[b].len(), b) <= (cost, g) => {}
                    _ => best = Some(g),
                }
            }
        }
        best
    }

    fn live_gen_count(&self) -> usize {
        self.live_gen.iter().filter(|x| **x).count()
    }

    fn run(&mut self) {
        while self.total_length <= self.opts.max_total_length
            && self.live_gen_count() > self.opts.target_generators
        {
            let Some(std::cmp::Reverse((len, id))) = self.heap.pop() else { break };
            let Some(w) = self.relators[id].clone() else { continue };
            if w.len() != len {
                continue; // stale heap entry
            }
            let Some(gen) = self.unique_gen(&w) else { continue };
            self.eliminate(gen, id);
        }
    }

    fn eliminate(&mut self, gen: usize, relator_id: usize) {
        let w = self.remove_relator(relator_id).expect("validated relator");
        // Rotate so the unique occurrence of gen is first: w = x^e s.
        let pos = w
            .iter()
            .position(|&l| (l.unsigned_abs() - 1) as usize == gen)
            .expect("unique occurrence");
        let mut rot: Word = w[pos..].to_vec();
        rot.extend_from_slice(&w[..pos]);
        let e = rot[0].signum();
        let rest: Word = rot[1..].to_vec();
        // x^e * rest = 1: for e = +1, x = rest^-1; for e = -1, x = rest.
        let def = if e > 0 { invert_word(&rest) } else { rest };
        debug_assert!(def.iter().all(|&l| (l.unsigned_abs() - 1) as usize != gen));
        self.live_gen[gen] = false;
        self.definitions[gen] = Some(def.clone());
        self.eliminations += 1;

        // Substitute into every relator mentioning gen.
        let affected: Vec<usize> = self.occ[gen].keys().copied().collect();
        for rid in affected {
            let Some(old) = self.remove_relator(rid) else { continue };
            let mut new_w: Word = Vec::with_capacity(old.len() + def.len());
            for &l in &old {
                if (l.unsigned_abs() - 1) as usize == gen {
                    if l > 0 {
                        new_w.extend_from_slice(&def);
                    } else {
                        new_w.extend(invert_word(&def));
                    }
                } else {
                    new_w.push(l);
                }
            }
            self.insert_relator(new_w);
        }
    }

    fn finish(self) -> (Vec<Option<u32>>, Vec<Option<Word>>, Vec<Word>, usize) {
        // Renumber live generators.
        let mut live_map: Vec<Option<u32>> = vec![None; self.gen_count];
        let mut next = 1u32;
        for g in 0..self.gen_count {
            if self.live_gen[g] {
                live_map[g] = Some(next);
                next += 1;
            }
        }
        let mut final_relators: Vec<Word> = Vec::new();
        for w in self.relators.into_iter().flatten() {
            let mapped: Word = w
                .iter()
                .map(|&l| {
                    let fin = live_map[(l.unsigned_abs() - 1) as usize]
                        .expect("live relator letters only") as i32;
                    if l > 0 {
                        fin
                    } else {
                        -fin
                    }
                })
                .collect();
            final_relators.push(mapped);
        }
        final_relators.sort_by(|x, y| (x.len(), &*x).cmp(&(y.len(), &*y)).then(std::cmp::Ordering::Equal));
        (live_map, self.definitions, final_relators, self.eliminations)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::congruence::SubgroupSpec;
    use crate::presentation::load_presentation;
    use crate::quadfield::{parse_ring_element, FieldDescriptor, IdealRep};

    fn principal_spec(d: u64, level: &str) -> (GroupPresentation, SubgroupSpec) {
        let field = FieldDescriptor::new(d).unwrap();
        let parent = load_presentation(d).unwrap();
        let ideal = IdealRep::principal(parse_ring_element(level).unwrap(), &field).unwrap();
        let spec = SubgroupSpec::principal(ideal, &field).unwrap();
        (parent, spec)
    }

    #[test]
    fn schreier_counts_level_one_plus_i() {
        let (parent, spec) = principal_spec(1, "1+1*w");
        let sub = subgroup_presentation(&parent, &spec, SimplifyOptions::default()).unwrap();
        assert_eq!(sub.index, 6);
        assert_eq!(sub.stats.schreier_generators_pre, 6 * (4 - 1) + 1);
        // Relators must evaluate to the identity in the final alphabet.
        for r in sub.relators.iter().take(25) {
            assert!(sub.evaluate_final(r).is_identity());
        }
    }

    #[test]
    fn schreier_matrices_reduce_into_subgroup() {
        let (parent, spec) = principal_spec(1, "2+1*w");
        let sub = subgroup_presentation(&parent, &spec, SimplifyOptions::default()).unwrap();
        assert_eq!(sub.index, 120);
        let one = crate::quadfield::RingElement::one();
        for m in &sub.gen_matrices {
            assert!(spec.level.contains(&m.e[0].sub(&one)));
            assert!(spec.level.contains(&m.e[1]));
            assert!(spec.level.contains(&m.e[2]));
            assert!(spec.level.contains(&m.e[3].sub(&one)));
        }
        // Simplification must shrink the raw presentation substantially.
        assert!(sub.stats.generators_post < 80, "got {}", sub.stats.generators_post);
    }

    #[test]
    fn index_one_returns_parent_presentation() {
        let field = FieldDescriptor::new(2).unwrap();
        let parent = load_presentation(2).unwrap();
        let ideal = IdealRep::principal(parse_ring_element("3+1*w").unwrap(), &field).unwrap();
        let q = crate::congruence::QuotientRing::new(&ideal, &field).unwrap();
        // H = all of SL2(O/a): generated by the reduced parent generators.
        let gens: Vec<MatrixModA> =
            parent.gen_matrices.iter().map(|m| MatrixModA::reduce(m, &q)).collect();
        let spec = SubgroupSpec::general(ideal, gens, &field).unwrap();
        let sub = subgroup_presentation(&parent, &spec, SimplifyOptions::default()).unwrap();
        assert_eq!(sub.index, 1);
        assert_eq!(sub.stats.schreier_generators_pre, parent.gen_matrices.len());
    }

    #[test]
    fn rewritten_parent_words_evaluate_back() {
        let (parent, spec) = principal_spec(1, "1+1*w");
        let sub = subgroup_presentation(&parent, &spec, SimplifyOptions::default()).unwrap();
        // t^4 lies in Gamma((1+i)) since t has order dividing 4 in SL2(F_2)
        // only if its reduction does; find a small power that lands inside.
        let field = &parent.field;
        let t = crate::mat2::gen_t();
        let mut p = t.clone();
        let mut w: Word = vec![3];
        loop {
            let r = MatrixModA::reduce(&p, &sub.quotient);
            if r.is_identity(&sub.quotient) {
                break;
            }
            p = p.mul(&t, field);
            w.push(3);
        }
        let rewritten = sub.rewrite_parent_word(&w, 1_000_000).unwrap();
        assert_eq!(sub.evaluate_final(&rewritten), p);
    }

    #[test]
    fn subgroup_relators_sample_evaluates_identity() {
        let (parent, spec) = principal_spec(2, "1-1*w");
        let sub = subgroup_presentation(&parent, &spec, SimplifyOptions::default()).unwrap();
        // N(1-w) = 3 in O_2, index |SL2(F_3)| = 24.
        assert_eq!(sub.index, 24);
        for r in &sub.relators {
            assert!(sub.evaluate_final(r).is_identity());
        }
    }
}
