//! Fox derivatives of relator words: the second boundary map of a
//! presentation complex, kept symbolic as group-ring elements.

use std::collections::BTreeMap;

use crate::words::{free_reduce, Letter, Word};

/// A formal Z-linear combination of group elements, each stored as a freely
/// reduced word.
pub type GroupRingElt = Vec<(Word, i64)>;

fn add_term(acc: &mut BTreeMap<Word, i64>, w: Word, c: i64) {
    let e = acc.entry(w).or_insert(0);
    *e += c;
}

fn collect(acc: BTreeMap<Word, i64>) -> GroupRingElt {
    acc.into_iter().filter(|(_, c)| *c != 0).collect()
}

/// Fox derivative d(w)/d(x_gen) with the product rule
/// d(uv) = d(u) + u d(v), d(x) = 1, d(x^-1) = -x^-1.
pub fn fox_derivative(w: &[Letter], gen: u32) -> GroupRingElt {
    let mut acc: BTreeMap<Word, i64> = BTreeMap::new();
    let mut prefix: Word = Vec::new();
    for &l in w {
        let g = l.unsigned_abs();
        if l > 0 {
            if g == gen {
                add_term(&mut acc, free_reduce(&prefix), 1);
            }
            prefix.push(l);
        } else {
            prefix.push(l);
            if g == gen {
                add_term(&mut acc, free_reduce(&prefix), -1);
            }
        }
    }
    collect(acc)
}

/// The symbolic second boundary map: entry (relator, generator) is the Fox
/// derivative of the relator by that generator.
#[derive(Debug, Clone)]
pub struct FoxMatrix {
    pub relator_count: usize,
    pub gen_count: usize,
    /// Row-major: entries[r][g].
    pub entries: Vec<Vec<GroupRingElt>>,
}

/// The symbolic boundary pair of a presentation: the Fox matrix and the
/// augmentation column (x_j - 1).
pub fn fox_boundaries(relators: &[Word], gen_count: usize) -> (FoxMatrix, Vec<GroupRingElt>) {
    let entries: Vec<Vec<GroupRingElt>> = relators
        .iter()
        .map(|r| (1..=gen_count as u32).map(|g| fox_derivative(r, g)).collect())
        .collect();
    let d1: Vec<GroupRingElt> = (1..=gen_count as i32)
        .map(|g| vec![(vec![g], 1i64), (Vec::new(), -1i64)])
        .collect();
    (FoxMatrix { relator_count: relators.len(), gen_count, entries }, d1)
}

/// Group-ring product of two elements (used by the identity tests).
pub fn ring_mul(a: &GroupRingElt, b: &GroupRingElt) -> GroupRingElt {
    let mut acc: BTreeMap<Word, i64> = BTreeMap::new();
    for (wa, ca) in a {
        for (wb, cb) in b {
            let mut w = wa.clone();
            w.extend_from_slice(wb);
            add_term(&mut acc, free_reduce(&w), ca * cb);
        }
    }
    collect(acc)
}

pub fn ring_add(a: &GroupRingElt, b: &GroupRingElt) -> GroupRingElt {
    let mut acc: BTreeMap<Word, i64> = BTreeMap::new();
    for (w, c) in a.iter().chain(b) {
        add_term(&mut acc, w.clone(), *c);
    }
    collect(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one() -> GroupRingElt {
        vec![(vec![], 1)]
    }

    #[test]
    fn fox_axioms() {
        // d(xy)/dx = 1, d(xy)/dy = x
        let xy = vec![1, 2];
        assert_eq!(fox_derivative(&xy, 1), one());
        assert_eq!(fox_derivative(&xy, 2), vec![(vec![1], 1)]);
        // d(x^-1)/dx = -x^-1
        assert_eq!(fox_derivative(&[-1], 1), vec![(vec![-1], -1)]);
    }

    #[test]
    fn fox_of_commutator() {
        // d(xyx^-1y^-1)/dx = 1 - xyx^-1
        let w = vec![1, 2, -1, -2];
        let d = fox_derivative(&w, 1);
        assert_eq!(d, vec![(vec![], 1), (vec![1, 2, -1], -1)]);
    }

    #[test]
    fn product_rule_on_random_words() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let mk = |rng: &mut rand_chacha::ChaCha8Rng| -> Word {
                (0..rng.gen_range(0..6))
                    .map(|_| {
                        let g = rng.gen_range(1..4i32);
                        if rng.gen_bool(0.5) {
                            g
                        } else {
                            -g
                        }
                    })
                    .collect()
            };
            let u = mk(&mut rng);
            let v = mk(&mut rng);
            let mut uv = u.clone();
            uv.extend_from_slice(&v);
            for g in 1..4u32 {
                let lhs = fox_derivative(&uv, g);
                let u_elt: GroupRingElt = vec![(free_reduce(&u), 1)];
                let rhs = ring_add(&fox_derivative(&u, g), &ring_mul(&u_elt, &fox_derivative(&v, g)));
                assert_eq!(lhs, rhs, "u={u:?} v={v:?} g={g}");
            }
        }
    }

    #[test]
    fn fundamental_identity() {
        // sum_x d(w)/dx * (x - 1) = w - 1 in the group ring.
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let w: Word = (0..rng.gen_range(1..8))
                .map(|_| {
                    let g = rng.gen_range(1..4i32);
                    if rng.gen_bool(0.5) {
                        g
                    } else {
                        -g
                    }
                })
                .collect();
            let mut acc: GroupRingElt = Vec::new();
            for g in 1..4i32 {
                let d = fox_derivative(&w, g as u32);
                let xm1: GroupRingElt = vec![(vec![g], 1), (Vec::new(), -1)];
                acc = ring_add(&acc, &ring_mul(&d, &xm1));
            }
            let expect: GroupRingElt = {
                let wr = free_reduce(&w);
                if wr.is_empty() {
                    Vec::new()
                } else {
                    vec![(Vec::new(), -1), (wr, 1)]
                }
            };
            assert_eq!(acc, expect, "w={w:?}");
        }
    }
}
