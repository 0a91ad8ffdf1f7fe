//! Sparse integer Smith normal form and supporting exact lattice routines.
//!
//! The elimination strategy: unimodular (+-1) pivots are taken first, chosen
//! by a lazily-maintained Markowitz score to limit fill-in; when no unit entry
//! remains the algorithm falls back to the smallest remaining entry and
//! classical Euclidean row/column reduction.  Collected pivots are repaired
//! into a divisibility chain at the end.  Elementary divisors are basis
//! invariants, so any pivot order yields the same result.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, HashSet};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

/// Column-major sparse integer matrix.
#[derive(Debug, Clone)]
pub struct SparseIntMatrix {
    pub rows: usize,
    pub cols: usize,
    /// One sorted (row, value) list per column; values nonzero.
    pub columns: Vec<Vec<(u32, BigInt)>>,
}

impl SparseIntMatrix {
    pub fn zero(rows: usize, cols: usize) -> Self {
        SparseIntMatrix { rows, cols, columns: vec![Vec::new(); cols] }
    }

    pub fn from_dense(m: &[Vec<BigInt>]) -> Self {
        let rows = m.len();
        let cols = if rows == 0 { 0 } else { m[0].len() };
        let mut columns = vec![Vec::new(); cols];
        for (r, row) in m.iter().enumerate() {
            for (c, v) in row.iter().enumerate() {
                if !v.is_zero() {
                    columns[c].push((r as u32, v.clone()));
                }
            }
        }
        SparseIntMatrix { rows, cols, columns }
    }

    pub fn from_dense_i64(m: &[Vec<i64>]) -> Self {
        let rows: Vec<Vec<BigInt>> =
            m.iter().map(|r| r.iter().map(|&v| BigInt::from(v)).collect()).collect();
        Self::from_dense(&rows)
    }

    pub fn push_column(&mut self, col: Vec<(u32, BigInt)>) {
        debug_assert!(col.windows(2).all(|w| w[0].0 < w[1].0));
        self.columns.push(col);
        self.cols += 1;
    }

    pub fn nnz(&self) -> usize {
        self.columns.iter().map(|c| c.len()).sum()
    }

    pub fn to_dense(&self) -> Vec<Vec<BigInt>> {
        let mut out = vec![vec![BigInt::zero(); self.cols]; self.rows];
        for (c, col) in self.columns.iter().enumerate() {
            for (r, v) in col {
                out[*r as usize][c] = v.clone();
            }
        }
        out
    }

    /// Permutes rows and columns; used by the permutation-invariance tests.
    pub fn permuted(&self, row_perm: &[usize], col_perm: &[usize]) -> Self {
        let mut out = SparseIntMatrix::zero(self.rows, self.cols);
        for (c, col) in self.columns.iter().enumerate() {
            let mut nc: Vec<(u32, BigInt)> =
                col.iter().map(|(r, v)| (row_perm[*r as usize] as u32, v.clone())).collect();
            nc.sort_by_key(|e| e.0);
            out.columns[col_perm[c]] = nc;
        }
        out
    }
}

/// Elementary divisors with bookkeeping.
#[derive(Debug, Clone, Serialize)]
pub struct SnfResult {
    /// d_1 | d_2 | ... | d_rank, all positive.
    pub divisors: Vec<BigInt>,
    pub rank: usize,
    pub rows: usize,
    pub cols: usize,
    /// (P, Q) with P * input * Q diagonal; only produced by the small dense
    /// path, `None` for the sparse engine.
    #[serde(skip)]
    pub transforms: Option<(Vec<Vec<BigInt>>, Vec<Vec<BigInt>>)>,
}

impl SnfResult {
    pub fn torsion_divisors(&self) -> Vec<BigInt> {
        self.divisors.iter().filter(|d| !d.is_one()).cloned().collect()
    }

    pub fn divisor_product(&self) -> BigInt {
        self.divisors.iter().product()
    }

    pub fn log_torsion(&self) -> f64 {
        self.divisors
            .iter()
            .filter(|d| !d.is_one())
            .map(|d| bigint_ln(d))
            .sum()
    }
}

pub fn bigint_ln(v: &BigInt) -> f64 {
    // ln via bit decomposition, exact enough for reporting.
    let bits = v.bits();
    if bits <= 52 {
        use num_traits::ToPrimitive;
        return v.to_f64().unwrap().abs().ln();
    }
    let shift = bits - 52;
    let top = v >> shift;
    use num_traits::ToPrimitive;
    top.to_f64().unwrap().abs().ln() + (shift as f64) * std::f64::consts::LN_2
}

/// Smith normal form of a sparse integer matrix.
pub fn smith_normal_form(m: &SparseIntMatrix) -> SnfResult {
    let mut engine = Elimination::new(m);
    let pivots = engine.run();
    let divisors = divisor_chain_fixup(pivots);
    SnfResult { rank: divisors.len(), divisors, rows: m.rows, cols: m.cols, transforms: None }
}

/// Repairs a pivot multiset into a divisibility chain: diag(a, b) is
/// equivalent to diag(gcd(a,b), lcm(a,b)).
pub fn divisor_chain_fixup(mut divs: Vec<BigInt>) -> Vec<BigInt> {
    for d in divs.iter_mut() {
        *d = d.abs();
    }
    divs.retain(|d| !d.is_zero());
    let n = divs.len();
    loop {
        let mut changed = false;
        for i in 0..n {
            for j in i + 1..n {
                if (&divs[j] % &divs[i]).is_zero() {
                    continue;
                }
                let g = divs[i].gcd(&divs[j]);
                let l = (&divs[i] / &g) * &divs[j];
                divs[i] = g;
                divs[j] = l;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    divs.sort();
    divs
}

/// Sparse elimination working state.
struct Elimination {
    /// col -> row -> value
    cols: Vec<HashMap<u32, BigInt>>,
    /// row -> set of cols with a nonzero entry
    rows: Vec<HashSet<u32>>,
    live_col: Vec<bool>,
    live_row: Vec<bool>,
    /// (score, row, col) candidates for unit pivots; lazily validated.
    unit_heap: BinaryHeap<Reverse<(u64, u32, u32)>>,
    pivots: Vec<BigInt>,
}

impl Elimination {
    fn new(m: &SparseIntMatrix) -> Self {
        let mut cols: Vec<HashMap<u32, BigInt>> = Vec::with_capacity(m.cols);
        let mut rows: Vec<HashSet<u32>> = vec![HashSet::new(); m.rows];
        for (c, col) in m.columns.iter().enumerate() {
            let mut map = HashMap::with_capacity(col.len());
            for (r, v) in col {
                map.insert(*r, v.clone());
                rows[*r as usize].insert(c as u32);
            }
            cols.push(map);
        }
        let mut e = Elimination {
            cols,
            rows,
            live_col: vec![true; m.cols],
            live_row: vec![true; m.rows],
            unit_heap: BinaryHeap::new(),
            pivots: Vec::new(),
        };
        for c in 0..m.cols {
            for (r, v) in e.cols[c].clone() {
                if v.is_one() || (-&v).is_one() {
                    e.push_unit_candidate(r, c as u32);
                }
            }
        }
        e
    }

    fn score(&self, r: u32, c: u32) -> u64 {
        let rn = self.rows[r as usize].len() as u64;
        let cn = self.cols[c as usize].len() as u64;
        rn.saturating_sub(1) * cn.saturating_sub(1)
    }

    fn push_unit_candidate(&mut self, r: u32, c: u32) {
        let s = self.score(r, c);
        self.unit_heap.push(Reverse((s, r, c)));
    }

    fn set_entry(&mut self, r: u32, c: u32, v: BigInt) {
        if v.is_zero() {
            if self.cols[c as usize].remove(&r).is_some() {
                self.rows[r as usize].remove(&c);
            }
            return;
        }
        if v.is_one() || (-&v).is_one() {
            self.push_unit_candidate(r, c);
        }
        if self.cols[c as usize].insert(r, v).is_none() {
            self.rows[r as usize].insert(c);
        }
    }

    /// col[dst] += k * col[src]
    fn col_axpy(&mut self, dst: u32, src: u32, k: &BigInt) {
        if k.is_zero() {
            return;
        }
        let src_entries: Vec<(u32, BigInt)> =
            self.cols[src as usize].iter().map(|(r, v)| (*r, v.clone())).collect();
        for (r, v) in src_entries {
            let add = &v * k;
            let cur = self.cols[dst as usize].get(&r).cloned().unwrap_or_else(BigInt::zero);
            self.set_entry(r, dst, cur + add);
        }
    }

    /// row[dst] += k * row[src]
    fn row_axpy(&mut self, dst: u32, src: u32, k: &BigInt) {
        if k.is_zero() {
            return;
        }
        let src_cols: Vec<u32> = self.rows[src as usize].iter().copied().collect();
        for c in src_cols {
            let v = self.cols[c as usize][&src].clone();
            let add = &v * k;
            let cur = self.cols[c as usize].get(&dst).cloned().unwrap_or_else(BigInt::zero);
            self.set_entry(dst, c, cur + add);
        }
    }

    fn remove_row_col(&mut self, r: u32, c: u32) {
        let col_rows: Vec<u32> = self.cols[c as usize].keys().copied().collect();
        for rr in col_rows {
            self.rows[rr as usize].remove(&c);
        }
        self.cols[c as usize].clear();
        let row_cols: Vec<u32> = self.rows[r as usize].iter().copied().collect();
        for cc in row_cols {
            self.cols[cc as usize].remove(&r);
        }
        self.rows[r as usize].clear();
        self.live_col[c as usize] = false;
        self.live_row[r as usize] = false;
    }

    fn pop_unit_pivot(&mut self) -> Option<(u32, u32)> {
        while let Some(Reverse((s, r, c))) = self.unit_heap.pop() {
            if !self.live_row[r as usize] || !self.live_col[c as usize] {
                continue;
            }
            match self.cols[c as usize].get(&r) {
                Some(v) if v.is_one() || (-v).is_one() => {
                    // Re-queue if the cached score got stale and much worse.
                    let cur = self.score(r, c);
                    if cur > s && cur > 4 * (s + 1) {
                        self.unit_heap.push(Reverse((cur, r, c)));
                        continue;
                    }
                    return Some((r, c));
                }
                _ => continue,
            }
        }
        None
    }

    fn smallest_entry(&self) -> Option<(u32, u32)> {
        let mut best: Option<(u64, u32, u32)> = None;
        for (c, col) in self.cols.iter().enumerate() {
            if !self.live_col[c] {
                continue;
            }
            for (r, v) in col {
                let key = v.bits();
                match best {
                    Some((bb, br, bc)) if (bb, br, bc) <= (key, *r, c as u32) => {}
                    _ => best = Some((key, *r, c as u32)),
                }
            }
        }
        best.map(|(_, r, c)| (r, c))
    }

    /// Eliminates at a pivot whose value is +-1: sweep its row with column
    /// operations, then its column with row operations (which by then only
    /// touch the pivot column), then retire both lines.
    fn eliminate_unit(&mut self, r: u32, c: u32) {
        let piv = self.cols[c as usize][&r].clone();
        let row_cols: Vec<u32> =
            self.rows[r as usize].iter().copied().filter(|&cc| cc != c).collect();
        for cc in row_cols {
            let v = self.cols[cc as usize][&r].clone();
            let k = -(&v / &piv);
            self.col_axpy(cc, c, &k);
        }
        self.pivots.push(piv.abs());
        self.remove_row_col(r, c);
    }

    /// General pivot: Euclidean reduction until the pivot divides its row and
    /// column, then sweep and retire.
    fn eliminate_general(&mut self, mut r: u32, mut c: u32) {
        'outer: loop {
            let piv = self.cols[c as usize][&r].clone();
            if piv.is_one() || (-&piv).is_one() {
                self.eliminate_unit(r, c);
                return;
            }
            // Reduce the pivot row.
            let row_cols: Vec<u32> =
                self.rows[r as usize].iter().copied().filter(|&cc| cc != c).collect();
            for cc in row_cols {
                let v = self.cols[cc as usize][&r].clone();
                let (q, rem) = v.div_rem(&piv);
                self.col_axpy(cc, c, &-q);
                if !rem.is_zero() {
                    // Strictly smaller remainder becomes the new pivot.
                    c = cc;
                    continue 'outer;
                }
            }
            // Reduce the pivot column.
            let col_rows: Vec<u32> =
                self.cols[c as usize].keys().copied().filter(|&rr| rr != r).collect();
            for rr in col_rows {
                let v = self.cols[c as usize][&rr].clone();
                let (q, rem) = v.div_rem(&piv);
                self.row_axpy(rr, r, &-q);
                if !rem.is_zero() {
                    r = rr;
                    continue 'outer;
                }
            }
            // Pivot divides its whole row and column: row is cleared by the
            // divisions above only when quotients were exact, so sweep again.
            let row_cols: Vec<u32> =
                self.rows[r as usize].iter().copied().filter(|&cc| cc != c).collect();
            if !row_cols.is_empty() {
                continue 'outer;
            }
            let col_rows: Vec<u32> =
                self.cols[c as usize].keys().copied().filter(|&rr| rr != r).collect();
            if !col_rows.is_empty() {
                continue 'outer;
            }
            self.pivots.push(piv.abs());
            self.remove_row_col(r, c);
            return;
        }
    }

    fn run(&mut self) -> Vec<BigInt> {
        loop {
            if let Some((r, c)) = self.pop_unit_pivot() {
                self.eliminate_unit(r, c);
            } else if let Some((r, c)) = self.smallest_entry() {
                self.eliminate_general(r, c);
            } else {
                break;
            }
        }
        std::mem::take(&mut self.pivots)
    }
}

/// Dense Smith normal form with unimodular transforms, for small matrices.
/// Returns (P, D, Q) with P * M * Q = D.
pub fn smith_with_transforms(
    m: &[Vec<BigInt>],
) -> (Vec<Vec<BigInt>>, Vec<Vec<BigInt>>, Vec<Vec<BigInt>>) {
    let rows = m.len();
    let cols = if rows == 0 { 0 } else { m[0].len() };
    let mut a: Vec<Vec<BigInt>> = m.to_vec();
    let mut p = identity(rows);
    let mut q = identity(cols);
    let n = rows.min(cols);
    for k in 0..n {
        loop {
            // Find the smallest nonzero entry in the trailing block.
            let mut piv: Option<(usize, usize)> = None;
            for r in k..rows {
                for c in k..cols {
                    if !a[r][c].is_zero()
                        && piv.map_or(true, |(pr, pc)| {
                            a[r][c].abs() < a[pr][pc].abs()
                        })
                    {
                        piv = Some((r, c));
                    }
                }
            }
            let Some((pr, pc)) = piv else { return (p, a, q) };
            a.swap(k, pr);
            p.swap(k, pr);
            swap_cols(&mut a, k, pc);
            swap_cols(&mut q, k, pc);
            let mut dirty = false;
            for r in k + 1..rows {
                if a[r][k].is_zero() {
                    continue;
                }
                let qt = div_round(&a[r][k], &a[k][k]);
                if !qt.is_zero() {
                    for c in 0..cols {
                        let sub = &qt * &a[k][c];
                        a[r][c] -= sub;
                    }
                    for c in 0..rows {
                        let sub = &qt * &p[k][c];
                        p[r][c] -= sub;
                    }
                }
                if !a[r][k].is_zero() {
                    dirty = true;
                }
            }
            for c in k + 1..cols {
                if a[k][c].is_zero() {
                    continue;
                }
                let qt = div_round(&a[k][c], &a[k][k]);
                if !qt.is_zero() {
                    for r in 0..rows {
                        let sub = &qt * &a[r][k];
                        a[r][c] -= sub;
                        let sub = &qt * &q[r][k];
                        q[r][c] -= sub;
                    }
                }
                if !a[k][c].is_zero() {
                    dirty = true;
                }
            }
            if dirty {
                continue;
            }
            // Enforce divisibility into the trailing block.
            let mut fixed = true;
            'scan: for r in k + 1..rows {
                for c in k + 1..cols {
                    if !(&a[r][c] % &a[k][k]).is_zero() {
                        // Add row r to row k and restart this pivot.
                        for cc in 0..cols {
                            let add = a[r][cc].clone();
                            a[k][cc] += add;
                        }
                        for cc in 0..rows {
                            let add = p[r][cc].clone();
                            p[k][cc] += add;
                        }
                        fixed = false;
                        break 'scan;
                    }
                }
            }
            if fixed {
                if a[k][k].is_negative() {
                    for c in 0..cols {
                        a[k][c] = -a[k][c].clone();
                    }
                    for c in 0..rows {
                        p[k][c] = -p[k][c].clone();
                    }
                }
                break;
            }
        }
    }
    (p, a, q)
}

fn identity(n: usize) -> Vec<Vec<BigInt>> {
    let mut m = vec![vec![BigInt::zero(); n]; n];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = BigInt::one();
    }
    m
}

fn swap_cols(m: &mut [Vec<BigInt>], i: usize, j: usize) {
    if i != j {
        for row in m.iter_mut() {
            row.swap(i, j);
        }
    }
}

fn div_round(a: &BigInt, b: &BigInt) -> BigInt {
    // Round-to-nearest quotient keeps remainders small.
    let (q, r) = a.div_rem(b);
    if &r.abs() * 2 > b.abs() {
        if (r.is_negative()) == (b.is_negative()) {
            q + 1
        } else {
            q - 1
        }
    } else {
        q
    }
}

/// Incremental column-staircase basis of the lattice spanned by a stream of
/// integer columns.  Leads stay distinct, so rank and a basis are available
/// at any point without re-elimination.
#[derive(Debug, Clone)]
pub struct LatticeAccumulator {
    pub dim: usize,
    /// lead row -> column (sorted by row, lead first).
    cols: std::collections::BTreeMap<u32, Vec<(u32, BigInt)>>,
}

impl LatticeAccumulator {
    pub fn new(dim: usize) -> Self {
        LatticeAccumulator { dim, cols: Default::default() }
    }

    pub fn rank(&self) -> usize {
        self.cols.len()
    }

    /// Adds a column; returns true when the rank grew.
    pub fn add_column(&mut self, mut v: Vec<(u32, BigInt)>) -> bool {
        normalize_col(&mut v);
        loop {
            let Some(&(lead, ref lv)) = v.first() else { return false };
            let lv = lv.clone();
            match self.cols.get(&lead) {
                None => {
                    if lv.is_negative() {
                        for (_, x) in v.iter_mut() {
                            *x = -std::mem::take(x);
                        }
                    }
                    self.cols.insert(lead, v);
                    return true;
                }
                Some(c) => {
                    let cv = c[0].1.clone();
                    let (q, rem) = lv.div_rem(&cv);
                    if rem.is_zero() {
                        v = col_axpy(&v, c, &-q);
                    } else {
                        let e = cv.extended_gcd(&lv);
                        // New basis column with lead gcd.
                        let nc = col_combine(c, &e.x, &v, &e.y);
                        // Remainder with lead zero.
                        let nv = col_combine(&v, &(&cv / &e.gcd), c, &-(&lv / &e.gcd));
                        self.cols.insert(lead, nc);
                        v = nv;
                    }
                }
            }
        }
    }

    pub fn basis_matrix(&self) -> SparseIntMatrix {
        let mut m = SparseIntMatrix::zero(self.dim, 0);
        for col in self.cols.values() {
            m.push_column(col.clone());
        }
        m
    }
}

fn normalize_col(v: &mut Vec<(u32, BigInt)>) {
    v.retain(|(_, x)| !x.is_zero());
    v.sort_by_key(|e| e.0);
}

/// a + k*b for sparse columns.
pub fn col_axpy(a: &[(u32, BigInt)], b: &[(u32, BigInt)], k: &BigInt) -> Vec<(u32, BigInt)> {
    col_combine(a, &BigInt::one(), b, k)
}

/// s*a + t*b for sparse columns.
pub fn col_combine(
    a: &[(u32, BigInt)],
    s: &BigInt,
    b: &[(u32, BigInt)],
    t: &BigInt,
) -> Vec<(u32, BigInt)> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        if j >= b.len() || (i < a.len() && a[i].0 < b[j].0) {
            let v = &a[i].1 * s;
            if !v.is_zero() {
                out.push((a[i].0, v));
            }
            i += 1;
        } else if i >= a.len() || b[j].0 < a[i].0 {
            let v = &b[j].1 * t;
            if !v.is_zero() {
                out.push((b[j].0, v));
            }
            j += 1;
        } else {
            let v = &a[i].1 * s + &b[j].1 * t;
            if !v.is_zero() {
                out.push((a[i].0, v));
            }
            i += 1;
            j += 1;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn snf_of_dense(d: &[Vec<i64>]) -> Vec<i64> {
        use num_traits::ToPrimitive;
        let m = SparseIntMatrix::from_dense_i64(d);
        smith_normal_form(&m).divisors.iter().map(|v| v.to_i64().unwrap()).collect()
    }

    #[test]
    fn fixed_cases() {
        assert_eq!(snf_of_dense(&[vec![2, 0], vec![0, 3]]), vec![1, 6]);
        assert_eq!(snf_of_dense(&[vec![1, 0], vec![0, 1]]), vec![1, 1]);
        assert_eq!(snf_of_dense(&[vec![2, 4], vec![4, 8]]), vec![2]);
        let id5: Vec<Vec<i64>> = (0..5).map(|i| (0..5).map(|j| i64::from(i == j)).collect()).collect();
        assert_eq!(snf_of_dense(&id5), vec![1; 5]);
        assert_eq!(
            snf_of_dense(&[vec![-6, 111, -36, 6], vec![5, -672, 210, 74], vec![0, -255, 81, 24], vec![-7, 255, -81, -10]]),
            vec![1, 3, 21]
        );
    }

    /// gcd of k x k minors, the independent oracle for elementary divisors.
    fn minor_gcds(m: &[Vec<i64>]) -> Vec<BigInt> {
        let rows = m.len();
        let cols = m[0].len();
        let n = rows.min(cols);
        let mut out = Vec::new();
        for k in 1..=n {
            let mut g = BigInt::zero();
            for rsel in combinations(rows, k) {
                for csel in combinations(cols, k) {
                    let sub: Vec<Vec<BigInt>> = rsel
                        .iter()
                        .map(|&r| csel.iter().map(|&c| BigInt::from(m[r][c])).collect())
                        .collect();
                    g = g.gcd(&det(&sub));
                }
            }
            out.push(g);
        }
        out
    }

    fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        let mut cur = Vec::new();
        fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            if cur.len() == k {
                out.push(cur.clone());
                return;
            }
            for i in start..n {
                cur.push(i);
                rec(i + 1, n, k, cur, out);
                cur.pop();
            }
        }
        rec(0, n, k, &mut cur, &mut out);
        out
    }

    fn det(m: &[Vec<BigInt>]) -> BigInt {
        let n = m.len();
        if n == 1 {
            return m[0][0].clone();
        }
        let mut acc = BigInt::zero();
        for c in 0..n {
            if m[0][c].is_zero() {
                continue;
            }
            let minor: Vec<Vec<BigInt>> = (1..n)
                .map(|r| (0..n).filter(|&cc| cc != c).map(|cc| m[r][cc].clone()).collect())
                .collect();
            let term = &m[0][c] * det(&minor);
            if c % 2 == 0 {
                acc += term;
            } else {
                acc -= term;
            }
        }
        acc
    }

    fn check_against_minors(m: &[Vec<i64>]) {
        let divs = snf_of_dense(m);
        let gcds = minor_gcds(m);
        // divisors: d_k = gcd_k / gcd_{k-1}
        let mut expect = Vec::new();
        let mut prev = BigInt::one();
        for g in gcds {
            if g.is_zero() {
                break;
            }
            expect.push((&g / &prev).clone());
            prev = g;
        }
        use num_traits::ToPrimitive;
        let expect: Vec<i64> = expect.iter().map(|v| v.to_i64().unwrap()).collect();
        assert_eq!(divs, expect, "matrix {m:?}");
    }

    #[test]
    fn oracle_small_fixed() {
        check_against_minors(&[vec![2, 4, 4], vec![-6, 6, 12], vec![10, 4, 16]]);
        check_against_minors(&[vec![0, 0], vec![0, 0]]);
        check_against_minors(&[vec![5]]);
        check_against_minors(&[vec![12, 8], vec![8, 12]]);
    }

    #[test]
    fn transforms_diagonalize() {
        let m: Vec<Vec<BigInt>> = vec![
            vec![BigInt::from(2), BigInt::from(4), BigInt::from(4)],
            vec![BigInt::from(-6), BigInt::from(6), BigInt::from(12)],
            vec![BigInt::from(10), BigInt::from(4), BigInt::from(16)],
        ];
        let (p, d, q) = smith_with_transforms(&m);
        // P*M*Q == D
        let pm = mat_mul(&p, &m);
        let pmq = mat_mul(&pm, &q);
        assert_eq!(pmq, d);
        assert_eq!(det(&p).abs(), BigInt::one());
        assert_eq!(det(&q).abs(), BigInt::one());
    }

    fn mat_mul(a: &[Vec<BigInt>], b: &[Vec<BigInt>]) -> Vec<Vec<BigInt>> {
        let n = a.len();
        let k = b.len();
        let m = b[0].len();
        let mut out = vec![vec![BigInt::zero(); m]; n];
        for i in 0..n {
            for j in 0..m {
                let mut acc = BigInt::zero();
                for l in 0..k {
                    acc += &a[i][l] * &b[l][j];
                }
                out[i][j] = acc;
            }
        }
        out
    }

    #[test]
    fn accumulator_matches_direct_snf() {
        let cols: Vec<Vec<i64>> = vec![
            vec![2, 0, 4, 6],
            vec![0, 3, 3, 0],
            vec![2, 3, 7, 6],
            vec![4, 0, 8, 12],
            vec![1, 1, 1, 1],
        ];
        let mut acc = LatticeAccumulator::new(4);
        for c in &cols {
            let sc: Vec<(u32, BigInt)> = c
                .iter()
                .enumerate()
                .filter(|(_, v)| **v != 0)
                .map(|(i, v)| (i as u32, BigInt::from(*v)))
                .collect();
            acc.add_column(sc);
        }
        let dense: Vec<Vec<i64>> =
            (0..4).map(|r| cols.iter().map(|c| c[r]).collect()).collect();
        let direct = snf_of_dense(&dense);
        let via_basis = smith_normal_form(&acc.basis_matrix());
        use num_traits::ToPrimitive;
        let vb: Vec<i64> = via_basis.divisors.iter().map(|v| v.to_i64().unwrap()).collect();
        assert_eq!(direct, vb);
        assert_eq!(acc.rank(), direct.len());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(60))]

        #[test]
        fn oracle_random(rows in 1usize..5, cols in 1usize..5,
                         seed in proptest::collection::vec(-20i64..=20, 16)) {
            let m: Vec<Vec<i64>> = (0..rows)
                .map(|r| (0..cols).map(|c| seed[(r * cols + c) % seed.len()]).collect())
                .collect();
            check_against_minors(&m);
        }

        #[test]
        fn permutation_invariance(rows in 2usize..6, cols in 2usize..6,
                                  seed in proptest::collection::vec(-9i64..=9, 36),
                                  rp in 0usize..24, cp in 0usize..24) {
            let m: Vec<Vec<i64>> = (0..rows)
                .map(|r| (0..cols).map(|c| seed[(r * cols + c) % seed.len()]).collect())
                .collect();
            let sm = SparseIntMatrix::from_dense_i64(&m);
            let row_perm = nth_permutation(rows, rp);
            let col_perm = nth_permutation(cols, cp);
            let permuted = sm.permuted(&row_perm, &col_perm);
            prop_assert_eq!(smith_normal_form(&sm).divisors, smith_normal_form(&permuted).divisors);
        }

        #[test]
        fn divisor_chain_holds(rows in 1usize..6, cols in 1usize..6,
                               seed in proptest::collection::vec(-30i64..=30, 36)) {
            let m: Vec<Vec<i64>> = (0..rows)
                .map(|r| (0..cols).map(|c| seed[(r * cols + c) % seed.len()]).collect())
                .collect();
            let res = smith_normal_form(&SparseIntMatrix::from_dense_i64(&m));
            for w in res.divisors.windows(2) {
                prop_assert!((&w[1] % &w[0]).is_zero(), "chain broken: {:?}", res.divisors);
            }
        }
    }

    fn nth_permutation(n: usize, mut k: usize) -> Vec<usize> {
        let mut items: Vec<usize> = (0..n).collect();
        let mut out = Vec::new();
        let mut fact: usize = (1..=n).product();
        for i in (1..=n).rev() {
            fact /= i;
            let idx = (k / fact) % items.len();
            k %= fact;
            out.push(items.remove(idx));
        }
        out
    }
}
