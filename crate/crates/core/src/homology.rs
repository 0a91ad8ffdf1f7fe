//! Exact H_0 and H_1 of congruence subgroups with coefficients in the
//! symmetric-power lattices L(m), L*(m) and L(m) + L*(m).
//!
//! The chain complex is the presentation complex of the subgroup: with
//! generators x_j and relators r_k, the boundary maps evaluated through the
//! lattice action are
//!     d1 = [rho(x_1^-1) - I | ... | rho(x_g^-1) - I]
//!     d2 block (j, k) = rho applied to the inverted Fox derivative of r_k
//! so that d1 * d2 = 0 holds exactly (the antipode of the Fox fundamental
//! identity).  Torsion of H_1 is the torsion of coker(d2); the free rank is
//! g*n - rank(d1) - rank(d2).

use std::collections::HashMap;
use std::time::Instant;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::congruence::{
    cusp_data, torsion_free_check, CuspDatum, MatrixModA, SubgroupKind, TorsionFreeness,
};
use crate::error::{Error, Result};
use crate::mat2::Mat2;
use crate::quadfield::{FieldDescriptor, RingElement};
use crate::schreier::SubgroupPresentation;
use crate::snf::{
    bigint_ln, divisor_chain_fixup, smith_normal_form, LatticeAccumulator, SparseIntMatrix,
};
use crate::symreps::{imat_identity, imat_mul, imat_transpose, IMat};
use crate::words::{Letter, Word};

pub use crate::fox::{fox_boundaries, fox_derivative, FoxMatrix, GroupRingElt};
pub use crate::snf::SnfResult;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CoefficientTag {
    /// L(m): the monomial lattice and its w-multiples.
    L,
    /// L*(m): the dual lattice with the contragredient action.
    Ldual,
    /// L(m) + L*(m) as a direct sum.
    Lbar,
    /// The rank-one trivial lattice (cross-checks against abelianization).
    Trivial,
}

impl CoefficientTag {
    pub fn parse(s: &str) -> Result<CoefficientTag> {
        match s {
            "L" => Ok(CoefficientTag::L),
            "Ldual" => Ok(CoefficientTag::Ldual),
            "Lbar" => Ok(CoefficientTag::Lbar),
            "trivial" | "Z" => Ok(CoefficientTag::Trivial),
            _ => Err(Error::Parse(format!("unknown coefficient tag {s}"))),
        }
    }

    pub fn label(&self, m: u32) -> String {
        match self {
            CoefficientTag::L => format!("L({m})"),
            CoefficientTag::Ldual => format!("L*({m})"),
            CoefficientTag::Lbar => format!("Lbar({m})"),
            CoefficientTag::Trivial => "Z".to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct HomologyOptions {
    /// Refuse evaluated matrices wider than this many columns.
    pub column_cap: usize,
    /// Cap on expanded peripheral words.
    pub max_expanded_length: usize,
}

impl Default for HomologyOptions {
    fn default() -> Self {
        HomologyOptions { column_cap: 20_000, max_expanded_length: 20_000_000 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct HomologyReport {
    pub q: u8,
    pub coefficients: String,
    pub m: u32,
    pub subgroup: String,
    pub free_rank: usize,
    /// Nontrivial elementary divisors of the torsion part.
    pub torsion_divisors: Vec<BigInt>,
    pub log_torsion: f64,
    pub rank_d1: usize,
    pub rank_d2: usize,
    pub matrix_rows: usize,
    pub matrix_cols: usize,
    pub generators: usize,
    pub relators: usize,
    pub certified_torsion_free: bool,
    pub elapsed_ms: u128,
}

impl HomologyReport {
    pub fn torsion_order(&self) -> BigInt {
        self.torsion_divisors.iter().product()
    }
}

/// Per-generator action matrices for one coefficient system.
pub struct RhoTables {
    pub n: usize,
    pub plus: Vec<IMat>,
    pub minus: Vec<IMat>,
}

/// Builds the action tables for the given tag (Lbar handled blockwise by the
/// caller; `lbar_direct` builds it literally for cross-checks).
pub fn coefficient_tables(
    gens: &[Mat2],
    tag: CoefficientTag,
    m: u32,
    field: &FieldDescriptor,
) -> Result<RhoTables> {
    match tag {
        CoefficientTag::Trivial => Ok(RhoTables {
            n: 1,
            plus: vec![imat_identity(1); gens.len()],
            minus: vec![imat_identity(1); gens.len()],
        }),
        CoefficientTag::L => {
            let mut plus = Vec::with_capacity(gens.len());
            let mut minus = Vec::with_capacity(gens.len());
            for g in gens {
                plus.push(crate::symreps::rho_integral(g, m, field)?);
                minus.push(crate::symreps::rho_integral(&g.inverse_unimodular(), m, field)?);
            }
            let n = 2 * (2 * m as usize + 1);
            Ok(RhoTables { n, plus, minus })
        }
        CoefficientTag::Ldual => {
            let mut plus = Vec::with_capacity(gens.len());
            let mut minus = Vec::with_capacity(gens.len());
            for g in gens {
                // Contragredient: rho*(g) = rho(g^-1)^T, rho*(g^-1) = rho(g)^T.
                let rg = crate::symreps::rho_integral(g, m, field)?;
                let rginv = crate::symreps::rho_integral(&g.inverse_unimodular(), m, field)?;
                plus.push(imat_transpose(&rginv));
                minus.push(imat_transpose(&rg));
            }
            let n = 2 * (2 * m as usize + 1);
            Ok(RhoTables { n, plus, minus })
        }
        CoefficientTag::Lbar => {
            let l = coefficient_tables(gens, CoefficientTag::L, m, field)?;
            let ld = coefficient_tables(gens, CoefficientTag::Ldual, m, field)?;
            let n = l.n * 2;
            let block = |a: &IMat, b: &IMat| -> IMat {
                let mut out = vec![vec![BigInt::zero(); n]; n];
                for r in 0..l.n {
                    for c in 0..l.n {
                        out[r][c] = a[r][c].clone();
                        out[l.n + r][l.n + c] = b[r][c].clone();
                    }
                }
                out
            };
            let plus: Vec<IMat> =
                l.plus.iter().zip(&ld.plus).map(|(a, b)| block(a, b)).collect();
            let minus: Vec<IMat> =
                l.minus.iter().zip(&ld.minus).map(|(a, b)| block(a, b)).collect();
            Ok(RhoTables { n, plus, minus })
        }
    }
}

/// d1 as dense blocks rho(x_j^-1) - I.
fn d1_blocks(tables: &RhoTables) -> Vec<IMat> {
    let n = tables.n;
    tables
        .minus
        .iter()
        .map(|m| {
            let mut b = m.clone();
            for (i, row) in b.iter_mut().enumerate() {
                row[i] -= 1;
            }
            let _ = n;
            b
        })
        .collect()
}

fn d1_sparse(blocks: &[IMat], n: usize) -> SparseIntMatrix {
    let g = blocks.len();
    let mut m = SparseIntMatrix::zero(n, g * n);
    for (j, b) in blocks.iter().enumerate() {
        for c in 0..n {
            let mut col = Vec::new();
            for r in 0..n {
                if !b[r][c].is_zero() {
                    col.push((r as u32, b[r][c].clone()));
                }
            }
            m.columns[j * n + c] = col;
        }
    }
    m
}

/// The d2 strip of one relator: block j = rho of the inverted Fox derivative
/// d(r)/d(x_j), accumulated through inverse prefixes.
fn relator_strip(r: &[Letter], tables: &RhoTables) -> HashMap<usize, IMat> {
    let n = tables.n;
    let mut blocks: HashMap<usize, IMat> = HashMap::new();
    let mut q = imat_identity(n);
    for &l in r {
        let gi = (l.unsigned_abs() - 1) as usize;
        if l > 0 {
            let b = blocks.entry(gi).or_insert_with(|| vec![vec![BigInt::zero(); n]; n]);
            for (br, qr) in b.iter_mut().zip(&q) {
                for (bv, qv) in br.iter_mut().zip(qr) {
                    *bv += qv;
                }
            }
            q = imat_mul(&tables.minus[gi], &q);
        } else {
            q = imat_mul(&tables.plus[gi], &q);
            let b = blocks.entry(gi).or_insert_with(|| vec![vec![BigInt::zero(); n]; n]);
            for (br, qr) in b.iter_mut().zip(&q) {
                for (bv, qv) in br.iter_mut().zip(qr) {
                    *bv -= qv;
                }
            }
        }
    }
    blocks
}

/// Exact zero check of d1 * strip.
fn composite_vanishes(strip: &HashMap<usize, IMat>, d1: &[IMat], n: usize) -> bool {
    let mut acc = vec![vec![BigInt::zero(); n]; n];
    for (j, b) in strip {
        let prod = imat_mul(&d1[*j], b);
        for (ar, pr) in acc.iter_mut().zip(&prod) {
            for (av, pv) in ar.iter_mut().zip(pr) {
                *av += pv;
            }
        }
    }
    acc.iter().all(|row| row.iter().all(|v| v.is_zero()))
}

struct ComplexRun {
    rank_d1: usize,
    rank_d2: usize,
    width: usize,
    strips: usize,
    torsion: Vec<BigInt>,
    accumulator: LatticeAccumulator,
    d1_blocks: Vec<IMat>,
}

fn run_complex(
    sub: &SubgroupPresentation,
    tables: &RhoTables,
    opts: &HomologyOptions,
) -> Result<ComplexRun> {
    let n = tables.n;
    let g = sub.gen_matrices.len();
    let width = g * n;
    if width > opts.column_cap {
        return Err(Error::SizeCap { width, cap: opts.column_cap });
    }
    let d1b = d1_blocks(tables);
    let d1 = d1_sparse(&d1b, n);
    let rank_d1 = smith_normal_form(&d1).rank;

    let mut acc = LatticeAccumulator::new(width);
    for r in &sub.relators {
        let strip = relator_strip(r, tables);
        if !composite_vanishes(&strip, &d1b, n) {
            return Err(Error::CompositeNonzero);
        }
        for c in 0..n {
            let mut col: Vec<(u32, BigInt)> = Vec::new();
            let mut keys: Vec<&usize> = strip.keys().collect();
            keys.sort();
            for j in keys {
                let b = &strip[j];
                for (r_in, row) in b.iter().enumerate() {
                    if !row[c].is_zero() {
                        col.push(((j * n + r_in) as u32, row[c].clone()));
                    }
                }
            }
            acc.add_column(col);
        }
    }
    let rank_d2 = acc.rank();
    let snf = smith_normal_form(&acc.basis_matrix());
    Ok(ComplexRun {
        rank_d1,
        rank_d2,
        width,
        strips: sub.relators.len(),
        torsion: snf.torsion_divisors(),
        accumulator: acc,
        d1_blocks: d1b,
    })
}

/// H_1 of the subgroup with the given coefficients.
pub fn homology_h1(
    sub: &SubgroupPresentation,
    tag: CoefficientTag,
    m: u32,
    opts: &HomologyOptions,
) -> Result<HomologyReport> {
    let start = Instant::now();
    if tag == CoefficientTag::Lbar {
        let a = homology_h1(sub, CoefficientTag::L, m, opts)?;
        let b = homology_h1(sub, CoefficientTag::Ldual, m, opts)?;
        let mut divisors = a.torsion_divisors.clone();
        divisors.extend(b.torsion_divisors.clone());
        let divisors = divisor_chain_fixup(divisors);
        let log_torsion = divisors.iter().map(bigint_ln).sum();
        return Ok(HomologyReport {
            q: 1,
            coefficients: tag.label(m),
            m,
            subgroup: sub.spec.label(),
            free_rank: a.free_rank + b.free_rank,
            torsion_divisors: divisors.into_iter().filter(|d| !d.is_one()).collect(),
            log_torsion,
            rank_d1: a.rank_d1 + b.rank_d1,
            rank_d2: a.rank_d2 + b.rank_d2,
            matrix_rows: a.matrix_rows + b.matrix_rows,
            matrix_cols: a.matrix_cols + b.matrix_cols,
            generators: sub.gen_matrices.len(),
            relators: sub.relators.len(),
            certified_torsion_free: a.certified_torsion_free,
            elapsed_ms: start.elapsed().as_millis(),
        });
    }
    if tag != CoefficientTag::Trivial && m < 1 {
        return Err(Error::WeightBelowOne(m));
    }
    let tables = coefficient_tables(&sub.gen_matrices, tag, m, &sub.parent.field)?;
    let run = run_complex(sub, &tables, opts)?;
    let free_rank = run.width - run.rank_d1 - run.rank_d2;
    let certified =
        torsion_free_check(&sub.spec)? == TorsionFreeness::CertifiedTorsionFree;
    Ok(HomologyReport {
        q: 1,
        coefficients: tag.label(m),
        m,
        subgroup: sub.spec.label(),
        free_rank,
        log_torsion: run.torsion.iter().map(bigint_ln).sum(),
        torsion_divisors: run.torsion,
        rank_d1: run.rank_d1,
        rank_d2: run.rank_d2,
        matrix_rows: run.width,
        matrix_cols: run.strips * tables.n,
        generators: sub.gen_matrices.len(),
        relators: sub.relators.len(),
        certified_torsion_free: certified,
        elapsed_ms: start.elapsed().as_millis(),
    })
}

/// H_0 (coinvariants) of the subgroup: the cokernel of the stacked
/// rho(x_j) - I blocks.  For m >= 1 the free rank must vanish.
pub fn homology_h0(
    sub: &SubgroupPresentation,
    tag: CoefficientTag,
    m: u32,
    opts: &HomologyOptions,
) -> Result<HomologyReport> {
    let start = Instant::now();
    if tag == CoefficientTag::Lbar {
        let a = homology_h0(sub, CoefficientTag::L, m, opts)?;
        let b = homology_h0(sub, CoefficientTag::Ldual, m, opts)?;
        let mut divisors = a.torsion_divisors.clone();
        divisors.extend(b.torsion_divisors.clone());
        let divisors = divisor_chain_fixup(divisors);
        let log_torsion = divisors.iter().map(bigint_ln).sum();
        return Ok(HomologyReport {
            q: 0,
            coefficients: tag.label(m),
            m,
            subgroup: sub.spec.label(),
            free_rank: a.free_rank + b.free_rank,
            torsion_divisors: divisors.into_iter().filter(|d| !d.is_one()).collect(),
            log_torsion,
            rank_d1: a.rank_d1 + b.rank_d1,
            rank_d2: 0,
            matrix_rows: a.matrix_rows + b.matrix_rows,
            matrix_cols: a.matrix_cols + b.matrix_cols,
            generators: sub.gen_matrices.len(),
            relators: sub.relators.len(),
            certified_torsion_free: a.certified_torsion_free,
            elapsed_ms: start.elapsed().as_millis(),
        });
    }
    if tag != CoefficientTag::Trivial && m < 1 {
        return Err(Error::WeightBelowOne(m));
    }
    let tables = coefficient_tables(&sub.gen_matrices, tag, m, &sub.parent.field)?;
    let n = tables.n;
    let g = sub.gen_matrices.len();
    if g * n > opts.column_cap {
        return Err(Error::SizeCap { width: g * n, cap: opts.column_cap });
    }
    // Stacked rho(x_j) - I, n rows by g*n columns.
    let mut msp = SparseIntMatrix::zero(n, g * n);
    for (j, p) in tables.plus.iter().enumerate() {
        for c in 0..n {
            let mut col = Vec::new();
            for r in 0..n {
                let v = if r == c { &p[r][c] - BigInt::one() } else { p[r][c].clone() };
                if !v.is_zero() {
                    col.push((r as u32, v));
                }
            }
            msp.columns[j * n + c] = col;
        }
    }
    let snf = smith_normal_form(&msp);
    let free_rank = n - snf.rank;
    if tag != CoefficientTag::Trivial && free_rank != 0 {
        return Err(Error::NonzeroInvariants(free_rank));
    }
    let certified =
        torsion_free_check(&sub.spec)? == TorsionFreeness::CertifiedTorsionFree;
    Ok(HomologyReport {
        q: 0,
        coefficients: tag.label(m),
        m,
        subgroup: sub.spec.label(),
        free_rank,
        log_torsion: snf.log_torsion(),
        torsion_divisors: snf.torsion_divisors(),
        rank_d1: snf.rank,
        rank_d2: 0,
        matrix_rows: n,
        matrix_cols: g * n,
        generators: sub.gen_matrices.len(),
        relators: sub.relators.len(),
        certified_torsion_free: certified,
        elapsed_ms: start.elapsed().as_millis(),
    })
}

/// One cusp of the subgroup: the orbit of a Gamma(D)-cusp under the image
/// subgroup, with its peripheral translation lattice and chosen short cycle.
#[derive(Debug, Clone, Serialize)]
pub struct SubgroupCusp {
    pub base_cusp: usize,
    pub coset: u32,
    /// The chosen cycle as coordinates in the peripheral lattice basis.
    pub theta: (i64, i64),
    pub theta_norm: BigInt,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundaryIndexReport {
    pub subgroup: String,
    pub m: u32,
    pub kappa: usize,
    pub cusps: Vec<SubgroupCusp>,
    /// [H_1_free : peripheral classes].
    pub index: BigInt,
    /// |H_1(Gamma; L*(m))_tors|.
    pub dual_torsion: BigInt,
    pub inequality_holds: bool,
    /// Rank of the peripheral classes modulo the boundary image.
    pub peripheral_rank: usize,
    pub expected_rank: usize,
    pub full_rank: bool,
    pub elapsed_ms: u128,
}

/// Peripheral translation sublattice at a subgroup cusp: pairs (x, y) such
/// that the conjugated translation by x*t1 + y*t2 reduces into the image
/// subgroup.  Returns a 2x2 column basis ((a, 0), (b, d)) in (x, y) space.
fn peripheral_sublattice(
    sub: &SubgroupPresentation,
    cusp: &CuspDatum,
    gamma: &Mat2,
) -> Result<(BigInt, BigInt, BigInt)> {
    let field = &sub.parent.field;
    let q = &sub.quotient;
    let modulus = sub
        .spec
        .level
        .norm()
        .to_i64()
        .ok_or_else(|| Error::Parse("level norm too large for cusp enumeration".into()))?;
    let gamma_inv = gamma.inverse_unimodular();
    let identity = MatrixModA::identity(q);
    let in_subgroup = |x: i64, y: i64| -> Result<bool> {
        let t = conj_translation_at(cusp, x, y, field)?;
        let conj = gamma.mul(&t, field).mul(&gamma_inv, field);
        let red = MatrixModA::reduce(&conj, q);
        Ok(match sub.spec.kind {
            SubgroupKind::Principal => red == identity,
            SubgroupKind::General => sub.image.contains(&red),
        })
    };
    let mut cols: Vec<(BigInt, BigInt)> =
        vec![(BigInt::from(modulus), BigInt::zero()), (BigInt::zero(), BigInt::from(modulus))];
    for x in 0..modulus {
        for y in 0..modulus {
            if (x, y) == (0, 0) {
                continue;
            }
            if in_subgroup(x, y)? {
                cols.push((BigInt::from(x), BigInt::from(y)));
            }
        }
    }
    crate::quadfield::hnf_2xk(&cols).ok_or_else(|| Error::Parse("empty peripheral lattice".into()))
}

/// Integral conjugated translation B^-1 T_tau B for tau = x*t1 + y*t2 in the
/// u^-2 lattice of the cusp.
fn conj_translation_at(
    cusp: &CuspDatum,
    x: i64,
    y: i64,
    field: &FieldDescriptor,
) -> Result<Mat2> {
    // translations[0], translations[1] are B^-1 T_{t1} B, B^-1 T_{t2} B and
    // commute, so the lattice point is a product of powers.
    let pow = |m: &Mat2, e: i64| -> Mat2 {
        let base = if e >= 0 { m.clone() } else { m.inverse_unimodular() };
        let mut acc = Mat2::identity();
        for _ in 0..e.unsigned_abs() {
            acc = acc.mul(&base, field);
        }
        acc
    };
    Ok(pow(&cusp.translations[0], x).mul(&pow(&cusp.translations[1], y), field))
}

/// N(x*t1 + y*t2) as an exact quadratic form in (x, y) (numerators only; the
/// common denominator scales all values equally).
fn peripheral_norm(cusp: &CuspDatum, field: &FieldDescriptor, x: &BigInt, y: &BigInt) -> BigInt {
    let inv2 = crate::congruence::inverse_square(&cusp.u_ideal, field);
    let [e1, e2] = inv2.num.basis_elements();
    let v = e1
        .mul(&RingElement::from_int(x.clone()), field)
        .add(&e2.mul(&RingElement::from_int(y.clone()), field));
    v.norm(field)
}

/// Shortest nonzero vector of the sublattice spanned by (a,0),(b,d) under the
/// peripheral norm form, ties broken lexicographically on (x, y).
fn shortest_vector(
    cusp: &CuspDatum,
    field: &FieldDescriptor,
    a: &BigInt,
    b: &BigInt,
    d: &BigInt,
) -> (BigInt, BigInt) {
    // Lagrange reduction on the basis.
    let norm = |v: &(BigInt, BigInt)| peripheral_norm(cusp, field, &v.0, &v.1);
    let mut b1 = (a.clone(), BigInt::zero());
    let mut b2 = (b.clone(), d.clone());
    loop {
        if norm(&b1) > norm(&b2) {
            std::mem::swap(&mut b1, &mut b2);
        }
        // mu = round(<b1, b2> / <b1, b1>) via the polarization of the form.
        let n1 = norm(&b1);
        let sum = (&b1.0 + &b2.0, &b1.1 + &b2.1);
        let dot2 = norm(&sum) - &n1 - norm(&b2);
        // dot2 = 2 <b1, b2>
        let mu = div_round(&dot2, &(&n1 * 2));
        if mu.is_zero() {
            break;
        }
        b2 = (&b2.0 - &mu * &b1.0, &b2.1 - &mu * &b1.1);
    }
    // b1 is shortest; collect small combinations to break norm ties
    // lexicographically.
    let nmin = norm(&b1);
    let mut best: Option<(BigInt, BigInt)> = None;
    for c1 in -2i64..=2 {
        for c2 in -2i64..=2 {
            if c1 == 0 && c2 == 0 {
                continue;
            }
            let v = (&b1.0 * c1 + &b2.0 * c2, &b1.1 * c1 + &b2.1 * c2);
            if norm(&v) == nmin {
                let better = match &best {
                    None => true,
                    Some(bv) => (&v.0, &v.1) < (&bv.0, &bv.1),
                };
                if better {
                    best = Some(v);
                }
            }
        }
    }
    best.unwrap_or(b1)
}

fn div_round(a: &BigInt, b: &BigInt) -> BigInt {
    let (q, r) = a.div_rem(b);
    if &r.abs() * 2 > b.abs() {
        if r.is_negative() == b.is_negative() {
            q + 1
        } else {
            q - 1
        }
    } else {
        q
    }
}

/// Enumerates the cusps of the subgroup as orbits of each Gamma(D)-cusp
/// stabilizer image acting on the cosets, returning (base cusp, orbit rep).
pub fn subgroup_cusps(sub: &SubgroupPresentation) -> Result<Vec<(usize, u32)>> {
    let q = &sub.quotient;
    let cusps = cusp_data(&sub.parent.field)?;
    let mut out = Vec::new();
    for cusp in &cusps {
        let mut gens: Vec<MatrixModA> =
            cusp.translations.iter().map(|m| MatrixModA::reduce(m, q)).collect();
        gens.extend(cusp.units.iter().map(|m| MatrixModA::reduce(m, q)));
        let mut visited = vec![false; sub.index];
        for start in 0..sub.index as u32 {
            if visited[start as usize] {
                continue;
            }
            out.push((cusp.index, start));
            let mut stack = vec![start];
            visited[start as usize] = true;
            while let Some(c) = stack.pop() {
                for s in &gens {
                    let m = sub.coset_reps[c as usize].mul(s, q);
                    let k = sub
                        .coset_of(&m)
                        .ok_or_else(|| Error::Parse("coset lookup failed".into()))?;
                    if !visited[k as usize] {
                        visited[k as usize] = true;
                        stack.push(k);
                    }
                }
            }
        }
    }
    Ok(out)
}

/// The peripheral 1-cycle of (word, invariant vector): block j accumulates
/// the inverse-prefix actions applied to the vector.
fn cycle_vector(
    w: &[Letter],
    omega: &[BigInt],
    tables: &RhoTables,
    g: usize,
) -> Vec<BigInt> {
    let n = tables.n;
    let mut out = vec![BigInt::zero(); g * n];
    let mut qv: Vec<BigInt> = omega.to_vec();
    let apply = |m: &IMat, v: &[BigInt]| -> Vec<BigInt> {
        m.iter().map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
    };
    for &l in w {
        let gi = (l.unsigned_abs() - 1) as usize;
        if l > 0 {
            for r in 0..n {
                out[gi * n + r] += &qv[r];
            }
            qv = apply(&tables.minus[gi], &qv);
        } else {
            qv = apply(&tables.plus[gi], &qv);
            for r in 0..n {
                out[gi * n + r] -= &qv[r];
            }
        }
    }
    out
}

/// Computes the boundary-image index [H_1_free : pr i_* H_1(boundary)_free]
/// with L(m) coefficients and tests it against |H_1(Gamma; L*(m))_tors|.
pub fn boundary_image_index(
    sub: &SubgroupPresentation,
    m: u32,
    opts: &HomologyOptions,
) -> Result<BoundaryIndexReport> {
    let start = Instant::now();
    let field = &sub.parent.field;
    let tables = coefficient_tables(&sub.gen_matrices, CoefficientTag::L, m, field)?;
    let n = tables.n;
    let g = sub.gen_matrices.len();
    let run = run_complex(sub, &tables, opts)?;
    let cusps = cusp_data(field)?;
    let orbit_reps = subgroup_cusps(sub)?;
    let kappa = orbit_reps.len();

    // Base-cusp invariant vectors.
    let mut base_vectors: HashMap<usize, crate::symreps::InvariantVector> = HashMap::new();
    for cusp in &cusps {
        base_vectors.insert(cusp.index, crate::symreps::invariant_vectors(cusp, m, field)?);
    }

    let alphabet = crate::words::Alphabet::for_field(field);
    let mut acc = run.accumulator.clone();
    let mut cusp_rows = Vec::new();
    let mut added = 0usize;
    for (base, coset) in &orbit_reps {
        let cusp = &cusps[*base];
        let gamma = &sub.transversal_mats[*coset as usize];
        let (a, b, d) = peripheral_sublattice(sub, cusp, gamma)?;
        let (x, y) = shortest_vector(cusp, field, &a, &b, &d);
        let xi = x.to_i64().ok_or_else(|| Error::Parse("theta coordinate overflow".into()))?;
        let yi = y.to_i64().ok_or_else(|| Error::Parse("theta coordinate overflow".into()))?;
        let p = {
            let t = conj_translation_at(cusp, xi, yi, field)?;
            gamma.mul(&t, field).mul(&gamma.inverse_unimodular(), field)
        };
        // Express the peripheral element in the subgroup generators.
        let parent_word = crate::words::euclidean_word(&p, field, &alphabet)?;
        let word = sub.rewrite_parent_word(&parent_word, opts.max_expanded_length)?;
        debug_assert_eq!(sub.evaluate_final(&word), p);
        // Transport the invariant vectors along gamma.
        let rho_gamma = crate::symreps::rho_integral(gamma, m, field)?;
        let iv = &base_vectors[base];
        let omega: Vec<BigInt> = crate::symreps::imat_apply(&rho_gamma, &iv.omega);
        let omega_p: Vec<BigInt> = crate::symreps::imat_apply(&rho_gamma, &iv.omega_prime);
        for om in [omega, omega_p] {
            let z = cycle_vector(&word, &om, &tables, g);
            // Hard cycle check: d1 * z = 0.
            let mut check = vec![BigInt::zero(); n];
            for (j, blk) in run.d1_blocks.iter().enumerate() {
                for (r, row) in blk.iter().enumerate() {
                    let mut acc_v = BigInt::zero();
                    for (c, v) in row.iter().enumerate() {
                        if !v.is_zero() {
                            acc_v += v * &z[j * n + c];
                        }
                    }
                    check[r] += acc_v;
                }
            }
            if check.iter().any(|v| !v.is_zero()) {
                return Err(Error::CompositeNonzero);
            }
            let col: Vec<(u32, BigInt)> = z
                .iter()
                .enumerate()
                .filter(|(_, v)| !v.is_zero())
                .map(|(i, v)| (i as u32, v.clone()))
                .collect();
            if acc.add_column(col) {
                added += 1;
            }
        }
        cusp_rows.push(SubgroupCusp {
            base_cusp: *base,
            coset: *coset,
            theta: (xi, yi),
            theta_norm: peripheral_norm(cusp, field, &x, &y),
        });
    }

    let expected_rank = 2 * kappa;
    let full_rank =
        added == expected_rank && acc.rank() == run.width - run.rank_d1;
    if !full_rank {
        return Err(Error::PeripheralRankDeficient { got: added, expected: expected_rank });
    }
    let snf_a = smith_normal_form(&acc.basis_matrix());
    let prod_a = snf_a.divisor_product();
    let prod_w: BigInt = run.torsion.iter().product();
    let (index, rem) = prod_a.div_rem(&prod_w);
    assert!(rem.is_zero(), "divisor ratio must be integral");

    // Compare with |H_1(Gamma; L*(m))_tors|.
    let dual = homology_h1(sub, CoefficientTag::Ldual, m, opts)?;
    let dual_torsion = dual.torsion_order();
    let inequality_holds = index <= dual_torsion;
    Ok(BoundaryIndexReport {
        subgroup: sub.spec.label(),
        m,
        kappa,
        cusps: cusp_rows,
        index,
        dual_torsion,
        inequality_holds,
        peripheral_rank: added,
        expected_rank,
        full_rank,
        elapsed_ms: start.elapsed().as_millis(),
    })
}

/// Runs H_1 with explicitly supplied action tables (cross-check hook).
pub fn homology_h1_with_tables(
    sub: &SubgroupPresentation,
    tables: &RhoTables,
    opts: &HomologyOptions,
) -> Result<(usize, Vec<BigInt>)> {
    let run = run_complex(sub, tables, opts)?;
    Ok((run.width - run.rank_d1 - run.rank_d2, run.torsion))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::congruence::SubgroupSpec;
    use crate::presentation::load_presentation;
    use crate::quadfield::{parse_ring_element, IdealRep};
    use crate::schreier::{subgroup_presentation, SimplifyOptions};

    fn build(d: u64, level: &str) -> SubgroupPresentation {
        let field = FieldDescriptor::new(d).unwrap();
        let parent = load_presentation(d).unwrap();
        let ideal = IdealRep::principal(parse_ring_element(level).unwrap(), &field).unwrap();
        let spec = SubgroupSpec::principal(ideal, &field).unwrap();
        subgroup_presentation(&parent, &spec, SimplifyOptions::default()).unwrap()
    }

    #[test]
    fn trivial_coefficients_match_abelianization() {
        let sub = build(1, "1+1*w");
        let opts = HomologyOptions::default();
        let rep = homology_h1(&sub, CoefficientTag::Trivial, 1, &opts).unwrap();
        let (rank, divisors) =
            crate::presentation::abelianization(sub.gen_matrices.len(), &sub.relators);
        assert_eq!(rep.free_rank, rank);
        assert_eq!(rep.torsion_divisors, divisors);
    }

    #[test]
    fn rank_two_kappa_level_two_plus_i() {
        let sub = build(1, "2+1*w");
        let opts = HomologyOptions::default();
        for m in [2u32, 3] {
            let rep = homology_h1(&sub, CoefficientTag::L, m, &opts).unwrap();
            assert_eq!(rep.free_rank, 12, "m={m}: free rank must be 2*kappa = 12");
            assert!(rep.certified_torsion_free);
            let rep_bar = homology_h1(&sub, CoefficientTag::Lbar, m, &opts).unwrap();
            assert_eq!(rep_bar.free_rank, 24, "m={m}: Lbar rank must be 4*kappa");
        }
    }

    #[test]
    fn lbar_direct_equals_merged() {
        let sub = build(1, "2+1*w");
        let opts = HomologyOptions::default();
        let merged = homology_h1(&sub, CoefficientTag::Lbar, 2, &opts).unwrap();
        let tables =
            coefficient_tables(&sub.gen_matrices, CoefficientTag::Lbar, 2, &sub.parent.field)
                .unwrap();
        let (rank, torsion) = homology_h1_with_tables(&sub, &tables, &opts).unwrap();
        assert_eq!(merged.free_rank, rank);
        assert_eq!(merged.torsion_divisors, torsion);
    }

    #[test]
    fn h0_vanishing_free_rank() {
        let sub = build(1, "2+1*w");
        let opts = HomologyOptions::default();
        for m in [1u32, 2] {
            for tag in [CoefficientTag::L, CoefficientTag::Ldual, CoefficientTag::Lbar] {
                let rep = homology_h0(&sub, tag, m, &opts).unwrap();
                assert_eq!(rep.free_rank, 0, "tag {tag:?} m={m}");
            }
        }
    }

    #[test]
    fn lbar_torsion_multiplicative() {
        let sub = build(1, "2+1*w");
        let opts = HomologyOptions::default();
        let l = homology_h1(&sub, CoefficientTag::L, 2, &opts).unwrap();
        let ld = homology_h1(&sub, CoefficientTag::Ldual, 2, &opts).unwrap();
        let lbar = homology_h1(&sub, CoefficientTag::Lbar, 2, &opts).unwrap();
        assert_eq!(lbar.torsion_order(), l.torsion_order() * ld.torsion_order());
    }

    #[test]
    fn boundary_index_within_dual_torsion() {
        let sub = build(1, "2+1*w");
        let opts = HomologyOptions::default();
        let rep = boundary_image_index(&sub, 2, &opts).unwrap();
        assert_eq!(rep.kappa, 6);
        assert!(rep.full_rank);
        assert!(rep.inequality_holds, "index {} vs torsion {}", rep.index, rep.dual_torsion);
    }

    #[test]
    fn column_cap_refuses() {
        let sub = build(1, "2+1*w");
        let opts = HomologyOptions { column_cap: 10, ..Default::default() };
        assert!(matches!(
            homology_h1(&sub, CoefficientTag::L, 2, &opts),
            Err(Error::SizeCap { .. })
        ));
    }
}
