//! The finite quotient SL2(O_D/a), index and cusp-count formulas for the
//! principal congruence subgroup of level a, general congruence subgroups
//! given by their image in the quotient, and torsion-freeness certification.

use std::collections::{HashMap, HashSet};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::mat2::{self, FracMat2, Mat2};
use crate::quadfield::{factor_ideal, FieldDescriptor, IdealRep, RingElement};

/// O_D / a with canonical residue representatives read off the HNF basis.
#[derive(Debug, Clone)]
pub struct QuotientRing {
    pub field: FieldDescriptor,
    pub ideal: IdealRep,
    a: i64,
    b: i64,
    d: i64,
    pub cardinality: i64,
}

/// A residue, stored as the canonical representative (x, y) with
/// 0 <= x < a, 0 <= y < d.
pub type Residue = (i64, i64);

impl QuotientRing {
    pub fn new(ideal: &IdealRep, field: &FieldDescriptor) -> Result<QuotientRing> {
        if ideal.norm().is_zero() {
            return Err(Error::ZeroIdeal);
        }
        let a = ideal.a.to_i64().ok_or_else(|| Error::Parse("level too large".into()))?;
        let b = ideal.b.to_i64().ok_or_else(|| Error::Parse("level too large".into()))?;
        let d = ideal.d.to_i64().ok_or_else(|| Error::Parse("level too large".into()))?;
        Ok(QuotientRing { field: field.clone(), ideal: ideal.clone(), a, b, d, cardinality: a * d })
    }

    pub fn reduce_pair(&self, x: i64, y: i64) -> Residue {
        let k = y.div_euclid(self.d);
        let y = y.rem_euclid(self.d);
        let x = (x - k * self.b).rem_euclid(self.a);
        (x, y)
    }

    pub fn reduce_element(&self, e: &RingElement) -> Residue {
        // Reduce through BigInt first so huge entries cannot overflow.
        let d = BigInt::from(self.d);
        let k: BigInt = e.b.div_floor(&d);
        let y = (&e.b - &k * &d).to_i64().unwrap();
        let a = BigInt::from(self.a);
        let x = (&e.a - &k * BigInt::from(self.b)).mod_floor(&a).to_i64().unwrap();
        (x, y)
    }

    pub fn add(&self, p: Residue, q: Residue) -> Residue {
        self.reduce_pair(p.0 + q.0, p.1 + q.1)
    }

    pub fn neg(&self, p: Residue) -> Residue {
        self.reduce_pair(-p.0, -p.1)
    }

    pub fn mul(&self, p: Residue, q: Residue) -> Residue {
        let (s, t) = self.field.omega_square();
        let bb = p.1 * q.1;
        let x = p.0 * q.0 + bb * s;
        let y = p.0 * q.1 + p.1 * q.0 + bb * t;
        self.reduce_pair(x, y)
    }

    pub fn one(&self) -> Residue {
        self.reduce_pair(1, 0)
    }

    pub fn is_zero(&self, p: Residue) -> bool {
        p == self.reduce_pair(0, 0)
    }

    pub fn residues(&self) -> impl Iterator<Item = Residue> + '_ {
        (0..self.a).flat_map(move |x| (0..self.d).map(move |y| (x, y)))
    }
}

/// A 2x2 matrix over O_D/a with determinant one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MatrixModA {
    pub e: [Residue; 4],
}

impl MatrixModA {
    pub fn identity(q: &QuotientRing) -> Self {
        MatrixModA { e: [q.one(), q.reduce_pair(0, 0), q.reduce_pair(0, 0), q.one()] }
    }

    pub fn reduce(m: &Mat2, q: &QuotientRing) -> Self {
        MatrixModA {
            e: [
                q.reduce_element(&m.e[0]),
                q.reduce_element(&m.e[1]),
                q.reduce_element(&m.e[2]),
                q.reduce_element(&m.e[3]),
            ],
        }
    }

    pub fn det(&self, q: &QuotientRing) -> Residue {
        let ad = q.mul(self.e[0], self.e[3]);
        let bc = q.mul(self.e[1], self.e[2]);
        q.add(ad, q.neg(bc))
    }

    pub fn mul(&self, rhs: &MatrixModA, q: &QuotientRing) -> MatrixModA {
        let m = |i: usize, j: usize, k: usize, l: usize| {
            q.add(q.mul(self.e[i], rhs.e[j]), q.mul(self.e[k], rhs.e[l]))
        };
        MatrixModA { e: [m(0, 0, 1, 2), m(0, 1, 1, 3), m(2, 0, 3, 2), m(2, 1, 3, 3)] }
    }

    /// Inverse of a determinant-one matrix.
    pub fn inverse(&self, q: &QuotientRing) -> MatrixModA {
        MatrixModA { e: [self.e[3], q.neg(self.e[1]), q.neg(self.e[2]), self.e[0]] }
    }

    pub fn is_identity(&self, q: &QuotientRing) -> bool {
        *self == MatrixModA::identity(q)
    }
}

/// Exact index [Gamma(D) : Gamma(a)] = N(a)^3 prod_{p | a} (1 - N(p)^-2).
pub fn index_principal(ideal: &IdealRep, field: &FieldDescriptor) -> Result<BigInt> {
    if ideal.norm().is_zero() {
        return Err(Error::ZeroIdeal);
    }
    if ideal.is_unit_ideal() {
        return Err(Error::UnitIdeal);
    }
    let n = ideal.norm();
    let mut num = &n * &n * &n;
    let mut den = BigInt::one();
    for f in factor_ideal(ideal, field)?.factors {
        let q = f.prime.norm();
        let q2 = &q * &q;
        num *= &q2 - BigInt::one();
        den *= q2;
    }
    let (quot, rem) = num.div_rem(&den);
    assert!(rem.is_zero(), "index formula must divide exactly");
    Ok(quot)
}

/// Cap on N(a) for full enumeration of SL2(O/a).
pub const ENUMERATION_CAP: u64 = 16;

/// Brute-force list of all determinant-one matrices over O_D/a.
pub fn enumerate_sl2_quotient(
    ideal: &IdealRep,
    field: &FieldDescriptor,
) -> Result<Vec<MatrixModA>> {
    let q = QuotientRing::new(ideal, field)?;
    let norm = q.cardinality as u64;
    if norm > ENUMERATION_CAP {
        return Err(Error::EnumerationCap { norm: norm.to_string(), cap: ENUMERATION_CAP });
    }
    let residues: Vec<Residue> = q.residues().collect();
    let one = q.one();
    let mut out = Vec::new();
    for &a in &residues {
        for &b in &residues {
            for &c in &residues {
                for &d in &residues {
                    let m = MatrixModA { e: [a, b, c, d] };
                    if m.det(&q) == one {
                        out.push(m);
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Closure of a generating set inside SL2(O/a).
pub fn closure(gens: &[MatrixModA], q: &QuotientRing) -> Vec<MatrixModA> {
    let mut seen: HashSet<MatrixModA> = HashSet::new();
    let mut stack = vec![MatrixModA::identity(q)];
    seen.insert(stack[0]);
    let mut gens_both: Vec<MatrixModA> = gens.to_vec();
    gens_both.extend(gens.iter().map(|g| g.inverse(q)));
    while let Some(m) = stack.pop() {
        for g in &gens_both {
            let n = m.mul(g, q);
            if seen.insert(n) {
                stack.push(n);
            }
        }
    }
    let mut v: Vec<MatrixModA> = seen.into_iter().collect();
    v.sort();
    v
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SubgroupKind {
    Principal,
    General,
}

/// A congruence subgroup of Gamma(D), given by its level and its image
/// subgroup H inside SL2(O_D/a); principal means H is trivial.
#[derive(Debug, Clone)]
pub struct SubgroupSpec {
    pub field: FieldDescriptor,
    pub level: IdealRep,
    pub kind: SubgroupKind,
    /// Generators of H for the general kind.
    pub image_generators: Vec<MatrixModA>,
}

impl SubgroupSpec {
    pub fn principal(level: IdealRep, field: &FieldDescriptor) -> Result<SubgroupSpec> {
        if level.norm().is_zero() {
            return Err(Error::ZeroIdeal);
        }
        if level.is_unit_ideal() {
            return Err(Error::UnitIdeal);
        }
        Ok(SubgroupSpec {
            field: field.clone(),
            level,
            kind: SubgroupKind::Principal,
            image_generators: Vec::new(),
        })
    }

    pub fn general(
        level: IdealRep,
        image_generators: Vec<MatrixModA>,
        field: &FieldDescriptor,
    ) -> Result<SubgroupSpec> {
        if level.norm().is_zero() {
            return Err(Error::ZeroIdeal);
        }
        Ok(SubgroupSpec { field: field.clone(), level, kind: SubgroupKind::General, image_generators })
    }

    pub fn quotient(&self) -> Result<QuotientRing> {
        QuotientRing::new(&self.level, &self.field)
    }

    /// The subgroup H <= SL2(O/a) this spec reduces to.
    pub fn image_subgroup(&self, q: &QuotientRing) -> Vec<MatrixModA> {
        match self.kind {
            SubgroupKind::Principal => vec![MatrixModA::identity(q)],
            SubgroupKind::General => closure(&self.image_generators, q),
        }
    }

    /// Index [Gamma(D) : Gamma_0] = |SL2(O/a)| / |H|.
    pub fn index(&self) -> Result<BigInt> {
        let g = index_principal(&self.level, &self.field)?;
        match self.kind {
            SubgroupKind::Principal => Ok(g),
            SubgroupKind::General => {
                let q = self.quotient()?;
                let h = self.image_subgroup(&q).len();
                let (quot, rem) = g.div_rem(&BigInt::from(h));
                assert!(rem.is_zero(), "|H| must divide |SL2(O/a)|");
                Ok(quot)
            }
        }
    }

    pub fn label(&self) -> String {
        match self.kind {
            SubgroupKind::Principal => format!("Gamma{}", self.level.label()),
            SubgroupKind::General => {
                format!("Gamma_0[{} gens]{}", self.image_generators.len(), self.level.label())
            }
        }
    }
}

/// One cusp of Gamma(D): a point eta = [p : q] of P^1(F), a matrix B with
/// B*eta = infinity, and the peripheral data of its stabilizer.
#[derive(Debug, Clone)]
pub struct CuspDatum {
    pub index: usize,
    pub p: RingElement,
    pub q: RingElement,
    /// B_eta in SL2(F), as an integral matrix over a common denominator.
    pub b_eta: FracMat2,
    /// The O-module generated by the bottom row of B_eta (equivalently by
    /// p and q); the translation part of the stabilizer is u^-2.
    pub u_ideal: IdealRep,
    /// Two independent unipotent generators of the stabilizer of eta in
    /// Gamma(D), integral by construction.
    pub translations: [Mat2; 2],
    /// Unit-diagonal part of the stabilizer: -I, plus diag(u0, u0^-1) when
    /// eta is the infinite cusp of a field with extra units.
    pub units: Vec<Mat2>,
}

/// Fractional ideal num/den.
#[derive(Debug, Clone)]
pub struct FracIdeal {
    pub num: IdealRep,
    pub den: BigInt,
}

impl FracIdeal {
    /// Z-basis as pairs (element, denominator).
    pub fn basis(&self) -> [(RingElement, BigInt); 2] {
        let [e1, e2] = self.num.basis_elements();
        [(e1, self.den.clone()), (e2, self.den.clone())]
    }
}

/// u^-2 = conj(u)^2 / N(u)^2 as a fractional ideal.
pub fn inverse_square(u: &IdealRep, field: &FieldDescriptor) -> FracIdeal {
    let cc = u.conj(field);
    let num = cc.mul(&cc, field);
    let n = u.norm();
    FracIdeal { num, den: &n * &n }
}

/// Conjugated translation B^-1 [[1,t],[0,1]] B = [[1 + t*g*d, t*d^2], [-t*g^2, 1 - t*g*d]]
/// where (g, d) is the bottom row of B and t = tau/den.
fn conjugated_translation(
    b: &FracMat2,
    tau: &RingElement,
    den: &BigInt,
    field: &FieldDescriptor,
) -> Result<Mat2> {
    let g = &b.num.e[2];
    let d = &b.num.e[3];
    // b's entries are num/b.den; g*d carries b.den^2, cancelled by tau/den
    // only if den == (b.den)^2 * k; handle fully rationally instead.
    let full_den = den * &b.den * &b.den;
    let tgd = tau.mul(&g.mul(d, field), field);
    let td2 = tau.mul(&d.mul(d, field), field);
    let tg2 = tau.mul(&g.mul(g, field), field);
    let one = RingElement::new(full_den.clone(), BigInt::zero());
    let entries = [
        one.add(&tgd),
        td2,
        -tg2,
        one.sub(&tgd),
    ];
    let mut out = Vec::new();
    for x in entries {
        let (qa, ra) = x.a.div_rem(&full_den);
        let (qb, rb) = x.b.div_rem(&full_den);
        if !ra.is_zero() || !rb.is_zero() {
            return Err(Error::Parse(format!(
                "peripheral translation is not integral at cusp [{}:{}]",
                b.num.e[2], b.num.e[3]
            )));
        }
        out.push(RingElement { a: qa, b: qb });
    }
    Ok(Mat2 { e: [out[0].clone(), out[1].clone(), out[2].clone(), out[3].clone()] })
}

/// Ideal-class representatives for the fields with class number 2 that the
/// CLI supports beyond the class-number-one range; cusp eta = [p : q].
const IDEAL_CLASS_DATA: &str = include_str!("../data/ideal_classes.txt");

fn class_cusp_pairs(d: u64) -> Vec<(String, String)> {
    let mut out = Vec::new();
    for line in IDEAL_CLASS_DATA.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut it = line.split_whitespace();
        let (Some(dd), Some(p), Some(q)) = (it.next(), it.next(), it.next()) else { continue };
        if dd.parse::<u64>() == Ok(d) {
            out.push((p.to_string(), q.to_string()));
        }
    }
    out
}

/// Builds the cusp data for Gamma(D): the infinite cusp, plus one cusp per
/// non-principal ideal class (shipped for the small split-class fields).
pub fn cusp_data(field: &FieldDescriptor) -> Result<Vec<CuspDatum>> {
    let mut out = Vec::new();
    // eta = infinity, B = I, u = O.
    let one = RingElement::one();
    let u_ideal = IdealRep::principal(one.clone(), field)?;
    let inv2 = inverse_square(&u_ideal, field);
    let [t1, t2] = inv2.basis();
    let b = FracMat2::identity();
    let tr1 = conjugated_translation(&b, &t1.0, &t1.1, field)?;
    let tr2 = conjugated_translation(&b, &t2.0, &t2.1, field)?;
    let mut units = vec![mat2::gen_a().mul(&mat2::gen_a(), field)];
    if field.unit_count > 2 {
        units.push(mat2::unit_diagonal(&field.fundamental_unit(), field));
    }
    out.push(CuspDatum {
        index: 0,
        p: one,
        q: RingElement::zero(),
        b_eta: b,
        u_ideal,
        translations: [tr1, tr2],
        units,
    });

    if field.class_number == 1 {
        return Ok(out);
    }
    let pairs = class_cusp_pairs(field.d);
    if pairs.len() + 1 != field.class_number as usize {
        return Err(Error::MissingClassData(field.d));
    }
    for (i, (ps, qs)) in pairs.iter().enumerate() {
        let p = crate::quadfield::parse_ring_element(ps)?;
        let q = crate::quadfield::parse_ring_element(qs)?;
        let datum = build_cusp(i + 1, p, q, field)?;
        out.push(datum);
    }
    Ok(out)
}

/// Constructs B_eta for eta = [p : q]: solve p*y - q*x = 1 with x, y in u^-1,
/// where u = (p, q); then B_eta = [[y, -x], [-q, p]].
fn build_cusp(index: usize, p: RingElement, q: RingElement, field: &FieldDescriptor) -> Result<CuspDatum> {
    let u_ideal = IdealRep::from_generators(&[p.clone(), q.clone()], field)?;
    let n = u_ideal.norm();
    let ubar = u_ideal.conj(field);
    let [f1, f2] = ubar.basis_elements();
    // Solve p*(y1*f1 + y2*f2) - q*(x1*f1 + x2*f2) = N(u) over Z.
    let cols = [
        p.mul(&f1, field),
        p.mul(&f2, field),
        -q.mul(&f1, field),
        -q.mul(&f2, field),
    ];
    let target = (n.clone(), BigInt::zero());
    let sol = solve_2xk(&cols, &target)
        .ok_or_else(|| Error::Parse(format!("no B_eta for cusp [{p}:{q}]")))?;
    let y = f1
        .mul(&RingElement::from_int(sol[0].clone()), field)
        .add(&f2.mul(&RingElement::from_int(sol[1].clone()), field));
    let x = f1
        .mul(&RingElement::from_int(sol[2].clone()), field)
        .add(&f2.mul(&RingElement::from_int(sol[3].clone()), field));
    // B = [[y/N, -x/N], [-q, p]] with det 1; scale to a common denominator.
    let b = FracMat2 {
        num: Mat2::new(
            y,
            -x,
            -q.mul(&RingElement::from_int(n.clone()), field),
            p.mul(&RingElement::from_int(n.clone()), field),
        ),
        den: n,
    }
    .normalize();
    assert!(b.det_is_one(field), "B_eta must have determinant one");

    let inv2 = inverse_square(&u_ideal, field);
    let [t1, t2] = inv2.basis();
    let tr1 = conjugated_translation(&b, &t1.0, &t1.1, field)?;
    let tr2 = conjugated_translation(&b, &t2.0, &t2.1, field)?;
    let units = vec![mat2::gen_a().mul(&mat2::gen_a(), field)];
    Ok(CuspDatum { index, p, q, b_eta: b, u_ideal, translations: [tr1, tr2], units })
}

/// Integer solution v of cols * v = target for a 2-row system, by column HNF
/// with a tracked transform.
fn solve_2xk(cols: &[RingElement], target: &(BigInt, BigInt)) -> Option<Vec<BigInt>> {
    let k = cols.len();
    let mut m: Vec<(BigInt, BigInt)> = cols.iter().map(|e| (e.a.clone(), e.b.clone())).collect();
    let mut t: Vec<Vec<BigInt>> = (0..k)
        .map(|i| (0..k).map(|j| if i == j { BigInt::one() } else { BigInt::zero() }).collect())
        .collect();
    // Clear the second row to a single pivot.
    let mut piv2: Option<usize> = None;
    for j in 0..k {
        if m[j].1.is_zero() {
            continue;
        }
        match piv2 {
            None => piv2 = Some(j),
            Some(pj) => {
                let e = m[pj].1.clone().extended_gcd(&m[j].1);
                let (a_pj, a_j) = (m[pj].clone(), m[j].clone());
                let (t_pj, t_j) = (t[pj].clone(), t[j].clone());
                let comb =
                    |u: &(BigInt, BigInt), s: &BigInt, v: &(BigInt, BigInt), w: &BigInt| {
                        (&u.0 * s + &v.0 * w, &u.1 * s + &v.1 * w)
                    };
                m[pj] = comb(&a_pj, &e.x, &a_j, &e.y);
                let c1 = &a_pj.1 / &e.gcd;
                let c0 = &a_j.1 / &e.gcd;
                m[j] = comb(&a_j, &c1, &a_pj, &-c0.clone());
                for idx in 0..k {
                    let new_pj = &t_pj[idx] * &e.x + &t_j[idx] * &e.y;
                    let new_j = &t_j[idx] * &c1 - &t_pj[idx] * &c0;
                    t[pj][idx] = new_pj;
                    t[j][idx] = new_j;
                }
            }
        }
    }
    // Clear the first row among columns with zero second row.
    let mut piv1: Option<usize> = None;
    for j in 0..k {
        if !m[j].1.is_zero() || m[j].0.is_zero() {
            continue;
        }
        match piv1 {
            None => piv1 = Some(j),
            Some(pj) => {
                let e = m[pj].0.clone().extended_gcd(&m[j].0);
                let (a_pj, a_j) = (m[pj].clone(), m[j].clone());
                let (t_pj, t_j) = (t[pj].clone(), t[j].clone());
                m[pj] = (&a_pj.0 * &e.x + &a_j.0 * &e.y, BigInt::zero());
                let c1 = &a_pj.0 / &e.gcd;
                let c0 = &a_j.0 / &e.gcd;
                m[j] = (&a_j.0 * &c1 - &a_pj.0 * &c0, BigInt::zero());
                for idx in 0..k {
                    let new_pj = &t_pj[idx] * &e.x + &t_j[idx] * &e.y;
                    let new_j = &t_j[idx] * &c1 - &t_pj[idx] * &c0;
                    t[pj][idx] = new_pj;
                    t[j][idx] = new_j;
                }
            }
        }
    }
    // Solve with the (at most two) pivot columns.
    let mut v = vec![BigInt::zero(); k];
    let mut rem = target.clone();
    if let Some(pj) = piv2 {
        let (quo, r) = rem.1.div_rem(&m[pj].1);
        if !r.is_zero() {
            return None;
        }
        rem.0 -= &quo * &m[pj].0;
        rem.1 -= &quo * &m[pj].1;
        for idx in 0..k {
            v[idx] += &quo * &t[pj][idx];
        }
    }
    if !rem.1.is_zero() {
        return None;
    }
    if let Some(pj) = piv1 {
        let (quo, r) = rem.0.div_rem(&m[pj].0);
        if !r.is_zero() {
            return None;
        }
        rem.0 -= &quo * &m[pj].0;
        for idx in 0..k {
            v[idx] += &quo * &t[pj][idx];
        }
    }
    if rem.0.is_zero() && rem.1.is_zero() {
        Some(v)
    } else {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CuspMethod {
    Formula,
    OrbitOracle,
}

#[derive(Debug, Clone, Serialize)]
pub struct CuspReport {
    pub kappa: BigInt,
    pub method: CuspMethod,
    /// Stabilizer-image order per Gamma(D)-cusp (oracle path only).
    pub per_cusp_stabilizer_orders: Vec<u64>,
    pub formula_value: Option<BigInt>,
    pub oracle_value: Option<BigInt>,
    /// The cusp-count formula needs -4 outside the level.
    pub formula_applicable: bool,
}

/// Is the closed formula applicable at this level (-4 not in a)?
pub fn formula_applicable(level: &IdealRep) -> bool {
    !level.contains(&RingElement::from_int(-4))
}

/// kappa by the closed formula d_F * index / (#units * N(a)); principal
/// levels only, and only above the largeness threshold.
pub fn cusp_count_formula(level: &IdealRep, field: &FieldDescriptor) -> Result<BigInt> {
    if !formula_applicable(level) {
        return Err(Error::FormulaBelowThreshold);
    }
    let index = index_principal(level, field)?;
    let num = BigInt::from(field.class_number) * index;
    let den = BigInt::from(field.unit_count) * level.norm();
    let (q, r) = num.div_rem(&den);
    assert!(r.is_zero(), "cusp formula must divide exactly");
    Ok(q)
}

/// kappa by the stabilizer-image oracle: for each Gamma(D)-cusp, reduce the
/// stabilizer generators into G = SL2(O/a) and count |G| / |image|.
pub fn cusp_count_oracle(spec: &SubgroupSpec) -> Result<CuspReport> {
    let q = spec.quotient()?;
    let g_order = index_principal(&spec.level, &spec.field)?;
    let cusps = cusp_data(&spec.field)?;
    let mut kappa = BigInt::zero();
    let mut per_cusp = Vec::new();
    match spec.kind {
        SubgroupKind::Principal => {
            for cusp in &cusps {
                let mut gens: Vec<MatrixModA> =
                    cusp.translations.iter().map(|m| MatrixModA::reduce(m, &q)).collect();
                gens.extend(cusp.units.iter().map(|m| MatrixModA::reduce(m, &q)));
                let stab = closure(&gens, &q);
                per_cusp.push(stab.len() as u64);
                let (quo, rem) = g_order.div_rem(&BigInt::from(stab.len()));
                assert!(rem.is_zero(), "stabilizer image order must divide |G|");
                kappa += quo;
            }
        }
        SubgroupKind::General => {
            // Count double cosets H \ G / S by letting S act on the right
            // cosets of H.
            let h = spec.image_subgroup(&q);
            let cosets = coset_space(&h, &q)?;
            for cusp in &cusps {
                let mut gens: Vec<MatrixModA> =
                    cusp.translations.iter().map(|m| MatrixModA::reduce(m, &q)).collect();
                gens.extend(cusp.units.iter().map(|m| MatrixModA::reduce(m, &q)));
                let stab = closure(&gens, &q);
                per_cusp.push(stab.len() as u64);
                let orbits = orbit_count(&cosets, &stab, &h, &q);
                kappa += BigInt::from(orbits);
            }
        }
    }
    Ok(CuspReport {
        kappa,
        method: CuspMethod::OrbitOracle,
        per_cusp_stabilizer_orders: per_cusp,
        formula_value: None,
        oracle_value: None,
        formula_applicable: formula_applicable(&spec.level),
    })
}

/// Right cosets Hg of H in G = SL2(O/a), as canonical minimal representatives,
/// reached by right multiplication with reductions of the Gamma(D) generators.
pub fn coset_space(h: &[MatrixModA], q: &QuotientRing) -> Result<Vec<MatrixModA>> {
    let field = &q.field;
    let gens = [
        MatrixModA::reduce(&mat2::gen_a(), q),
        MatrixModA::reduce(&mat2::gen_t(), q),
        MatrixModA::reduce(&mat2::gen_u(), q),
    ];
    let canon = |m: &MatrixModA| -> MatrixModA {
        h.iter().map(|x| x.mul(m, q)).min().unwrap()
    };
    let start = canon(&MatrixModA::identity(q));
    let mut seen = HashSet::new();
    seen.insert(start);
    let mut stack = vec![start];
    while let Some(c) = stack.pop() {
        for g in &gens {
            for m in [c.mul(g, q), c.mul(&g.inverse(q), q)] {
                let cm = canon(&m);
                if seen.insert(cm) {
                    stack.push(cm);
                }
            }
        }
    }
    let expected = index_principal(&q.ideal, field)? / BigInt::from(h.len());
    let got = BigInt::from(seen.len());
    if got != expected {
        return Err(Error::CosetGraphNotTransitive {
            reached: seen.len(),
            expected: expected.to_usize().unwrap_or(usize::MAX),
        });
    }
    let mut v: Vec<MatrixModA> = seen.into_iter().collect();
    v.sort();
    Ok(v)
}

fn orbit_count(
    cosets: &[MatrixModA],
    stab: &[MatrixModA],
    h: &[MatrixModA],
    q: &QuotientRing,
) -> u64 {
    let canon = |m: &MatrixModA| -> MatrixModA { h.iter().map(|x| x.mul(m, q)).min().unwrap() };
    let index_of: HashMap<MatrixModA, usize> =
        cosets.iter().enumerate().map(|(i, m)| (*m, i)).collect();
    let mut visited = vec![false; cosets.len()];
    let mut orbits = 0;
    for i in 0..cosets.len() {
        if visited[i] {
            continue;
        }
        orbits += 1;
        let mut stack = vec![i];
        visited[i] = true;
        while let Some(j) = stack.pop() {
            for s in stab {
                let n = canon(&cosets[j].mul(s, q));
                let k = index_of[&n];
                if !visited[k] {
                    visited[k] = true;
                    stack.push(k);
                }
            }
        }
    }
    orbits
}

/// Combined cusp count: formula when applicable, oracle otherwise; when both
/// run they must agree.
pub fn cusp_count(spec: &SubgroupSpec, force_oracle: bool) -> Result<CuspReport> {
    let formula_ok = spec.kind == SubgroupKind::Principal && formula_applicable(&spec.level);
    if formula_ok && !force_oracle {
        let v = cusp_count_formula(&spec.level, &spec.field)?;
        return Ok(CuspReport {
            kappa: v.clone(),
            method: CuspMethod::Formula,
            per_cusp_stabilizer_orders: Vec::new(),
            formula_value: Some(v),
            oracle_value: None,
            formula_applicable: true,
        });
    }
    let mut report = cusp_count_oracle(spec)?;
    report.oracle_value = Some(report.kappa.clone());
    if formula_ok {
        let v = cusp_count_formula(&spec.level, &spec.field)?;
        assert_eq!(v, report.kappa, "cusp formula and oracle disagree at {}", spec.label());
        report.formula_value = Some(v);
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TorsionFreeness {
    CertifiedTorsionFree,
    Inconclusive,
}

/// Sufficient criterion: a nontrivial finite-order element of SL2(C) inside a
/// congruence subgroup forces trace - 2 in {-4,-3,-2,-1} modulo nothing, so
/// certification holds when no element of the image subgroup has trace
/// congruent to -2, -1, 0 or 1 modulo the level.
pub fn torsion_free_check(spec: &SubgroupSpec) -> Result<TorsionFreeness> {
    let q = spec.quotient()?;
    let bad_traces: Vec<Residue> =
        [-2i64, -1, 0, 1].iter().map(|&t| q.reduce_pair(t, 0)).collect();
    let h = spec.image_subgroup(&q);
    for m in &h {
        let tr = q.add(m.e[0], m.e[3]);
        if bad_traces.contains(&tr) {
            return Ok(TorsionFreeness::Inconclusive);
        }
    }
    Ok(TorsionFreeness::CertifiedTorsionFree)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadfield::parse_ring_element;

    fn ideal(field: &FieldDescriptor, s: &str) -> IdealRep {
        IdealRep::principal(parse_ring_element(s).unwrap(), field).unwrap()
    }

    #[test]
    fn index_small_gaussian_levels() {
        let f = FieldDescriptor::new(1).unwrap();
        for (lvl, idx) in [("1+1*w", 6u64), ("2", 48), ("3", 720), ("2+1*w", 120), ("5", 14400)] {
            let i = ideal(&f, lvl);
            assert_eq!(index_principal(&i, &f).unwrap(), BigInt::from(idx), "level {lvl}");
        }
    }

    #[test]
    fn index_matches_enumeration() {
        for d in [1u64, 2, 3, 7, 11] {
            let f = FieldDescriptor::new(d).unwrap();
            for x in crate::quadfield::elements_of_norm_up_to(ENUMERATION_CAP, &f) {
                let i = IdealRep::principal(x, &f).unwrap();
                if i.is_unit_ideal() {
                    continue;
                }
                let listed = enumerate_sl2_quotient(&i, &f).unwrap().len();
                assert_eq!(
                    index_principal(&i, &f).unwrap(),
                    BigInt::from(listed),
                    "D={d} level {}",
                    i.label()
                );
            }
        }
    }

    #[test]
    fn enumeration_cap_enforced() {
        let f = FieldDescriptor::new(1).unwrap();
        let i = ideal(&f, "5");
        assert!(matches!(enumerate_sl2_quotient(&i, &f), Err(Error::EnumerationCap { .. })));
    }

    #[test]
    fn index_multiplicative_on_coprime_levels() {
        let f = FieldDescriptor::new(1).unwrap();
        let a = ideal(&f, "1+1*w");
        let b = ideal(&f, "3");
        let ab = a.mul(&b, &f);
        assert_eq!(
            index_principal(&ab, &f).unwrap(),
            index_principal(&a, &f).unwrap() * index_principal(&b, &f).unwrap()
        );
    }

    #[test]
    fn cusp_counts_match_examples() {
        let f = FieldDescriptor::new(1).unwrap();
        for (lvl, kappa) in [("3", 20u64), ("5", 144), ("2+1*w", 6)] {
            let spec = SubgroupSpec::principal(ideal(&f, lvl), &f).unwrap();
            let rep = cusp_count(&spec, true).unwrap();
            assert_eq!(rep.kappa, BigInt::from(kappa), "level {lvl}");
            assert_eq!(rep.formula_value, Some(BigInt::from(kappa)));
        }
    }

    #[test]
    fn cusp_oracle_below_threshold() {
        let f = FieldDescriptor::new(1).unwrap();
        // -4 lies in (1+i), so the formula refuses and the oracle runs.
        let lvl = ideal(&f, "1+1*w");
        assert!(!formula_applicable(&lvl));
        assert!(matches!(cusp_count_formula(&lvl, &f), Err(Error::FormulaBelowThreshold)));
        let spec = SubgroupSpec::principal(lvl, &f).unwrap();
        let rep = cusp_count(&spec, false).unwrap();
        assert_eq!(rep.method, CuspMethod::OrbitOracle);
        assert_eq!(rep.kappa, BigInt::from(3u32));
    }

    #[test]
    fn torsion_free_examples() {
        let f = FieldDescriptor::new(1).unwrap();
        let check = |lvl: &str| {
            let spec = SubgroupSpec::principal(ideal(&f, lvl), &f).unwrap();
            torsion_free_check(&spec).unwrap()
        };
        assert_eq!(check("2+1*w"), TorsionFreeness::CertifiedTorsionFree);
        assert_eq!(check("1+1*w"), TorsionFreeness::Inconclusive);
        assert_eq!(check("3"), TorsionFreeness::Inconclusive);
    }

    #[test]
    fn kernel_of_reduction_lands_in_level() {
        // Products of generator matrices that reduce to the identity have all
        // congruence entries inside the level ideal.
        let f = FieldDescriptor::new(1).unwrap();
        let lvl = ideal(&f, "2+1*w");
        let q = QuotientRing::new(&lvl, &f).unwrap();
        let t = mat2::gen_t();
        let idx = index_principal(&lvl, &f).unwrap().to_u64().unwrap();
        // t^(order of t mod a) reduces to identity.
        let mut p = t.clone();
        let mut k = 1;
        while !MatrixModA::reduce(&p, &q).is_identity(&q) {
            p = p.mul(&t, &f);
            k += 1;
            assert!(k <= idx);
        }
        let one = RingElement::one();
        assert!(lvl.contains(&p.e[0].sub(&one)));
        assert!(lvl.contains(&p.e[1]));
        assert!(lvl.contains(&p.e[2]));
        assert!(lvl.contains(&p.e[3].sub(&one)));
    }

    #[test]
    fn second_cusp_data_for_class_number_two() {
        let f = FieldDescriptor::new(5).unwrap();
        let cusps = cusp_data(&f).unwrap();
        assert_eq!(cusps.len(), 2);
        for c in &cusps {
            assert!(c.b_eta.det_is_one(&f));
            for t in &c.translations {
                assert!(t.det(&f).is_one(), "translation not unimodular");
            }
        }
        // Non-principal representative: no element of u has norm N(u).
        let u = &cusps[1].u_ideal;
        let n = u.norm().to_u64().unwrap();
        let has_gen = crate::quadfield::elements_of_norm_up_to(n, &f)
            .into_iter()
            .any(|x| x.norm(&f) == u.norm() && u.contains(&x));
        assert!(!has_gen, "second class representative must be non-principal");
    }
}
