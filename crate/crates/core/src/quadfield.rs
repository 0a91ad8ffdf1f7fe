//! Exact arithmetic for the imaginary quadratic field F = Q(sqrt(-D)) and its
//! ring of integers O_D, ideals in Hermite normal form, prime factorization,
//! and the hyperbolic covolume of the Bianchi orbifold.
//!
//! Elements are written a + b*w where w = sqrt(-D) for D = 1,2 mod 4 and
//! w = (1 + sqrt(-D))/2 for D = 3 mod 4, so that {1, w} is always a Z-basis
//! of O_D.

use std::f64::consts::PI;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};

/// Which generator w the Z-basis {1, w} of O_D uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum OmegaKind {
    /// w = sqrt(-D), for D = 1, 2 mod 4; w^2 = -D.
    SqrtMinusD,
    /// w = (1 + sqrt(-D))/2, for D = 3 mod 4; w^2 = w - (1+D)/4.
    HalfOnePlusSqrtMinusD,
}

/// The field Q(sqrt(-D)) with its derived constants.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FieldDescriptor {
    pub d: u64,
    pub omega_kind: OmegaKind,
    /// Field discriminant: -4D for D = 1,2 mod 4, -D for D = 3 mod 4.
    pub discriminant: i64,
    /// Class number, counted through reduced binary quadratic forms.
    pub class_number: u64,
    /// Number of units in O_D: 4 for D=1, 6 for D=3, 2 otherwise.
    pub unit_count: u64,
}

impl FieldDescriptor {
    /// Builds the field data for square-free D >= 1.  The artifact targets
    /// D <= 200; larger D is rejected.
    pub fn new(d: u64) -> Result<FieldDescriptor> {
        if d == 0 {
            return Err(Error::InvalidD(d));
        }
        if !is_square_free(d) {
            return Err(Error::NotSquareFree(d));
        }
        if d > 200 {
            return Err(Error::UnsupportedD(d));
        }
        let omega_kind = if d % 4 == 3 {
            OmegaKind::HalfOnePlusSqrtMinusD
        } else {
            OmegaKind::SqrtMinusD
        };
        let discriminant = match omega_kind {
            OmegaKind::SqrtMinusD => -4 * d as i64,
            OmegaKind::HalfOnePlusSqrtMinusD => -(d as i64),
        };
        let unit_count = match d {
            1 => 4,
            3 => 6,
            _ => 2,
        };
        Ok(FieldDescriptor {
            d,
            omega_kind,
            discriminant,
            class_number: class_number_by_reduced_forms(discriminant),
            unit_count,
        })
    }

    /// (s, t) with w^2 = s + t*w.
    pub fn omega_square(&self) -> (i64, i64) {
        match self.omega_kind {
            OmegaKind::SqrtMinusD => (-(self.d as i64), 0),
            OmegaKind::HalfOnePlusSqrtMinusD => (-((1 + self.d as i64) / 4), 1),
        }
    }

    /// Trace of w, i.e. w + conj(w).
    pub fn omega_trace(&self) -> i64 {
        match self.omega_kind {
            OmegaKind::SqrtMinusD => 0,
            OmegaKind::HalfOnePlusSqrtMinusD => 1,
        }
    }

    /// Generator of the unit group of O_D.
    pub fn fundamental_unit(&self) -> RingElement {
        match self.d {
            // i = w
            1 => RingElement::omega(),
            // zeta_6 = w
            3 => RingElement::omega(),
            _ => -RingElement::one(),
        }
    }
}

pub fn is_square_free(n: u64) -> bool {
    let mut n = n;
    let mut p = 2u64;
    while p * p <= n {
        if n % (p * p) == 0 {
            return false;
        }
        while n % p == 0 {
            n /= p;
        }
        p += 1;
    }
    true
}

/// Counts reduced forms (a, b, c) with b^2 - 4ac = disc, |b| <= a <= c,
/// and b >= 0 when |b| = a or a = c.
pub fn class_number_by_reduced_forms(disc: i64) -> u64 {
    assert!(disc < 0);
    let mut count = 0u64;
    let bound = ((-disc) as f64 / 3.0).sqrt() as i64 + 1;
    for a in 1..=bound {
        for b in -a..=a {
            let num = b * b - disc;
            if num % (4 * a) != 0 {
                continue;
            }
            let c = num / (4 * a);
            if c < a {
                continue;
            }
            if (b.abs() == a || a == c) && b < 0 {
                continue;
            }
            count += 1;
        }
    }
    count
}

/// An element a + b*w of O_D (or of F when used with a denominator elsewhere).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct RingElement {
    pub a: BigInt,
    pub b: BigInt,
}

impl RingElement {
    pub fn new<A: Into<BigInt>, B: Into<BigInt>>(a: A, b: B) -> Self {
        RingElement { a: a.into(), b: b.into() }
    }

    pub fn zero() -> Self {
        RingElement::new(0, 0)
    }

    pub fn one() -> Self {
        RingElement::new(1, 0)
    }

    pub fn omega() -> Self {
        RingElement::new(0, 1)
    }

    pub fn from_int<A: Into<BigInt>>(a: A) -> Self {
        RingElement::new(a, 0)
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.a.is_one() && self.b.is_zero()
    }

    pub fn add(&self, rhs: &Self) -> Self {
        RingElement::new(&self.a + &rhs.a, &self.b + &rhs.b)
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        RingElement::new(&self.a - &rhs.a, &self.b - &rhs.b)
    }

    /// Product, reducing w^2 = s + t*w.
    pub fn mul(&self, rhs: &Self, field: &FieldDescriptor) -> Self {
        let (s, t) = field.omega_square();
        let cross = &self.a * &rhs.b + &self.b * &rhs.a;
        let bb = &self.b * &rhs.b;
        RingElement::new(&self.a * &rhs.a + &bb * s, cross + bb * t)
    }

    pub fn conj(&self, field: &FieldDescriptor) -> Self {
        match field.omega_kind {
            OmegaKind::SqrtMinusD => RingElement::new(self.a.clone(), -&self.b),
            OmegaKind::HalfOnePlusSqrtMinusD => RingElement::new(&self.a + &self.b, -&self.b),
        }
    }

    /// N(x) = x * conj(x), a non-negative rational integer.
    pub fn norm(&self, field: &FieldDescriptor) -> BigInt {
        match field.omega_kind {
            OmegaKind::SqrtMinusD => &self.a * &self.a + BigInt::from(field.d) * &self.b * &self.b,
            OmegaKind::HalfOnePlusSqrtMinusD => {
                let q = BigInt::from((1 + field.d as i64) / 4);
                &self.a * &self.a + &self.a * &self.b + q * &self.b * &self.b
            }
        }
    }

    /// Tr(x) = x + conj(x).
    pub fn trace(&self, field: &FieldDescriptor) -> BigInt {
        BigInt::from(2) * &self.a + BigInt::from(field.omega_trace()) * &self.b
    }

    /// Exact quotient self/rhs when rhs divides self in O_D.
    pub fn div_exact(&self, rhs: &Self, field: &FieldDescriptor) -> Option<Self> {
        let n = rhs.norm(field);
        if n.is_zero() {
            return None;
        }
        let num = self.mul(&rhs.conj(field), field);
        let (qa, ra) = num.a.div_rem(&n);
        let (qb, rb) = num.b.div_rem(&n);
        if ra.is_zero() && rb.is_zero() {
            Some(RingElement::new(qa, qb))
        } else {
            None
        }
    }

    /// Complex embedding with w = sqrt(-D) resp. (1+sqrt(-D))/2.
    pub fn to_complex(&self, field: &FieldDescriptor) -> (f64, f64) {
        let sq = (field.d as f64).sqrt();
        let a = self.a.to_f64().unwrap_or(f64::NAN);
        let b = self.b.to_f64().unwrap_or(f64::NAN);
        match field.omega_kind {
            OmegaKind::SqrtMinusD => (a, b * sq),
            OmegaKind::HalfOnePlusSqrtMinusD => (a + b / 2.0, b * sq / 2.0),
        }
    }
}

impl std::ops::Neg for RingElement {
    type Output = RingElement;
    fn neg(self) -> RingElement {
        RingElement::new(-self.a, -self.b)
    }
}

impl fmt::Display for RingElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.b.is_zero() {
            return write!(f, "{}", self.a);
        }
        if self.a.is_zero() {
            return write!(f, "{}*w", self.b);
        }
        if self.b.is_negative() {
            write!(f, "{}{}*w", self.a, self.b)
        } else {
            write!(f, "{}+{}*w", self.a, self.b)
        }
    }
}

/// Parses `a`, `b*w`, `a+b*w`, `a-b*w`, `w`, `-w` style element syntax.
pub fn parse_ring_element(s: &str) -> Result<RingElement> {
    let s: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    if s.is_empty() {
        return Err(Error::Parse("empty element".into()));
    }
    // Split into signed terms.
    let mut terms = Vec::new();
    let mut cur = String::new();
    for (i, ch) in s.chars().enumerate() {
        if (ch == '+' || ch == '-') && i > 0 {
            terms.push(std::mem::take(&mut cur));
        }
        cur.push(ch);
    }
    terms.push(cur);
    let mut a = BigInt::zero();
    let mut b = BigInt::zero();
    for t in terms {
        let (coeff, is_w) = if let Some(pre) = t.strip_suffix("*w") {
            (pre.to_string(), true)
        } else if t == "w" || t == "+w" {
            ("1".to_string(), true)
        } else if t == "-w" {
            ("-1".to_string(), true)
        } else {
            (t.clone(), false)
        };
        let v: BigInt = coeff
            .parse()
            .map_err(|_| Error::Parse(format!("bad coefficient in element term `{t}`")))?;
        if is_w {
            b += v;
        } else {
            a += v;
        }
    }
    Ok(RingElement { a, b })
}

/// A nonzero ideal of O_D, stored through the column Hermite normal form
/// [[a, b], [0, d]] over the basis {1, w}: the ideal is Z*a + Z*(b + d*w).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct IdealRep {
    pub a: BigInt,
    pub b: BigInt,
    pub d: BigInt,
    /// Generators this ideal was constructed from, when known.
    pub generators: Vec<RingElement>,
}

impl IdealRep {
    pub fn from_generators(gens: &[RingElement], field: &FieldDescriptor) -> Result<IdealRep> {
        let mut cols: Vec<(BigInt, BigInt)> = Vec::new();
        let omega = RingElement::omega();
        for g in gens {
            cols.push((g.a.clone(), g.b.clone()));
            let gw = g.mul(&omega, field);
            cols.push((gw.a.clone(), gw.b.clone()));
        }
        let (a, b, d) = hnf_2xk(&cols).ok_or(Error::ZeroIdeal)?;
        Ok(IdealRep { a, b, d, generators: gens.to_vec() })
    }

    pub fn principal(g: RingElement, field: &FieldDescriptor) -> Result<IdealRep> {
        IdealRep::from_generators(std::slice::from_ref(&g), field)
    }

    /// Builds directly from Z-module columns; the caller must supply a set
    /// closed under multiplication by w.
    pub fn from_columns(cols: &[(BigInt, BigInt)]) -> Result<IdealRep> {
        let (a, b, d) = hnf_2xk(cols).ok_or(Error::ZeroIdeal)?;
        Ok(IdealRep { a, b, d, generators: Vec::new() })
    }

    pub fn norm(&self) -> BigInt {
        (&self.a * &self.d).abs()
    }

    pub fn is_unit_ideal(&self) -> bool {
        self.a.is_one() && self.d.is_one()
    }

    pub fn basis_elements(&self) -> [RingElement; 2] {
        [
            RingElement::new(self.a.clone(), BigInt::zero()),
            RingElement::new(self.b.clone(), self.d.clone()),
        ]
    }

    pub fn contains(&self, x: &RingElement) -> bool {
        if !(&x.b % &self.d).is_zero() {
            return false;
        }
        let k = &x.b / &self.d;
        ((&x.a - k * &self.b) % &self.a).is_zero()
    }

    pub fn contains_ideal(&self, other: &IdealRep) -> bool {
        other.basis_elements().iter().all(|e| self.contains(e))
    }

    pub fn same_module(&self, other: &IdealRep) -> bool {
        self.a == other.a && self.b == other.b && self.d == other.d
    }

    pub fn mul(&self, other: &IdealRep, field: &FieldDescriptor) -> IdealRep {
        let mut cols = Vec::with_capacity(4);
        for x in self.basis_elements().iter() {
            for y in other.basis_elements().iter() {
                let p = x.mul(y, field);
                cols.push((p.a, p.b));
            }
        }
        let (a, b, d) = hnf_2xk(&cols).expect("product of nonzero ideals is nonzero");
        IdealRep { a, b, d, generators: Vec::new() }
    }

    pub fn pow(&self, e: u32, field: &FieldDescriptor) -> IdealRep {
        let mut acc = IdealRep::from_generators(&[RingElement::one()], field).unwrap();
        for _ in 0..e {
            acc = acc.mul(self, field);
        }
        acc
    }

    pub fn conj(&self, field: &FieldDescriptor) -> IdealRep {
        let [e1, e2] = self.basis_elements();
        let c1 = e1.conj(field);
        let c2 = e2.conj(field);
        let cols = vec![(c1.a, c1.b), (c2.a, c2.b)];
        let (a, b, d) = hnf_2xk(&cols).expect("conjugate of nonzero ideal");
        IdealRep { a, b, d, generators: Vec::new() }
    }

    pub fn label(&self) -> String {
        if let Some(g) = self.generators.first() {
            if self.generators.len() == 1 {
                return format!("({g})");
            }
        }
        format!("[{}, {}+{}*w]", self.a, self.b, self.d)
    }
}

/// Column HNF of a 2-row integer matrix, returned as (a, b, d) for columns
/// (a, 0), (b, d) with a, d > 0 and 0 <= b < a.  Returns None for rank < 2.
pub fn hnf_2xk(cols: &[(BigInt, BigInt)]) -> Option<(BigInt, BigInt, BigInt)> {
    // Accumulate gcd of the w-coordinates with its Bezout column, folding the
    // eliminated columns into the integer coordinate.
    let mut d = BigInt::zero();
    let mut b = BigInt::zero();
    let mut a = BigInt::zero();
    for (x, y) in cols {
        if y.is_zero() {
            a = a.gcd(x);
            continue;
        }
        if d.is_zero() {
            d = y.clone();
            b = x.clone();
            continue;
        }
        let e = d.extended_gcd(y);
        // New second column: s*(b,d) + t*(x,y) with lead e.gcd.
        let nb = &e.x * &b + &e.y * x;
        // Eliminated combination has zero w-part.
        let elim = (y / &e.gcd) * &b - (&d / &e.gcd) * x;
        a = a.gcd(&elim);
        d = e.gcd;
        b = nb;
    }
    if d.is_zero() || a.is_zero() {
        return None;
    }
    if d.is_negative() {
        d = -d;
        b = -b;
    }
    if a.is_negative() {
        a = -a;
    }
    b = b.mod_floor(&a);
    Some((a, b, d))
}

/// One prime-power factor of an ideal.
#[derive(Debug, Clone, Serialize)]
pub struct PrimePower {
    pub prime: IdealRep,
    pub exponent: u32,
    /// Residue degree f with N(p) = p^f.
    pub residue_degree: u32,
    /// The rational prime below.
    pub rational_prime: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PrimeFactorization {
    pub factors: Vec<PrimePower>,
}

/// Factors a nonzero ideal into prime ideals: factor N(a) over Z by trial
/// division, split each rational prime by the Kronecker symbol of the
/// discriminant, then read off valuations by containment.
pub fn factor_ideal(ideal: &IdealRep, field: &FieldDescriptor) -> Result<PrimeFactorization> {
    if ideal.norm().is_zero() {
        return Err(Error::ZeroIdeal);
    }
    let n = ideal
        .norm()
        .to_u64()
        .ok_or_else(|| Error::Parse("ideal norm too large to factor".into()))?;
    let mut factors = Vec::new();
    for (p, _) in factor_u64(n) {
        for prime in primes_above(p, field) {
            let e = valuation(ideal, &prime, field);
            if e > 0 {
                let f = if prime.norm() == BigInt::from(p) { 1 } else { 2 };
                factors.push(PrimePower {
                    prime,
                    exponent: e,
                    residue_degree: f,
                    rational_prime: p,
                });
            }
        }
    }
    // Re-multiply and compare with the input HNF.
    let mut acc = IdealRep::from_generators(&[RingElement::one()], field).unwrap();
    for f in &factors {
        acc = acc.mul(&f.prime.pow(f.exponent, field), field);
    }
    assert!(
        acc.same_module(ideal),
        "ideal factorization failed to round-trip: {} vs {}",
        acc.label(),
        ideal.label()
    );
    Ok(PrimeFactorization { factors })
}

pub fn factor_u64(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut p = 2u64;
    while p * p <= n {
        if n % p == 0 {
            let mut e = 0;
            while n % p == 0 {
                n /= p;
                e += 1;
            }
            out.push((p, e));
        }
        p += 1;
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

/// The primes of O_D above a rational prime p.
pub fn primes_above(p: u64, field: &FieldDescriptor) -> Vec<IdealRep> {
    let disc = field.discriminant;
    let sym = kronecker_disc(disc, p);
    let pe = RingElement::from_int(p as i64);
    match sym {
        // Inert: (p) is prime of norm p^2.
        -1 => vec![IdealRep::principal(pe, field).unwrap()],
        // Ramified or split: p = (p, w - r) * (p, w - r'), roots of the
        // minimal polynomial of w mod p.
        _ => {
            let (s, t) = field.omega_square();
            // w^2 - t*w - s = 0 mod p
            let mut roots = Vec::new();
            for r in 0..p as i64 {
                if ((r * r - t * r - s) % p as i64).rem_euclid(p as i64) == 0 {
                    roots.push(r);
                }
            }
            let mut ideals = Vec::new();
            for r in roots {
                let gen = RingElement::new(-r, 1);
                let ideal =
                    IdealRep::from_generators(&[pe.clone(), gen], field).unwrap();
                if !ideals.iter().any(|i: &IdealRep| i.same_module(&ideal)) {
                    ideals.push(ideal);
                }
            }
            assert!(
                !ideals.is_empty(),
                "no root of the minimal polynomial mod {p} despite symbol {sym}"
            );
            ideals
        }
    }
}

/// Kronecker symbol (disc / p) for a fundamental discriminant.
pub fn kronecker_disc(disc: i64, p: u64) -> i32 {
    if p == 2 {
        if disc % 2 == 0 {
            return 0;
        }
        return match disc.rem_euclid(8) {
            1 | 7 => 1,
            _ => -1,
        };
    }
    let pm = p as i64;
    let a = disc.rem_euclid(pm) as u64;
    if a == 0 {
        return 0;
    }
    // Euler's criterion.
    let e = (p - 1) / 2;
    let r = pow_mod(a, e, p);
    if r == 1 {
        1
    } else {
        -1
    }
}

fn pow_mod(b: u64, mut e: u64, m: u64) -> u64 {
    let mut acc = 1u128;
    let mut bb = (b % m) as u128;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * bb % m as u128;
        }
        bb = bb * bb % m as u128;
        e >>= 1;
    }
    acc as u64
}

pub fn valuation(ideal: &IdealRep, prime: &IdealRep, field: &FieldDescriptor) -> u32 {
    let mut e = 0u32;
    let mut power = prime.clone();
    while power.contains_ideal(ideal) {
        e += 1;
        power = power.mul(prime, field);
    }
    e
}

/// Result of the covolume evaluation vol(X_D) = |disc|^(3/2) zeta_F(2) / (4 pi^2).
#[derive(Debug, Clone, Serialize)]
pub struct Covolume {
    pub value: f64,
    /// Proven bound on the truncation error, plus a float-rounding allowance.
    pub error_bound: f64,
    pub zeta_f_2: f64,
    pub l_value: f64,
    pub terms_used: u64,
}

/// Evaluates zeta_F(2) = zeta(2) * L(2, chi_disc) by a direct character sum
/// with an Abel-summation tail bound, and from it the covolume of X_D.
///
/// The tail bound, with B the maximal partial character sum over one period,
/// is B/(N+1)^2 after N full periods; the term count is chosen so the final
/// bound meets the requested number of decimal digits (within f64 limits).
pub fn covolume(field: &FieldDescriptor, precision: u32) -> Result<Covolume> {
    if precision < 6 {
        return Err(Error::InvalidPrecision(precision));
    }
    let precision = precision.min(12);
    let disc = field.discriminant;
    let q = disc.unsigned_abs();
    let chi: Vec<f64> = (0..q).map(|r| kronecker_value(disc, r) as f64).collect();
    // Maximal partial sum over one period.
    let mut b_max = 0.0f64;
    let mut acc = 0.0f64;
    for r in 1..=q {
        acc += chi[(r % q) as usize];
        b_max = b_max.max(acc.abs());
    }
    b_max = b_max.max(1.0);

    let zeta2 = PI * PI / 6.0;
    let scale = (q as f64).powf(1.5) * zeta2 / (4.0 * PI * PI);
    let target = 0.5 * 10f64.powi(-(precision as i32)) / scale.max(1.0);
    // Tail bound B/(N+1)^2 <= target.
    let mut n_terms = ((b_max / target).sqrt() as u64 + 2).max(q);
    // Round up to a whole number of periods so the partial-sum bound applies.
    n_terms = n_terms.div_ceil(q) * q;
    n_terms = n_terms.min(200_000_000);

    let mut l = 0.0f64;
    for n in 1..=n_terms {
        let c = chi[(n % q) as usize];
        if c != 0.0 {
            l += c / (n as f64 * n as f64);
        }
    }
    let tail = b_max / ((n_terms + 1) as f64 * (n_terms + 1) as f64);
    let zeta_f_2 = zeta2 * l;
    let value = scale * l;
    // Float-rounding allowance for the long sum.
    let rounding = 1e-14 * (n_terms as f64).ln().max(1.0) * value.abs().max(1.0);
    Ok(Covolume {
        value,
        error_bound: scale * tail + rounding,
        zeta_f_2,
        l_value: l,
        terms_used: n_terms,
    })
}

/// Kronecker symbol (disc / n) for n >= 0, used as the character value chi(n).
pub fn kronecker_value(disc: i64, n: u64) -> i32 {
    if n == 0 {
        return 0;
    }
    let mut result = 1i32;
    for (p, e) in factor_u64(n) {
        let s = kronecker_disc(disc, p);
        if s == 0 {
            return 0;
        }
        if e % 2 == 1 {
            result *= s;
        }
    }
    result
}

/// Enumerates the nonzero elements x = a + b*w with N(x) <= bound, up to sign
/// of nothing in particular: every lattice point in the norm ball.
pub fn elements_of_norm_up_to(bound: u64, field: &FieldDescriptor) -> Vec<RingElement> {
    let mut out = Vec::new();
    let d = field.d as i64;
    let (amax, bmax) = match field.omega_kind {
        OmegaKind::SqrtMinusD => (
            (bound as f64).sqrt() as i64 + 1,
            ((bound as f64) / d as f64).sqrt() as i64 + 1,
        ),
        OmegaKind::HalfOnePlusSqrtMinusD => (
            (bound as f64).sqrt() as i64 * 2 + 2,
            ((4.0 * bound as f64) / d as f64).sqrt() as i64 + 1,
        ),
    };
    for a in -amax..=amax {
        for b in -bmax..=bmax {
            if a == 0 && b == 0 {
                continue;
            }
            let x = RingElement::new(a, b);
            if x.norm(field) <= BigInt::from(bound) {
                out.push(x);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn field_constants_match_small_d() {
        let f1 = FieldDescriptor::new(1).unwrap();
        assert_eq!(f1.discriminant, -4);
        assert_eq!(f1.unit_count, 4);
        assert_eq!(f1.class_number, 1);
        assert_eq!(f1.omega_kind, OmegaKind::SqrtMinusD);

        let f3 = FieldDescriptor::new(3).unwrap();
        assert_eq!(f3.discriminant, -3);
        assert_eq!(f3.unit_count, 6);
        assert_eq!(f3.class_number, 1);

        // Reduced forms of discriminant -20: (1,0,5), (2,2,3) and (2,-2,3)
        // collapses to (2,2,3) by the boundary rule.
        let f5 = FieldDescriptor::new(5).unwrap();
        assert_eq!(f5.discriminant, -20);
        assert_eq!(f5.unit_count, 2);
        assert_eq!(f5.class_number, 2);
    }

    #[test]
    fn rejects_bad_d() {
        assert!(matches!(FieldDescriptor::new(0), Err(Error::InvalidD(_))));
        assert!(matches!(FieldDescriptor::new(4), Err(Error::NotSquareFree(_))));
        assert!(matches!(FieldDescriptor::new(12), Err(Error::NotSquareFree(_))));
        assert!(matches!(FieldDescriptor::new(201), Err(Error::NotSquareFree(_)) | Err(Error::UnsupportedD(_))));
    }

    #[test]
    fn known_class_numbers() {
        for (d, h) in [(2u64, 1u64), (5, 2), (6, 2), (7, 1), (10, 2), (11, 1), (13, 2), (14, 4), (15, 2), (23, 3)] {
            let f = FieldDescriptor::new(d).unwrap();
            assert_eq!(f.class_number, h, "class number of Q(sqrt(-{d}))");
        }
    }

    #[test]
    fn rational_integer_ideal_norm_is_square() {
        for d in [1u64, 2, 3, 7, 11, 5] {
            let f = FieldDescriptor::new(d).unwrap();
            for n in 1..=7i64 {
                let i = IdealRep::principal(RingElement::from_int(n), &f).unwrap();
                assert_eq!(i.norm(), BigInt::from(n * n));
            }
        }
    }

    #[test]
    fn gaussian_prime_splitting() {
        let f = FieldDescriptor::new(1).unwrap();
        // (2) = (1+i)^2
        let two = IdealRep::principal(RingElement::from_int(2), &f).unwrap();
        let fac = factor_ideal(&two, &f).unwrap();
        assert_eq!(fac.factors.len(), 1);
        assert_eq!(fac.factors[0].exponent, 2);
        assert_eq!(fac.factors[0].prime.norm(), BigInt::from(2));

        // (3) inert
        let three = IdealRep::principal(RingElement::from_int(3), &f).unwrap();
        let fac = factor_ideal(&three, &f).unwrap();
        assert_eq!(fac.factors.len(), 1);
        assert_eq!(fac.factors[0].exponent, 1);
        assert_eq!(fac.factors[0].prime.norm(), BigInt::from(9));

        // (5) split
        let five = IdealRep::principal(RingElement::from_int(5), &f).unwrap();
        let fac = factor_ideal(&five, &f).unwrap();
        assert_eq!(fac.factors.len(), 2);
        for pf in &fac.factors {
            assert_eq!(pf.exponent, 1);
            assert_eq!(pf.prime.norm(), BigInt::from(5));
        }
    }

    #[test]
    fn membership_matches_hnf() {
        let f = FieldDescriptor::new(1).unwrap();
        let p = IdealRep::principal(RingElement::new(2, 1), &f).unwrap();
        assert_eq!(p.norm(), BigInt::from(5));
        assert!(p.contains(&RingElement::from_int(5)));
        assert!(p.contains(&RingElement::new(2, 1)));
        assert!(!p.contains(&RingElement::from_int(2)));
        assert!(!p.contains(&RingElement::from_int(3)));
    }

    #[test]
    fn covolume_d1_matches_catalan_series() {
        // Independent oracle: vol(X_1) = G/3 with G the alternating sum
        // over odd squares; the alternating-series remainder bounds the tail.
        let mut g = 0.0f64;
        let mut sign = 1.0;
        for k in 0..2_000_000u64 {
            g += sign / ((2 * k + 1) as f64).powi(2);
            sign = -sign;
        }
        let f = FieldDescriptor::new(1).unwrap();
        let cov = covolume(&f, 8).unwrap();
        assert!((cov.value - g / 3.0).abs() < 1e-7, "{} vs {}", cov.value, g / 3.0);
        assert!((cov.value - 0.305322).abs() < 1e-5);
    }

    #[test]
    fn covolume_two_truncations_agree() {
        let f = FieldDescriptor::new(3).unwrap();
        let c1 = covolume(&f, 6).unwrap();
        let c2 = covolume(&f, 9).unwrap();
        assert!((c1.value - c2.value).abs() < 1e-6);
        assert!((c1.value - c2.value).abs() <= c1.error_bound);
        // Higher precision gives more terms and a smaller bound.
        assert!(c2.terms_used >= c1.terms_used);
        assert!(c2.error_bound <= c1.error_bound);
    }

    #[test]
    fn parse_element_forms() {
        assert_eq!(parse_ring_element("3").unwrap(), RingElement::new(3, 0));
        assert_eq!(parse_ring_element("2+1*w").unwrap(), RingElement::new(2, 1));
        assert_eq!(parse_ring_element("-1+2*w").unwrap(), RingElement::new(-1, 2));
        assert_eq!(parse_ring_element("w").unwrap(), RingElement::new(0, 1));
        assert_eq!(parse_ring_element("-w").unwrap(), RingElement::new(0, -1));
        assert_eq!(parse_ring_element("3-2*w").unwrap(), RingElement::new(3, -2));
    }

    proptest! {
        #[test]
        fn norm_is_multiplicative(d in prop::sample::select(vec![1u64, 2, 3, 7, 11, 5, 6]),
                                  a1 in -30i64..30, b1 in -30i64..30,
                                  a2 in -30i64..30, b2 in -30i64..30) {
            let f = FieldDescriptor::new(d).unwrap();
            let x = RingElement::new(a1, b1);
            let y = RingElement::new(a2, b2);
            prop_assert_eq!(x.mul(&y, &f).norm(&f), x.norm(&f) * y.norm(&f));
        }

        #[test]
        fn norm_positive_definite(d in prop::sample::select(vec![1u64, 2, 3, 7, 11]),
                                  a in -50i64..50, b in -50i64..50) {
            let f = FieldDescriptor::new(d).unwrap();
            let x = RingElement::new(a, b);
            let n = x.norm(&f);
            prop_assert!(n >= BigInt::zero());
            prop_assert_eq!(n.is_zero(), x.is_zero());
        }

        #[test]
        fn factorization_roundtrip(d in prop::sample::select(vec![1u64, 2, 3, 7, 11]),
                                   a in -9i64..9, b in -9i64..9) {
            prop_assume!(a != 0 || b != 0);
            let f = FieldDescriptor::new(d).unwrap();
            let ideal = IdealRep::principal(RingElement::new(a, b), &f).unwrap();
            // factor_ideal asserts the round-trip internally.
            factor_ideal(&ideal, &f).unwrap();
        }
    }
}
