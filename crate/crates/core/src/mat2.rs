//! 2x2 matrices over O_D and over F, plus the standard Bianchi group
//! generators a = [[0,-1],[1,0]], t = [[1,1],[0,1]], u = [[1,w],[0,1]].

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::quadfield::{FieldDescriptor, RingElement};

/// Row-major [[a, b], [c, d]] over O_D.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Mat2 {
    pub e: [RingElement; 4],
}

impl Mat2 {
    pub fn new(a: RingElement, b: RingElement, c: RingElement, d: RingElement) -> Self {
        Mat2 { e: [a, b, c, d] }
    }

    pub fn identity() -> Self {
        Mat2::new(RingElement::one(), RingElement::zero(), RingElement::zero(), RingElement::one())
    }

    pub fn from_i64(a: i64, b: i64, c: i64, d: i64) -> Self {
        Mat2::new(
            RingElement::from_int(a),
            RingElement::from_int(b),
            RingElement::from_int(c),
            RingElement::from_int(d),
        )
    }

    pub fn mul(&self, rhs: &Mat2, field: &FieldDescriptor) -> Mat2 {
        let m = |i: usize, j: usize, k: usize, l: usize| {
            self.e[i].mul(&rhs.e[j], field).add(&self.e[k].mul(&rhs.e[l], field))
        };
        Mat2 { e: [m(0, 0, 1, 2), m(0, 1, 1, 3), m(2, 0, 3, 2), m(2, 1, 3, 3)] }
    }

    pub fn det(&self, field: &FieldDescriptor) -> RingElement {
        self.e[0].mul(&self.e[3], field).sub(&self.e[1].mul(&self.e[2], field))
    }

    /// Inverse of a determinant-one matrix (the adjugate).
    pub fn inverse_unimodular(&self) -> Mat2 {
        Mat2::new(
            self.e[3].clone(),
            -self.e[1].clone(),
            -self.e[2].clone(),
            self.e[0].clone(),
        )
    }

    pub fn neg(&self) -> Mat2 {
        Mat2 { e: [-self.e[0].clone(), -self.e[1].clone(), -self.e[2].clone(), -self.e[3].clone()] }
    }

    pub fn is_identity(&self) -> bool {
        self.e[0].is_one() && self.e[1].is_zero() && self.e[2].is_zero() && self.e[3].is_one()
    }

    pub fn is_minus_identity(&self) -> bool {
        self.neg().is_identity()
    }

    pub fn trace(&self) -> RingElement {
        self.e[0].add(&self.e[3])
    }

    pub fn entry_bits(&self) -> u64 {
        self.e
            .iter()
            .map(|x| x.a.bits().max(x.b.bits()))
            .max()
            .unwrap_or(0)
    }
}

impl fmt::Display for Mat2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{};{},{}", self.e[0], self.e[1], self.e[2], self.e[3])
    }
}

/// Parses `a,b;c,d` with entries in `x+y*w` syntax.
pub fn parse_mat2(s: &str) -> Result<Mat2> {
    let rows: Vec<&str> = s.split(';').collect();
    if rows.len() != 2 {
        return Err(Error::Parse(format!("matrix `{s}` must have two `;`-separated rows")));
    }
    let mut entries = Vec::new();
    for row in rows {
        let cells: Vec<&str> = row.split(',').collect();
        if cells.len() != 2 {
            return Err(Error::Parse(format!("matrix row `{row}` must have two entries")));
        }
        for cell in cells {
            entries.push(crate::quadfield::parse_ring_element(cell)?);
        }
    }
    Ok(Mat2 { e: [entries[0].clone(), entries[1].clone(), entries[2].clone(), entries[3].clone()] })
}

pub fn gen_a() -> Mat2 {
    Mat2::from_i64(0, -1, 1, 0)
}

pub fn gen_t() -> Mat2 {
    Mat2::from_i64(1, 1, 0, 1)
}

pub fn gen_u() -> Mat2 {
    Mat2::new(
        RingElement::one(),
        RingElement::omega(),
        RingElement::zero(),
        RingElement::one(),
    )
}

/// Upper-triangular translation by z.
pub fn translation(z: &RingElement) -> Mat2 {
    Mat2::new(RingElement::one(), z.clone(), RingElement::zero(), RingElement::one())
}

/// diag(u, u^-1) for a unit u (conj(u) is the inverse since N(u) = 1).
pub fn unit_diagonal(u: &RingElement, field: &FieldDescriptor) -> Mat2 {
    debug_assert!(u.norm(field).is_one());
    Mat2::new(u.clone(), RingElement::zero(), RingElement::zero(), u.conj(field))
}

/// A 2x2 matrix over F with a common positive denominator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FracMat2 {
    pub num: Mat2,
    pub den: BigInt,
}

impl FracMat2 {
    pub fn from_integral(m: Mat2) -> Self {
        FracMat2 { num: m, den: BigInt::one() }
    }

    pub fn identity() -> Self {
        FracMat2::from_integral(Mat2::identity())
    }

    pub fn normalize(mut self) -> Self {
        let mut g = self.den.clone();
        for x in &self.num.e {
            g = g.gcd(&x.a).gcd(&x.b);
        }
        if !g.is_one() && !g.is_zero() {
            for x in self.num.e.iter_mut() {
                x.a = &x.a / &g;
                x.b = &x.b / &g;
            }
            self.den = &self.den / &g;
        }
        if self.den.is_negative() {
            self.den = -self.den;
            self.num = self.num.neg();
        }
        self
    }

    pub fn mul(&self, rhs: &FracMat2, field: &FieldDescriptor) -> FracMat2 {
        FracMat2 { num: self.num.mul(&rhs.num, field), den: &self.den * &rhs.den }.normalize()
    }

    pub fn mul_mat(&self, rhs: &Mat2, field: &FieldDescriptor) -> FracMat2 {
        FracMat2 { num: self.num.mul(rhs, field), den: self.den.clone() }.normalize()
    }

    pub fn mat_mul(lhs: &Mat2, rhs: &FracMat2, field: &FieldDescriptor) -> FracMat2 {
        FracMat2 { num: lhs.mul(&rhs.num, field), den: rhs.den.clone() }.normalize()
    }

    /// Inverse assuming det = 1 over F: den^2 / det(num) = 1, so the inverse
    /// is adj(num)/den.
    pub fn inverse_unimodular(&self) -> FracMat2 {
        FracMat2 { num: self.num.inverse_unimodular(), den: self.den.clone() }
    }

    /// Returns the integral matrix when the denominator divides everything.
    pub fn to_integral(&self) -> Option<Mat2> {
        let s = self.clone().normalize();
        if s.den.is_one() {
            Some(s.num)
        } else {
            None
        }
    }

    pub fn det_is_one(&self, field: &FieldDescriptor) -> bool {
        let d = self.num.det(field);
        d.b.is_zero() && d.a == &self.den * &self.den
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadfield::FieldDescriptor;

    #[test]
    fn generator_relations_d1() {
        let f = FieldDescriptor::new(1).unwrap();
        let a = gen_a();
        let a2 = a.mul(&a, &f);
        assert!(a2.is_minus_identity());
        let ta = gen_t().mul(&a, &f);
        let ta3 = ta.mul(&ta, &f).mul(&ta, &f);
        assert!(ta3.is_minus_identity());
        let tu = gen_t().mul(&gen_u(), &f);
        let ut = gen_u().mul(&gen_t(), &f);
        assert_eq!(tu, ut);
    }

    #[test]
    fn parse_roundtrip() {
        let m = parse_mat2("1,1+1*w;0,1").unwrap();
        assert_eq!(m.e[1], RingElement::new(1, 1));
        let m = parse_mat2("0,-1;1,0").unwrap();
        assert_eq!(m, gen_a());
    }

    #[test]
    fn frac_inverse() {
        let f = FieldDescriptor::new(5).unwrap();
        let m = FracMat2 { num: Mat2::from_i64(3, 1, 5, 2), den: BigInt::one() };
        let inv = m.inverse_unimodular();
        let prod = m.mul(&inv, &f);
        assert_eq!(prod.normalize().num, Mat2::identity());
    }
}
