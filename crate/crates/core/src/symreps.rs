//! Even symmetric powers Sym^{2m} of the standard SL2 representation,
//! realized as exact integer matrices on the lattice L(m) spanned by the
//! monomials e1^{2m-i} e2^i and their w-multiples, together with the dual
//! lattice L*(m), the block sum on L(m) + L*(m), and the cusp-invariant
//! vectors.
//!
//! Basis order is fixed once and for all as v_0, ..., v_{2m}, v'_0, ...,
//! v'_{2m} with v_i = e1^{2m-i} e2^i and v'_i = w * v_i; every matrix
//! downstream depends on it.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::congruence::CuspDatum;
use crate::error::{Error, Result};
use crate::mat2::{FracMat2, Mat2};
use crate::quadfield::{FieldDescriptor, RingElement};

/// Dense integer matrix, row-major.
pub type IMat = Vec<Vec<BigInt>>;

pub fn imat_identity(n: usize) -> IMat {
    let mut m = vec![vec![BigInt::zero(); n]; n];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = BigInt::one();
    }
    m
}

pub fn imat_mul(a: &IMat, b: &IMat) -> IMat {
    let n = a.len();
    let k = b.len();
    let m = if k == 0 { 0 } else { b[0].len() };
    let mut out = vec![vec![BigInt::zero(); m]; n];
    for i in 0..n {
        for l in 0..k {
            if a[i][l].is_zero() {
                continue;
            }
            let ail = &a[i][l];
            for j in 0..m {
                if !b[l][j].is_zero() {
                    out[i][j] += ail * &b[l][j];
                }
            }
        }
    }
    out
}

pub fn imat_transpose(a: &IMat) -> IMat {
    let n = a.len();
    let m = if n == 0 { 0 } else { a[0].len() };
    let mut out = vec![vec![BigInt::zero(); n]; m];
    for (i, row) in a.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            if !v.is_zero() {
                out[j][i] = v.clone();
            }
        }
    }
    out
}

pub fn imat_apply(a: &IMat, v: &[BigInt]) -> Vec<BigInt> {
    a.iter()
        .map(|row| row.iter().zip(v).map(|(x, y)| x * y).sum())
        .collect()
}

pub fn imat_trace(a: &IMat) -> BigInt {
    a.iter().enumerate().map(|(i, row)| row[i].clone()).sum()
}

pub fn imat_eq(a: &IMat, b: &IMat) -> bool {
    a == b
}

/// The ordered basis data of L(m).
#[derive(Debug, Clone, Serialize)]
pub struct LatticeBasis {
    pub m: u32,
    /// 2 * (2m + 1)
    pub rank: usize,
    pub labels: Vec<String>,
}

impl LatticeBasis {
    pub fn new(m: u32) -> Result<LatticeBasis> {
        if m < 1 {
            return Err(Error::WeightBelowOne(m));
        }
        let n = (2 * m + 1) as usize;
        let mut labels = Vec::with_capacity(2 * n);
        for i in 0..n {
            labels.push(format!("e1^{}e2^{}", 2 * m as usize - i, i));
        }
        for i in 0..n {
            labels.push(format!("w*e1^{}e2^{}", 2 * m as usize - i, i));
        }
        Ok(LatticeBasis { m, rank: 2 * n, labels })
    }
}

/// rho(m)(g) in both models: (2m+1)-dimensional over O_D and its
/// 2(2m+1)-dimensional realification over Z.
#[derive(Debug, Clone)]
pub struct IntegralRepMatrix {
    pub m: u32,
    pub g: Mat2,
    pub complex: Vec<Vec<RingElement>>,
    pub integral: IMat,
}

/// Column i of the complex model: coefficients of
/// (a e1 + c e2)^(2m-i) (b e1 + d e2)^i in the monomial basis.
fn sym_power_complex(g: &Mat2, m: u32, field: &FieldDescriptor) -> Vec<Vec<RingElement>> {
    let n = (2 * m + 1) as usize;
    let deg = 2 * m as usize;
    let a = &g.e[0];
    let b = &g.e[1];
    let c = &g.e[2];
    let d = &g.e[3];
    // pow1[j] = coefficients of (a e1 + c e2)^j, pow2[j] likewise for (b, d).
    let binom_pows = |x: &RingElement, y: &RingElement| -> Vec<Vec<RingElement>> {
        let mut pows = Vec::with_capacity(deg + 1);
        pows.push(vec![RingElement::one()]);
        for j in 1..=deg {
            let prev = &pows[j - 1];
            let mut cur = vec![RingElement::zero(); j + 1];
            for (k, coeff) in prev.iter().enumerate() {
                let cx = coeff.mul(x, field);
                cur[k] = cur[k].add(&cx);
                let cy = coeff.mul(y, field);
                cur[k + 1] = cur[k + 1].add(&cy);
            }
            pows.push(cur);
        }
        pows
    };
    let p1 = binom_pows(a, c);
    let p2 = binom_pows(b, d);
    let mut cols = Vec::with_capacity(n);
    for i in 0..n {
        let f = &p1[deg - i];
        let s = &p2[i];
        let mut col = vec![RingElement::zero(); n];
        for (k1, c1) in f.iter().enumerate() {
            if c1.is_zero() {
                continue;
            }
            for (k2, c2) in s.iter().enumerate() {
                if c2.is_zero() {
                    continue;
                }
                col[k1 + k2] = col[k1 + k2].add(&c1.mul(c2, field));
            }
        }
        cols.push(col);
    }
    // Transpose to row-major: entry (row k, col i).
    let mut rows = vec![vec![RingElement::zero(); n]; n];
    for (i, col) in cols.iter().enumerate() {
        for (k, v) in col.iter().enumerate() {
            rows[k][i] = v.clone();
        }
    }
    rows
}

/// Realification over the ordered basis v_0..v_{2m}, v'_0..v'_{2m}: writing
/// the complex model as X + w*Y, the integer model is
/// [[X, s*Y], [Y, X + t*Y]] with w^2 = s + t*w.
fn realify(complex: &[Vec<RingElement>], field: &FieldDescriptor) -> IMat {
    let n = complex.len();
    let (s, t) = field.omega_square();
    let s = BigInt::from(s);
    let t = BigInt::from(t);
    let mut out = vec![vec![BigInt::zero(); 2 * n]; 2 * n];
    for r in 0..n {
        for c in 0..n {
            let x = &complex[r][c].a;
            let y = &complex[r][c].b;
            out[r][c] = x.clone();
            out[r][n + c] = &s * y;
            out[n + r][c] = y.clone();
            out[n + r][n + c] = x + &t * y;
        }
    }
    out
}

/// rho(m)(g) as exact matrices; rejects non-unimodular g.
pub fn rho_matrix(g: &Mat2, m: u32, field: &FieldDescriptor) -> Result<IntegralRepMatrix> {
    if m < 1 {
        return Err(Error::WeightBelowOne(m));
    }
    if !g.det(field).is_one() {
        return Err(Error::NonUnimodular);
    }
    let complex = sym_power_complex(g, m, field);
    let integral = realify(&complex, field);
    Ok(IntegralRepMatrix { m, g: g.clone(), complex, integral })
}

/// Only the integral model, for hot paths.
pub fn rho_integral(g: &Mat2, m: u32, field: &FieldDescriptor) -> Result<IMat> {
    Ok(rho_matrix(g, m, field)?.integral)
}

/// The contragredient action on L*(m) and the block sum on L(m) + L*(m).
#[derive(Debug, Clone)]
pub struct DualLatticeRep {
    pub m: u32,
    pub g: Mat2,
    /// transpose of rho(g^-1): the action on the dual basis.
    pub dual_integral: IMat,
    /// block-diagonal action on L(m) + L*(m).
    pub block_sum: IMat,
}

pub fn dual_matrix(g: &Mat2, m: u32, field: &FieldDescriptor) -> Result<DualLatticeRep> {
    let primal = rho_matrix(g, m, field)?;
    let inv = rho_matrix(&g.inverse_unimodular(), m, field)?;
    let dual_integral = imat_transpose(&inv.integral);
    let n = primal.integral.len();
    let mut block_sum = vec![vec![BigInt::zero(); 2 * n]; 2 * n];
    for r in 0..n {
        for c in 0..n {
            block_sum[r][c] = primal.integral[r][c].clone();
            block_sum[n + r][n + c] = dual_integral[r][c].clone();
        }
    }
    Ok(DualLatticeRep { m, g: g.clone(), dual_integral, block_sum })
}

/// An integral vector fixed by the reduced peripheral generators at a cusp,
/// with its w-companion.
#[derive(Debug, Clone, Serialize)]
pub struct InvariantVector {
    pub cusp_index: usize,
    pub omega: Vec<BigInt>,
    pub omega_prime: Vec<BigInt>,
    /// Least positive scalar that cleared the denominators (as num/den).
    pub clearing_num: BigInt,
    pub clearing_den: BigInt,
}

/// The highest-weight vectors e1^{2m} and w*e1^{2m} transported to the cusp
/// by rho(B_eta^-1) and cleared to primitive integer vectors, then verified
/// against the cusp's peripheral generators.
pub fn invariant_vectors(
    cusp: &CuspDatum,
    m: u32,
    field: &FieldDescriptor,
) -> Result<InvariantVector> {
    let n = (2 * m + 1) as usize;
    let (omega, omega_prime, num, den) = if cusp.b_eta == FracMat2::identity() {
        let mut w0 = vec![BigInt::zero(); 2 * n];
        w0[0] = BigInt::one();
        let mut w1 = vec![BigInt::zero(); 2 * n];
        w1[n] = BigInt::one();
        (w0, w1, BigInt::one(), BigInt::one())
    } else {
        let binv = cusp.b_eta.inverse_unimodular();
        // rho of the numerator matrix is integral; the true rational matrix
        // is rho(num)/den^(2m), column-scaled consistently, so applying to a
        // basis vector and clearing content is exact.
        let rep = sym_power_complex(&binv.num, m, field);
        let real = realify(&rep, field);
        let mut w0 = vec![BigInt::zero(); 2 * n];
        w0[0] = BigInt::one();
        let mut w1 = vec![BigInt::zero(); 2 * n];
        w1[n] = BigInt::one();
        let v0 = imat_apply(&real, &w0);
        let v1 = imat_apply(&real, &w1);
        let primitive = |v: Vec<BigInt>| -> (Vec<BigInt>, BigInt) {
            let mut g = BigInt::zero();
            for x in &v {
                g = g.gcd(x);
            }
            if g.is_zero() {
                return (v, BigInt::one());
            }
            let mut out: Vec<BigInt> = v.iter().map(|x| x / &g).collect();
            if let Some(first) = out.iter().find(|x| !x.is_zero()) {
                if first.is_negative() {
                    for x in out.iter_mut() {
                        *x = -std::mem::take(x);
                    }
                }
            }
            (out, g)
        };
        let (p0, g0) = primitive(v0);
        let (p1, _g1) = primitive(v1);
        // Denominator of rho(B^-1) is den^(2m); the cleared scalar for omega.
        let mut den_pow = BigInt::one();
        for _ in 0..2 * m {
            den_pow *= &binv.den;
        }
        (p0, p1, den_pow, g0)
    };
    // Verify both vectors are fixed by the peripheral generators and by -I.
    for gen in cusp.translations.iter() {
        let rho = rho_integral(gen, m, field)?;
        if imat_apply(&rho, &omega) != omega || imat_apply(&rho, &omega_prime) != omega_prime {
            return Err(Error::FixedSpaceCheck(cusp.index));
        }
    }
    let minus_one = Mat2::from_i64(-1, 0, 0, -1);
    let rho = rho_integral(&minus_one, m, field)?;
    if imat_apply(&rho, &omega) != omega {
        return Err(Error::FixedSpaceCheck(cusp.index));
    }
    Ok(InvariantVector {
        cusp_index: cusp.index,
        omega,
        omega_prime,
        clearing_num: num,
        clearing_den: den,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::congruence::cusp_data;
    use crate::mat2::{gen_a, gen_t, gen_u, translation};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn f(d: u64) -> FieldDescriptor {
        FieldDescriptor::new(d).unwrap()
    }

    #[test]
    fn unipotent_sym2_is_pascal_triangle() {
        let field = f(1);
        let r = rho_matrix(&gen_t(), 1, &field).unwrap();
        // Columns: e1^2 ; e1^2 + e1e2 ; e1^2 + 2 e1e2 + e2^2.
        let expect: Vec<Vec<i64>> =
            vec![vec![1, 1, 1], vec![0, 1, 2], vec![0, 0, 1]];
        for (i, row) in expect.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                assert_eq!(r.complex[i][j], RingElement::from_int(*v), "({i},{j})");
            }
        }
    }

    #[test]
    fn plus_minus_identity_act_trivially() {
        for d in [1u64, 3, 7] {
            let field = f(d);
            for m in 1..=4 {
                let id = rho_matrix(&Mat2::identity(), m, &field).unwrap();
                assert_eq!(id.integral, imat_identity(2 * (2 * m as usize + 1)));
                let neg = rho_matrix(&Mat2::from_i64(-1, 0, 0, -1), m, &field).unwrap();
                assert_eq!(neg.integral, imat_identity(2 * (2 * m as usize + 1)));
            }
        }
    }

    fn random_group_element(rng: &mut ChaCha8Rng, field: &FieldDescriptor, len: usize) -> Mat2 {
        let gens = [gen_a(), gen_t(), gen_u()];
        let mut m = Mat2::identity();
        for _ in 0..len {
            let pick = rng.gen_range(0..6);
            let g = &gens[pick % 3];
            let g = if pick >= 3 { g.inverse_unimodular() } else { g.clone() };
            m = m.mul(&g, field);
        }
        m
    }

    #[test]
    fn homomorphism_exact_on_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for d in [1u64, 2, 3] {
            let field = f(d);
            for m in 1..=3 {
                for _ in 0..40 {
                    let g = random_group_element(&mut rng, &field, 6);
                    let h = random_group_element(&mut rng, &field, 6);
                    let gh = g.mul(&h, &field);
                    let rg = rho_matrix(&g, m, &field).unwrap();
                    let rh = rho_matrix(&h, m, &field).unwrap();
                    let rgh = rho_matrix(&gh, m, &field).unwrap();
                    assert_eq!(imat_mul(&rg.integral, &rh.integral), rgh.integral);
                }
            }
        }
    }

    #[test]
    fn dual_pairing_preserved() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let field = f(1);
        let m = 2;
        let n = 2 * (2 * m as usize + 1);
        for _ in 0..25 {
            let g = random_group_element(&mut rng, &field, 5);
            let rho = rho_matrix(&g, m, &field).unwrap();
            let dual = dual_matrix(&g, m, &field).unwrap();
            let v: Vec<BigInt> = (0..n).map(|_| BigInt::from(rng.gen_range(-5i64..=5))).collect();
            let phi: Vec<BigInt> = (0..n).map(|_| BigInt::from(rng.gen_range(-5i64..=5))).collect();
            let gv = imat_apply(&rho.integral, &v);
            let gphi = imat_apply(&dual.dual_integral, &phi);
            let lhs: BigInt = gphi.iter().zip(&gv).map(|(x, y)| x * y).sum();
            let rhs: BigInt = phi.iter().zip(&v).map(|(x, y)| x * y).sum();
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn dual_of_unipotent_is_transposed_inverse() {
        let field = f(1);
        let d = dual_matrix(&gen_t(), 1, &field).unwrap();
        let tinv = rho_matrix(&Mat2::from_i64(1, -1, 0, 1), 1, &field).unwrap();
        assert_eq!(d.dual_integral, imat_transpose(&tinv.integral));
    }

    #[test]
    fn traces_of_dual_and_primal_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for d in [1u64, 7] {
            let field = f(d);
            for m in 1..=3 {
                for _ in 0..20 {
                    let g = random_group_element(&mut rng, &field, 6);
                    let rho = rho_matrix(&g, m, &field).unwrap();
                    let dual = dual_matrix(&g, m, &field).unwrap();
                    assert_eq!(imat_trace(&rho.integral), imat_trace(&dual.dual_integral));
                }
            }
        }
    }

    #[test]
    fn rejects_non_unimodular() {
        let field = f(1);
        assert!(matches!(
            rho_matrix(&Mat2::from_i64(2, 0, 0, 1), 1, &field),
            Err(Error::NonUnimodular)
        ));
    }

    #[test]
    fn invariant_vector_at_infinity() {
        for d in [1u64, 2, 3] {
            let field = f(d);
            let cusps = cusp_data(&field).unwrap();
            for m in 1..=3 {
                let iv = invariant_vectors(&cusps[0], m, &field).unwrap();
                let n = (2 * m as usize) + 1;
                assert!(iv.omega[0].is_one());
                assert!(iv.omega.iter().skip(1).all(|x| x.is_zero()));
                assert!(iv.omega_prime[n].is_one());
                // Fixed by the two standard translations.
                for g in [gen_t(), gen_u(), translation(&RingElement::new(2, 3))] {
                    let rho = rho_integral(&g, m, &field).unwrap();
                    assert_eq!(imat_apply(&rho, &iv.omega), iv.omega);
                }
            }
        }
    }

    #[test]
    fn invariant_vectors_at_second_cusp() {
        let field = f(5);
        let cusps = cusp_data(&field).unwrap();
        let iv = invariant_vectors(&cusps[1], 1, &field).unwrap();
        assert!(iv.omega.iter().any(|x| !x.is_zero()));
        assert!(iv.omega_prime.iter().any(|x| !x.is_zero()));
    }

    #[test]
    fn block_sum_preserves_summands() {
        let field = f(1);
        let g = gen_a().mul(&gen_u(), &field);
        let d = dual_matrix(&g, 2, &field).unwrap();
        let n = 2 * (2 * 2 + 1);
        for r in 0..n {
            for c in 0..n {
                assert!(d.block_sum[r][n + c].is_zero());
                assert!(d.block_sum[n + r][c].is_zero());
            }
        }
    }
}
