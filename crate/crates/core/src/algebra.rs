//! Real Clifford algebra `Cl(n)` with negative-definite generators
//! (`e_j^2 = -1`, `e_j e_k = -e_k e_j`), dense coefficient storage, and
//! para-vectors `x_0 + sum x_k e_k`.
//!
//! Basis blades are encoded as bitmasks: generator `e_k` lives at bit `k - 1`,
//! so the blade `e_{i_1} ... e_{i_k}` with `i_1 < ... < i_k` is the mask with
//! exactly those bits set, and mask `0` is the scalar unit.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{Error, Result};

/// Largest supported algebra dimension (2^16 coefficients).
pub const MAX_DIM: usize = 16;

type Coeffs = SmallVec<[f64; 8]>;

fn check_dim(dim: usize) -> Result<()> {
    if (1..=MAX_DIM).contains(&dim) {
        Ok(())
    } else {
        Err(Error::UnsupportedDimension(dim))
    }
}

/// A basis blade `e_A` of `Cl(n)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BladeIndex(u32);

impl BladeIndex {
    pub const SCALAR: BladeIndex = BladeIndex(0);

    pub fn new(bits: u32, dim: usize) -> Result<Self> {
        check_dim(dim)?;
        if (bits as u64) >= (1u64 << dim) {
            return Err(Error::InvalidBlade { bits, dim });
        }
        Ok(BladeIndex(bits))
    }

    /// The generator `e_k`, `1 <= k <= dim`.
    pub fn generator(k: usize, dim: usize) -> Result<Self> {
        if k == 0 || k > dim {
            return Err(Error::IndexOutOfRange {
                what: "generator",
                index: k,
                len: dim,
            });
        }
        Self::new(1 << (k - 1), dim)
    }

    /// Blade from a strictly increasing list of generator indices.
    pub fn from_generators(gens: &[usize], dim: usize) -> Result<Self> {
        let mut bits = 0u32;
        let mut last = 0;
        for &k in gens {
            if k <= last {
                return Err(crate::error::invalid(
                    "generator list",
                    "indices must be strictly increasing and >= 1",
                ));
            }
            bits |= BladeIndex::generator(k, dim)?.0;
            last = k;
        }
        Ok(BladeIndex(bits))
    }

    pub const fn bits(self) -> u32 {
        self.0
    }

    pub const fn grade(self) -> u32 {
        self.0.count_ones()
    }

    /// Generator indices in canonical (increasing) order.
    pub fn generators(self) -> impl Iterator<Item = usize> {
        let bits = self.0;
        (0..32).filter(move |b| bits & (1 << b) != 0).map(|b| b + 1)
    }
}

impl fmt::Display for BladeIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 == 0 {
            return write!(f, "1");
        }
        write!(f, "e")?;
        for g in self.generators() {
            write!(f, "{g}")?;
        }
        Ok(())
    }
}

/// Sign of `e_A e_B` after reordering into canonical order and contracting
/// repeated generators with `e_j^2 = -1`.
#[inline]
pub(crate) fn product_sign(a: u32, b: u32) -> f64 {
    // Pairs (i in A, j in B) with i > j need one transposition each.
    let mut swaps = 0u32;
    let mut shifted = a >> 1;
    while shifted != 0 {
        swaps += (shifted & b).count_ones();
        shifted >>= 1;
    }
    if (swaps + (a & b).count_ones()) & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Product of two basis blades: `e_a e_b = sign * e_{a XOR b}`.
pub fn blade_product(a: BladeIndex, b: BladeIndex, dim: usize) -> Result<(i8, BladeIndex)> {
    let a = BladeIndex::new(a.0, dim)?;
    let b = BladeIndex::new(b.0, dim)?;
    let sign = if product_sign(a.0, b.0) > 0.0 { 1 } else { -1 };
    Ok((sign, BladeIndex(a.0 ^ b.0)))
}

/// Sign picked up by a grade-`g` blade under conjugation: `(-1)^{g(g+1)/2}`.
#[inline]
pub fn conjugation_sign(grade: u32) -> f64 {
    match grade % 4 {
        0 | 3 => 1.0,
        _ => -1.0,
    }
}

/// An element of `Cl(n)`: `2^n` real coefficients indexed by [`BladeIndex`].
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MultivectorRepr", into = "MultivectorRepr")]
pub struct Multivector {
    dim: usize,
    coeffs: Coeffs,
}

impl Multivector {
    /// The zero element of `Cl(dim)`.
    ///
    /// # Panics
    ///
    /// If `dim` is outside `1..=16`.
    pub fn zero(dim: usize) -> Self {
        check_dim(dim).expect("multivector dimension");
        Multivector {
            dim,
            coeffs: SmallVec::from_elem(0.0, 1 << dim),
        }
    }

    pub fn scalar(dim: usize, value: f64) -> Self {
        let mut m = Self::zero(dim);
        m.coeffs[0] = value;
        m
    }

    pub fn from_blade(dim: usize, blade: BladeIndex, value: f64) -> Result<Self> {
        let blade = BladeIndex::new(blade.0, dim)?;
        let mut m = Self::zero(dim);
        m.coeffs[blade.0 as usize] = value;
        Ok(m)
    }

    /// `e_k` for `1 <= k <= dim`; `k = 0` gives the unit `e_0 = 1`.
    pub fn basis(dim: usize, k: usize) -> Result<Self> {
        if k == 0 {
            check_dim(dim)?;
            return Ok(Self::scalar(dim, 1.0));
        }
        Self::from_blade(dim, BladeIndex::generator(k, dim)?, 1.0)
    }

    pub fn from_coeffs(dim: usize, coeffs: Vec<f64>) -> Result<Self> {
        check_dim(dim)?;
        if coeffs.len() != 1 << dim {
            return Err(Error::CoefficientCount {
                expected: 1 << dim,
                got: coeffs.len(),
            });
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("multivector coefficients"));
        }
        Ok(Multivector {
            dim,
            coeffs: SmallVec::from_vec(coeffs),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub(crate) fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn coeff(&self, blade: BladeIndex) -> f64 {
        self.coeffs.get(blade.0 as usize).copied().unwrap_or(0.0)
    }

    pub fn set_coeff(&mut self, blade: BladeIndex, value: f64) -> Result<()> {
        let blade = BladeIndex::new(blade.0, self.dim)?;
        self.coeffs[blade.0 as usize] = value;
        Ok(())
    }

    /// Scalar part `Sc(x)`.
    pub fn sc(&self) -> f64 {
        self.coeffs[0]
    }

    /// Vector part `Vec(x)`: the grade-1 component.
    pub fn vec_part(&self) -> Multivector {
        self.grade_part(1)
    }

    pub fn grade_part(&self, grade: u32) -> Multivector {
        let mut out = Multivector::zero(self.dim);
        for (i, &c) in self.coeffs.iter().enumerate() {
            if (i as u32).count_ones() == grade {
                out.coeffs[i] = c;
            }
        }
        out
    }

    /// Clifford conjugation: the anti-automorphism with `e_k -> -e_k`.
    pub fn conjugate(&self) -> Multivector {
        let mut out = self.clone();
        for (i, c) in out.coeffs.iter_mut().enumerate() {
            *c *= conjugation_sign((i as u32).count_ones());
        }
        out
    }

    /// Euclidean norm of the coefficient vector.
    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn norm_sq(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_finite())
    }

    /// Geometric product, rejecting mismatched dimensions.
    pub fn checked_mul(&self, rhs: &Multivector) -> Result<Multivector> {
        if self.dim != rhs.dim {
            return Err(Error::DimensionMismatch {
                left: self.dim,
                right: rhs.dim,
            });
        }
        Ok(self.mul_same_dim(rhs))
    }

    fn mul_same_dim(&self, rhs: &Multivector) -> Multivector {
        let mut out = Multivector::zero(self.dim);
        for (a, &x) in self.coeffs.iter().enumerate() {
            if x == 0.0 {
                continue;
            }
            for (b, &y) in rhs.coeffs.iter().enumerate() {
                if y == 0.0 {
                    continue;
                }
                out.coeffs[a ^ b] += product_sign(a as u32, b as u32) * x * y;
            }
        }
        out
    }

    /// `e_k * self` for `k >= 1`; `k = 0` returns a copy.
    pub fn left_mul_generator(&self, k: usize) -> Multivector {
        if k == 0 {
            return self.clone();
        }
        let g = 1u32 << (k - 1);
        let mut out = Multivector::zero(self.dim);
        for (b, &y) in self.coeffs.iter().enumerate() {
            out.coeffs[g as usize ^ b] += product_sign(g, b as u32) * y;
        }
        out
    }

    /// `self * e_k` for `k >= 1`; `k = 0` returns a copy.
    pub fn right_mul_generator(&self, k: usize) -> Multivector {
        if k == 0 {
            return self.clone();
        }
        let g = 1u32 << (k - 1);
        let mut out = Multivector::zero(self.dim);
        for (a, &x) in self.coeffs.iter().enumerate() {
            out.coeffs[a ^ g as usize] += product_sign(a as u32, g) * x;
        }
        out
    }

    /// `self += factor * other`.
    pub fn axpy(&mut self, factor: f64, other: &Multivector) {
        assert_eq!(self.dim, other.dim, "multivector dimension mismatch");
        for (c, o) in self.coeffs.iter_mut().zip(other.coeffs.iter()) {
            *c += factor * o;
        }
    }

    /// Largest absolute coefficient outside grades 0 and 1.
    pub fn non_paravector_magnitude(&self) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(i, _)| (*i as u32).count_ones() > 1)
            .map(|(_, c)| c.abs())
            .fold(0.0, f64::max)
    }
}

impl fmt::Debug for Multivector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Multivector(Cl({}): {})", self.dim, self)
    }
}

impl fmt::Display for Multivector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (i, &c) in self.coeffs.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "{c}")?;
            if i != 0 {
                write!(f, "*{}", BladeIndex(i as u32))?;
            }
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

/// Wire form: `{"dim": n, "coeffs": {"<bitmask>": value, ...}}`, zero
/// coefficients omitted, keys in increasing bitmask order.
#[derive(Serialize, Deserialize)]
struct MultivectorRepr {
    dim: usize,
    coeffs: BTreeMap<u32, f64>,
}

impl From<Multivector> for MultivectorRepr {
    fn from(m: Multivector) -> Self {
        let coeffs = m
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != 0.0)
            .map(|(i, c)| (i as u32, *c))
            .collect();
        MultivectorRepr { dim: m.dim, coeffs }
    }
}

impl TryFrom<MultivectorRepr> for Multivector {
    type Error = Error;

    fn try_from(repr: MultivectorRepr) -> Result<Self> {
        check_dim(repr.dim)?;
        let mut m = Multivector::zero(repr.dim);
        for (bits, value) in repr.coeffs {
            if !value.is_finite() {
                return Err(Error::NonFinite("multivector coefficients"));
            }
            m.set_coeff(BladeIndex(bits), value)?;
        }
        Ok(m)
    }
}

impl Add for &Multivector {
    type Output = Multivector;
    fn add(self, rhs: &Multivector) -> Multivector {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl Add for Multivector {
    type Output = Multivector;
    fn add(mut self, rhs: Multivector) -> Multivector {
        self += &rhs;
        self
    }
}

impl Sub for &Multivector {
    type Output = Multivector;
    fn sub(self, rhs: &Multivector) -> Multivector {
        let mut out = self.clone();
        out -= rhs;
        out
    }
}

impl Sub for Multivector {
    type Output = Multivector;
    fn sub(mut self, rhs: Multivector) -> Multivector {
        self -= &rhs;
        self
    }
}

impl AddAssign<&Multivector> for Multivector {
    fn add_assign(&mut self, rhs: &Multivector) {
        self.axpy(1.0, rhs);
    }
}

impl SubAssign<&Multivector> for Multivector {
    fn sub_assign(&mut self, rhs: &Multivector) {
        self.axpy(-1.0, rhs);
    }
}

impl Neg for &Multivector {
    type Output = Multivector;
    fn neg(self) -> Multivector {
        self * -1.0
    }
}

impl Neg for Multivector {
    type Output = Multivector;
    fn neg(self) -> Multivector {
        self * -1.0
    }
}

impl Mul<f64> for &Multivector {
    type Output = Multivector;
    fn mul(self, rhs: f64) -> Multivector {
        let mut out = self.clone();
        out *= rhs;
        out
    }
}

impl Mul<f64> for Multivector {
    type Output = Multivector;
    fn mul(mut self, rhs: f64) -> Multivector {
        self *= rhs;
        self
    }
}

impl MulAssign<f64> for Multivector {
    fn mul_assign(&mut self, rhs: f64) {
        for c in self.coeffs.iter_mut() {
            *c *= rhs;
        }
    }
}

/// Geometric product.
///
/// # Panics
///
/// On dimension mismatch; use [`Multivector::checked_mul`] to get an error
/// instead.
impl Mul for &Multivector {
    type Output = Multivector;
    fn mul(self, rhs: &Multivector) -> Multivector {
        assert_eq!(self.dim, rhs.dim, "multivector dimension mismatch");
        self.mul_same_dim(rhs)
    }
}

impl Mul for Multivector {
    type Output = Multivector;
    fn mul(self, rhs: Multivector) -> Multivector {
        &self * &rhs
    }
}

/// A para-vector `x_0 + sum_k x_k e_k`, identified with a point of `R^{n+1}`.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ParaVector {
    comps: SmallVec<[f64; 4]>,
}

impl ParaVector {
    /// Components `(x_0, ..., x_n)`; requires `1 <= n <= 16` and finite entries.
    pub fn new(comps: Vec<f64>) -> Result<Self> {
        Self::from_slice(&comps)
    }

    pub fn from_slice(comps: &[f64]) -> Result<Self> {
        if comps.is_empty() {
            return Err(Error::Empty("para-vector components"));
        }
        check_dim(comps.len() - 1)?;
        if comps.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("para-vector components"));
        }
        Ok(ParaVector {
            comps: SmallVec::from_slice(comps),
        })
    }

    pub(crate) fn from_slice_unchecked(comps: &[f64]) -> Self {
        ParaVector {
            comps: SmallVec::from_slice(comps),
        }
    }

    pub fn zeros(dim: usize) -> Self {
        check_dim(dim).expect("para-vector dimension");
        ParaVector {
            comps: SmallVec::from_elem(0.0, dim + 1),
        }
    }

    /// Algebra dimension `n` (the para-vector has `n + 1` components).
    pub fn dim(&self) -> usize {
        self.comps.len() - 1
    }

    pub fn comps(&self) -> &[f64] {
        &self.comps
    }

    pub fn get(&self, i: usize) -> f64 {
        self.comps[i]
    }

    /// Copy with component `i` shifted by `delta`.
    pub fn shifted(&self, i: usize, delta: f64) -> ParaVector {
        let mut out = self.clone();
        out.comps[i] += delta;
        out
    }

    pub fn to_multivector(&self) -> Multivector {
        let mut m = Multivector::zero(self.dim());
        m.coeffs[0] = self.comps[0];
        for k in 1..self.comps.len() {
            m.coeffs[1 << (k - 1)] = self.comps[k];
        }
        m
    }

    /// Extracts the grade-0 and grade-1 parts, failing if any higher-grade
    /// coefficient exceeds `tol` in magnitude.
    pub fn from_multivector(m: &Multivector, tol: f64) -> Result<Self> {
        for (i, &c) in m.coeffs.iter().enumerate() {
            let grade = (i as u32).count_ones();
            if grade > 1 && c.abs() > tol {
                return Err(Error::NotParaVector { grade, coeff: c });
            }
        }
        let mut comps = SmallVec::with_capacity(m.dim + 1);
        comps.push(m.coeffs[0]);
        for k in 1..=m.dim {
            comps.push(m.coeffs[1 << (k - 1)]);
        }
        Ok(ParaVector { comps })
    }

    /// Euclidean norm `|x| = sqrt(sum x_k^2)`.
    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn norm_sq(&self) -> f64 {
        self.comps.iter().map(|c| c * c).sum()
    }

    pub fn dot(&self, other: &ParaVector) -> f64 {
        self.comps
            .iter()
            .zip(other.comps.iter())
            .map(|(a, b)| a * b)
            .sum()
    }

    pub fn scaled(&self, factor: f64) -> ParaVector {
        ParaVector {
            comps: self.comps.iter().map(|c| c * factor).collect(),
        }
    }

    pub fn conjugate(&self) -> ParaVector {
        let mut out = self.clone();
        for c in out.comps.iter_mut().skip(1) {
            *c = -*c;
        }
        out
    }
}

impl fmt::Debug for ParaVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ParaVector{:?}", self.comps.as_slice())
    }
}

impl TryFrom<Vec<f64>> for ParaVector {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        ParaVector::new(v)
    }
}

impl From<ParaVector> for Vec<f64> {
    fn from(p: ParaVector) -> Self {
        p.comps.to_vec()
    }
}

impl Add for &ParaVector {
    type Output = ParaVector;
    fn add(self, rhs: &ParaVector) -> ParaVector {
        assert_eq!(self.dim(), rhs.dim(), "para-vector dimension mismatch");
        ParaVector {
            comps: self.comps.iter().zip(rhs.comps.iter()).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ParaVector {
    type Output = ParaVector;
    fn sub(self, rhs: &ParaVector) -> ParaVector {
        assert_eq!(self.dim(), rhs.dim(), "para-vector dimension mismatch");
        ParaVector {
            comps: self.comps.iter().zip(rhs.comps.iter()).map(|(a, b)| a - b).collect(),
        }
    }
}

/// `sqrt(Sc(x xbar))`, equal to the Euclidean norm of the components.
pub fn para_norm(x: &ParaVector) -> f64 {
    x.norm()
}

/// Discrete Clifford-valued inner product `sum_i w_i conj(f_i) g_i`.
pub fn clifford_inner_product(
    f_samples: &[Multivector],
    g_samples: &[Multivector],
    weights: &[f64],
) -> Result<Multivector> {
    if f_samples.len() != g_samples.len() {
        return Err(Error::LengthMismatch {
            what: "inner product samples",
            left: f_samples.len(),
            right: g_samples.len(),
        });
    }
    if f_samples.len() != weights.len() {
        return Err(Error::LengthMismatch {
            what: "inner product weights",
            left: f_samples.len(),
            right: weights.len(),
        });
    }
    let Some(first) = f_samples.first() else {
        return Err(Error::Empty("inner product samples"));
    };
    if let Some(i) = weights.iter().position(|w| !(*w >= 0.0) || !w.is_finite()) {
        return Err(crate::error::invalid(
            "quadrature weights",
            format!("weight {i} is negative or non-finite"),
        ));
    }
    let mut acc = Multivector::zero(first.dim());
    for ((f, g), &w) in f_samples.iter().zip(g_samples).zip(weights) {
        let term = f.conjugate().checked_mul(g)?;
        acc.axpy(w, &term);
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(dim: usize, k: usize) -> Multivector {
        Multivector::basis(dim, k).unwrap()
    }

    #[test]
    fn generator_squares_to_minus_one() {
        let (s, b) = blade_product(BladeIndex(1), BladeIndex(1), 3).unwrap();
        assert_eq!((s, b), (-1, BladeIndex::SCALAR));
    }

    #[test]
    fn generators_anticommute() {
        assert_eq!(
            blade_product(BladeIndex(1), BladeIndex(2), 2).unwrap(),
            (1, BladeIndex(3))
        );
        assert_eq!(
            blade_product(BladeIndex(2), BladeIndex(1), 2).unwrap(),
            (-1, BladeIndex(3))
        );
    }

    #[test]
    fn scalar_is_identity_blade() {
        for b in 0..16 {
            assert_eq!(
                blade_product(BladeIndex::SCALAR, BladeIndex(b), 4).unwrap(),
                (1, BladeIndex(b))
            );
        }
    }

    #[test]
    fn blade_overflow_is_rejected() {
        assert_eq!(
            blade_product(BladeIndex(4), BladeIndex(1), 2),
            Err(Error::InvalidBlade { bits: 4, dim: 2 })
        );
    }

    #[test]
    fn one_plus_e1_times_one_minus_e1() {
        let one = Multivector::scalar(2, 1.0);
        let a = &one + &e(2, 1);
        let b = &one - &e(2, 1);
        assert_eq!(&a * &b, Multivector::scalar(2, 2.0));
    }

    #[test]
    fn e1_times_e12_is_minus_e2() {
        // e1 (e1 e2) = e1^2 e2 = -e2.
        let e12 = Multivector::from_blade(2, BladeIndex(3), 1.0).unwrap();
        assert_eq!(&e(2, 1) * &e12, -e(2, 2));
    }

    #[test]
    fn paravector_times_conjugate() {
        let x = ParaVector::new(vec![1.0, 1.0, 0.0]).unwrap().to_multivector();
        assert_eq!(&x * &x.conjugate(), Multivector::scalar(2, 2.0));
    }

    #[test]
    fn mismatched_product_errors() {
        let r = Multivector::zero(2).checked_mul(&Multivector::zero(3));
        assert_eq!(r, Err(Error::DimensionMismatch { left: 2, right: 3 }));
    }

    #[test]
    fn conjugation_on_low_grades() {
        assert_eq!(e(3, 2).conjugate(), -&e(3, 2));
        assert_eq!(Multivector::scalar(3, 1.0).conjugate(), Multivector::scalar(3, 1.0));
        let e12 = Multivector::from_blade(2, BladeIndex(3), 1.0).unwrap();
        assert_eq!(e12.conjugate(), -&e12);
        // conj(e1 e2) = conj(e2) conj(e1) = e2 e1
        assert_eq!(e12.conjugate(), &e(2, 2) * &e(2, 1));
    }

    #[test]
    fn scalar_and_vector_parts() {
        let x = &Multivector::scalar(2, 3.0) + &(&e(2, 1) * 2.0);
        assert_eq!(x.sc(), 3.0);
        assert_eq!(x.vec_part(), &e(2, 1) * 2.0);
        let e12 = Multivector::from_blade(2, BladeIndex(3), 1.0).unwrap();
        assert_eq!(e12.sc(), 0.0);
    }

    #[test]
    fn para_norm_examples() {
        assert_eq!(para_norm(&ParaVector::zeros(2)), 0.0);
        assert_eq!(para_norm(&ParaVector::new(vec![1.0, 1.0]).unwrap()), 2f64.sqrt());
        let x = ParaVector::new(vec![3.0, 4.0]).unwrap();
        assert_eq!(para_norm(&x), 5.0);
        let m = x.to_multivector();
        assert_eq!((&m * &m.conjugate()).sc().sqrt(), 5.0);
    }

    #[test]
    fn inner_product_examples() {
        let one = Multivector::scalar(2, 1.0);
        let ip = clifford_inner_product(&[one.clone(), one.clone()], &[one.clone(), one], &[0.5, 0.5])
            .unwrap();
        assert_eq!(ip, Multivector::scalar(2, 1.0));

        let ip = clifford_inner_product(&[e(2, 1)], &[e(2, 2)], &[1.0]).unwrap();
        let e12 = Multivector::from_blade(2, BladeIndex(3), 1.0).unwrap();
        assert_eq!(ip, -&e12);

        let ip = clifford_inner_product(&[e(2, 1)], &[e(2, 1)], &[1.0]).unwrap();
        assert_eq!(ip.sc(), 1.0);
    }

    #[test]
    fn inner_product_rejects_bad_input() {
        let one = Multivector::scalar(2, 1.0);
        assert!(matches!(
            clifford_inner_product(std::slice::from_ref(&one), &[], &[1.0]),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(matches!(
            clifford_inner_product(std::slice::from_ref(&one), std::slice::from_ref(&one), &[-1.0]),
            Err(Error::InvalidParameter { .. })
        ));
    }

    #[test]
    fn json_wire_format() {
        let mut m = Multivector::zero(3);
        m.set_coeff(BladeIndex(0), 1.5).unwrap();
        m.set_coeff(BladeIndex(2), -2.0).unwrap();
        m.set_coeff(BladeIndex(5), 0.25).unwrap();
        let s = serde_json::to_string(&m).unwrap();
        assert_eq!(s, r#"{"dim":3,"coeffs":{"0":1.5,"2":-2.0,"5":0.25}}"#);
        let back: Multivector = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn json_rejects_out_of_range_blade() {
        let r: std::result::Result<Multivector, _> =
            serde_json::from_str(r#"{"dim":2,"coeffs":{"4":1.0}}"#);
        assert!(r.is_err());
    }

    #[test]
    fn paravector_roundtrip_through_multivector() {
        let x = ParaVector::new(vec![0.5, -1.0, 2.0, 3.0]).unwrap();
        let back = ParaVector::from_multivector(&x.to_multivector(), 0.0).unwrap();
        assert_eq!(back, x);
        let e12 = Multivector::from_blade(3, BladeIndex(3), 1.0).unwrap();
        assert!(ParaVector::from_multivector(&e12, 1e-12).is_err());
    }
}
