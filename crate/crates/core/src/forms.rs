//! A small exterior-calculus kernel on `R^{8n}`.
//!
//! Forms carry affine coefficients `c0 + Σ c_a x_a`, which is enough for the
//! canonical 1-form `ω = ½ Σ x_a dx_a`, its pullbacks `λ = J*(ω)`, and the
//! constant 2-forms `Φ = -dλ`. Symbolic derivation runs over exact rationals;
//! the same containers with `f64` coefficients hold covectors such as `dH`
//! evaluated at a point.

use std::collections::BTreeMap;
use std::fmt::{self, Debug, Display};
use std::ops::Neg;

use num_rational::Rational64;
use num_traits::{Num, Signed, ToPrimitive};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::structures::{
    make_structure, CoordIndex, SignedBlockMap, StateVector, StructureId, BLOCKS,
};

pub trait Scalar: Num + Neg<Output = Self> + Copy + Display + Debug + ToPrimitive {
    fn is_negative_value(&self) -> bool;
    fn abs_value(&self) -> Self;
}

impl Scalar for Rational64 {
    fn is_negative_value(&self) -> bool {
        self.is_negative()
    }

    fn abs_value(&self) -> Self {
        self.abs()
    }
}

impl Scalar for f64 {
    fn is_negative_value(&self) -> bool {
        *self < 0.0
    }

    fn abs_value(&self) -> Self {
        self.abs()
    }
}

/// `constant + Σ linear[a]·x_a`, keyed by 1-based flat index. Zero linear
/// entries are never stored.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineCoeff<T = Rational64> {
    constant: T,
    linear: BTreeMap<usize, T>,
}

impl<T: Scalar> AffineCoeff<T> {
    pub fn zero() -> Self {
        AffineCoeff {
            constant: T::zero(),
            linear: BTreeMap::new(),
        }
    }

    pub fn constant(c: T) -> Self {
        AffineCoeff {
            constant: c,
            linear: BTreeMap::new(),
        }
    }

    /// `c·x_a`.
    pub fn monomial(c: T, flat: usize) -> Self {
        let mut out = Self::zero();
        out.add_linear(flat, c);
        out
    }

    pub fn constant_part(&self) -> T {
        self.constant
    }

    pub fn linear_terms(&self) -> &BTreeMap<usize, T> {
        &self.linear
    }

    pub fn is_zero(&self) -> bool {
        self.constant.is_zero() && self.linear.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.linear.is_empty()
    }

    /// `∂/∂x_a` of the coefficient.
    pub fn partial(&self, flat: usize) -> T {
        self.linear.get(&flat).copied().unwrap_or_else(T::zero)
    }

    pub fn add_linear(&mut self, flat: usize, c: T) {
        let entry = self.linear.entry(flat).or_insert_with(T::zero);
        *entry = *entry + c;
        if entry.is_zero() {
            self.linear.remove(&flat);
        }
    }

    pub fn add_assign(&mut self, other: &AffineCoeff<T>) {
        self.constant = self.constant + other.constant;
        for (&a, &c) in &other.linear {
            self.add_linear(a, c);
        }
    }

    pub fn scaled(&self, s: T) -> Self {
        let mut out = Self::constant(self.constant * s);
        for (&a, &c) in &self.linear {
            out.add_linear(a, c * s);
        }
        out
    }

    pub fn negated(&self) -> Self {
        self.scaled(-T::one())
    }

    pub fn eval(&self, x: &StateVector) -> f64 {
        let c = self.constant.to_f64().unwrap_or(f64::NAN);
        self.linear.iter().fold(c, |acc, (&a, k)| {
            acc + k.to_f64().unwrap_or(f64::NAN) * x.components()[a - 1]
        })
    }

    /// A single signed monomial: `(sign is negative, magnitude rendered)`.
    fn as_monomial(&self) -> Option<(bool, String)> {
        let fmt_mag = |k: T, var: Option<usize>| -> String {
            let mag = k.abs_value();
            match (var, mag.is_one()) {
                (Some(a), true) => format!("x{a}"),
                (Some(a), false) => format!("{mag}*x{a}"),
                (None, _) => format!("{mag}"),
            }
        };
        match (self.constant.is_zero(), self.linear.len()) {
            (_, 0) => Some((
                self.constant.is_negative_value(),
                fmt_mag(self.constant, None),
            )),
            (true, 1) => {
                let (&a, &k) = self.linear.iter().next()?;
                Some((k.is_negative_value(), fmt_mag(k, Some(a))))
            }
            _ => None,
        }
    }

    fn render_sum(&self) -> String {
        let mut parts: Vec<(bool, String)> = Vec::new();
        if !self.constant.is_zero() {
            parts.push((
                self.constant.is_negative_value(),
                format!("{}", self.constant.abs_value()),
            ));
        }
        for (&a, &k) in &self.linear {
            let mag = k.abs_value();
            let body = if mag.is_one() {
                format!("x{a}")
            } else {
                format!("{mag}*x{a}")
            };
            parts.push((k.is_negative_value(), body));
        }
        join_signed(parts)
    }

    fn to_json(&self) -> Value {
        json!({
            "constant": self.constant.to_string(),
            "linear": self
                .linear
                .iter()
                .map(|(a, k)| json!({ "var": a, "coeff": k.to_string() }))
                .collect::<Vec<_>>(),
        })
    }
}

fn join_signed(parts: Vec<(bool, String)>) -> String {
    if parts.is_empty() {
        return "0".to_string();
    }
    let mut out = String::new();
    for (i, (neg, body)) in parts.into_iter().enumerate() {
        match (i, neg) {
            (0, false) => {}
            (0, true) => out.push('-'),
            (_, false) => out.push_str(" + "),
            (_, true) => out.push_str(" - "),
        }
        out.push_str(&body);
    }
    out
}

/// `Σ c_a dx_a` on `R^{8n}`.
#[derive(Debug, Clone, PartialEq)]
pub struct OneForm<T = Rational64> {
    n: usize,
    terms: BTreeMap<usize, AffineCoeff<T>>,
}

impl<T: Scalar> OneForm<T> {
    pub fn zero(n: usize) -> Self {
        OneForm {
            n,
            terms: BTreeMap::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        BLOCKS * self.n
    }

    pub fn terms(&self) -> &BTreeMap<usize, AffineCoeff<T>> {
        &self.terms
    }

    /// Coefficient of `dx_a` (zero if absent).
    pub fn coefficient(&self, flat: usize) -> AffineCoeff<T> {
        self.terms.get(&flat).cloned().unwrap_or_else(AffineCoeff::zero)
    }

    pub fn add_term(&mut self, flat: usize, coeff: &AffineCoeff<T>) {
        assert!(flat >= 1 && flat <= self.dim(), "dx{flat} out of range");
        let entry = self.terms.entry(flat).or_insert_with(AffineCoeff::zero);
        entry.add_assign(coeff);
        if entry.is_zero() {
            self.terms.remove(&flat);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Constant coefficients as a dense vector, or an error if any term
    /// depends on `x`.
    pub fn constant_components(&self) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim()];
        for (&a, c) in &self.terms {
            if !c.is_constant() {
                return Err(Error::NonConstantCoefficient(format!("dx{a}")));
            }
            out[a - 1] = c.constant_part().to_f64().unwrap_or(f64::NAN);
        }
        Ok(out)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "n": self.n,
            "terms": self
                .terms
                .iter()
                .map(|(a, c)| {
                    let mut v = c.to_json();
                    v["index"] = json!(a);
                    v
                })
                .collect::<Vec<_>>(),
        })
    }
}

impl OneForm<f64> {
    /// Covector with constant coefficients `Σ g_a dx_a`.
    pub fn from_components(n: usize, g: &[f64]) -> Result<Self> {
        if g.len() != BLOCKS * n {
            return Err(Error::DimensionMismatch {
                expected: BLOCKS * n,
                got: g.len(),
            });
        }
        let mut f = OneForm::zero(n);
        for (i, &c) in g.iter().enumerate() {
            if c != 0.0 {
                f.add_term(i + 1, &AffineCoeff::constant(c));
            }
        }
        Ok(f)
    }
}

impl<T: Scalar> Display for OneForm<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts = self
            .terms
            .iter()
            .map(|(a, c)| match c.as_monomial() {
                Some((neg, mag)) if mag == "1" => (neg, format!("dx{a}")),
                Some((neg, mag)) => (neg, format!("{mag}*dx{a}")),
                None => (false, format!("({})*dx{a}", c.render_sum())),
            })
            .collect();
        f.write_str(&join_signed(parts))
    }
}

/// `Σ_{a<b} c_ab dx_a∧dx_b` on `R^{8n}`; keys are always stored with `a < b`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoForm<T = Rational64> {
    n: usize,
    terms: BTreeMap<(usize, usize), AffineCoeff<T>>,
}

impl<T: Scalar> TwoForm<T> {
    pub fn zero(n: usize) -> Self {
        TwoForm {
            n,
            terms: BTreeMap::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &BTreeMap<(usize, usize), AffineCoeff<T>> {
        &self.terms
    }

    /// Adds `coeff·dx_a∧dx_b`, folding `a > b` onto `-coeff·dx_b∧dx_a`.
    pub fn add_term(&mut self, a: usize, b: usize, coeff: &AffineCoeff<T>) {
        let dim = BLOCKS * self.n;
        assert!(a >= 1 && a <= dim && b >= 1 && b <= dim, "index out of range");
        if a == b {
            return;
        }
        let (key, c) = if a < b {
            ((a, b), coeff.clone())
        } else {
            ((b, a), coeff.negated())
        };
        let entry = self.terms.entry(key).or_insert_with(AffineCoeff::zero);
        entry.add_assign(&c);
        if entry.is_zero() {
            self.terms.remove(&key);
        }
    }

    /// `Φ(e_a, e_b)` as an affine coefficient, for any ordering of `a`, `b`.
    pub fn value(&self, a: usize, b: usize) -> AffineCoeff<T> {
        match a.cmp(&b) {
            std::cmp::Ordering::Equal => AffineCoeff::zero(),
            std::cmp::Ordering::Less => self
                .terms
                .get(&(a, b))
                .cloned()
                .unwrap_or_else(AffineCoeff::zero),
            std::cmp::Ordering::Greater => self
                .terms
                .get(&(b, a))
                .map(AffineCoeff::negated)
                .unwrap_or_else(AffineCoeff::zero),
        }
    }

    pub fn negated(&self) -> Self {
        TwoForm {
            n: self.n,
            terms: self
                .terms
                .iter()
                .map(|(k, c)| (*k, c.negated()))
                .collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn to_json(&self) -> Value {
        json!({
            "n": self.n,
            "terms": self
                .terms
                .iter()
                .map(|((a, b), c)| {
                    let mut v = c.to_json();
                    v["pair"] = json!([a, b]);
                    v
                })
                .collect::<Vec<_>>(),
        })
    }
}

impl<T: Scalar> Display for TwoForm<T> {
    /// Single-monomial terms are printed with a positive coefficient, flipping
    /// the wedge order when the stored coefficient is negative.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts = self
            .terms
            .iter()
            .map(|(&(a, b), c)| match c.as_monomial() {
                Some((neg, mag)) => {
                    let (p, q) = if neg { (b, a) } else { (a, b) };
                    if mag == "1" {
                        (false, format!("dx{p}^dx{q}"))
                    } else {
                        (false, format!("{mag}*dx{p}^dx{q}"))
                    }
                }
                None => (false, format!("({})*dx{a}^dx{b}", c.render_sum())),
            })
            .collect();
        f.write_str(&join_signed(parts))
    }
}

/// `ω = ½ Σ_{a=1}^{8n} x_a dx_a`.
pub fn canonical_one_form(n: usize) -> Result<OneForm> {
    if n == 0 {
        return Err(Error::InvalidDimension(n));
    }
    let half = Rational64::new(1, 2);
    let mut f = OneForm::zero(n);
    for a in 1..=BLOCKS * n {
        f.add_term(a, &AffineCoeff::monomial(half, a));
    }
    Ok(f)
}

/// Applies the dual structure to the `dx` factors: `c_a dx_a ↦ c_a·sign·dx_{σ(a)}`.
/// Coefficients are left untouched.
pub fn pullback_one_form<T: Scalar>(map: &SignedBlockMap, f: &OneForm<T>) -> OneForm<T> {
    let n = f.n;
    let mut out = OneForm::zero(n);
    for (&a, c) in &f.terms {
        let coord = CoordIndex::from_flat(a, n).expect("form index within 8n");
        let target = map.target(coord.block()).get() * n + coord.site();
        let c = match map.sign(coord.block()).value() {
            1 => c.clone(),
            _ => c.negated(),
        };
        out.add_term(target, &c);
    }
    out
}

/// `d(Σ c_a dx_a) = Σ_a Σ_b (∂c_a/∂x_b) dx_b∧dx_a`.
pub fn exterior_derivative<T: Scalar>(f: &OneForm<T>) -> TwoForm<T> {
    let mut out = TwoForm::zero(f.n);
    for (&a, c) in &f.terms {
        for (&b, &k) in c.linear_terms() {
            out.add_term(b, a, &AffineCoeff::constant(k));
        }
    }
    out
}

/// `λ = J*(ω)` for the given structure table.
pub fn liouville_form_for(map: &SignedBlockMap, n: usize) -> Result<OneForm> {
    Ok(pullback_one_form(map, &canonical_one_form(n)?))
}

pub fn liouville_form(id: StructureId, n: usize) -> Result<OneForm> {
    liouville_form_for(&make_structure(id), n)
}

/// `Φ = -dλ = -d(J*(ω))` for the given structure table.
pub fn symplectic_form_for(map: &SignedBlockMap, n: usize) -> Result<TwoForm> {
    Ok(exterior_derivative(&liouville_form_for(map, n)?).negated())
}

pub fn symplectic_form(id: StructureId, n: usize) -> Result<TwoForm> {
    symplectic_form_for(&make_structure(id), n)
}

/// Dense antisymmetric matrix `S[a][b] = Φ(e_a, e_b)`, 0-based.
#[derive(Debug, Clone, PartialEq)]
pub struct SkewMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SkewMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        BLOCKS * self.n
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.data[a * self.dim() + b]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.dim()).map(<[f64]>::to_vec).collect()
    }

    pub fn is_antisymmetric(&self) -> bool {
        let d = self.dim();
        (0..d).all(|a| (0..d).all(|b| self.get(a, b) == -self.get(b, a)))
    }

    /// Determinant by Gaussian elimination with partial pivoting.
    pub fn determinant(&self) -> f64 {
        let d = self.dim();
        let mut m = self.data.clone();
        let mut det = 1.0;
        for col in 0..d {
            let pivot = (col..d)
                .max_by(|&i, &j| m[i * d + col].abs().total_cmp(&m[j * d + col].abs()))
                .unwrap_or(col);
            if m[pivot * d + col] == 0.0 {
                return 0.0;
            }
            if pivot != col {
                for k in 0..d {
                    m.swap(pivot * d + k, col * d + k);
                }
                det = -det;
            }
            let p = m[col * d + col];
            det *= p;
            for row in col + 1..d {
                let factor = m[row * d + col] / p;
                if factor != 0.0 {
                    for k in col..d {
                        m[row * d + k] -= factor * m[col * d + k];
                    }
                }
            }
        }
        det
    }
}

pub fn to_matrix<T: Scalar>(f: &TwoForm<T>) -> Result<SkewMatrix> {
    let d = BLOCKS * f.n;
    let mut data = vec![0.0; d * d];
    for (&(a, b), c) in &f.terms {
        if !c.is_constant() {
            return Err(Error::NonConstantCoefficient(format!("dx{a}^dx{b}")));
        }
        let v = c.constant_part().to_f64().unwrap_or(f64::NAN);
        data[(a - 1) * d + (b - 1)] = v;
        data[(b - 1) * d + (a - 1)] = -v;
    }
    Ok(SkewMatrix { n: f.n, data })
}

/// `i_X Φ = Φ(X, ·)`: the covector `b ↦ Σ_a X_a S[a][b]`.
pub fn interior_product(s: &SkewMatrix, x: &StateVector) -> Result<OneForm<f64>> {
    x.check_same_n(s.n)?;
    let d = s.dim();
    let xs = x.components();
    let comps: Vec<f64> = (0..d)
        .map(|b| (0..d).map(|a| xs[a] * s.get(a, b)).sum())
        .collect();
    OneForm::from_components(s.n, &comps)
}

/// Solves `i_X Φ = dH` for `X`.
///
/// Every column of a structure form has exactly one nonzero entry, so the
/// solve is an index relabeling: `X_a = dH_b / S[a][b]`. Anything else is
/// rejected as degenerate.
pub fn solve_field(s: &SkewMatrix, dh: &OneForm<f64>) -> Result<StateVector> {
    if dh.n() != s.n {
        return Err(Error::DimensionMismatch {
            expected: s.dim(),
            got: dh.dim(),
        });
    }
    let g = dh.constant_components()?;
    let d = s.dim();
    let mut x = vec![0.0; d];
    let mut filled = vec![false; d];
    for (b, gb) in g.iter().enumerate() {
        let mut nonzero = (0..d).filter(|&a| s.get(a, b) != 0.0);
        let a = match (nonzero.next(), nonzero.next()) {
            (Some(a), None) => a,
            _ => return Err(Error::DegenerateForm { row: b }),
        };
        if std::mem::replace(&mut filled[a], true) {
            return Err(Error::DegenerateForm { row: b });
        }
        x[a] = gb / s.get(a, b);
    }
    StateVector::from_vec(s.n, x)
}

/// How `Φ_k` relates to the metric and `J_k` on basis pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Compatibility {
    /// `Φ(e_a, e_b) = ⟨e_a, J e_b⟩` for all `a`, `b`.
    pub phi_equals_g_x_jy: bool,
    /// `Φ(e_a, e_b) = ⟨J e_a, e_b⟩` for all `a`, `b`.
    pub phi_equals_g_jx_y: bool,
}

pub fn compatibility(map: &SignedBlockMap, n: usize) -> Result<Compatibility> {
    let s = to_matrix(&symplectic_form_for(map, n)?)?;
    let j = map.dense_matrix(n);
    let d = s.dim();
    let pairs = || (0..d).flat_map(|a| (0..d).map(move |b| (a, b)));
    Ok(Compatibility {
        phi_equals_g_x_jy: pairs().all(|(a, b)| s.get(a, b) == j[a][b]),
        phi_equals_g_jx_y: pairs().all(|(a, b)| s.get(a, b) == j[b][a]),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use StructureId::*;

    fn r(num: i64, den: i64) -> Rational64 {
        Rational64::new(num, den)
    }

    /// `Σ (sign·½) x_{xb+1} dx_{db+1}` for n = 1.
    fn lambda_n1(pattern: &[(i64, usize, usize)]) -> OneForm {
        let mut f = OneForm::zero(1);
        for &(s, xb, db) in pattern {
            f.add_term(db + 1, &AffineCoeff::monomial(r(s, 2), xb + 1));
        }
        f
    }

    #[test]
    fn canonical_form_terms() {
        let w = canonical_one_form(1).unwrap();
        assert_eq!(w.coefficient(1), AffineCoeff::monomial(r(1, 2), 1));
        assert_eq!(w.coefficient(8), AffineCoeff::monomial(r(1, 2), 8));
        assert_eq!(canonical_one_form(2).unwrap().terms().len(), 16);
        assert!(matches!(canonical_one_form(0), Err(Error::InvalidDimension(0))));
    }

    #[test]
    fn liouville_forms_n1() {
        let w = canonical_one_form(1).unwrap();
        let l1 = pullback_one_form(&make_structure(J1), &w);
        let expected = lambda_n1(&[
            (1, 0, 1), (-1, 1, 0), (1, 2, 4), (1, 3, 5),
            (-1, 4, 2), (-1, 5, 3), (1, 6, 7), (-1, 7, 6),
        ]);
        assert_eq!(l1, expected);
        let l2 = pullback_one_form(&make_structure(J2), &w);
        let expected = lambda_n1(&[
            (1, 0, 2), (-1, 1, 4), (-1, 2, 0), (1, 3, 6),
            (1, 4, 1), (-1, 5, 7), (-1, 6, 3), (1, 7, 5),
        ]);
        assert_eq!(l2, expected);
        assert!(pullback_one_form(&make_structure(J1), &OneForm::<Rational64>::zero(1)).is_zero());
    }

    #[test]
    fn derivative_examples() {
        let mut f = OneForm::zero(1);
        f.add_term(2, &AffineCoeff::monomial(r(1, 1), 1));
        let df = exterior_derivative(&f);
        assert_eq!(df.terms().len(), 1);
        assert_eq!(df.value(1, 2), AffineCoeff::constant(r(1, 1)));

        assert!(exterior_derivative(&canonical_one_form(1).unwrap()).is_zero());

        let phi = exterior_derivative(&liouville_form(J1, 1).unwrap()).negated();
        let one = AffineCoeff::constant(r(1, 1));
        for (a, b) in [(2, 1), (5, 3), (6, 4), (8, 7)] {
            assert_eq!(phi.value(a, b), one);
        }
        assert_eq!(phi.terms().len(), 4);
    }

    #[test]
    fn symplectic_examples() {
        let one = AffineCoeff::constant(r(1, 1));
        let phi2 = symplectic_form(J2, 1).unwrap();
        for (a, b) in [(2, 5), (3, 1), (6, 8), (7, 4)] {
            assert_eq!(phi2.value(a, b), one);
        }
        let phi3 = symplectic_form(J3, 1).unwrap();
        for (a, b) in [(4, 1), (2, 6), (3, 7), (8, 5)] {
            assert_eq!(phi3.value(a, b), one);
        }
        assert_eq!(symplectic_form(J1, 2).unwrap().terms().len(), 8);
    }

    #[test]
    fn rendering() {
        assert_eq!(
            symplectic_form(J1, 1).unwrap().to_string(),
            "dx2^dx1 + dx5^dx3 + dx6^dx4 + dx8^dx7"
        );
        let l1 = liouville_form(J1, 1).unwrap().to_string();
        assert!(l1.starts_with("-1/2*x2*dx1 + 1/2*x1*dx2"), "{l1}");
        let mut f = OneForm::zero(1);
        f.add_term(3, &AffineCoeff::monomial(r(1, 1), 1));
        f.add_term(3, &AffineCoeff::constant(r(-2, 1)));
        assert_eq!(f.to_string(), "(-2 + x1)*dx3");
        assert_eq!(OneForm::<Rational64>::zero(1).to_string(), "0");
    }

    #[test]
    fn json_shape() {
        let v = liouville_form(J1, 1).unwrap().to_json();
        let first = &v["terms"][0];
        assert_eq!(first["index"], 1);
        assert_eq!(first["linear"][0]["var"], 2);
        assert_eq!(first["linear"][0]["coeff"], "-1/2");
        let p = symplectic_form(J1, 1).unwrap().to_json();
        assert_eq!(p["terms"][0]["pair"], json!([1, 2]));
        assert_eq!(p["terms"][0]["constant"], "-1");
    }

    #[test]
    fn matrix_view() {
        let s = to_matrix(&symplectic_form(J1, 1).unwrap()).unwrap();
        assert_eq!(s.get(1, 0), 1.0);
        assert_eq!(s.get(0, 1), -1.0);
        for id in StructureId::ALL {
            let s = to_matrix(&symplectic_form(id, 1).unwrap()).unwrap();
            assert!(s.is_antisymmetric());
            assert_eq!(s.determinant().abs(), 1.0);
        }
        let lambda = liouville_form(J1, 1).unwrap();
        let mut nonconst = TwoForm::zero(1);
        nonconst.add_term(1, 2, &lambda.coefficient(2));
        assert!(matches!(to_matrix(&nonconst), Err(Error::NonConstantCoefficient(_))));
    }

    #[test]
    fn interior_and_solve_examples() {
        let s = to_matrix(&symplectic_form(J1, 1).unwrap()).unwrap();
        let i2 = interior_product(&s, &StateVector::basis(1, 2)).unwrap();
        assert_eq!(i2.constant_components().unwrap(), [1.0, 0., 0., 0., 0., 0., 0., 0.]);
        let i1 = interior_product(&s, &StateVector::basis(1, 1)).unwrap();
        assert_eq!(i1.constant_components().unwrap(), [0.0, -1., 0., 0., 0., 0., 0., 0.]);
        assert!(interior_product(&s, &StateVector::zeros(1)).unwrap().is_zero());
        assert!(interior_product(&s, &StateVector::zeros(2)).is_err());

        let dx = |k: usize| {
            let mut g = vec![0.0; 8];
            g[k - 1] = 1.0;
            OneForm::from_components(1, &g).unwrap()
        };
        assert_eq!(solve_field(&s, &dx(1)).unwrap(), StateVector::basis(1, 2));
        let s3 = to_matrix(&symplectic_form(J3, 1).unwrap()).unwrap();
        let x = solve_field(&s3, &dx(4)).unwrap();
        assert_eq!(x.components(), &[-1.0, 0., 0., 0., 0., 0., 0., 0.]);
        assert_eq!(solve_field(&s, &OneForm::zero(1)).unwrap(), StateVector::zeros(1));

        let degenerate = to_matrix(&TwoForm::<Rational64>::zero(1)).unwrap();
        assert!(matches!(solve_field(&degenerate, &dx(1)), Err(Error::DegenerateForm { .. })));
    }

    #[test]
    fn compatibility_convention() {
        for n in 1..=3 {
            for id in StructureId::ALL {
                let c = compatibility(&make_structure(id), n).unwrap();
                assert!(c.phi_equals_g_x_jy);
                assert!(!c.phi_equals_g_jx_y);
            }
        }
    }

    /// Three-form `d` on affine 2-forms; keys sorted `a < b < c`.
    fn d_two(f: &TwoForm) -> BTreeMap<(usize, usize, usize), Rational64> {
        let mut out = BTreeMap::new();
        for (&(a, b), c) in f.terms() {
            for (&k, &v) in c.linear_terms() {
                if k == a || k == b {
                    continue;
                }
                let mut idx = [k, a, b];
                let mut sign = 1;
                for i in 0..3 {
                    for j in 0..2 - i {
                        if idx[j] > idx[j + 1] {
                            idx.swap(j, j + 1);
                            sign = -sign;
                        }
                    }
                }
                let e = out.entry((idx[0], idx[1], idx[2])).or_insert_with(|| r(0, 1));
                *e += v * r(sign, 1);
            }
        }
        out.retain(|_, v| *v != r(0, 1));
        out
    }

    #[test]
    fn d_two_detects_non_closed() {
        let mut f = TwoForm::zero(1);
        f.add_term(1, 2, &AffineCoeff::monomial(r(1, 1), 3));
        assert_eq!(d_two(&f).len(), 1);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn affine_one_form(n: usize) -> impl Strategy<Value = OneForm> {
            let d = 8 * n;
            proptest::collection::vec(
                (1..=d, -5i64..=5, proptest::collection::vec((1..=d, -5i64..=5, 1i64..=4), 0..4)),
                0..10,
            )
            .prop_map(move |terms| {
                let mut f = OneForm::zero(n);
                for (a, c0, lin) in terms {
                    let mut c = AffineCoeff::constant(r(c0, 1));
                    for (b, num, den) in lin {
                        c.add_linear(b, r(num, den));
                    }
                    f.add_term(a, &c);
                }
                f
            })
        }

        fn state(n: usize) -> impl Strategy<Value = StateVector> {
            proptest::collection::vec(-4i32..=4, 8 * n).prop_map(move |v| {
                StateVector::from_vec(n, v.into_iter().map(f64::from).collect()).unwrap()
            })
        }

        proptest! {
            #[test]
            fn d_squared_vanishes(f in affine_one_form(2)) {
                prop_assert!(d_two(&exterior_derivative(&f)).is_empty());
            }

            #[test]
            fn solve_inverts_interior(x in state(2), k in 0usize..3) {
                let s = to_matrix(&symplectic_form(StructureId::ALL[k], 2).unwrap()).unwrap();
                let back = solve_field(&s, &interior_product(&s, &x).unwrap()).unwrap();
                prop_assert_eq!(back, x);
            }
        }
    }
}
