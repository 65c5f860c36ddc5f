//! Hamiltonian functions: parsing, evaluation, gradients and the
//! Hamiltonian vector field `X = J_k ∇H`.
//!
//! `abs` is accepted but has a kink at zero; derivatives there are taken as
//! zero and carry no guarantee.

mod dual;
mod expr;
mod parser;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use dual::DualScalar;
pub use expr::{Expr, Func};

use crate::error::{Error, Result};
use crate::forms::OneForm;
use crate::structures::{
    apply, make_structure, BlockIndex, Sign, SignedBlockMap, StateVector, StructureId, BLOCKS,
};

/// A parsed Hamiltonian over the coordinates of `R^{8n}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExprAst {
    n: usize,
    root: Expr,
}

impl ExprAst {
    /// Wraps an existing tree, checking that its variables fit in `8n`.
    pub fn new(root: Expr, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidDimension(n));
        }
        let max = BLOCKS * n;
        let mut bad = None;
        root.visit_vars(&mut |a| {
            if a == 0 || a > max {
                bad.get_or_insert(a);
            }
        });
        match bad {
            Some(index) => Err(Error::VariableOutOfRange { index, max }),
            None => Ok(ExprAst { n, root }),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn root(&self) -> &Expr {
        &self.root
    }

    /// Re-validates after deserialization.
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: ExprAst = serde_json::from_str(text)?;
        ExprAst::new(raw.root, raw.n)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

impl fmt::Display for ExprAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.root.fmt(f)
    }
}

/// `(∂H/∂x_1, ..., ∂H/∂x_{8n})` at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientVector {
    n: usize,
    components: Vec<f64>,
}

impl GradientVector {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn components(&self) -> &[f64] {
        &self.components
    }

    /// `dH = Σ ∂H/∂x_a dx_a` as a covector.
    pub fn to_one_form(&self) -> OneForm<f64> {
        OneForm::from_components(self.n, &self.components).expect("gradient has length 8n")
    }

    pub fn to_state(&self) -> StateVector {
        StateVector::from_vec(self.n, self.components.clone()).expect("gradient has length 8n")
    }
}

/// The tangent vector `X(x)` of the Hamiltonian field.
pub type FieldValue = StateVector;

pub fn parse(source: &str, n: usize) -> Result<ExprAst> {
    if n == 0 {
        return Err(Error::InvalidDimension(n));
    }
    let root = parser::parse_expr(source, BLOCKS * n)?;
    Ok(ExprAst { n, root })
}

fn check_dims(h: &ExprAst, x: &StateVector) -> Result<()> {
    x.check_same_n(h.n)
}

pub fn eval(h: &ExprAst, x: &StateVector) -> Result<f64> {
    check_dims(h, x)?;
    dual::evaluate::<f64>(&h.root, x.components())
}

/// Value and gradient in one forward sweep.
pub fn eval_dual(h: &ExprAst, x: &StateVector) -> Result<DualScalar> {
    check_dims(h, x)?;
    dual::evaluate::<DualScalar>(&h.root, x.components())
}

pub fn grad(h: &ExprAst, x: &StateVector) -> Result<GradientVector> {
    let d = eval_dual(h, x)?;
    if let Some(a) = d.derivs.iter().position(|g| !g.is_finite()) {
        return Err(Error::Domain(format!("derivative with respect to x{} is not finite", a + 1)));
    }
    Ok(GradientVector {
        n: h.n,
        components: d.derivs,
    })
}

/// `X(x) = J ∇H(x)` for an explicit structure table.
pub fn hamiltonian_field_for(map: &SignedBlockMap, h: &ExprAst, x: &StateVector) -> Result<FieldValue> {
    Ok(apply(map, &grad(h, x)?.to_state()))
}

pub fn hamiltonian_field(id: StructureId, h: &ExprAst, x: &StateVector) -> Result<FieldValue> {
    hamiltonian_field_for(&make_structure(id), h, x)
}

/// One row of a Hamilton-equation table: `ẋ_target = sign · ∂H/∂x_source`
/// on every site.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RhsEntry {
    pub target: BlockIndex,
    pub source: BlockIndex,
    #[serde(serialize_with = "ser_sign")]
    pub sign: Sign,
}

fn ser_sign<S: serde::Serializer>(s: &Sign, ser: S) -> std::result::Result<S::Ok, S::Error> {
    ser.serialize_i8(s.value())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SignedDerivativeTable {
    pub rows: [RhsEntry; BLOCKS],
}

impl SignedDerivativeTable {
    /// Text rows `dx{c}/dt = ±dH/dx{s}` for every flat coordinate.
    pub fn render_rows(&self, n: usize) -> Vec<String> {
        let mut out = Vec::with_capacity(BLOCKS * n);
        for row in &self.rows {
            for i in 1..=n {
                out.push(format!(
                    "dx{}/dt = {}dH/dx{}",
                    row.target.get() * n + i,
                    row.sign.symbol(),
                    row.source.get() * n + i
                ));
            }
        }
        out
    }
}

/// Reads the Hamilton equations off the structure table: target block `c`
/// receives `sign(s)·∂H/∂x_s` from the block `s` with `σ(s) = c`.
pub fn rhs_table_for(map: &SignedBlockMap) -> Option<SignedDerivativeTable> {
    let mut rows = [RhsEntry {
        target: BlockIndex::new(0)?,
        source: BlockIndex::new(0)?,
        sign: Sign::Plus,
    }; BLOCKS];
    for (c, row) in BlockIndex::all().zip(rows.iter_mut()) {
        let (source, sign) = map.preimage(c)?;
        *row = RhsEntry {
            target: c,
            source,
            sign,
        };
    }
    Some(SignedDerivativeTable { rows })
}

pub fn rhs_table(id: StructureId) -> SignedDerivativeTable {
    rhs_table_for(&make_structure(id)).expect("structure tables are bijections")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::{solve_field, symplectic_form, to_matrix};
    use StructureId::*;

    fn st(n: usize, v: &[f64]) -> StateVector {
        StateVector::from_vec(n, v.to_vec()).unwrap()
    }

    fn at(n: usize, pairs: &[(usize, f64)]) -> StateVector {
        let mut x = StateVector::zeros(n);
        for &(a, v) in pairs {
            x.components_mut()[a - 1] = v;
        }
        x
    }

    #[test]
    fn eval_examples() {
        assert_eq!(eval(&parse("x1^2", 1).unwrap(), &at(1, &[(1, 3.0)])).unwrap(), 9.0);
        let h = parse("0.5*(x1^2+x2^2)", 1).unwrap();
        assert_eq!(eval(&h, &at(1, &[(1, 1.0)])).unwrap(), 0.5);
        assert_eq!(eval(&parse("sin(x2)", 1).unwrap(), &StateVector::zeros(1)).unwrap(), 0.0);
        assert!(eval(&h, &StateVector::zeros(2)).is_err());
    }

    #[test]
    fn domain_errors() {
        let z = StateVector::zeros(1);
        for src in ["log(x1)", "1/x1", "sqrt(x1 - 1)", "x1^0.5 + 0*x2", "x1^-1", "log(-1)", "exp(1000)"] {
            let h = parse(src, 1).unwrap();
            assert!(matches!(eval(&h, &z), Err(Error::Domain(_))), "{src}");
            assert!(matches!(grad(&h, &z), Err(Error::Domain(_))), "{src}");
        }
        // value fine, derivative infinite
        let h = parse("sqrt(x1)", 1).unwrap();
        assert_eq!(eval(&h, &z).unwrap(), 0.0);
        assert!(matches!(grad(&h, &z), Err(Error::Domain(_))));
    }

    #[test]
    fn powers() {
        let x = at(1, &[(1, 2.0), (2, 3.0)]);
        let g = grad(&parse("x1^3", 1).unwrap(), &x).unwrap();
        assert_eq!(g.components()[0], 12.0);
        let g = grad(&parse("x1^x2", 1).unwrap(), &x).unwrap();
        assert!((g.components()[0] - 3.0 * 4.0).abs() < 1e-12);
        assert!((g.components()[1] - 8.0 * 2f64.ln()).abs() < 1e-12);
        let g = grad(&parse("x1^1.5", 1).unwrap(), &x).unwrap();
        assert!((g.components()[0] - 1.5 * 2f64.sqrt()).abs() < 1e-12);
        // integer exponents accept negative bases
        assert_eq!(eval(&parse("x1^(1+1)", 1).unwrap(), &at(1, &[(1, -3.0)])).unwrap(), 9.0);
        assert_eq!(eval(&parse("x1^0", 1).unwrap(), &StateVector::zeros(1)).unwrap(), 1.0);
    }

    #[test]
    fn grad_examples() {
        let g = grad(&parse("x1^2", 1).unwrap(), &at(1, &[(1, 3.0)])).unwrap();
        assert_eq!(g.components(), &[6.0, 0., 0., 0., 0., 0., 0., 0.]);
        let g = grad(&parse("sin(x2)", 1).unwrap(), &StateVector::zeros(1)).unwrap();
        assert_eq!(g.components()[1], 1.0);
        let g = grad(&parse("abs(x1)", 1).unwrap(), &StateVector::zeros(1)).unwrap();
        assert_eq!(g.components()[0], 0.0);
    }

    #[test]
    fn field_examples() {
        let x = st(1, &[0.3, -1.0, 2.0, 0.0, 1.0, 4.0, 0.5, 9.0]);
        let f = hamiltonian_field(J1, &parse("x1", 1).unwrap(), &x).unwrap();
        assert_eq!(f, StateVector::basis(1, 2));

        let quad = parse("0.5*(x1^2+x2^2+x3^2+x4^2+x5^2+x6^2+x7^2+x8^2)", 1).unwrap();
        let x = st(1, &[1., 2., 3., 4., 5., 6., 7., 8.]);
        let f = hamiltonian_field(J1, &quad, &x).unwrap();
        assert_eq!(f.components(), &[-2., 1., -5., -6., 3., 4., -8., 7.]);

        for id in StructureId::ALL {
            let f = hamiltonian_field(id, &parse("3.5", 1).unwrap(), &x).unwrap();
            assert_eq!(f, StateVector::zeros(1));
        }
    }

    #[test]
    fn field_solves_interior_equation() {
        let h = parse("x1*x2 + sin(x3)*x8^2 + exp(x5/3)", 1).unwrap();
        let x = st(1, &[0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8]);
        for id in StructureId::ALL {
            let s = to_matrix(&symplectic_form(id, 1).unwrap()).unwrap();
            let solved = solve_field(&s, &grad(&h, &x).unwrap().to_one_form()).unwrap();
            let direct = hamiltonian_field(id, &h, &x).unwrap();
            assert!(solved.max_abs_diff(&direct) <= 1e-12);
        }
    }

    #[test]
    fn rhs_examples() {
        let b = |k: u8| BlockIndex::new(k).unwrap();
        let t1 = rhs_table(J1);
        assert_eq!(t1.rows[0], RhsEntry { target: b(0), source: b(1), sign: Sign::Minus });
        assert_eq!(t1.rows[4], RhsEntry { target: b(4), source: b(2), sign: Sign::Plus });
        assert_eq!(rhs_table(J2).rows[3], RhsEntry { target: b(3), source: b(6), sign: Sign::Minus });
        assert_eq!(rhs_table(J3).rows[3], RhsEntry { target: b(3), source: b(0), sign: Sign::Plus });
        assert!(rhs_table(J2).render_rows(1).contains(&"dx3/dt = +dH/dx1".to_string()));
    }

    #[test]
    fn rhs_table_mirrors_structure() {
        for id in StructureId::ALL {
            let j = make_structure(id);
            for row in rhs_table(id).rows {
                assert_eq!(j.target(row.source), row.target);
                assert_eq!(j.sign(row.source), row.sign);
            }
        }
    }

    #[test]
    fn ast_json_roundtrip() {
        let h = parse("x1^2 + 0.5*sin(x2) - x3/x4", 1).unwrap();
        let back = ExprAst::from_json(&h.to_json().unwrap()).unwrap();
        assert_eq!(back, h);
        let bad = r#"{"n":1,"root":{"var":9}}"#;
        assert!(matches!(ExprAst::from_json(bad), Err(Error::VariableOutOfRange { index: 9, .. })));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn leaf(dim: usize) -> impl Strategy<Value = Expr> {
            prop_oneof![
                (0.0f64..100.0).prop_map(Expr::Const),
                (0u32..10).prop_map(|k| Expr::Const(f64::from(k))),
                (1..=dim).prop_map(Expr::Var),
            ]
        }

        fn tree(dim: usize) -> impl Strategy<Value = Expr> {
            leaf(dim).prop_recursive(5, 40, 2, |inner| {
                let b = |e: Expr| Box::new(e);
                prop_oneof![
                    (inner.clone(), inner.clone()).prop_map(move |(x, y)| Expr::Add(b(x), b(y))),
                    (inner.clone(), inner.clone()).prop_map(move |(x, y)| Expr::Sub(b(x), b(y))),
                    (inner.clone(), inner.clone()).prop_map(move |(x, y)| Expr::Mul(b(x), b(y))),
                    (inner.clone(), inner.clone()).prop_map(move |(x, y)| Expr::Div(b(x), b(y))),
                    (inner.clone(), inner.clone()).prop_map(move |(x, y)| Expr::Pow(b(x), b(y))),
                    inner.clone().prop_map(move |x| Expr::Neg(b(x))),
                    (0usize..7, inner).prop_map(move |(k, x)| Expr::Call(Func::ALL[k], b(x))),
                ]
            })
        }

        proptest! {
            #[test]
            fn render_then_parse_is_identity(e in tree(16)) {
                let ast = ExprAst::new(e, 2).unwrap();
                let back = parse(&ast.to_string(), 2).unwrap();
                prop_assert_eq!(back, ast);
            }
        }
    }
}
