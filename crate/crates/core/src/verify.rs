//! Certification catalog: every derived object checked against an
//! independent oracle.
//!
//! The checks take a [`StructureSet`] rather than the built-in tables so that
//! a tampered set can be fed in as a negative control.

use std::collections::BTreeMap;
use std::fmt;

use num_rational::Rational64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::corpus;
use crate::error::{Error, Result};
use crate::forms::{
    compatibility, liouville_form_for, pullback_one_form, solve_field, symplectic_form_for, to_matrix,
    AffineCoeff, OneForm, TwoForm,
};
use crate::hamiltonian::{eval, grad, hamiltonian_field_for, parse, rhs_table_for, Expr, ExprAst};
use crate::reference;
use crate::structures::{
    compose, negate, relation_report_for, verify_metric_invariance, verify_square, SignedBlockMap,
    StateVector, StructureId, StructureSet, BLOCKS,
};

pub const DEFAULT_SEED: u64 = 20_240_611;
pub const DEFAULT_POINTS: usize = 100;
pub const FIELD_TOLERANCE: f64 = 1e-12;
pub const FD_STEP: f64 = 1e-6;
pub const FD_RELATIVE: f64 = 1e-6;
pub const FD_ABSOLUTE: f64 = 1e-9;
/// Random states are drawn uniformly from `[-SAMPLE_RADIUS, SAMPLE_RADIUS]^{8n}`.
pub const SAMPLE_RADIUS: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckStatus {
    Pass,
    Fail,
    Info,
}

impl fmt::Display for CheckStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CheckStatus::Pass => "pass",
            CheckStatus::Fail => "fail",
            CheckStatus::Info => "info",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub structures: Vec<StructureId>,
    pub n: Vec<usize>,
    pub status: CheckStatus,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub records: Vec<CheckRecord>,
}

impl VerifyReport {
    /// True iff no pass-required check failed.
    pub fn passed(&self) -> bool {
        self.records.iter().all(|r| r.status != CheckStatus::Fail)
    }

    pub fn get(&self, name: &str) -> Option<&CheckRecord> {
        self.records.iter().find(|r| r.name == name)
    }

    pub fn render_text(&self) -> String {
        let width = self.records.iter().map(|r| r.name.len()).max().unwrap_or(0);
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&format!("[{}] {:width$}  {}\n", r.status, r.name, r.detail));
        }
        let failed = self.records.iter().filter(|r| r.status == CheckStatus::Fail).count();
        out.push_str(&format!(
            "{} checks, {} failed (seed {})\n",
            self.records.len(),
            failed,
            self.seed
        ));
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyOptions {
    pub ns: Vec<usize>,
    pub seed: u64,
    pub points: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            ns: vec![1, 2, 3],
            seed: DEFAULT_SEED,
            points: DEFAULT_POINTS,
        }
    }
}

/// Names of the catalog entries, in report order.
pub const CATALOG: [&str; 13] = [
    "structure-squares",
    "metric-invariance",
    "anticommutation",
    "relation-report",
    "tangent-table",
    "cotangent-table",
    "liouville-form",
    "symplectic-form",
    "nondegeneracy",
    "hamilton-equations",
    "field-oracle",
    "gradient-finite-difference",
    "compatibility-convention",
];

/// Accumulates per-(structure, n) failures for one check.
struct Tally {
    failures: Vec<String>,
}

impl Tally {
    fn new() -> Self {
        Tally { failures: Vec::new() }
    }

    fn expect(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if !ok {
            self.failures.push(what());
        }
    }

    fn finish(self, name: &str, ns: &[usize], ok_detail: String) -> CheckRecord {
        let (status, detail) = if self.failures.is_empty() {
            (CheckStatus::Pass, ok_detail)
        } else {
            let shown: Vec<_> = self.failures.iter().take(4).cloned().collect();
            let more = self.failures.len().saturating_sub(4);
            let mut d = shown.join("; ");
            if more > 0 {
                d.push_str(&format!("; and {more} more"));
            }
            (CheckStatus::Fail, d)
        };
        CheckRecord {
            name: name.to_string(),
            structures: StructureId::ALL.to_vec(),
            n: ns.to_vec(),
            status,
            detail,
        }
    }
}

fn half(sign: i8) -> Rational64 {
    Rational64::new(sign as i64, 2)
}

/// The reference Liouville form replicated on every site.
pub fn expected_liouville(id: StructureId, n: usize) -> OneForm {
    let mut f = OneForm::zero(n);
    for (sign, xb, db) in reference::liouville_terms(id) {
        for i in 1..=n {
            let coeff = AffineCoeff::monomial(half(sign), xb as usize * n + i);
            f.add_term(db as usize * n + i, &coeff);
        }
    }
    f
}

/// The reference symplectic form replicated on every site.
pub fn expected_symplectic(id: StructureId, n: usize) -> TwoForm {
    let mut f = TwoForm::zero(n);
    for (a, b) in reference::symplectic_terms(id) {
        for i in 1..=n {
            f.add_term(
                a as usize * n + i,
                b as usize * n + i,
                &AffineCoeff::constant(Rational64::from_integer(1)),
            );
        }
    }
    f
}

fn mentions(e: &Expr, var: usize) -> bool {
    let mut found = false;
    e.visit_vars(&mut |a| found |= a == var);
    found
}

/// Drops additive parts of `e` that do not depend on `x_var`. They are
/// constant along `x_var`, so the partial is unchanged, but they no longer
/// feed roundoff into a finite difference.
pub fn restrict_to_variable(e: &Expr, var: usize) -> Expr {
    let keep = |x: &Expr| mentions(x, var);
    let r = |x: &Expr| Box::new(restrict_to_variable(x, var));
    match e {
        Expr::Add(a, b) => match (keep(a), keep(b)) {
            (true, false) => restrict_to_variable(a, var),
            (false, true) => restrict_to_variable(b, var),
            (false, false) => Expr::Const(0.0),
            (true, true) => Expr::Add(r(a), r(b)),
        },
        Expr::Sub(a, b) => match (keep(a), keep(b)) {
            (true, false) => restrict_to_variable(a, var),
            (false, true) => Expr::Neg(r(b)),
            (false, false) => Expr::Const(0.0),
            (true, true) => Expr::Sub(r(a), r(b)),
        },
        Expr::Neg(a) => Expr::Neg(r(a)),
        Expr::Mul(a, b) if !keep(a) => Expr::Mul(a.clone(), r(b)),
        Expr::Mul(a, b) if !keep(b) => Expr::Mul(r(a), b.clone()),
        Expr::Div(a, b) if !keep(b) => Expr::Div(r(a), b.clone()),
        other if !keep(other) => Expr::Const(0.0),
        other => other.clone(),
    }
}

/// Central differences with step `step` in every coordinate, each taken on
/// the part of `h` that depends on that coordinate.
pub fn finite_difference_grad(h: &ExprAst, x: &StateVector, step: f64) -> Result<Vec<f64>> {
    (0..x.dim())
        .map(|a| {
            let part = ExprAst::new(restrict_to_variable(h.root(), a + 1), h.n())?;
            let mut plus = x.clone();
            let mut minus = x.clone();
            plus.components_mut()[a] += step;
            minus.components_mut()[a] -= step;
            let width = plus.components()[a] - minus.components()[a];
            Ok((eval(&part, &plus)? - eval(&part, &minus)?) / width)
        })
        .collect()
}

/// Whether `approx` matches `exact` within relative `FD_RELATIVE`, or
/// absolute `FD_ABSOLUTE` for components near zero.
pub fn fd_agrees(exact: f64, approx: f64) -> bool {
    let err = (exact - approx).abs();
    err <= FD_ABSOLUTE || err <= FD_RELATIVE * exact.abs()
}

pub fn random_state(rng: &mut ChaCha8Rng, n: usize) -> StateVector {
    let v = (0..BLOCKS * n)
        .map(|_| rng.gen_range(-SAMPLE_RADIUS..=SAMPLE_RADIUS))
        .collect();
    StateVector::from_vec(n, v).expect("length 8n")
}

fn check_squares(set: &StructureSet, ns: &[usize]) -> CheckRecord {
    let mut t = Tally::new();
    for id in StructureId::ALL {
        t.expect(verify_square(set.get(id)), || format!("{id}^2 != -I"));
    }
    t.finish(CATALOG[0], ns, "J1^2 = J2^2 = J3^2 = -I".into())
}

fn check_metric(set: &StructureSet, ns: &[usize]) -> CheckRecord {
    let mut t = Tally::new();
    for &n in ns {
        for id in StructureId::ALL {
            t.expect(verify_metric_invariance(set.get(id), n), || {
                format!("{id} is not an isometry at n={n}")
            });
        }
    }
    t.finish(
        CATALOG[1],
        ns,
        "<J e_a, J e_b> = <e_a, e_b> on every basis pair".into(),
    )
}

fn check_anticommutation(set: &StructureSet, ns: &[usize]) -> CheckRecord {
    let mut t = Tally::new();
    for (i, a) in StructureId::ALL.into_iter().enumerate() {
        for b in StructureId::ALL.into_iter().skip(i + 1) {
            let (ja, jb) = (set.get(a), set.get(b));
            t.expect(compose(ja, jb) == negate(&compose(jb, ja)), || {
                format!("{a}{b} != -{b}{a}")
            });
        }
    }
    t.finish(CATALOG[2], ns, "JaJb = -JbJa for every pair a != b".into())
}

fn check_relations(set: &StructureSet, ns: &[usize]) -> CheckRecord {
    let report = relation_report_for(set, &StructureId::ALL);
    let words: Vec<String> = report
        .entries
        .iter()
        .filter(|e| e.word.len() == 2 || (e.word.len() == 3 && e.word[0] == e.word[2]))
        .map(|e| {
            let w: String = e.word.iter().map(|id| id.to_string()).collect();
            format!("{w} = {}", e.relation)
        })
        .collect();
    CheckRecord {
        name: CATALOG[3].into(),
        structures: StructureId::ALL.to_vec(),
        n: ns.to_vec(),
        status: CheckStatus::Info,
        detail: words.join(", "),
    }
}

fn check_tangent(set: &StructureSet, ns: &[usize]) -> CheckRecord {
    let mut t = Tally::new();
    for id in StructureId::ALL {
        let got = set.get(id).to_raw();
        let want = reference::tangent_table(id);
        for b in 0..BLOCKS {
            t.expect(got[b] == want[b], || {
                format!("{id} block {b}: got {:?}, expected {:?}", got[b], want[b])
            });
        }
    }
    t.finish(CATALOG[4], ns, "24 signed entries match".into())
}

fn check_cotangent(set: &StructureSet, ns: &[usize]) -> CheckRecord {
    let mut t = Tally::new();
    let one = AffineCoeff::constant(Rational64::from_integer(1));
    for &n in ns {
        for id in StructureId::ALL {
            let table = reference::cotangent_table(id);
            for (b, &(target, sign)) in table.iter().enumerate() {
                for i in 1..=n {
                    let mut dx = OneForm::zero(n);
                    dx.add_term(b * n + i, &one);
                    let mut want = OneForm::zero(n);
                    want.add_term(
                        target as usize * n + i,
                        &AffineCoeff::constant(Rational64::from_integer(sign as i64)),
                    );
                    let got = pullback_one_form(set.get(id), &dx);
                    t.expect(got == want, || {
                        format!("{id}*(dx{}) = {got}, expected {want} (n={n})", b * n + i)
                    });
                }
            }
        }
    }
    t.finish(CATALOG[5], ns, "J*(dx) matches on every basis covector".into())
}

fn check_liouville(set: &StructureSet, ns: &[usize]) -> Result<CheckRecord> {
    let mut t = Tally::new();
    for &n in ns {
        for id in StructureId::ALL {
            let got = liouville_form_for(set.get(id), n)?;
            let want = expected_liouville(id, n);
            t.expect(got == want, || format!("lambda_{id} at n={n}: {got}"));
        }
    }
    Ok(t.finish(CATALOG[6], ns, "exact term-set equality".into()))
}

fn check_symplectic(set: &StructureSet, ns: &[usize]) -> Result<CheckRecord> {
    let mut t = Tally::new();
    for &n in ns {
        for id in StructureId::ALL {
            let got = symplectic_form_for(set.get(id), n)?;
            let want = expected_symplectic(id, n);
            t.expect(got == want, || format!("Phi_{id} at n={n}: {got}"));
        }
    }
    Ok(t.finish(CATALOG[7], ns, "exact term-set equality with Phi = -d(lambda)".into()))
}

fn check_nondegeneracy(set: &StructureSet, ns: &[usize]) -> Result<CheckRecord> {
    let mut t = Tally::new();
    for &n in ns {
        for id in StructureId::ALL {
            let s = to_matrix(&symplectic_form_for(set.get(id), n)?)?;
            let det = s.determinant();
            t.expect(s.is_antisymmetric() && (det.abs() - 1.0).abs() < 1e-12, || {
                format!("Phi_{id} at n={n}: det = {det}")
            });
        }
    }
    Ok(t.finish(CATALOG[8], ns, "antisymmetric with |det| = 1".into()))
}

fn check_equations(set: &StructureSet, ns: &[usize]) -> CheckRecord {
    let mut t = Tally::new();
    for id in StructureId::ALL {
        let Some(table) = rhs_table_for(set.get(id)) else {
            t.expect(false, || format!("{id} is not a bijection on blocks"));
            continue;
        };
        let want = reference::hamilton_equations(id);
        for (row, &(target, sign, source)) in table.rows.iter().zip(want.iter()) {
            let ok = row.target.get() == target as usize
                && row.source.get() == source as usize
                && row.sign.value() == sign;
            t.expect(ok, || {
                format!(
                    "{id}: dx[{}]/dt = {}dH/dx[{}], expected {}dH/dx[{source}]",
                    row.target.get(),
                    row.sign.symbol(),
                    row.source.get(),
                    if sign < 0 { '-' } else { '+' }
                )
            });
        }
    }
    t.finish(CATALOG[9], ns, "24 signed entries match".into())
}

fn check_field_oracle(set: &StructureSet, opts: &VerifyOptions) -> Result<CheckRecord> {
    let mut t = Tally::new();
    let mut worst = 0.0f64;
    let mut count = 0usize;
    for &n in &opts.ns {
        let hs: Vec<(&'static str, ExprAst)> = corpus(n)
            .into_iter()
            .map(|e| Ok((e.name, parse(&e.source, n)?)))
            .collect::<Result<_>>()?;
        for id in StructureId::ALL {
            let map = set.get(id);
            let s = to_matrix(&symplectic_form_for(map, n)?)?;
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ (n as u64) << 8 ^ id.index() as u64);
            for (name, h) in &hs {
                for _ in 0..opts.points {
                    let x = random_state(&mut rng, n);
                    let closed = hamiltonian_field_for(map, h, &x)?;
                    let dh = grad(h, &x)?.to_one_form();
                    match solve_field(&s, &dh) {
                        Ok(solved) => {
                            let err = closed.max_abs_diff(&solved);
                            worst = worst.max(err);
                            t.expect(err <= FIELD_TOLERANCE, || {
                                format!("{id} {name} n={n}: deviation {err:e}")
                            });
                        }
                        Err(e) => t.expect(false, || format!("{id} {name} n={n}: {e}")),
                    }
                    count += 1;
                }
            }
        }
    }
    Ok(t.finish(
        CATALOG[10],
        &opts.ns,
        format!("{count} states, max deviation {worst:e} (tolerance {FIELD_TOLERANCE:e})"),
    ))
}

fn check_gradient(opts: &VerifyOptions) -> Result<CheckRecord> {
    let mut t = Tally::new();
    let mut count = 0usize;
    for &n in &opts.ns {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(0x9E37 * n as u64));
        for e in corpus(n) {
            let h = parse(&e.source, n)?;
            for _ in 0..opts.points {
                let x = random_state(&mut rng, n);
                let exact = grad(&h, &x)?;
                let approx = finite_difference_grad(&h, &x, FD_STEP)?;
                for (a, (g, f)) in exact.components().iter().zip(&approx).enumerate() {
                    t.expect(fd_agrees(*g, *f), || {
                        format!("{} n={n} dH/dx{}: {g} vs {f}", e.name, a + 1)
                    });
                    count += 1;
                }
            }
        }
    }
    Ok(t.finish(
        CATALOG[11],
        &opts.ns,
        format!("{count} partials within relative {FD_RELATIVE:e} or absolute {FD_ABSOLUTE:e}"),
    ))
}

fn check_convention(set: &StructureSet, ns: &[usize]) -> Result<CheckRecord> {
    let mut xjy = true;
    let mut jxy = true;
    for &n in ns {
        for id in StructureId::ALL {
            let c = compatibility(set.get(id), n)?;
            xjy &= c.phi_equals_g_x_jy;
            jxy &= c.phi_equals_g_jx_y;
        }
    }
    let detail = match (xjy, jxy) {
        (true, false) => {
            "Phi(X,Y) = g(X, JY) = -g(JX, Y) on all basis pairs; the form g(JX, Y) holds with the opposite sign"
        }
        (false, true) => "Phi(X,Y) = g(JX, Y) on all basis pairs",
        (true, true) => "both g(X, JY) and g(JX, Y) hold",
        (false, false) => "neither g(X, JY) nor g(JX, Y) matches Phi on all basis pairs",
    };
    Ok(CheckRecord {
        name: CATALOG[12].into(),
        structures: StructureId::ALL.to_vec(),
        n: ns.to_vec(),
        status: CheckStatus::Info,
        detail: detail.into(),
    })
}

/// Runs the whole catalog against `set`.
pub fn run_catalog(set: &StructureSet, opts: &VerifyOptions) -> Result<VerifyReport> {
    if opts.ns.is_empty() || opts.ns.contains(&0) {
        return Err(Error::InvalidDimension(0));
    }
    let ns = &opts.ns;
    let records = vec![
        check_squares(set, ns),
        check_metric(set, ns),
        check_anticommutation(set, ns),
        check_relations(set, ns),
        check_tangent(set, ns),
        check_cotangent(set, ns),
        check_liouville(set, ns)?,
        check_symplectic(set, ns)?,
        check_nondegeneracy(set, ns)?,
        check_equations(set, ns),
        check_field_oracle(set, opts)?,
        check_gradient(opts)?,
        check_convention(set, ns)?,
    ];
    Ok(VerifyReport {
        seed: opts.seed,
        records,
    })
}

/// Structure tables from JSON, e.g. `{"J1": [[1, 1], [0, -1], ...]}`.
/// Missing structures keep their standard tables.
pub fn load_structure_set(text: &str) -> Result<StructureSet> {
    let raw: BTreeMap<String, Vec<(u8, i8)>> =
        serde_json::from_str(text).map_err(|e| Error::InvalidConfig(format!("structure table: {e}")))?;
    let mut set = StructureSet::standard();
    for (key, entries) in raw {
        let id: StructureId = key
            .parse()
            .map_err(|_| Error::InvalidConfig(format!("unknown structure `{key}`")))?;
        let arr: [(u8, i8); BLOCKS] = entries.try_into().map_err(|v: Vec<_>| {
            Error::InvalidConfig(format!("{id}: expected 8 entries, got {}", v.len()))
        })?;
        let map = SignedBlockMap::from_entries(arr)
            .ok_or_else(|| Error::InvalidConfig(format!("{id}: entry out of range")))?;
        set.set(id, map);
    }
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> VerifyOptions {
        VerifyOptions {
            ns: vec![1, 2],
            seed: 3,
            points: 5,
        }
    }

    #[test]
    fn standard_set_passes() {
        let report = run_catalog(&StructureSet::standard(), &quick()).unwrap();
        assert!(report.passed(), "{}", report.render_text());
        let names: Vec<_> = report.records.iter().map(|r| r.name.as_str()).collect();
        assert_eq!(names, CATALOG);
        assert_eq!(report.get("relation-report").unwrap().status, CheckStatus::Info);
        let conv = report.get("compatibility-convention").unwrap();
        assert_eq!(conv.status, CheckStatus::Info);
        assert!(conv.detail.starts_with("Phi(X,Y) = g(X, JY)"));
    }

    #[test]
    fn tampered_table_fails() {
        let mut set = StructureSet::standard();
        let mut raw = set.get(StructureId::J2).to_raw();
        raw[3].1 = -raw[3].1;
        set.set(StructureId::J2, SignedBlockMap::from_entries(raw).unwrap());
        let report = run_catalog(&set, &quick()).unwrap();
        assert!(!report.passed());
        for name in ["structure-squares", "tangent-table", "symplectic-form", "hamilton-equations"] {
            assert_eq!(report.get(name).unwrap().status, CheckStatus::Fail, "{name}");
        }
    }

    #[test]
    fn non_bijective_table_fails_without_panicking() {
        let mut raw = reference::tangent_table(StructureId::J1);
        raw[0].0 = raw[2].0;
        let mut set = StructureSet::standard();
        set.set(StructureId::J1, SignedBlockMap::from_entries(raw).unwrap());
        let report = run_catalog(&set, &quick()).unwrap();
        assert!(!report.passed());
        assert_eq!(report.get("nondegeneracy").unwrap().status, CheckStatus::Fail);
    }

    #[test]
    fn structure_table_json() {
        let set = load_structure_set(r#"{"J3": [[3,1],[5,-1],[6,-1],[0,-1],[7,1],[1,1],[2,1],[4,-1]]}"#).unwrap();
        assert_eq!(set, StructureSet::standard());
        assert!(load_structure_set(r#"{"J4": []}"#).is_err());
        assert!(load_structure_set(r#"{"J1": [[9,1],[0,1],[0,1],[0,1],[0,1],[0,1],[0,1],[0,1]]}"#).is_err());
        assert!(load_structure_set(r#"{"J1": [[1,1]]}"#).is_err());
    }

    #[test]
    fn restriction_keeps_the_partial() {
        let h = parse("0.5*(x1^2 + x2^2) + x3*sin(x1) - (4 + x2) + 2*(x5 - x1)/3", 1).unwrap();
        let part = restrict_to_variable(h.root(), 1);
        assert_eq!(part.to_string(), "0.5*x1^2 + x3*sin(x1) + 2*-x1/3");
        let x = random_state(&mut ChaCha8Rng::seed_from_u64(1), 1);
        let exact = grad(&h, &x).unwrap();
        let fd = finite_difference_grad(&h, &x, FD_STEP).unwrap();
        for (g, f) in exact.components().iter().zip(&fd) {
            assert!(fd_agrees(*g, *f), "{g} vs {f}");
        }
        assert_eq!(restrict_to_variable(h.root(), 8), Expr::Const(0.0));
    }

    #[test]
    fn fd_tolerance_rule() {
        assert!(fd_agrees(1.0, 1.0 + 5e-7));
        assert!(!fd_agrees(1.0, 1.0 + 5e-6));
        assert!(fd_agrees(0.0, 5e-10));
    }
}
