//! A fixed set of Hamiltonians used by `verify` and by the test suites.
//!
//! Each entry is generated for a given `n` so that it touches every
//! coordinate of `R^{8n}`.

use crate::structures::BLOCKS;

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusEntry {
    pub name: &'static str,
    pub source: String,
    pub quadratic: bool,
}

fn sum_over(dim: usize, term: impl Fn(usize) -> String) -> String {
    (1..=dim).map(term).collect::<Vec<_>>().join(" + ")
}

/// `0.5*(x1^2 + ... + x{8n}^2)`.
pub fn isotropic(n: usize) -> String {
    format!("0.5*({})", sum_over(BLOCKS * n, |a| format!("x{a}^2")))
}

pub fn corpus(n: usize) -> Vec<CorpusEntry> {
    let dim = BLOCKS * n;
    let iso = isotropic(n);
    let entry = |name, source, quadratic| CorpusEntry {
        name,
        source,
        quadratic,
    };
    vec![
        entry("isotropic", iso.clone(), true),
        entry(
            "weighted",
            format!(
                "0.5*({})",
                sum_over(dim, |a| format!("{}*x{a}^2", 1.0 + 0.25 * (a % 5) as f64))
            ),
            true,
        ),
        entry("pair-oscillator", "0.5*(x1^2 + x2^2)".to_string(), true),
        entry(
            "coupled-quadratic",
            format!(
                "{iso} + {}",
                sum_over(dim - 1, |a| format!("0.2*x{a}*x{}", a + 1))
            ),
            true,
        ),
        entry(
            "quartic",
            format!("{iso} + 0.1*({})", sum_over(dim, |a| format!("x{a}^4"))),
            false,
        ),
        entry(
            "pendulum",
            sum_over(dim, |a| {
                if a % 2 == 1 {
                    format!("0.5*x{a}^2")
                } else {
                    format!("(1 - cos(x{a}))")
                }
            }),
            false,
        ),
        entry(
            "exponential",
            format!("exp(0.3*x1 - 0.2*x{dim}) + {iso}"),
            false,
        ),
        entry(
            "relativistic",
            sum_over(dim, |a| format!("sqrt(1 + x{a}^2)")),
            false,
        ),
        entry(
            "log-rational",
            format!(
                "{} + 1/(2 + x1^2 + x{dim}^2)",
                sum_over(dim, |a| format!("log(1 + x{a}^2)"))
            ),
            false,
        ),
        entry(
            "mixed",
            format!(
                "sin(x1)*cos(x2) + x3*x4^2 + tan(0.2*x5) + (1 + x6^2)^1.5 - x7/(3 + x8^2) + 0.1*{iso}"
            ),
            false,
        ),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::parse;

    #[test]
    fn corpus_parses_for_small_n() {
        for n in 1..=3 {
            let c = corpus(n);
            assert_eq!(c.len(), 10);
            for e in &c {
                let h = parse(&e.source, n).unwrap_or_else(|err| panic!("{}: {err}", e.name));
                if e.name != "pair-oscillator" && e.name != "mixed" {
                    assert_eq!(h.root().max_var(), Some(8 * n), "{}", e.name);
                }
            }
        }
    }
}
