//! `sweep`: closed-form comparison table over a parameter grid.

use std::ops::RangeInclusive;
use std::str::FromStr;

use rayon::prelude::*;

use cvclone::circuits::{standard_cloner_fidelity, ClonerParams, Role};
use cvclone::cloning::{ref_clone_fidelity, reference_for};

use crate::error::CliError;

pub const HEADER: &str = "\
# f_pci: phase-conjugate cloner, 4ηM²N / (4ηM²N + (M−N)²)
# f_std: ideal standard Gaussian cloner fed 2N copies, 2MN / (2MN + M − 2N); blank when M < 2N
# f_anticlone: reversible machine anticlone, 4M²N / (4M²N + (M−N)² + 4MN·e^(−2r)) at η = 1, with detection-loss excess (1−η)(M+N)²/(2ηM²N) on the variance otherwise; blank without r
# advantage: f_pci > f_std
N,M,eta,r,f_pci,f_std,f_anticlone,advantage
";

/// Inclusive `A..B` range of positive integers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntRange(pub RangeInclusive<usize>);

impl FromStr for IntRange {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parse = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("`{t}`: {e}"));
        match s.split_once("..") {
            Some((a, b)) => Ok(IntRange(parse(a)?..=parse(b)?)),
            None => {
                let v = parse(s)?;
                Ok(IntRange(v..=v))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub n: IntRange,
    pub m: IntRange,
    pub eta: Vec<f64>,
    pub r: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub n: usize,
    pub m: usize,
    pub eta: f64,
    pub r: Option<f64>,
    pub f_pci: f64,
    pub f_std: Option<f64>,
    pub f_anticlone: Option<f64>,
}

impl Row {
    pub fn advantage(&self) -> Option<bool> {
        self.f_std.map(|s| self.f_pci > s)
    }

    pub fn to_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map(crate::number).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{}\n",
            self.n,
            self.m,
            self.eta,
            opt(self.r),
            crate::number(self.f_pci),
            opt(self.f_std),
            opt(self.f_anticlone),
            self.advantage().map(|a| a.to_string()).unwrap_or_default(),
        )
    }
}

impl SweepSpec {
    /// Parameter tuples in output order. Pairs with `M < N` are skipped.
    pub fn tuples(&self) -> Result<Vec<(usize, usize, f64, Option<f64>)>, CliError> {
        for (name, range) in [("--n", &self.n), ("--m", &self.m)] {
            if range.0.is_empty() {
                return Err(CliError::Validation(format!("{name}: empty range")));
            }
            if *range.0.start() == 0 {
                return Err(CliError::Validation(format!("{name}: values must be positive")));
            }
        }
        if self.eta.is_empty() {
            return Err(CliError::Validation("--eta: empty list".into()));
        }
        let rs: Vec<Option<f64>> = if self.r.is_empty() {
            vec![None]
        } else {
            self.r.iter().copied().map(Some).collect()
        };
        let mut out = Vec::new();
        for n in self.n.0.clone() {
            for m in self.m.0.clone().filter(|&m| m >= n) {
                for &eta in &self.eta {
                    for &r in &rs {
                        out.push((n, m, eta, r));
                    }
                }
            }
        }
        if out.is_empty() {
            return Err(CliError::Validation("no (N, M) pair with M >= N in the ranges".into()));
        }
        Ok(out)
    }

    /// Rows evaluated in parallel, returned in tuple order.
    pub fn run(&self) -> Result<Vec<Row>, CliError> {
        self.tuples()?
            .into_par_iter()
            .map(|(n, m, eta, r)| {
                let mut params = ClonerParams::new(n, m).with_eta(eta);
                params.epr_r = r;
                params.validate().map_err(|e| CliError::Validation(e.to_string()))?;
                Ok(Row {
                    n,
                    m,
                    eta,
                    r,
                    f_pci: ref_clone_fidelity(n, m, eta)?,
                    f_std: if m >= 2 * n { Some(standard_cloner_fidelity(2 * n, m)?) } else { None },
                    f_anticlone: match r {
                        Some(_) => Some(reference_for(&params, Role::Anticlone)?.1),
                        None => None,
                    },
                })
            })
            .collect()
    }
}

pub fn render(rows: &[Row]) -> String {
    let mut s = String::from(HEADER);
    for row in rows {
        s.push_str(&row.to_csv());
    }
    s
}
