use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};

pub const RESULTS_FORMAT: &str = "# format=ma-isac-results/1";
pub const CORRELATION_FORMAT: &str = "# format=ma-isac-correlation/1";

const INFORMATIVE_CRB: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RowStatus {
    Ok,
    Infeasible,
    Unsupported,
}

/// One line of a results CSV. Empty fields are written as empty cells.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub scheme: String,
    pub sweep_value: f64,
    #[serde(rename = "R_tilde")]
    pub r_tilde: Option<f64>,
    pub upper_bound: Option<f64>,
    pub crb_u: Option<f64>,
    pub crb_v: Option<f64>,
    pub mse_u: Option<f64>,
    pub mse_v: Option<f64>,
    /// Smallest accepted `mse / crb` ratio given the trial count.
    pub mse_tolerance: Option<f64>,
    pub iterations: Option<usize>,
    pub wall_time: Option<f64>,
    pub status: RowStatus,
}

impl ResultRow {
    pub fn new(scheme: &str, sweep_value: f64, status: RowStatus) -> Self {
        Self {
            scheme: scheme.to_string(),
            sweep_value,
            r_tilde: None,
            upper_bound: None,
            crb_u: None,
            crb_v: None,
            mse_u: None,
            mse_v: None,
            mse_tolerance: None,
            iterations: None,
            wall_time: None,
            status,
        }
    }

    pub fn check(&self) -> Result<()> {
        let fail = |what: String| {
            Err(Error::InvariantViolation(format!(
                "{} at {}: {what}",
                self.scheme, self.sweep_value
            )))
        };
        if let (Some(r), Some(ub)) = (self.r_tilde, self.upper_bound) {
            if !(r <= ub * (1.0 + 1e-12) + 1e-12) {
                return fail(format!("rate {r} exceeds upper bound {ub}"));
            }
        }
        if let Some(r) = self.r_tilde {
            if !(r >= 0.0 && r.is_finite()) {
                return fail(format!("rate {r} is not a finite non-negative number"));
            }
        }
        let tol = self.mse_tolerance.unwrap_or(1.0);
        for (crb, mse, axis) in [(self.crb_u, self.mse_u, "u"), (self.crb_v, self.mse_v, "v")] {
            if let (Some(c), Some(m)) = (crb, mse) {
                // Above this the bound exceeds what an estimator confined to
                // [−1, 1] can err by, and the comparison says nothing.
                if c < INFORMATIVE_CRB && m < tol * c {
                    return fail(format!("MSE({axis}) = {m:.3e} is below {tol:.3} × CRB = {c:.3e}"));
                }
            }
        }
        Ok(())
    }
}

/// Lowest plausible `MSE / CRB` for an efficient estimator averaged over
/// `trials` draws: five standard deviations of a chi-square mean below one.
pub fn mse_tolerance(trials: usize) -> f64 {
    (1.0 - 5.0 * (2.0 / trials as f64).sqrt()).max(0.0)
}

pub fn check_rows(rows: &[ResultRow]) -> Result<()> {
    rows.iter().try_for_each(ResultRow::check)
}

pub fn write_rows<W: Write>(mut out: W, rows: &[ResultRow]) -> Result<()> {
    writeln!(out, "{RESULTS_FORMAT}")?;
    let mut w = csv::Writer::from_writer(out);
    if rows.is_empty() {
        w.write_record([
            "scheme",
            "sweep_value",
            "R_tilde",
            "upper_bound",
            "crb_u",
            "crb_v",
            "mse_u",
            "mse_v",
            "mse_tolerance",
            "iterations",
            "wall_time",
            "status",
        ])?;
    }
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorrelationCell {
    pub u: f64,
    pub v: f64,
    pub correlation: f64,
}

pub fn write_correlation<W: Write>(mut out: W, cells: &[CorrelationCell]) -> Result<()> {
    writeln!(out, "{CORRELATION_FORMAT}")?;
    let mut w = csv::Writer::from_writer(out);
    for cell in cells {
        w.serialize(cell)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let mut row = ResultRow::new("upa-dense", 0.5, RowStatus::Ok);
        row.r_tilde = Some(1.25);
        row.upper_bound = Some(2.0);
        let mut buf = Vec::new();
        write_rows(&mut buf, &[row]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], RESULTS_FORMAT);
        assert_eq!(
            lines[1],
            "scheme,sweep_value,R_tilde,upper_bound,crb_u,crb_v,mse_u,mse_v,mse_tolerance,iterations,wall_time,status"
        );
        assert_eq!(lines[2], "upa-dense,0.5,1.25,2.0,,,,,,,,ok");
    }

    #[test]
    fn invariants() {
        let mut row = ResultRow::new("x", 1.0, RowStatus::Ok);
        row.r_tilde = Some(3.0);
        row.upper_bound = Some(2.0);
        assert!(row.check().is_err());
        row.upper_bound = Some(3.0);
        assert!(row.check().is_ok());
        row.crb_u = Some(0.01);
        row.mse_u = Some(0.004);
        row.mse_tolerance = Some(mse_tolerance(200));
        assert!(row.check().is_err());
        row.mse_u = Some(0.008);
        assert!(row.check().is_ok());
        row.crb_u = Some(1.0);
        row.mse_u = Some(0.3);
        assert!(row.check().is_ok());
    }
}
