use serde::Serialize;

use crate::error::Result;
use crate::game::{GameParams, Level, TreatmentSpec};
use crate::metrics::relative_wage_gap;
use crate::rational::to_f64;
use crate::table::ObservationTable;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OlsFit {
    pub intercept: f64,
    pub slope: f64,
    /// Conventional (homoskedastic) standard error of the slope.
    pub se_slope: f64,
    pub n: usize,
}

/// Least-squares line of `y` on `x`. `None` with fewer than three points or
/// a constant regressor.
pub fn simple_ols(x: &[f64], y: &[f64]) -> Option<OlsFit> {
    let n = x.len();
    if n < 3 || y.len() != n {
        return None;
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx <= f64::EPSILON * nf * mx.abs().max(1.0) {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    Some(OlsFit {
        intercept,
        slope,
        se_slope: (rss / (nf - 2.0) / sxx).sqrt(),
        n,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OlsCell {
    pub treatment: TreatmentSpec,
    pub x: Level,
    pub n: usize,
    /// `None` when the cell is not estimable.
    pub fit: Option<OlsFit>,
}

/// RWG regressed on effort within each (treatment, level) cell.
pub fn ols_by_level(table: &ObservationTable, params: &GameParams) -> Result<Vec<OlsCell>> {
    let plans = table.plans(params)?;
    let mut treatments: Vec<TreatmentSpec> = Vec::new();
    for p in &plans {
        if !treatments.contains(&p.treatment) {
            treatments.push(p.treatment);
        }
    }
    let mut cells = Vec::new();
    for t in treatments {
        for x in params.levels() {
            let v = params.outside_wage(x)?;
            let (mut effort, mut rwg) = (Vec::new(), Vec::new());
            for p in plans.iter().filter(|p| p.treatment == t) {
                effort.push(p.effort[x as usize] as f64);
                rwg.push(to_f64(relative_wage_gap(v, p.maw[x as usize])?));
            }
            cells.push(OlsCell {
                treatment: t,
                x,
                n: effort.len(),
                fit: simple_ols(&effort, &rwg),
            });
        }
    }
    Ok(cells)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::ObservationRecord;

    #[test]
    fn perfect_fit() {
        let x = [0.0, 1.0, 2.0, 5.0, 7.0];
        let y: Vec<f64> = x.iter().map(|e| 0.01 * e).collect();
        let fit = simple_ols(&x, &y).unwrap();
        assert!((fit.slope - 0.01).abs() < 1e-15);
        assert!(fit.se_slope < 1e-15);
        assert!(fit.intercept.abs() < 1e-15);
    }

    #[test]
    fn degenerate_cells() {
        assert!(simple_ols(&[2.0, 2.0, 2.0], &[0.1, 0.2, 0.3]).is_none());
        assert!(simple_ols(&[1.0, 2.0], &[0.1, 0.2]).is_none());
    }

    #[test]
    fn textbook_standard_error() {
        // sxx = 5, sxy = 5.5, fitted line 1.1 + 1.1x
        let x = [0.0, 1.0, 2.0, 3.0];
        let y = [1.0, 3.0, 2.0, 5.0];
        let fit = simple_ols(&x, &y).unwrap();
        assert!((fit.slope - 1.1).abs() < 1e-12);
        assert!((fit.intercept - 1.1).abs() < 1e-12);
        let rss: f64 = [1.0 - 1.1, 3.0 - 2.2, 2.0 - 3.3, 5.0 - 4.4]
            .iter()
            .map(|r: &f64| r * r)
            .sum();
        assert!((fit.se_slope - (rss / 2.0 / 5.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn cells_from_table() {
        let params = GameParams::default();
        let mut records = Vec::new();
        let maws = [
            [50, 150, 250, 350, 450],
            [50, 150, 250, 340, 430],
            [50, 150, 250, 330, 410],
        ];
        for (i, maw) in maws.iter().enumerate() {
            let e = i as u32;
            for x in 0..5 {
                records.push(ObservationRecord::worker(
                    TreatmentSpec::ENDO,
                    i.to_string(),
                    x,
                    maw[x as usize],
                    [0, 0, 0, e, 2 * e][x as usize],
                ));
            }
        }
        let cells = ols_by_level(&ObservationTable { records }, &params).unwrap();
        assert_eq!(cells.len(), 5);
        assert!(cells[0].fit.is_none());
        // RWG at x=3 is 10e/350
        let fit = cells[3].fit.unwrap();
        assert!((fit.slope - 10.0 / 350.0).abs() < 1e-12);
        assert!(fit.se_slope < 1e-12);
        let fit = cells[4].fit.unwrap();
        assert!((fit.slope - 10.0 / 450.0).abs() < 1e-12);
    }
}
