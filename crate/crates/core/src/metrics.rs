//! Policy-oscillation measures and cross-trial aggregation of learning curves.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Per-iteration trace of one trial.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LearningCurve {
    /// Cumulative reward `R_K` of the deployed policy.
    pub returns: Vec<f64>,
    pub zetas: Vec<f64>,
    pub expected_advantages: Vec<f64>,
}

impl LearningCurve {
    pub fn push(&mut self, ret: f64, zeta: f64, adv: f64) {
        self.returns.push(ret);
        self.zetas.push(zeta);
        self.expected_advantages.push(adv);
    }

    pub fn len(&self) -> usize {
        self.returns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.returns.is_empty()
    }

    pub fn oscillation(&self) -> Result<OscillationReport> {
        oscillation(&self.returns)
    }

    fn check(&self) -> Result<()> {
        let n = self.returns.len();
        if self.zetas.len() != n || self.expected_advantages.len() != n {
            return Err(Error::Shape(format!(
                "curve lengths differ: {} returns, {} zetas, {} advantages",
                n,
                self.zetas.len(),
                self.expected_advantages.len()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct OscillationReport {
    pub osc_inf: f64,
    pub osc_l2: f64,
}

/// Magnitudes of the drops `R_{K+1} − R_K < 0`: their max and their l2 norm.
pub fn oscillation(returns: &[f64]) -> Result<OscillationReport> {
    if returns.len() < 2 {
        return Err(domain("returns", "oscillation needs at least two entries"));
    }
    let mut osc_inf: f64 = 0.0;
    let mut sq = 0.0;
    for w in returns.windows(2) {
        let diff = w[1] - w[0];
        if diff < 0.0 {
            osc_inf = osc_inf.max(-diff);
            sq += diff * diff;
        }
    }
    Ok(OscillationReport {
        osc_inf,
        osc_l2: sq.sqrt(),
    })
}

/// Cross-trial statistics of a batch of equally long curves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean_return_curve: Vec<f64>,
    pub std_return_curve: Vec<f64>,
    pub mean_zeta_curve: Vec<f64>,
    pub std_zeta_curve: Vec<f64>,
    pub osc_inf_mean: f64,
    pub osc_l2_mean: f64,
}

/// Mean and population standard deviation per column.
fn column_stats(rows: &[&[f64]]) -> (Vec<f64>, Vec<f64>) {
    let n = rows.len() as f64;
    let len = rows[0].len();
    let mut mean = vec![0.0; len];
    for r in rows {
        for (m, x) in mean.iter_mut().zip(r.iter()) {
            *m += x / n;
        }
    }
    let mut var = vec![0.0; len];
    for r in rows {
        for ((v, x), m) in var.iter_mut().zip(r.iter()).zip(&mean) {
            *v += (x - m).powi(2) / n;
        }
    }
    (mean, var.into_iter().map(f64::sqrt).collect())
}

pub fn aggregate(curves: &[LearningCurve]) -> Result<Summary> {
    let first = curves.first().ok_or_else(|| domain("curves", "empty set"))?;
    for c in curves {
        c.check()?;
        if c.len() != first.len() {
            return Err(Error::Shape("curves differ in length".into()));
        }
    }
    let returns: Vec<&[f64]> = curves.iter().map(|c| c.returns.as_slice()).collect();
    let zetas: Vec<&[f64]> = curves.iter().map(|c| c.zetas.as_slice()).collect();
    let (mean_return_curve, std_return_curve) = column_stats(&returns);
    let (mean_zeta_curve, std_zeta_curve) = column_stats(&zetas);

    let reports = curves
        .iter()
        .map(|c| oscillation(&c.returns))
        .collect::<Result<Vec<_>>>()?;
    let n = reports.len() as f64;
    Ok(Summary {
        mean_return_curve,
        std_return_curve,
        mean_zeta_curve,
        std_zeta_curve,
        osc_inf_mean: reports.iter().map(|r| r.osc_inf).sum::<f64>() / n,
        osc_l2_mean: reports.iter().map(|r| r.osc_l2).sum::<f64>() / n,
    })
}
