//! Likelihood comparison across candidate links.

use serde::{Deserialize, Serialize};

use crate::data::SurvivalSample;
use crate::estimator::{fit, FitOptions};
use crate::link::LinkModel;

/// One candidate in a link comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkComparison {
    pub link: LinkModel,
    pub pll: Option<f64>,
    pub fll: Option<f64>,
    pub converged: bool,
    /// Competition rank by PLL (1 is best); `None` when the fit failed.
    pub rank_pll: Option<usize>,
    pub rank_fll: Option<usize>,
    pub error: Option<String>,
}

fn ranks(values: &[Option<f64>]) -> Vec<Option<usize>> {
    values.iter().map(|v| v.map(|v| 1 + values.iter().flatten().filter(|&&o| o > v).count())).collect()
}

/// Fits every link and returns the rows sorted by FLL, best first. Failed
/// fits are kept, unranked, at the end.
pub fn compare_links(sample: &SurvivalSample, links: &[LinkModel], options: &FitOptions) -> Vec<LinkComparison> {
    let mut rows: Vec<LinkComparison> = links
        .iter()
        .map(|&link| match fit(sample, &link, options) {
            Ok(f) => LinkComparison {
                link,
                pll: Some(f.pll),
                fll: f.fll.is_finite().then_some(f.fll),
                converged: f.converged,
                rank_pll: None,
                rank_fll: None,
                error: None,
            },
            Err(e) => LinkComparison {
                link,
                pll: None,
                fll: None,
                converged: false,
                rank_pll: None,
                rank_fll: None,
                error: Some(e.to_string()),
            },
        })
        .collect();
    let by_pll = ranks(&rows.iter().map(|r| r.pll).collect::<Vec<_>>());
    let by_fll = ranks(&rows.iter().map(|r| r.fll).collect::<Vec<_>>());
    for ((row, p), f) in rows.iter_mut().zip(by_pll).zip(by_fll) {
        row.rank_pll = p;
        row.rank_fll = f;
    }
    rows.sort_by_key(|r| r.rank_fll.unwrap_or(usize::MAX));
    rows
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn competition_ranks() {
        assert_eq!(ranks(&[Some(1.0), Some(3.0), None, Some(3.0)]), vec![Some(3), Some(1), None, Some(1)]);
    }
}
