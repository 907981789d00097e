//! Expected improvement over the unevaluated part of the grid.

use std::collections::HashSet;

use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::gp::GpModel;
use crate::space::{HpVector, SearchSpace};

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Closed-form expected improvement for minimization.
pub fn expected_improvement(mean: f64, variance: f64, best_observed: f64) -> f64 {
    let gap = best_observed - mean;
    let sigma = variance.max(0.0).sqrt();
    if sigma == 0.0 {
        return gap.max(0.0);
    }
    let z = gap / sigma;
    let cdf = 0.5 * erfc(-z / std::f64::consts::SQRT_2);
    let pdf = INV_SQRT_2PI * (-0.5 * z * z).exp();
    (gap * cdf + sigma * pdf).max(0.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AcquisitionResult {
    pub best_point: HpVector,
    /// Maximum EI in the model's target units.
    pub best_value: f64,
    /// The same maximum in standardized units (raw / target std).
    pub best_standardized: f64,
    pub values: Option<Vec<(HpVector, f64)>>,
}

fn scan(
    model: &GpModel,
    space: &SearchSpace,
    evaluated: &HashSet<HpVector>,
    best_observed: f64,
    keep_values: bool,
) -> Result<AcquisitionResult> {
    let std = model.target_std();
    let best_std = (best_observed - model.target_mean()) / std;
    let mut best: Option<(HpVector, f64)> = None;
    let mut values = keep_values.then(Vec::new);
    for hp in space.enumerate()? {
        if evaluated.contains(&hp) {
            continue;
        }
        let (m, v) = model.posterior_standardized(&space.to_numeric(&hp))?;
        let ei = expected_improvement(m, v, best_std);
        if let Some(values) = values.as_mut() {
            values.push((hp.clone(), ei * std));
        }
        // strict comparison keeps the earliest grid point on ties
        if best.as_ref().is_none_or(|(_, b)| ei > *b) {
            best = Some((hp, ei));
        }
    }
    let (best_point, ei) = best.ok_or(Error::SpaceExhausted)?;
    Ok(AcquisitionResult {
        best_point,
        best_value: ei * std,
        best_standardized: ei,
        values,
    })
}

/// Argmax of EI over every unevaluated grid point; ties go to the lowest grid index.
pub fn select_next(
    model: &GpModel,
    space: &SearchSpace,
    evaluated: &HashSet<HpVector>,
    best_observed: f64,
) -> Result<AcquisitionResult> {
    scan(model, space, evaluated, best_observed, false)
}

/// Like [`select_next`] but also returns the EI of every candidate.
pub fn acquisition_table(
    model: &GpModel,
    space: &SearchSpace,
    evaluated: &HashSet<HpVector>,
    best_observed: f64,
) -> Result<AcquisitionResult> {
    scan(model, space, evaluated, best_observed, true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gp::{KernelConfig, KernelFamily};
    use crate::space::ParamDef;

    #[test]
    fn ei_examples() {
        assert_eq!(expected_improvement(1.0, 0.0, 1.0), 0.0);
        assert!((expected_improvement(1.0, 1.0, 1.0) - INV_SQRT_2PI).abs() < 1e-12);
        assert_eq!(expected_improvement(-1.0, 0.0, 1.0), 2.0);
        assert_eq!(expected_improvement(3.0, 0.0, 1.0), 0.0);
    }

    #[test]
    fn ei_monotone_in_variance() {
        for &gap in &[-3.0, -1.0, -0.1, 0.0, 0.1, 1.0, 3.0] {
            let mut prev = 0.0;
            for i in 0..200 {
                let var = i as f64 * 0.05;
                let ei = expected_improvement(0.0, var, gap);
                assert!(ei >= 0.0);
                assert!(ei + 1e-15 >= prev, "gap {gap} var {var}");
                prev = ei;
            }
        }
    }

    fn line_space(n: usize) -> SearchSpace {
        SearchSpace::new(vec![ParamDef::numeric("x", (0..n).map(|i| i as f64)).unwrap()]).unwrap()
    }

    #[test]
    fn forced_choice() {
        let space = line_space(3);
        let pts = space.enumerate().unwrap();
        let model = GpModel::fit(
            vec![space.to_numeric(&pts[0]), space.to_numeric(&pts[2])],
            &[1.0, 2.0],
            KernelConfig::default(),
        )
        .unwrap();
        let evaluated: HashSet<_> = [pts[0].clone(), pts[2].clone()].into_iter().collect();
        let r = select_next(&model, &space, &evaluated, 1.0).unwrap();
        assert_eq!(r.best_point, pts[1]);

        let all: HashSet<_> = pts.into_iter().collect();
        assert_eq!(
            select_next(&model, &space, &all, 1.0).unwrap_err(),
            Error::SpaceExhausted
        );
    }

    #[test]
    fn collapsed_variance_gives_zero() {
        // long length scale on constant-slope data: remaining points are confidently worse
        let space = line_space(5);
        let pts = space.enumerate().unwrap();
        let xs: Vec<_> = pts[..4].iter().map(|p| space.to_numeric(p)).collect();
        let kernel = KernelConfig::new(KernelFamily::SquaredExponential, 50.0, 1.0, 0.0);
        let model = GpModel::fit(xs, &[0.0, 1.0, 2.0, 3.0], kernel).unwrap();
        let evaluated: HashSet<_> = pts[..4].iter().cloned().collect();
        let r = select_next(&model, &space, &evaluated, 0.0).unwrap();
        assert_eq!(r.best_point, pts[4]);
        assert!(r.best_value < 1e-12, "{}", r.best_value);
    }
}
