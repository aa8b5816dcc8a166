use super::{Graph, KernelError, Tensor, Var};
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckConfig {
    pub step: f64,
    pub rtol: f64,
    pub atol: f64,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        GradCheckConfig {
            step: 1e-5,
            rtol: 1e-4,
            atol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub checked: usize,
    pub failures: usize,
    pub max_abs_err: f64,
    /// Largest `|analytic - numeric| / max(|analytic|, |numeric|)` among
    /// entries above the absolute floor.
    pub max_rel_err: f64,
    /// (input, flat index, analytic, numeric) of the worst entry.
    pub worst: Option<(usize, usize, f64, f64)>,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

/// Compares reverse-mode gradients of a scalar function against central
/// differences. An entry passes when
/// `|a - n| <= max(atol, rtol * max(|a|, |n|))`.
pub fn check_gradients<T, F>(inputs: &[Tensor<T>], f: F, config: GradCheckConfig) -> Result<GradCheckReport, KernelError>
where
    T: Scalar,
    F: Fn(&mut Graph<T>, &[Var]) -> Result<Var, KernelError>,
{
    let eval = |values: &[Tensor<T>]| -> Result<T, KernelError> {
        let mut g = Graph::new();
        let vars: Vec<Var> = values.iter().map(|t| g.constant(t.clone())).collect();
        let out = f(&mut g, &vars)?;
        g.value(out).as_scalar().ok_or(KernelError::NonScalarLoss(g.value(out).shape()))
    };

    let mut g = Graph::new();
    let vars: Vec<Var> = inputs.iter().map(|t| g.param(t.clone())).collect();
    let out = f(&mut g, &vars)?;
    let grads = g.backward(out)?;

    let h = T::of(config.step);
    let mut report = GradCheckReport {
        checked: 0,
        failures: 0,
        max_abs_err: 0.0,
        max_rel_err: 0.0,
        worst: None,
    };
    let mut worst_excess = f64::NEG_INFINITY;
    let mut values = inputs.to_vec();
    for (i, var) in vars.iter().enumerate() {
        let analytic = grads.get(*var).expect("every input is trainable");
        for j in 0..inputs[i].len() {
            let orig = values[i].data()[j];
            values[i].data_mut()[j] = orig + h;
            let plus = eval(&values)?;
            values[i].data_mut()[j] = orig - h;
            let minus = eval(&values)?;
            values[i].data_mut()[j] = orig;
            let numeric = ((plus - minus) / (h + h)).to_f64_lossy();
            let a = analytic.data()[j].to_f64_lossy();
            let abs = (a - numeric).abs();
            let scale = a.abs().max(numeric.abs());
            let allowed = config.atol.max(config.rtol * scale);
            report.checked += 1;
            report.max_abs_err = report.max_abs_err.max(abs);
            if abs > config.atol && scale > 0.0 {
                report.max_rel_err = report.max_rel_err.max(abs / scale);
            }
            if abs > allowed || !abs.is_finite() {
                report.failures += 1;
            }
            if abs - allowed > worst_excess {
                worst_excess = abs - allowed;
                report.worst = Some((i, j, a, numeric));
            }
        }
    }
    Ok(report)
}
