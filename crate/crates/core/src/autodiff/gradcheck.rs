use super::{Gradients, ParamSet};

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// Parameter name and flat index of the worst entry.
    pub worst: Option<(String, usize)>,
    pub checked: usize,
}

/// Compares the analytic gradients returned by `loss_fn` against central
/// differences with step `h`, over every entry of every parameter that
/// `loss_fn` reports a gradient for.
///
/// The relative error of one entry is
/// `|analytic - numeric| / (|analytic| + |numeric| + 1e-12)`.
pub fn grad_check<F>(loss_fn: F, params: &ParamSet, h: f64) -> GradCheckReport
where
    F: Fn(&ParamSet) -> (f64, Gradients),
{
    let (_, analytic) = loss_fn(params);
    let mut probe = params.clone();
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst: None,
        checked: 0,
    };
    for (name, grad) in &analytic {
        for (k, &a) in grad.iter().enumerate() {
            let orig = probe.get(name).expect("gradient for unknown parameter").data()[k];
            probe.get_mut(name).unwrap().data_mut()[k] = orig + h;
            let (up, _) = loss_fn(&probe);
            probe.get_mut(name).unwrap().data_mut()[k] = orig - h;
            let (down, _) = loss_fn(&probe);
            probe.get_mut(name).unwrap().data_mut()[k] = orig;

            let numeric = (up - down) / (2.0 * h);
            let rel = (a - numeric).abs() / (a.abs() + numeric.abs() + 1e-12);
            report.checked += 1;
            if rel > report.max_rel_error || rel.is_nan() {
                report.max_rel_error = if rel.is_nan() { f64::INFINITY } else { rel };
                report.worst = Some((name.clone(), k));
            }
        }
    }
    report
}
