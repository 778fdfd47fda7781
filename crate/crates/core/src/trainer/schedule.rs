/// `lr0 · factor^⌊epoch / every⌋`, rounded to 15 significant digits so the
/// decayed rates come out as the decimal values one would write by hand
/// (e.g. `9e-4` rather than `9.000000000000001e-4`).
pub fn lr_schedule(epoch: usize, lr0: f64, factor: f64, every: usize) -> f64 {
    let k = (epoch / every.max(1)) as i32;
    let raw = lr0 * factor.powi(k);
    if raw == 0.0 || !raw.is_finite() {
        return raw;
    }
    format!("{raw:.14e}").parse().unwrap_or(raw)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EarlyStop {
    pub stop: bool,
    /// Earliest epoch holding the maximum value.
    pub best_epoch: usize,
}

/// Stop once `patience` epochs have passed since the best validation KS.
pub fn early_stop_check(history: &[f64], patience: usize) -> EarlyStop {
    let mut best_epoch = 0;
    for (i, &v) in history.iter().enumerate() {
        if v > history[best_epoch] {
            best_epoch = i;
        }
    }
    let current = history.len().saturating_sub(1);
    EarlyStop {
        stop: !history.is_empty() && current - best_epoch >= patience,
        best_epoch,
    }
}
