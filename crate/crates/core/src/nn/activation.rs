/// Logistic function, evaluated without overflow for large |x|.
#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Sigmoid linear unit `x·σ(x)`.
#[inline]
pub fn silu(x: f64) -> f64 {
    x * sigmoid(x)
}

/// `σ(x)·(1 + x·(1 − σ(x)))`.
#[inline]
pub fn silu_derivative(x: f64) -> f64 {
    let s = sigmoid(x);
    s * (1.0 + x * (1.0 - s))
}
