use rand::Rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitScheme {
    /// Uniform in ±sqrt(6/(fan_in + fan_out)), fans taken from the shape.
    XavierUniform,
    /// Uniform in ±bound.
    Uniform(f64),
    Constant(f64),
    Zeros,
}

/// Initial values for a `rows × cols` parameter (row-major). Deterministic
/// for a given RNG state.
pub fn init_params<R: Rng + ?Sized>(
    rows: usize,
    cols: usize,
    scheme: InitScheme,
    rng: &mut R,
) -> Vec<f64> {
    let n = rows * cols;
    match scheme {
        InitScheme::XavierUniform => {
            let bound = (6.0 / (rows + cols) as f64).sqrt();
            (0..n).map(|_| rng.random_range(-bound..bound)).collect()
        }
        InitScheme::Uniform(bound) => (0..n).map(|_| rng.random_range(-bound..bound)).collect(),
        InitScheme::Constant(c) => vec![c; n],
        InitScheme::Zeros => vec![0.0; n],
    }
}
