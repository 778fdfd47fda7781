//! Numerical feature encoders fitted on training data: equal-frequency
//! binning with QLE / PLE / Quantile read-outs, centered log ratio, and the
//! standardization and one-hot baselines.

use serde::{Deserialize, Serialize};

use crate::batch::Batch;
use crate::data::Dataset;
use crate::error::{Error, Result};

pub const DEFAULT_N_BINS: usize = 64;

/// Equal-frequency bin edges `b_0 < b_1 < … < b_n`. Bin `i` is
/// `(b_i, b_{i+1}]`; the first bin also holds `b_0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinSpec {
    boundaries: Vec<f64>,
}

impl BinSpec {
    pub fn from_boundaries(boundaries: Vec<f64>) -> Result<Self> {
        if boundaries.len() < 2 {
            return Err(Error::Config("bin spec needs at least two boundaries".into()));
        }
        if boundaries.iter().any(|b| !b.is_finite()) || boundaries.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config(format!(
                "bin boundaries must be finite and strictly increasing: {boundaries:?}"
            )));
        }
        Ok(Self { boundaries })
    }

    pub fn boundaries(&self) -> &[f64] {
        &self.boundaries
    }

    /// Effective number of bins after merging duplicate edges.
    #[inline]
    pub fn n_bins(&self) -> usize {
        self.boundaries.len() - 1
    }

    /// Index of the bin containing `x`; out-of-range values land in the
    /// first or last bin.
    #[inline]
    pub fn bin_index(&self, x: f64) -> usize {
        let interior = &self.boundaries[1..self.boundaries.len() - 1];
        interior.partition_point(|&b| b < x)
    }

    pub fn qle(&self, x: f64) -> f64 {
        let b = &self.boundaries;
        let n = self.n_bins();
        if x <= b[0] {
            return 0.0;
        }
        if x >= b[n] {
            return 1.0;
        }
        let i = self.bin_index(x);
        let t = (x - b[i]) / (b[i + 1] - b[i]);
        (i as f64 + t) / n as f64
    }

    pub fn ple_into(&self, x: f64, out: &mut [f64]) {
        for (i, e) in out.iter_mut().enumerate().take(self.n_bins()) {
            let (lo, hi) = (self.boundaries[i], self.boundaries[i + 1]);
            *e = if x < lo {
                0.0
            } else if x >= hi {
                1.0
            } else {
                (x - lo) / (hi - lo)
            };
        }
    }

    pub fn ple(&self, x: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.n_bins()];
        self.ple_into(x, &mut out);
        out
    }

    pub fn quantile(&self, x: f64) -> f64 {
        self.bin_index(x) as f64 / self.n_bins() as f64
    }
}

/// Linear-interpolation quantile of sorted data at probability `k / n`.
/// The position `k·(len−1)/n` is split in integer arithmetic so quantiles
/// that land on an order statistic return it exactly.
fn sorted_quantile(sorted: &[f64], k: usize, n: usize) -> f64 {
    let num = k * (sorted.len() - 1);
    let (lo, rem) = (num / n, num % n);
    if rem == 0 {
        sorted[lo]
    } else {
        let frac = rem as f64 / n as f64;
        sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
    }
}

/// Edges at the empirical `k/n_bins` quantiles; repeated edges are merged,
/// so heavily tied features get fewer bins.
pub fn fit_bins(values: &[f64], n_bins: usize) -> Result<BinSpec> {
    if n_bins == 0 {
        return Err(Error::Config("n_bins must be at least 1".into()));
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { row: i, col: 0 });
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let (min, max) = match (sorted.first(), sorted.last()) {
        (Some(&a), Some(&b)) if a < b => (a, b),
        _ => {
            return Err(Error::DegenerateFeature(format!(
                "need at least 2 distinct values, got {} rows",
                values.len()
            )))
        }
    };
    let mut boundaries = vec![min];
    for k in 1..n_bins {
        let b = sorted_quantile(&sorted, k, n_bins);
        if b > *boundaries.last().unwrap() && b < max {
            boundaries.push(b);
        }
    }
    boundaries.push(max);
    Ok(BinSpec { boundaries })
}

/// `ln(x_j / g(x))` with `g` the geometric mean of the row.
pub fn clr(row: &[f64]) -> Result<Vec<f64>> {
    if let Some(v) = row.iter().find(|&&v| !(v > 0.0) || !v.is_finite()) {
        return Err(Error::Domain(format!("CLR needs positive components, got {v}")));
    }
    let logs: Vec<f64> = row.iter().map(|v| v.ln()).collect();
    let mean = logs.iter().sum::<f64>() / logs.len().max(1) as f64;
    Ok(logs.into_iter().map(|l| l - mean).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
}

impl Standardizer {
    pub fn fit(values: &[f64]) -> Self {
        let n = values.len().max(1) as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        Self {
            mean,
            std: var.sqrt(),
        }
    }

    #[inline]
    pub fn apply(&self, x: f64) -> f64 {
        if self.std > 0.0 {
            (x - self.mean) / self.std
        } else {
            0.0
        }
    }
}

/// One slot per training category plus a trailing unknown slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OneHot {
    pub categories: Vec<String>,
}

impl OneHot {
    pub fn fit<S: AsRef<str>>(values: &[S]) -> Self {
        let mut categories: Vec<String> = values.iter().map(|s| s.as_ref().to_string()).collect();
        categories.sort();
        categories.dedup();
        Self { categories }
    }

    pub fn width(&self) -> usize {
        self.categories.len() + 1
    }

    pub fn index(&self, value: &str) -> usize {
        self.categories
            .binary_search_by(|c| c.as_str().cmp(value))
            .unwrap_or(self.categories.len())
    }

    pub fn encode(&self, value: &str) -> Vec<f64> {
        let mut v = vec![0.0; self.width()];
        v[self.index(value)] = 1.0;
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EncoderKind {
    Qle,
    Ple,
    Quantile,
    Clr,
    Standardize,
}

impl EncoderKind {
    pub const ALL: [EncoderKind; 5] = [
        EncoderKind::Qle,
        EncoderKind::Ple,
        EncoderKind::Quantile,
        EncoderKind::Clr,
        EncoderKind::Standardize,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            EncoderKind::Qle => "qle",
            EncoderKind::Ple => "ple",
            EncoderKind::Quantile => "quantile",
            EncoderKind::Clr => "clr",
            EncoderKind::Standardize => "standardize",
        }
    }
}

impl std::str::FromStr for EncoderKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EncoderKind::ALL
            .into_iter()
            .find(|k| k.name() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::Config(format!("unknown encoder '{s}'")))
    }
}

/// Fitted statistics for one numerical column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnEncoder {
    Bins(BinSpec),
    /// Fewer than two distinct training values: a single zero column.
    Constant,
    Standard(Standardizer),
    /// Values are clamped below at `floor` and shifted by `shift` so every
    /// component is positive.
    Clr { floor: f64, shift: f64 },
}

impl ColumnEncoder {
    fn width(&self, kind: EncoderKind) -> usize {
        match self {
            ColumnEncoder::Bins(b) if kind == EncoderKind::Ple => b.n_bins(),
            _ => 1,
        }
    }
}

/// Encoder for a whole dataset: numerical columns by `kind`, categorical
/// columns one-hot. Every statistic comes from the data passed to
/// [`FeatureEncoder::fit`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureEncoder {
    pub kind: EncoderKind,
    pub n_bins: usize,
    pub feature_names: Vec<String>,
    /// Train medians used to impute missing cells.
    pub medians: Vec<f64>,
    pub columns: Vec<ColumnEncoder>,
    pub categorical_names: Vec<String>,
    pub one_hot: Vec<OneHot>,
    pub fitted_rows: usize,
}

fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.sort_by(f64::total_cmp);
    sorted_quantile(values, 1, 2)
}

impl FeatureEncoder {
    pub fn fit(ds: &Dataset, kind: EncoderKind, n_bins: usize) -> Result<Self> {
        if ds.n_rows() == 0 {
            return Err(Error::Empty("cannot fit encoder on zero rows".into()));
        }
        if n_bins == 0 {
            return Err(Error::Config("n_bins must be at least 1".into()));
        }
        let d = ds.n_features();
        let mut medians = Vec::with_capacity(d);
        let mut columns = Vec::with_capacity(d);
        for c in 0..d {
            let mut present: Vec<f64> = (0..ds.n_rows())
                .filter(|&r| !ds.is_missing(r, c))
                .map(|r| ds.features.get(r, c))
                .collect();
            let med = median(&mut present);
            medians.push(med);
            let values: Vec<f64> = (0..ds.n_rows())
                .map(|r| if ds.is_missing(r, c) { med } else { ds.features.get(r, c) })
                .collect();
            let col = match kind {
                EncoderKind::Qle | EncoderKind::Ple | EncoderKind::Quantile => {
                    match fit_bins(&values, n_bins) {
                        Ok(b) => ColumnEncoder::Bins(b),
                        Err(Error::DegenerateFeature(_)) => ColumnEncoder::Constant,
                        Err(e) => return Err(e),
                    }
                }
                EncoderKind::Standardize => ColumnEncoder::Standard(Standardizer::fit(&values)),
                EncoderKind::Clr => {
                    let floor = values.iter().copied().fold(f64::INFINITY, f64::min);
                    let shift = if floor <= 0.0 { 1.0 - floor } else { 0.0 };
                    ColumnEncoder::Clr { floor, shift }
                }
            };
            columns.push(col);
        }
        Ok(Self {
            kind,
            n_bins,
            feature_names: ds.feature_names.clone(),
            medians,
            columns,
            categorical_names: ds.categorical_names.clone(),
            one_hot: ds.categorical.iter().map(|c| OneHot::fit(c)).collect(),
            fitted_rows: ds.n_rows(),
        })
    }

    pub fn output_dim(&self) -> usize {
        self.columns.iter().map(|c| c.width(self.kind)).sum::<usize>()
            + self.one_hot.iter().map(OneHot::width).sum::<usize>()
    }

    pub fn output_names(&self) -> Vec<String> {
        let mut names = Vec::with_capacity(self.output_dim());
        for (name, col) in self.feature_names.iter().zip(&self.columns) {
            match col {
                ColumnEncoder::Bins(b) if self.kind == EncoderKind::Ple => {
                    names.extend((0..b.n_bins()).map(|i| format!("{name}_ple{i}")));
                }
                _ => names.push(format!("{name}_{}", self.kind.name())),
            }
        }
        for (name, oh) in self.categorical_names.iter().zip(&self.one_hot) {
            names.extend(oh.categories.iter().map(|c| format!("{name}={c}")));
            names.push(format!("{name}=<unknown>"));
        }
        names
    }

    fn check_schema(&self, ds: &Dataset) -> Result<()> {
        if ds.feature_names != self.feature_names || ds.categorical_names != self.categorical_names
        {
            return Err(Error::Shape(format!(
                "encoder fitted on columns {:?} + {:?}, got {:?} + {:?}",
                self.feature_names, self.categorical_names, ds.feature_names, ds.categorical_names
            )));
        }
        Ok(())
    }

    /// Encodes one row of raw numerical values (missing as `None`) into `out`.
    fn encode_numeric(&self, raw: &mut [f64], out: &mut [f64]) -> Result<()> {
        if self.kind == EncoderKind::Clr {
            for (v, col) in raw.iter_mut().zip(&self.columns) {
                if let ColumnEncoder::Clr { floor, shift } = *col {
                    *v = v.max(floor) + shift;
                }
            }
            let enc = clr(raw)?;
            out[..enc.len()].copy_from_slice(&enc);
            return Ok(());
        }
        let mut k = 0;
        for (&x, col) in raw.iter().zip(&self.columns) {
            match col {
                ColumnEncoder::Constant => {
                    out[k] = 0.0;
                    k += 1;
                }
                ColumnEncoder::Standard(s) => {
                    out[k] = s.apply(x);
                    k += 1;
                }
                ColumnEncoder::Bins(b) => match self.kind {
                    EncoderKind::Ple => {
                        b.ple_into(x, &mut out[k..k + b.n_bins()]);
                        k += b.n_bins();
                    }
                    EncoderKind::Quantile => {
                        out[k] = b.quantile(x);
                        k += 1;
                    }
                    _ => {
                        out[k] = b.qle(x);
                        k += 1;
                    }
                },
                ColumnEncoder::Clr { .. } => {
                    return Err(Error::Config("CLR column in a non-CLR encoder".into()))
                }
            }
        }
        Ok(())
    }

    pub fn transform(&self, ds: &Dataset) -> Result<Batch> {
        self.check_schema(ds)?;
        let width = self.output_dim();
        let d = ds.n_features();
        let n_num: usize = self.columns.iter().map(|c| c.width(self.kind)).sum();
        let mut data = vec![0.0; ds.n_rows() * width];
        let mut raw = vec![0.0; d];
        for r in 0..ds.n_rows() {
            for (c, v) in raw.iter_mut().enumerate() {
                *v = if ds.is_missing(r, c) {
                    self.medians[c]
                } else {
                    ds.features.get(r, c)
                };
            }
            let out = &mut data[r * width..(r + 1) * width];
            self.encode_numeric(&mut raw, &mut out[..n_num])?;
            let mut k = n_num;
            for (oh, col) in self.one_hot.iter().zip(&ds.categorical) {
                out[k + oh.index(&col[r])] = 1.0;
                k += oh.width();
            }
        }
        Batch::new(ds.n_rows(), width, data)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture() -> BinSpec {
        BinSpec::from_boundaries(vec![0.0, 1.0, 2.0, 4.0]).unwrap()
    }

    #[test]
    fn fixture_values() {
        let b = fixture();
        assert_eq!(b.qle(1.5), 0.5);
        assert_eq!(b.ple(1.5), vec![1.0, 0.5, 0.0]);
        assert_eq!(b.quantile(1.5), 1.0 / 3.0);
        assert_eq!(b.qle(0.0), 0.0);
        assert_eq!(b.qle(4.0), 1.0);
        assert_eq!(b.qle(1.0), 1.0 / 3.0);
        assert_eq!(b.qle(2.0), 2.0 / 3.0);
        assert_eq!(b.qle(-5.0), 0.0);
        assert_eq!(b.qle(9.0), 1.0);
        assert_eq!(b.ple(-1.0), vec![0.0; 3]);
        assert_eq!(b.ple(4.0), vec![1.0; 3]);
        assert_eq!(b.quantile(0.5), 0.0);
        assert_eq!(b.quantile(-3.0), 0.0);
        assert_eq!(b.quantile(10.0), 2.0 / 3.0);
    }

    #[test]
    fn one_to_hundred_quartiles() {
        let v: Vec<f64> = (1..=100).map(f64::from).collect();
        let b = fit_bins(&v, 4).unwrap();
        assert_eq!(b.boundaries(), &[1.0, 25.75, 50.5, 75.25, 100.0]);
        assert_eq!(fit_bins(&v, 1).unwrap().boundaries(), &[1.0, 100.0]);
    }

    #[test]
    fn degenerate_and_invalid_fits() {
        assert!(matches!(fit_bins(&[3.0; 10], 4), Err(Error::DegenerateFeature(_))));
        assert!(fit_bins(&[1.0, 2.0], 0).is_err());
        assert!(fit_bins(&[1.0, f64::NAN], 2).is_err());
        assert!(BinSpec::from_boundaries(vec![0.0, 0.0, 1.0]).is_err());
    }

    #[test]
    fn zero_heavy_bins_merge() {
        let mut v = vec![0.0; 90];
        v.extend((1..=10).map(f64::from));
        let b = fit_bins(&v, 10).unwrap();
        assert!(b.n_bins() < 10);
        assert!(b.boundaries().windows(2).all(|w| w[0] < w[1]));
        assert_eq!(b.boundaries()[0], 0.0);
        assert_eq!(*b.boundaries().last().unwrap(), 10.0);
    }

    #[test]
    fn clr_values() {
        assert_eq!(clr(&[1.0, 1.0, 1.0]).unwrap(), vec![0.0; 3]);
        let v = clr(&[1.0, 4.0]).unwrap();
        assert!((v[0] + 2f64.ln()).abs() < 1e-15 && (v[1] - 2f64.ln()).abs() < 1e-15);
        assert!(matches!(clr(&[1.0, 0.0]), Err(Error::Domain(_))));
    }

    #[test]
    fn standardizer_baseline() {
        let s = Standardizer::fit(&[2.0; 5]);
        assert_eq!(s.apply(2.0), 0.0);
        assert_eq!(s.apply(7.0), 0.0);
        let v = [1.0, 2.0, 3.0, 4.0];
        let s = Standardizer::fit(&v);
        let z: Vec<f64> = v.iter().map(|&x| s.apply(x)).collect();
        let m = z.iter().sum::<f64>() / 4.0;
        let sd = (z.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / 4.0).sqrt();
        assert!(m.abs() < 1e-15 && (sd - 1.0).abs() < 1e-15);
    }

    #[test]
    fn one_hot_with_unknown_slot() {
        let oh = OneHot::fit(&["b", "a", "c", "a"]);
        assert_eq!(oh.width(), 4);
        assert_eq!(oh.encode("a"), vec![1.0, 0.0, 0.0, 0.0]);
        assert_eq!(oh.encode("zzz"), vec![0.0, 0.0, 0.0, 1.0]);
    }

    fn toy() -> Dataset {
        let x = Batch::from_rows(&[[0.0, 5.0], [1.0, 5.0], [2.0, 5.0], [4.0, 5.0], [3.0, 5.0]])
            .unwrap();
        let mut ds = Dataset::from_features(
            vec!["a".into(), "k".into()],
            x,
            vec![0.0, 1.0, 0.0, 1.0, 0.0],
        )
        .unwrap();
        ds.categorical_names = vec!["c".into()];
        ds.categorical = vec![vec!["x".into(), "y".into(), "x".into(), "z".into(), "y".into()]];
        ds
    }

    #[test]
    fn dataset_encoding_widths() {
        let ds = toy();
        for kind in EncoderKind::ALL {
            let enc = FeatureEncoder::fit(&ds, kind, 4).unwrap();
            let out = enc.transform(&ds).unwrap();
            assert_eq!(out.cols(), enc.output_dim());
            assert_eq!(enc.output_names().len(), enc.output_dim());
            assert!(out.all_finite());
        }
        let ple = FeatureEncoder::fit(&ds, EncoderKind::Ple, 4).unwrap();
        // the constant column collapses to a single zero column
        assert_eq!(ple.output_dim(), 4 + 1 + 4);
    }

    #[test]
    fn missing_cells_use_train_median() {
        let mut ds = toy();
        ds.missing = Some(vec![false; 10]);
        ds.missing.as_mut().unwrap()[2 * 2] = true;
        let enc = FeatureEncoder::fit(&ds, EncoderKind::Standardize, 4).unwrap();
        // present values 0,1,4,3 → median 2
        assert_eq!(enc.medians[0], 2.0);
        let out = enc.transform(&ds).unwrap();
        let s = match enc.columns[0] {
            ColumnEncoder::Standard(s) => s,
            _ => unreachable!(),
        };
        assert_eq!(out.get(2, 0), s.apply(2.0));
    }

    #[test]
    fn schema_mismatch_rejected() {
        let ds = toy();
        let enc = FeatureEncoder::fit(&ds, EncoderKind::Qle, 4).unwrap();
        let mut other = ds.clone();
        other.feature_names[0] = "renamed".into();
        assert!(enc.transform(&other).is_err());
    }

    #[test]
    fn clr_rows_sum_to_zero_after_shift() {
        let x = Batch::from_rows(&[[-1.0, 2.0, 0.5], [3.0, 0.0, 1.0], [0.0, 1.0, 9.0]]).unwrap();
        let ds = Dataset::from_features(
            vec!["a".into(), "b".into(), "c".into()],
            x,
            vec![0.0, 1.0, 0.0],
        )
        .unwrap();
        let enc = FeatureEncoder::fit(&ds, EncoderKind::Clr, 4).unwrap();
        let out = enc.transform(&ds).unwrap();
        for r in 0..3 {
            assert!(out.row(r).iter().sum::<f64>().abs() < 1e-12);
        }
    }
}
