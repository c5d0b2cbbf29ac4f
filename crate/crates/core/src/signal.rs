//! Forecasting from sampled data.
//!
//! A series of `(t, value)` samples is shifted so that it starts at `t = 0`,
//! normalized so that the value there is exactly 1, and interpolated with a
//! monotonicity-preserving piecewise cubic. The interpolant then stands in
//! for `f` at the geometric sample points. The interpolation step is a
//! bridging choice: arithmetically spaced data never contains the geometric
//! points themselves.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;

use crate::combinatorics::enumerate_subsets;
use crate::error::{Error, Result};
use crate::multiproduct::{coefficient, estimate, sequence_point, Estimate, GmpConfig};
use crate::source::FunctionSource;

pub const MIN_POINTS: usize = 4;

/// Parsed `(t, value)` pairs, sorted by `t`, abscissas distinct.
#[derive(Debug, Clone, PartialEq)]
pub struct RawSeries {
    points: Vec<(f64, f64)>,
}

impl RawSeries {
    pub fn new(mut points: Vec<(f64, f64)>) -> Result<Self> {
        if let Some(&(t, v)) = points
            .iter()
            .find(|(t, v)| !t.is_finite() || !v.is_finite())
        {
            return Err(Error::Parse {
                line: 0,
                message: format!("non-finite sample ({t}, {v})"),
            });
        }
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        if let Some(w) = points.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::DuplicateAbscissa(w[0].0));
        }
        if points.len() < MIN_POINTS {
            return Err(Error::FewPoints(points.len()));
        }
        Ok(RawSeries { points })
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Parses two comma-separated numeric columns with an optional header line.
pub fn parse_csv(text: &str) -> Result<RawSeries> {
    let mut points = Vec::new();
    let mut seen_row = false;
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 2 {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected 2 columns, found {}", fields.len()),
            });
        }
        let parsed = (fields[0].parse::<f64>(), fields[1].parse::<f64>());
        match parsed {
            (Ok(t), Ok(v)) => {
                if !t.is_finite() || !v.is_finite() {
                    return Err(Error::Parse {
                        line: line_no,
                        message: "non-finite value".into(),
                    });
                }
                points.push((t, v));
            }
            // only the first non-empty line may be a header
            _ if !seen_row && fields.iter().all(|f| f.parse::<f64>().is_err()) => {}
            _ => {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("cannot parse {line:?} as two numbers"),
                })
            }
        }
        seen_row = true;
    }
    RawSeries::new(points)
}

pub fn load_csv(path: impl AsRef<Path>) -> Result<RawSeries> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    parse_csv(&text)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormalizeMode {
    DivideByFirst,
    /// stored = a + b * raw
    Affine {
        a: f64,
        b: f64,
    },
    None,
}

impl FromStr for NormalizeMode {
    type Err = Error;

    /// `divide-by-first`, `none`, or `affine:A,B`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || {
            Error::InvalidConfig(format!(
                "normalization must be divide-by-first, none or affine:A,B; got {s:?}"
            ))
        };
        match s.trim() {
            "divide-by-first" | "divide_by_first" => Ok(NormalizeMode::DivideByFirst),
            "none" => Ok(NormalizeMode::None),
            other => {
                let args = other.strip_prefix("affine:").ok_or_else(bad)?;
                let (a, b) = args.split_once(',').ok_or_else(bad)?;
                let a: f64 = a.trim().parse().map_err(|_| bad())?;
                let b: f64 = b.trim().parse().map_err(|_| bad())?;
                Ok(NormalizeMode::Affine { a, b })
            }
        }
    }
}

impl fmt::Display for NormalizeMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NormalizeMode::DivideByFirst => f.write_str("divide-by-first"),
            NormalizeMode::Affine { a, b } => write!(f, "affine:{a},{b}"),
            NormalizeMode::None => f.write_str("none"),
        }
    }
}

/// `stored = offset + scale * raw`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Normalization {
    pub offset: f64,
    pub scale: f64,
}

impl Normalization {
    pub fn apply(&self, raw: f64) -> f64 {
        self.offset + self.scale * raw
    }

    pub fn invert(&self, stored: f64) -> f64 {
        (stored - self.offset) / self.scale
    }
}

/// Fritsch-Carlson monotone cubic Hermite interpolant.
#[derive(Debug, Clone)]
pub struct Pchip {
    t: Vec<f64>,
    y: Vec<f64>,
    slopes: Vec<f64>,
}

impl Pchip {
    /// `t` strictly increasing, same length as `y`, at least two points.
    pub fn new(t: Vec<f64>, y: Vec<f64>) -> Self {
        assert!(t.len() == y.len() && t.len() >= 2);
        let slopes = pchip_slopes(&t, &y);
        Pchip { t, y, slopes }
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.t[0], *self.t.last().unwrap())
    }

    /// Evaluates at `x` inside the domain; callers check the range.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.t.len();
        if x >= self.t[n - 1] {
            return self.y[n - 1];
        }
        // index of the interval with t[i] <= x < t[i+1]
        let i = self.t.partition_point(|&ti| ti <= x).saturating_sub(1);
        let h = self.t[i + 1] - self.t[i];
        let s = (x - self.t[i]) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        h00 * self.y[i]
            + h10 * h * self.slopes[i]
            + h01 * self.y[i + 1]
            + h11 * h * self.slopes[i + 1]
    }
}

fn pchip_slopes(t: &[f64], y: &[f64]) -> Vec<f64> {
    let n = t.len();
    let h: Vec<f64> = t.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
    if n == 2 {
        return vec![delta[0]; 2];
    }
    let mut d = vec![0.0; n];
    for k in 1..n - 1 {
        let (m0, m1) = (delta[k - 1], delta[k]);
        if m0 * m1 <= 0.0 {
            d[k] = 0.0;
        } else {
            let w1 = 2.0 * h[k] + h[k - 1];
            let w2 = h[k] + 2.0 * h[k - 1];
            d[k] = (w1 + w2) / (w1 / m0 + w2 / m1);
        }
    }
    d[0] = edge_slope(h[0], h[1], delta[0], delta[1]);
    d[n - 1] = edge_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    d
}

// one-sided three-point estimate, clipped to keep the end interval shape-preserving
fn edge_slope(h0: f64, h1: f64, m0: f64, m1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * m0 - h0 * m1) / (h0 + h1);
    if d.signum() != m0.signum() || m0 == 0.0 {
        0.0
    } else if m0.signum() != m1.signum() && d.abs() > 3.0 * m0.abs() {
        3.0 * m0
    } else {
        d
    }
}

/// A normalized, time-shifted signal with its interpolant.
#[derive(Debug, Clone)]
pub struct SampledSignal {
    abscissas: Vec<f64>,
    values: Vec<f64>,
    normalization: Normalization,
    time_origin: f64,
    interpolant: Pchip,
}

/// Values closer than this to 1 at `t = 0` are snapped to exactly 1.
const UNIT_SNAP: f64 = 1e-12;

pub fn normalize(raw: &RawSeries, mode: NormalizeMode) -> Result<SampledSignal> {
    let pts = raw.points();
    let (t0, raw0) = pts[0];
    let normalization = match mode {
        NormalizeMode::DivideByFirst => {
            if raw0 == 0.0 {
                return Err(Error::ZeroFirstValue);
            }
            Normalization {
                offset: 0.0,
                scale: 1.0 / raw0,
            }
        }
        NormalizeMode::Affine { a, b } => {
            if b == 0.0 || !b.is_finite() || !a.is_finite() {
                return Err(Error::InvalidConfig(format!(
                    "affine scale must be finite and nonzero, got a={a}, b={b}"
                )));
            }
            Normalization {
                offset: a,
                scale: b,
            }
        }
        NormalizeMode::None => Normalization {
            offset: 0.0,
            scale: 1.0,
        },
    };
    let v0 = normalization.apply(raw0);
    if (v0 - 1.0).abs() > UNIT_SNAP {
        return Err(Error::NotUnitAtOrigin(v0));
    }
    let mut abscissas = Vec::with_capacity(pts.len());
    let mut values = Vec::with_capacity(pts.len());
    for (i, &(t, v)) in pts.iter().enumerate() {
        let stored = if i == 0 { 1.0 } else { normalization.apply(v) };
        if !(stored > 0.0) {
            return Err(Error::NonPositiveAfterNormalization {
                index: i,
                t,
                value: stored,
            });
        }
        abscissas.push(t - t0);
        values.push(stored);
    }
    let interpolant = Pchip::new(abscissas.clone(), values.clone());
    Ok(SampledSignal {
        abscissas,
        values,
        normalization,
        time_origin: t0,
        interpolant,
    })
}

impl SampledSignal {
    pub fn abscissas(&self) -> &[f64] {
        &self.abscissas
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    /// Raw abscissa that maps to `t = 0`.
    pub fn time_origin(&self) -> f64 {
        self.time_origin
    }

    pub fn last_abscissa(&self) -> f64 {
        *self.abscissas.last().unwrap()
    }

    pub fn interpolant(&self) -> &Pchip {
        &self.interpolant
    }
}

impl FunctionSource for SampledSignal {
    fn value(&self, x: f64) -> Result<f64> {
        let upper = self.last_abscissa();
        if !(0.0..=upper).contains(&x) {
            return Err(Error::DomainCoverage {
                abscissa: x,
                lower: 0.0,
                upper,
                subset: None,
            });
        }
        Ok(self.interpolant.eval(x))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoverageReport {
    pub x: f64,
    /// Largest abscissa any subset's sequence asks for.
    pub required_max: f64,
    pub sampled_max: f64,
    pub pass: bool,
    /// Largest non-negative horizon this configuration can reach.
    pub max_feasible_x: f64,
}

pub fn coverage_check(sig: &SampledSignal, cfg: &GmpConfig, x: f64) -> Result<CoverageReport> {
    let family = enumerate_subsets(cfg.base());
    let mut required_max: f64 = 0.0;
    let mut reach: f64 = 0.0;
    for s in family.members() {
        let n = s.cardinality() as u32;
        required_max = required_max.max(sequence_point(s, cfg.r(), x.abs(), n)?);
        reach = reach.max(coefficient(s, cfg.r())? / cfg.r().powi(n as i32));
    }
    let sampled_max = sig.last_abscissa();
    Ok(CoverageReport {
        x,
        required_max,
        sampled_max,
        pass: x >= 0.0 && required_max <= sampled_max,
        max_feasible_x: sampled_max / reach,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Forecast {
    /// Estimate in normalized units.
    pub estimate: Estimate,
    pub raw_value: f64,
    pub normalization: Normalization,
    pub coverage: CoverageReport,
}

/// Forecasts the signal at horizon `x` (measured from the first sample).
pub fn forecast(sig: &SampledSignal, x: f64, cfg: &GmpConfig) -> Result<Forecast> {
    let coverage = coverage_check(sig, cfg, x)?;
    if !coverage.pass {
        return Err(Error::DomainCoverage {
            abscissa: if x < 0.0 { x } else { coverage.required_max },
            lower: 0.0,
            upper: coverage.sampled_max,
            subset: None,
        });
    }
    let estimate = estimate(sig, x, cfg)?;
    let raw_value = sig.normalization.invert(estimate.value);
    Ok(Forecast {
        estimate,
        raw_value,
        normalization: sig.normalization,
        coverage,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combinatorics::IndexSet;
    use crate::multiproduct::Parity;

    fn synth(f: impl Fn(f64) -> f64, step: f64, count: usize) -> String {
        let mut s = String::from("t,value\n");
        for i in 0..count {
            let t = i as f64 * step;
            s.push_str(&format!("{t},{}\n", f(t)));
        }
        s
    }

    #[test]
    fn csv_too_short() {
        assert_eq!(
            parse_csv("0,1\n1,1.2\n2,1.4").unwrap_err(),
            Error::FewPoints(3)
        );
    }

    #[test]
    fn csv_with_header_and_sorting() {
        let raw = parse_csv(&synth(|t| 1.0 + t.sin() / 2.0, 0.1, 41)).unwrap();
        assert_eq!(raw.len(), 41);
        let raw = parse_csv("t,value\n3,4\n1,2\n\n0,1\n2,3\n").unwrap();
        let ts: Vec<f64> = raw.points().iter().map(|p| p.0).collect();
        assert_eq!(ts, vec![0.0, 1.0, 2.0, 3.0]);
    }

    #[test]
    fn csv_errors() {
        assert_eq!(
            parse_csv("0,1\n1,2\n1,3\n2,4\n").unwrap_err(),
            Error::DuplicateAbscissa(1.0)
        );
        match parse_csv("0,1\n1,2\nx,3\n2,4\n").unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        match parse_csv("0,1,5\n").unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 1),
            other => panic!("unexpected {other:?}"),
        }
        // a header is only allowed first
        assert!(matches!(
            parse_csv("0,1\nt,value\n1,2\n2,3\n3,4\n"),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn normalize_modes() {
        let raw = parse_csv("0,2\n1,3\n2,5\n3,4\n").unwrap();
        let sig = normalize(&raw, NormalizeMode::DivideByFirst).unwrap();
        assert_eq!(sig.values()[0], 1.0);
        assert_eq!(sig.values()[2], 2.5);

        let raw = parse_csv(&synth(f64::sin, 0.1, 41)).unwrap();
        let sig = normalize(&raw, NormalizeMode::Affine { a: 1.0, b: 0.5 }).unwrap();
        assert!(sig.values().iter().all(|v| *v >= 0.5));
        assert_eq!(sig.values()[0], 1.0);

        let raw = parse_csv("0,1\n1,3\n2,-5\n3,4\n").unwrap();
        assert!(matches!(
            normalize(&raw, NormalizeMode::None),
            Err(Error::NonPositiveAfterNormalization { index: 2, .. })
        ));
        let raw = parse_csv("0,0\n1,3\n2,5\n3,4\n").unwrap();
        assert_eq!(
            normalize(&raw, NormalizeMode::DivideByFirst).unwrap_err(),
            Error::ZeroFirstValue
        );
        let raw = parse_csv("0,2\n1,3\n2,5\n3,4\n").unwrap();
        assert!(matches!(
            normalize(&raw, NormalizeMode::None),
            Err(Error::NotUnitAtOrigin(_))
        ));
    }

    #[test]
    fn time_shift() {
        let raw = parse_csv("10,1\n11,2\n12,3\n13,4\n").unwrap();
        let sig = normalize(&raw, NormalizeMode::None).unwrap();
        assert_eq!(sig.abscissas(), &[0.0, 1.0, 2.0, 3.0]);
        assert_eq!(sig.time_origin(), 10.0);
    }

    #[test]
    fn interpolant_reproduces_samples_and_stays_in_range() {
        let raw = parse_csv("0,1\n0.5,3\n1.5,0.2\n2,0.25\n3,4\n").unwrap();
        let sig = normalize(&raw, NormalizeMode::None).unwrap();
        for (t, v) in sig.abscissas().iter().zip(sig.values()) {
            assert_eq!(sig.value(*t).unwrap(), *v);
        }
        // no overshoot below the smallest sample
        for i in 0..=3000 {
            let t = i as f64 * 1e-3;
            assert!(sig.value(t).unwrap() >= 0.2 - 1e-15);
        }
        assert!(matches!(sig.value(3.01), Err(Error::DomainCoverage { .. })));
        assert!(sig.value(-1e-9).is_err());
    }

    #[test]
    fn pchip_reproduces_linear_data() {
        let t: Vec<f64> = (0..6).map(|i| i as f64 * 0.7).collect();
        let y: Vec<f64> = t.iter().map(|t| 1.0 + 2.0 * t).collect();
        let p = Pchip::new(t, y);
        for i in 0..100 {
            let x = i as f64 * 0.035;
            assert!((p.eval(x) - (1.0 + 2.0 * x)).abs() < 1e-13);
        }
    }

    #[test]
    fn coverage_examples() {
        let raw = parse_csv(&synth(|t| 1.0 + t.sin() / 2.0, 0.05, 81)).unwrap();
        let sig = normalize(&raw, NormalizeMode::None).unwrap();
        let half_sin_cfg = GmpConfig::new(
            2.0,
            40,
            IndexSet::new(vec![1, 2, 3, 4]).unwrap(),
            Parity::All,
        )
        .unwrap();
        let rep = coverage_check(&sig, &half_sin_cfg, 4.0).unwrap();
        // the {4} sequence dominates: 15^{1/4} * 4 / 2
        assert!((rep.required_max - 15f64.powf(0.25) * 2.0).abs() < 1e-14);
        assert!(rep.pass);
        assert!((rep.max_feasible_x - 4.0 / (15f64.powf(0.25) / 2.0)).abs() < 1e-12);
        assert!(!coverage_check(&sig, &half_sin_cfg, 4.1).unwrap().pass);
        assert!(coverage_check(&sig, &half_sin_cfg, 3.0).unwrap().pass);
        assert!(coverage_check(&sig, &half_sin_cfg, 0.0).unwrap().pass);

        let raw = parse_csv(&synth(|t| 1.0 + t, 0.25, 5)).unwrap();
        let sig = normalize(&raw, NormalizeMode::None).unwrap();
        let cfg = GmpConfig::new(2.0, 10, IndexSet::new(vec![1]).unwrap(), Parity::All).unwrap();
        let rep = coverage_check(&sig, &cfg, 100.0).unwrap();
        assert!(!rep.pass);
        assert_eq!(rep.max_feasible_x, 2.0);
        assert!(matches!(
            forecast(&sig, 100.0, &cfg),
            Err(Error::DomainCoverage { .. })
        ));
    }

    #[test]
    fn forecast_constant_signal() {
        let raw = parse_csv("0,5\n1,5\n2,5\n3,5\n4,5\n").unwrap();
        let sig = normalize(&raw, NormalizeMode::DivideByFirst).unwrap();
        let cfg = GmpConfig::new(1.5, 20, IndexSet::new(vec![1, 2]).unwrap(), Parity::All).unwrap();
        let fc = forecast(&sig, 2.0, &cfg).unwrap();
        assert_eq!(fc.estimate.value, 1.0);
        assert!((fc.raw_value - 5.0).abs() < 1e-14);
    }

    #[test]
    fn forecast_exponential() {
        let raw = parse_csv(&synth(f64::exp, 0.01, 201)).unwrap();
        let sig = normalize(&raw, NormalizeMode::None).unwrap();
        let cfg = GmpConfig::new(2.0, 20, IndexSet::new(vec![1]).unwrap(), Parity::All).unwrap();
        let fc = forecast(&sig, 1.5, &cfg).unwrap();
        let expected = (1.5 * (1.0 - 2f64.powi(-20))).exp();
        assert!(
            (fc.estimate.value - expected).abs() < 1e-5,
            "{}",
            fc.estimate.value
        );
    }
}
