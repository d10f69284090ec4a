//! `x,value` CSV serialization of curves. Metadata travels in leading
//! `# key: value` comment lines.

use std::fmt::Write as _;

use super::{DensityCurve, EmpiricalCdf, Grid};
use crate::error::{Error, Result};
use crate::scalar::{to_f64, Real};

fn write_header(out: &mut String, meta: &[(&str, String)]) {
    for (k, v) in meta {
        let _ = writeln!(out, "# {k}: {v}");
    }
    out.push_str("x,value\n");
}

impl<T: Real> DensityCurve<T> {
    pub fn to_csv(&self, meta: &[(&str, String)]) -> String {
        let mut out = String::with_capacity(self.values().len() * 24);
        let mut all = vec![("bandwidth", format!("{}", to_f64(self.bandwidth())))];
        all.extend(meta.iter().cloned());
        write_header(&mut out, &all);
        for (x, v) in self.xs().zip(self.values()) {
            let _ = writeln!(out, "{:e},{:e}", to_f64(x), to_f64(*v));
        }
        out
    }
}

impl<T: Real> EmpiricalCdf<T> {
    /// One row per distinct jump: the location and `F` just after it. Jumps
    /// within a relative 1e-9 of each other share a row.
    pub fn to_csv(&self, meta: &[(&str, String)]) -> String {
        let mut out = String::new();
        let mut all = vec![("n", self.len().to_string())];
        all.extend(meta.iter().cloned());
        write_header(&mut out, &all);
        for (x, f) in self.steps_merged(crate::scalar::lit(1e-9)) {
            let _ = writeln!(out, "{:e},{:e}", to_f64(x), to_f64(f));
        }
        out
    }
}

/// Parsed `x,value` CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveCsv {
    pub meta: Vec<(String, String)>,
    pub xs: Vec<f64>,
    pub values: Vec<f64>,
}

impl CurveCsv {
    pub fn meta(&self, key: &str) -> Option<&str> {
        self.meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    /// Interprets the rows as a density on a uniform grid.
    pub fn into_density(self) -> Result<DensityCurve<f64>> {
        let n = self.xs.len();
        if n < 2 {
            return Err(Error::Io("density CSV needs at least two rows".into()));
        }
        let grid = Grid::new(self.xs[0], self.xs[n - 1], n)?;
        let h = grid.step();
        for (k, &x) in self.xs.iter().enumerate() {
            if (x - grid.x(k)).abs() > 1e-6 * h.max(1e-12) + 1e-12 * x.abs() {
                return Err(Error::Io(format!("row {k}: x={x} is off the uniform grid")));
            }
        }
        let bw = self.meta("bandwidth").and_then(|s| s.parse().ok()).unwrap_or(0.0);
        DensityCurve::new(grid, self.values, bw)
    }

    /// Interprets the rows as ECDF jumps and rebuilds the sample.
    pub fn into_ecdf(self) -> Result<EmpiricalCdf<f64>> {
        let n: usize = match self.meta("n").and_then(|s| s.parse().ok()) {
            Some(n) => n,
            None => {
                let mut prev = 0.0;
                let min_jump = self
                    .values
                    .iter()
                    .map(|&f| {
                        let j = f - prev;
                        prev = f;
                        j
                    })
                    .fold(f64::INFINITY, f64::min);
                (1.0 / min_jump).round() as usize
            }
        };
        let mut sample = Vec::with_capacity(n);
        let mut prev = 0usize;
        for (&x, &f) in self.xs.iter().zip(&self.values) {
            let upto = (f * n as f64).round() as usize;
            if upto < prev || upto > n {
                return Err(Error::Io(format!("ECDF value {f} at x={x} is not a valid step")));
            }
            sample.extend(std::iter::repeat_n(x, upto - prev));
            prev = upto;
        }
        if sample.is_empty() {
            return Err(Error::Io("ECDF CSV has no rows".into()));
        }
        Ok(EmpiricalCdf::from_sample(sample))
    }
}

/// Reads a CSV written by the `to_csv` methods.
pub fn read_curve_csv(text: &str) -> Result<CurveCsv> {
    let mut meta = Vec::new();
    let mut xs = Vec::new();
    let mut values = Vec::new();
    let mut seen_header = false;
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(c) = line.strip_prefix('#') {
            if let Some((k, v)) = c.split_once(':') {
                meta.push((k.trim().to_string(), v.trim().to_string()));
            }
            continue;
        }
        if !seen_header {
            if line.replace(' ', "") != "x,value" {
                return Err(Error::Io(format!("line {}: expected header \"x,value\"", idx + 1)));
            }
            seen_header = true;
            continue;
        }
        let (a, b) = line
            .split_once(',')
            .ok_or_else(|| Error::Io(format!("line {}: expected two columns", idx + 1)))?;
        let parse = |s: &str| {
            s.trim().parse::<f64>().map_err(|_| Error::Io(format!("line {}: bad number {s:?}", idx + 1)))
        };
        xs.push(parse(a)?);
        values.push(parse(b)?);
    }
    if !seen_header {
        return Err(Error::Io("missing \"x,value\" header".into()));
    }
    Ok(CurveCsv { meta, xs, values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::kernel_density_of;
    use proptest::prelude::*;

    #[test]
    fn triangle_cdf_csv() {
        let e = EmpiricalCdf::from_sample(vec![2.0, -1.0, -1.0]);
        let text = e.to_csv(&[("scaling", "raw".into())]);
        assert!(text.contains("x,value\n-1e0,6.666666666666666e-1\n2e0,1e0\n"));
        let back = read_curve_csv(&text).unwrap();
        assert_eq!(back.meta("scaling"), Some("raw"));
        assert_eq!(back.into_ecdf().unwrap(), e);
    }

    proptest! {
        #[test]
        fn density_csv_round_trip(xs in prop::collection::vec(-2.0f64..2.0, 1..20), sigma in 0.1f64..0.5) {
            let grid = Grid::covering(-2.0, 2.0, 4.0 * sigma, 257);
            let c = kernel_density_of(&xs, sigma, grid).unwrap();
            let back = read_curve_csv(&c.to_csv(&[])).unwrap().into_density().unwrap();
            prop_assert_eq!(back.values(), c.values());
            prop_assert_eq!(back.bandwidth(), sigma);
            prop_assert!((back.grid().lo - grid.lo).abs() < 1e-12 && (back.grid().hi - grid.hi).abs() < 1e-12);
        }

        #[test]
        fn ecdf_csv_round_trip(xs in prop::collection::vec(-3i32..3, 1..30)) {
            let e = EmpiricalCdf::from_sample(xs.iter().map(|&v| v as f64 * 0.5).collect());
            let text = e.to_csv(&[]);
            prop_assert_eq!(read_curve_csv(&text).unwrap().into_ecdf().unwrap(), e);
        }
    }
}
