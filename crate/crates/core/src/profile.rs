//! Sampled radial functions and the radius grids they live on.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::numerics;

/// A radial function sampled at strictly ascending positive radii, with an
/// optional finite limit at the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile {
    nodes: Vec<f64>,
    values: Vec<f64>,
    center_value: Option<f64>,
}

impl RadialProfile {
    pub fn new(nodes: Vec<f64>, values: Vec<f64>, center_value: Option<f64>) -> Result<Self> {
        if nodes.len() != values.len() {
            return Err(Error::invalid(format!(
                "{} nodes but {} values",
                nodes.len(),
                values.len()
            )));
        }
        if nodes.is_empty() {
            return Err(Error::invalid("profile needs at least one node"));
        }
        if let Some(i) = nodes.iter().position(|r| !(r.is_finite() && *r > 0.0)) {
            return Err(Error::invalid(format!("node {i} is not a positive radius")));
        }
        if let Some(i) = nodes.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::invalid(format!(
                "nodes not strictly increasing at index {}",
                i + 1
            )));
        }
        if values.iter().any(|v| !v.is_finite()) || center_value.is_some_and(|c| !c.is_finite()) {
            return Err(Error::invalid("profile values must be finite"));
        }
        Ok(Self {
            nodes,
            values,
            center_value,
        })
    }

    /// Samples `f` at `nodes`; `center_value` is taken as given.
    pub fn from_fn(nodes: Vec<f64>, center_value: Option<f64>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = nodes.iter().map(|&r| f(r)).collect();
        Self::new(nodes, values, center_value)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn center_value(&self) -> Option<f64> {
        self.center_value
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn r_min(&self) -> f64 {
        self.nodes[0]
    }

    pub fn r_max(&self) -> f64 {
        *self.nodes.last().unwrap()
    }

    pub fn last_value(&self) -> f64 {
        *self.values.last().unwrap()
    }

    pub fn min_value(&self) -> f64 {
        self.all_values().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.all_values().fold(f64::NEG_INFINITY, f64::max)
    }

    fn all_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.center_value.into_iter().chain(self.values.iter().copied())
    }

    /// Returns a copy with `c` added to every value.
    pub fn shifted(&self, c: f64) -> Self {
        Self {
            nodes: self.nodes.clone(),
            values: self.values.iter().map(|v| v + c).collect(),
            center_value: self.center_value.map(|v| v + c),
        }
    }

    /// `r * f'(r)` at the nodes, by five-point differences in `ln r`.
    pub fn log_derivative(&self) -> Vec<f64> {
        let t: Vec<f64> = self.nodes.iter().map(|r| r.ln()).collect();
        numerics::derivative(&t, &self.values)
    }

    /// `f'(r)` at the nodes.
    pub fn derivative(&self) -> Vec<f64> {
        self.log_derivative()
            .into_iter()
            .zip(&self.nodes)
            .map(|(d, r)| d / r)
            .collect()
    }

    /// First node (zero tolerance) where the profile fails to strictly decrease.
    pub fn first_non_decrease(&self) -> Option<usize> {
        if let Some(c) = self.center_value {
            if self.values[0] >= c {
                return Some(0);
            }
        }
        self.values.windows(2).position(|w| w[1] >= w[0]).map(|i| i + 1)
    }

    pub fn interpolant(&self) -> ProfileInterpolant {
        ProfileInterpolant::new(self)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["r", "value"])?;
        if let Some(c) = self.center_value {
            w.write_record(["0".to_string(), fmt_f64(c)])?;
        }
        for (r, v) in self.nodes.iter().zip(&self.values) {
            w.write_record([fmt_f64(*r), fmt_f64(*v)])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.len() != 2 || &headers[0] != "r" || &headers[1] != "value" {
            return Err(Error::invalid("profile CSV header must be `r,value`"));
        }
        let mut nodes = Vec::new();
        let mut values = Vec::new();
        let mut center = None;
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let r: f64 = parse_field(&rec, 0, line)?;
            let v: f64 = parse_field(&rec, 1, line)?;
            if r == 0.0 {
                if line != 0 {
                    return Err(Error::invalid("the r = 0 row must come first"));
                }
                center = Some(v);
            } else {
                nodes.push(r);
                values.push(v);
            }
        }
        Self::new(nodes, values, center)
    }
}

fn parse_field(rec: &csv::StringRecord, i: usize, line: usize) -> Result<f64> {
    rec.get(i)
        .ok_or_else(|| Error::invalid(format!("row {line}: missing column {i}")))?
        .parse()
        .map_err(|e| Error::invalid(format!("row {line}: {e}")))
}

/// Seventeen significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Piecewise cubic Hermite interpolation in `ln r` with fourth-order slope
/// estimates, limited to keep monotone data monotone. Below the first node the profile is continued towards its center
/// value along `c + (v0 - c) (r / r0)^p`, where `p` is the local power read off
/// the first node; without a center value it is held constant. Above the last
/// node the last value is held.
#[derive(Debug, Clone)]
pub struct ProfileInterpolant {
    t: Vec<f64>,
    values: Vec<f64>,
    slopes: Vec<f64>,
    center: Option<(f64, f64)>,
}

impl ProfileInterpolant {
    fn new(p: &RadialProfile) -> Self {
        let t: Vec<f64> = p.nodes.iter().map(|r| r.ln()).collect();
        let slopes = if t.len() >= 2 {
            let mut d = numerics::derivative(&t, &p.values);
            let v = &p.values;
            if v.windows(2).all(|w| w[1] <= w[0]) || v.windows(2).all(|w| w[1] >= w[0]) {
                numerics::limit_monotone(&t, v, &mut d);
            }
            d
        } else {
            vec![0.0]
        };
        let center = p.center_value.map(|c| {
            let gap = p.values[0] - c;
            let power = if gap != 0.0 { slopes[0] / gap } else { 0.0 };
            let power = if power.is_finite() && power > 0.0 {
                power.min(8.0)
            } else {
                1.0
            };
            (c, power)
        });
        Self {
            t,
            values: p.values.clone(),
            slopes,
            center,
        }
    }

    pub fn eval(&self, r: f64) -> f64 {
        let n = self.t.len();
        if r <= 0.0 {
            return self.center.map_or(self.values[0], |(c, _)| c);
        }
        let x = r.ln();
        if x <= self.t[0] {
            return match self.center {
                Some((c, p)) => c + (self.values[0] - c) * ((x - self.t[0]) * p).exp(),
                None => self.values[0],
            };
        }
        if x >= self.t[n - 1] {
            return self.values[n - 1];
        }
        let i = numerics::segment_index(&self.t, x);
        numerics::hermite(
            self.t[i],
            self.t[i + 1],
            self.values[i],
            self.values[i + 1],
            self.slopes[i],
            self.slopes[i + 1],
            x,
        )
    }
}

/// `n` radii in geometric progression from `r_min` to `r_max`.
pub fn geometric_grid(r_min: f64, r_max: f64, n: usize) -> Vec<f64> {
    assert!(r_min > 0.0 && r_max > r_min && n >= 2);
    let a = r_min.ln();
    let step = (r_max.ln() - a) / (n - 1) as f64;
    let mut g: Vec<f64> = (0..n).map(|i| (a + step * i as f64).exp()).collect();
    g[0] = r_min;
    g[n - 1] = r_max;
    g
}

pub const DEFAULT_R_MIN: f64 = 1e-6;

/// Default grid on `[1e-6, r_max]`: a quarter of the nodes cover
/// `[r_min, 100 r_min]` geometrically, the rest cover `[100 r_min, r_max]`.
/// Falls back to a single geometric progression when `r_max <= 100 r_min`.
pub fn default_grid(r_max: f64, n: usize) -> Vec<f64> {
    split_geometric_grid(DEFAULT_R_MIN, r_max, n)
}

pub fn split_geometric_grid(r_min: f64, r_max: f64, n: usize) -> Vec<f64> {
    let knee = 100.0 * r_min;
    if r_max <= knee || n < 8 {
        return geometric_grid(r_min, r_max, n);
    }
    let inner = n / 4;
    let mut g = geometric_grid(r_min, knee, inner + 1);
    g.pop();
    g.extend(geometric_grid(knee, r_max, n - inner));
    g
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monotone_data_gives_a_monotone_interpolant() {
        let p = RadialProfile::new(vec![2.6e-8, 9e-3, 1.3e-2, 1.6e-2, 0.5], vec![0.894, 0.8939, 0.8938, 0.8937, 0.1], Some(0.894)).unwrap();
        let it = p.interpolant();
        let mut prev = f64::INFINITY;
        for k in 0..=2000 {
            let v = it.eval(1e-9 * (1e9f64 * 0.5).powf(k as f64 / 2000.0));
            assert!(v <= prev + 1e-15 && v <= 0.894 + 1e-15);
            prev = v;
        }
    }

    #[test]
    fn rejects_bad_nodes() {
        assert!(RadialProfile::new(vec![1.0, 1.0], vec![0.0, 0.0], None).is_err());
        assert!(RadialProfile::new(vec![0.0, 1.0], vec![0.0, 0.0], None).is_err());
        assert!(RadialProfile::new(vec![1.0], vec![0.0, 0.0], None).is_err());
    }

    #[test]
    fn default_grid_puts_a_quarter_of_nodes_near_the_origin() {
        let g = default_grid(1.0, 400);
        assert_eq!(g.len(), 400);
        let near = g.iter().filter(|&&r| r <= 100.0 * DEFAULT_R_MIN * (1.0 + 1e-12)).count();
        assert_eq!(near, 101);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(g[0], DEFAULT_R_MIN);
        assert_eq!(*g.last().unwrap(), 1.0);
    }

    #[test]
    fn csv_round_trip_keeps_center_and_bits() {
        let p = RadialProfile::new(vec![0.1, 0.5, 1.0], vec![1.0 / 3.0, -2.5, 1e-300], Some(2.0_f64.ln()))
            .unwrap();
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("r,value\n0,"));
        let q = RadialProfile::read_csv(buf.as_slice()).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn interpolant_tracks_smooth_functions() {
        let nodes = geometric_grid(1e-3, 2.0, 300);
        let f = |r: f64| (1.0 + r * r).recip().ln();
        let p = RadialProfile::from_fn(nodes, Some(0.0), f).unwrap();
        let it = p.interpolant();
        for k in 0..1000 {
            let r = 1e-4 + 1.99 * k as f64 / 1000.0;
            assert!((it.eval(r) - f(r)).abs() < 1e-8, "r = {r}");
        }
    }

    #[test]
    fn detects_plateaus() {
        let p = RadialProfile::new(vec![0.1, 0.2, 0.3], vec![3.0, 2.0, 2.0], None).unwrap();
        assert_eq!(p.first_non_decrease(), Some(2));
        let q = RadialProfile::new(vec![0.1, 0.2], vec![3.0, 2.0], Some(3.0)).unwrap();
        assert_eq!(q.first_non_decrease(), Some(0));
    }
}
