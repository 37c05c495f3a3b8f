//! Gridded results: named axes, row-major observables and free-form metadata.

use std::io::Write;

use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::evolve::fmt;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Axis {
    pub name: String,
    pub values: Vec<f64>,
}

impl Axis {
    pub fn new(name: impl Into<String>, values: Vec<f64>) -> Self {
        Axis { name: name.into(), values }
    }
}

/// `count` evenly spaced points from `start` to `stop` inclusive.
pub fn linspace(start: f64, stop: f64, count: usize) -> Vec<f64> {
    match count {
        0 => vec![],
        1 => vec![start],
        n => (0..n).map(|k| if k == n - 1 { stop } else { start + (stop - start) * k as f64 / (n - 1) as f64 }).collect(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepResult {
    pub axes: Vec<Axis>,
    /// Each observable holds one value per grid point, last axis fastest.
    pub observables: Vec<(String, Vec<f64>)>,
    pub metadata: Map<String, Value>,
}

impl SweepResult {
    pub fn new(axes: Vec<Axis>, observables: Vec<(String, Vec<f64>)>) -> Result<Self> {
        let r = SweepResult { axes, observables, metadata: Map::new() };
        r.validate()?;
        Ok(r)
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.values.len()).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.len();
        for (name, v) in &self.observables {
            if v.len() != n {
                return Err(Error::InvalidParameter(format!("observable {name} has {} cells, grid has {n}", v.len())));
            }
            if let Some(k) = v.iter().position(|x| !x.is_finite()) {
                return Err(Error::NonFinite(format!("observable {name} at cell {k}: {:?}", self.coords(k))));
            }
        }
        Ok(())
    }

    /// Axis values of flat cell `k`.
    pub fn coords(&self, mut k: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.axes.len()];
        for (i, a) in self.axes.iter().enumerate().rev() {
            let n = a.values.len();
            out[i] = a.values[k % n];
            k /= n;
        }
        out
    }

    pub fn observable(&self, name: &str) -> Option<&[f64]> {
        self.observables.iter().find(|(n, _)| n == name).map(|(_, v)| v.as_slice())
    }

    /// Cell with the largest value of an observable.
    pub fn argmax(&self, name: &str) -> Option<(Vec<f64>, f64)> {
        let v = self.observable(name)?;
        let (k, x) = v.iter().enumerate().fold((0, f64::NEG_INFINITY), |acc, (k, &x)| if x > acc.1 { (k, x) } else { acc });
        Some((self.coords(k), x))
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let header: Vec<&str> = self.axes.iter().map(|a| a.name.as_str()).chain(self.observables.iter().map(|o| o.0.as_str())).collect();
        wr.write_record(&header)?;
        for k in 0..self.len() {
            let row: Vec<String> = self.coords(k).into_iter().chain(self.observables.iter().map(|o| o.1[k])).map(fmt).collect();
            wr.write_record(&row)?;
        }
        wr.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_layout() {
        let r = SweepResult::new(
            vec![Axis::new("a", vec![1.0, 2.0]), Axis::new("b", vec![10.0, 20.0, 30.0])],
            vec![("f".into(), vec![0.0, 1.0, 2.0, 3.0, 9.0, 5.0])],
        )
        .unwrap();
        assert_eq!(r.len(), 6);
        assert_eq!(r.coords(4), vec![2.0, 20.0]);
        assert_eq!(r.argmax("f").unwrap(), (vec![2.0, 20.0], 9.0));
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert_eq!(s.lines().count(), 7);
        assert!(s.starts_with("a,b,f\n1e0,1e1,0e0\n"));
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(SweepResult::new(vec![Axis::new("a", vec![1.0])], vec![("f".into(), vec![1.0, 2.0])]).is_err());
        assert!(SweepResult::new(vec![Axis::new("a", vec![1.0])], vec![("f".into(), vec![f64::NAN])]).is_err());
    }

    #[test]
    fn linspace_endpoints() {
        assert_eq!(linspace(0.0, 1.0, 11)[10], 1.0);
        assert_eq!(linspace(0.3, 1.0, 1), vec![0.3]);
        assert!((linspace(0.0, 1.0, 11)[3] - 0.3).abs() < 1e-16);
    }
}
