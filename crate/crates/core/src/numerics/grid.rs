use serde::Serialize;

use crate::error::{Error, Result};

/// Relative tolerance on node spacing for a grid to count as uniform.
const UNIFORM_RTOL: f64 = 1e-9;

/// Real samples on strictly increasing nodes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridFunction {
    nodes: Vec<f64>,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(nodes: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if nodes.len() != values.len() {
            return Err(Error::InvalidGrid(format!(
                "{} nodes but {} values",
                nodes.len(),
                values.len()
            )));
        }
        if nodes.len() < 3 {
            return Err(Error::InvalidGrid(format!("need at least 3 nodes, got {}", nodes.len())));
        }
        if let Some(i) = nodes.iter().position(|x| !x.is_finite()) {
            return Err(Error::InvalidGrid(format!("node {i} is not finite")));
        }
        if let Some(i) = nodes.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::InvalidGrid(format!("nodes not strictly increasing at {}", i + 1)));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidGrid(format!("value at node {i} is not finite")));
        }
        Ok(Self { nodes, values })
    }

    /// `n` equally spaced nodes on `[start, end]`, sampling `f`.
    pub fn uniform(start: f64, end: f64, n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let nodes = uniform_nodes(start, end, n);
        let values = nodes.iter().map(|&x| f(x)).collect();
        Self::new(nodes, values)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn first_node(&self) -> f64 {
        self.nodes[0]
    }

    pub fn last_node(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    /// Same nodes, values mapped through `f`.
    pub fn map(&self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let values = self.nodes.iter().zip(&self.values).map(|(&x, &v)| f(x, v)).collect();
        Self::new(self.nodes.clone(), values)
    }

    /// Nodes shifted by `offset`, values untouched.
    pub fn shifted(&self, offset: f64) -> Result<Self> {
        Self::new(self.nodes.iter().map(|x| x + offset).collect(), self.values.clone())
    }

    /// Common spacing when the grid is uniform.
    pub fn spacing(&self) -> Result<f64> {
        let n = self.nodes.len();
        let h = (self.nodes[n - 1] - self.nodes[0]) / (n - 1) as f64;
        for (i, w) in self.nodes.windows(2).enumerate() {
            if ((w[1] - w[0]) - h).abs() > UNIFORM_RTOL * h {
                return Err(Error::NonUniformGrid { index: i + 1 });
            }
        }
        Ok(h)
    }

    pub fn is_uniform(&self) -> bool {
        self.spacing().is_ok()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// `n` nodes `start + i*h`; the last node is pinned to `end`.
pub(crate) fn uniform_nodes(start: f64, end: f64, n: usize) -> Vec<f64> {
    if n == 0 {
        return Vec::new();
    }
    if n == 1 {
        return vec![start];
    }
    let h = (end - start) / (n - 1) as f64;
    let mut nodes: Vec<f64> = (0..n).map(|i| start + i as f64 * h).collect();
    nodes[n - 1] = end;
    nodes
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_grids() {
        assert!(GridFunction::new(vec![0.0, 1.0], vec![0.0, 1.0]).is_err());
        assert!(GridFunction::new(vec![0.0, 1.0, 1.0], vec![0.0; 3]).is_err());
        assert!(GridFunction::new(vec![0.0, 1.0, 2.0], vec![0.0, f64::NAN, 1.0]).is_err());
        assert!(GridFunction::new(vec![0.0, 1.0, 2.0], vec![0.0; 2]).is_err());
    }

    #[test]
    fn spacing_detects_non_uniform() {
        let g = GridFunction::uniform(0.0, 1.0, 11, |x| x).unwrap();
        assert!((g.spacing().unwrap() - 0.1).abs() < 1e-15);
        let g = GridFunction::new(vec![0.0, 0.1, 0.3, 0.4], vec![0.0; 4]).unwrap();
        assert!(matches!(g.spacing(), Err(Error::NonUniformGrid { .. })));
    }
}
