//! Bounded test-function families for orthogonality tests.
//!
//! The default family over `k` conditioning coordinates is
//! `{1} ∪ {tanh((z_i - m_i)/s_i)} ∪ {pairwise products}`, all mapping into
//! `[-1, 1]`. Standardization constants `(m, s)` are frozen from a pilot run
//! before the main run so the functions are deterministic and measurable with
//! respect to the declared coordinates only.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
enum Member {
    Const,
    Tanh(usize),
    Prod(usize, usize),
}

/// A frozen family of bounded maps from conditioning coordinates to `[-1, 1]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TestFunctionFamily {
    coords: usize,
    center: Vec<f64>,
    scale: Vec<f64>,
    members: Vec<Member>,
}

impl TestFunctionFamily {
    /// Freeze a family from pilot samples, one column per coordinate.
    /// Degenerate coordinates (zero pilot spread) get unit scale; their tanh
    /// members are then identically zero, which is the correct behaviour for
    /// deterministic inputs.
    pub fn standardized(pilot_columns: &[Vec<f64>]) -> Self {
        let coords = pilot_columns.len();
        let mut center = Vec::with_capacity(coords);
        let mut scale = Vec::with_capacity(coords);
        for col in pilot_columns {
            let n = col.len().max(1) as f64;
            let m = col.iter().sum::<f64>() / n;
            let v = col.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n;
            center.push(m);
            scale.push(if v.sqrt() > 1e-12 { v.sqrt() } else { 1.0 });
        }
        let mut members = vec![Member::Const];
        for i in 0..coords {
            members.push(Member::Tanh(i));
        }
        for i in 0..coords {
            for j in (i + 1)..coords {
                members.push(Member::Prod(i, j));
            }
        }
        Self {
            coords,
            center,
            scale,
            members,
        }
    }

    pub fn coords(&self) -> usize {
        self.coords
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    fn tanh_coord(&self, i: usize, z: &[f64]) -> f64 {
        ((z[i] - self.center[i]) / self.scale[i]).tanh()
    }

    /// Evaluate member `k` on one coordinate tuple.
    pub fn eval(&self, k: usize, z: &[f64]) -> f64 {
        debug_assert_eq!(z.len(), self.coords);
        match self.members[k] {
            Member::Const => 1.0,
            Member::Tanh(i) => self.tanh_coord(i, z),
            Member::Prod(i, j) => self.tanh_coord(i, z) * self.tanh_coord(j, z),
        }
    }

    pub fn label(&self, k: usize) -> String {
        match self.members[k] {
            Member::Const => "g=1".to_string(),
            Member::Tanh(i) => format!("g=tanh(z{i})"),
            Member::Prod(i, j) => format!("g=tanh(z{i})*tanh(z{j})"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn family_size_and_bounds() {
        let pilot = vec![vec![0.0, 1.0, 2.0], vec![1.0, 1.5, 2.0], vec![-1.0, 0.0, 1.0]];
        let fam = TestFunctionFamily::standardized(&pilot);
        assert_eq!(fam.len(), 1 + 3 + 3);
        for k in 0..fam.len() {
            let g = fam.eval(k, &[10.0, -30.0, 5.0]);
            assert!(g.abs() <= 1.0, "{} out of bounds: {g}", fam.label(k));
        }
    }

    #[test]
    fn degenerate_coordinate_gives_zero_member() {
        let pilot = vec![vec![2.0; 100]];
        let fam = TestFunctionFamily::standardized(&pilot);
        assert_eq!(fam.eval(1, &[2.0]), 0.0);
    }
}
