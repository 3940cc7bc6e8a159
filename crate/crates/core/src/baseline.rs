//! Comparison shifts: adjacency, Laplacian and the masked least-squares fit.

use core::fmt;
use core::str::FromStr;

use nalgebra::DMatrix;

use crate::graph::DirectedGraph;
use crate::{Error, Result};

/// Every shift the experiments compare, with its output label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ShiftMethod {
    Designed,
    Adjacency,
    Laplacian,
    Ls,
}

impl ShiftMethod {
    pub const ALL: [ShiftMethod; 4] = [
        ShiftMethod::Designed,
        ShiftMethod::Adjacency,
        ShiftMethod::Laplacian,
        ShiftMethod::Ls,
    ];

    pub fn label(self) -> &'static str {
        match self {
            ShiftMethod::Designed => "designed",
            ShiftMethod::Adjacency => "adjacency",
            ShiftMethod::Laplacian => "laplacian",
            ShiftMethod::Ls => "ls",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for ShiftMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for ShiftMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ShiftMethod::ALL
            .into_iter()
            .find(|m| m.label() == s)
            .ok_or_else(|| Error::UnknownMethod(s.into()))
    }
}

/// Shifts read straight off the graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BaselineKind {
    Adjacency,
    Laplacian,
}

impl FromStr for BaselineKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "adjacency" => Ok(BaselineKind::Adjacency),
            "laplacian" => Ok(BaselineKind::Laplacian),
            other => Err(Error::UnknownMethod(other.into())),
        }
    }
}

pub fn baseline_shift(g: &DirectedGraph, kind: BaselineKind) -> DMatrix<f64> {
    match kind {
        BaselineKind::Adjacency => g.adjacency_matrix(),
        BaselineKind::Laplacian => g.laplacian_matrix(),
    }
}

/// Closest matrix to `p` in Frobenius norm among those supported on the
/// diagonal and the graph's in-neighbor entries: `p` masked to the support.
pub fn ls_shift(g: &DirectedGraph, p: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = g.node_count();
    if p.shape() != (n, n) {
        return Err(Error::DimensionMismatch {
            what: "target size vs graph nodes",
            expected: n,
            found: p.nrows(),
        });
    }
    Ok(DMatrix::from_fn(n, n, |i, j| {
        if g.allows_shift_entry(i, j) {
            p[(i, j)]
        } else {
            0.0
        }
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::subspace::SubspaceBasis;

    #[test]
    fn labels_round_trip() {
        for m in ShiftMethod::ALL {
            assert_eq!(m.label().parse::<ShiftMethod>().unwrap(), m);
        }
        assert_eq!(
            "spectral".parse::<ShiftMethod>(),
            Err(Error::UnknownMethod("spectral".into()))
        );
        assert!("ls".parse::<BaselineKind>().is_err());
    }

    #[test]
    fn cycle_baselines() {
        let g = DirectedGraph::cycle(3).unwrap();
        let perm = DMatrix::from_row_slice(3, 3, &[0., 0., 1., 1., 0., 0., 0., 1., 0.]);
        assert_eq!(baseline_shift(&g, BaselineKind::Adjacency), perm);
        assert_eq!(
            baseline_shift(&g, BaselineKind::Laplacian),
            DMatrix::identity(3, 3) - perm
        );
    }

    #[test]
    fn ls_on_complete_and_empty_support() {
        let b = SubspaceBasis::random(4, 2, 1).unwrap();
        let p = b.proj();
        assert_eq!(&ls_shift(&DirectedGraph::complete(4).unwrap(), p).unwrap(), p);
        let empty = DirectedGraph::new(4, []).unwrap();
        assert_eq!(
            ls_shift(&empty, p).unwrap(),
            DMatrix::from_diagonal(&p.diagonal())
        );
    }
}
