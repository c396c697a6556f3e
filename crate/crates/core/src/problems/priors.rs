use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::cholesky::cholesky_factor;
use crate::linalg::dense::DenseMatrix;
use crate::linalg::operator::{KroneckerOperator, LinearOperator, OpRef};
use crate::linalg::sparse::CscMatrix;
use crate::problems::tomography::PixelGrid;
use crate::sampler::{standard_normal_vec, RngStream};
use crate::whitening::Prior;

/// `tridiag(-1, 2, -1) + λ⁻² I` of size `n`. `λ = ∞` drops the shift.
pub fn second_difference(n: usize, lambda: f64) -> DenseMatrix {
    let shift = if lambda.is_infinite() { 0.0 } else { 1.0 / (lambda * lambda) };
    DenseMatrix::from_fn(n, n, |i, j| {
        if i == j {
            2.0 + shift
        } else if i.abs_diff(j) == 1 {
            -1.0
        } else {
            0.0
        }
    })
}

/// Anisotropic Gaussian field prior `L x = w`, `w ~ N(0, γ² I)`, with
/// `L = L_vert ⊗ L_hor` on a pixel grid.
#[derive(Clone, Debug)]
pub struct WhittleMaternPrior {
    pub grid: PixelGrid,
    pub lambda_y: f64,
    pub lambda_z: f64,
    pub gamma: f64,
    l_vert: DenseMatrix,
    l_hor: DenseMatrix,
}

/// Builds the prior; `λ_y` is the horizontal and `λ_z` the vertical
/// correlation length, both in pixels.
pub fn whittle_matern(grid: PixelGrid, lambda_y: f64, lambda_z: f64, gamma: f64) -> Result<WhittleMaternPrior> {
    for (name, v) in [("lambda_y", lambda_y), ("lambda_z", lambda_z), ("gamma", gamma)] {
        if !(v > 0.0) || v.is_nan() {
            return Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")));
        }
    }
    if gamma.is_infinite() {
        return Err(Error::InvalidArgument("gamma must be finite".into()));
    }
    Ok(WhittleMaternPrior {
        grid,
        lambda_y,
        lambda_z,
        gamma,
        l_vert: second_difference(grid.nz, lambda_z),
        l_hor: second_difference(grid.ny, lambda_y),
    })
}

impl WhittleMaternPrior {
    /// `L_vert ⊗ L_hor`.
    pub fn operator(&self) -> KroneckerOperator {
        KroneckerOperator::new(self.l_vert.clone(), self.l_hor.clone())
    }

    /// Precision factor `γ⁻¹ L`, so that the prior precision is `LᵀL / γ²`.
    pub fn precision_factor(&self) -> KroneckerOperator {
        let mut v = self.l_vert.clone();
        v.scale(1.0 / self.gamma);
        KroneckerOperator::new(v, self.l_hor.clone())
    }

    /// `γ L⁻¹ = (γ L_vert⁻¹) ⊗ L_hor⁻¹`.
    pub fn factor_inverse(&self) -> Result<KroneckerOperator> {
        let mut v = cholesky_factor(&self.l_vert)?.inverse();
        v.scale(self.gamma);
        let h = cholesky_factor(&self.l_hor)?.inverse();
        Ok(KroneckerOperator::new(v, h))
    }

    /// Prior description for whitening, with the closed-form inverse attached.
    pub fn prior(&self) -> Result<Prior> {
        Ok(Prior::PrecisionFactor {
            factor: Arc::new(self.precision_factor()),
            inverse: Some(Arc::new(self.factor_inverse()?)),
        })
    }

    /// `count` independent prior draws, column `k` from `rng.substream(k)`.
    pub fn sample(&self, count: usize, rng: RngStream) -> Result<DenseMatrix> {
        let inv = self.factor_inverse()?;
        let n = self.grid.len();
        let mut out = DenseMatrix::zeros(n, count);
        for k in 0..count {
            let w = standard_normal_vec(&mut rng.substream(k as u64).generator(), n);
            inv.apply_into(&w, out.col_mut(k));
        }
        Ok(out)
    }
}

/// Edge of a graph on the unknowns. `Boundary(i)` joins node `i` to a node
/// whose value is known (and zero), giving a single-entry row.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Edge {
    Interior(usize, usize),
    Boundary(usize),
}

#[derive(Clone, Debug)]
pub struct GraphDifference {
    /// `p × n` scaled first-difference matrix, one row per edge.
    pub op: CscMatrix,
    /// Nodes not touched by any edge; `LᵀL` is singular if this is non-empty.
    pub isolated: Vec<usize>,
}

/// `α D` where row `ℓ` of `D` has `+1` at `i` and `-1` at `j` for
/// `Interior(i, j)`, and a single `+1` at `i` for `Boundary(i)`.
pub fn graph_first_difference(edges: &[Edge], n_interior: usize, alpha: f64) -> Result<GraphDifference> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidArgument(format!("alpha must be positive, got {alpha}")));
    }
    let mut triplets = Vec::with_capacity(2 * edges.len());
    let mut touched = vec![false; n_interior];
    for (row, e) in edges.iter().enumerate() {
        let mut put = |j: usize, v: f64| -> Result<()> {
            if j >= n_interior {
                return Err(Error::InvalidArgument(format!(
                    "edge {row} references node {j} but there are {n_interior} interior nodes"
                )));
            }
            touched[j] = true;
            triplets.push((row, j, v * alpha));
            Ok(())
        };
        match *e {
            Edge::Interior(i, j) => {
                if i == j {
                    return Err(Error::InvalidArgument(format!("edge {row} is a self-loop at node {i}")));
                }
                put(i, 1.0)?;
                put(j, -1.0)?;
            }
            Edge::Boundary(i) => put(i, 1.0)?,
        }
    }
    let isolated: Vec<usize> = (0..n_interior).filter(|&j| !touched[j]).collect();
    if !isolated.is_empty() {
        log::warn!(
            "{} interior node(s) have no incident edge, the difference matrix has zero columns",
            isolated.len()
        );
    }
    Ok(GraphDifference {
        op: CscMatrix::from_triplets(edges.len(), n_interior, &triplets)?,
        isolated,
    })
}

/// 4-neighbour adjacency of a pixel grid. With `boundary`, every side of a
/// pixel on the grid border also yields a [`Edge::Boundary`] edge, which
/// makes the resulting difference matrix full column rank.
pub fn pixel_adjacency_edges(grid: &PixelGrid, boundary: bool) -> Vec<Edge> {
    let mut edges = Vec::new();
    for iz in 0..grid.nz {
        for iy in 0..grid.ny {
            let k = grid.index(iy, iz);
            if iy + 1 < grid.ny {
                edges.push(Edge::Interior(k, grid.index(iy + 1, iz)));
            }
            if iz + 1 < grid.nz {
                edges.push(Edge::Interior(k, grid.index(iy, iz + 1)));
            }
            if boundary {
                let sides = usize::from(iy == 0)
                    + usize::from(iy + 1 == grid.ny)
                    + usize::from(iz == 0)
                    + usize::from(iz + 1 == grid.nz);
                edges.extend(std::iter::repeat_n(Edge::Boundary(k), sides));
            }
        }
    }
    edges
}

/// The graph prior as a transform prior `L x ~ N(0, I)`.
pub fn graph_prior(edges: &[Edge], n_interior: usize, alpha: f64) -> Result<Prior> {
    let g = graph_first_difference(edges, n_interior, alpha)?;
    let op: OpRef = Arc::new(g.op);
    Ok(Prior::Transform(op))
}
