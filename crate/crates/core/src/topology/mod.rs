//! Node coupling topologies.
//!
//! Nodes live on a 2-D pixel grid and each node receives light from a small
//! neighborhood of grid neighbors, so the coupling matrix is stored sparsely
//! by destination row. Matrices come from two builders: a synthetic local
//! kernel with controllable weight heterogeneity, and the physical-optics
//! route in [`optics`] that propagates probe pixels through the modeled
//! imaging chain.

pub mod optics;

use crate::error::{Error, Result};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Sparse nonnegative coupling matrix over a pixel grid.
///
/// Entry `(i, j)` is the weight with which node `j`'s emitted field reaches
/// node `i`. Invariants enforced at construction: all weights are positive
/// and finite, every entry stays within `kernel_radius` in Chebyshev grid
/// distance, and no row is empty (every node receives something).
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingMatrix {
    grid_rows: usize,
    grid_cols: usize,
    kernel_radius: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    weights: Vec<f64>,
}

impl CouplingMatrix {
    /// Build from `(dest, src, weight)` triplets over a square grid.
    pub fn from_triplets(
        grid_side: usize,
        kernel_radius: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self> {
        Self::from_triplets_grid(grid_side, grid_side, kernel_radius, triplets)
    }

    /// Build from triplets over a general `rows x cols` grid.
    pub fn from_triplets_grid(
        grid_rows: usize,
        grid_cols: usize,
        kernel_radius: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self> {
        if grid_rows == 0 || grid_cols == 0 {
            return Err(Error::InvalidArgument("grid must be non-empty".into()));
        }
        let n = grid_rows * grid_cols;
        let mut sorted: Vec<(usize, usize, f64)> = Vec::with_capacity(triplets.len());
        for &(i, j, w) in triplets {
            if i >= n || j >= n {
                return Err(Error::InvalidArgument(format!(
                    "entry ({i}, {j}) outside a {n}-node grid"
                )));
            }
            if !w.is_finite() || w < 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "weight ({i}, {j}) = {w} must be finite and >= 0"
                )));
            }
            let dr = (i / grid_cols) as isize - (j / grid_cols) as isize;
            let dc = (i % grid_cols) as isize - (j % grid_cols) as isize;
            let dist = dr.abs().max(dc.abs()) as usize;
            if dist > kernel_radius {
                return Err(Error::InvalidArgument(format!(
                    "entry ({i}, {j}) at grid distance {dist} exceeds kernel radius {kernel_radius}"
                )));
            }
            if w > 0.0 {
                sorted.push((i, j, w));
            }
        }
        sorted.sort_by_key(|&(i, j, _)| (i, j));
        for pair in sorted.windows(2) {
            if pair[0].0 == pair[1].0 && pair[0].1 == pair[1].1 {
                return Err(Error::InvalidArgument(format!(
                    "duplicate entry ({}, {})",
                    pair[0].0, pair[0].1
                )));
            }
        }

        let mut row_ptr = vec![0usize; n + 1];
        for &(i, _, _) in &sorted {
            row_ptr[i + 1] += 1;
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        if let Some(i) = (0..n).find(|&i| row_ptr[i] == row_ptr[i + 1]) {
            return Err(Error::DegenerateMatrix(format!(
                "node {i} receives no coupling (all-zero row)"
            )));
        }
        Ok(CouplingMatrix {
            grid_rows,
            grid_cols,
            kernel_radius,
            row_ptr,
            col_idx: sorted.iter().map(|t| t.1).collect(),
            weights: sorted.iter().map(|t| t.2).collect(),
        })
    }

    /// Identity coupling on a square grid (each node only re-images itself).
    pub fn identity(grid_side: usize) -> Result<Self> {
        let n = grid_side * grid_side;
        let triplets: Vec<(usize, usize, f64)> = (0..n).map(|i| (i, i, 1.0)).collect();
        Self::from_triplets(grid_side, 0, &triplets)
    }

    pub fn n_nodes(&self) -> usize {
        self.grid_rows * self.grid_cols
    }

    /// Grid dimensions as `(rows, cols)`.
    pub fn grid_dims(&self) -> (usize, usize) {
        (self.grid_rows, self.grid_cols)
    }

    /// Side length for square grids.
    pub fn grid_side(&self) -> usize {
        debug_assert_eq!(self.grid_rows, self.grid_cols);
        self.grid_cols
    }

    pub fn kernel_radius(&self) -> usize {
        self.kernel_radius
    }

    pub fn nnz(&self) -> usize {
        self.weights.len()
    }

    /// Entries of row `i` as `(source, weight)` pairs.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[range.clone()].iter().copied().zip(self.weights[range].iter().copied())
    }

    /// All entries as `(dest, src, weight)` in row-major order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n_nodes()).flat_map(move |i| self.row(i).map(move |(j, w)| (i, j, w)))
    }

    /// Stored weight at `(i, j)`, zero if absent.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|&(c, _)| c == j).map_or(0.0, |(_, w)| w)
    }

    /// `out = W * x` with a fixed per-row summation order.
    pub fn matvec(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n_nodes());
        debug_assert_eq!(out.len(), self.n_nodes());
        for (i, out_i) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.weights[k] * x[self.col_idx[k]];
            }
            *out_i = acc;
        }
    }

    /// `out = W^T * x`.
    pub fn matvec_transpose(&self, x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for (i, &x_i) in x.iter().enumerate() {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                out[self.col_idx[k]] += self.weights[k] * x_i;
            }
        }
    }

    pub fn max_row_sum(&self) -> f64 {
        (0..self.n_nodes()).map(|i| self.row(i).map(|(_, w)| w).sum::<f64>()).fold(0.0, f64::max)
    }

    fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        for w in &mut out.weights {
            *w *= factor;
        }
        out
    }
}

/// How to rescale a coupling matrix before it drives the network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormalizeMode {
    /// Largest row sum becomes 1; keeps the coupled field in [-1, 1] for
    /// bounded inputs.
    MaxRowSum,
    /// Largest singular value becomes 1.
    Spectral,
}

/// Rescale so the chosen norm equals 1. Returns the matrix and the scale
/// factor that was applied.
pub fn normalize_matrix(
    matrix: &CouplingMatrix,
    mode: NormalizeMode,
) -> Result<(CouplingMatrix, f64)> {
    let norm = match mode {
        NormalizeMode::MaxRowSum => matrix.max_row_sum(),
        NormalizeMode::Spectral => spectral_norm(matrix),
    };
    if norm <= 0.0 || !norm.is_finite() {
        return Err(Error::DegenerateMatrix(format!("cannot normalize matrix with norm {norm}")));
    }
    let scale = 1.0 / norm;
    Ok((matrix.scaled(scale), scale))
}

/// Largest singular value via power iteration on `W^T W`.
pub fn spectral_norm(matrix: &CouplingMatrix) -> f64 {
    let n = matrix.n_nodes();
    // Deterministic start vector with all-positive, slightly uneven entries
    // so it cannot be orthogonal to the leading singular direction of a
    // nonnegative matrix.
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + 0.5 * ((i as f64 * 0.7).sin())).collect();
    let mut tmp = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut sigma = 0.0f64;
    for _ in 0..50_000 {
        matrix.matvec(&v, &mut tmp);
        matrix.matvec_transpose(&tmp, &mut w);
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / norm;
        }
        let new_sigma = norm.sqrt(); // ||W^T W v|| -> sigma^2 at convergence
        if (new_sigma - sigma).abs() <= 1e-14 * new_sigma.max(1.0) {
            return new_sigma;
        }
        sigma = new_sigma;
    }
    sigma
}

/// Synthetic local coupling: every node receives from its `(2r+1)^2`
/// Chebyshev neighborhood (truncated at the grid edge) with weight
/// `1 + heterogeneity * eta`, `eta ~ U(-1, 1)` drawn per (node, offset).
/// The result is normalized to unit maximum row sum.
pub fn synth_kernel_matrix(
    grid_side: usize,
    kernel_radius: usize,
    heterogeneity: f64,
    seed: u64,
) -> Result<CouplingMatrix> {
    if grid_side == 0 {
        return Err(Error::InvalidArgument("grid_side must be >= 1".into()));
    }
    if !(0.0..=1.0).contains(&heterogeneity) {
        return Err(Error::InvalidArgument(format!(
            "heterogeneity {heterogeneity} outside [0, 1]"
        )));
    }
    let g = grid_side as isize;
    let r = kernel_radius as isize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut triplets = Vec::new();
    for row in 0..g {
        for col in 0..g {
            let dest = (row * g + col) as usize;
            for dr in -r..=r {
                for dc in -r..=r {
                    // One draw per (node, offset) regardless of edge
                    // truncation keeps the interior pattern independent of
                    // the grid size.
                    let eta: f64 = rng.random_range(-1.0..1.0);
                    let (sr, sc) = (row + dr, col + dc);
                    if sr < 0 || sr >= g || sc < 0 || sc >= g {
                        continue;
                    }
                    let w = 1.0 + heterogeneity * eta;
                    if w > 0.0 {
                        triplets.push((dest, (sr * g + sc) as usize, w));
                    }
                }
            }
        }
    }
    let matrix = CouplingMatrix::from_triplets(grid_side, kernel_radius, &triplets)?;
    let (normalized, _) = normalize_matrix(&matrix, NormalizeMode::MaxRowSum)?;
    Ok(normalized)
}

/// Weight statistics of one kernel offset across all columns that carry it.
#[derive(Debug, Clone)]
pub struct OffsetStat {
    pub dr: isize,
    pub dc: isize,
    pub count: usize,
    pub mean: f64,
    pub std: f64,
    /// Coefficient of variation `std / mean`.
    pub cv: f64,
}

/// Summary statistics used by the topology inspection command.
#[derive(Debug, Clone)]
pub struct CouplingStats {
    pub n_nodes: usize,
    pub kernel_radius: usize,
    pub nnz: usize,
    pub max_entries_per_column: usize,
    /// Entry count range over interior columns (full neighborhood in-grid).
    pub interior_entries_min: usize,
    pub interior_entries_max: usize,
    pub offset_stats: Vec<OffsetStat>,
    /// Minimum over columns of `diagonal / max off-diagonal`;
    /// infinite when no column has an off-diagonal entry.
    pub diag_dominance_min: f64,
}

pub fn coupling_stats(matrix: &CouplingMatrix) -> CouplingStats {
    let (rows, cols) = matrix.grid_dims();
    let n = matrix.n_nodes();
    let r = matrix.kernel_radius() as isize;

    let mut col_entries = vec![0usize; n];
    let mut col_diag = vec![0.0f64; n];
    let mut col_max_off = vec![0.0f64; n];
    let mut by_offset: std::collections::BTreeMap<(isize, isize), Vec<f64>> =
        std::collections::BTreeMap::new();

    for (i, j, w) in matrix.entries() {
        col_entries[j] += 1;
        if i == j {
            col_diag[j] = w;
        } else if w > col_max_off[j] {
            col_max_off[j] = w;
        }
        let dr = (i / cols) as isize - (j / cols) as isize;
        let dc = (i % cols) as isize - (j % cols) as isize;
        by_offset.entry((dr, dc)).or_default().push(w);
    }

    let interior = |j: usize| -> bool {
        let (jr, jc) = ((j / cols) as isize, (j % cols) as isize);
        jr >= r && jr + r < rows as isize && jc >= r && jc + r < cols as isize
    };
    let interior_counts: Vec<usize> =
        (0..n).filter(|&j| interior(j)).map(|j| col_entries[j]).collect();

    let offset_stats = by_offset
        .into_iter()
        .map(|((dr, dc), ws)| {
            let count = ws.len();
            let mean = ws.iter().sum::<f64>() / count as f64;
            let var = ws.iter().map(|w| (w - mean).powi(2)).sum::<f64>() / count as f64;
            let std = var.sqrt();
            OffsetStat { dr, dc, count, mean, std, cv: if mean > 0.0 { std / mean } else { 0.0 } }
        })
        .collect();

    let diag_dominance_min = (0..n)
        .map(|j| if col_max_off[j] > 0.0 { col_diag[j] / col_max_off[j] } else { f64::INFINITY })
        .fold(f64::INFINITY, f64::min);

    CouplingStats {
        n_nodes: n,
        kernel_radius: matrix.kernel_radius(),
        nnz: matrix.nnz(),
        max_entries_per_column: col_entries.iter().copied().max().unwrap_or(0),
        interior_entries_min: interior_counts.iter().copied().min().unwrap_or(0),
        interior_entries_max: interior_counts.iter().copied().max().unwrap_or(0),
        offset_stats,
        diag_dominance_min,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_node_kernel_normalizes_to_one() {
        let m = synth_kernel_matrix(1, 0, 0.3, 9).unwrap();
        assert_eq!(m.n_nodes(), 1);
        assert_eq!(m.entry(0, 0), 1.0);
    }

    #[test]
    fn zero_heterogeneity_gives_identical_interior_rows() {
        let m = synth_kernel_matrix(5, 1, 0.0, 3).unwrap();
        // Interior nodes: rows 1..4, cols 1..4 on the 5-grid.
        let collect = |node: usize| -> Vec<f64> {
            let mut ws: Vec<f64> = m.row(node).map(|(_, w)| w).collect();
            ws.sort_by(f64::total_cmp);
            ws
        };
        let reference = collect(6);
        for row in 1..4 {
            for col in 1..4 {
                assert_eq!(collect(row * 5 + col), reference, "node ({row},{col})");
            }
        }
        assert_eq!(reference.len(), 9);
    }

    #[test]
    fn heterogeneous_kernel_varies_across_nodes() {
        let m = synth_kernel_matrix(30, 1, 0.5, 7).unwrap();
        let stats = coupling_stats(&m);
        assert_eq!(stats.n_nodes, 900);
        assert_eq!(stats.interior_entries_max, 9);
        for s in &stats.offset_stats {
            assert!(s.cv > 0.1, "offset ({}, {}) cv {} too uniform", s.dr, s.dc, s.cv);
        }
    }

    #[test]
    fn interior_columns_have_at_most_nine_entries_at_radius_one() {
        let m = synth_kernel_matrix(30, 1, 0.5, 11).unwrap();
        let stats = coupling_stats(&m);
        assert!(stats.max_entries_per_column <= 9);
        assert_eq!(stats.interior_entries_min, 9);
    }

    #[test]
    fn rows_sum_to_at_most_one_after_normalization() {
        let m = synth_kernel_matrix(12, 2, 0.8, 5).unwrap();
        let max = m.max_row_sum();
        assert!((max - 1.0).abs() < 1e-12, "max row sum {max}");
    }

    #[test]
    fn locality_violations_are_rejected() {
        // (0, 5) on a 4-grid is distance (1,1) but radius 0 forbids it.
        let trips = vec![(0, 0, 1.0), (0, 5, 0.5)];
        assert!(matches!(
            CouplingMatrix::from_triplets(4, 0, &trips),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn empty_rows_are_rejected() {
        let trips = vec![(0, 0, 1.0)];
        assert!(matches!(
            CouplingMatrix::from_triplets(2, 1, &trips),
            Err(Error::DegenerateMatrix(_))
        ));
    }

    #[test]
    fn heterogeneity_outside_unit_interval_is_rejected() {
        assert!(synth_kernel_matrix(4, 1, 1.5, 0).is_err());
        assert!(synth_kernel_matrix(4, 1, -0.1, 0).is_err());
    }

    #[test]
    fn same_seed_reproduces_matrix_exactly() {
        let a = synth_kernel_matrix(10, 1, 0.5, 42).unwrap();
        let b = synth_kernel_matrix(10, 1, 0.5, 42).unwrap();
        assert_eq!(a, b);
        let c = synth_kernel_matrix(10, 1, 0.5, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    #[allow(clippy::needless_range_loop)] // dense-oracle index notation
    fn matvec_matches_dense_arithmetic() {
        let m = synth_kernel_matrix(4, 1, 0.7, 8).unwrap();
        let n = m.n_nodes();
        let x: Vec<f64> = (0..n).map(|i| ((i * 7 % 5) as f64) - 2.0).collect();
        let mut fast = vec![0.0; n];
        m.matvec(&x, &mut fast);
        for i in 0..n {
            let slow: f64 = (0..n).map(|j| m.entry(i, j) * x[j]).sum();
            assert!((fast[i] - slow).abs() < 1e-12);
        }
    }

    #[test]
    fn spectral_normalization_reaches_unit_norm() {
        let m = synth_kernel_matrix(9, 1, 0.6, 13).unwrap();
        let (normalized, scale) = normalize_matrix(&m, NormalizeMode::Spectral).unwrap();
        assert!(scale > 0.0);
        let sigma = spectral_norm(&normalized);
        assert!((sigma - 1.0).abs() < 1e-8, "sigma after normalization {sigma}");
    }

    // Independent oracle: singular values via a Jacobi eigensolver on the
    // dense Gram matrix W^T W, written without reference to the power
    // iteration above.
    #[allow(clippy::needless_range_loop)] // textbook index notation
    fn spectral_norm_jacobi(m: &CouplingMatrix) -> f64 {
        let n = m.n_nodes();
        let mut gram = vec![vec![0.0f64; n]; n];
        for a in 0..n {
            for b in 0..n {
                let mut acc = 0.0;
                for i in 0..n {
                    acc += m.entry(i, a) * m.entry(i, b);
                }
                gram[a][b] = acc;
            }
        }
        for _sweep in 0..100 {
            let mut off = 0.0f64;
            for p in 0..n {
                for q in (p + 1)..n {
                    off += gram[p][q].abs();
                }
            }
            if off < 1e-14 {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    if gram[p][q].abs() < 1e-18 {
                        continue;
                    }
                    let theta = 0.5 * (gram[q][q] - gram[p][p]) / gram[p][q];
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let (akp, akq) = (gram[k][p], gram[k][q]);
                        gram[k][p] = c * akp - s * akq;
                        gram[k][q] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let (apk, aqk) = (gram[p][k], gram[q][k]);
                        gram[p][k] = c * apk - s * aqk;
                        gram[q][k] = s * apk + c * aqk;
                    }
                }
            }
        }
        (0..n).map(|i| gram[i][i]).fold(0.0f64, f64::max).sqrt()
    }

    #[test]
    fn spectral_norm_matches_jacobi_oracle() {
        let m = synth_kernel_matrix(3, 1, 0.9, 21).unwrap();
        let by_power = spectral_norm(&m);
        let by_jacobi = spectral_norm_jacobi(&m);
        assert!((by_power - by_jacobi).abs() < 1e-8, "power {by_power} vs jacobi {by_jacobi}");
    }

    #[test]
    fn identity_matrix_has_unit_norms() {
        let m = CouplingMatrix::identity(5).unwrap();
        assert_eq!(m.kernel_radius(), 0);
        assert_eq!(m.max_row_sum(), 1.0);
        assert!((spectral_norm(&m) - 1.0).abs() < 1e-10);
    }
}
