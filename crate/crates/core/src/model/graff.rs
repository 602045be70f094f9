//! Affine subspaces of `R^r`: total-least-squares fitting and a
//! principal-angle distance between subspaces of equal dimension.

use nalgebra::{DMatrix, DVector};

use super::ModelError;
use crate::sheaf::Section;

/// Relative tolerance for rank and singular-value ties.
const DEGENERACY_TOL: f64 = 1e-9;

/// `basepoint + span(basis)`, where `basis` is `r × q` with orthonormal
/// columns.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineSubspace {
    pub basepoint: DVector<f64>,
    pub basis: DMatrix<f64>,
    /// Set when the top-`q` singular directions were not uniquely determined
    /// by the data (rank-deficient or tied at the cut).
    pub degenerate: bool,
}

impl AffineSubspace {
    pub fn new(basepoint: DVector<f64>, basis: DMatrix<f64>) -> Result<Self, ModelError> {
        let (r, q) = basis.shape();
        if basepoint.len() != r || q == 0 || q >= r {
            return Err(ModelError::ShapeMismatch(format!(
                "basepoint in R^{}, basis {r}x{q}",
                basepoint.len()
            )));
        }
        let gram = basis.transpose() * &basis;
        let off = (gram - DMatrix::identity(q, q)).abs().max();
        if off > 1e-9 {
            return Err(ModelError::ShapeMismatch(format!(
                "basis columns not orthonormal (deviation {off:e})"
            )));
        }
        Ok(Self {
            basepoint,
            basis,
            degenerate: false,
        })
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    /// Squared distance from `x` to the subspace.
    pub fn residual_sq(&self, x: &[f64]) -> f64 {
        let d = DVector::from_column_slice(x) - &self.basepoint;
        let proj = &self.basis * (self.basis.transpose() * &d);
        (d - proj).norm_squared()
    }

    /// Orthonormal basis of the linear span of `{[w_i; 0]} ∪ {[b; 1]}` in
    /// `R^{r+1}`; distinct affine subspaces give distinct linear spans.
    fn embedding(&self) -> DMatrix<f64> {
        let (r, q) = self.basis.shape();
        let mut m = DMatrix::zeros(r + 1, q + 1);
        m.view_mut((0, 0), (r, q)).copy_from(&self.basis);
        m.view_mut((0, q), (r, 1)).copy_from(&self.basepoint);
        m[(r, q)] = 1.0;
        m.qr().q()
    }
}

/// Centroid plus top-`q` right singular directions of the centred data.
/// Each basis column is signed so its largest-magnitude entry is positive.
pub fn model_graff_fit(s: &Section, q: usize) -> Result<AffineSubspace, ModelError> {
    let r = s.dim();
    if q == 0 || q >= r {
        return Err(ModelError::InvalidParams(format!(
            "affine fit needs 1 <= q < r, got q={q}, r={r}"
        )));
    }
    let m = s.len();
    if m < q.max(1) {
        return Err(ModelError::TooFewPoints {
            needed: q.max(1),
            got: m,
        });
    }

    let mut centroid = DVector::zeros(r);
    for v in s.values() {
        centroid += DVector::from_column_slice(v);
    }
    centroid /= m as f64;

    let mut centred = DMatrix::zeros(m, r);
    for (i, v) in s.values().enumerate() {
        for j in 0..r {
            centred[(i, j)] = v[j] - centroid[j];
        }
    }

    let svd = centred.svd(false, true);
    let v_t = svd.v_t.expect("requested right singular vectors");
    let sv = svd.singular_values;
    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&a, &b| sv[b].total_cmp(&sv[a]));

    let mut basis = DMatrix::zeros(r, q);
    for (col, &k) in order.iter().take(q).enumerate() {
        let mut w: DVector<f64> = v_t.row(k).transpose();
        let pivot = w.iamax();
        if w[pivot] < 0.0 {
            w = -w;
        }
        basis.set_column(col, &w);
    }

    let scale = sv.iter().copied().fold(0.0, f64::max).max(1.0);
    let sigma_q = sv[order[q - 1]];
    let sigma_next = order.get(q).map(|&k| sv[k]).unwrap_or(0.0);
    let degenerate =
        sigma_q <= DEGENERACY_TOL * scale || (sigma_q - sigma_next).abs() <= DEGENERACY_TOL * scale;

    Ok(AffineSubspace {
        basepoint: centroid,
        basis,
        degenerate,
    })
}

/// Principal angles between the linear embeddings of two affine subspaces,
/// ascending. Cosines come from `Q1ᵀQ2`, sines from `(I - Q1Q1ᵀ)Q2`, and each
/// angle is `atan2(sin, cos)` so that small angles keep full precision.
pub fn principal_angles(a: &AffineSubspace, b: &AffineSubspace) -> Result<Vec<f64>, ModelError> {
    if a.ambient_dim() != b.ambient_dim() || a.dim() != b.dim() {
        return Err(ModelError::ShapeMismatch(format!(
            "Graff({},{}) vs Graff({},{})",
            a.dim(),
            a.ambient_dim(),
            b.dim(),
            b.ambient_dim()
        )));
    }
    let q1 = a.embedding();
    let q2 = b.embedding();
    let c = q1.transpose() * &q2;
    let residual = &q2 - &q1 * &c;

    let mut cos: Vec<f64> = c.singular_values().iter().copied().collect();
    cos.sort_by(|x, y| y.total_cmp(x));
    let mut sin: Vec<f64> = residual.singular_values().iter().copied().collect();
    sin.sort_by(f64::total_cmp);

    Ok(cos.iter().zip(&sin).map(|(&c, &s)| s.atan2(c)).collect())
}

/// Geodesic distance `sqrt(Σ θ_i²)` over the principal angles.
pub fn graff_distance(a: &AffineSubspace, b: &AffineSubspace) -> Result<f64, ModelError> {
    Ok(principal_angles(a, b)?
        .iter()
        .map(|t| t * t)
        .sum::<f64>()
        .sqrt())
}
