//! Agent cost functions and their minimizer sets.
//!
//! The only concrete cost is the least-squares quadratic `Q(x) = ||A x - b||^2`
//! with a full-row-rank `A`. Its minimizer set is the affine subspace
//! `{x : A x = b}`, and projection onto it has the closed form
//! `(I - A^T (A A^T)^{-1} A) x + A^T (A A^T)^{-1} b`.
//!
//! With the thin factorization `A^T = Q R` this becomes
//! `x - Q (Q^T x - R^{-T} b)`, which avoids forming `(A A^T)^{-1}` and keeps the
//! error proportional to the conditioning of `A` rather than its square. Points
//! with an exactly zero residual are returned unchanged.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{check_dim, Error, Result};
use crate::Point;

/// Smallest admissible ratio between the extreme singular values of `A A^T`.
pub const RANK_THRESHOLD: f64 = 1e-12;

/// A convex, differentiable local cost with a known minimum value and an exact
/// projection onto its minimizer set.
pub trait CostFunction: Send + Sync {
    fn dimension(&self) -> usize;

    fn evaluate(&self, x: &Point) -> Result<f64>;

    fn gradient(&self, x: &Point) -> Result<Point>;

    /// Minimum value of the cost over `R^d`.
    fn min_value(&self) -> f64;

    /// Euclidean projection of `x` onto the minimizer set.
    fn project_to_min_set(&self, x: &Point) -> Result<Point>;
}

/// `Q(x) = ||A x - b||^2` with `A` of shape `rows x d` and full row rank.
#[derive(Debug, Clone)]
pub struct QuadraticCost {
    a: DMatrix<f64>,
    b: DVector<f64>,
    // orthonormal basis of the row space of A (thin Q of A^T)
    q: DMatrix<f64>,
    // R^{-T} b, the row-space coordinates of every point of the set
    coords: DVector<f64>,
}

impl PartialEq for QuadraticCost {
    fn eq(&self, other: &Self) -> bool {
        self.a == other.a && self.b == other.b
    }
}

impl QuadraticCost {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        let (rows, d) = a.shape();
        if rows == 0 || d == 0 {
            return Err(Error::Argument(format!(
                "cost matrix must be non-empty, got {rows}x{d}"
            )));
        }
        check_dim(rows, b.len())?;
        if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Argument("cost coefficients must be finite".into()));
        }

        let gram = &a * a.transpose();
        let eigen = SymmetricEigen::new(gram.clone());
        let largest = eigen.eigenvalues.amax();
        let smallest = eigen.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        let ratio = if largest > 0.0 { smallest / largest } else { 0.0 };
        if !(ratio >= RANK_THRESHOLD) {
            return Err(Error::SingularProjection { ratio });
        }
        let qr = a.transpose().qr();
        let coords = qr
            .r()
            .transpose()
            .solve_lower_triangular(&b)
            .ok_or(Error::SingularProjection { ratio })?;
        Ok(Self {
            q: qr.q(),
            a,
            b,
            coords,
        })
    }

    /// Builds a cost from row-major nested rows.
    pub fn from_rows(rows: &[Vec<f64>], b: &[f64]) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        for row in rows {
            check_dim(d, row.len())?;
        }
        let a = DMatrix::from_fn(rows.len(), d, |r, c| rows[r][c]);
        Self::new(a, DVector::from_column_slice(b))
    }

    /// `||x - center||^2`, i.e. `A = I`, `b = center`.
    pub fn centered(center: &[f64]) -> Result<Self> {
        let d = center.len();
        Self::new(DMatrix::identity(d, d), DVector::from_column_slice(center))
    }

    pub fn a_matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b_vector(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn rows(&self) -> usize {
        self.a.nrows()
    }

    /// Hessian `2 A^T A`.
    pub fn hessian(&self) -> DMatrix<f64> {
        2.0 * self.a.transpose() * &self.a
    }

    fn residual(&self, x: &Point) -> Result<DVector<f64>> {
        check_dim(self.a.ncols(), x.len())?;
        Ok(&self.a * x - &self.b)
    }
}

impl CostFunction for QuadraticCost {
    fn dimension(&self) -> usize {
        self.a.ncols()
    }

    fn evaluate(&self, x: &Point) -> Result<f64> {
        Ok(self.residual(x)?.norm_squared())
    }

    fn gradient(&self, x: &Point) -> Result<Point> {
        Ok(2.0 * self.a.transpose() * self.residual(x)?)
    }

    fn min_value(&self) -> f64 {
        // full row rank makes A x = b solvable
        0.0
    }

    fn project_to_min_set(&self, x: &Point) -> Result<Point> {
        if self.residual(x)?.iter().all(|r| *r == 0.0) {
            return Ok(x.clone());
        }
        Ok(x - &self.q * (self.q.transpose() * x - &self.coords))
    }
}

fn common_dimension(costs: &[QuadraticCost]) -> Result<usize> {
    let first = costs
        .first()
        .ok_or_else(|| Error::Argument("cost list is empty".into()))?;
    let d = first.dimension();
    for cost in costs {
        check_dim(d, cost.dimension())?;
    }
    Ok(d)
}

/// Tightest gradient-Lipschitz constant shared by all costs:
/// `max_i 2 lambda_max(A_i^T A_i)`.
pub fn lipschitz_constant(costs: &[QuadraticCost]) -> Result<f64> {
    common_dimension(costs)?;
    Ok(costs
        .iter()
        .map(|c| SymmetricEigen::new(c.hessian()).eigenvalues.max())
        .fold(0.0, f64::max))
}

/// Strong convexity constant of the average cost,
/// `lambda_min((2/|H|) sum_i A_i^T A_i)`.
///
/// Returns `0.0` when the average Hessian is singular, meaning the average
/// cost is not strongly convex.
pub fn strong_convexity_constant(costs: &[QuadraticCost]) -> Result<f64> {
    let d = common_dimension(costs)?;
    let mut avg = DMatrix::zeros(d, d);
    for cost in costs {
        avg += cost.hessian();
    }
    avg /= costs.len() as f64;
    let eigen = SymmetricEigen::new(avg);
    let largest = eigen.eigenvalues.amax();
    let smallest = eigen.eigenvalues.min();
    if largest == 0.0 || smallest <= RANK_THRESHOLD * largest {
        Ok(0.0)
    } else {
        Ok(smallest)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn p(v: &[f64]) -> Point {
        DVector::from_column_slice(v)
    }

    fn line(a: &[f64], b: f64) -> QuadraticCost {
        QuadraticCost::from_rows(&[a.to_vec()], &[b]).unwrap()
    }

    fn honest_reference_costs() -> Vec<QuadraticCost> {
        vec![
            line(&[1.0, 0.0], 1.0),
            line(&[0.8, 0.5], 1.3),
            line(&[0.5, 0.8], 1.3),
            line(&[0.3, 1.0], 1.3),
            line(&[1.0, 0.3], 1.3),
        ]
    }

    #[test]
    fn evaluate_examples() {
        let c = line(&[1.0, 0.0], 1.0);
        assert_eq!(c.evaluate(&p(&[1.0, 1.0])).unwrap(), 0.0);
        assert_eq!(c.evaluate(&p(&[2.0, 3.0])).unwrap(), 1.0);
        let y = c.project_to_min_set(&p(&[-4.0, 7.5])).unwrap();
        assert_abs_diff_eq!(c.evaluate(&y).unwrap(), c.min_value(), epsilon = 1e-20);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let c = line(&[1.0, 0.0], 1.0);
        assert!(matches!(
            c.evaluate(&p(&[1.0])),
            Err(Error::Dimension { expected: 2, actual: 1 })
        ));
        assert!(c.gradient(&p(&[1.0, 2.0, 3.0])).is_err());
        assert!(c.project_to_min_set(&p(&[1.0])).is_err());
    }

    #[test]
    fn gradient_examples() {
        let c = line(&[1.0, 0.0], 1.0);
        assert_eq!(c.gradient(&p(&[2.0, 3.0])).unwrap(), p(&[2.0, 0.0]));
        let on_set = c.project_to_min_set(&p(&[5.0, -2.0])).unwrap();
        assert!(c.gradient(&on_set).unwrap().norm() < 1e-12);
    }

    #[test]
    fn projection_examples() {
        let c = line(&[1.0, 0.0], 1.0);
        assert_eq!(c.project_to_min_set(&p(&[0.0, 0.0])).unwrap(), p(&[1.0, 0.0]));
        let inside = p(&[1.0, -3.25]);
        assert_eq!(c.project_to_min_set(&inside).unwrap(), inside);

        let c = line(&[0.8, 0.5], 1.3);
        let y = c.project_to_min_set(&p(&[0.0, 0.0])).unwrap();
        assert_abs_diff_eq!(y[0], 1.1685393258426966, epsilon = 1e-12);
        assert_abs_diff_eq!(y[1], 0.7303370786516853, epsilon = 1e-12);
    }

    #[test]
    fn rank_deficient_matrix_is_rejected() {
        let err = QuadraticCost::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]], &[1.0, 2.0]);
        assert!(matches!(err, Err(Error::SingularProjection { .. })));
        let zero = QuadraticCost::from_rows(&[vec![0.0, 0.0]], &[0.0]);
        assert!(matches!(zero, Err(Error::SingularProjection { .. })));
    }

    #[test]
    fn malformed_costs_are_rejected() {
        assert!(QuadraticCost::from_rows(&[], &[]).is_err());
        assert!(QuadraticCost::from_rows(&[vec![1.0, 0.0]], &[1.0, 2.0]).is_err());
        assert!(QuadraticCost::from_rows(&[vec![1.0, 0.0], vec![1.0]], &[1.0, 2.0]).is_err());
        assert!(QuadraticCost::from_rows(&[vec![f64::NAN, 0.0]], &[1.0]).is_err());
    }

    #[test]
    fn lipschitz_examples() {
        let unit = QuadraticCost::centered(&[3.0, -1.0]).unwrap();
        assert_abs_diff_eq!(lipschitz_constant(&[unit.clone()]).unwrap(), 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(
            lipschitz_constant(&[unit.clone(), unit]).unwrap(),
            2.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            lipschitz_constant(&honest_reference_costs()).unwrap(),
            2.18,
            epsilon = 1e-12
        );
        assert!(lipschitz_constant(&[]).is_err());
    }

    #[test]
    fn strong_convexity_examples() {
        let unit = QuadraticCost::centered(&[3.0, -1.0]).unwrap();
        assert_abs_diff_eq!(strong_convexity_constant(&[unit]).unwrap(), 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(
            strong_convexity_constant(&honest_reference_costs()).unwrap(),
            0.39735725,
            epsilon = 1e-8
        );
        let flat = vec![line(&[1.0, 0.0], 1.0); 5];
        assert_eq!(strong_convexity_constant(&flat).unwrap(), 0.0);
        assert!(strong_convexity_constant(&[]).is_err());
    }

    #[test]
    fn mixed_dimensions_are_rejected() {
        let costs = vec![line(&[1.0, 0.0], 1.0), QuadraticCost::centered(&[1.0]).unwrap()];
        assert!(lipschitz_constant(&costs).is_err());
        assert!(strong_convexity_constant(&costs).is_err());
    }

    #[test]
    fn lambda_does_not_exceed_mu_on_redundant_instance() {
        let costs = honest_reference_costs();
        assert!(
            strong_convexity_constant(&costs).unwrap() <= lipschitz_constant(&costs).unwrap()
        );
    }
}
