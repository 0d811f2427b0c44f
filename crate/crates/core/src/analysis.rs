//! Checkable theory: 2f-redundancy, the fault-tolerance margin and the
//! contraction constants of the convergence guarantee.
//!
//! With `lambda` the strong convexity constant of the average honest cost and
//! `mu` the gradient-Lipschitz constant of each honest cost:
//!
//! ```text
//! alpha = (1 - sqrt(1 + lambda/mu))^2 - f/(n-f)
//! beta  = (lambda (n-f) - mu f)^2 / (2 mu^2 (n-f)) - 2f
//! rho   = 1 - 2 beta eta + 4 |H|^3 eta^2
//! ```
//!
//! `alpha > 0` implies `beta > 0`, and then every `eta` in `(0, beta / (2|H|^3))`
//! gives `rho < 1`.

use nalgebra::{DMatrix, DVector, SVD};
use serde::Serialize;

use crate::costmodel::{lipschitz_constant, strong_convexity_constant, QuadraticCost};
use crate::error::{Error, Result};

/// Tolerance for rank decisions and affine-set comparisons.
pub const AFFINE_TOLERANCE: f64 = 1e-9;

/// Upper bound on the number of subsets [`check_2f_redundancy`] will visit.
pub const MAX_SUBSETS: u128 = 1_000_000;

/// `x_p + span(null_basis)`, the least-squares solution set of a stacked system.
#[derive(Debug, Clone)]
struct AffineSet {
    point: DVector<f64>,
    // orthonormal rows spanning the row space of A
    row_basis: DMatrix<f64>,
    // orthonormal columns spanning the null space of A
    null_basis: DMatrix<f64>,
}

impl AffineSet {
    fn least_squares(costs: &[&QuadraticCost]) -> Self {
        let d = costs[0].a_matrix().ncols();
        let rows: usize = costs.iter().map(|c| c.rows()).sum();
        let mut a = DMatrix::zeros(rows, d);
        let mut b = DVector::zeros(rows);
        let mut at = 0;
        for cost in costs {
            let r = cost.rows();
            a.view_mut((at, 0), (r, d)).copy_from(cost.a_matrix());
            b.rows_mut(at, r).copy_from(cost.b_vector());
            at += r;
        }

        // pad to a square-or-tall matrix so the SVD exposes a full basis of R^d
        if rows < d {
            a = a.resize_vertically(d, 0.0);
            b = b.resize_vertically(d, 0.0);
        }
        let svd = SVD::new(a, true, true);
        let u = svd.u.expect("u requested");
        let v_t = svd.v_t.expect("v_t requested");
        let sigma = &svd.singular_values;
        let largest = sigma.max();
        let rank = sigma
            .iter()
            .filter(|s| largest > 0.0 && **s > AFFINE_TOLERANCE * largest)
            .count();

        let mut point = DVector::zeros(d);
        let mut row_basis = DMatrix::zeros(rank, d);
        let mut null_basis = DMatrix::zeros(d, d - rank);
        let (mut r, mut nb) = (0, 0);
        for k in 0..d {
            let v = v_t.row(k);
            if largest > 0.0 && sigma[k] > AFFINE_TOLERANCE * largest {
                let coeff = u.column(k).dot(&b) / sigma[k];
                point += coeff * v.transpose();
                row_basis.row_mut(r).copy_from(&v);
                r += 1;
            } else {
                null_basis.column_mut(nb).copy_from(&v.transpose());
                nb += 1;
            }
        }
        Self {
            point,
            row_basis,
            null_basis,
        }
    }

    fn contains_point(&self, y: &DVector<f64>) -> bool {
        let scale = 1.0f64.max(y.norm()).max(self.point.norm());
        (&self.row_basis * (y - &self.point)).norm() <= AFFINE_TOLERANCE * scale
    }

    fn directions_within(&self, other: &AffineSet) -> bool {
        self.null_basis.ncols() <= other.null_basis.ncols()
            && (&other.row_basis * &self.null_basis).amax() <= AFFINE_TOLERANCE
    }

    fn same_as(&self, other: &AffineSet) -> bool {
        self.directions_within(other)
            && other.directions_within(self)
            && other.contains_point(&self.point)
            && self.contains_point(&other.point)
    }
}

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Calls `visit` with every `k`-subset of `0..n` in lexicographic order until
/// it returns `false`. Returns whether every visit returned `true`.
fn all_combinations(n: usize, k: usize, mut visit: impl FnMut(&[usize]) -> bool) -> bool {
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        if !visit(&idx) {
            return false;
        }
        let Some(pos) = (0..k).rev().find(|&i| idx[i] != i + n - k) else {
            return true;
        };
        idx[pos] += 1;
        for j in pos + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Whether every subset of at least `n - 2f` honest agents has the same
/// aggregate minimizer set as the whole honest set.
///
/// Enumerates subsets exhaustively, so it is meant for small networks.
pub fn check_2f_redundancy(costs: &[QuadraticCost], n: usize, f: usize) -> Result<bool> {
    if n < 2 * f + 1 {
        return Err(Error::Argument(format!("n - 2f must be at least 1, got n={n} f={f}")));
    }
    let h = costs.len();
    if h + f < n {
        return Err(Error::Argument(format!(
            "{h} honest agents is fewer than n - f = {}",
            n - f
        )));
    }
    let d = costs[0].a_matrix().ncols();
    if costs.iter().any(|c| c.a_matrix().ncols() != d) {
        return Err(Error::Argument("costs have differing dimensions".into()));
    }

    let smallest = n - 2 * f;
    let subsets: u128 = (smallest..=h).map(|k| binomial(h, k)).sum();
    if subsets > MAX_SUBSETS {
        return Err(Error::Scale {
            subsets,
            limit: MAX_SUBSETS,
        });
    }

    let all: Vec<&QuadraticCost> = costs.iter().collect();
    let reference = AffineSet::least_squares(&all);
    let mut chosen = Vec::with_capacity(h);
    Ok((smallest..h).all(|k| {
        all_combinations(h, k, |idx| {
            chosen.clear();
            chosen.extend(idx.iter().map(|&i| all[i]));
            AffineSet::least_squares(&chosen).same_as(&reference)
        })
    }))
}

/// `alpha = (1 - sqrt(1 + lambda/mu))^2 - f/(n-f)`.
pub fn fault_tolerance_margin(lambda: f64, mu: f64, n: usize, f: usize) -> Result<f64> {
    if !(mu > 0.0) {
        return Err(Error::Argument(format!("mu must be positive, got {mu}")));
    }
    if n <= f {
        return Err(Error::Argument(format!("need n > f, got n={n} f={f}")));
    }
    let gap = 1.0 - (1.0 + lambda / mu).sqrt();
    Ok(gap * gap - f as f64 / (n - f) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Contraction {
    pub beta: f64,
    /// Largest step for which the contraction factor stays below one.
    pub eta_max: f64,
    /// Step minimizing the contraction factor.
    pub eta_opt: f64,
}

/// `beta` together with the step-size bounds derived from it. Total: returns
/// values even when `beta <= 0`.
pub fn contraction_constants(lambda: f64, mu: f64, n: usize, f: usize, h_size: usize) -> Contraction {
    let honest = (n - f) as f64;
    let f = f as f64;
    let lead = lambda * honest - mu * f;
    let beta = lead * lead / (2.0 * mu * mu * honest) - 2.0 * f;
    let cube = (h_size as f64).powi(3);
    Contraction {
        beta,
        eta_max: beta / (2.0 * cube),
        eta_opt: beta / (4.0 * cube),
    }
}

/// `beta` written through the margin: `alpha (alpha/2 + 2 sqrt(1 + lambda/mu)) (n-f)`.
pub fn beta_from_margin(alpha: f64, lambda: f64, mu: f64, n: usize, f: usize) -> f64 {
    alpha * (alpha / 2.0 + 2.0 * (1.0 + lambda / mu).sqrt()) * (n - f) as f64
}

/// `rho = 1 - 2 beta eta + 4 |H|^3 eta^2`.
pub fn contraction_factor(beta: f64, h_size: usize, eta: f64) -> f64 {
    1.0 - 2.0 * beta * eta + 4.0 * (h_size as f64).powi(3) * eta * eta
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoryReport {
    pub n: usize,
    pub f: usize,
    pub h_size: usize,
    pub mu: f64,
    pub lambda: f64,
    pub alpha: f64,
    pub beta: f64,
    pub eta_max: f64,
    pub eta_opt: f64,
    pub redundancy_holds: bool,
}

impl TheoryReport {
    /// Builds the report for the honest costs of an `n`-agent network with
    /// fault budget `f`.
    pub fn for_costs(costs: &[QuadraticCost], n: usize, f: usize) -> Result<Self> {
        let mu = lipschitz_constant(costs)?;
        let lambda = strong_convexity_constant(costs)?;
        let alpha = fault_tolerance_margin(lambda, mu, n, f)?;
        let h_size = costs.len();
        let Contraction {
            beta,
            eta_max,
            eta_opt,
        } = contraction_constants(lambda, mu, n, f, h_size);
        let redundancy_holds = check_2f_redundancy(costs, n, f)?;
        Ok(Self {
            n,
            f,
            h_size,
            mu,
            lambda,
            alpha,
            beta,
            eta_max,
            eta_opt,
            redundancy_holds,
        })
    }

    pub fn rho_at(&self, eta: f64) -> f64 {
        contraction_factor(self.beta, self.h_size, eta)
    }

    /// Whether the margin condition `alpha > 0` holds.
    pub fn margin_holds(&self) -> bool {
        self.alpha > 0.0
    }

    /// Whether `0 < eta` and `2 |H|^3 eta < beta`.
    pub fn step_within_bound(&self, eta: f64) -> bool {
        eta > 0.0 && 2.0 * (self.h_size as f64).powi(3) * eta < self.beta
    }
}
