//! Constrained weighted least squares for the kernel explainer.
//!
//! Fits `g(z) = beta_0 + sum_i beta_i z_i` to the masked responses under the
//! kernel weights, subject to two equality constraints: the intercept equals
//! the empty-coalition response and the full-coalition sum equals the
//! prediction at `x`. The constraints are handled through a KKT system with
//! Lagrange multipliers; a tiny ridge on the Gram matrix guards against
//! numerically rank-deficient designs. Several response vectors sharing one
//! design reuse a single factorization.

use nalgebra::{DMatrix, DVector};

use super::{Coalition, ShapError};

const RIDGE: f64 = 1e-10;

/// One target to solve for: interior responses plus the two anchor values.
pub(crate) struct WlsTarget<'a> {
    /// Response of each interior coalition, aligned with the plan.
    pub responses: &'a [f64],
    /// Empty-coalition response (mean model output over the background).
    pub base: f64,
    /// Full-coalition response (model output at `x`).
    pub fx: f64,
}

/// Solves the constrained fit for every target; returns `(intercept, phi)`
/// per target.
pub(crate) fn solve(
    coalitions: &[Coalition],
    weights: &[f64],
    m: usize,
    targets: &[WlsTarget<'_>],
) -> Result<Vec<(f64, Vec<f64>)>, ShapError> {
    debug_assert_eq!(coalitions.len(), weights.len());
    let dim = m + 1;
    let size = dim + 2;

    // Gram matrix G = A' W A over rows [1, z].
    let mut g: DMatrix<f64> = DMatrix::zeros(dim, dim);
    let mut row = vec![0.0; dim];
    for (c, &w) in coalitions.iter().zip(weights) {
        row[0] = 1.0;
        for (j, &bit) in c.mask.iter().enumerate() {
            row[j + 1] = if bit { 1.0 } else { 0.0 };
        }
        for a in 0..dim {
            if row[a] == 0.0 {
                continue;
            }
            let wa = w * row[a];
            for b in a..dim {
                if row[b] != 0.0 {
                    g[(a, b)] += wa * row[b];
                }
            }
        }
    }
    for a in 0..dim {
        for b in 0..a {
            g[(a, b)] = g[(b, a)];
        }
    }

    // KKT system: [2(G + ridge I), C'; C, 0] with C the two constraints
    // beta_0 = base and beta_0 + sum beta = fx.
    let mut kkt: DMatrix<f64> = DMatrix::zeros(size, size);
    for a in 0..dim {
        for b in 0..dim {
            kkt[(a, b)] = 2.0 * g[(a, b)];
        }
        kkt[(a, a)] += 2.0 * RIDGE;
    }
    kkt[(dim, 0)] = 1.0;
    kkt[(0, dim)] = 1.0;
    for a in 0..dim {
        kkt[(dim + 1, a)] = 1.0;
        kkt[(a, dim + 1)] = 1.0;
    }

    let lu = kkt.lu();
    let mut out = Vec::with_capacity(targets.len());
    for target in targets {
        debug_assert_eq!(target.responses.len(), coalitions.len());
        // Right-hand side: 2 A' W y, then the constraint values.
        let mut rhs: DVector<f64> = DVector::zeros(size);
        for ((c, &w), &y) in coalitions.iter().zip(weights).zip(target.responses) {
            let wy2 = 2.0 * w * y;
            rhs[0] += wy2;
            for (j, &bit) in c.mask.iter().enumerate() {
                if bit {
                    rhs[j + 1] += wy2;
                }
            }
        }
        rhs[dim] = target.base;
        rhs[dim + 1] = target.fx;

        let solution = lu.solve(&rhs).ok_or(ShapError::SingularSystem)?;
        let intercept = solution[0];
        let phi = (0..m).map(|i| solution[i + 1]).collect();
        out.push((intercept, phi));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coalition(bits: &[usize], m: usize) -> Coalition {
        let mut mask = vec![false; m];
        for &b in bits {
            mask[b] = true;
        }
        Coalition::new(mask)
    }

    #[test]
    fn constraints_pin_intercept_and_sum() {
        let m = 3;
        let coalitions = vec![
            coalition(&[0], m),
            coalition(&[1], m),
            coalition(&[2], m),
            coalition(&[0, 1], m),
            coalition(&[0, 2], m),
            coalition(&[1, 2], m),
        ];
        let weights = vec![1.0; 6];
        let responses = vec![1.0, 2.0, 3.0, 3.5, 4.0, 5.5];
        let targets = [WlsTarget {
            responses: &responses,
            base: 0.5,
            fx: 6.5,
        }];
        let (intercept, phi) = solve(&coalitions, &weights, m, &targets)
            .unwrap()
            .pop()
            .unwrap();
        assert!((intercept - 0.5).abs() < 1e-8);
        let total: f64 = intercept + phi.iter().sum::<f64>();
        assert!((total - 6.5).abs() < 1e-8);
    }

    #[test]
    fn additive_responses_recover_their_coefficients() {
        // Responses follow y(z) = 1 + 2 z0 + 3 z1 exactly; the fit must
        // reproduce those coefficients.
        let m = 2;
        let coalitions = vec![coalition(&[0], m), coalition(&[1], m)];
        let weights = vec![0.7, 0.4];
        let responses = vec![3.0, 4.0];
        let targets = [WlsTarget {
            responses: &responses,
            base: 1.0,
            fx: 6.0,
        }];
        let (intercept, phi) = solve(&coalitions, &weights, m, &targets)
            .unwrap()
            .pop()
            .unwrap();
        assert!((intercept - 1.0).abs() < 1e-7);
        assert!((phi[0] - 2.0).abs() < 1e-7);
        assert!((phi[1] - 3.0).abs() < 1e-7);
    }

    #[test]
    fn multiple_targets_share_one_factorization() {
        let m = 2;
        let coalitions = vec![coalition(&[0], m), coalition(&[1], m)];
        let weights = vec![1.0, 1.0];
        let r1 = vec![3.0, 4.0];
        let r2 = vec![6.0, 8.0];
        let targets = [
            WlsTarget {
                responses: &r1,
                base: 1.0,
                fx: 6.0,
            },
            WlsTarget {
                responses: &r2,
                base: 2.0,
                fx: 12.0,
            },
        ];
        let out = solve(&coalitions, &weights, m, &targets).unwrap();
        assert_eq!(out.len(), 2);
        // The second target is twice the first; so is its solution.
        for i in 0..m {
            assert!((out[1].1[i] - 2.0 * out[0].1[i]).abs() < 1e-7);
        }
    }

    #[test]
    fn no_rows_still_solves_via_the_constraints() {
        // With zero interior coalitions (one feature) the two constraints
        // alone determine the solution.
        let targets = [WlsTarget {
            responses: &[],
            base: 2.0,
            fx: 5.0,
        }];
        let (intercept, phi) = solve(&[], &[], 1, &targets).unwrap().pop().unwrap();
        assert!((intercept - 2.0).abs() < 1e-8);
        assert!((phi[0] - 3.0).abs() < 1e-8);
    }
}
