//! `lambda = beta + eps * tau * alpha_tilde` on `[-1, 1] x M` with a search
//! for the largest admissible `eps` on the grid `2^-k`.

use serde::Serialize;

use super::{end_conditions, evaluate_preliouville, PreLiouvilleReport, PreLiouvilleState};
use crate::error::{LabError, Result};
use crate::fields::{FormField, ModelManifold, PlaneField};

pub const EPS_EXPONENTS: std::ops::RangeInclusive<i32> = 1..=20;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThickeningReport {
    /// `min (alpha_tilde ^ d beta) / vol`.
    pub min_transverse: f64,
    /// Domination of the boundary planes by `d beta` alone (`eps = 0`).
    pub min_beta_pairing: Vec<f64>,
    pub eps_star: f64,
    pub tried: Vec<(f64, bool)>,
    pub state: PreLiouvilleReport,
}

pub fn thickening_construction(
    beta: &FormField,
    alpha_tilde: &FormField,
    xi_minus: PlaneField,
    xi_plus: PlaneField,
    n_tau: usize,
) -> Result<(PreLiouvilleState, ThickeningReport)> {
    let m = beta.manifold.clone();
    let thick = std::sync::Arc::new(ModelManifold::thickened(&m, n_tau)?);
    let transverse = alpha_tilde.wedge(&beta.exterior_derivative()?)?;
    let min_transverse = transverse.top_coefficient()?.iter().cloned().fold(f64::INFINITY, f64::min);
    let bc = end_conditions(&thick, xi_minus, xi_plus);
    let b4 = beta.lift(thick.clone())?;
    let a4 = alpha_tilde.lift(thick.clone())?;
    let tau = FormField::scalar_from_fn(thick.clone(), |c| c[0]);
    let ta = a4.mul_scalar(&tau)?;
    let min_beta_pairing = evaluate_preliouville(&b4, &bc)?.boundaries.iter().map(|b| b.min_pairing).collect();
    let mut tried = Vec::new();
    for k in EPS_EXPONENTS {
        let eps = 2f64.powi(-k);
        let lambda = b4.add(&ta.scale(eps))?;
        let rep = evaluate_preliouville(&lambda, &bc)?;
        tried.push((eps, rep.pass));
        if rep.pass {
            let report = ThickeningReport {
                min_transverse,
                min_beta_pairing,
                eps_star: eps,
                tried,
                state: rep.clone(),
            };
            return Ok((PreLiouvilleState { lambda, boundaries: bc, report: rep }, report));
        }
    }
    Err(LabError::SearchExhausted(format!(
        "no eps in 2^-1..2^-20 makes beta + eps tau alpha_tilde pre-Liouville (min alpha_tilde ^ d beta = {min_transverse:.3e})"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::anosov::{alpha_beta, defining_pair, mitsumatsu_forms, SuspensionAnosov};

    fn setup(n: usize) -> (crate::anosov::DefiningPair, PlaneField, PlaneField) {
        let f = SuspensionAnosov::new([[2, 1], [1, 1]], n, n).unwrap();
        let pair = defining_pair(&f).unwrap().0;
        let (am, ap) = mitsumatsu_forms(&pair, 0.05).unwrap();
        (pair, PlaneField::new(am).unwrap(), PlaneField::new(ap).unwrap())
    }

    #[test]
    fn suspension_thickening_found() {
        let (pair, xm, xp) = setup(16);
        let (alpha, beta) = alpha_beta(&pair);
        let (st, rep) = thickening_construction(&beta, &alpha, xm.clone(), xp.clone(), 9).unwrap();
        assert!(st.report.pass);
        assert!(rep.eps_star >= 2f64.powi(-10));
        assert!(rep.min_transverse > 0.0);
        let (_, big) = thickening_construction(&beta, &alpha.scale(2.0), xm.clone(), xp.clone(), 9).unwrap();
        let (_, small) = thickening_construction(&beta, &alpha.scale(0.5), xm, xp, 9).unwrap();
        assert!(big.eps_star <= rep.eps_star && small.eps_star >= rep.eps_star);
    }

    #[test]
    fn reversed_alpha_never_works() {
        let (pair, xm, xp) = setup(8);
        let (alpha, beta) = alpha_beta(&pair);
        let r = thickening_construction(&beta, &alpha.scale(-1.0), xm, xp, 9);
        assert!(matches!(r, Err(LabError::SearchExhausted(_))));
    }

    #[test]
    fn resolution_stability() {
        let (pair, xm, xp) = setup(8);
        let (alpha, beta) = alpha_beta(&pair);
        let (_, coarse) = thickening_construction(&beta, &alpha, xm, xp, 9).unwrap();
        let (pair, xm, xp) = setup(16);
        let (alpha, beta) = alpha_beta(&pair);
        let (_, fine) = thickening_construction(&beta, &alpha, xm, xp, 17).unwrap();
        let ratio = coarse.eps_star / fine.eps_star;
        assert!((0.5..=2.0).contains(&ratio));
    }
}
