//! Model II: `W_{n+1} = [V_n W_n + Y_n(V_n)]^+` with `V_n = 1` w.p. `p` and
//! `V_n = −1` w.p. `q = 1 − p`, where `Y_n(1) = S_n − A_{n+1}` and
//! `Y_n(−1) = D_{n+1} − C_n`. Given the background state, `A` and `D` are
//! exponential while `S` and `C` are general.
//!
//! The transform row vector satisfies `Φ_Wᵀ(s) G(s) = ṽ(s)` with
//! `G(s) = p B*(s) P Λ + sI − Λ`; the `2N²` unknown values `Φ_{W,i}(λ_j)`
//! and `Φ_{W,i}(μ_j)` come from the zeros of `det G` in the right half-plane
//! together with the transform equation evaluated at `s = μ_l` and
//! `s = λ_k`.

mod moments;
mod solve;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::polyalg::CMatrix;
use crate::probcore::{GeneralLst, Lst, ModulationChain};

pub use moments::{check_moments, decay_profile, moments, numerical_moments, unchecked_moments, DecayProfile, JENSEN_SLACK, REGION_MARGIN};
pub use solve::{
    assemble_unknowns, evaluate_phi2, find_si_roots, fun_residual, search_bound, separate_rates, Model2Diagnostics,
    Model2Path, Model2Solution, COLLISION_SHIFT, COLLISION_TOL, FUN_TOLERANCE, MAX_CONDITION,
};

/// A full Model II instance.
#[derive(Debug, Clone)]
pub struct Model2Spec {
    pub chain: ModulationChain,
    /// `A | Z = j ~ exp(λ_j)`.
    pub lambda: Vec<f64>,
    /// `D | Z = j ~ exp(μ_j)`.
    pub mu: Vec<f64>,
    /// `β*_j`, transform of `S` given `Z = j`.
    pub beta: Vec<GeneralLst>,
    /// `c*_j`, transform of `C` given `Z = j`.
    pub c_star: Vec<GeneralLst>,
    /// `P(V = 1)`.
    pub p: f64,
}

impl Model2Spec {
    pub fn new(
        chain: ModulationChain,
        lambda: Vec<f64>,
        mu: Vec<f64>,
        beta: Vec<GeneralLst>,
        c_star: Vec<GeneralLst>,
        p: f64,
    ) -> Result<Self> {
        let n = chain.states();
        if lambda.len() != n || mu.len() != n || beta.len() != n || c_star.len() != n {
            return Err(Error::InvalidSpec(format!(
                "{n} states but {} λ, {} μ, {} β* and {} c* entries",
                lambda.len(),
                mu.len(),
                beta.len(),
                c_star.len()
            )));
        }
        if let Some(r) = lambda.iter().chain(&mu).find(|r| !(r.is_finite() && **r > 0.0)) {
            return Err(Error::InvalidSpec(format!("rate {r} is not positive")));
        }
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidSpec(format!("p = {p} is not a probability")));
        }
        Ok(Self {
            chain,
            lambda,
            mu,
            beta,
            c_star,
            p,
        })
    }

    pub fn states(&self) -> usize {
        self.chain.states()
    }

    pub fn q(&self) -> f64 {
        1.0 - self.p
    }
}

/// Outcome of the Model II stability check.
#[derive(Debug, Clone, Serialize)]
pub struct Model2Stability {
    pub stable: bool,
    pub rho: f64,
    pub reason: String,
}

/// `ρ = Σ π_i (p γ_i + q/μ_i) / Σ π_i (p/λ_i + q δ_i)`; any `q > 0` gives a
/// proper limit, while `p = 1` needs `ρ < 1`.
pub fn check_stability_model2(spec: &Model2Spec) -> Model2Stability {
    let (p, q) = (spec.p, spec.q());
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..spec.states() {
        let pi = spec.chain.pi(i);
        num += pi * (p * spec.beta[i].mean() + q / spec.mu[i]);
        den += pi * (p / spec.lambda[i] + q * spec.c_star[i].mean());
    }
    let rho = num / den;
    let (stable, reason) = if q > 0.0 {
        (true, format!("q = {q} > 0: proper limit for every rho (rho = {rho:.6})"))
    } else if rho < 1.0 {
        (true, format!("p = 1 and rho = {rho:.6} < 1"))
    } else {
        (false, format!("p = 1 and rho = {rho:.6} >= 1"))
    };
    Model2Stability { stable, rho, reason }
}

/// `G(s) = p diag(β*(s)) P Λ + sI − Λ`.
pub fn build_g(spec: &Model2Spec, s: Complex64) -> Result<CMatrix> {
    let n = spec.states();
    let beta: Vec<Complex64> = spec.beta.iter().map(|b| b.eval(s)).collect::<Result<_>>()?;
    Ok(CMatrix::from_fn(n, n, |i, j| {
        let diag = if i == j { s - spec.lambda[j] } else { Complex64::new(0.0, 0.0) };
        beta[i] * spec.p * spec.chain.p(i, j) * spec.lambda[j] + diag
    }))
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    /// One state with `A ~ exp(λ)`, `S ~ exp(γ⁻¹)`, `D ~ exp(μ)`, `C ~ exp(θ)`.
    pub(crate) fn single(p: f64, lambda: f64, service_rate: f64, mu: f64, theta: f64) -> Model2Spec {
        Model2Spec::new(
            ModulationChain::new(vec![vec![1.0]]).unwrap(),
            vec![lambda],
            vec![mu],
            vec![GeneralLst::exponential(service_rate).unwrap()],
            vec![GeneralLst::exponential(theta).unwrap()],
            p,
        )
        .unwrap()
    }

    /// Two states with service and `D` rates `(10, 8) / u`.
    pub(crate) fn two_state(p: f64, u: f64) -> Model2Spec {
        let mu = vec![10.0 / u, 8.0 / u];
        Model2Spec::new(
            ModulationChain::new(vec![vec![0.2, 0.8], vec![0.6, 0.4]]).unwrap(),
            vec![2.0, 3.0],
            mu.clone(),
            mu.iter().map(|m| GeneralLst::exponential(*m).unwrap()).collect(),
            vec![GeneralLst::exponential(8.0).unwrap(), GeneralLst::exponential(6.0).unwrap()],
            p,
        )
        .unwrap()
    }

    fn pk(s: f64, lambda: f64, service_rate: f64) -> f64 {
        let rho = lambda / service_rate;
        let beta = service_rate / (service_rate + s);
        (1.0 - rho) * s / (s - lambda * (1.0 - beta))
    }

    #[test]
    fn g_matrix_entries() {
        let spec = single(0.5, 2.0, 10.0, 10.0, 1.0);
        let g = build_g(&spec, c(1.0)).unwrap();
        assert!((g[(0, 0)] - (-1.0 / 11.0)).norm() < 1e-15);
        let two = two_state(0.5, 1.0);
        let g0 = build_g(&two, c(0.0)).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let expected = 0.5 * two.chain.p(i, j) * two.lambda[j] - if i == j { two.lambda[j] } else { 0.0 };
                assert!((g0[(i, j)] - expected).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn stability_reports_rho() {
        let spec = single(1.0, 2.0, 20.0, 1.0, 1.0);
        let report = check_stability_model2(&spec);
        assert!(report.stable);
        assert!((report.rho - 0.1).abs() < 1e-15);
        let heavy = single(1.0, 2.0, 2.0 / 1.2, 1.0, 1.0);
        assert!(!check_stability_model2(&heavy).stable);
        assert!(check_stability_model2(&single(0.5, 2.0, 0.1, 1.0, 1.0)).stable);
    }

    #[test]
    fn single_state_root() {
        let (roots, vectors) = find_si_roots(&single(0.5, 2.0, 10.0, 10.0, 1.0)).unwrap();
        assert_eq!(roots.len(), 1);
        assert!((roots[0] - c(-4.0 + 26f64.sqrt())).norm() < 1e-9);
        assert!((vectors[0][0] - 1.0).norm() < 1e-12);
    }

    #[test]
    fn pure_lindley_matches_pollaczek_khinchine() {
        let sol = assemble_unknowns(&single(1.0, 2.0, 10.0, 3.0, 1.0)).unwrap();
        assert_eq!(sol.path, Model2Path::PureLindley);
        for s in [0.5, 1.0, 2.0, 5.0] {
            let phi = evaluate_phi2(&sol, c(s)).unwrap();
            assert!((phi[0].re - pk(s, 2.0, 10.0)).abs() < 1e-10);
        }
        // M/M/1 waiting time: E[W] = ρ/(μ − λ), E[W²] = 2ρ/(μ − λ)².
        let m = moments(&sol, 2).unwrap();
        assert!((m[1][0] - 0.2 / 8.0).abs() < 1e-9);
        assert!((m[2][0] - 0.4 / 64.0).abs() < 1e-9);
    }

    #[test]
    fn erlang_service_moments_match_pollaczek_khinchine() {
        // Erlang(3, 4) service: the Taylor circle must stop short of the
        // zero of s − λ(1 − β(s)) near −0.87, not at the triple pole −4.
        let service = crate::probcore::Law::Erlang { phases: 3, rate: 4.0 };
        let lambda = 0.8;
        let spec = Model2Spec::new(
            ModulationChain::new(vec![vec![1.0]]).unwrap(),
            vec![lambda],
            vec![1.0],
            vec![GeneralLst::from_law(service.clone()).unwrap()],
            vec![GeneralLst::exponential(1.0).unwrap()],
            1.0,
        )
        .unwrap();
        let sol = assemble_unknowns(&spec).unwrap();
        let rho = lambda * service.mean();
        let m = moments(&sol, 2).unwrap();
        assert!((m[0][0] - 1.0).abs() < 1e-10);
        let mean = lambda * service.moment(2) / (2.0 * (1.0 - rho));
        assert!((m[1][0] - mean).abs() < 1e-9, "{} vs {mean}", m[1][0]);
        // E[W²] = 2 E[W]² + λ E[S³] / (3 (1 − ρ)).
        let second = 2.0 * mean * mean + lambda * service.moment(3) / (3.0 * (1.0 - rho));
        assert!((m[2][0] - second).abs() < 1e-8, "{} vs {second}", m[2][0]);
    }

    #[test]
    fn alternating_single_state_closed_form() {
        // W' = [D − C − W]^+: Φ(μ) = 1/(1 + c*(μ)/2).
        let (mu, theta) = (1.5, 4.0);
        let sol = assemble_unknowns(&single(0.0, 2.0, 3.0, mu, theta)).unwrap();
        let c_mu = theta / (theta + mu);
        let phi_mu = 1.0 / (1.0 + c_mu / 2.0);
        assert!((sol.phi_mu[0][0] - phi_mu).abs() < 1e-12);
        let phi = evaluate_phi2(&sol, c(0.7)).unwrap();
        assert!((phi[0].re - (1.0 - 0.7 / (mu + 0.7) * c_mu * phi_mu)).abs() < 1e-12);
    }

    #[test]
    fn general_instance_is_consistent() {
        let sol = assemble_unknowns(&two_state(0.5, 1.0)).unwrap();
        let d = &sol.diagnostics;
        assert!(d.normalization_error < 1e-10, "{d:?}");
        assert!(d.null_orthogonality < 1e-8);
        assert!(d.consistency < 1e-8);
        assert!(d.fun_residual < FUN_TOLERANCE);
        assert!(d.unknowns_in_range);
        for j in 0..2 {
            assert!((sol.k2[j] - (sol.v1[j] + sol.v_minus1[j])).abs() < 1e-15);
        }
        let m = moments(&sol, 4).unwrap();
        let (m1, m2) = numerical_moments(&sol).unwrap();
        for i in 0..2 {
            assert!((m[0][i] - sol.spec.chain.pi(i)).abs() < 1e-10);
            assert!((m[1][i] - m1[i]).abs() < 1e-5 * m[1][i]);
            assert!((m[2][i] - m2[i]).abs() < 1e-4 * m[2][i]);
            assert!(m[3][i] > 0.0 && m[4][i] > 0.0);
        }
    }

    #[test]
    fn decay_rate_of_single_state() {
        let sol = assemble_unknowns(&single(0.5, 2.0, 10.0, 40.0, 1.0)).unwrap();
        let d = decay_profile(&sol).unwrap();
        assert!((d.r - (4.0 + 26f64.sqrt())).abs() < 1e-6, "{d:?}");
        assert!(d.c[0] > 0.0);
    }

    #[test]
    fn near_one_approaches_pollaczek_khinchine() {
        let sol = assemble_unknowns(&single(1.0 - 1e-4, 2.0, 10.0, 3.0, 1.0)).unwrap();
        for s in [1.0, 2.0] {
            let phi = evaluate_phi2(&sol, c(s)).unwrap();
            assert!((phi[0].re - pk(s, 2.0, 10.0)).abs() < 1e-3);
        }
    }

    #[test]
    fn coinciding_rates_are_separated() {
        let (spec, warnings) = separate_rates(&two_state(0.5, 4.0));
        assert_eq!(warnings.len(), 1);
        assert!((spec.mu[1] - 2.0).abs() > 1e-8);
        let sol = assemble_unknowns(&two_state(0.5, 4.0)).unwrap();
        assert!(sol.diagnostics.normalization_error < 1e-10);
        assert!(!sol.warnings.is_empty());
    }
}
