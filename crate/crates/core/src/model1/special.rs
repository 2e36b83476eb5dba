//! The case `p3 = 1`: every step multiplies the workload by a negative
//! factor, so `W_{n+1} = [V_n W_n + S_n − A_{n+1}]^+` with `V_n < 0` and the
//! interarrival transforms may be arbitrary.
//!
//! Then `Φ_j(s) = K_j(s) / Q(s)` with `Q = ∏_k D_{B,k}` and `K_j` a
//! polynomial of degree `Σ_k m_k`; its coefficients follow from requiring
//! the right side of the transform equation to be analytic at each
//! service pole.

use num_complex::Complex64;

use super::probe_nonpositive;
use super::solve::{group_roots, solve_equilibrated, taylor_forms, RootGroup};
use crate::error::{Error, Result};
use crate::polyalg::{max_abs, AffineVector, CMatrix, CVector};
use crate::probcore::{GeneralLst, Law, Lst, ModulationChain, NegativeMultiplierLaw, Poly, RationalLst};

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// A Model I instance with `p3 = 1`.
#[derive(Debug, Clone)]
pub struct Model1SpecialSpec {
    pub chain: ModulationChain,
    pub service: Vec<RationalLst>,
    pub interarrival: Vec<GeneralLst>,
    pub v_negative: NegativeMultiplierLaw,
}

impl Model1SpecialSpec {
    pub fn new(
        chain: ModulationChain,
        service: Vec<RationalLst>,
        interarrival: Vec<GeneralLst>,
        v_negative: NegativeMultiplierLaw,
    ) -> Result<Self> {
        let n = chain.states();
        if service.len() != n || interarrival.len() != n {
            return Err(Error::InvalidSpec(format!(
                "{n} states but {} service and {} interarrival transforms",
                service.len(),
                interarrival.len()
            )));
        }
        Ok(Self {
            chain,
            service,
            interarrival,
            v_negative,
        })
    }

    pub fn states(&self) -> usize {
        self.chain.states()
    }

    /// `P(S < A)` in closed form when every interarrival law is
    /// exponential, otherwise by the seeded probe, `None` when neither is
    /// available.
    pub fn positive_drop_probability(&self) -> Option<f64> {
        let rates: Option<Vec<f64>> = self
            .interarrival
            .iter()
            .map(|l| match l.law() {
                Some(Law::Exponential { rate }) => Some(*rate),
                _ => None,
            })
            .collect();
        if let Some(rates) = rates {
            let mut total = 0.0;
            for i in 0..self.states() {
                for (j, &lambda) in rates.iter().enumerate() {
                    let beta = self.service[i].value(c(lambda)).re;
                    total += self.chain.pi(i) * self.chain.p(i, j) * beta;
                }
            }
            return Some(total);
        }
        probe_nonpositive(
            &self.chain,
            &|i, rng| self.service[i].sample(rng),
            &|j, rng| self.interarrival[j].sample(rng),
        )
    }
}

/// Solved `p3 = 1` instance: `K_j` coefficients in ascending powers.
#[derive(Debug, Clone)]
pub struct Model1SpecialSolution {
    pub spec: Model1SpecialSpec,
    q: Poly,
    pub numerators: Vec<Poly>,
    pub condition: f64,
    pub system_residual: f64,
    pub service_poles: Vec<RootGroup>,
    /// `P(S < A)` used by the stability gate, if it could be computed.
    pub drop_probability: Option<f64>,
}

impl Model1SpecialSolution {
    /// `Φ_W(s) = K(s) / Q(s)`.
    pub fn phi(&self, s: Complex64) -> Result<CVector> {
        let q = self.q.eval(s);
        if q.norm() == 0.0 {
            return Err(Error::Pole { root: s });
        }
        Ok(CVector::from_iterator(
            self.numerators.len(),
            self.numerators.iter().map(|k| k.eval(s) / q),
        ))
    }

    /// `E[W 1{Z = j}] = −Φ_j'(0)`.
    pub fn mean(&self) -> Vec<f64> {
        let zero = c(0.0);
        let (q0, dq0) = (self.q.eval(zero), self.q.derivative().eval(zero));
        self.numerators
            .iter()
            .map(|k| -((k.derivative().eval(zero) * q0 - k.eval(zero) * dq0) / (q0 * q0)).re)
            .collect()
    }

    /// `P(W = 0, Z = j)`, the limit of `Φ_j(s)` as `s → ∞`.
    pub fn atom_at_zero(&self) -> Vec<f64> {
        let m = self.q.degree();
        self.numerators
            .iter()
            .map(|k| k.coeffs().get(m).map_or(0.0, |x| (x / self.q.leading()).re))
            .collect()
    }
}

/// Solves the `p3 = 1` instance.
pub fn solve_model1_special(spec: &Model1SpecialSpec) -> Result<Model1SpecialSolution> {
    let drop_probability = spec.positive_drop_probability();
    if let Some(p) = drop_probability {
        if !(p > 0.0) {
            return Err(Error::Unstable("P(S < A) = 0".into()));
        }
    }
    let n = spec.states();
    let mut q = Poly::constant(c(1.0));
    let mut roots = Vec::new();
    for l in &spec.service {
        q = q.mul(l.denominator())?;
        roots.extend_from_slice(l.denominator_roots());
    }
    let m = q.degree();
    let u = n * m;
    let q0 = q.eval(c(0.0));

    // K_j(s) as an affine form in c_{ω,j}, ω = 1..=m, flattened j-major.
    let k_form = |s: Complex64| -> AffineVector {
        let mut out = AffineVector::zeros(n, u);
        for j in 0..n {
            out.constant_mut()[j] = c(spec.chain.pi(j)) * q0;
            let mut power = c(1.0);
            for w in 1..=m {
                power *= s;
                out.coefficients_mut()[(j, j * m + w - 1)] = power;
            }
        }
        out
    };

    let equation = |s: Complex64| -> Result<AffineVector> {
        let mut psi = AffineVector::zeros(n, u);
        for &(y, w) in spec.v_negative.atoms() {
            let qy = q.eval(s * y);
            psi += &k_form(s * y).scale(c(w) / qy);
        }
        let d_b: Vec<Complex64> = spec.service.iter().map(|l| l.denominator().eval(s)).collect();
        let a_minus: Vec<Complex64> = spec
            .interarrival
            .iter()
            .map(|l| l.eval(-s))
            .collect::<Result<_>>()?;
        let t = CMatrix::from_fn(n, n, |j, i| {
            let others: Complex64 = (0..n).filter(|&v| v != i).map(|v| d_b[v]).product();
            c(spec.chain.p(i, j)) * a_minus[j] * spec.service[i].numerator().eval(s) * others
        });
        Ok(&psi.premultiply(&t) - &k_form(s))
    };

    let groups = group_roots(&roots);
    let mut constants = Vec::with_capacity(u);
    let mut rows: Vec<Vec<Complex64>> = Vec::with_capacity(u);
    for g in &groups {
        let forms = taylor_forms(&equation, g.center, 0.25 * g.center.re.abs(), g.multiplicity)?;
        for j in 0..n {
            for form in &forms {
                constants.push(form.constant()[j]);
                rows.push(form.coefficients().row(j).iter().copied().collect());
            }
        }
    }
    let sol = solve_equilibrated(&rows, &constants)?;
    let max_imaginary = max_abs(sol.x.iter().map(|z| Complex64::new(z.im, 0.0)));
    if max_imaginary > 1e-6 * max_abs(sol.x.iter().copied()).max(1.0) {
        return Err(Error::Residual {
            what: "imaginary part of the polynomial coefficients".into(),
            value: max_imaginary,
            tolerance: 1e-6,
        });
    }
    let numerators = (0..n)
        .map(|j| {
            let mut coeffs = vec![c(spec.chain.pi(j)) * q0];
            coeffs.extend((1..=m).map(|w| c(sol.x[j * m + w - 1].re)));
            Poly::new(coeffs)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Model1SpecialSolution {
        spec: spec.clone(),
        q,
        numerators,
        condition: sol.condition,
        system_residual: sol.residual,
        service_poles: groups,
        drop_probability,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Single state, `S ~ exp(μ)`, `A ~ exp(λ)`, `V ≡ −1`. Then
    /// `W' = [S − W − A]^+`, and conditioning on `S > W` gives
    /// `Φ(s) = 1 − Φ(μ) λ s / ((μ + λ)(μ + s))`.
    #[test]
    fn single_state_fixed_point() {
        let (mu, lambda) = (3.0, 2.0);
        let spec = Model1SpecialSpec::new(
            ModulationChain::new(vec![vec![1.0]]).unwrap(),
            vec![RationalLst::exponential(mu).unwrap()],
            vec![GeneralLst::exponential(lambda).unwrap()],
            NegativeMultiplierLaw::single(-1.0).unwrap(),
        )
        .unwrap();
        let sol = solve_model1_special(&spec).unwrap();
        let phi_mu = 1.0 / (1.0 + lambda / (2.0 * (mu + lambda)));
        for s in [0.0, 0.5, 2.0, 7.0] {
            let expected = 1.0 - phi_mu * lambda * s / ((mu + lambda) * (mu + s));
            assert!((sol.phi(c(s)).unwrap()[0].re - expected).abs() < 1e-10);
        }
        let mean = phi_mu * lambda / ((mu + lambda) * mu);
        assert!((sol.mean()[0] - mean).abs() < 1e-10);
    }

    #[test]
    fn gamma_interarrival_normalizes() {
        let chain = ModulationChain::new(vec![vec![0.3, 0.7], vec![0.5, 0.5]]).unwrap();
        let spec = Model1SpecialSpec::new(
            chain,
            vec![RationalLst::erlang(2, 4.0).unwrap(), RationalLst::exponential(5.0).unwrap()],
            vec![
                GeneralLst::custom(|s| (1.0 + s / 2.0).powf(-1.5), vec![0.75, 0.75 * 1.25], 2.0).unwrap(),
                GeneralLst::exponential(1.0).unwrap(),
            ],
            NegativeMultiplierLaw::new(vec![(-0.5, 0.5), (-2.0, 0.5)]).unwrap(),
        )
        .unwrap();
        let sol = solve_model1_special(&spec).unwrap();
        let phi0 = sol.phi(c(0.0)).unwrap();
        assert!((phi0[0].re - spec.chain.pi(0)).abs() < 1e-12);
        let atoms = sol.atom_at_zero();
        assert!(atoms.iter().zip(spec.chain.stationary()).all(|(a, p)| *a > 0.0 && a <= p));
        assert!(sol.mean().iter().all(|m| *m > 0.0));
    }
}
