use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use super::law::Law;
use super::poly::Poly;
use crate::error::{Error, Result};

/// Anything that can be evaluated as a Laplace–Stieltjes transform.
pub trait Lst {
    fn eval(&self, s: Complex64) -> Result<Complex64>;
}

/// Evaluates either flavour of transform.
pub fn lst_eval(lst: &dyn Lst, s: Complex64) -> Result<Complex64> {
    lst.eval(s)
}

/// Rational transform `N(s)/D(s)` with `D` monic and its roots kept
/// explicitly (the solvers substitute them directly).
#[derive(Debug, Clone, PartialEq)]
pub struct RationalLst {
    numerator: Poly,
    denominator: Poly,
    roots: Vec<Complex64>,
    law: Option<Law>,
}

impl RationalLst {
    pub fn new(numerator: Poly, denominator: Poly, roots: Vec<Complex64>) -> Result<Self> {
        let lead = denominator.leading();
        if lead.norm() == 0.0 {
            return Err(Error::InvalidLst("zero denominator".into()));
        }
        let numerator = numerator.scale(1.0 / lead);
        let denominator = denominator.scale(1.0 / lead);
        if numerator.degree() > denominator.degree() {
            return Err(Error::InvalidLst(format!(
                "numerator degree {} exceeds denominator degree {}",
                numerator.degree(),
                denominator.degree()
            )));
        }
        if roots.len() != denominator.degree() {
            return Err(Error::InvalidLst(format!(
                "{} roots given for a degree-{} denominator",
                roots.len(),
                denominator.degree()
            )));
        }
        if let Some(r) = roots.iter().find(|r| !(r.re < 0.0)) {
            return Err(Error::InvalidLst(format!("denominator root {r} is not in Re(s) < 0")));
        }
        let rebuilt = Poly::from_roots(&roots)?;
        let scale = denominator.coeffs().iter().map(|c| c.norm()).fold(1.0, f64::max);
        let mismatch = rebuilt
            .coeffs()
            .iter()
            .zip(denominator.coeffs())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        if mismatch > 1e-10 * scale {
            return Err(Error::InvalidLst(format!(
                "roots do not reproduce the denominator (coefficient mismatch {mismatch:.3e})"
            )));
        }
        let at_zero = numerator.eval(Complex64::new(0.0, 0.0)) / denominator.eval(Complex64::new(0.0, 0.0));
        if (at_zero - 1.0).norm() > 1e-12 {
            return Err(Error::InvalidLst(format!("N(0)/D(0) = {at_zero}, expected 1")));
        }
        Ok(Self {
            numerator,
            denominator,
            roots,
            law: None,
        })
    }

    /// Builds the rational transform of a law that has one.
    pub fn from_law(law: Law) -> Result<Self> {
        law.validate()?;
        let (num, den, roots) = law
            .rational_parts()
            .ok_or_else(|| Error::InvalidLst(format!("{law:?} has no rational transform")))??;
        let mut lst = Self::new(num, den, roots)?;
        lst.law = Some(law);
        Ok(lst)
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        Self::from_law(Law::Exponential { rate })
    }

    pub fn erlang(phases: usize, rate: f64) -> Result<Self> {
        Self::from_law(Law::Erlang { phases, rate })
    }

    pub fn erlang_mixture(weights: Vec<f64>, rate: f64) -> Result<Self> {
        Self::from_law(Law::ErlangMixture { weights, rate })
    }

    pub fn hyperexponential(weights: Vec<f64>, rates: Vec<f64>) -> Result<Self> {
        Self::from_law(Law::HyperExponential { weights, rates })
    }

    /// The zero random variable (transform ≡ 1).
    pub fn zero() -> Self {
        Self::from_law(Law::PointMass { at: 0.0 }).expect("point mass at zero is rational")
    }

    pub fn numerator(&self) -> &Poly {
        &self.numerator
    }

    pub fn denominator(&self) -> &Poly {
        &self.denominator
    }

    pub fn denominator_roots(&self) -> &[Complex64] {
        &self.roots
    }

    /// Number of poles (`m_i` or `l_j`).
    pub fn degree(&self) -> usize {
        self.denominator.degree()
    }

    pub fn law(&self) -> Option<&Law> {
        self.law.as_ref()
    }

    /// Evaluates without the pole check.
    pub fn value(&self, s: Complex64) -> Complex64 {
        self.numerator.eval(s) / self.denominator.eval(s)
    }

    pub fn mean(&self) -> f64 {
        // −d/ds (N/D) at 0 = (N D' − N' D)/D² at 0, with N(0) = D(0).
        let z = Complex64::new(0.0, 0.0);
        let n = self.numerator.eval(z);
        let d = self.denominator.eval(z);
        let dn = self.numerator.derivative().eval(z);
        let dd = self.denominator.derivative().eval(z);
        ((n * dd - dn * d) / (d * d)).re
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        match &self.law {
            Some(law) => Ok(law.sample(rng)),
            None => Err(Error::NoSampler("rational transform without a recognized mixture form".into())),
        }
    }
}

impl Lst for RationalLst {
    fn eval(&self, s: Complex64) -> Result<Complex64> {
        if let Some(&root) = self
            .roots
            .iter()
            .find(|r| (s - **r).norm() <= 1e-12 * (1.0 + r.norm()))
        {
            return Err(Error::Pole { root });
        }
        Ok(self.value(s))
    }
}

pub fn exponential_lst(rate: f64) -> Result<RationalLst> {
    RationalLst::exponential(rate)
}

/// `Σ_k weights[k−1] (rate/(rate+s))^k`; the denominator degree is the
/// highest phase count carrying positive weight.
pub fn erlang_mixture_lst(weights: &[f64], rate: f64) -> Result<RationalLst> {
    RationalLst::erlang_mixture(weights.to_vec(), rate)
}

type TransformFn = Arc<dyn Fn(Complex64) -> Complex64 + Send + Sync>;

#[derive(Clone)]
enum Source {
    Law(Law),
    Custom { f: TransformFn, moments: Vec<f64>, zeta: f64 },
}

/// A transform known only through evaluation plus declared moments.
#[derive(Clone)]
pub struct GeneralLst {
    source: Source,
}

impl fmt::Debug for GeneralLst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.source {
            Source::Law(law) => f.debug_tuple("GeneralLst").field(law).finish(),
            Source::Custom { moments, zeta, .. } => f
                .debug_struct("GeneralLst::Custom")
                .field("moments", moments)
                .field("zeta", zeta)
                .finish(),
        }
    }
}

impl GeneralLst {
    pub fn from_law(law: Law) -> Result<Self> {
        law.validate()?;
        Ok(Self { source: Source::Law(law) })
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        Self::from_law(Law::Exponential { rate })
    }

    pub fn zero() -> Self {
        Self { source: Source::Law(Law::PointMass { at: 0.0 }) }
    }

    /// A user-supplied transform, analytic on `Re(s) > −zeta`, with declared
    /// moments `E[X], E[X²], …`. The first two are checked against central
    /// differences at 0.
    pub fn custom(
        f: impl Fn(Complex64) -> Complex64 + Send + Sync + 'static,
        moments: Vec<f64>,
        zeta: f64,
    ) -> Result<Self> {
        let f: TransformFn = Arc::new(f);
        let z = Complex64::new(0.0, 0.0);
        let at_zero = f(z);
        if (at_zero - 1.0).norm() > 1e-12 {
            return Err(Error::InvalidLst(format!("transform at 0 is {at_zero}, expected 1")));
        }
        if !(zeta >= 0.0) {
            return Err(Error::InvalidLst(format!("analyticity margin {zeta} is negative")));
        }
        let h = 1e-4;
        let fp = f(Complex64::new(h, 0.0)).re;
        let fm = f(Complex64::new(-h, 0.0)).re;
        let numeric = [-(fp - fm) / (2.0 * h), (fp - 2.0 * at_zero.re + fm) / (h * h)];
        for (r, (&declared, &num)) in moments.iter().zip(&numeric).enumerate() {
            if (declared - num).abs() > 1e-6 * declared.abs().max(1.0) {
                return Err(Error::InvalidLst(format!(
                    "declared moment {} = {declared} but central differences give {num}",
                    r + 1
                )));
            }
        }
        Ok(Self {
            source: Source::Custom { f, moments, zeta },
        })
    }

    pub fn law(&self) -> Option<&Law> {
        match &self.source {
            Source::Law(law) => Some(law),
            Source::Custom { .. } => None,
        }
    }

    pub fn value(&self, s: Complex64) -> Complex64 {
        match &self.source {
            Source::Law(law) => law.lst(s),
            Source::Custom { f, .. } => f(s),
        }
    }

    /// `E[X^r]`, `None` if not declared.
    pub fn moment(&self, r: usize) -> Option<f64> {
        if r == 0 {
            return Some(1.0);
        }
        match &self.source {
            Source::Law(law) => Some(law.moment(r)),
            Source::Custom { moments, .. } => moments.get(r - 1).copied(),
        }
    }

    pub fn mean(&self) -> f64 {
        self.moment(1).unwrap_or(f64::NAN)
    }

    /// ζ with the transform analytic on `Re(s) > −ζ`.
    pub fn analyticity_margin(&self) -> f64 {
        match &self.source {
            Source::Law(law) => law.analyticity_margin(),
            Source::Custom { zeta, .. } => *zeta,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        match &self.source {
            Source::Law(law) => Ok(law.sample(rng)),
            Source::Custom { .. } => Err(Error::NoSampler("custom transform".into())),
        }
    }
}

impl Lst for GeneralLst {
    fn eval(&self, s: Complex64) -> Result<Complex64> {
        let zeta = self.analyticity_margin();
        if s.re <= -zeta {
            return Err(Error::OutsideRegion { point: s, bound: -zeta });
        }
        Ok(self.value(s))
    }
}

impl From<RationalLst> for GeneralLst {
    fn from(r: RationalLst) -> Self {
        match r.law {
            Some(law) => Self { source: Source::Law(law) },
            None => {
                let zeta = r.roots.iter().map(|x| -x.re).fold(f64::INFINITY, f64::min);
                let moments = vec![r.mean()];
                let rr = r.clone();
                Self {
                    source: Source::Custom {
                        f: Arc::new(move |s| rr.value(s)),
                        moments,
                        zeta,
                    },
                }
            }
        }
    }
}

/// Law of `V` given `V < 0`: a finite mixture of negative atoms.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NegativeMultiplierLaw {
    atoms: Vec<(f64, f64)>,
}

impl NegativeMultiplierLaw {
    pub fn new(atoms: Vec<(f64, f64)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidSpec("negative multiplier law has no atoms".into()));
        }
        for &(v, w) in &atoms {
            if !(v < 0.0 && v.is_finite()) {
                return Err(Error::InvalidSpec(format!("atom value {v} is not negative")));
            }
            if !(w > 0.0 && w <= 1.0) {
                return Err(Error::InvalidSpec(format!("atom weight {w} is not in (0, 1]")));
            }
        }
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidSpec(format!("atom weights sum to {total}")));
        }
        Ok(Self { atoms })
    }

    pub fn single(value: f64) -> Result<Self> {
        Self::new(vec![(value, 1.0)])
    }

    /// `(value, weight)` pairs.
    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for &(v, w) in &self.atoms {
            acc += w;
            if u < acc {
                return v;
            }
        }
        self.atoms[self.atoms.len() - 1].0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn exponential_values() {
        let e = exponential_lst(2.0).unwrap();
        assert_eq!(e.eval(c(0.0, 0.0)).unwrap(), c(1.0, 0.0));
        assert!((e.eval(c(2.0, 0.0)).unwrap() - c(0.5, 0.0)).norm() < 1e-15);
        assert!((lst_eval(&e, c(0.0, 1.0)).unwrap() - c(0.8, -0.4)).norm() < 1e-15);
        assert_eq!(exponential_lst(10.0).unwrap().denominator_roots(), &[c(-10.0, 0.0)]);
    }

    #[test]
    fn pole_is_reported() {
        match exponential_lst(10.0).unwrap().eval(c(-10.0, 0.0)) {
            Err(Error::Pole { root }) => assert_eq!(root, c(-10.0, 0.0)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn nonpositive_rate_rejected() {
        assert!(exponential_lst(0.0).is_err());
        assert!(exponential_lst(-1.0).is_err());
    }

    #[test]
    fn erlang_mixture_cases() {
        let single = erlang_mixture_lst(&[1.0], 3.0).unwrap();
        let exp = exponential_lst(3.0).unwrap();
        assert_eq!(single.numerator(), exp.numerator());
        assert_eq!(single.denominator(), exp.denominator());
        let mix = erlang_mixture_lst(&[0.5, 0.5], 1.0).unwrap();
        assert!((mix.eval(c(1.0, 0.0)).unwrap() - c(0.375, 0.0)).norm() < 1e-15);
        assert_eq!(mix.degree(), 2);
        assert!(erlang_mixture_lst(&[], 1.0).is_err());
        assert!(erlang_mixture_lst(&[1.5, -0.5], 1.0).is_err());
    }

    #[test]
    fn constructor_validates() {
        let num = Poly::from_real(&[2.0]).unwrap();
        let den = Poly::from_real(&[2.0, 1.0]).unwrap();
        assert!(RationalLst::new(num.clone(), den.clone(), vec![c(-2.0, 0.0)]).is_ok());
        // Wrong root.
        assert!(RationalLst::new(num.clone(), den.clone(), vec![c(-3.0, 0.0)]).is_err());
        // Not normalized.
        assert!(RationalLst::new(Poly::from_real(&[1.0]).unwrap(), den.clone(), vec![c(-2.0, 0.0)]).is_err());
        // Root in the right half-plane.
        let bad = Poly::from_real(&[-2.0, 1.0]).unwrap();
        assert!(RationalLst::new(Poly::from_real(&[-2.0]).unwrap(), bad, vec![c(2.0, 0.0)]).is_err());
        // Improper.
        assert!(RationalLst::new(Poly::from_real(&[2.0, 1.0, 1.0]).unwrap(), den, vec![c(-2.0, 0.0)]).is_err());
    }

    #[test]
    fn custom_general_lst_checks_moments() {
        let ok = GeneralLst::custom(|s| 3.0 / (3.0 + s), vec![1.0 / 3.0, 2.0 / 9.0], 3.0);
        assert!(ok.is_ok());
        let bad = GeneralLst::custom(|s| 3.0 / (3.0 + s), vec![0.5], 3.0);
        assert!(bad.is_err());
        let unnormalized = GeneralLst::custom(|s| 2.0 / (3.0 + s), vec![], 3.0);
        assert!(unnormalized.is_err());
    }

    #[test]
    fn general_lst_region() {
        let g = GeneralLst::exponential(4.0).unwrap();
        assert!(g.eval(c(-3.9, 0.0)).is_ok());
        assert!(matches!(g.eval(c(-4.0, 0.0)), Err(Error::OutsideRegion { .. })));
        assert_eq!(g.moment(2), Some(2.0 / 16.0));
    }

    #[test]
    fn multiplier_law_validation() {
        assert!(NegativeMultiplierLaw::new(vec![(-1.0, 0.5), (-0.5, 0.5)]).is_ok());
        assert!(NegativeMultiplierLaw::new(vec![(1.0, 1.0)]).is_err());
        assert!(NegativeMultiplierLaw::new(vec![(-1.0, 0.4)]).is_err());
    }

    fn arb_law() -> impl Strategy<Value = Law> {
        prop_oneof![
            (0.1f64..20.0).prop_map(|rate| Law::Exponential { rate }),
            (1usize..5, 0.1f64..20.0).prop_map(|(phases, rate)| Law::Erlang { phases, rate }),
            (prop::collection::vec(0.01f64..1.0, 1..4), 0.1f64..20.0).prop_map(|(w, rate)| {
                let t: f64 = w.iter().sum();
                Law::ErlangMixture { weights: w.iter().map(|x| x / t).collect(), rate }
            }),
            (prop::collection::vec((0.01f64..1.0, 0.1f64..20.0), 1..4)).prop_map(|pairs| {
                let t: f64 = pairs.iter().map(|p| p.0).sum();
                Law::HyperExponential {
                    weights: pairs.iter().map(|p| p.0 / t).collect(),
                    rates: pairs.iter().map(|p| p.1).collect(),
                }
            }),
        ]
    }

    proptest! {
        #[test]
        fn transforms_are_valid_on_the_real_grid(law in arb_law()) {
            let lst = RationalLst::from_law(law).unwrap();
            let mut prev = f64::INFINITY;
            for k in 0..=100 {
                let v = lst.eval(c(0.1 * k as f64, 0.0)).unwrap();
                prop_assert!(v.im.abs() < 1e-12);
                prop_assert!(v.re > 0.0 && v.re <= 1.0 + 1e-12);
                prop_assert!(v.re <= prev + 1e-12);
                prev = v.re;
            }
        }

        #[test]
        fn transforms_are_bounded_on_the_right_half_plane(law in arb_law(), re in 0.0f64..10.0, im in -50.0f64..50.0) {
            let lst = RationalLst::from_law(law).unwrap();
            prop_assert!(lst.eval(c(re, im)).unwrap().norm() <= 1.0 + 1e-12);
        }
    }
}
