//! Zero counting by the argument principle and zero isolation by recursive
//! quadrisection of rectangles.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

/// Smallest `|f|` tolerated on a contour.
pub const CONTOUR_MIN_ABS: f64 = 1e-8;
/// Left inset that keeps boundary zeros on `Re(s) = 0` out of the count.
pub const HALF_PLANE_INSET: f64 = 1e-9;

const UNWRAP_THRESHOLD: f64 = PI / 2.0;
const MAX_BISECTIONS: usize = 48;
const MAGNITUDE_STEP: f64 = 10.0;
const MAX_POINTS: usize = 1 << 16;
const CELL_POINTS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum Contour {
    Rectangle {
        re_min: f64,
        re_max: f64,
        im_min: f64,
        im_max: f64,
    },
    Circle { center: Complex64, radius: f64 },
}

impl Contour {
    pub fn rectangle(re: (f64, f64), im: (f64, f64)) -> Self {
        assert!(re.0 < re.1 && im.0 < im.1, "degenerate rectangle");
        Contour::Rectangle {
            re_min: re.0,
            re_max: re.1,
            im_min: im.0,
            im_max: im.1,
        }
    }

    pub fn circle(center: Complex64, radius: f64) -> Self {
        assert!(radius > 0.0, "circle radius must be positive");
        Contour::Circle { center, radius }
    }

    /// Counterclockwise parametrization on `t ∈ [0, 1)`.
    fn point(&self, t: f64) -> Complex64 {
        match *self {
            Contour::Circle { center, radius } => center + Complex64::from_polar(radius, 2.0 * PI * t),
            Contour::Rectangle {
                re_min,
                re_max,
                im_min,
                im_max,
            } => {
                let w = re_max - re_min;
                let h = im_max - im_min;
                let mut d = t.rem_euclid(1.0) * 2.0 * (w + h);
                if d < w {
                    return Complex64::new(re_min + d, im_min);
                }
                d -= w;
                if d < h {
                    return Complex64::new(re_max, im_min + d);
                }
                d -= h;
                if d < w {
                    return Complex64::new(re_max - d, im_max);
                }
                d -= w;
                Complex64::new(re_min, im_max - d)
            }
        }
    }

    fn contains(&self, z: Complex64, slack: f64) -> bool {
        match *self {
            Contour::Circle { center, radius } => (z - center).norm() <= radius + slack,
            Contour::Rectangle {
                re_min,
                re_max,
                im_min,
                im_max,
            } => {
                z.re >= re_min - slack
                    && z.re <= re_max + slack
                    && z.im >= im_min - slack
                    && z.im <= im_max + slack
            }
        }
    }
}

struct Winding {
    turns: i64,
    min_abs: f64,
}

fn sample(f: &dyn Fn(Complex64) -> Complex64, contour: &Contour, t: f64) -> Result<(Complex64, Complex64)> {
    let z = contour.point(t);
    let v = f(z);
    if !(v.norm() > CONTOUR_MIN_ABS) || !v.re.is_finite() || !v.im.is_finite() {
        return Err(Error::NearZeroOnContour {
            point: z,
            value: v.norm(),
        });
    }
    Ok((z, v))
}

/// A step between two samples is trusted when it turns by at most the
/// unwrap threshold and changes `|f|` by at most `MAGNITUDE_STEP`.
fn smooth_step(from: Complex64, to: Complex64) -> bool {
    let ratio = to / from;
    ratio.arg().abs() <= UNWRAP_THRESHOLD && (1.0 / MAGNITUDE_STEP..=MAGNITUDE_STEP).contains(&ratio.norm())
}

/// Phase increment across `[t0, t1]`. The midpoint is always sampled, and
/// the segment is bisected unless both halves and the whole step are
/// smooth. Checking the midpoint catches a pole or zero that sits between
/// two samples and leaves their values looking alike, where a whole turn
/// would otherwise go unseen.
fn segment_phase(
    f: &dyn Fn(Complex64) -> Complex64,
    contour: &Contour,
    (t0, f0): (f64, Complex64),
    (t1, f1): (f64, Complex64),
    depth: usize,
    min_abs: &mut f64,
) -> Result<f64> {
    let tm = 0.5 * (t0 + t1);
    let (zm, fm) = sample(f, contour, tm)?;
    *min_abs = min_abs.min(fm.norm());
    let halves = (fm / f0).arg() + (f1 / fm).arg();
    if smooth_step(f0, fm) && smooth_step(fm, f1) && smooth_step(f0, f1) {
        return Ok(halves);
    }
    if depth >= MAX_BISECTIONS {
        // Only a steep but well-resolved magnitude change is left.
        if (fm / f0).arg().abs() <= UNWRAP_THRESHOLD && (f1 / fm).arg().abs() <= UNWRAP_THRESHOLD {
            return Ok(halves);
        }
        return Err(Error::NearZeroOnContour {
            point: zm,
            value: fm.norm(),
        });
    }
    Ok(segment_phase(f, contour, (t0, f0), (tm, fm), depth + 1, min_abs)?
        + segment_phase(f, contour, (tm, fm), (t1, f1), depth + 1, min_abs)?)
}

fn winding(f: &dyn Fn(Complex64) -> Complex64, contour: &Contour, n_points: usize) -> Result<Winding> {
    let n = n_points.max(8);
    let mut values = Vec::with_capacity(n);
    let mut min_abs = f64::INFINITY;
    for k in 0..n {
        let t = k as f64 / n as f64;
        let (_, v) = sample(f, contour, t)?;
        min_abs = min_abs.min(v.norm());
        values.push((t, v));
    }
    // Fixed summation order keeps the result independent of evaluation order.
    let mut total = 0.0;
    for k in 0..n {
        let a = values[k];
        let b = if k + 1 < n { values[k + 1] } else { (1.0, values[0].1) };
        total += segment_phase(f, contour, a, b, 0, &mut min_abs)?;
    }
    let turns = total / (2.0 * PI);
    let rounded = turns.round();
    if (turns - rounded).abs() > 0.25 {
        return Err(Error::NearZeroOnContour {
            point: contour.point(0.0),
            value: min_abs,
        });
    }
    Ok(Winding {
        turns: rounded as i64,
        min_abs,
    })
}

/// Number of zeros minus poles of `f` inside `contour`, doubling the sample
/// count until two successive counts agree.
pub fn count_zeros(f: &dyn Fn(Complex64) -> Complex64, contour: &Contour, n_points: usize) -> Result<i64> {
    let mut n = n_points.max(8);
    let mut previous = winding(f, contour, n)?;
    loop {
        n *= 2;
        let next = winding(f, contour, n)?;
        if next.turns == previous.turns {
            return Ok(next.turns);
        }
        if n >= MAX_POINTS {
            return Err(Error::NearZeroOnContour {
                point: contour.point(0.0),
                value: next.min_abs.min(previous.min_abs),
            });
        }
        previous = next;
    }
}

/// Zeros located inside a contour, each refined by Newton iteration.
#[derive(Debug, Clone, Serialize)]
pub struct ZeroSet {
    pub zeros: Vec<Complex64>,
    /// `true` where `|f'(z)|` is small enough that the zero is suspiciously
    /// close to being multiple.
    pub multiplicity_flags: Vec<bool>,
    pub contour: Contour,
    /// Argument-principle count over `contour`.
    pub count: i64,
}

impl ZeroSet {
    pub fn len(&self) -> usize {
        self.zeros.len()
    }

    pub fn is_empty(&self) -> bool {
        self.zeros.is_empty()
    }

    /// Smallest pairwise distance, `∞` for fewer than two zeros.
    pub fn min_separation(&self) -> f64 {
        let mut best = f64::INFINITY;
        for (i, a) in self.zeros.iter().enumerate() {
            for b in &self.zeros[i + 1..] {
                best = best.min((a - b).norm());
            }
        }
        best
    }
}

pub fn numerical_derivative(f: &dyn Fn(Complex64) -> Complex64, z: Complex64) -> Complex64 {
    let h = 1e-7 * z.norm().max(1.0);
    (f(z + h) - f(z - h)) / (2.0 * h)
}

/// Newton iteration with a central-difference derivative. Returns the
/// refined point and `|f'|` there.
pub fn newton(f: &dyn Fn(Complex64) -> Complex64, start: Complex64) -> Result<(Complex64, f64)> {
    let mut z = start;
    for _ in 0..100 {
        let fz = f(z);
        if fz.norm() == 0.0 {
            break;
        }
        let d = numerical_derivative(f, z);
        if d.norm() == 0.0 || !d.re.is_finite() {
            return Err(Error::Refinement {
                near: z,
                reason: "vanishing derivative".into(),
            });
        }
        let step = fz / d;
        z -= step;
        if !z.re.is_finite() || !z.im.is_finite() {
            return Err(Error::Refinement {
                near: start,
                reason: "iteration diverged".into(),
            });
        }
        if step.norm() <= 1e-15 * z.norm().max(1.0) {
            break;
        }
    }
    let d = numerical_derivative(f, z).norm();
    let r = f(z).norm();
    if !(r < 1e-9 * (1.0 + d)) {
        return Err(Error::Refinement {
            near: z,
            reason: format!("residual {r:.3e} with |f'| = {d:.3e}"),
        });
    }
    Ok((z, d))
}

const SPLITS: [f64; 6] = [0.5173, 0.4759, 0.5337, 0.4581, 0.4123, 0.5911];

struct Search<'a> {
    f: &'a dyn Fn(Complex64) -> Complex64,
    min_cell: f64,
    found: Vec<(Complex64, f64)>,
}

impl Search<'_> {
    fn cell(&mut self, re: (f64, f64), im: (f64, f64), w: i64) -> Result<()> {
        if w == 0 {
            return Ok(());
        }
        if w < 0 {
            return Err(Error::PolesInside { winding: w });
        }
        let rect = Contour::rectangle(re, im);
        let size = (re.1 - re.0).max(im.1 - im.0);
        let center = Complex64::new(0.5 * (re.0 + re.1), 0.5 * (im.0 + im.1));
        if w == 1 {
            if let Ok((z, d)) = newton(self.f, center) {
                if rect.contains(z, 1e-6 * size + 1e-12) {
                    self.found.push((z, d));
                    return Ok(());
                }
            }
        }
        if size < self.min_cell {
            return Err(if w >= 2 {
                Error::RepeatedZero { near: center, winding: w }
            } else {
                Error::Refinement {
                    near: center,
                    reason: "Newton did not converge inside the isolating cell".into(),
                }
            });
        }
        let mut last_err = None;
        for frac in SPLITS {
            let xm = re.0 + frac * (re.1 - re.0);
            let ym = im.0 + (1.0 - frac) * (im.1 - im.0);
            let children = [
                ((re.0, xm), (im.0, ym)),
                ((xm, re.1), (im.0, ym)),
                ((re.0, xm), (ym, im.1)),
                ((xm, re.1), (ym, im.1)),
            ];
            let counts: Result<Vec<i64>> = children
                .iter()
                .map(|&(r, i)| count_zeros(self.f, &Contour::rectangle(r, i), CELL_POINTS))
                .collect();
            match counts {
                Ok(counts) if counts.iter().sum::<i64>() == w => {
                    for (&(r, i), &k) in children.iter().zip(&counts) {
                        self.cell(r, i, k)?;
                    }
                    return Ok(());
                }
                Ok(_) => continue,
                Err(e) => last_err = Some(e),
            }
        }
        // A winding of two or more that no split can separate cleanly is a
        // cluster or a multiple zero.
        match last_err {
            Some(e) if w < 2 => Err(e),
            _ => Err(Error::RepeatedZero { near: center, winding: w }),
        }
    }
}

/// All zeros of `f` inside the rectangle `re × im`. When `expected` is given
/// the argument-principle count must match it.
pub fn find_zeros_in_rect(
    f: &dyn Fn(Complex64) -> Complex64,
    re: (f64, f64),
    im: (f64, f64),
    expected: Option<usize>,
) -> Result<ZeroSet> {
    let contour = Contour::rectangle(re, im);
    let count = count_zeros(f, &contour, 512)?;
    if count < 0 {
        return Err(Error::PolesInside { winding: count });
    }
    if let Some(e) = expected {
        if count as usize != e {
            return Err(Error::ZeroCountMismatch {
                found: count as usize,
                expected: e,
            });
        }
    }
    let scale = (re.1 - re.0).max(im.1 - im.0);
    let mut search = Search {
        f,
        min_cell: 1e-7 * scale.max(1.0),
        found: Vec::new(),
    };
    search.cell(re, im, count)?;
    let mut found = search.found;
    found.sort_by(|a, b| a.0.re.total_cmp(&b.0.re).then(a.0.im.total_cmp(&b.0.im)));
    if found.len() != count as usize {
        return Err(Error::ZeroCountMismatch {
            found: found.len(),
            expected: count as usize,
        });
    }
    let typical = found.iter().map(|z| z.1).fold(0.0, f64::max);
    Ok(ZeroSet {
        multiplicity_flags: found.iter().map(|z| z.1 < 1e-6 * typical.max(1.0)).collect(),
        zeros: found.into_iter().map(|z| z.0).collect(),
        contour,
        count,
    })
}

/// Exactly `expected_count` zeros with `Re(s) > 0` inside
/// `[ε, bound] × [−bound, bound]`.
///
/// Rectangles of half-width 10, 100, ... up to `search_bound` are tried in
/// turn and the first one holding all the zeros wins. A wide rectangle
/// samples its edges coarsely and can miss a winding close to the
/// imaginary axis, so the small ones go first.
pub fn find_zeros_right_halfplane(
    f: &dyn Fn(Complex64) -> Complex64,
    expected_count: usize,
    search_bound: f64,
) -> Result<ZeroSet> {
    let mut bound = search_bound.min(10.0);
    while bound < search_bound {
        let rect = Contour::rectangle((HALF_PLANE_INSET, bound), (-bound, bound));
        if matches!(count_zeros(f, &rect, 512), Ok(k) if k == expected_count as i64) {
            break;
        }
        bound = (10.0 * bound).min(search_bound);
    }
    find_zeros_in_rect(f, (HALF_PLANE_INSET, bound), (-bound, bound), Some(expected_count))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn single_zero_in_circle() {
        let f = |s: Complex64| s - 1.0;
        assert_eq!(count_zeros(&f, &Contour::circle(c(0.0, 0.0), 2.0), 64).unwrap(), 1);
    }

    #[test]
    fn grazing_a_pole_between_samples() {
        // Triple pole 1e-3 left of the rectangle, level with the midpoint of
        // its left edge. Coarse samples straddle it symmetrically.
        let f = |s: Complex64| (s - 0.8 + 0.8 * (4.0 / (4.0 + s)).powi(3)) / s;
        for b in [5.0, 8.0, 12.0, 18.0] {
            let near_pole = Contour::rectangle((-(4.0 - 1e-3), -3.0), (-b, b));
            assert_eq!(count_zeros(&f, &near_pole, 512).unwrap(), 0, "b = {b}");
            let strip = Contour::rectangle((-(4.0 - 1e-6), -1e-9), (-b, b));
            assert_eq!(count_zeros(&f, &strip, 512).unwrap(), 1, "b = {b}");
        }
    }

    #[test]
    fn conjugate_pair_in_rectangle() {
        let f = |s: Complex64| s * s + 1.0;
        let rect = Contour::rectangle((-0.5, 0.5), (-2.0, 2.0));
        assert_eq!(count_zeros(&f, &rect, 64).unwrap(), 2);
    }

    #[test]
    fn homotopy_start_has_n_zeros() {
        // det(sΛ⁻¹ − I) for Λ = diag(2, 3): zeros at 2 and 3.
        let f = |s: Complex64| (s / 2.0 - 1.0) * (s / 3.0 - 1.0);
        let circle = Contour::circle(c(3.0, 0.0), 3.5);
        assert_eq!(count_zeros(&f, &circle, 64).unwrap(), 2);
    }

    #[test]
    fn poles_count_negative() {
        let f = |s: Complex64| 1.0 / (s - 0.5);
        assert_eq!(count_zeros(&f, &Contour::circle(c(0.0, 0.0), 1.0), 64).unwrap(), -1);
    }

    #[test]
    fn zero_on_contour_is_an_error() {
        let f = |s: Complex64| s - 2.0;
        let res = count_zeros(&f, &Contour::circle(c(0.0, 0.0), 2.0), 64);
        assert!(matches!(res, Err(Error::NearZeroOnContour { .. })));
    }

    #[test]
    fn linear_zero_found() {
        let f = |s: Complex64| s - 3.0;
        let set = find_zeros_right_halfplane(&f, 1, 10.0).unwrap();
        assert_eq!(set.len(), 1);
        assert!((set.zeros[0] - c(3.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn quadratic_positive_root() {
        // s² + 8s − 10: one root at (−8 + √104)/2.
        let f = |s: Complex64| s * s + 8.0 * s - 10.0;
        let set = find_zeros_right_halfplane(&f, 1, 110.0).unwrap();
        let expected = (-8.0 + 104f64.sqrt()) / 2.0;
        assert!((set.zeros[0] - c(expected, 0.0)).norm() < 1e-12);
        assert_eq!(set.count, 1);
    }

    #[test]
    fn several_zeros_and_mismatch() {
        let roots = [c(1.0, 2.0), c(1.0, -2.0), c(4.0, 0.0), c(-1.0, 0.0)];
        let f = move |s: Complex64| roots.iter().fold(c(1.0, 0.0), |acc, r| acc * (s - r));
        let set = find_zeros_right_halfplane(&f, 3, 20.0).unwrap();
        assert_eq!(set.len(), 3);
        for r in &roots[..3] {
            assert!(set.zeros.iter().any(|z| (z - r).norm() < 1e-10));
        }
        assert!(matches!(
            find_zeros_right_halfplane(&f, 2, 20.0),
            Err(Error::ZeroCountMismatch { found: 3, expected: 2 })
        ));
    }

    #[test]
    fn double_zero_is_rejected() {
        let f = |s: Complex64| (s - 2.0) * (s - 2.0);
        assert!(matches!(
            find_zeros_right_halfplane(&f, 2, 10.0),
            Err(Error::RepeatedZero { .. }) | Err(Error::Refinement { .. })
        ));
    }

    #[test]
    fn found_zeros_are_certified() {
        let f = |s: Complex64| (s * s - 3.0 * s + 5.0) * (s - 0.25) * (s.exp() - 4.0);
        let set = find_zeros_in_rect(&f, (0.1, 6.0), (-4.0, 4.0), None).unwrap();
        assert_eq!(set.count as usize, set.len());
        let recount = count_zeros(&f, &set.contour, 64).unwrap();
        assert_eq!(recount as usize, set.len());
        for z in &set.zeros {
            let d = numerical_derivative(&f, *z).norm();
            assert!(f(*z).norm() < 1e-9 * (1.0 + d));
        }
    }
}
