//! Clamped B-spline curves: Cox–de Boor basis, evaluation, a smoothing fit
//! for polylines and arc-length resampling.
//!
//! The smoothing fit minimises squared residuals at chord-length parameters
//! plus `λ·Σ‖P[i-1] − 2P[i] + P[i+1]‖²` over the interior control points, with
//! the end control points pinned to the data endpoints. `λ` is chosen as the
//! largest value whose residual stays within the smoothing budget `s`, so
//! `s = 0` interpolates and growing `s` pulls the curve toward the chord.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point, Polyline};

/// Non-decreasing knot sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct KnotVector(Vec<f64>);

impl KnotVector {
    pub fn new(knots: Vec<f64>) -> Result<Self> {
        if knots.iter().any(|k| !k.is_finite()) {
            return Err(Error::InvalidInput("knot vector has non-finite entries".into()));
        }
        if knots.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidInput("knot vector must be non-decreasing".into()));
        }
        if knots.len() < 2 {
            return Err(Error::InvalidInput("knot vector needs at least two knots".into()));
        }
        Ok(KnotVector(knots))
    }

    /// Clamped vector over [0, 1] with uniformly spaced interior knots.
    pub fn clamped_uniform(degree: usize, n_ctrl: usize) -> Result<Self> {
        if n_ctrl < degree + 1 {
            return Err(Error::InvalidInput(format!(
                "{n_ctrl} control points cannot carry degree {degree}"
            )));
        }
        let interior = n_ctrl - degree - 1;
        let mut k = vec![0.0; degree + 1];
        k.extend((1..=interior).map(|j| j as f64 / (interior + 1) as f64));
        k.extend(std::iter::repeat_n(1.0, degree + 1));
        KnotVector::new(k)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn first(&self) -> f64 {
        self.0[0]
    }

    pub fn last(&self) -> f64 {
        self.0[self.0.len() - 1]
    }

    pub fn is_clamped(&self, degree: usize) -> bool {
        let k = &self.0;
        k.len() >= 2 * (degree + 1)
            && k[..=degree].iter().all(|&x| x == k[0])
            && k[k.len() - degree - 1..].iter().all(|&x| x == self.last())
    }

    /// Index `i` of the span with `U[i] <= u < U[i+1]`; `u` equal to the last
    /// knot maps to the last non-empty span.
    fn span(&self, u: f64) -> Option<usize> {
        let k = &self.0;
        if u < self.first() || u > self.last() {
            return None;
        }
        if u == self.last() {
            return (0..k.len() - 1).rev().find(|&i| k[i] < k[i + 1]);
        }
        // last i with k[i] <= u
        let i = k.partition_point(|&x| x <= u);
        Some(i - 1)
    }

    fn indicator(&self, i: usize, u: f64) -> f64 {
        let k = &self.0;
        if k[i] <= u && u < k[i + 1] {
            return 1.0;
        }
        // right-end closure: the last non-empty span includes b
        let b = self.last();
        if u == b && k[i] < b && k[i + 1] == b {
            return 1.0;
        }
        0.0
    }
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

fn basis_unchecked(i: usize, p: usize, u: f64, knots: &KnotVector) -> f64 {
    if p == 0 {
        return knots.indicator(i, u);
    }
    let k = knots.as_slice();
    let left = ratio(u - k[i], k[i + p] - k[i]);
    let right = ratio(k[i + p + 1] - u, k[i + p + 1] - k[i + 1]);
    let mut acc = 0.0;
    if left != 0.0 {
        acc += left * basis_unchecked(i, p - 1, u, knots);
    }
    if right != 0.0 {
        acc += right * basis_unchecked(i + 1, p - 1, u, knots);
    }
    acc
}

/// Cox–de Boor value of `N[i,p](u)`.
pub fn basis(i: usize, p: usize, u: f64, knots: &KnotVector) -> Result<f64> {
    if i + p + 1 >= knots.len() {
        return Err(Error::InvalidInput(format!(
            "basis index {i} with degree {p} exceeds knot vector of length {}",
            knots.len()
        )));
    }
    Ok(basis_unchecked(i, p, u, knots))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BSplineCurve {
    degree: usize,
    knots: KnotVector,
    control_points: Vec<Point>,
}

impl BSplineCurve {
    pub fn new(degree: usize, knots: KnotVector, control_points: Vec<Point>) -> Result<Self> {
        if degree == 0 {
            return Err(Error::InvalidInput("degree must be positive".into()));
        }
        if knots.len() != control_points.len() + degree + 1 {
            return Err(Error::InvalidInput(format!(
                "expected {} knots for {} control points of degree {degree}, got {}",
                control_points.len() + degree + 1,
                control_points.len(),
                knots.len()
            )));
        }
        if !knots.is_clamped(degree) {
            return Err(Error::InvalidInput("knot vector must be clamped".into()));
        }
        Ok(BSplineCurve {
            degree,
            knots,
            control_points,
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn knots(&self) -> &KnotVector {
        &self.knots
    }

    pub fn control_points(&self) -> &[Point] {
        &self.control_points
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.knots.first(), self.knots.last())
    }

    /// `C(u) = Σ N[i,p](u)·P[i]`, summed over the `p + 1` non-zero terms.
    pub fn evaluate(&self, u: f64) -> Result<Point> {
        let span = self
            .knots
            .span(u)
            .ok_or_else(|| Error::Domain(format!("parameter {u} outside {:?}", self.domain())))?;
        let p = self.degree;
        let lo = span.saturating_sub(p);
        let hi = span.min(self.control_points.len() - 1);
        let mut out = Point::default();
        for i in lo..=hi {
            let n = basis_unchecked(i, p, u, &self.knots);
            out = out + self.control_points[i] * n;
        }
        Ok(out)
    }

    fn eval_clamped(&self, u: f64) -> Point {
        let (a, b) = self.domain();
        self.evaluate(u.clamp(a, b)).expect("clamped parameter is in domain")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothingParams {
    pub degree: usize,
    /// Upper bound on the sum of squared residuals.
    pub s: f64,
    pub max_spacing: f64,
}

impl Default for SmoothingParams {
    fn default() -> Self {
        SmoothingParams {
            degree: 3,
            s: 0.0,
            max_spacing: 1.0,
        }
    }
}

/// Normalised cumulative chord length of `points` over [0, 1].
pub fn chord_parameters(points: &[Point]) -> Vec<f64> {
    let mut acc = Vec::with_capacity(points.len());
    let mut total = 0.0;
    acc.push(0.0);
    for w in points.windows(2) {
        total += w[0].dist(w[1]);
        acc.push(total);
    }
    if total > 0.0 {
        acc.iter_mut().for_each(|t| *t /= total);
    }
    acc
}

/// Knots by parameter averaging, which keeps the interpolation system non-singular.
fn averaged_knots(params: &[f64], degree: usize) -> Result<KnotVector> {
    let n = params.len() - 1;
    let mut k = vec![0.0; degree + 1];
    for j in 1..=n - degree {
        let s: f64 = params[j..j + degree].iter().sum();
        k.push(s / degree as f64);
    }
    k.extend(std::iter::repeat_n(1.0, degree + 1));
    KnotVector::new(k)
}

struct FitSystem {
    degree: usize,
    knots: KnotVector,
    params: Vec<f64>,
    data: Vec<Point>,
    /// Basis matrix restricted to the interior control points.
    a_int: DMatrix<f64>,
    /// Right-hand sides with the pinned end contributions removed.
    rhs_x: DVector<f64>,
    rhs_y: DVector<f64>,
    /// Second-difference operator on interior control points, and the pinned part.
    d_int: DMatrix<f64>,
    d_end_x: DVector<f64>,
    d_end_y: DVector<f64>,
}

impl FitSystem {
    fn new(data: &[Point], degree: usize) -> Result<Self> {
        let params = chord_parameters(data);
        let knots = averaged_knots(&params, degree)?;
        let n_ctrl = data.len();
        let n_int = n_ctrl - 2;
        let first = data[0];
        let last = data[n_ctrl - 1];

        let mut a_int = DMatrix::zeros(data.len(), n_int);
        let mut rhs_x = DVector::zeros(data.len());
        let mut rhs_y = DVector::zeros(data.len());
        for (row, (&u, q)) in params.iter().zip(data).enumerate() {
            let n0 = basis_unchecked(0, degree, u, &knots);
            let nl = basis_unchecked(n_ctrl - 1, degree, u, &knots);
            rhs_x[row] = q.x - n0 * first.x - nl * last.x;
            rhs_y[row] = q.y - n0 * first.y - nl * last.y;
            for j in 0..n_int {
                a_int[(row, j)] = basis_unchecked(j + 1, degree, u, &knots);
            }
        }

        // rows: P[i-1] - 2P[i] + P[i+1] for i = 1..n_ctrl-2
        let rows = n_ctrl.saturating_sub(2);
        let mut d_int = DMatrix::zeros(rows, n_int);
        let mut d_end_x = DVector::zeros(rows);
        let mut d_end_y = DVector::zeros(rows);
        for r in 0..rows {
            let i = r + 1;
            for (col, w) in [(i - 1, 1.0), (i, -2.0), (i + 1, 1.0)] {
                if col == 0 {
                    d_end_x[r] += w * first.x;
                    d_end_y[r] += w * first.y;
                } else if col == n_ctrl - 1 {
                    d_end_x[r] += w * last.x;
                    d_end_y[r] += w * last.y;
                } else {
                    d_int[(r, col - 1)] = w;
                }
            }
        }

        Ok(FitSystem {
            degree,
            knots,
            params,
            data: data.to_vec(),
            a_int,
            rhs_x,
            rhs_y,
            d_int,
            d_end_x,
            d_end_y,
        })
    }

    fn solve(&self, lambda: f64) -> Result<BSplineCurve> {
        let at = self.a_int.transpose();
        let dt = self.d_int.transpose();
        let lhs = &at * &self.a_int + (&dt * &self.d_int) * lambda;
        let bx = &at * &self.rhs_x - (&dt * &self.d_end_x) * lambda;
        let by = &at * &self.rhs_y - (&dt * &self.d_end_y) * lambda;
        let (x, y) = match lhs.clone().cholesky() {
            Some(ch) => (ch.solve(&bx), ch.solve(&by)),
            None => {
                let lu = lhs.lu();
                let x = lu.solve(&bx);
                let y = lu.solve(&by);
                match (x, y) {
                    (Some(x), Some(y)) => (x, y),
                    _ => return Err(Error::InvalidInput("singular smoothing system".into())),
                }
            }
        };
        let n = self.data.len();
        let mut ctrl = Vec::with_capacity(n);
        ctrl.push(self.data[0]);
        ctrl.extend((0..n - 2).map(|j| Point::new(x[j], y[j])));
        ctrl.push(self.data[n - 1]);
        BSplineCurve::new(self.degree, self.knots.clone(), ctrl)
    }

    fn residual(&self, curve: &BSplineCurve) -> f64 {
        residual_sum(curve, &self.params, &self.data)
    }
}

/// Sum of squared distances between the curve at `params` and `data`.
pub fn residual_sum(curve: &BSplineCurve, params: &[f64], data: &[Point]) -> f64 {
    params
        .iter()
        .zip(data)
        .map(|(&u, q)| {
            let c = curve.eval_clamped(u);
            (c - *q).dot(c - *q)
        })
        .sum()
}

/// Fits a clamped B-spline to `points` with squared residual at most `params.s`.
pub fn fit_smoothing(points: &Polyline, params: &SmoothingParams) -> Result<BSplineCurve> {
    if points.len() < 2 {
        return Err(Error::InvalidInput("smoothing needs at least two points".into()));
    }
    if params.degree == 0 || !(params.s >= 0.0) {
        return Err(Error::InvalidInput(format!("bad smoothing parameters {params:?}")));
    }
    let data = points.points();
    let degree = params.degree.min(data.len() - 1);
    if data.len() == 2 {
        let knots = KnotVector::new(vec![0.0, 0.0, 1.0, 1.0])?;
        return BSplineCurve::new(1, knots, data.to_vec());
    }

    let sys = FitSystem::new(data, degree)?;
    let exact = sys.solve(0.0)?;
    if params.s == 0.0 {
        return Ok(exact);
    }

    const LOG_LO: f64 = -8.0;
    const LOG_HI: f64 = 10.0;
    let stiff = sys.solve(10f64.powf(LOG_HI))?;
    if sys.residual(&stiff) <= params.s {
        return Ok(stiff);
    }
    let mut best = exact;
    let (mut lo, mut hi) = (LOG_LO, LOG_HI);
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        let c = sys.solve(10f64.powf(mid))?;
        if sys.residual(&c) <= params.s {
            best = c;
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(best)
}

/// Points on `curve`, endpoints included, at most `max_spacing` apart.
pub fn resample_arclength(curve: &BSplineCurve, max_spacing: f64) -> Polyline {
    assert!(max_spacing > 0.0, "max_spacing must be positive");
    let (a, b) = curve.domain();
    let hull_len: f64 = curve
        .control_points()
        .windows(2)
        .map(|w| w[0].dist(w[1]))
        .sum();

    // dense uniform parameter samples at 10x the target count
    let target = (hull_len / max_spacing).ceil().max(1.0) as usize + 1;
    let dense_n = 10 * target;
    let us: Vec<f64> = (0..=dense_n)
        .map(|k| a + (b - a) * k as f64 / dense_n as f64)
        .collect();
    let pts: Vec<Point> = us.iter().map(|&u| curve.eval_clamped(u)).collect();
    let mut cum = vec![0.0; pts.len()];
    for k in 1..pts.len() {
        cum[k] = cum[k - 1] + pts[k - 1].dist(pts[k]);
    }
    let total = cum[cum.len() - 1];

    let m = (total / max_spacing).ceil().max(1.0) as usize;
    let mut params = Vec::with_capacity(m + 1);
    params.push(a);
    let mut k = 0;
    for j in 1..m {
        let s = total * j as f64 / m as f64;
        while k + 1 < cum.len() - 1 && cum[k + 1] < s {
            k += 1;
        }
        let seg = cum[k + 1] - cum[k];
        let t = if seg > 0.0 { (s - cum[k]) / seg } else { 0.0 };
        params.push(us[k] + (us[k + 1] - us[k]) * t);
    }
    params.push(b);

    // greedy subdivision until the spacing bound holds
    let mut out: Vec<(f64, Point)> = params.into_iter().map(|u| (u, curve.eval_clamped(u))).collect();
    loop {
        let mut refined = Vec::with_capacity(out.len());
        let mut changed = false;
        for w in out.windows(2) {
            refined.push(w[0]);
            if w[0].1.dist(w[1].1) > max_spacing {
                let mid = 0.5 * (w[0].0 + w[1].0);
                refined.push((mid, curve.eval_clamped(mid)));
                changed = true;
            }
        }
        refined.push(out[out.len() - 1]);
        out = refined;
        if !changed {
            break;
        }
    }
    Polyline::new(out.into_iter().map(|(_, p)| p)).expect("curve samples are finite")
}
