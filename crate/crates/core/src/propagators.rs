//! Time evolution of the lifted system.
//!
//! After a transform in p with basis e^{iξ(p+πL)}, the lifted equation
//! dw/dt = −H ∂_p w becomes dŵ_k/dt = iξ_k S ŵ_k with S = −H. For the heat
//! problem S is −∂_xx (symbol μ²); for ∂_t v = i∂_x v it is the symbol μ.
//! Evolving from T back to t < T therefore multiplies by e^{iξλ(t−T)}.

use crate::error::{Error, Result};
use crate::exec;
use crate::grids::FrequencyLadder;
use crate::lift_recover::{WarpedField, XLayout};
use crate::transforms::{dft, dft_axis, idft_axis, Axis};
use num_complex::Complex64;

/// Treatment of the unpaired p-mode at ξ = −N/(2L).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum NyquistPolicy {
    /// Evolve it like any other mode. Exactly unitary.
    #[default]
    OneSided,
    /// Average the ±ξ propagators, as if the mode were split evenly between
    /// k = ±N/2. Not unitary on that row.
    Symmetric,
}

/// Per-column eigenvalues λ_l of S.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagonalSymbol {
    lambda: Vec<f64>,
}

impl DiagonalSymbol {
    pub fn new(lambda: Vec<f64>) -> Self {
        Self { lambda }
    }
    pub fn values(&self) -> &[f64] {
        &self.lambda
    }
    pub fn len(&self) -> usize {
        self.lambda.len()
    }
    pub fn is_empty(&self) -> bool {
        self.lambda.is_empty()
    }
    /// e^{iξλΔ}
    pub fn phase_factor(xi: f64, lambda: f64, delta: f64) -> Complex64 {
        Complex64::from_polar(1.0, xi * lambda * delta)
    }
}

pub fn make_heat_symbol(mu: &FrequencyLadder) -> DiagonalSymbol {
    DiagonalSymbol::new(mu.values().iter().map(|m| m * m).collect())
}

pub fn make_convection_symbol(mu: &FrequencyLadder) -> DiagonalSymbol {
    DiagonalSymbol::new(mu.values().to_vec())
}

/// Real symmetric tridiagonal matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct TridiagonalOperator {
    sub: Vec<f64>,
    diag: Vec<f64>,
    sup: Vec<f64>,
}

impl TridiagonalOperator {
    pub fn new(sub: Vec<f64>, diag: Vec<f64>, sup: Vec<f64>) -> Result<Self> {
        let n = diag.len();
        if n == 0 || sub.len() + 1 != n || sup.len() + 1 != n {
            return Err(Error::InvalidArgument(format!(
                "tridiagonal lengths {}/{}/{} are inconsistent",
                sub.len(),
                n,
                sup.len()
            )));
        }
        for (a, b) in sub.iter().zip(&sup) {
            if (a - b).abs() > 1e-12 * (a.abs() + b.abs()).max(1.0) {
                return Err(Error::InvalidArgument("tridiagonal operator must be symmetric".into()));
            }
        }
        Ok(Self { sub, diag, sup })
    }

    /// Second-difference matrix Δx⁻² tridiag(1, −2, 1) on n interior nodes.
    pub fn second_difference(n: usize, dx: f64) -> Result<Self> {
        let s = 1.0 / (dx * dx);
        Self::new(vec![s; n.saturating_sub(1)], vec![-2.0 * s; n], vec![s; n.saturating_sub(1)])
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }
    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }
    pub fn sub(&self) -> &[f64] {
        &self.sub
    }
    pub fn diag(&self) -> &[f64] {
        &self.diag
    }
    pub fn sup(&self) -> &[f64] {
        &self.sup
    }

    pub fn negated(&self) -> Self {
        let neg = |v: &[f64]| v.iter().map(|x| -x).collect();
        Self { sub: neg(&self.sub), diag: neg(&self.diag), sup: neg(&self.sup) }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut v = self.diag[i] * x[i];
                if i > 0 {
                    v += self.sub[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    v += self.sup[i] * x[i + 1];
                }
                v
            })
            .collect()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.len();
        let mut a = vec![vec![0.0; n]; n];
        for i in 0..n {
            a[i][i] = self.diag[i];
            if i + 1 < n {
                a[i][i + 1] = self.sup[i];
                a[i + 1][i] = self.sub[i];
            }
        }
        a
    }
}

/// Factorization of I − iα S for the Cayley step, reused across steps.
struct CayleyStep {
    alpha: f64,
    // modified super-diagonal and inverse pivots of the Thomas sweep
    cprime: Vec<Complex64>,
    inv_pivot: Vec<Complex64>,
}

impl CayleyStep {
    fn new(op: &TridiagonalOperator, alpha: f64) -> Self {
        let n = op.len();
        let i = Complex64::i();
        let mut cprime = vec![Complex64::default(); n];
        let mut inv_pivot = vec![Complex64::default(); n];
        let mut prev_c = Complex64::default();
        for k in 0..n {
            let d = Complex64::new(1.0, 0.0) - i * alpha * op.diag[k];
            let lower = if k > 0 { -i * alpha * op.sub[k - 1] } else { Complex64::default() };
            let piv = d - lower * prev_c;
            debug_assert!(piv.norm() > 0.0, "zero pivot in Cayley solve");
            inv_pivot[k] = 1.0 / piv;
            if k + 1 < n {
                cprime[k] = (-i * alpha * op.sup[k]) * inv_pivot[k];
            }
            prev_c = cprime[k];
        }
        Self { alpha, cprime, inv_pivot }
    }

    /// y ← (I − iαS)⁻¹(I + iαS) y
    #[allow(clippy::needless_range_loop)]
    fn apply(&self, op: &TridiagonalOperator, y: &mut [Complex64], rhs: &mut [Complex64]) {
        let n = y.len();
        let ia = Complex64::new(0.0, self.alpha);
        for k in 0..n {
            let mut s = op.diag[k] * y[k];
            if k > 0 {
                s += op.sub[k - 1] * y[k - 1];
            }
            if k + 1 < n {
                s += op.sup[k] * y[k + 1];
            }
            rhs[k] = y[k] + ia * s;
        }
        // forward sweep
        let mut prev = Complex64::default();
        for k in 0..n {
            let lower = if k > 0 { -ia * op.sub[k - 1] } else { Complex64::default() };
            let v = (rhs[k] - lower * prev) * self.inv_pivot[k];
            rhs[k] = v;
            prev = v;
        }
        // back substitution
        y[n - 1] = rhs[n - 1];
        for k in (0..n - 1).rev() {
            y[k] = rhs[k] - self.cprime[k] * y[k + 1];
        }
    }
}

/// Full steps and trailing short step (signed) covering `delta`.
pub fn step_schedule(delta: f64, dt: f64) -> Result<(usize, f64, Option<f64>)> {
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
    }
    let sign = delta.signum();
    let span = delta.abs();
    let ratio = span / dt;
    let mut n = ratio.floor() as usize;
    if (ratio - ratio.round()).abs() < 1e-9 {
        n = ratio.round() as usize;
    }
    let rest = span - n as f64 * dt;
    let last = if rest > 1e-12 * span.max(dt) { Some(sign * rest) } else { None };
    Ok((n, sign * dt, last))
}

fn cayley_row(op: &TridiagonalOperator, xi: f64, row: &mut [Complex64], n: usize, h: f64, last: Option<f64>) {
    let mut rhs = vec![Complex64::default(); row.len()];
    if n > 0 && xi != 0.0 {
        let step = CayleyStep::new(op, 0.5 * h * xi);
        for _ in 0..n {
            step.apply(op, row, &mut rhs);
        }
    }
    if let Some(hl) = last {
        if xi != 0.0 {
            CayleyStep::new(op, 0.5 * hl * xi).apply(op, row, &mut rhs);
        }
    }
}

/// Relative change of Σ|ŵ|² over rows that are evolved unitarily.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvolveReport {
    pub norm_before: f64,
    pub norm_after: f64,
}

impl EvolveReport {
    pub fn drift(&self) -> f64 {
        if self.norm_before == 0.0 {
            return self.norm_after;
        }
        (self.norm_after - self.norm_before).abs() / self.norm_before
    }

    /// Error if the drift exceeds `limit`.
    pub fn guard(&self, limit: f64) -> Result<()> {
        let drift = self.drift();
        if drift > limit || !drift.is_finite() {
            return Err(Error::UnitarityDrift { drift, limit });
        }
        Ok(())
    }
}

fn guarded_norm(data: &[Complex64], cols: usize, nyquist: NyquistPolicy) -> f64 {
    let skip = if nyquist == NyquistPolicy::Symmetric { cols } else { 0 };
    data[skip..].iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

fn p_xi(field: &WarpedField) -> Vec<f64> {
    field.p_grid().frequencies().values().to_vec()
}

fn require_periodic(field: &WarpedField, symbol: &DiagonalSymbol) -> Result<()> {
    if !matches!(field.x_layout(), XLayout::Periodic(_)) {
        return Err(Error::InvalidArgument("exact spectral evolution needs a periodic x layout".into()));
    }
    if symbol.len() != field.cols() {
        return Err(Error::ShapeMismatch { expected: field.cols(), found: symbol.len() });
    }
    Ok(())
}

/// Applies `mult(xi, lambda)` to every coefficient of a fully transformed
/// field; the Nyquist row uses the average over ±ξ when requested.
fn diagonal_multiply<F>(field: &mut WarpedField, symbol: &DiagonalSymbol, nyquist: NyquistPolicy, mult: F) -> Result<EvolveReport>
where
    F: Fn(f64, f64) -> Complex64 + Sync + Send,
{
    let (rows, cols) = (field.rows(), field.cols());
    let xi = p_xi(field);
    let data = field.values_mut();
    dft_axis(data, rows, cols, Axis::P)?;
    dft_axis(data, rows, cols, Axis::X)?;
    let before = guarded_norm(data, cols, nyquist);
    let lam = symbol.values();
    exec::for_each_row(data, cols, |k, row| {
        let symmetric = k == 0 && nyquist == NyquistPolicy::Symmetric;
        for (v, &l) in row.iter_mut().zip(lam) {
            let m = if symmetric { 0.5 * (mult(xi[k], l) + mult(-xi[k], l)) } else { mult(xi[k], l) };
            *v *= m;
        }
    });
    let after = guarded_norm(data, cols, nyquist);
    idft_axis(data, rows, cols, Axis::X)?;
    idft_axis(data, rows, cols, Axis::P)?;
    Ok(EvolveReport { norm_before: before, norm_after: after })
}

/// Exact evolution ŵ_{k,l}(t) = e^{iξ_kλ_l(t − t_now)}ŵ_{k,l}(t_now).
pub fn evolve_exact(field: &mut WarpedField, symbol: &DiagonalSymbol, t_target: f64, nyquist: NyquistPolicy) -> Result<EvolveReport> {
    require_periodic(field, symbol)?;
    let delta = t_target - field.time();
    let rep = diagonal_multiply(field, symbol, nyquist, |xi, l| DiagonalSymbol::phase_factor(xi, l, delta))?;
    field.set_time(t_target);
    Ok(rep)
}

/// Crank–Nicolson for a diagonal symbol: the Cayley factor of each step is
/// applied in closed form, e^{2i·atan(θh/2)} per step.
pub fn evolve_crank_nicolson_diagonal(
    field: &mut WarpedField,
    symbol: &DiagonalSymbol,
    t_target: f64,
    dt: f64,
    nyquist: NyquistPolicy,
) -> Result<EvolveReport> {
    require_periodic(field, symbol)?;
    let (n, h, last) = step_schedule(t_target - field.time(), dt)?;
    let rep = diagonal_multiply(field, symbol, nyquist, |xi, l| {
        let theta = xi * l;
        let mut phase = n as f64 * 2.0 * (0.5 * theta * h).atan();
        if let Some(hl) = last {
            phase += 2.0 * (0.5 * theta * hl).atan();
        }
        Complex64::from_polar(1.0, phase)
    })?;
    field.set_time(t_target);
    Ok(rep)
}

/// Crank–Nicolson in time after a p-transform only; each p-mode row is
/// advanced by (I − iξhS/2)⁻¹(I + iξhS/2), S = `op` acting along x.
pub fn evolve_crank_nicolson(
    field: &mut WarpedField,
    op: &TridiagonalOperator,
    t_target: f64,
    dt: f64,
    nyquist: NyquistPolicy,
) -> Result<EvolveReport> {
    if op.len() != field.cols() {
        return Err(Error::ShapeMismatch { expected: field.cols(), found: op.len() });
    }
    let (n, h, last) = step_schedule(t_target - field.time(), dt)?;
    let (rows, cols) = (field.rows(), field.cols());
    let xi = p_xi(field);
    let data = field.values_mut();
    dft_axis(data, rows, cols, Axis::P)?;
    let before = guarded_norm(data, cols, nyquist);
    exec::for_each_row(data, cols, |k, row| {
        if k == 0 && nyquist == NyquistPolicy::Symmetric {
            let mut other = row.to_vec();
            cayley_row(op, xi[k], row, n, h, last);
            cayley_row(op, -xi[k], &mut other, n, h, last);
            for (a, b) in row.iter_mut().zip(&other) {
                *a = 0.5 * (*a + b);
            }
        } else {
            cayley_row(op, xi[k], row, n, h, last);
        }
    });
    let after = guarded_norm(data, cols, nyquist);
    idft_axis(data, rows, cols, Axis::P)?;
    field.set_time(t_target);
    Ok(EvolveReport { norm_before: before, norm_after: after })
}

/// Time quadrature for the inhomogeneous term.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SourceRule {
    /// ŵ⁺ = e^zŵ + (h/2)(e^zF(t) + F(t+h)).
    Trapezoid,
    /// ŵ⁺ = e^zŵ + h∫₀¹e^{z(1−τ)}P(τ)dτ with P the quadratic through
    /// F(t), F(t+h/2), F(t+h). Exact for the homogeneous part.
    #[default]
    Exponential,
}

// φ_1..φ_3 of z = iθ, with a Taylor series near zero
fn phi123(z: Complex64) -> (Complex64, Complex64, Complex64) {
    if z.norm() < 0.5 {
        let mut out = [Complex64::default(); 3];
        for (k, o) in out.iter_mut().enumerate() {
            // φ_{k+1}(z) = Σ_j z^j/(j+k+1)!
            let mut term = Complex64::new(1.0, 0.0);
            for m in 1..=(k + 1) {
                term /= m as f64;
            }
            let mut sum = Complex64::default();
            for j in 0..24 {
                sum += term;
                term = term * z / (j + k + 2) as f64;
            }
            *o = sum;
        }
        (out[0], out[1], out[2])
    } else {
        let ez = z.exp();
        let one = Complex64::new(1.0, 0.0);
        let p1 = (ez - one) / z;
        let p2 = (ez - one - z) / (z * z);
        let p3 = (ez - one - z - 0.5 * z * z) / (z * z * z);
        (p1, p2, p3)
    }
}

struct SourceCoefficients {
    ez: Vec<Complex64>,
    p1: Vec<Complex64>,
    p2: Vec<Complex64>,
    p3: Vec<Complex64>,
}

fn source_coefficients(xi: &[f64], lam: &[f64], h: f64) -> SourceCoefficients {
    let cols = lam.len();
    let rows = xi.len();
    let mut c = SourceCoefficients {
        ez: Vec::with_capacity(rows * cols),
        p1: Vec::with_capacity(rows * cols),
        p2: Vec::with_capacity(rows * cols),
        p3: Vec::with_capacity(rows * cols),
    };
    for &x in xi {
        for &l in lam {
            let z = Complex64::new(0.0, x * l * h);
            let (a, b, d) = phi123(z);
            c.ez.push(z.exp());
            c.p1.push(a);
            c.p2.push(b);
            c.p3.push(d);
        }
    }
    c
}

/// Evolution with a source: dŵ/dt = iξλŵ + F̂ where the lifted source is
/// f(t, x)·g(p). `g` holds the profile sampled on the p nodes.
#[allow(clippy::too_many_arguments)]
pub fn evolve_with_source<F>(
    field: &mut WarpedField,
    symbol: &DiagonalSymbol,
    g: &[f64],
    source: F,
    t_target: f64,
    dt: f64,
    rule: SourceRule,
    nyquist: NyquistPolicy,
) -> Result<()>
where
    F: Fn(f64, f64) -> Complex64 + Sync,
{
    require_periodic(field, symbol)?;
    if g.len() != field.rows() {
        return Err(Error::ShapeMismatch { expected: field.rows(), found: g.len() });
    }
    let (rows, cols) = (field.rows(), field.cols());
    let xs = field.x_layout().nodes();
    let t0 = field.time();
    let (n, h, last) = step_schedule(t_target - t0, dt)?;
    let mut xi = p_xi(field);
    let lam = symbol.values().to_vec();
    let g_hat = dft(&g.iter().map(|&v| Complex64::new(v, 0.0)).collect::<Vec<_>>())?;
    let f_hat = |t: f64| -> Result<Vec<Complex64>> { dft(&xs.iter().map(|&x| source(t, x)).collect::<Vec<_>>()) };

    let symmetric = nyquist == NyquistPolicy::Symmetric;
    // the mirrored Nyquist row is carried as an extra row
    let mut g_rows = g_hat.clone();
    if symmetric {
        xi.push(-xi[0]);
        g_rows.push(g_hat[0]);
    }
    let total_rows = xi.len();
    let data = field.values_mut();
    dft_axis(data, rows, cols, Axis::P)?;
    dft_axis(data, rows, cols, Axis::X)?;
    let mut state = data.to_vec();
    if symmetric {
        state.extend_from_slice(&data[..cols]);
    }

    let mut steps: Vec<(f64, usize)> = Vec::new();
    if n > 0 {
        steps.push((h, n));
    }
    if let Some(hl) = last {
        steps.push((hl, 1));
    }
    let mut t = t0;
    for (hs, count) in steps {
        let coef = source_coefficients(&xi, &lam, hs);
        for _ in 0..count {
            let f0 = f_hat(t)?;
            let f1 = f_hat(t + hs)?;
            let fm = if rule == SourceRule::Exponential { f_hat(t + 0.5 * hs)? } else { Vec::new() };
            exec::for_each_row(&mut state, cols, |k, row| {
                let gk = g_rows[k];
                let base = k * cols;
                for (l, w) in row.iter_mut().enumerate() {
                    let idx = base + l;
                    let ez = coef.ez[idx];
                    match rule {
                        SourceRule::Trapezoid => {
                            *w = ez * *w + 0.5 * hs * gk * (ez * f0[l] + f1[l]);
                        }
                        SourceRule::Exponential => {
                            let a = -3.0 * f0[l] + 4.0 * fm[l] - f1[l];
                            let b = 2.0 * f0[l] - 4.0 * fm[l] + 2.0 * f1[l];
                            let q = coef.p1[idx] * f0[l] + coef.p2[idx] * a + 2.0 * coef.p3[idx] * b;
                            *w = ez * *w + hs * gk * q;
                        }
                    }
                }
            });
            t += hs;
        }
    }
    debug_assert_eq!(state.len(), total_rows * cols);
    let data = field.values_mut();
    data.copy_from_slice(&state[..rows * cols]);
    if symmetric {
        let mirror = &state[rows * cols..];
        for (a, b) in data[..cols].iter_mut().zip(mirror) {
            *a = 0.5 * (*a + b);
        }
    }
    idft_axis(data, rows, cols, Axis::X)?;
    idft_axis(data, rows, cols, Axis::P)?;
    field.set_time(t_target);
    Ok(())
}
