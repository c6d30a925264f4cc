//! Small, slow, independent reference computations. Nothing here is used by
//! the solver itself.

use nalgebra::DMatrix;
use num_complex::Complex64;
use std::f64::consts::PI;

/// Size cap for the dense oracles (N·M).
pub const MAX_DENSE: usize = 4096;

/// Centered transform by direct summation:
/// c_j = (1/n) Σ_i f_i e^{−2πi(j − n/2)i/n}.
pub fn naive_dft(f: &[Complex64]) -> Vec<Complex64> {
    let n = f.len();
    let h = (n / 2) as f64;
    (0..n)
        .map(|j| {
            let mu = j as f64 - h;
            let s: Complex64 = f
                .iter()
                .enumerate()
                .map(|(i, v)| v * Complex64::from_polar(1.0, -2.0 * PI * mu * i as f64 / n as f64))
                .sum();
            s / n as f64
        })
        .collect()
}

/// f_i = Σ_j c_j e^{2πi(j − n/2)i/n}.
pub fn naive_idft(c: &[Complex64]) -> Vec<Complex64> {
    let n = c.len();
    let h = (n / 2) as f64;
    (0..n)
        .map(|i| {
            c.iter()
                .enumerate()
                .map(|(j, v)| v * Complex64::from_polar(1.0, 2.0 * PI * (j as f64 - h) * i as f64 / n as f64))
                .sum()
        })
        .collect()
}

/// Closed-form solution u(t, x).
pub struct ExactSolution {
    pub name: &'static str,
    u: Box<dyn Fn(f64, f64) -> f64 + Send + Sync>,
}

impl ExactSolution {
    pub fn eval(&self, t: f64, x: f64) -> f64 {
        (self.u)(t, x)
    }

    /// Residual of ∂_t u − ∂_xx u by centered differences with step h.
    pub fn heat_residual(&self, t: f64, x: f64, h: f64) -> f64 {
        let ut = (self.eval(t + h, x) - self.eval(t - h, x)) / (2.0 * h);
        let uxx = (self.eval(t, x + h) - 2.0 * self.eval(t, x) + self.eval(t, x - h)) / (h * h);
        ut - uxx
    }
}

/// u = e^{−ω₀²t} sin(ω₀x).
pub fn exact_heat_mode(omega0: f64) -> ExactSolution {
    ExactSolution { name: "heat-mode", u: Box::new(move |t, x| (-omega0 * omega0 * t).exp() * (omega0 * x).sin()) }
}

/// u = e^{−x²/(1+4t)}/√(1+4t).
pub fn exact_heat_gaussian() -> ExactSolution {
    ExactSolution { name: "heat-gaussian", u: Box::new(|t, x| (-x * x / (1.0 + 4.0 * t)).exp() / (1.0 + 4.0 * t).sqrt()) }
}

/// v = cos(3π(x + t)), which solves ∂_t v = i∂_x v + f for the matching f.
pub fn exact_convection() -> ExactSolution {
    ExactSolution { name: "convection", u: Box::new(|t, x| (3.0 * PI * (x + t)).cos()) }
}

/// f = ∂_t v − i∂_x v for v = cos(3π(x + t)).
pub fn convection_source(t: f64, x: f64) -> Complex64 {
    let s = (3.0 * PI * (x + t)).sin();
    Complex64::new(-3.0 * PI * s, 3.0 * PI * s)
}

fn one_norm(a: &DMatrix<Complex64>) -> f64 {
    (0..a.ncols()).map(|j| a.column(j).iter().map(|v| v.norm()).sum::<f64>()).fold(0.0, f64::max)
}

/// Matrix exponential by scaling and squaring with a degree-18 Taylor
/// polynomial.
pub fn expm(a: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let n = a.nrows();
    let norm = one_norm(a);
    let s = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
    let scaled = a / Complex64::new(2f64.powi(s), 0.0);
    let mut term = DMatrix::<Complex64>::identity(n, n);
    let mut sum = term.clone();
    for k in 1..=18 {
        term = &term * &scaled / Complex64::new(k as f64, 0.0);
        sum += &term;
    }
    for _ in 0..s {
        sum = &sum * &sum;
    }
    sum
}

/// Dense x-space matrix of a Fourier multiplier: F⁻¹ diag(λ) F.
pub fn fourier_multiplier_matrix(lambda: &[f64]) -> DMatrix<Complex64> {
    let m = lambda.len();
    let mut out = DMatrix::<Complex64>::zeros(m, m);
    for col in 0..m {
        let mut e = vec![Complex64::default(); m];
        e[col] = Complex64::new(1.0, 0.0);
        let mut c = naive_dft(&e);
        for (v, l) in c.iter_mut().zip(lambda) {
            *v *= l;
        }
        let back = naive_idft(&c);
        for row in 0..m {
            out[(row, col)] = back[row];
        }
    }
    out
}

/// Real matrix promoted to complex entries.
pub fn complexify(s: &DMatrix<f64>) -> DMatrix<Complex64> {
    s.map(|v| Complex64::new(v, 0.0))
}

fn p_transform(w: &[Complex64], n: usize, m: usize, inverse: bool) -> Vec<Complex64> {
    let mut out = vec![Complex64::default(); n * m];
    for col in 0..m {
        let column: Vec<_> = (0..n).map(|r| w[r * m + col]).collect();
        let t = if inverse { naive_idft(&column) } else { naive_dft(&column) };
        for r in 0..n {
            out[r * m + col] = t[r];
        }
    }
    out
}

/// Evolves a lifted field (row-major N×M, rows = p nodes) by Δ under
/// dŵ_k/dt = iξ_k S ŵ_k with a dense matrix exponential per p-mode.
pub fn dense_expm_evolve(s: &DMatrix<Complex64>, xi: &[f64], w: &[Complex64], delta: f64) -> Result<Vec<Complex64>, String> {
    let n = xi.len();
    let m = s.nrows();
    if n * m > MAX_DENSE {
        return Err(format!("oracle size {}x{} exceeds cap", n, m));
    }
    if w.len() != n * m {
        return Err("shape mismatch".into());
    }
    let c = p_transform(w, n, m, false);
    let mut out = vec![Complex64::default(); n * m];
    for k in 0..n {
        let e = expm(&(s * Complex64::new(0.0, xi[k] * delta)));
        for i in 0..m {
            out[k * m + i] = (0..m).map(|j| e[(i, j)] * c[k * m + j]).sum();
        }
    }
    Ok(p_transform(&out, n, m, true))
}

/// Same evolution by repeated dense Cayley steps (step h, `steps` times).
pub fn dense_cayley_evolve(s: &DMatrix<Complex64>, xi: &[f64], w: &[Complex64], h: f64, steps: usize) -> Result<Vec<Complex64>, String> {
    let n = xi.len();
    let m = s.nrows();
    if n * m > MAX_DENSE {
        return Err("oracle size exceeds cap".into());
    }
    let c = p_transform(w, n, m, false);
    let id = DMatrix::<Complex64>::identity(m, m);
    let mut out = vec![Complex64::default(); n * m];
    for k in 0..n {
        let g = s * Complex64::new(0.0, xi[k] * h * 0.5);
        let lhs = (&id - &g).lu();
        let rhs = &id + &g;
        let mut y = nalgebra::DVector::from_iterator(m, (0..m).map(|i| c[k * m + i]));
        for _ in 0..steps {
            y = lhs.solve(&(&rhs * &y)).ok_or("singular Cayley system")?;
        }
        for i in 0..m {
            out[k * m + i] = y[i];
        }
    }
    Ok(p_transform(&out, n, m, true))
}

/// Classical fourth-order Runge–Kutta from t0 to t1 (either direction);
/// the last step is shortened to land on t1.
pub fn rk4_integrate<F>(mut rhs: F, y0: &[Complex64], t0: f64, t1: f64, dt: f64) -> Vec<Complex64>
where
    F: FnMut(f64, &[Complex64]) -> Vec<Complex64>,
{
    assert!(dt > 0.0);
    let axpy = |y: &[Complex64], k: &[Complex64], a: f64| -> Vec<Complex64> { y.iter().zip(k).map(|(u, v)| u + v * a).collect() };
    let mut y = y0.to_vec();
    let mut t = t0;
    let dir = (t1 - t0).signum();
    let steps = ((t1 - t0).abs() / dt - 1e-9).ceil().max(0.0) as usize;
    for s in 0..steps {
        let h = if s + 1 == steps { t1 - t } else { dir * dt };
        let k1 = rhs(t, &y);
        let k2 = rhs(t + 0.5 * h, &axpy(&y, &k1, 0.5 * h));
        let k3 = rhs(t + 0.5 * h, &axpy(&y, &k2, 0.5 * h));
        let k4 = rhs(t + h, &axpy(&y, &k3, h));
        for i in 0..y.len() {
            y[i] += (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) * (h / 6.0);
        }
        t += h;
    }
    y
}
