use crate::error::{Error, Result};
use crate::exec;
use crate::grids::{ExtendedGrid, SpatialGrid};
use crate::lift_recover::{WarpedField, XLayout};
use crate::profiles::ExtensionProfile;
use crate::propagators::TridiagonalOperator;
use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProblemFamily {
    /// Backward heat, periodic, Fourier in x.
    HeatSpectral,
    /// Backward heat, Dirichlet, second differences in x.
    HeatFd,
    /// Backward ∂_t u = ∂_x(a ∂_x u), Dirichlet, eigen-expansion in x.
    VariableCoeff,
    /// ∂_t v = i∂_x v + f, periodic, Fourier in x.
    Convection,
}

impl ProblemFamily {
    /// Power of the frequency in the x-symbol (λ = η² or λ = η).
    pub fn symbol_power(self) -> i32 {
        match self {
            ProblemFamily::Convection => 1,
            _ => 2,
        }
    }
    pub fn is_backward(self) -> bool {
        self != ProblemFamily::Convection
    }
}

/// Physical setup shared by the problem families.
#[derive(Clone, Debug)]
pub struct ProblemSpec {
    pub family: ProblemFamily,
    pub grid: SpatialGrid,
    pub horizon: f64,
    pub sobolev_s: f64,
    pub zeta0: Option<f64>,
}

impl ProblemSpec {
    pub fn new(family: ProblemFamily, grid: SpatialGrid, horizon: f64, sobolev_s: f64) -> Result<Self> {
        if !(horizon > 0.0) {
            return Err(Error::InvalidArgument(format!("horizon must be positive, got {horizon}")));
        }
        Ok(Self { family, grid, horizon, sobolev_s, zeta0: None })
    }

    pub fn x_layout(&self) -> XLayout {
        match self.family {
            ProblemFamily::HeatSpectral | ProblemFamily::Convection => XLayout::Periodic(self.grid.clone()),
            ProblemFamily::HeatFd | ProblemFamily::VariableCoeff => XLayout::Dirichlet(self.grid.clone()),
        }
    }
}

/// δ(η) = (Σ_{|η_j| > η} (1 + η_j²)^s |a_j|²)^{1/2} for a discrete spectrum
/// with L²-normalised amplitudes a_j.
pub fn delta_tail(freqs: &[f64], amps: &[f64], eta: f64, s: f64) -> f64 {
    freqs
        .iter()
        .zip(amps)
        .filter(|(f, _)| f.abs() > eta)
        .map(|(f, a)| (1.0 + f * f).powf(s) * a * a)
        .sum::<f64>()
        .sqrt()
}

/// (δ/ε)^{1/s}.
pub fn eta_max_from_delta(delta: f64, epsilon: f64, s: f64) -> Result<f64> {
    if !(epsilon > 0.0) || !(s > 0.0) || delta < 0.0 {
        return Err(Error::InvalidArgument("need delta >= 0, epsilon > 0, s > 0".into()));
    }
    Ok((delta / epsilon).powf(1.0 / s))
}

/// Smallest resolvable |η| with δ(η)/η^s ≤ ε. For band-limited data this is
/// the band edge. The top of the ladder is excluded since its empty tail
/// says nothing about the data beyond the grid.
pub fn choose_eta_max(freqs: &[f64], amps: &[f64], s: f64, epsilon: f64) -> Result<f64> {
    if !(s >= 1.0) || !(epsilon > 0.0) {
        return Err(Error::InvalidArgument("need s >= 1 and epsilon > 0".into()));
    }
    let mut cands: Vec<f64> = freqs.iter().map(|f| f.abs()).filter(|f| *f > 0.0).collect();
    cands.sort_by(|a, b| a.total_cmp(b));
    cands.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs());
    cands.pop();
    for eta in cands {
        if delta_tail(freqs, amps, eta, s) <= epsilon * eta.powf(s) {
            return Ok(eta);
        }
    }
    Err(Error::UnreachableTolerance { epsilon })
}

/// η_max balancing truncation against noise amplification:
/// √(ln((1/ζ₀)^{1/T}(ln 1/ζ₀)^{−s/(2T)})).
pub fn choose_eta_max_noisy(zeta0: f64, horizon: f64, s: f64) -> Result<f64> {
    if !(zeta0 > 0.0 && zeta0 < 1.0) {
        return Err(Error::InvalidArgument(format!("noise level must lie in (0, 1), got {zeta0}")));
    }
    let l = (1.0 / zeta0).ln();
    if !(horizon > 0.0) || horizon > l {
        return Err(Error::InvalidArgument(format!("horizon {horizon} must not exceed ln(1/zeta0) = {l}")));
    }
    let arg = l / horizon - s / (2.0 * horizon) * l.ln();
    if !(arg > 0.0) {
        return Err(Error::InvalidArgument("noise balance has no positive solution".into()));
    }
    Ok(arg.sqrt())
}

/// Recovery threshold: η²T for the heat families, ηT for convection. For
/// the variable-coefficient family pass η = √λ_{n_max}.
pub fn p_diamond(family: ProblemFamily, eta_max: f64, horizon: f64) -> f64 {
    eta_max.powi(family.symbol_power()) * horizon
}

/// Smallest L with πL ≥ C·η²T + ln(‖u_T‖/ε), C = 4.5 (strict) or 1
/// (relaxed), and never below C·η²T.
pub fn min_pi_l(eta_max: f64, horizon: f64, norm_ut: f64, epsilon: f64, relaxed: bool) -> Result<f64> {
    if !(eta_max > 0.0 && horizon > 0.0) {
        return Err(Error::InvalidArgument("min_pi_l needs positive arguments".into()));
    }
    Ok(min_half_width(eta_max * eta_max * horizon, norm_ut, epsilon, relaxed)? / std::f64::consts::PI)
}

/// The same bound on πL written for a given threshold p◇.
pub fn min_half_width(p_diamond: f64, norm_ut: f64, epsilon: f64, relaxed: bool) -> Result<f64> {
    if !(p_diamond > 0.0 && norm_ut > 0.0 && epsilon > 0.0) {
        return Err(Error::InvalidArgument("min_pi_l needs positive arguments".into()));
    }
    let c = if relaxed { 1.0 } else { 4.5 };
    let base = c * p_diamond;
    Ok((base + (norm_ut / epsilon).ln()).max(base))
}

/// 𝓛 = −∂_x(a ∂_x ·) on the interior nodes with Dirichlet ends, using a at
/// the half nodes.
pub fn build_variable_coeff_operator<F: Fn(f64) -> f64>(a: F, grid: &SpatialGrid) -> Result<TridiagonalOperator> {
    let n = grid.len() - 1;
    let dx = grid.dx();
    let half: Vec<f64> = (0..grid.len()).map(|i| a(grid.node(i) + 0.5 * dx)).collect();
    if let Some(bad) = half.iter().find(|v| !(**v > 0.0)) {
        return Err(Error::InvalidArgument(format!("coefficient must be positive, found {bad}")));
    }
    let s = 1.0 / (dx * dx);
    // interior node i (1-based) couples through a_{i−1/2} = half[i−1], a_{i+1/2} = half[i]
    let diag = (1..=n).map(|i| (half[i - 1] + half[i]) * s).collect();
    let off: Vec<f64> = (1..n).map(|i| -half[i] * s).collect();
    TridiagonalOperator::new(off.clone(), diag, off)
}

#[derive(Clone, Debug)]
pub struct EigenBasis {
    values: Vec<f64>,
    // column k is φ_k (Euclidean-orthonormal)
    vectors: DMatrix<f64>,
}

impl EigenBasis {
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn len(&self) -> usize {
        self.values.len()
    }
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
    pub fn vector(&self, k: usize) -> Vec<f64> {
        self.vectors.column(k).iter().copied().collect()
    }

    /// Largest count n with λ_n ≤ η².
    pub fn default_n_max(&self, eta_max: f64) -> usize {
        self.values.iter().take_while(|&&l| l <= eta_max * eta_max).count()
    }

    /// α_k = ⟨φ_k, u⟩ (Euclidean).
    pub fn project(&self, u: &[Complex64]) -> Vec<Complex64> {
        (0..self.len())
            .map(|k| self.vectors.column(k).iter().zip(u).map(|(p, v)| v * *p).sum())
            .collect()
    }

    pub fn synthesize(&self, alpha: &[Complex64]) -> Vec<Complex64> {
        let n = self.vectors.nrows();
        (0..n)
            .map(|i| alpha.iter().enumerate().map(|(k, a)| a * self.vectors[(i, k)]).sum())
            .collect()
    }

    /// max_k ‖𝓛φ_k − λ_kφ_k‖ / max(λ_k, 1) and max |ΦᵀΦ − I|.
    pub fn check(&self, op: &TridiagonalOperator) -> (f64, f64) {
        let mut residual = 0.0f64;
        for k in 0..self.len() {
            let v = self.vector(k);
            let av = op.apply(&v);
            let r = av.iter().zip(&v).map(|(a, b)| (a - self.values[k] * b).powi(2)).sum::<f64>().sqrt();
            residual = residual.max(r / self.values[k].abs().max(1.0));
        }
        let gram = self.vectors.transpose() * &self.vectors;
        let n = gram.nrows();
        let mut orth = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let want = if i == j { 1.0 } else { 0.0 };
                orth = orth.max((gram[(i, j)] - want).abs());
            }
        }
        (residual, orth)
    }
}

/// Full symmetric eigen-decomposition, eigenvalues ascending, each vector
/// signed so its first non-negligible entry is positive.
pub fn eigen_decompose(op: &TridiagonalOperator) -> Result<EigenBasis> {
    let n = op.len();
    let dense = op.to_dense();
    let m = DMatrix::<f64>::from_fn(n, n, |i, j| dense[i][j]);
    let eig = SymmetricEigen::try_new(m, 1e-15, 100_000).ok_or_else(|| Error::Eigen("no convergence".into()))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = DMatrix::<f64>::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let col = eig.eigenvectors.column(src);
        let lead = col.iter().find(|v| v.abs() > 1e-8).copied().unwrap_or(1.0);
        let sign = if lead < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            vectors[(i, dst)] = sign * col[i];
        }
    }
    let basis = EigenBasis { values, vectors };
    let (res, orth) = basis.check(op);
    if res > 1e-8 || orth > 1e-10 {
        return Err(Error::Eigen(format!("residual {res:e}, orthonormality defect {orth:e}")));
    }
    Ok(basis)
}

/// Lifted field at time t from the per-mode transport
/// w = Σ_{k<n_max} g(p − λ_k(T − t)) α_k(T) φ_k.
#[allow(clippy::too_many_arguments)]
pub fn evolve_variable_coeff(
    alpha_t: &[Complex64],
    basis: &EigenBasis,
    profile: &ExtensionProfile,
    grid: &SpatialGrid,
    p: &ExtendedGrid,
    horizon: f64,
    t: f64,
    n_max: usize,
) -> Result<WarpedField> {
    if n_max > basis.len() {
        return Err(Error::InvalidArgument(format!("n_max {n_max} exceeds basis size {}", basis.len())));
    }
    if alpha_t.len() != basis.len() {
        return Err(Error::ShapeMismatch { expected: basis.len(), found: alpha_t.len() });
    }
    let m = basis.len();
    let elapsed = horizon - t;
    let nodes = p.nodes();
    let modes: Vec<(f64, Complex64, Vec<f64>)> = (0..n_max).map(|k| (basis.values[k], alpha_t[k], basis.vector(k))).collect();
    let mut values = vec![Complex64::default(); nodes.len() * m];
    exec::for_each_row(&mut values, m, |l, row| {
        for (lam, a, phi) in &modes {
            let c = a * profile.eval(nodes[l] - lam * elapsed);
            for (w, f) in row.iter_mut().zip(phi) {
                *w += c * *f;
            }
        }
    });
    WarpedField::from_values(values, XLayout::Dirichlet(grid.clone()), p.clone(), t, horizon)
}

/// u + ζ₀·U(−1, 1) per node (real part), reproducible from `seed`.
pub fn add_noise(u: &[Complex64], zeta0: f64, seed: u64) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    u.iter()
        .map(|v| {
            let r: f64 = rng.random_range(-1.0..=1.0);
            v + zeta0 * r
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{E, PI};

    #[test]
    fn eta_from_delta() {
        assert!((eta_max_from_delta(1e-2, 1e-4, 2.0).unwrap() - 10.0).abs() < 1e-12);
        assert!((eta_max_from_delta(1.0, 1.0 / 3.2, 1.0).unwrap() - 3.2).abs() < 1e-12);
    }

    #[test]
    fn band_limited_choice_is_band_edge() {
        let freqs = [-2.0, -1.0, 0.0, 1.0, 2.0];
        let amps = [0.0, 0.5, 0.0, 0.5, 0.0];
        let eta = choose_eta_max(&freqs, &amps, 1.0, 1e-3).unwrap();
        assert_eq!(eta, 1.0);
        assert_eq!(delta_tail(&freqs, &amps, eta, 1.0), 0.0);
        let flat = [1.0; 5];
        assert!(matches!(choose_eta_max(&freqs, &flat, 1.0, 1e-3), Err(Error::UnreachableTolerance { .. })));
    }

    #[test]
    fn noisy_eta() {
        assert!((choose_eta_max_noisy(1.0 / E, 1.0, 0.0).unwrap() - 1.0).abs() < 1e-14);
        let e: Vec<f64> = [6e-2, 6e-3, 6e-4].iter().map(|&z| choose_eta_max_noisy(z, 1.0, 2.0).unwrap()).collect();
        assert!(e[0] < e[1] && e[1] < e[2]);
        // same magnitude as the hand-picked 1.5, 2, 2.5
        for (a, b) in e.iter().zip([1.5, 2.0, 2.5]) {
            assert!((a / b - 1.0).abs() < 0.15, "{a} {b}");
        }
        assert!(choose_eta_max_noisy(1.5, 1.0, 1.0).is_err());
        assert!(choose_eta_max_noisy(0.5, 2.0, 1.0).is_err());
    }

    #[test]
    fn thresholds() {
        assert!((p_diamond(ProblemFamily::HeatFd, PI / 2.0, 1.0) - PI * PI / 4.0).abs() < 1e-14);
        assert!((p_diamond(ProblemFamily::HeatSpectral, 3.0 * PI, 1.0) - 9.0 * PI * PI).abs() < 1e-12);
        assert!((p_diamond(ProblemFamily::Convection, 3.0 * PI, 1.0) - 3.0 * PI).abs() < 1e-14);
    }

    #[test]
    fn pi_l_bound() {
        let l = min_pi_l(1.0, 1.0, 1.0, (-5.0f64).exp(), false).unwrap();
        assert!((PI * l - 9.5).abs() < 1e-12);
        let r = min_pi_l(1.0, 1.0, 1.0, (-5.0f64).exp(), true).unwrap();
        assert!((PI * (l - r) - 3.5).abs() < 1e-12);
        // first smooth test: p ∈ [−10, 10] is wide enough under the relaxed rule
        let eta = PI / 2.0;
        let norm_ut = (-eta * eta).exp();
        assert!(PI * min_pi_l(eta, 1.0, norm_ut, 1e-3, true).unwrap() <= 10.0);
    }

    #[test]
    fn variable_operator() {
        let g = SpatialGrid::new(0.0, 2.0, 8).unwrap();
        let op = build_variable_coeff_operator(|_| 1.0, &g).unwrap();
        let a = TridiagonalOperator::second_difference(7, g.dx()).unwrap().negated();
        assert_eq!(op, a);
        // M = 4 on [0, 1]: three interior nodes, a = 1 + x at 1/8, 3/8, 5/8, 7/8
        let g = SpatialGrid::new(0.0, 1.0, 4).unwrap();
        let op = build_variable_coeff_operator(|x| 1.0 + x, &g).unwrap();
        let s = 16.0;
        let h = [1.125, 1.375, 1.625, 1.875];
        let want_diag = [(h[0] + h[1]) * s, (h[1] + h[2]) * s, (h[2] + h[3]) * s];
        for (a, b) in op.diag().iter().zip(want_diag) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((op.sub()[0] + h[1] * s).abs() < 1e-12 && (op.sup()[1] + h[2] * s).abs() < 1e-12);
        assert!(build_variable_coeff_operator(|x| x - 0.5, &g).is_err());
    }

    #[test]
    fn eigen_three_by_three() {
        let op = TridiagonalOperator::new(vec![-1.0; 2], vec![2.0; 3], vec![-1.0; 2]).unwrap();
        let b = eigen_decompose(&op).unwrap();
        let want = [2.0 - 2f64.sqrt(), 2.0, 2.0 + 2f64.sqrt()];
        for (a, w) in b.values().iter().zip(want) {
            assert!((a - w).abs() < 1e-12);
        }
        let (res, orth) = b.check(&op);
        assert!(res < 1e-12 && orth < 1e-12);
    }

    #[test]
    fn constant_coefficient_modes_are_sines() {
        let g = SpatialGrid::new(0.0, 2.0, 16).unwrap();
        let op = build_variable_coeff_operator(|_| 1.0, &g).unwrap();
        let b = eigen_decompose(&op).unwrap();
        let x = g.interior_nodes();
        for k in 0..3 {
            let s: Vec<f64> = x.iter().map(|&x| (PI * (k + 1) as f64 * x / 2.0).sin()).collect();
            let norm = s.iter().map(|v| v * v).sum::<f64>().sqrt();
            let v = b.vector(k);
            let dot: f64 = s.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>() / norm;
            assert!((dot.abs() - 1.0).abs() < 1e-12);
            let lam = 4.0 / g.dx().powi(2) * (PI * (k + 1) as f64 * g.dx() / 4.0).sin().powi(2);
            assert!((b.values()[k] - lam).abs() < 1e-9 * lam);
        }
    }

    #[test]
    fn single_mode_shift() {
        // λ = 1, T − t = 1, exponential profile: at p = 2 the field is e^{−1}α
        let op = TridiagonalOperator::new(vec![], vec![1.0], vec![]).unwrap();
        let b = eigen_decompose(&op).unwrap();
        let g = SpatialGrid::new(0.0, 1.0, 2).unwrap();
        let p = ExtendedGrid::new(1.0, 8).unwrap(); // nodes −π + jπ/4
        let alpha = [Complex64::new(0.7, 0.0)];
        let f = evolve_variable_coeff(&alpha, &b, &ExtensionProfile::exponential(), &g, &p, 1.0, 0.0, 1).unwrap();
        for l in 0..8 {
            let pl = p.node(l);
            let want = 0.7 * (-(pl - 1.0).abs()).exp();
            assert!((f.row(l)[0].re - want).abs() < 1e-14);
            if pl > 1.0 {
                assert!((f.point_values(l)[0].re - E * 0.7).abs() < 1e-12);
            }
        }
        let lifted = evolve_variable_coeff(&alpha, &b, &ExtensionProfile::exponential(), &g, &p, 1.0, 1.0, 1).unwrap();
        for l in 0..8 {
            assert!((lifted.row(l)[0].re - 0.7 * (-p.node(l).abs()).exp()).abs() < 1e-15);
        }
    }

    #[test]
    fn noise_is_bounded_and_reproducible() {
        let u = vec![Complex64::new(1.0, 0.0); 100];
        assert_eq!(add_noise(&u, 0.0, 3), u);
        let a = add_noise(&u, 6e-2, 42);
        assert_eq!(a, add_noise(&u, 6e-2, 42));
        assert_ne!(a, add_noise(&u, 6e-2, 43));
        assert!(a.iter().all(|v| (v - Complex64::new(1.0, 0.0)).norm() <= 6e-2));
    }
}
