use crate::error::{Error, Result};
use crate::grids::{ExtendedGrid, SpatialGrid};
use crate::profiles::ExtensionProfile;
use num_complex::Complex64;

/// How the columns of a field relate to the spatial grid.
#[derive(Clone, Debug, PartialEq)]
pub enum XLayout {
    /// All M nodes of a periodic grid.
    Periodic(SpatialGrid),
    /// The M − 1 interior nodes of a grid with homogeneous Dirichlet ends.
    Dirichlet(SpatialGrid),
}

impl XLayout {
    pub fn grid(&self) -> &SpatialGrid {
        match self {
            XLayout::Periodic(g) | XLayout::Dirichlet(g) => g,
        }
    }
    pub fn len(&self) -> usize {
        match self {
            XLayout::Periodic(g) => g.len(),
            XLayout::Dirichlet(g) => g.len() - 1,
        }
    }
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
    pub fn nodes(&self) -> Vec<f64> {
        match self {
            XLayout::Periodic(g) => g.nodes(),
            XLayout::Dirichlet(g) => g.interior_nodes(),
        }
    }
    pub fn dx(&self) -> f64 {
        self.grid().dx()
    }
}

/// Lifted unknown w(t, x_i, p_l), stored row-major with one row per p node.
#[derive(Clone, Debug)]
pub struct WarpedField {
    values: Vec<Complex64>,
    x: XLayout,
    p: ExtendedGrid,
    time: f64,
    horizon: f64,
}

impl WarpedField {
    pub fn from_values(values: Vec<Complex64>, x: XLayout, p: ExtendedGrid, time: f64, horizon: f64) -> Result<Self> {
        let expected = x.len() * p.len();
        if values.len() != expected {
            return Err(Error::ShapeMismatch { expected, found: values.len() });
        }
        Ok(Self { values, x, p, time, horizon })
    }

    pub fn rows(&self) -> usize {
        self.p.len()
    }
    pub fn cols(&self) -> usize {
        self.x.len()
    }
    pub fn x_layout(&self) -> &XLayout {
        &self.x
    }
    pub fn p_grid(&self) -> &ExtendedGrid {
        &self.p
    }
    pub fn time(&self) -> f64 {
        self.time
    }
    pub fn set_time(&mut self, t: f64) {
        self.time = t;
    }
    pub fn horizon(&self) -> f64 {
        self.horizon
    }
    pub fn values(&self) -> &[Complex64] {
        &self.values
    }
    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }
    pub fn row(&self, l: usize) -> &[Complex64] {
        let m = self.cols();
        &self.values[l * m..(l + 1) * m]
    }

    /// e^{p_l}·w(t, ·, p_l).
    pub fn point_values(&self, l: usize) -> Vec<Complex64> {
        let s = self.p.node(l).exp();
        self.row(l).iter().map(|v| v * s).collect()
    }
}

/// w(T, x_i, p_l) = g(p_l)·u_T(x_i).
pub fn lift(u_t: &[Complex64], profile: &ExtensionProfile, x: XLayout, p: ExtendedGrid, horizon: f64) -> Result<WarpedField> {
    if u_t.len() != x.len() {
        return Err(Error::ShapeMismatch { expected: x.len(), found: u_t.len() });
    }
    let g = profile.sample(&p.nodes());
    let mut values = Vec::with_capacity(g.len() * u_t.len());
    for gl in &g {
        values.extend(u_t.iter().map(|u| u * gl));
    }
    WarpedField::from_values(values, x, p, horizon, horizon)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RecoveryMode {
    Point,
    Integrate,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RecoveryPlan {
    pub eta_max: f64,
    pub p_diamond: f64,
    pub mode: RecoveryMode,
    pub window: f64,
}

impl RecoveryPlan {
    pub fn new(eta_max: f64, p_diamond: f64, mode: RecoveryMode, window: f64) -> Result<Self> {
        if !(eta_max > 0.0) {
            return Err(Error::InvalidArgument(format!("eta_max must be positive, got {eta_max}")));
        }
        if !(window > 0.0) {
            return Err(Error::InvalidArgument(format!("window must be positive, got {window}")));
        }
        if !p_diamond.is_finite() {
            return Err(Error::InvalidArgument("p_diamond must be finite".into()));
        }
        Ok(Self { eta_max, p_diamond, mode, window })
    }

    /// Checks p◇ + 𝓜 ≤ πL.
    pub fn check_fits(&self, p: &ExtendedGrid) -> Result<()> {
        let top = self.p_diamond + self.window;
        if top > p.half_width() * (1.0 + 1e-12) {
            return Err(Error::WindowExhausted { p_diamond: self.p_diamond, max_node: p.half_width() - self.window });
        }
        Ok(())
    }

    /// The stricter window bound 𝓜 ≤ min(πL − p◇, p◇/2) of the error
    /// estimate for the heat family.
    pub fn check_error_estimate_window(&self, p: &ExtendedGrid) -> Result<()> {
        let cap = (p.half_width() - self.p_diamond).min(self.p_diamond / 2.0);
        if self.window > cap * (1.0 + 1e-12) {
            return Err(Error::InvalidArgument(format!("window {} exceeds the estimate bound {cap}", self.window)));
        }
        Ok(())
    }
}

/// Index of the first node strictly above p◇.
pub fn first_node_above(p: &ExtendedGrid, p_diamond: f64) -> Result<usize> {
    (0..p.len())
        .find(|&l| p.node(l) > p_diamond)
        .ok_or(Error::WindowExhausted { p_diamond, max_node: p.node(p.len() - 1) })
}

pub fn recover_point(field: &WarpedField, plan: &RecoveryPlan) -> Result<Vec<Complex64>> {
    let k0 = first_node_above(field.p_grid(), plan.p_diamond)?;
    Ok(field.point_values(k0))
}

/// Cell range [j0, j1] whose cells (p_j ± Δp/2) lie inside (p◇, p◇ + 𝓜].
pub fn integrate_cells(p: &ExtendedGrid, p_diamond: f64, window: f64) -> Result<(usize, usize)> {
    let dp = p.dp();
    let top = p_diamond + window;
    let tol = 1e-9 * dp;
    let j0 = (0..p.len()).find(|&j| p.node(j) - 0.5 * dp > p_diamond + tol);
    let j1 = (0..p.len()).rev().find(|&j| p.node(j) + 0.5 * dp <= top + tol);
    match (j0, j1) {
        (Some(a), Some(b)) if a <= b => Ok((a, b)),
        _ => Err(Error::WindowExhausted { p_diamond, max_node: p.node(p.len() - 1) }),
    }
}

/// Midpoint-rule integral of w over the window divided by the exact
/// integral of e^{−p} over the same cells.
pub fn recover_integrate(field: &WarpedField, plan: &RecoveryPlan) -> Result<Vec<Complex64>> {
    let p = field.p_grid();
    let (j0, j1) = integrate_cells(p, plan.p_diamond, plan.window)?;
    let dp = p.dp();
    let den = (-(p.node(j0) - 0.5 * dp)).exp() - (-(p.node(j1) + 0.5 * dp)).exp();
    let mut acc = vec![Complex64::default(); field.cols()];
    for j in j0..=j1 {
        for (a, w) in acc.iter_mut().zip(field.row(j)) {
            *a += w;
        }
    }
    let s = dp / den;
    Ok(acc.into_iter().map(|a| a * s).collect())
}

pub fn recover(field: &WarpedField, plan: &RecoveryPlan) -> Result<Vec<Complex64>> {
    match plan.mode {
        RecoveryMode::Point => recover_point(field, plan),
        RecoveryMode::Integrate => recover_integrate(field, plan),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(v: f64) -> Complex64 {
        Complex64::new(v, 0.0)
    }

    #[test]
    fn lift_definition() {
        let x = XLayout::Periodic(SpatialGrid::new(0.0, 1.0, 2).unwrap());
        let p = ExtendedGrid::new(1.0, 2).unwrap();
        let f = lift(&[c(1.0), c(2.0)], &ExtensionProfile::exponential(), x, p, 1.0).unwrap();
        let e = (-PI).exp();
        let want = [e, 2.0 * e, 1.0, 2.0];
        for (a, b) in f.values().iter().zip(want) {
            assert!((a - c(b)).norm() < 1e-15);
        }
    }

    #[test]
    fn lift_shape_mismatch() {
        let x = XLayout::Periodic(SpatialGrid::new(0.0, 1.0, 4).unwrap());
        let p = ExtendedGrid::new(1.0, 4).unwrap();
        assert!(lift(&[c(1.0)], &ExtensionProfile::exponential(), x, p, 1.0).is_err());
    }

    #[test]
    fn point_recovery_of_lift_is_identity() {
        let x = XLayout::Periodic(SpatialGrid::new(0.0, 2.0, 8).unwrap());
        let p = ExtendedGrid::from_half_width(10.0, 64).unwrap();
        let u: Vec<_> = (0..8).map(|i| Complex64::new(i as f64, -(i as f64).sqrt())).collect();
        let f = lift(&u, &ExtensionProfile::exponential(), x, p, 1.0).unwrap();
        let plan = RecoveryPlan::new(1.0, 2.5, RecoveryMode::Point, 1.0).unwrap();
        for (a, b) in recover_point(&f, &plan).unwrap().iter().zip(&u) {
            assert!((a - b).norm() < 1e-12 * (1.0 + b.norm()));
        }
    }

    #[test]
    fn strict_threshold() {
        let p = ExtendedGrid::new(1.0, 4).unwrap(); // nodes −π, −π/2, 0, π/2
        assert_eq!(first_node_above(&p, 0.0).unwrap(), 3);
        assert!(matches!(first_node_above(&p, PI / 2.0), Err(Error::WindowExhausted { .. })));
    }

    #[test]
    fn integrate_denominator_limit() {
        // Midpoint sums of e^{−p} over [3, 10] approach e^{−3} − e^{−10}.
        let p = ExtendedGrid::from_half_width(10.0, 1 << 20).unwrap();
        let (j0, j1) = integrate_cells(&p, 3.0, 7.0).unwrap();
        let s: f64 = (j0..=j1).map(|j| p.dp() * (-p.node(j)).exp()).sum();
        assert!((s - 0.0497417).abs() < 2e-6, "{s}");
    }

    #[test]
    fn integrate_recovers_exact_exponential() {
        let x = XLayout::Periodic(SpatialGrid::new(0.0, 1.0, 2).unwrap());
        let p = ExtendedGrid::from_half_width(10.0, 256).unwrap();
        let f = lift(&[c(1.0), c(-3.0)], &ExtensionProfile::exponential(), x, p, 1.0).unwrap();
        let plan = RecoveryPlan::new(1.0, 3.0, RecoveryMode::Integrate, 7.0).unwrap();
        let u = recover_integrate(&f, &plan).unwrap();
        assert!((u[0] - c(1.0)).norm() < 1e-3 && (u[1] - c(-3.0)).norm() < 3e-3);
    }

    #[test]
    fn window_must_fit() {
        let p = ExtendedGrid::from_half_width(10.0, 256).unwrap();
        assert!(RecoveryPlan::new(1.0, 3.0, RecoveryMode::Integrate, 7.0).unwrap().check_fits(&p).is_ok());
        assert!(RecoveryPlan::new(1.0, 3.5, RecoveryMode::Integrate, 7.0).unwrap().check_fits(&p).is_err());
        assert!(RecoveryPlan::new(1.0, 4.0, RecoveryMode::Integrate, 7.0)
            .unwrap()
            .check_error_estimate_window(&p)
            .is_err());
    }
}
