use crate::error::{Error, Result};
use crate::lift_recover::WarpedField;
use num_complex::Complex64;
use std::fmt::Write as _;
use std::path::Path;

/// √(Σ Δx |a − b|²)
pub fn l2_x(u_num: &[Complex64], u_exact: &[Complex64], dx: f64) -> Result<f64> {
    if u_num.len() != u_exact.len() {
        return Err(Error::ShapeMismatch { expected: u_exact.len(), found: u_num.len() });
    }
    Ok((dx * u_num.iter().zip(u_exact).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>()).sqrt())
}

/// √(Σ_{p◇ < p_l ≤ p◇+𝓜} Δp Σ_i Δx |e^{p_l}w(·, p_l) − u|²)
pub fn l2_xp_window(field: &WarpedField, u_exact: &[Complex64], p_diamond: f64, window: f64) -> Result<f64> {
    let p = field.p_grid();
    let dx = field.x_layout().dx();
    let top = p_diamond + window;
    let tol = 1e-9 * p.dp();
    let mut sum = 0.0;
    let mut count = 0;
    for l in 0..p.len() {
        let pl = p.node(l);
        if pl > p_diamond && pl <= top + tol {
            let e = l2_x(&field.point_values(l), u_exact, dx)?;
            sum += p.dp() * e * e;
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::WindowExhausted { p_diamond, max_node: p.node(p.len() - 1) });
    }
    Ok(sum.sqrt())
}

/// log₂(e_i / e_{i+1}) for consecutive entries.
pub fn convergence_order(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

/// {(p_l, ‖e^{p_l}w(·, p_l) − u‖)} over every p node.
pub fn plateau_scan(field: &WarpedField, u_exact: &[Complex64]) -> Result<Vec<(f64, f64)>> {
    let dx = field.x_layout().dx();
    let p = field.p_grid();
    (0..p.len()).map(|l| Ok((p.node(l), l2_x(&field.point_values(l), u_exact, dx)?))).collect()
}

/// Error at the node nearest to `p`.
pub fn curve_at(curve: &[(f64, f64)], p: f64) -> Option<f64> {
    curve.iter().min_by(|a, b| (a.0 - p).abs().total_cmp(&(b.0 - p).abs())).map(|c| c.1)
}

/// First p where the curve drops to `threshold` and stays there over the
/// following `span` units of p.
pub fn plateau_onset(curve: &[(f64, f64)], threshold: f64, span: f64) -> Option<f64> {
    (0..curve.len()).map(|i| curve[i].0).find(|&p0| {
        let mut seen = false;
        for &(p, e) in curve.iter().filter(|(p, _)| *p >= p0 && *p <= p0 + span) {
            if !(e <= threshold) {
                return false;
            }
            seen |= p > p0;
        }
        seen
    })
}

/// Real tridiagonal solve (Thomas), diagonally dominant systems only.
pub fn solve_tridiagonal(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    if rhs.len() != n || sub.len() + 1 != n || sup.len() + 1 != n {
        return Err(Error::ShapeMismatch { expected: n, found: rhs.len() });
    }
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    for i in 0..n {
        let lower = if i > 0 { sub[i - 1] } else { 0.0 };
        let piv = diag[i] - if i > 0 { lower * c[i - 1] } else { 0.0 };
        if piv == 0.0 {
            return Err(Error::InvalidArgument("zero pivot in tridiagonal solve".into()));
        }
        if i + 1 < n {
            c[i] = sup[i] / piv;
        }
        d[i] = (rhs[i] - if i > 0 { lower * d[i - 1] } else { 0.0 }) / piv;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    Ok(x)
}

/// Forward heat ∂_t u = ∂_xx u on interior nodes with zero Dirichlet ends,
/// Crank–Nicolson in time, used to build reference data.
pub fn forward_heat_cn(u0: &[f64], dx: f64, t_end: f64, dt: f64) -> Result<Vec<f64>> {
    let n = u0.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    let (steps, h, last) = crate::propagators::step_schedule(t_end, dt)?;
    let mut u = u0.to_vec();
    let advance = |h: f64, u: &mut Vec<f64>| -> Result<()> {
        let r = h / (dx * dx);
        let rhs: Vec<f64> = (0..n)
            .map(|i| {
                let l = if i > 0 { u[i - 1] } else { 0.0 };
                let rr = if i + 1 < n { u[i + 1] } else { 0.0 };
                u[i] + 0.5 * r * (l - 2.0 * u[i] + rr)
            })
            .collect();
        *u = solve_tridiagonal(&vec![-0.5 * r; n - 1], &vec![1.0 + r; n], &vec![-0.5 * r; n - 1], &rhs)?;
        Ok(())
    };
    for _ in 0..steps {
        advance(h, &mut u)?;
    }
    if let Some(hl) = last {
        advance(hl, &mut u)?;
    }
    Ok(u)
}

/// Shortest round-trip decimal; scientific form for very small or large
/// magnitudes.
pub fn fmt_float(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-3..1e6).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ErrorRow {
    pub dp: f64,
    pub dx: f64,
    pub dt: f64,
    pub err_point: f64,
    pub err_int: f64,
}

/// Errors per resolution plus run metadata.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ErrorReport {
    pub rows: Vec<ErrorRow>,
    pub meta: Vec<(String, String)>,
}

fn halves(a: f64, b: f64) -> bool {
    (a / b - 2.0).abs() < 1e-9
}

impl ErrorReport {
    /// Orders between consecutive rows; every step must halve exactly.
    pub fn orders(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        for w in self.rows.windows(2) {
            if !(halves(w[0].dp, w[1].dp) && halves(w[0].dx, w[1].dx) && halves(w[0].dt, w[1].dt)) {
                return Err(Error::InvalidArgument("convergence rows must halve dp, dx and dt".into()));
            }
        }
        let p: Vec<f64> = self.rows.iter().map(|r| r.err_point).collect();
        let i: Vec<f64> = self.rows.iter().map(|r| r.err_int).collect();
        Ok((convergence_order(&p), convergence_order(&i)))
    }

    pub fn to_csv(&self) -> Result<String> {
        let (op, oi) = self.orders()?;
        let mut s = String::from("dp,dx,dt,err_point,order_point,err_int,order_int\n");
        for (k, r) in self.rows.iter().enumerate() {
            let o = |v: &[f64]| if k == 0 { String::new() } else { fmt_float(v[k - 1]) };
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{}",
                fmt_float(r.dp),
                fmt_float(r.dx),
                fmt_float(r.dt),
                fmt_float(r.err_point),
                o(&op),
                fmt_float(r.err_int),
                o(&oi)
            );
        }
        Ok(s)
    }
}

/// Writes to a temporary sibling and renames it over `path`.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    let name = path.file_name().ok_or_else(|| Error::InvalidArgument(format!("bad output path {}", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    std::fs::write(&tmp, contents)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grids::{ExtendedGrid, SpatialGrid};
    use crate::lift_recover::{lift, XLayout};
    use crate::profiles::ExtensionProfile;
    use std::f64::consts::PI;

    fn c(v: f64) -> Complex64 {
        Complex64::new(v, 0.0)
    }

    #[test]
    fn l2_basics() {
        let g = SpatialGrid::new(-PI, PI, 64).unwrap();
        let ones = vec![c(1.0); 64];
        let zero = vec![c(0.0); 64];
        assert!((l2_x(&ones, &zero, g.dx()).unwrap() - (2.0 * PI).sqrt()).abs() < 1e-13);
        assert_eq!(l2_x(&ones, &ones, g.dx()).unwrap(), 0.0);
        assert!(l2_x(&ones, &zero[..3], g.dx()).is_err());
    }

    #[test]
    fn window_norm_of_exact_field_and_single_cell() {
        let x = XLayout::Periodic(SpatialGrid::new(0.0, 1.0, 4).unwrap());
        let p = ExtendedGrid::from_half_width(8.0, 64).unwrap();
        let u = vec![c(1.0), c(2.0), c(-1.0), c(0.5)];
        let f = lift(&u, &ExtensionProfile::exponential(), x, p.clone(), 1.0).unwrap();
        assert!(l2_xp_window(&f, &u, 1.0, 3.0).unwrap() < 1e-12);
        // one node in the window: √Δp · l2_x
        let off = vec![c(0.0); 4];
        let l = super::super::lift_recover::first_node_above(&p, 1.0).unwrap();
        let single = l2_xp_window(&f, &off, 1.0, p.dp()).unwrap();
        let want = p.dp().sqrt() * l2_x(&f.point_values(l), &off, 0.25).unwrap();
        assert!((single - want).abs() < 1e-12);
    }

    #[test]
    fn orders() {
        let o = convergence_order(&[1.64e-3, 3.25e-4]);
        assert!((o[0] - 2.33).abs() < 0.01);
        assert_eq!(convergence_order(&[4.0, 1.0]), vec![2.0]);
        let o = convergence_order(&[1.37e-1, 5.08e-2]);
        assert!((o[0] - 1.43).abs() < 0.01);
    }

    #[test]
    fn report_requires_halving() {
        let row = |k: f64| ErrorRow { dp: 0.1 / k, dx: 0.2 / k, dt: 0.01 / k, err_point: 1.0 / (k * k), err_int: 2.0 / (k * k) };
        let mut r = ErrorReport { rows: vec![row(1.0), row(2.0), row(4.0)], meta: vec![] };
        let csv = r.to_csv().unwrap();
        assert!(csv.starts_with("dp,dx,dt,err_point,order_point,err_int,order_int\n0.1,0.2,0.01,1,,2,\n"));
        assert!(csv.lines().nth(2).unwrap().ends_with(",2,0.5,2"));
        r.rows[2].dt = 0.003;
        assert!(r.orders().is_err());
    }

    #[test]
    fn onset() {
        let curve: Vec<(f64, f64)> = (0..100).map(|i| {
            let p = i as f64 * 0.1;
            (p, if p < 4.0 { 10.0 } else { 0.01 })
        }).collect();
        let p = plateau_onset(&curve, 0.1, 1.0).unwrap();
        assert!((p - 4.0).abs() < 1e-9);
        assert_eq!(curve_at(&curve, 3.97), Some(0.01));
    }

    #[test]
    fn forward_heat_matches_mode_decay() {
        let g = SpatialGrid::new(0.0, 2.0, 64).unwrap();
        let x = g.interior_nodes();
        let u0: Vec<f64> = x.iter().map(|&x| (PI * x / 2.0).sin()).collect();
        let u = forward_heat_cn(&u0, g.dx(), 1.0, 1.0 / 1024.0).unwrap();
        let decay = (-PI * PI / 4.0).exp();
        for (a, b) in u.iter().zip(&u0) {
            assert!((a - decay * b).abs() < 1e-3);
        }
    }

    #[test]
    fn floats() {
        assert_eq!(fmt_float(0.078125), "0.078125");
        assert_eq!(fmt_float(3.25e-4), "3.25e-4");
        assert_eq!(fmt_float(0.0), "0");
        assert_eq!(fmt_float(1e-3 / 3.0).parse::<f64>().unwrap(), 1e-3 / 3.0);
    }

    #[test]
    fn atomic_write() {
        let dir = std::env::temp_dir().join(format!("lifted-aw-{}", std::process::id()));
        let path = dir.join("a.csv");
        write_atomic(&path, "x\n").unwrap();
        write_atomic(&path, "y\n").unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "y\n");
        assert_eq!(std::fs::read_dir(&dir).unwrap().count(), 1);
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
