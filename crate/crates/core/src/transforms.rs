//! Centered discrete Fourier transforms with phases referenced to the left
//! endpoint: f(x_i) = Σ_j c_j e^{iμ_j(x_i − x_lo)}, μ_j ∝ j − n/2.
//!
//! Forward carries 1/n, inverse carries no factor. The left-endpoint phase
//! reduces to an index rotation of a standard FFT, so the kernel is rustfft.

use crate::error::{Error, Result};
use crate::exec;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    /// Along each row (length = number of columns).
    X,
    /// Along each column (length = number of rows).
    P,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Direction {
    Forward,
    Inverse,
}

fn check_size(n: usize) -> Result<()> {
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::UnsupportedSize(n));
    }
    Ok(())
}

fn plan(n: usize, dir: Direction) -> Arc<dyn Fft<f64>> {
    let mut planner = FftPlanner::new();
    match dir {
        Direction::Forward => planner.plan_fft_forward(n),
        Direction::Inverse => planner.plan_fft_inverse(n),
    }
}

// Standard FFT output index k holds frequency k (mod n); centered index j
// holds frequency j − n/2, i.e. a rotation by n/2.
fn run(fft: &dyn Fft<f64>, buf: &mut [Complex64], scratch: &mut [Complex64], dir: Direction) {
    let n = buf.len();
    let h = n / 2;
    match dir {
        Direction::Forward => {
            fft.process_with_scratch(buf, scratch);
            buf.rotate_left(h);
            let s = 1.0 / n as f64;
            buf.iter_mut().for_each(|v| *v *= s);
        }
        Direction::Inverse => {
            buf.rotate_left(h);
            fft.process_with_scratch(buf, scratch);
        }
    }
}

fn transform_rows(data: &mut [Complex64], cols: usize, dir: Direction) -> Result<()> {
    check_size(cols)?;
    if !data.len().is_multiple_of(cols) {
        return Err(Error::ShapeMismatch { expected: cols, found: data.len() % cols });
    }
    let fft = plan(cols, dir);
    let scratch_len = fft.get_inplace_scratch_len();
    exec::for_each_row(data, cols, |_, row| {
        let mut scratch = vec![Complex64::default(); scratch_len];
        run(fft.as_ref(), row, &mut scratch, dir);
    });
    Ok(())
}

pub(crate) fn transpose(src: &[Complex64], rows: usize, cols: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::default(); src.len()];
    exec::for_each_row(&mut out, rows, |c, dst| {
        for (r, d) in dst.iter_mut().enumerate() {
            *d = src[r * cols + c];
        }
    });
    out
}

fn transform(data: &mut [Complex64], rows: usize, cols: usize, axis: Axis, dir: Direction) -> Result<()> {
    if data.len() != rows * cols {
        return Err(Error::ShapeMismatch { expected: rows * cols, found: data.len() });
    }
    match axis {
        Axis::X => transform_rows(data, cols, dir),
        Axis::P => {
            check_size(rows)?;
            let mut t = transpose(data, rows, cols);
            transform_rows(&mut t, rows, dir)?;
            let back = transpose(&t, cols, rows);
            data.copy_from_slice(&back);
            Ok(())
        }
    }
}

/// Forward transform of a row-major `rows × cols` array along `axis`, in place.
pub fn dft_axis(data: &mut [Complex64], rows: usize, cols: usize, axis: Axis) -> Result<()> {
    transform(data, rows, cols, axis, Direction::Forward)
}

/// Inverse of [`dft_axis`].
pub fn idft_axis(data: &mut [Complex64], rows: usize, cols: usize, axis: Axis) -> Result<()> {
    transform(data, rows, cols, axis, Direction::Inverse)
}

/// Forward transform of a single vector.
pub fn dft(v: &[Complex64]) -> Result<Vec<Complex64>> {
    let mut out = v.to_vec();
    dft_axis(&mut out, 1, v.len(), Axis::X)?;
    Ok(out)
}

/// Inverse transform of a single vector.
pub fn idft(c: &[Complex64]) -> Result<Vec<Complex64>> {
    let mut out = c.to_vec();
    idft_axis(&mut out, 1, c.len(), Axis::X)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn constant_is_dc() {
        let co = dft(&[c(1.0); 4]).unwrap();
        for (j, v) in co.iter().enumerate() {
            let want = if j == 2 { 1.0 } else { 0.0 };
            assert!((v - c(want)).norm() < 1e-15);
        }
    }

    #[test]
    fn single_basis_mode() {
        // e^{i(x+π)} on [−π, π), M = 8: μ = 1 sits at index 5.
        let f: Vec<_> = (0..8)
            .map(|i| {
                let x = -PI + i as f64 * PI / 4.0;
                Complex64::from_polar(1.0, x + PI)
            })
            .collect();
        let co = dft(&f).unwrap();
        for (j, v) in co.iter().enumerate() {
            let want = if j == 5 { 1.0 } else { 0.0 };
            assert!((v - c(want)).norm() < 1e-14, "{j} {v}");
        }
    }

    #[test]
    fn inverse_trivia() {
        assert!(idft(&[Complex64::default(); 8]).unwrap().iter().all(|v| v.norm() == 0.0));
        let mut co = vec![Complex64::default(); 8];
        co[4] = Complex64::new(0.5, -2.0);
        for v in idft(&co).unwrap() {
            assert!((v - co[4]).norm() < 1e-15);
        }
    }

    #[test]
    fn unsupported_size() {
        assert!(matches!(dft(&[c(1.0); 6]), Err(Error::UnsupportedSize(6))));
        let mut d = vec![c(0.0); 12];
        assert!(dft_axis(&mut d, 3, 4, Axis::P).is_err());
    }

    #[test]
    fn p_axis_matches_column_transform() {
        let rows = 8;
        let cols = 4;
        let d: Vec<_> = (0..rows * cols).map(|k| Complex64::new((k as f64).sin(), (k as f64 * 0.3).cos())).collect();
        let mut a = d.clone();
        dft_axis(&mut a, rows, cols, Axis::P).unwrap();
        for col in 0..cols {
            let column: Vec<_> = (0..rows).map(|r| d[r * cols + col]).collect();
            let want = dft(&column).unwrap();
            for r in 0..rows {
                assert!((a[r * cols + col] - want[r]).norm() < 1e-14);
            }
        }
    }
}
