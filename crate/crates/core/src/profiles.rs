use crate::error::{Error, Result};
use std::fmt;
use std::str::FromStr;

pub const MAX_HERMITE_ORDER: usize = 8;

#[derive(Clone, Debug, PartialEq)]
pub enum ProfileKind {
    Exponential,
    Hermite(usize),
}

/// Initial shape g(p) in the auxiliary variable. Always e^{−p} for p > 0.
#[derive(Clone, Debug, PartialEq)]
pub struct ExtensionProfile {
    kind: ProfileKind,
    // Hermite polynomial as ascending powers of p (about 0) and of
    // t = p + 1 (about −1); each half of [−1, 0] uses its local expansion.
    about_zero: Vec<f64>,
    about_minus_one: Vec<f64>,
}

impl ExtensionProfile {
    pub fn exponential() -> Self {
        Self { kind: ProfileKind::Exponential, about_zero: Vec::new(), about_minus_one: Vec::new() }
    }

    pub fn hermite(k: usize) -> Result<Self> {
        let (about_minus_one, about_zero) = hermite_expansions(k)?;
        Ok(Self { kind: ProfileKind::Hermite(k), about_zero, about_minus_one })
    }

    pub fn kind(&self) -> &ProfileKind {
        &self.kind
    }

    pub fn eval(&self, p: f64) -> f64 {
        if p > 0.0 {
            return (-p).exp();
        }
        match self.kind {
            ProfileKind::Exponential => p.exp(),
            ProfileKind::Hermite(_) => {
                if p < -1.0 {
                    p.exp()
                } else if p >= -0.5 {
                    horner(&self.about_zero, p)
                } else {
                    horner(&self.about_minus_one, p + 1.0)
                }
            }
        }
    }

    /// α-th derivative of the Hermite polynomial at p = 0 or p = −1 (exact
    /// read-off from the local expansions). None for the exponential kind.
    pub fn endpoint_derivative(&self, at_zero: bool, alpha: usize) -> Option<f64> {
        let c = if at_zero { &self.about_zero } else { &self.about_minus_one };
        if c.is_empty() {
            return None;
        }
        Some(c.get(alpha).copied().unwrap_or(0.0) * factorial(alpha))
    }

    pub fn sample(&self, nodes: &[f64]) -> Vec<f64> {
        nodes.iter().map(|&p| self.eval(p)).collect()
    }
}

impl fmt::Display for ExtensionProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            ProfileKind::Exponential => write!(f, "exponential"),
            ProfileKind::Hermite(k) => write!(f, "hermite:{k}"),
        }
    }
}

impl FromStr for ExtensionProfile {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "exponential" {
            return Ok(Self::exponential());
        }
        if let Some(k) = s.strip_prefix("hermite:") {
            let k: usize = k
                .trim()
                .parse()
                .map_err(|_| Error::InvalidProfile(format!("bad Hermite order in {s:?}")))?;
            return Self::hermite(k);
        }
        Err(Error::InvalidProfile(format!("expected exponential or hermite:<k>, got {s:?}")))
    }
}

fn horner(asc: &[f64], p: f64) -> f64 {
    asc.iter().rev().fold(0.0, |acc, &a| acc * p + a)
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|v| v as f64).product()
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Ratio {
    num: i128,
    den: i128,
}

fn gcd(a: i128, b: i128) -> i128 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

impl Ratio {
    const ZERO: Ratio = Ratio { num: 0, den: 1 };
    fn new(num: i128, den: i128) -> Self {
        let g = gcd(num, den).max(1);
        let s = if den < 0 { -1 } else { 1 };
        Ratio { num: s * num / g, den: s * den / g }
    }
    fn add(self, o: Ratio) -> Ratio {
        Ratio::new(self.num * o.den + o.num * self.den, self.den * o.den)
    }
    fn mul(self, o: Ratio) -> Ratio {
        let g1 = gcd(self.num, o.den).max(1);
        let g2 = gcd(o.num, self.den).max(1);
        Ratio::new((self.num / g1) * (o.num / g2), (self.den / g2) * (o.den / g1))
    }
    fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

type Poly = Vec<Ratio>;

fn poly_mul(a: &Poly, b: &Poly) -> Poly {
    let mut out = vec![Ratio::ZERO; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] = out[i + j].add(x.mul(*y));
        }
    }
    out
}

fn poly_add(a: &mut Poly, b: &Poly) {
    if a.len() < b.len() {
        a.resize(b.len(), Ratio::ZERO);
    }
    for (x, y) in a.iter_mut().zip(b) {
        *x = x.add(*y);
    }
}

fn poly_pow(base: &Poly, e: usize) -> Poly {
    (0..e).fold(vec![Ratio::new(1, 1)], |acc, _| poly_mul(&acc, base))
}

// q(t) = p(t + shift) for integer shift
fn poly_shift(p: &Poly, shift: i128) -> Poly {
    let mut out = vec![Ratio::ZERO];
    let lin = vec![Ratio::new(shift, 1), Ratio::new(1, 1)];
    for c in p.iter().rev() {
        out = poly_mul(&out, &lin);
        out[0] = out[0].add(*c);
    }
    out
}

fn binomial(n: usize, k: usize) -> i128 {
    (0..k).fold(1i128, |acc, i| acc * (n - i) as i128 / (i + 1) as i128)
}

/// Two-point Hermite interpolant on t ∈ [0, 1] (t = p + 1) split as
/// P = e^{−1}·A(t) + B(t) with rational A, B. A carries the unit
/// derivatives at t = 0, B the derivatives (−1)^α at t = 1.
fn hermite_parts(k: usize) -> (Poly, Poly) {
    let one = Ratio::new(1, 1);
    let t: Poly = vec![Ratio::ZERO, one];
    let one_minus_t: Poly = vec![one, Ratio::new(-1, 1)];
    let t_minus_one: Poly = vec![Ratio::new(-1, 1), one];
    let s = |m: usize, arg: &Poly| -> Poly {
        let mut acc = vec![Ratio::ZERO];
        for j in 0..=m {
            let term: Poly = poly_pow(arg, j).into_iter().map(|c| c.mul(Ratio::new(binomial(k + j, j), 1))).collect();
            poly_add(&mut acc, &term);
        }
        acc
    };
    let mut a = vec![Ratio::ZERO];
    let mut b = vec![Ratio::ZERO];
    for alpha in 0..=k {
        let inv_fact = Ratio::new(1, (1..=alpha as i128).product::<i128>().max(1));
        let left = poly_mul(&poly_mul(&poly_pow(&t, alpha), &poly_pow(&one_minus_t, k + 1)), &s(k - alpha, &t));
        poly_add(&mut a, &left.into_iter().map(|c| c.mul(inv_fact)).collect());
        let sign = Ratio::new(if alpha % 2 == 0 { 1 } else { -1 }, 1);
        let right = poly_mul(&poly_mul(&poly_pow(&t_minus_one, alpha), &poly_pow(&t, k + 1)), &s(k - alpha, &one_minus_t));
        poly_add(&mut b, &right.into_iter().map(|c| c.mul(inv_fact).mul(sign)).collect());
    }
    (a, b)
}

fn combine(a: &Poly, b: &Poly, n: usize) -> Vec<f64> {
    let e1 = (-1.0f64).exp();
    (0..n)
        .map(|j| {
            let x = a.get(j).map_or(0.0, |r| r.to_f64());
            let y = b.get(j).map_or(0.0, |r| r.to_f64());
            e1 * x + y
        })
        .collect()
}

// (ascending in t = p + 1, ascending in p)
fn hermite_expansions(k: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if k > MAX_HERMITE_ORDER {
        return Err(Error::InvalidProfile(format!("Hermite order {k} exceeds cap {MAX_HERMITE_ORDER}")));
    }
    let n = 2 * k + 2;
    let (a, b) = hermite_parts(k);
    let about_minus_one = combine(&a, &b, n);
    let about_zero = combine(&poly_shift(&a, 1), &poly_shift(&b, 1), n);
    Ok((about_minus_one, about_zero))
}

/// Coefficients of the degree-(2k+1) Hermite interpolant on [−1, 0],
/// highest power of p first. It matches ∂^α e^{−p} at 0 and ∂^α e^{p} at
/// −1 for α = 0..=k.
pub fn hermite_coefficients(k: usize) -> Result<Vec<f64>> {
    let (_, mut c) = hermite_expansions(k)?;
    c.reverse();
    Ok(c)
}
