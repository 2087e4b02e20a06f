//! Bessel functions of order 0 and 1, the free resolvent kernel and the
//! spectral parameter.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_4, PI};

use crate::error::{Error, Result};

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

const SERIES_EPS: f64 = 1e-17;

// Chebyshev expansions of exp(-x) sqrt(x) I0(x) and exp(-x) sqrt(x) I1(x) in 32/x - 2 on x > 8.
const I0_LARGE: [f64; 25] = [
    -7.233_180_487_874_754E-18,
    -4.830_504_485_944_182E-18,
    4.465_621_420_296_76E-17,
    3.461_222_867_697_461E-17,
    -2.827_623_980_516_583_6E-16,
    -3.425_485_619_677_219E-16,
    1.772_560_133_056_526_3E-15,
    3.811_680_669_352_622_4E-15,
    -9.554_846_698_828_307E-15,
    -4.150_569_347_287_222E-14,
    1.540_086_217_521_41E-14,
    3.852_778_382_742_142_6E-13,
    7.180_124_451_383_666E-13,
    -1.794_178_531_506_806_2E-12,
    -1.321_581_184_044_771_3E-11,
    -3.149_916_527_963_241_6E-11,
    1.188_914_710_784_643_9E-11,
    4.940_602_388_224_97E-10,
    3.396_232_025_708_386_5E-9,
    2.266_668_990_498_178E-8,
    2.048_918_589_469_063_8E-7,
    2.891_370_520_834_756_7E-6,
    6.889_758_346_916_825E-5,
    3.369_116_478_255_694_3E-3,
    8.044_904_110_141_088E-1,
];

#[allow(clippy::excessive_precision)]
const I1_LARGE: [f64; 25] = [
    7.51729631084210481353E-18,
    4.41434832307170791151E-18,
    -4.65030536848935832153E-17,
    -3.20952592199342395980E-17,
    2.96262899764595013876E-16,
    3.30820231092092828324E-16,
    -1.88035477551078244854E-15,
    -3.81440307243700780478E-15,
    1.04202769841288027642E-14,
    4.27244001671195135429E-14,
    -2.10154184277266431302E-14,
    -4.08355111109219731823E-13,
    -7.19855177624590851209E-13,
    2.03562854414708950722E-12,
    1.41258074366137813316E-11,
    3.25260358301548823856E-11,
    -1.89749581235054123450E-11,
    -5.58974346219658380687E-10,
    -3.83538038596423702205E-9,
    -2.63146884688951950684E-8,
    -2.51223623787020892529E-7,
    -3.88256480887769039346E-6,
    -1.10588938762623716291E-4,
    -9.76109749136146840777E-3,
    7.78576235018280120474E-1,
];

fn chbevl(x: f64, coeffs: &[f64]) -> f64 {
    let mut b0 = coeffs[0];
    let mut b1 = 0.0;
    let mut b2 = 0.0;
    for c in &coeffs[1..] {
        b2 = b1;
        b1 = b0;
        b0 = x.mul_add(b1, *c) - b2;
    }
    0.5 * (b0 - b2)
}

fn finite(x: f64, name: &str) -> Result<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(Error::param(format!("{name}: non-finite argument {x}")))
    }
}

fn positive(x: f64, name: &str) -> Result<f64> {
    finite(x, name)?;
    if x > 0.0 {
        Ok(x)
    } else {
        Err(Error::param(format!("{name}: argument must be positive, got {x}")))
    }
}

/// Sum of `(x^2/4)^k / (k! (k+n)!)` weighted by `w(k)`, n in {0, 1}.
fn ascending<F: Fn(usize) -> f64>(x: f64, n: usize, w: F) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = w(0) * term;
    for k in 1..200 {
        term *= q / (k as f64 * (k + n) as f64);
        let t = w(k) * term;
        sum += t;
        if t.abs() <= SERIES_EPS * sum.abs() && term <= SERIES_EPS * sum.abs().max(1.0) {
            break;
        }
    }
    sum
}

pub(crate) fn i0(x: f64) -> f64 {
    let ax = x.abs();
    if ax <= 8.0 {
        ascending(ax, 0, |_| 1.0)
    } else {
        ax.exp() * chbevl(32.0 / ax - 2.0, &I0_LARGE) / ax.sqrt()
    }
}

pub(crate) fn i1(x: f64) -> f64 {
    let ax = x.abs();
    let v = if ax <= 8.0 {
        0.5 * ax * ascending(ax, 1, |_| 1.0)
    } else {
        ax.exp() * chbevl(32.0 / ax - 2.0, &I1_LARGE) / ax.sqrt()
    };
    v.copysign(x)
}

fn harmonic(k: usize) -> f64 {
    (1..=k).map(|j| 1.0 / j as f64).sum()
}

/// Steed's continued fraction for (K0, K1), accurate for x >= 2.
fn k01_cf(x: f64) -> (f64, f64) {
    let mut b = 2.0 * (1.0 + x);
    let mut d = 1.0 / b;
    let mut h = d;
    let mut delh = d;
    let mut q1 = 0.0;
    let mut q2 = 1.0;
    let a1 = 0.25;
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = 1.0 + q * delh;
    for i in 2..100_000 {
        a -= 2.0 * (i - 1) as f64;
        c = -a * c / i as f64;
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh = (b * d - 1.0) * delh;
        h += delh;
        let dels = q * delh;
        s += dels;
        if (dels / s).abs() < f64::EPSILON {
            break;
        }
    }
    h *= a1;
    let k0 = (PI / (2.0 * x)).sqrt() * (-x).exp() / s;
    let k1 = k0 * (x + 0.5 - h) / x;
    (k0, k1)
}

pub(crate) fn k0(x: f64) -> f64 {
    if x <= 2.0 {
        let lg = (0.5 * x).ln() + EULER_GAMMA;
        -lg * i0(x) + ascending(x, 0, harmonic)
    } else {
        k01_cf(x).0
    }
}

pub(crate) fn k1(x: f64) -> f64 {
    if x <= 2.0 {
        let psi = |k: usize| harmonic(k) - EULER_GAMMA;
        1.0 / x + (0.5 * x).ln() * i1(x) - 0.25 * x * ascending(x, 1, |k| psi(k) + psi(k + 1))
    } else {
        k01_cf(x).1
    }
}

/// J0 and Y0 by Miller's backward recurrence with the Neumann series for Y0.
fn jy0_miller(x: f64) -> (f64, f64) {
    let m = 2 * ((x + 30.0 + 12.0 * x.cbrt()) as usize / 2);
    let mut jp = 0.0;
    let mut j = 1e-30;
    let mut norm = 0.0;
    let mut ysum = 0.0;
    let mut j0 = 0.0;
    for k in (1..=m).rev() {
        let jm = 2.0 * k as f64 / x * j - jp;
        jp = j;
        j = jm;
        let n = k - 1;
        if n > 0 && n % 2 == 0 {
            norm += 2.0 * j;
            let half = (n / 2) as f64;
            let sign = if (n / 2) % 2 == 0 { 1.0 } else { -1.0 };
            ysum += sign * j / half;
        }
        if n == 0 {
            j0 = j;
            norm += j;
        }
        if j.abs() > 1e250 {
            j *= 1e-250;
            jp *= 1e-250;
            norm *= 1e-250;
            ysum *= 1e-250;
        }
    }
    let j0v = j0 / norm;
    let ys = ysum / norm;
    let y0 = 2.0 / PI * (((0.5 * x).ln() + EULER_GAMMA) * j0v - 2.0 * ys);
    (j0v, y0)
}

fn jy0_hankel(x: f64) -> (f64, f64) {
    let mut p = 0.0;
    let mut q = 0.0;
    let mut a = 1.0;
    let mut prev = f64::INFINITY;
    for k in 0..60 {
        if k > 0 {
            let odd = (2 * k - 1) as f64;
            a *= -(odd * odd) / (k as f64 * 8.0 * x);
        }
        if a.abs() > prev {
            break;
        }
        prev = a.abs();
        let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if k % 2 == 0 {
            p += sign * a;
        } else {
            q += sign * a;
        }
        if a.abs() < 1e-17 {
            break;
        }
    }
    let chi = x - FRAC_PI_4;
    let amp = (2.0 / (PI * x)).sqrt();
    (amp * (p * chi.cos() - q * chi.sin()), amp * (p * chi.sin() + q * chi.cos()))
}

pub(crate) fn jy0(x: f64) -> (f64, f64) {
    if x <= 25.0 {
        jy0_miller(x)
    } else {
        jy0_hankel(x)
    }
}

/// Modified Bessel function I0.
pub fn bessel_i0(x: f64) -> Result<f64> {
    Ok(i0(finite(x, "I0")?))
}

/// Modified Bessel function I1.
pub fn bessel_i1(x: f64) -> Result<f64> {
    Ok(i1(finite(x, "I1")?))
}

/// Modified Bessel function K0, x > 0.
pub fn bessel_k0(x: f64) -> Result<f64> {
    Ok(k0(positive(x, "K0")?))
}

/// Modified Bessel function K1, x > 0.
pub fn bessel_k1(x: f64) -> Result<f64> {
    Ok(k1(positive(x, "K1")?))
}

/// Bessel function J0.
pub fn bessel_j0(x: f64) -> Result<f64> {
    let x = finite(x, "J0")?.abs();
    if x == 0.0 {
        return Ok(1.0);
    }
    Ok(jy0(x).0)
}

/// Bessel function Y0, x > 0.
pub fn bessel_y0(x: f64) -> Result<f64> {
    Ok(jy0(positive(x, "Y0")?).1)
}

/// Side of the spectrum the parameter sits on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// xi <= 0, the kernel is exponentially decaying with rate y = sqrt(-xi).
    NegativeXi,
    /// 0 < xi < lambda_0, the kernel oscillates with wavenumber y = sqrt(xi).
    PositiveXi,
}

/// Spectral parameter xi together with y = sqrt(|xi|).
///
/// The shifted operator is `-Laplace + z` with `z = -xi`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralParameter {
    pub xi: f64,
    pub y: f64,
    pub branch: Branch,
}

impl SpectralParameter {
    pub fn from_xi(xi: f64) -> Result<Self> {
        finite(xi, "xi")?;
        Ok(if xi <= 0.0 {
            Self { xi, y: (-xi).sqrt(), branch: Branch::NegativeXi }
        } else {
            Self { xi, y: xi.sqrt(), branch: Branch::PositiveXi }
        })
    }

    pub fn new(branch: Branch, y: f64) -> Result<Self> {
        finite(y, "y")?;
        if y < 0.0 {
            return Err(Error::param(format!("y must be non-negative, got {y}")));
        }
        let xi = match branch {
            Branch::NegativeXi => -y * y,
            Branch::PositiveXi => y * y,
        };
        Ok(Self { xi, y, branch })
    }

    pub fn negative(y: f64) -> Result<Self> {
        Self::new(Branch::NegativeXi, y)
    }

    pub fn positive(y: f64) -> Result<Self> {
        Self::new(Branch::PositiveXi, y)
    }

    /// Shift z = -xi.
    pub fn z(&self) -> f64 {
        -self.xi
    }

    /// Principal square root of z.
    pub fn sqrt_z(&self) -> Complex64 {
        match self.branch {
            Branch::NegativeXi => Complex64::new(self.y, 0.0),
            Branch::PositiveXi => Complex64::new(0.0, self.y),
        }
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 2 || dim == 3 {
        Ok(())
    } else {
        Err(Error::param(format!("dimension must be 2 or 3, got {dim}")))
    }
}

/// Free resolvent kernel G^z(r), z = -xi, at distance r > 0.
///
/// 2D: K0(sqrt(z) r) / (2 pi). 3D: exp(-sqrt(z) r) / (4 pi r).
pub fn free_green(dim: usize, p: &SpectralParameter, r: f64) -> Result<Complex64> {
    check_dim(dim)?;
    positive(r, "r")?;
    let y = p.y;
    Ok(match (dim, p.branch) {
        (2, Branch::NegativeXi) => {
            if y <= 0.0 {
                return Err(Error::param("2D kernel requires y > 0"));
            }
            Complex64::new(k0(y * r) / (2.0 * PI), 0.0)
        }
        (2, Branch::PositiveXi) => {
            if y <= 0.0 {
                return Err(Error::param("2D kernel requires y > 0"));
            }
            let (j, yy) = jy0(y * r);
            Complex64::new(-0.25 * yy, -0.25 * j)
        }
        (_, Branch::NegativeXi) => Complex64::new((-y * r).exp() / (4.0 * PI * r), 0.0),
        (_, Branch::PositiveXi) => {
            let (s, c) = (y * r).sin_cos();
            Complex64::new(c, -s) / (4.0 * PI * r)
        }
    })
}

/// Real part of the free kernel without argument checks.
pub(crate) fn green_re(dim: usize, p: &SpectralParameter, r: f64) -> f64 {
    match (dim, p.branch) {
        (2, Branch::NegativeXi) => k0(p.y * r) / (2.0 * PI),
        (2, Branch::PositiveXi) => -0.25 * jy0(p.y * r).1,
        (_, Branch::NegativeXi) => (-p.y * r).exp() / (4.0 * PI * r),
        (_, Branch::PositiveXi) => (p.y * r).cos() / (4.0 * PI * r),
    }
}

/// Imaginary part of the free kernel without argument checks.
pub(crate) fn green_im(dim: usize, p: &SpectralParameter, r: f64) -> f64 {
    match (dim, p.branch) {
        (_, Branch::NegativeXi) => 0.0,
        (2, Branch::PositiveXi) => {
            if p.y * r == 0.0 {
                -0.25
            } else {
                -0.25 * jy0(p.y * r).0
            }
        }
        (_, Branch::PositiveXi) => {
            if r == 0.0 {
                -p.y / (4.0 * PI)
            } else {
                -(p.y * r).sin() / (4.0 * PI * r)
            }
        }
    }
}

/// Boundary data of the regular part at zero energy in 2D:
/// -(ln(r/2) + gamma) / (2 pi).
pub(crate) fn log_kernel(r: f64) -> f64 {
    -((0.5 * r).ln() + EULER_GAMMA) / (2.0 * PI)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn small_argument_limits() {
        let x = 1e-6;
        assert_relative_eq!(i0(x), 1.0, max_relative = 1e-12);
        assert_relative_eq!(k0(x), -((0.5 * x).ln() + EULER_GAMMA), max_relative = 1e-10);
        assert_relative_eq!(k1(x) * x, 1.0, max_relative = 1e-10);
    }

    #[test]
    fn wronskian_identity() {
        for &x in &[0.3, 1.0, 1.99, 2.01, 5.0, 7.9, 8.1, 20.0, 60.0] {
            let w = i0(x) * k1(x) + i1(x) * k0(x);
            assert_relative_eq!(w * x, 1.0, max_relative = 1e-13);
        }
    }

    #[test]
    fn bessel_j_wronskian_type_identity() {
        // J0^2 + Y0^2 tends to 2/(pi x) for large x.
        let (j, y) = jy0(400.0);
        assert_relative_eq!(j * j + y * y, 2.0 / (PI * 400.0), max_relative = 1e-5);
        let (a, b) = jy0_miller(24.9);
        let (c, d) = jy0_hankel(24.9);
        assert!((a - c).abs() < 1e-14 && (b - d).abs() < 1e-14);
    }

    #[test]
    fn invalid_arguments() {
        assert!(bessel_k0(0.0).is_err());
        assert!(bessel_k1(-1.0).is_err());
        assert!(bessel_i0(f64::NAN).is_err());
        assert!(bessel_y0(0.0).is_err());
        assert!(free_green(4, &SpectralParameter::negative(1.0).unwrap(), 1.0).is_err());
        assert!(free_green(3, &SpectralParameter::negative(1.0).unwrap(), 0.0).is_err());
    }

    #[test]
    fn kernel_imaginary_parts_near_origin() {
        let p = SpectralParameter::positive(1.3).unwrap();
        let g2 = free_green(2, &p, 1e-9).unwrap();
        assert!((g2.im + 0.25).abs() < 1e-12);
        let g3 = free_green(3, &p, 1e-9).unwrap();
        assert!((g3.im + 1.3 / (4.0 * PI)).abs() < 1e-12);
    }

    #[test]
    fn spectral_parameter_roundtrip() {
        let p = SpectralParameter::from_xi(-4.0).unwrap();
        assert_eq!(p.branch, Branch::NegativeXi);
        assert_eq!(p.y, 2.0);
        let q = SpectralParameter::from_xi(2.25).unwrap();
        assert_eq!(q.branch, Branch::PositiveXi);
        assert_eq!(q.sqrt_z(), Complex64::new(0.0, 1.5));
    }
}
