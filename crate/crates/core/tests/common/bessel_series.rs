//! Bessel functions by ascending power series in 700-bit fixed point, which
//! absorbs the cancellation of the series up to x = 200.

use num_bigint::BigInt;
use num_traits::{Float, One, ToPrimitive, Zero};
use pwdg::analytic::BesselKind;

const BITS: u32 = 700;

/// Euler-Mascheroni constant, 40 digits.
const EULER_GAMMA_DIGITS: &str = "5772156649015328606065120900824024310422";

#[derive(Clone)]
pub struct Fixed {
    one: BigInt,
    pub pi: BigInt,
    pub ln2: BigInt,
    gamma: BigInt,
}

impl Fixed {
    pub fn new() -> Self {
        let one = BigInt::one() << BITS;
        let atan_inv = |n: i64| {
            // atan(1/n) = sum (-1)^k / ((2k+1) n^(2k+1))
            let n2 = BigInt::from(n * n);
            let mut power = &one / n;
            let mut sum = BigInt::zero();
            let mut k = 0i64;
            while !power.is_zero() {
                let term = &power / (2 * k + 1);
                if k % 2 == 0 {
                    sum += term;
                } else {
                    sum -= term;
                }
                power /= &n2;
                k += 1;
            }
            sum
        };
        let pi = atan_inv(5) * 16 - atan_inv(239) * 4;
        let digits: BigInt = EULER_GAMMA_DIGITS.parse().unwrap();
        let gamma = (digits * &one) / BigInt::from(10).pow(EULER_GAMMA_DIGITS.len() as u32);
        let mut f = Self {
            one: one.clone(),
            pi,
            ln2: BigInt::zero(),
            gamma,
        };
        f.ln2 = f.atanh(&(&one / 3)) * 2;
        f
    }

    fn mul(&self, a: &BigInt, b: &BigInt) -> BigInt {
        (a * b) >> BITS
    }

    fn div(&self, a: &BigInt, b: &BigInt) -> BigInt {
        (a << BITS) / b
    }

    fn from_f64(&self, x: f64) -> BigInt {
        let (mantissa, exponent, sign) = x.integer_decode();
        let m = BigInt::from(mantissa) * sign;
        let shift = exponent as i32 + BITS as i32;
        assert!(shift >= 0);
        m << shift as u32
    }

    pub fn to_f64(&self, a: &BigInt) -> f64 {
        a.to_f64().unwrap() * 2f64.powi(-(BITS as i32))
    }

    fn atanh(&self, t: &BigInt) -> BigInt {
        let t2 = self.mul(t, t);
        let mut power = t.clone();
        let mut sum = BigInt::zero();
        let mut k = 0u32;
        while !power.is_zero() {
            sum += &power / (2 * k + 1);
            power = self.mul(&power, &t2);
            k += 1;
        }
        sum
    }

    /// Natural log of a positive double.
    fn ln(&self, y: f64) -> BigInt {
        let (mantissa, exponent, _) = y.integer_decode();
        // y = r 2^e with r in [1, 2)
        let bits = 64 - mantissa.leading_zeros() as i32;
        let e = exponent as i32 + bits - 1;
        let r = (BigInt::from(mantissa) << BITS) >> (bits - 1) as u32;
        let t = self.div(&(&r - &self.one), &(&r + &self.one));
        self.atanh(&t) * 2 + &self.ln2 * e
    }

    /// `J_n(x)` for n = 0, 1.
    pub fn j(&self, n: u32, x: f64) -> BigInt {
        let half = self.from_f64(x / 2.0);
        let q = self.mul(&half, &half);
        let mut term = if n == 0 { self.one.clone() } else { half };
        let mut sum = BigInt::zero();
        let mut m = 0u64;
        while !term.is_zero() {
            sum += &term;
            term = -self.mul(&term, &q) / BigInt::from((m + 1) * (m + 1 + n as u64));
            m += 1;
        }
        sum
    }

    pub fn y0(&self, x: f64) -> BigInt {
        let half = self.from_f64(x / 2.0);
        let q = self.mul(&half, &half);
        // sum_{m>=1} (-1)^(m+1) H_m (x/2)^(2m) / (m!)^2
        let mut power = self.one.clone();
        let mut harmonic = BigInt::zero();
        let mut sum = BigInt::zero();
        let mut m = 1u64;
        loop {
            power = self.mul(&power, &q) / BigInt::from(m * m);
            harmonic += &self.one / m;
            let term = self.mul(&harmonic, &power);
            if term.is_zero() && power.is_zero() {
                break;
            }
            if m % 2 == 1 {
                sum += term;
            } else {
                sum -= term;
            }
            m += 1;
        }
        let log_part = self.mul(&(self.ln(x / 2.0) + &self.gamma), &self.j(0, x));
        self.div(&((log_part + sum) * 2), &self.pi)
    }

    pub fn y1(&self, x: f64) -> BigInt {
        let half = self.from_f64(x / 2.0);
        let q = self.mul(&half, &half);
        // sum_{m>=0} (-1)^m (psi(m+1) + psi(m+2)) (x/2)^(2m+1) / (m! (m+1)!)
        let mut power = half.clone();
        let mut h_m = BigInt::zero();
        let mut sum = BigInt::zero();
        let mut m = 0u64;
        loop {
            let h_next = &h_m + &self.one / (m + 1);
            let psi_sum = &h_m + &h_next - &self.gamma * 2;
            let term = self.mul(&psi_sum, &power);
            if power.is_zero() {
                break;
            }
            if m % 2 == 0 {
                sum += term;
            } else {
                sum -= term;
            }
            power = self.mul(&power, &q) / BigInt::from((m + 1) * (m + 2));
            h_m = h_next;
            m += 1;
        }
        let xf = self.from_f64(x);
        let a = -self.div(&(&self.one * 2), &self.mul(&self.pi, &xf));
        let b = self.div(&(self.mul(&self.ln(x / 2.0), &self.j(1, x)) * 2), &self.pi);
        let c = self.div(&sum, &self.pi);
        a + b - c
    }

    pub fn eval(&self, kind: BesselKind, x: f64) -> f64 {
        let v = match kind {
            BesselKind::J0 => self.j(0, x),
            BesselKind::J1 => self.j(1, x),
            BesselKind::Y0 => self.y0(x),
            BesselKind::Y1 => self.y1(x),
        };
        self.to_f64(&v)
    }
}


pub const KINDS: [BesselKind; 4] = [BesselKind::J0, BesselKind::J1, BesselKind::Y0, BesselKind::Y1];

/// Sample points: logarithmic below 1, then every 0.05 up to 200.
pub fn sample_points() -> Vec<f64> {
    let mut xs: Vec<f64> = (0..200).map(|i| 10f64.powf(-6.0 + 6.0 * i as f64 / 200.0)).collect();
    xs.extend((20..=4000).map(|i| i as f64 * 0.05));
    xs
}

/// Relative error, measured against the large-argument envelope
/// `sqrt(2 / (pi x))` where the function itself passes through zero.
pub fn scaled_error(got: f64, want: f64, x: f64) -> f64 {
    let scale = if x < 0.5 {
        want.abs()
    } else {
        want.abs().max((2.0 / (std::f64::consts::PI * x)).sqrt())
    };
    (got - want).abs() / scale
}
