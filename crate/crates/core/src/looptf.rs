//! Closed-loop transfer-function model of the human-in-the-loop feedback
//! path, as composable rational functions of `s`.
//!
//! Coefficients are exact polynomial arithmetic, ascending powers of `s`.
//! No pole-zero cancellation is attempted: composition keeps the raw
//! product/sum structure, and comparisons normalize by the leading
//! denominator coefficient.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn poly_trim(mut p: Vec<f64>) -> Vec<f64> {
    while p.len() > 1 && p.last() == Some(&0.0) {
        p.pop();
    }
    p
}

fn poly_is_zero(p: &[f64]) -> bool {
    p.iter().all(|&c| c == 0.0)
}

fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    poly_trim(out)
}

fn poly_sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len().max(b.len())];
    for (i, &x) in a.iter().enumerate() {
        out[i] += x;
    }
    for (i, &y) in b.iter().enumerate() {
        out[i] -= y;
    }
    poly_trim(out)
}

fn poly_eval(p: &[f64], s: Complex64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for &c in p.iter().rev() {
        acc = acc * s + c;
    }
    acc
}

/// A rational transfer function `num(s) / den(s)`, coefficients in
/// ascending powers of `s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTf")]
pub struct RationalTF {
    pub num: Vec<f64>,
    pub den: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTf {
    num: Vec<f64>,
    den: Vec<f64>,
}

impl TryFrom<RawTf> for RationalTF {
    type Error = Error;

    fn try_from(raw: RawTf) -> Result<Self> {
        RationalTF::new(raw.num, raw.den)
    }
}

impl RationalTF {
    pub fn new(num: Vec<f64>, den: Vec<f64>) -> Result<Self> {
        if num.iter().chain(den.iter()).any(|c| !c.is_finite()) {
            return Err(Error::NonFinite { name: "coefficients" });
        }
        let num = poly_trim(if num.is_empty() { vec![0.0] } else { num });
        let den = poly_trim(if den.is_empty() { vec![0.0] } else { den });
        if poly_is_zero(&den) {
            return Err(Error::SingularLoop);
        }
        Ok(Self { num, den })
    }

    /// Constant gain.
    pub fn constant(c: f64) -> Self {
        Self {
            num: vec![c],
            den: vec![1.0],
        }
    }

    /// Unit gain.
    pub fn unity() -> Self {
        Self::constant(1.0)
    }

    /// First-order lag `1 / (1 + tau s)`.
    pub fn first_order_lag(tau: f64) -> Result<Self> {
        if !(tau >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "tau",
                value: tau,
            });
        }
        Self::new(vec![1.0], vec![1.0, tau])
    }

    pub fn is_zero(&self) -> bool {
        poly_is_zero(&self.num)
    }

    /// Product of two rational functions, no cancellation.
    pub fn mul(&self, other: &RationalTF) -> RationalTF {
        RationalTF {
            num: poly_mul(&self.num, &other.num),
            den: poly_mul(&self.den, &other.den),
        }
    }

    /// Coefficients scaled so the leading denominator coefficient is 1,
    /// the canonical form used for coefficient-wise comparison.
    pub fn normalized(&self) -> RationalTF {
        let lead = *self.den.last().unwrap();
        if lead == 0.0 {
            return self.clone();
        }
        RationalTF {
            num: self.num.iter().map(|c| c / lead).collect(),
            den: self.den.iter().map(|c| c / lead).collect(),
        }
    }

    /// Value at `s = i 2 pi f`.
    pub fn eval(&self, f_hz: f64) -> Result<Complex64> {
        let s = Complex64::new(0.0, 2.0 * std::f64::consts::PI * f_hz);
        let den = poly_eval(&self.den, s);
        let num = poly_eval(&self.num, s);
        let den_scale: f64 = self.den.iter().map(|c| c.abs()).sum::<f64>()
            * (1.0 + s.norm()).powi(self.den.len() as i32 - 1);
        if den.norm() <= 1e-300 || den.norm() < 1e-12 * den_scale {
            return Err(Error::PoleEvaluation { frequency: f_hz });
        }
        Ok(num / den)
    }
}

/// `|tf(i 2 pi f)|`, erroring at poles.
pub fn eval_magnitude(tf: &RationalTF, f_hz: f64) -> Result<f64> {
    Ok(tf.eval(f_hz)?.norm())
}

/// Closed-loop map from attack signal to perceived signal:
///
/// ```text
/// G = (F_s F_p F_a H_s) / (1 - F_s F_p F_a H_s H_a)
/// ```
///
/// where the four forward blocks are sensor, processing, actuator and
/// human-sense transfer functions, and `H_a` closes the loop through the
/// human action. Fails when the loop denominator is identically zero.
pub fn compose_g(
    f_s: &RationalTF,
    f_p: &RationalTF,
    f_a: &RationalTF,
    h_s: &RationalTF,
    h_a: &RationalTF,
) -> Result<RationalTF> {
    // L = F_s F_p F_a H_s as a single rational pair
    let l = f_s.mul(f_p).mul(f_a).mul(h_s);
    // G = L / (1 - L H_a) = (num_L den_Ha) / (den_L den_Ha - num_L num_Ha)
    let num = poly_mul(&l.num, &h_a.den);
    let den = poly_sub(&poly_mul(&l.den, &h_a.den), &poly_mul(&l.num, &h_a.num));
    if poly_is_zero(&den) {
        return Err(Error::SingularLoop);
    }
    Ok(RationalTF { num, den })
}

/// Map from attack signal to human action: `P = G H_a`.
pub fn compose_p(g: &RationalTF, h_a: &RationalTF) -> RationalTF {
    g.mul(h_a)
}

/// Illustrative block profiles for exercising the loop algebra.
///
/// These are plausible engineering shapes (first-order lags, constant
/// gains), not identified human or device parameters; any quantitative
/// use should substitute measured transfer functions.
pub mod profiles {
    use super::RationalTF;

    /// Sensor block: 5 ms first-order lag.
    pub fn sensor_lag() -> RationalTF {
        RationalTF::first_order_lag(0.005).expect("fixed tau")
    }

    /// Human sensory pathway: constant sub-unity gain.
    pub fn sensory_gain() -> RationalTF {
        RationalTF::constant(0.9)
    }

    /// Human motor pathway: 150 ms first-order lag with gain 0.6.
    pub fn motor_lag() -> RationalTF {
        RationalTF::new(vec![0.6], vec![1.0, 0.15]).expect("fixed coefficients")
    }
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;

    use super::*;

    fn tf(num: &[f64], den: &[f64]) -> RationalTF {
        RationalTF::new(num.to_vec(), den.to_vec()).unwrap()
    }

    #[test]
    fn scalar_loop_value() {
        // F_s H_s = 0.5, F_p = F_a = 1, H_a = 0.5 -> G = 0.5/0.75 = 2/3
        let g = compose_g(
            &RationalTF::constant(0.5),
            &RationalTF::unity(),
            &RationalTF::unity(),
            &RationalTF::unity(),
            &RationalTF::constant(0.5),
        )
        .unwrap();
        assert_relative_eq!(eval_magnitude(&g, 3.7).unwrap(), 2.0 / 3.0, max_relative = 1e-12);
    }

    #[test]
    fn marginal_loop_is_singular() {
        let one = RationalTF::unity();
        assert!(matches!(
            compose_g(&one, &one, &one, &one, &one),
            Err(Error::SingularLoop)
        ));
    }

    #[test]
    fn open_loop_when_no_action_feedback() {
        let f_s = tf(&[1.0], &[1.0, 0.1]);
        let h_s = RationalTF::constant(0.8);
        let zero = RationalTF::constant(0.0);
        let g = compose_g(&f_s, &RationalTF::unity(), &RationalTF::unity(), &h_s, &zero).unwrap();
        let expected = f_s.mul(&h_s);
        assert_eq!(g.normalized(), expected.normalized());
    }

    #[test]
    fn compose_p_examples() {
        let g = RationalTF::constant(2.0 / 3.0);
        let p = compose_p(&g, &RationalTF::constant(0.5));
        assert_relative_eq!(eval_magnitude(&p, 1.0).unwrap(), 1.0 / 3.0, max_relative = 1e-12);

        let p = compose_p(&g, &RationalTF::constant(0.0));
        assert!(p.is_zero());
    }

    #[test]
    fn simplified_form_matches_general_composition() {
        // with F_p = F_a = 1 the general composition must collapse to
        // the simplified two-block loop, coefficient for coefficient
        let f_s = tf(&[1.0], &[1.0, 0.05]);
        let h_s = tf(&[0.9], &[1.0, 0.2]);
        let h_a = tf(&[0.6], &[1.0, 0.4]);
        let general = compose_g(
            &f_s,
            &RationalTF::unity(),
            &RationalTF::unity(),
            &h_s,
            &h_a,
        )
        .unwrap();
        // direct construction of F_s H_s / (1 - F_s H_s H_a)
        let l = f_s.mul(&h_s);
        let num = poly_mul(&l.num, &h_a.den);
        let den = poly_sub(&poly_mul(&l.den, &h_a.den), &poly_mul(&l.num, &h_a.num));
        let simplified = RationalTF { num, den };
        let a = general.normalized();
        let b = simplified.normalized();
        assert_eq!(a.num.len(), b.num.len());
        for (x, y) in a.num.iter().zip(&b.num).chain(a.den.iter().zip(&b.den)) {
            assert_relative_eq!(x, y, max_relative = 1e-12);
        }
    }

    #[test]
    fn product_holds_coefficient_wise() {
        let g = tf(&[1.0, 2.0], &[1.0, 0.5, 0.25]);
        let h_a = tf(&[0.3, 0.7], &[1.0, 1.0]);
        let p = compose_p(&g, &h_a);
        assert_eq!(p.num, poly_mul(&g.num, &h_a.num));
        assert_eq!(p.den, poly_mul(&g.den, &h_a.den));
    }

    #[test]
    fn magnitude_examples() {
        let c = RationalTF::constant(3.25);
        for f in [0.1, 1.0, 50.0] {
            assert_relative_eq!(eval_magnitude(&c, f).unwrap(), 3.25, max_relative = 1e-12);
        }

        // 1/s at f = 1/(2 pi): |1/i| = 1
        let integrator = tf(&[1.0], &[0.0, 1.0]);
        let f = 1.0 / (2.0 * std::f64::consts::PI);
        assert_relative_eq!(eval_magnitude(&integrator, f).unwrap(), 1.0, max_relative = 1e-12);

        // first-order low-pass at its corner: -3 dB
        let lp = tf(&[1.0], &[1.0, 1.0]);
        assert_relative_eq!(
            eval_magnitude(&lp, f).unwrap(),
            std::f64::consts::FRAC_1_SQRT_2,
            max_relative = 1e-12
        );
    }

    #[test]
    fn pole_evaluation_is_error() {
        let integrator = tf(&[1.0], &[0.0, 1.0]);
        assert!(matches!(
            eval_magnitude(&integrator, 0.0),
            Err(Error::PoleEvaluation { .. })
        ));
    }

    #[test]
    fn magnitude_is_smooth_away_from_poles() {
        let lp = tf(&[1.0, 0.2], &[1.0, 0.8, 0.1]);
        let h = 1e-5;
        for f in [0.05, 0.3, 2.0, 9.0] {
            let m0 = eval_magnitude(&lp, f - h).unwrap();
            let m1 = eval_magnitude(&lp, f).unwrap();
            let m2 = eval_magnitude(&lp, f + h).unwrap();
            // second difference stays tiny relative to the value
            assert!(((m2 - 2.0 * m1 + m0) / m1).abs() < 1e-6);
        }
    }

    #[test]
    fn zero_denominator_rejected() {
        assert!(matches!(
            RationalTF::new(vec![1.0], vec![0.0, 0.0]),
            Err(Error::SingularLoop)
        ));
    }

    #[test]
    fn illustrative_profiles_close_the_loop() {
        let g = compose_g(
            &profiles::sensor_lag(),
            &RationalTF::unity(),
            &RationalTF::unity(),
            &profiles::sensory_gain(),
            &profiles::motor_lag(),
        )
        .unwrap();
        // DC gain of 0.9/(1 - 0.9*0.6) = 1.9565...
        assert_relative_eq!(
            eval_magnitude(&g, 0.0).unwrap(),
            0.9 / (1.0 - 0.54),
            max_relative = 1e-12
        );
        // attack influence rolls off past both lags
        assert!(eval_magnitude(&g, 100.0).unwrap() < eval_magnitude(&g, 1.0).unwrap());
        let p = compose_p(&g, &profiles::motor_lag());
        assert_relative_eq!(
            eval_magnitude(&p, 0.0).unwrap(),
            0.9 / (1.0 - 0.54) * 0.6,
            max_relative = 1e-12
        );
    }

    #[test]
    fn json_round_trip() {
        let json = r#"{"num":[1.0,0.5],"den":[1.0,2.0,1.0]}"#;
        let tf: RationalTF = serde_json::from_str(json).unwrap();
        assert_eq!(tf.num, vec![1.0, 0.5]);
        assert!(serde_json::from_str::<RationalTF>(r#"{"num":[1.0],"den":[0.0]}"#).is_err());
    }
}
