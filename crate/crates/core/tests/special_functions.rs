//! Mittag-Leffler and Gamma accuracy against extended-precision references.
//!
//! Reference values were produced offline with mpmath: the power series in
//! working precision large enough to absorb its cancellation (`series`), or
//! mpmath's tanh-sinh quadrature of the real-line integral representation at
//! 40 digits where the series would need thousands of digits (`integral`).

use nifrde::error::Error;
use nifrde::special_functions::{gamma, ml_one, ml_two, MLParams};
use proptest::prelude::*;

const REFERENCE: &[(f64, f64, f64, f64)] = &[
    (0.2, 1.0, -50.0, 0.0169137101477860201), // integral
    (0.2, 1.0, -30.0, 0.0279015458348311469), // integral
    (0.2, 1.0, -10.0, 0.0796078413684350779), // integral
    (0.2, 1.0, -5.0, 0.148193441246119199), // integral
    (0.2, 1.0, -2.5, 0.259810093370606226), // series
    (0.2, 1.0, -1.0, 0.471100688933482949), // series
    (0.2, 1.0, -0.3, 0.75126923002399159), // series
    (0.2, 1.0, 0.7, 3.39453213267970926), // series
    (0.2, 1.0, 2.0, 394814800913402.814), // series
    (0.5, 1.0, -50.0, 0.0112815362653237725), // integral
    (0.5, 1.0, -30.0, 0.0187958888614167515), // integral
    (0.5, 1.0, -10.0, 0.0561409927438225859), // series
    (0.5, 1.0, -5.0, 0.110704637733068626), // series
    (0.5, 1.0, -2.5, 0.210806364061143581), // series
    (0.5, 1.0, -1.0, 0.427583576155807004), // series
    (0.5, 1.0, -0.3, 0.734599334567655142), // series
    (0.5, 1.0, 0.7, 2.738702102561317), // series
    (0.5, 1.0, 2.0, 108.940904389977972), // series
    (0.5, 1.0, 5.0, 144009798674.66104), // series
    (0.8, 1.0, -50.0, 0.0044677761579029933), // series
    (0.8, 1.0, -30.0, 0.00757586079921921038), // series
    (0.8, 1.0, -10.0, 0.0249028197619765374), // series
    (0.8, 1.0, -5.0, 0.0575953847621522538), // series
    (0.8, 1.0, -2.5, 0.143417382584392337), // series
    (0.8, 1.0, -1.0, 0.386948578618976851), // series
    (0.8, 1.0, -0.3, 0.73274640256857662), // series
    (0.8, 1.0, 0.7, 2.24898466149124797), // series
    (0.8, 1.0, 2.0, 13.415748887819017), // series
    (0.8, 1.0, 5.0, 2208.06435758644687), // series
    (1.0, 1.0, -50.0, 1.92874984796391778e-22), // series
    (1.0, 1.0, -30.0, 9.3576229688401746e-14), // series
    (1.0, 1.0, -10.0, 0.0000453999297624848515), // series
    (1.0, 1.0, -5.0, 0.0067379469990854671), // series
    (1.0, 1.0, -2.5, 0.0820849986238987952), // series
    (1.0, 1.0, -1.0, 0.367879441171442322), // series
    (1.0, 1.0, -0.3, 0.740818220681717866), // series
    (1.0, 1.0, 0.7, 2.01375270747047652), // series
    (1.0, 1.0, 2.0, 7.38905609893065023), // series
    (1.0, 1.0, 5.0, 148.413159102576603), // series
    (0.5, 1.5, -40.0, 0.0246474916004155547), // integral
    (0.5, 1.5, -12.0, 0.0794288149154255198), // series
    (0.5, 1.5, -4.0, 0.215750135593734653), // series
    (0.5, 1.5, -1.0, 0.572416423844192996), // series
    (0.5, 1.5, 1.0, 4.00898008076228347), // series
    (0.5, 1.5, 3.0, 5401.66295133319554), // series
    (0.3, 1.3, -40.0, 0.0245255119683380326), // integral
    (0.3, 1.3, -12.0, 0.0782386736669567113), // integral
    (0.3, 1.3, -4.0, 0.208374563921120838), // series
    (0.3, 1.3, -1.0, 0.543405591670309331), // series
    (0.3, 1.3, 1.0, 7.04067559696705801), // series
    (0.3, 1.3, 3.0, 90678702687502933.4), // series
    (0.8, 1.8, -40.0, 0.0248594816734034158), // series
    (0.8, 1.8, -12.0, 0.0816443195652542635), // series
    (0.8, 1.8, -4.0, 0.23073783001741381), // series
    (0.8, 1.8, -1.0, 0.613051421381023149), // series
    (0.8, 1.8, 1.0, 2.29456923487901856), // series
    (0.8, 1.8, 3.0, 21.2505959952341749), // series
    (0.7, 0.7, -40.0, 0.000152194921125852772), // series
    (0.7, 0.7, -12.0, 0.00184808713237387827), // series
    (0.7, 0.7, -4.0, 0.0197227337897719273), // series
    (0.7, 0.7, -1.0, 0.210393346389023707), // series
    (0.7, 0.7, 1.0, 3.95077833070809555), // series
    (0.7, 0.7, 3.0, 279.094778340691283), // series
    (0.5, 2.5, -40.0, 0.0243101677028155644), // integral
    (0.5, 2.5, -12.0, 0.0760489558876382843), // series
    (0.5, 2.5, -4.0, 0.19296068553113888), // series
    (0.5, 2.5, -1.0, 0.444037256748680422), // series
    (0.5, 2.5, 1.0, 1.88060091366677089), // series
    (0.5, 2.5, 3.0, 599.726063574011114), // series
    (2.0, 1.5, -40.0, 0.286012573390006601), // series
    (2.0, 1.5, -12.0, -0.500225966298819389), // series
    (2.0, 1.5, -4.0, 0.198312661612229172), // series
    (2.0, 1.5, -1.0, 0.846056786724152914), // series
    (2.0, 1.5, 1.0, 1.44892797907231598), // series
    (2.0, 1.5, 3.0, 2.21815467486924514), // series
    (2.0, 1.0, -40.0, 0.99914438304692955), // series
    (2.0, 1.0, -12.0, -0.948443195841827761), // series
    (2.0, 1.0, -4.0, -0.416146836547142387), // series
    (2.0, 1.0, -1.0, 0.540302305868139717), // series
    (2.0, 1.0, 1.0, 1.54308063481524378), // series
    (2.0, 1.0, 3.0, 2.91457744017592816), // series
];

/// 500-term partial sums of Σ z^k/Γ(qk+1), evaluated at 50 digits.
const PARTIAL_SUMS: &[(f64, f64, f64)] = &[
    (0.25, -1.0, 0.46385276080171328694),
    (0.25, -0.5, 0.63767051920039335655),
    (0.25, 0.5, 2.0796142210090508739),
    (0.25, 1.0, 9.5541074007228536457),
    (0.5, -1.0, 0.42758357615580700441),
    (0.5, -0.5, 0.61569034419292587487),
    (0.5, 0.5, 1.9523604891825570933),
    (0.5, 1.0, 5.0089800807622834663),
    (0.75, -1.0, 0.39310830281575406177),
    (0.75, -0.5, 0.60379034509524675559),
    (0.75, 0.5, 1.7937773945015026827),
    (0.75, 1.0, 3.4858662200517438713),
];

#[test]
fn matches_extended_precision_reference() {
    for &(alpha, beta, z, expected) in REFERENCE {
        let got = ml_two(MLParams::new(alpha, beta).unwrap(), z)
            .unwrap_or_else(|e| panic!("E_{{{alpha},{beta}}}({z}) failed: {e}"));
        let rel = ((got - expected) / expected).abs();
        assert!(rel <= 1e-10, "E_{{{alpha},{beta}}}({z}) = {got}, expected {expected}, rel {rel:e}");
    }
}

#[test]
fn agrees_with_long_partial_sums_near_origin() {
    for &(q, z, expected) in PARTIAL_SUMS {
        let got = ml_one(q, z).unwrap();
        assert!((got - expected).abs() <= 1e-12, "q={q} z={z}: {got} vs {expected}");
    }
}

/// erfc(x) by composite Simpson on [x, x + 12], accurate far below 1e-12.
fn erfc_by_quadrature(x: f64) -> f64 {
    let n = 20_000;
    let h = 12.0 / n as f64;
    let f = |t: f64| (-t * t).exp();
    let mut s = f(x) + f(x + 12.0);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(x + i as f64 * h);
    }
    s * h / 3.0 * 2.0 / std::f64::consts::PI.sqrt()
}

#[test]
fn half_order_matches_erfc_identity() {
    // E_{1/2}(z) = e^{z²} erfc(-z)
    for z in [-1.0f64, -2.0, -3.5] {
        let oracle = (z * z).exp() * erfc_by_quadrature(-z);
        let got = ml_one(0.5, z).unwrap();
        assert!(((got - oracle) / oracle).abs() < 1e-10, "z={z}: {got} vs {oracle}");
    }
    assert!((ml_one(0.5f64, -1.0).unwrap() - 0.42758357).abs() < 1e-8);
}

#[test]
fn gamma_half_integer_values() {
    let sqrt_pi = std::f64::consts::PI.sqrt();
    assert!((gamma(0.5).unwrap() - sqrt_pi).abs() < 1e-14);
    assert!((gamma(1.5).unwrap() - sqrt_pi / 2.0).abs() < 1e-14);
    assert!((gamma(4.5f64).unwrap() - 11.631_728_396_567_45).abs() < 1e-11);
    assert!(matches!(gamma(-3.0), Err(Error::Pole(_))));
}

proptest! {
    #[test]
    fn negative_argument_bounded_by_one(q in 0.05f64..0.999, x in 0.0f64..50.0) {
        let v = ml_one(q, -x).unwrap();
        prop_assert!(v > 0.0, "E_{q}(-{x}) = {v}");
        prop_assert!(v <= 1.0);
        if x > 0.0 {
            prop_assert!(v < 1.0);
        }
    }

    #[test]
    fn one_parameter_is_beta_one(q in 0.2f64..1.0, z in -20.0f64..2.0) {
        let a = ml_one(q, z).unwrap();
        let b = ml_two(MLParams::new(q, 1.0).unwrap(), z).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn exponential_special_case(z in -5.0f64..5.0) {
        let v = ml_one(1.0, z).unwrap();
        prop_assert!((v - z.exp()).abs() <= 1e-10 * z.exp());
    }
}
