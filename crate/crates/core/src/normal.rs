//! Standard normal distribution function and upper tail.
//!
//! Cody's rational Chebyshev approximations (ACM TOMS 715), with the
//! `exp(-x²/2)` factor split into a 1/16-grid part and a remainder so that the
//! upper tail keeps full relative precision far into the tail. The upper tail
//! is never formed as `1 - cdf`.

const A: [f64; 5] = [
    2.235_252_035_460_683_928_7,
    161.028_231_068_555_878_81,
    1_067.689_485_460_370_958_2,
    18_154.981_253_343_561_249,
    0.065_682_337_918_207_449_113,
];
const B: [f64; 4] = [
    47.202_581_904_688_241_87,
    976.098_551_737_776_693_22,
    10_260.932_208_618_978_205,
    45_507.789_335_026_729_956,
];
const C: [f64; 9] = [
    0.398_941_512_088_134_667_64,
    8.883_149_794_388_375_941_2,
    93.506_656_132_177_855_979,
    597.270_276_394_800_262_26,
    2_494.537_585_290_372_671_1,
    6_848.190_450_536_282_332_6,
    11_602.651_437_647_350_124,
    9_842.714_838_383_978_021_8,
    1.076_557_677_372_019_231_7e-8,
];
const D: [f64; 8] = [
    22.266_688_044_328_115_691,
    235.387_901_782_624_998_61,
    1_519.377_599_407_554_805,
    6_485.558_298_266_760_755,
    18_615.571_640_885_098_091,
    34_900.952_721_145_977_266,
    38_912.003_286_093_271_411,
    19_685.429_676_859_990_727,
];
const P: [f64; 6] = [
    0.215_898_534_057_956_99,
    0.127_401_161_160_247_363_9,
    0.022_235_277_870_649_807,
    0.001_421_619_193_227_893_466,
    2.911_287_495_116_879_2e-5,
    0.023_073_441_764_940_173_03,
];
const Q: [f64; 5] = [
    1.284_260_096_144_911_21,
    0.468_238_212_480_865_118,
    0.065_988_137_868_928_551_5,
    0.003_782_396_332_027_582_44,
    7.297_515_550_839_662_05e-5,
];

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_677_94;
const SQRT_32: f64 = 5.656_854_249_492_380_195_2;

/// `exp(-y²/2)` evaluated as `exp(-t²/2)·exp(-(y-t)(y+t)/2)` with `t` on a 1/16 grid.
fn gauss_factor(y: f64) -> f64 {
    let t = (y * 16.0).trunc() / 16.0;
    let del = (y - t) * (y + t);
    (-t * t * 0.5).exp() * (-del * 0.5).exp()
}

/// Returns `(Φ(x), 1 − Φ(x))`, each to full relative precision.
pub fn cdf_both(x: f64) -> (f64, f64) {
    if x.is_nan() {
        return (f64::NAN, f64::NAN);
    }
    let y = x.abs();
    if y <= 0.674_489_75 {
        let (xnum, xden) = if y > f64::EPSILON * 0.5 {
            let xsq = x * x;
            let mut xnum = A[4] * xsq;
            let mut xden = xsq;
            for i in 0..3 {
                xnum = (xnum + A[i]) * xsq;
                xden = (xden + B[i]) * xsq;
            }
            (xnum, xden)
        } else {
            (0.0, 0.0)
        };
        let temp = x * (xnum + A[3]) / (xden + B[3]);
        return (0.5 + temp, 0.5 - temp);
    }

    // `tail` is the probability beyond |x| on the far side.
    let tail = if y <= SQRT_32 {
        let mut xnum = C[8] * y;
        let mut xden = y;
        for i in 0..7 {
            xnum = (xnum + C[i]) * y;
            xden = (xden + D[i]) * y;
        }
        let temp = (xnum + C[7]) / (xden + D[7]);
        gauss_factor(y) * temp
    } else if y.is_infinite() {
        0.0
    } else {
        let xsq = 1.0 / (x * x);
        let mut xnum = P[5] * xsq;
        let mut xden = xsq;
        for i in 0..4 {
            xnum = (xnum + P[i]) * xsq;
            xden = (xden + Q[i]) * xsq;
        }
        let temp = xsq * (xnum + P[4]) / (xden + Q[4]);
        let temp = (FRAC_1_SQRT_2PI - temp) / y;
        gauss_factor(y) * temp
    };
    if x > 0.0 {
        (1.0 - tail, tail)
    } else {
        (tail, 1.0 - tail)
    }
}

/// Φ(x).
pub fn cdf(x: f64) -> f64 {
    cdf_both(x).0
}

/// 1 − Φ(x).
pub fn upper_tail(x: f64) -> f64 {
    cdf_both(x).1
}

#[cfg(test)]
mod tests {
    use super::*;

    // 40-digit reference values of 1 − Φ(x).
    const REFERENCE: &[(f64, f64)] = &[
        (0.0, 0.5),
        (0.1, 0.460_172_162_722_971_016_33),
        (0.5, 0.308_537_538_725_986_896_36),
        (0.674_489_75, 0.250_000_000_062_310_184_64),
        (0.7, 0.241_963_652_223_073_028_62),
        (1.0, 0.158_655_253_931_457_051_41),
        (1.5, 0.066_807_201_268_858_066_004),
        (1.959_964, 0.024_999_999_096_442_401_994),
        (2.0, 0.022_750_131_948_179_207_2),
        (2.5, 0.006_209_665_325_776_135_167),
        (3.0, 0.001_349_898_031_630_094_526_7),
        (4.0, 3.167_124_183_311_992_125_4e-5),
        (5.0, 2.866_515_718_791_939_116_7e-7),
        (5.65, 8.022_391_850_663_497_599_1e-9),
        (5.7, 5.990_371_401_063_528_187_8e-9),
        (6.0, 9.865_876_450_376_981_407e-10),
        (7.0, 1.279_812_543_885_835_004_4e-12),
        (8.0, 6.220_960_574_271_784_123_5e-16),
        (10.0, 7.619_853_024_160_526_066e-24),
        (20.0, 2.753_624_118_606_233_695_1e-89),
        (37.0, 5.725_571_222_524_576_822_7e-300),
    ];

    #[test]
    fn upper_tail_relative_accuracy() {
        for &(x, want) in REFERENCE {
            let got = upper_tail(x);
            let rel = ((got - want) / want).abs();
            let tol = if x <= 8.0 { 1e-15 } else { 1e-14 };
            assert!(rel <= tol, "x = {x}: got {got:e}, want {want:e}, rel {rel:e}");
        }
    }

    #[test]
    fn lower_tail_by_symmetry() {
        for &(x, want) in REFERENCE {
            let got = cdf(-x);
            assert!(((got - want) / want).abs() <= 1e-14, "x = {x}");
        }
    }

    #[test]
    fn edge_values() {
        assert_eq!(upper_tail(0.0), 0.5);
        assert_eq!(upper_tail(f64::INFINITY), 0.0);
        assert_eq!(cdf(f64::NEG_INFINITY), 0.0);
        assert!(upper_tail(f64::NAN).is_nan());
    }
}
