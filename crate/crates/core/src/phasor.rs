//! Branch-free sine/cosine for the inner loops of signature evaluation.
//!
//! Cody–Waite reduction by π/2 in three parts followed by the fdlibm kernel
//! polynomials on [−π/4, π/4]. Accurate to a couple of ulp for |x| < 1e6,
//! which is far beyond any phase produced by the array models.

#[cfg(test)]
use crate::Complex;

const TWO_OVER_PI: f64 = 0.636_619_772_367_581_4;
const PIO2_1: f64 = 1.570_796_326_734_125_6;
const PIO2_2: f64 = 6.077_100_506_303_966e-11;
const PIO2_3: f64 = 2.022_266_248_795_950_6e-21;

const S1: f64 = -1.666_666_666_666_663_2e-1;
const S2: f64 = 8.333_333_333_322_49e-3;
const S3: f64 = -1.984_126_982_985_795e-4;
const S4: f64 = 2.755_731_370_707_007e-6;
const S5: f64 = -2.505_076_025_340_686_3e-8;
const S6: f64 = 1.589_690_995_211_55e-10;

const C1: f64 = 4.166_666_666_666_660_2e-2;
const C2: f64 = -1.388_888_888_887_411e-3;
const C3: f64 = 2.480_158_728_947_673e-5;
const C4: f64 = -2.755_731_435_139_066_3e-7;
const C5: f64 = 2.087_572_321_298_175e-9;
const C6: f64 = -1.135_964_755_778_819_5e-11;

/// (sin x, cos x).
#[cfg(test)]
#[inline(always)]
pub(crate) fn sin_cos(x: f64) -> (f64, f64) {
    let j = (x * TWO_OVER_PI).round();
    let r = ((x - j * PIO2_1) - j * PIO2_2) - j * PIO2_3;
    let z = r * r;
    let s = r + r * z * (S1 + z * (S2 + z * (S3 + z * (S4 + z * (S5 + z * S6)))));
    let c = 1.0 - 0.5 * z + z * z * (C1 + z * (C2 + z * (C3 + z * (C4 + z * (C5 + z * C6)))));
    let q = (j as i64) & 3;
    let swap = q & 1 == 1;
    let (ss, cc) = if swap { (c, s) } else { (s, c) };
    let sin_sign = if q >= 2 { -1.0 } else { 1.0 };
    let cos_sign = if q == 1 || q == 2 { -1.0 } else { 1.0 };
    (sin_sign * ss, cos_sign * cc)
}

/// Round-to-nearest shifter: adding it leaves the integer part in the low
/// mantissa bits.
const SHIFTER: f64 = 6_755_399_441_055_744.0;

/// Fills `re`, `im` with cos(phase), −sin(phase). Same kernel as [`sin_cos`],
/// written without branches so the loop vectorizes.
#[inline]
pub(crate) fn cis_neg_into(phase: &[f64], re: &mut [f64], im: &mut [f64]) {
    for ((&x, cr), ci) in phase.iter().zip(re.iter_mut()).zip(im.iter_mut()) {
        let t = x * TWO_OVER_PI + SHIFTER;
        let q = t.to_bits();
        let j = t - SHIFTER;
        let r = ((x - j * PIO2_1) - j * PIO2_2) - j * PIO2_3;
        let z = r * r;
        let s = r + r * z * (S1 + z * (S2 + z * (S3 + z * (S4 + z * (S5 + z * S6)))));
        let c = 1.0 - 0.5 * z + z * z * (C1 + z * (C2 + z * (C3 + z * (C4 + z * (C5 + z * C6)))));
        let mask = 0u64.wrapping_sub(q & 1);
        let (sb, cb) = (s.to_bits(), c.to_bits());
        let ss = f64::from_bits((cb & mask) | (sb & !mask));
        let cc = f64::from_bits((sb & mask) | (cb & !mask));
        let sin_flip = (q & 2) << 62;
        let cos_flip = (q.wrapping_add(1) & 2) << 62;
        *cr = f64::from_bits(cc.to_bits() ^ cos_flip);
        // −sin: flip the sign once more.
        *ci = f64::from_bits(ss.to_bits() ^ sin_flip ^ (1 << 63));
    }
}

/// exp(-j·phase).
#[cfg(test)]
#[inline(always)]
pub(crate) fn cis_neg(phase: f64) -> Complex {
    let (s, c) = sin_cos(phase);
    Complex::new(c, -s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn quadrant_boundaries() {
        let h = std::f64::consts::FRAC_PI_4;
        for k in -16..=16 {
            for d in [-1e-12, 0.0, 1e-12] {
                let x = k as f64 * h + d;
                let (s, c) = sin_cos(x);
                assert!((s - x.sin()).abs() < 5e-16, "{x}");
                assert!((c - x.cos()).abs() < 5e-16, "{x}");
            }
        }
        assert_eq!(sin_cos(0.0), (0.0, 1.0));
    }

    #[test]
    fn slice_kernel_matches_scalar() {
        let xs: Vec<f64> = (-4000..4000).map(|i| i as f64 * 0.37 + 0.011).collect();
        let mut re = vec![0.0; xs.len()];
        let mut im = vec![0.0; xs.len()];
        cis_neg_into(&xs, &mut re, &mut im);
        for (i, &x) in xs.iter().enumerate() {
            let c = cis_neg(x);
            assert_eq!((re[i], im[i]), (c.re, c.im), "{x}");
        }
    }

    proptest! {
        #[test]
        fn matches_std(x in -1e4f64..1e4) {
            let (s, c) = sin_cos(x);
            prop_assert!((s - x.sin()).abs() < 1e-15);
            prop_assert!((c - x.cos()).abs() < 1e-15);
        }

        #[test]
        fn small_arguments(x in -1.0f64..1.0) {
            let (s, c) = sin_cos(x);
            prop_assert!((s - x.sin()).abs() <= 2.0 * f64::EPSILON * x.abs().max(1e-300));
            prop_assert!((c - x.cos()).abs() <= 2.0 * f64::EPSILON);
        }
    }
}
