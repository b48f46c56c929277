//! Double-double accumulation (error-free transformations).
//!
//! Only what the symmetric-function recurrence needs: products by an `f64`
//! and sums of two double-doubles. Dekker splitting keeps this independent of
//! hardware FMA.

#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct Dd {
    hi: f64,
    lo: f64,
}

const SPLITTER: f64 = 134_217_729.0; // 2^27 + 1

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let e = (a - (s - bb)) + (b - bb);
    (s, e)
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn split(a: f64) -> (f64, f64) {
    let t = SPLITTER * a;
    let hi = t - (t - a);
    (hi, a - hi)
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let (ah, al) = split(a);
    let (bh, bl) = split(b);
    let e = ((ah * bh - p) + ah * bl + al * bh) + al * bl;
    (p, e)
}

impl Dd {
    pub(crate) const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub(crate) const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };

    #[inline]
    pub(crate) fn from_f64(x: f64) -> Dd {
        Dd { hi: x, lo: 0.0 }
    }

    #[inline]
    pub(crate) fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    #[inline]
    pub(crate) fn mul_f64(self, x: f64) -> Dd {
        let (p, e) = two_prod(self.hi, x);
        let (hi, lo) = quick_two_sum(p, e + self.lo * x);
        Dd { hi, lo }
    }

    #[inline]
    pub(crate) fn add(self, other: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, other.hi);
        let (t, f) = two_sum(self.lo, other.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        Dd { hi, lo }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_lost_low_order_bits() {
        // 1 + 2^-70 - 1 vanishes in plain f64
        let tiny = 2f64.powi(-70);
        let s = Dd::ONE.add(Dd::from_f64(tiny)).add(Dd::from_f64(-1.0));
        assert_eq!(s.to_f64(), tiny);
    }

    #[test]
    fn product_is_exact_for_split_operands() {
        let a = 1.0 + 2f64.powi(-30);
        let p = Dd::from_f64(a).mul_f64(a);
        // (1 + e)^2 = 1 + 2e + e^2, e^2 = 2^-60 is below f64 resolution at 1
        let back = p.add(Dd::from_f64(-1.0)).add(Dd::from_f64(-2.0 * 2f64.powi(-30)));
        assert_eq!(back.to_f64(), 2f64.powi(-60));
    }
}
