/// Double-double accumulator for sums of integer ratios. Each ratio enters
/// with its rounding error, so the mean is rounded once, at the end.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Accum {
    hi: f64,
    lo: f64,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

impl Accum {
    pub(crate) fn add(&mut self, hi: f64, lo: f64) {
        let (s, e) = two_sum(self.hi, hi);
        let e = e + self.lo + lo;
        let hi = s + e;
        self.lo = e - (hi - s);
        self.hi = hi;
    }

    /// Adds `num / den`.
    pub(crate) fn add_ratio(&mut self, num: f64, den: f64) {
        let q = num / den;
        self.add(q, (-q).mul_add(den, num) / den);
    }

    /// The accumulated sum divided by `d`, rounded to nearest.
    pub(crate) fn mean(self, d: f64) -> f64 {
        let q = self.hi / d;
        q + ((-q).mul_add(d, self.hi) + self.lo) / d
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thirds_round_once() {
        let mut a = Accum::default();
        a.add_ratio(1.0, 1.0);
        a.add_ratio(2.0, 3.0);
        assert_eq!(a.mean(2.0), 5.0 / 6.0);
        assert_ne!((1.0 + 2.0 / 3.0) / 2.0, 5.0 / 6.0);
    }

    #[test]
    fn many_small_terms() {
        let mut a = Accum::default();
        for _ in 0..10 {
            a.add_ratio(1.0, 10.0);
        }
        assert_eq!(a.mean(1.0), 1.0);
    }
}
