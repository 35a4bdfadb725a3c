//! Globally adaptive Gauss–Kronrod (7/15) quadrature on a finite interval.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

// Gauss weights for the odd-indexed Kronrod nodes (and the centre).
const WG: [f64; 4] =
    [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

#[derive(Debug, Clone, Copy)]
pub(crate) struct QuadResult {
    pub value: f64,
    pub error: f64,
}

#[derive(Debug, Clone, Copy)]
struct Rule {
    value: f64,
    error: f64,
}

// A segment keeps the GK15 results on both of its halves; its value is their
// sum and its error also accounts for the disagreement with the whole-segment
// rule, which catches jumps that fall between Kronrod nodes.
#[derive(Debug, Clone, Copy)]
struct Segment {
    lo: f64,
    hi: f64,
    left: Rule,
    right: Rule,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error).then_with(|| other.lo.total_cmp(&self.lo))
    }
}

fn gk15<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64) -> Rule {
    let centre = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let fc = f(centre);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (j, (&x, &wk)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = half * x;
        let pair = f(centre - dx) + f(centre + dx);
        kronrod += wk * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Rule { value: kronrod * half, error: ((kronrod - gauss) * half).abs() }
}

fn segment<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64, whole: Rule) -> Segment {
    let mid = 0.5 * (lo + hi);
    let left = gk15(f, lo, mid);
    let right = gk15(f, mid, hi);
    let value = left.value + right.value;
    let error = (left.error + right.error).max(whole.error).max((whole.value - value).abs());
    Segment { lo, hi, left, right, value, error }
}

/// Integrate `f` over `[lo, hi]` to an absolute tolerance `tol`.
///
/// Bisects the segment with the largest local error until the summed error
/// estimate is below `tol` or `max_segments` is reached.
#[cfg_attr(not(test), allow(dead_code))]
pub(crate) fn integrate<F: Fn(f64) -> f64>(
    f: F,
    lo: f64,
    hi: f64,
    tol: f64,
    max_segments: usize,
) -> Result<QuadResult> {
    integrate_with_points(f, lo, hi, &[], tol, max_segments)
}

/// As [`integrate`], with the interval split up front at `points` (known
/// discontinuities of `f` or its derivatives). Points outside `(lo, hi)` are ignored.
pub(crate) fn integrate_with_points<F: Fn(f64) -> f64>(
    f: F,
    lo: f64,
    hi: f64,
    points: &[f64],
    tol: f64,
    max_segments: usize,
) -> Result<QuadResult> {
    if lo == hi {
        return Ok(QuadResult { value: 0.0, error: 0.0 });
    }
    let mut cuts: Vec<f64> = points.iter().copied().filter(|&p| p > lo && p < hi).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let edges: Vec<f64> = std::iter::once(lo).chain(cuts).chain(std::iter::once(hi)).collect();

    let mut heap = BinaryHeap::new();
    for w in edges.windows(2) {
        heap.push(segment(&f, w[0], w[1], gk15(&f, w[0], w[1])));
    }
    let mut value: f64 = heap.iter().map(|s| s.value).sum();
    let mut error: f64 = heap.iter().map(|s| s.error).sum();

    loop {
        while error > tol || error.is_nan() {
            if heap.len() >= max_segments {
                return Err(Error::Computation {
                    message: format!("adaptive quadrature exceeded {max_segments} segments"),
                    best_estimate: value,
                    error_estimate: error,
                });
            }
            let worst = heap.pop().expect("heap is never empty");
            let mid = 0.5 * (worst.lo + worst.hi);
            if mid <= worst.lo || mid >= worst.hi {
                // Interval no longer divisible in floating point.
                return Err(Error::Computation {
                    message: "adaptive quadrature reached floating-point resolution".into(),
                    best_estimate: value,
                    error_estimate: error,
                });
            }
            let left = segment(&f, worst.lo, mid, worst.left);
            let right = segment(&f, mid, worst.hi, worst.right);
            value += left.value + right.value - worst.value;
            error += left.error + right.error - worst.error;
            heap.push(left);
            heap.push(right);
        }
        // Re-sum; the running updates can drift when large errors cancel.
        value = heap.iter().map(|s| s.value).sum();
        error = heap.iter().map(|s| s.error).sum();
        if error <= tol {
            break;
        }
        if !error.is_finite() {
            return Err(Error::Computation {
                message: "adaptive quadrature produced a non-finite error estimate".into(),
                best_estimate: value,
                error_estimate: error,
            });
        }
    }

    Ok(QuadResult { value, error })
}
