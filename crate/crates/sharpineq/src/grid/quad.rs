//! Adaptive Gauss–Kronrod quadrature on finite and infinite intervals, and
//! nested product rules for low-dimensional regions.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// Abscissae of the 15-point Kronrod rule on [-1, 1] (non-negative half).
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
/// Weights of the embedded 7-point Gauss rule (nodes XGK[1], XGK[3], XGK[5], XGK[7]).
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Result of a quadrature: value and a non-negative error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
}

impl QuadResult {
    pub fn zero() -> Self {
        QuadResult { value: 0.0, error: 0.0 }
    }
}

impl std::ops::Add for QuadResult {
    type Output = QuadResult;
    fn add(self, o: QuadResult) -> QuadResult {
        QuadResult {
            value: self.value + o.value,
            error: self.error + o.error,
        }
    }
}

/// Requested accuracy: stop when the error estimate is below
/// `max(abs, rel * |value|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Tolerance {
    pub fn new(abs: f64, rel: f64) -> Self {
        Tolerance {
            abs,
            rel,
            max_intervals: 4000,
        }
    }

    pub fn relative(rel: f64) -> Self {
        Tolerance::new(rel * 1e-6, rel)
    }

    fn inner(&self) -> Tolerance {
        Tolerance {
            abs: self.abs * 0.05,
            rel: self.rel * 0.05,
            max_intervals: self.max_intervals,
        }
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance::new(1e-14, 1e-11)
    }
}

/// One G7/K15 panel of a paired integrand `(value, auxiliary)`; only the
/// value drives the error estimate.
fn gk15<F: Fn(f64) -> (f64, f64)>(f: &F, a: f64, b: f64) -> (f64, f64, f64) {
    let c = 0.5 * (a + b);
    let hw = 0.5 * (b - a);
    let (fc, ac) = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    let mut aux = WGK[7] * ac;
    for i in 0..7 {
        let dx = hw * XGK[i];
        let (f1, a1) = f(c - dx);
        let (f2, a2) = f(c + dx);
        k += WGK[i] * (f1 + f2);
        aux += WGK[i] * (a1 + a2);
        if i % 2 == 1 {
            g += WG[i / 2] * (f1 + f2);
        }
    }
    (k * hw, ((k - g) * hw).abs(), aux * hw.abs())
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    aux: f64,
    order: usize,
}

impl PartialEq for Panel {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Panel {
    fn cmp(&self, o: &Self) -> Ordering {
        self.error
            .total_cmp(&o.error)
            .then_with(|| o.order.cmp(&self.order))
    }
}

/// Adaptive quadrature of a paired integrand on a finite interval; returns
/// the value, its error estimate and the integral of the auxiliary channel.
fn adapt_finite<F: Fn(f64) -> (f64, f64)>(f: &F, a: f64, b: f64, tol: Tolerance) -> (QuadResult, f64) {
    if a == b {
        return (QuadResult::zero(), 0.0);
    }
    let mut heap = BinaryHeap::new();
    let (v, e, x) = gk15(f, a, b);
    let mut total = v;
    let mut total_err = e;
    let mut total_aux = x;
    let mut order = 0usize;
    heap.push(Panel {
        a,
        b,
        value: v,
        error: e,
        aux: x,
        order,
    });
    while total_err > tol.abs.max(tol.rel * total.abs()) && heap.len() < tol.max_intervals {
        let p = match heap.pop() {
            Some(p) => p,
            None => break,
        };
        let m = 0.5 * (p.a + p.b);
        if m <= p.a.min(p.b) || m >= p.a.max(p.b) {
            heap.push(p);
            break;
        }
        let (v1, e1, x1) = gk15(f, p.a, m);
        let (v2, e2, x2) = gk15(f, m, p.b);
        total += v1 + v2 - p.value;
        total_err += e1 + e2 - p.error;
        total_aux += x1 + x2 - p.aux;
        order += 1;
        heap.push(Panel { a: p.a, b: m, value: v1, error: e1, aux: x1, order });
        order += 1;
        heap.push(Panel { a: m, b: p.b, value: v2, error: e2, aux: x2, order });
    }
    // Re-sum to limit the drift of the running totals.
    let mut value = 0.0;
    let mut error = 0.0;
    let mut aux = 0.0;
    let mut panels: Vec<Panel> = heap.into_vec();
    panels.sort_by(|p, q| p.a.total_cmp(&q.a));
    for p in &panels {
        value += p.value;
        error += p.error;
        aux += p.aux;
    }
    let _ = (total, total_err, total_aux);
    (QuadResult { value, error }, aux)
}

fn adapt_paired<F: Fn(f64) -> (f64, f64)>(f: &F, lo: f64, hi: f64, tol: Tolerance) -> (QuadResult, f64) {
    if lo > hi {
        let (r, x) = adapt_paired(f, hi, lo, tol);
        return (QuadResult { value: -r.value, error: r.error }, -x);
    }
    match (lo.is_finite(), hi.is_finite()) {
        (true, true) => adapt_finite(f, lo, hi, tol),
        (true, false) => {
            let g = |t: f64| {
                let s = 1.0 - t;
                let y = lo + t / s;
                if !y.is_finite() {
                    return (0.0, 0.0);
                }
                let (v, x) = f(y);
                let j = 1.0 / (s * s);
                (v * j, x * j)
            };
            adapt_finite(&g, 0.0, 1.0, tol)
        }
        (false, true) => {
            let g = |t: f64| {
                let s = 1.0 - t;
                let y = hi - t / s;
                if !y.is_finite() {
                    return (0.0, 0.0);
                }
                let (v, x) = f(y);
                let j = 1.0 / (s * s);
                (v * j, x * j)
            };
            adapt_finite(&g, 0.0, 1.0, tol)
        }
        (false, false) => {
            let half = Tolerance { abs: tol.abs * 0.5, ..tol };
            let (r1, x1) = adapt_paired(f, f64::NEG_INFINITY, 0.0, half);
            let (r2, x2) = adapt_paired(f, 0.0, f64::INFINITY, half);
            (r1 + r2, x1 + x2)
        }
    }
}

/// Adaptive Gauss–Kronrod integral of `f` over `[lo, hi]`; either endpoint
/// may be infinite.
pub fn integrate<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: Tolerance) -> QuadResult {
    adapt_paired(&|x| (f(x), 0.0), lo, hi, tol).0
}

/// Like [`integrate`], splitting the range at the given interior points.
pub fn integrate_with_breaks<F: Fn(f64) -> f64>(
    f: F,
    lo: f64,
    hi: f64,
    breaks: &[f64],
    tol: Tolerance,
) -> QuadResult {
    let mut pts = vec![lo];
    let mut inner: Vec<f64> = breaks.iter().copied().filter(|&b| b > lo && b < hi).collect();
    inner.sort_by(f64::total_cmp);
    pts.extend(inner);
    pts.push(hi);
    let mut acc = QuadResult::zero();
    for w in pts.windows(2) {
        acc = acc + integrate(&f, w[0], w[1], tol);
    }
    acc
}

/// Integration limits of one axis of a nested region, possibly depending on
/// the outer coordinates already fixed.
pub type AxisLimits<'a> = &'a (dyn Fn(usize, &[f64]) -> (f64, f64) + Sync);

/// Nested adaptive quadrature of `f` over a region described axis by axis:
/// `limits(k, outer)` gives the range of coordinate `k` given `outer = x[..k]`.
/// `breaks` are optional interior split points applied on every axis.
pub fn integrate_nested(
    f: &(dyn Fn(&[f64]) -> f64 + Sync),
    dim: usize,
    limits: AxisLimits<'_>,
    breaks: &[f64],
    tol: Tolerance,
) -> QuadResult {
    let mut scratch = vec![0.0; dim];
    nested_level(f, dim, limits, breaks, tol, 0, &mut scratch)
}

fn nested_level(
    f: &(dyn Fn(&[f64]) -> f64 + Sync),
    dim: usize,
    limits: AxisLimits<'_>,
    breaks: &[f64],
    tol: Tolerance,
    k: usize,
    x: &mut [f64],
) -> QuadResult {
    let (lo, hi) = limits(k, &x[..k]);
    if !(hi > lo) {
        return QuadResult::zero();
    }
    let mut pts = vec![lo];
    pts.extend(breaks.iter().copied().filter(|&b| b > lo && b < hi));
    pts.push(hi);
    let mut acc = QuadResult::zero();
    let cell = std::cell::RefCell::new(x.to_vec());
    for w in pts.windows(2) {
        let g = |t: f64| -> (f64, f64) {
            let mut xs = cell.borrow_mut();
            xs[k] = t;
            if k + 1 == dim {
                (f(&xs), 0.0)
            } else {
                let mut local = xs.clone();
                drop(xs);
                let r = nested_level(f, dim, limits, breaks, tol.inner(), k + 1, &mut local);
                (r.value, r.error)
            }
        };
        let (r, inner_err) = adapt_paired(&g, w[0], w[1], tol);
        acc = acc
            + QuadResult {
                value: r.value,
                error: r.error + inner_err.abs(),
            };
    }
    acc
}
