//! One-dimensional numerical integration.
//!
//! Two integrators live here: a recursive adaptive Simpson rule for smooth
//! scalar integrands, and a globally adaptive Gauss-Kronrod (7/15) rule for
//! vector-valued integrands with caller-supplied breakpoints. The latter is
//! what nested (tensor-product) integration is built on.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

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
    0.022_935_322_010_529_225,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            rel_tol: 1e-10,
            max_subdivisions: 2000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct QuadResult {
    pub value: Vec<f64>,
    pub error: f64,
    pub evaluations: usize,
    pub converged: bool,
}

struct Panel {
    a: f64,
    b: f64,
    value: Vec<f64>,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gk15<F: FnMut(f64, &mut [f64])>(f: &mut F, a: f64, b: f64, dim: usize, buf: &mut [f64]) -> Panel {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut kron = vec![0.0; dim];
    let mut gauss = vec![0.0; dim];

    f(center, buf);
    for k in 0..dim {
        kron[k] += WGK[7] * buf[k];
        gauss[k] += WG[3] * buf[k];
    }
    for (idx, (&x, &wk)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = half * x;
        let wg = if idx % 2 == 1 { Some(WG[idx / 2]) } else { None };
        for &point in &[center - dx, center + dx] {
            f(point, buf);
            for k in 0..dim {
                kron[k] += wk * buf[k];
                if let Some(w) = wg {
                    gauss[k] += w * buf[k];
                }
            }
        }
    }
    let mut error: f64 = 0.0;
    for k in 0..dim {
        kron[k] *= half;
        gauss[k] *= half;
        error = error.max((kron[k] - gauss[k]).abs());
    }
    Panel {
        a,
        b,
        value: kron,
        error,
    }
}

/// Globally adaptive Gauss-Kronrod integration of a vector-valued function
/// over `[points[0], points[last]]`, with the interior points as initial
/// panel boundaries.
///
/// Convergence means the summed panel error is at most
/// `max(abs_tol, rel_tol * max_k |I_k|)`.
pub fn integrate_vec<F>(mut f: F, points: &[f64], dim: usize, opts: QuadOptions) -> QuadResult
where
    F: FnMut(f64, &mut [f64]),
{
    assert!(points.len() >= 2, "need at least two integration limits");
    let mut buf = vec![0.0; dim];
    let mut heap = BinaryHeap::new();
    let mut evaluations = 0;
    for w in points.windows(2) {
        if w[1] > w[0] {
            heap.push(gk15(&mut f, w[0], w[1], dim, &mut buf));
            evaluations += 15;
        }
    }
    let totals = |heap: &BinaryHeap<Panel>| {
        let mut value = vec![0.0; dim];
        let mut error = 0.0;
        for p in heap.iter() {
            for k in 0..dim {
                value[k] += p.value[k];
            }
            error += p.error;
        }
        (value, error)
    };

    let mut subdivisions = 0;
    loop {
        let (value, error) = totals(&heap);
        let scale = value.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let target = opts.abs_tol.max(opts.rel_tol * scale);
        if error <= target || subdivisions >= opts.max_subdivisions || heap.is_empty() {
            return QuadResult {
                value,
                error,
                evaluations,
                converged: error <= target,
            };
        }
        let worst = heap.pop().expect("heap is non-empty");
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) {
            // Interval cannot be split further in floating point.
            heap.push(Panel { error: 0.0, ..worst });
            continue;
        }
        heap.push(gk15(&mut f, worst.a, mid, dim, &mut buf));
        heap.push(gk15(&mut f, mid, worst.b, dim, &mut buf));
        evaluations += 30;
        subdivisions += 1;
    }
}

/// Scalar convenience wrapper around [`integrate_vec`].
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, opts: QuadOptions) -> QuadResult {
    integrate_vec(move |x, out| out[0] = f(x), &[a, b], 1, opts)
}

/// `int_a^inf f(t) dt` through the substitution `t = a + u / (1 - u)`.
pub fn integrate_to_infinity<F: FnMut(f64) -> f64>(mut f: F, a: f64, opts: QuadOptions) -> QuadResult {
    integrate(
        move |u| {
            if u >= 1.0 {
                return 0.0;
            }
            let one_minus = 1.0 - u;
            let t = a + u / one_minus;
            let jac = 1.0 / (one_minus * one_minus);
            let v = f(t) * jac;
            if v.is_finite() {
                v
            } else {
                0.0
            }
        },
        0.0,
        1.0,
        opts,
    )
}

/// Recursive adaptive Simpson quadrature with an absolute error target.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, abs_tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, abs_tol, 60)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}
