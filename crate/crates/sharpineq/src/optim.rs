//! Scalar minimization and root bracketing used by the pointwise Hopf–Lax
//! evaluator, the restricted conjugates and the constant solvers.

/// Minimum of a unimodal function on `[a, b]` by Brent's method
/// (golden-section steps with parabolic acceleration). Returns `(x, f(x))`.
pub fn brent_min<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, xtol: f64) -> (f64, f64) {
    const CG: f64 = 0.381_966_011_250_105_1;
    let (mut a, mut b) = if a < b { (a, b) } else { (b, a) };
    let mut x = a + CG * (b - a);
    let mut w = x;
    let mut v = x;
    let mut fx = f(x);
    let mut fw = fx;
    let mut fv = fx;
    let mut d: f64 = 0.0;
    let mut e: f64 = 0.0;
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        let tol1 = xtol + 1e-15 * x.abs();
        let tol2 = 2.0 * tol1;
        if (x - m).abs() <= tol2 - 0.5 * (b - a) {
            break;
        }
        let mut golden = true;
        if e.abs() > tol1 {
            let r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            }
            q = q.abs();
            let etemp = e;
            e = d;
            if p.abs() < (0.5 * q * etemp).abs() && p > q * (a - x) && p < q * (b - x) {
                d = p / q;
                let u = x + d;
                if u - a < tol2 || b - u < tol2 {
                    d = if m >= x { tol1 } else { -tol1 };
                }
                golden = false;
            }
        }
        if golden {
            e = if x >= m { a - x } else { b - x };
            d = CG * e;
        }
        let u = if d.abs() >= tol1 { x + d } else if d > 0.0 { x + tol1 } else { x - tol1 };
        let fu = f(u);
        if fu <= fx {
            if u >= x {
                a = x;
            } else {
                b = x;
            }
            v = w;
            fv = fw;
            w = x;
            fw = fx;
            x = u;
            fx = fu;
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == x {
                v = w;
                fv = fw;
                w = u;
                fw = fu;
            } else if fu <= fv || v == x || v == w {
                v = u;
                fv = fu;
            }
        }
    }
    (x, fx)
}

/// Golden-section search for the minimum of a unimodal function on `[a, b]`.
pub fn golden_min<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, xtol: f64) -> (f64, f64) {
    let r = 0.618_033_988_749_894_8;
    let (mut a, mut b) = (a.min(b), a.max(b));
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > xtol * (1.0 + 0.5 * (a.abs() + b.abs())) {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    let fx = f(x);
    (x, fx)
}

/// Expands `[x - step, x + step]` until it brackets a minimum of `f`, then
/// refines with Brent. Suitable for convex functions on the line.
pub fn minimize_convex_1d<F: FnMut(f64) -> f64>(mut f: F, x0: f64, step: f64, xtol: f64) -> (f64, f64) {
    let mut s = step.abs().max(1e-12);
    let f0 = f(x0);
    let mut lo = x0 - s;
    let mut hi = x0 + s;
    let mut flo = f(lo);
    let mut fhi = f(hi);
    for _ in 0..200 {
        if flo >= f0 && fhi >= f0 {
            break;
        }
        s *= 2.0;
        if flo < f0 {
            lo = x0 - s;
            flo = f(lo);
        }
        if fhi < f0 {
            hi = x0 + s;
            fhi = f(hi);
        }
    }
    let (x, fx) = brent_min(&mut f, lo, hi, xtol);
    if fx <= f0 {
        (x, fx)
    } else {
        (x0, f0)
    }
}

/// Root of a continuous function with a sign change on `[a, b]` by bisection.
pub fn bisect<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, xtol: f64) -> Option<f64> {
    let (mut a, mut b) = (a, b);
    let mut fa = f(a);
    let fb = f(b);
    if fa == 0.0 {
        return Some(a);
    }
    if fb == 0.0 {
        return Some(b);
    }
    if fa.signum() == fb.signum() || fa.is_nan() || fb.is_nan() {
        return None;
    }
    for _ in 0..400 {
        let m = 0.5 * (a + b);
        if (b - a).abs() <= xtol * (1.0 + m.abs()) || m == a || m == b {
            return Some(m);
        }
        let fm = f(m);
        if fm == 0.0 {
            return Some(m);
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Some(0.5 * (a + b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brent_parabola() {
        let (x, fx) = brent_min(|x| (x - 0.3) * (x - 0.3) + 1.0, -2.0, 5.0, 1e-12);
        assert!((x - 0.3).abs() < 1e-8);
        assert!((fx - 1.0).abs() < 1e-15);
    }

    #[test]
    fn brent_nonsmooth() {
        let (x, _) = brent_min(|x: f64| (x - 1.0).abs().powf(1.5), -3.0, 4.0, 1e-12);
        assert!((x - 1.0).abs() < 1e-7);
    }

    #[test]
    fn golden_matches_brent() {
        let f = |x: f64| x.exp() - 2.0 * x;
        let (a, _) = golden_min(f, -1.0, 3.0, 1e-12);
        let (b, _) = brent_min(f, -1.0, 3.0, 1e-12);
        assert!((a - 2f64.ln()).abs() < 1e-7);
        assert!((b - 2f64.ln()).abs() < 1e-7);
    }

    #[test]
    fn bracket_expansion() {
        let (x, _) = minimize_convex_1d(|x| (x - 40.0).powi(2), 0.0, 0.1, 1e-12);
        assert!((x - 40.0).abs() < 1e-6);
    }

    #[test]
    fn bisection_root() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-15).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-14);
        assert!(bisect(|x| x * x + 1.0, 0.0, 2.0, 1e-15).is_none());
    }
}
