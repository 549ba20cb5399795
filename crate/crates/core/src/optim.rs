//! Unconstrained local minimization for the multi-start searches.

#[derive(Clone, Copy, Debug)]
pub struct LocalOptions {
    pub max_iter: usize,
    /// Stop when `|∇f|∞ <= grad_tol * (1 + |f|)`.
    pub grad_tol: f64,
    /// Stop after repeated relative decreases below this.
    pub f_tol: f64,
    /// Relative finite-difference step.
    pub fd_step: f64,
}

impl Default for LocalOptions {
    fn default() -> Self {
        LocalOptions {
            max_iter: 300,
            grad_tol: 1e-9,
            f_tol: 1e-13,
            fd_step: 1e-6,
        }
    }
}

#[derive(Clone, Debug)]
pub struct LocalResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn sanitize(v: f64) -> f64 {
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

fn gradient<F: FnMut(&[f64]) -> f64>(f: &mut F, x: &[f64], fx: f64, h: f64) -> Vec<f64> {
    let mut xp = x.to_vec();
    let mut g = vec![0.0; x.len()];
    for i in 0..x.len() {
        let step = h * (1.0 + x[i].abs());
        xp[i] = x[i] + step;
        let fp = sanitize(f(&xp));
        xp[i] = x[i] - step;
        let fm = sanitize(f(&xp));
        xp[i] = x[i];
        g[i] = match (fp.is_finite(), fm.is_finite()) {
            (true, true) => (fp - fm) / (2.0 * step),
            (true, false) => (fp - fx) / step,
            (false, true) => (fx - fm) / step,
            (false, false) => 0.0,
        };
    }
    g
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// BFGS with central-difference gradients and Armijo backtracking.
/// Non-finite objective values are treated as infeasible.
pub fn minimize<F: FnMut(&[f64]) -> f64>(mut f: F, x0: &[f64], opts: &LocalOptions) -> LocalResult {
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut fx = sanitize(f(&x));
    if n == 0 || !fx.is_finite() {
        return LocalResult {
            x,
            value: fx,
            iterations: 0,
            converged: n == 0 && fx.is_finite(),
        };
    }
    let mut g = gradient(&mut f, &x, fx, opts.fd_step);
    let identity = |n: usize| {
        let mut h = vec![0.0; n * n];
        for i in 0..n {
            h[i * n + i] = 1.0;
        }
        h
    };
    let mut hinv = identity(n);
    let mut fresh = true;
    let mut stalls = 0;
    let mut converged = false;
    let mut it = 0;
    while it < opts.max_iter {
        it += 1;
        let gmax = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if gmax <= opts.grad_tol * (1.0 + fx.abs()) {
            converged = true;
            break;
        }
        let mut d: Vec<f64> = (0..n)
            .map(|i| -(0..n).map(|j| hinv[i * n + j] * g[j]).sum::<f64>())
            .collect();
        let mut slope = dot(&g, &d);
        if slope >= 0.0 {
            hinv = identity(n);
            fresh = true;
            d = g.iter().map(|v| -v).collect();
            slope = dot(&g, &d);
        }
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let xn: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + t * b).collect();
            let fnew = sanitize(f(&xn));
            if fnew.is_finite() && fnew <= fx + 1e-4 * t * slope {
                accepted = Some((xn, fnew));
                break;
            }
            t *= 0.5;
        }
        let Some((xn, fnew)) = accepted else {
            if fresh {
                converged = true;
                break;
            }
            hinv = identity(n);
            fresh = true;
            continue;
        };
        let gn = gradient(&mut f, &xn, fnew, opts.fd_step);
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        let yy = dot(&y, &y);
        if sy > 1e-14 * dot(&s, &s).sqrt() * yy.sqrt() {
            if fresh {
                let scale = sy / yy;
                for v in hinv.iter_mut() {
                    *v *= scale;
                }
                fresh = false;
            }
            let rho = 1.0 / sy;
            let hy: Vec<f64> = (0..n).map(|i| (0..n).map(|j| hinv[i * n + j] * y[j]).sum()).collect();
            let yhy = dot(&y, &hy);
            for i in 0..n {
                for j in 0..n {
                    hinv[i * n + j] += -rho * (hy[i] * s[j] + s[i] * hy[j]) + (rho * rho * yhy + rho) * s[i] * s[j];
                }
            }
        }
        let decrease = fx - fnew;
        x = xn;
        g = gn;
        fx = fnew;
        if decrease <= opts.f_tol * (1.0 + fx.abs()) {
            stalls += 1;
            if stalls >= 3 {
                converged = true;
                break;
            }
        } else {
            stalls = 0;
        }
    }
    LocalResult {
        x,
        value: fx,
        iterations: it,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let r = minimize(
            f,
            &[-1.2, 1.0],
            &LocalOptions {
                max_iter: 2000,
                ..Default::default()
            },
        );
        assert!(r.value < 1e-10, "{}", r.value);
        assert!((r.x[0] - 1.0).abs() < 1e-4);
    }

    #[test]
    fn barrier_region_is_respected() {
        let f = |x: &[f64]| if x[0] <= 0.0 { f64::INFINITY } else { x[0] - x[0].ln() };
        let r = minimize(f, &[3.0], &LocalOptions::default());
        assert!((r.x[0] - 1.0).abs() < 1e-5);
    }

    #[test]
    fn quadratic_exact() {
        let f = |x: &[f64]| 3.0 * (x[0] - 2.0).powi(2) + (x[1] + 1.0).powi(2) + x[0] * x[1];
        let r = minimize(f, &[0.0, 0.0], &LocalOptions::default());
        // stationary point of the quadratic
        let (x, y) = (26.0 / 11.0, -24.0 / 11.0);
        assert!((r.x[0] - x).abs() < 1e-6 && (r.x[1] - y).abs() < 1e-6);
        assert!(r.converged);
    }
}
