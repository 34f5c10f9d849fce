//! Derivative-free Nelder–Mead minimization.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexOptions {
    /// Initial edge length along each coordinate.
    pub initial_step: f64,
    /// Stop when (f_worst - f_best) <= tolerance · |f_best| + absolute_tolerance.
    pub tolerance: f64,
    pub absolute_tolerance: f64,
    pub max_iterations: usize,
    /// Restart once from the converged point with a fresh simplex.
    pub restart: bool,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            initial_step: 1.0,
            tolerance: 1e-8,
            absolute_tolerance: 0.0,
            max_iterations: 500,
            restart: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

pub fn minimize<F>(mut f: F, x0: &[f64], opts: &SimplexOptions) -> SimplexResult
where
    F: FnMut(&[f64]) -> f64,
{
    let mut result = run(&mut f, x0, opts.initial_step, opts, opts.max_iterations);
    if opts.restart && result.converged && result.iterations < opts.max_iterations {
        let budget = opts.max_iterations - result.iterations;
        let again = run(&mut f, &result.x, opts.initial_step * 0.05, opts, budget);
        let iterations = result.iterations + again.iterations;
        if again.value <= result.value {
            result = again;
        }
        result.iterations = iterations;
    }
    result
}

fn run<F>(f: &mut F, x0: &[f64], step: f64, opts: &SimplexOptions, max_iterations: usize) -> SimplexResult
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    if n == 0 {
        return SimplexResult { x: Vec::new(), value: f(x0), iterations: 0, converged: true };
    }
    let mut pts: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    pts.push(x0.to_vec());
    for i in 0..n {
        let mut p = x0.to_vec();
        p[i] += step;
        pts.push(p);
    }
    let mut vals: Vec<f64> = pts.iter().map(|p| f(p)).collect();

    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iterations {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        pts = order.iter().map(|&i| pts[i].clone()).collect();
        vals = order.iter().map(|&i| vals[i]).collect();

        let spread = vals[n] - vals[0];
        if spread <= opts.tolerance * vals[0].abs().max(f64::MIN_POSITIVE) + opts.absolute_tolerance {
            converged = true;
            break;
        }
        iterations += 1;

        let centroid: Vec<f64> =
            (0..n).map(|j| pts[..n].iter().map(|p| p[j]).sum::<f64>() / n as f64).collect();
        let along =
            |t: f64| -> Vec<f64> { centroid.iter().zip(&pts[n]).map(|(c, w)| c + t * (w - c)).collect() };

        let xr = along(-1.0);
        let fr = f(&xr);
        if fr < vals[0] {
            let xe = along(-2.0);
            let fe = f(&xe);
            if fe < fr {
                pts[n] = xe;
                vals[n] = fe;
            } else {
                pts[n] = xr;
                vals[n] = fr;
            }
            continue;
        }
        if fr < vals[n - 1] {
            pts[n] = xr;
            vals[n] = fr;
            continue;
        }
        let (xc, fc) = if fr < vals[n] {
            let xc = along(-0.5);
            let fc = f(&xc);
            (xc, fc)
        } else {
            let xc = along(0.5);
            let fc = f(&xc);
            (xc, fc)
        };
        if fc < vals[n].min(fr) {
            pts[n] = xc;
            vals[n] = fc;
            continue;
        }
        for i in 1..=n {
            let p: Vec<f64> = pts[0].iter().zip(&pts[i]).map(|(b, x)| b + 0.5 * (x - b)).collect();
            vals[i] = f(&p);
            pts[i] = p;
        }
    }
    let best = (0..=n).min_by(|&a, &b| vals[a].total_cmp(&vals[b])).unwrap();
    SimplexResult { x: pts[best].clone(), value: vals[best], iterations, converged }
}
