//! Nelder–Mead downhill simplex with the standard coefficients.

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

#[derive(Debug, Clone, Copy)]
pub(crate) struct Settings {
    pub x_tol: f64,
    pub f_tol: f64,
    pub max_evals: usize,
    /// Offset of the initial vertices along each axis.
    pub initial_step: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct Outcome {
    pub x: Vec<f64>,
    pub f: f64,
    pub evals: usize,
    pub iterations: usize,
    pub converged: bool,
    /// Best value after each iteration.
    pub history: Vec<f64>,
}

pub(crate) fn minimize<F>(mut f: F, x0: &[f64], s: Settings) -> Outcome
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    let mut evals = 0;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut pts: Vec<Vec<f64>> = vec![x0.to_vec()];
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += s.initial_step;
        pts.push(x);
    }
    let mut vals: Vec<f64> = pts.iter().map(|x| eval(x, &mut evals)).collect();
    let mut history = Vec::new();
    let mut iterations = 0;
    let mut converged = false;

    loop {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        pts = order.iter().map(|&i| pts[i].clone()).collect();
        vals = order.iter().map(|&i| vals[i]).collect();
        history.push(vals[0]);

        let diameter = pts[1..]
            .iter()
            .flat_map(|x| x.iter().zip(&pts[0]).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        let spread = vals[1..].iter().map(|v| (v - vals[0]).abs()).fold(0.0, f64::max);
        if diameter <= s.x_tol && spread <= s.f_tol {
            converged = true;
            break;
        }
        if evals >= s.max_evals {
            break;
        }
        iterations += 1;

        let mut centroid = vec![0.0; n];
        for x in &pts[..n] {
            for (c, xi) in centroid.iter_mut().zip(x) {
                *c += xi / n as f64;
            }
        }
        let along = |t: f64, from: &[f64]| -> Vec<f64> {
            centroid.iter().zip(from).map(|(c, w)| c + t * (c - w)).collect()
        };
        let worst = pts[n].clone();
        let xr = along(REFLECT, &worst);
        let fr = eval(&xr, &mut evals);

        if fr < vals[0] {
            let xe = along(REFLECT * EXPAND, &worst);
            let fe = eval(&xe, &mut evals);
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
        if fr < vals[n] {
            let xc = along(REFLECT * CONTRACT, &worst);
            let fc = eval(&xc, &mut evals);
            if fc <= fr {
                pts[n] = xc;
                vals[n] = fc;
                continue;
            }
        } else {
            let xc = along(-CONTRACT, &worst);
            let fc = eval(&xc, &mut evals);
            if fc < vals[n] {
                pts[n] = xc;
                vals[n] = fc;
                continue;
            }
        }
        for i in 1..=n {
            let shrunk: Vec<f64> = pts[0].iter().zip(&pts[i]).map(|(b, x)| b + SHRINK * (x - b)).collect();
            vals[i] = eval(&shrunk, &mut evals);
            pts[i] = shrunk;
        }
    }

    Outcome { x: pts[0].clone(), f: vals[0], evals, iterations, converged, history }
}
