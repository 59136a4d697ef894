//! Nelder-Mead simplex minimization with the standard coefficients
//! (reflection 1, expansion 2, contraction 1/2, shrink 1/2).

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMeadOptions {
    /// Edge length of the initial axis-aligned simplex.
    pub initial_step: f64,
    /// Stop when every vertex lies within this distance of the best one.
    pub x_tol: f64,
    /// Stop when the objective spread across the simplex falls below this.
    pub f_tol: f64,
    pub max_evaluations: usize,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self { initial_step: 0.3, x_tol: 1e-8, f_tol: 1e-13, max_evaluations: 20_000 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NelderMeadOutcome {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub evaluations: usize,
    /// Final simplex diameter measured from the best vertex.
    pub diameter: f64,
    pub converged: bool,
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

fn affine(a: &[f64], b: &[f64], t: f64) -> Vec<f64> {
    // a + t (b - a)
    a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect()
}

pub fn nelder_mead<F>(mut f: F, x0: &[f64], opts: NelderMeadOptions) -> NelderMeadOutcome
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    let evaluations = std::cell::Cell::new(0usize);
    let mut eval = |x: &[f64]| {
        evaluations.set(evaluations.get() + 1);
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), eval(x0)));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += opts.initial_step;
        let v = eval(&x);
        simplex.push((x, v));
    }

    let mut iterations = 0;
    let mut converged = false;
    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let diameter = simplex[1..].iter().map(|(x, _)| distance(x, &simplex[0].0)).fold(0.0, f64::max);
        let spread = simplex[n].1 - simplex[0].1;
        if diameter < opts.x_tol || spread.abs() < opts.f_tol {
            converged = true;
            break;
        }
        if evaluations.get() >= opts.max_evaluations {
            break;
        }
        iterations += 1;

        let mut centroid = vec![0.0; n];
        for (x, _) in &simplex[..n] {
            for (c, xi) in centroid.iter_mut().zip(x) {
                *c += xi / n as f64;
            }
        }
        let worst = simplex[n].clone();
        let reflected = affine(&centroid, &worst.0, -1.0);
        let fr = eval(&reflected);

        if fr < simplex[0].1 {
            let expanded = affine(&centroid, &worst.0, -2.0);
            let fe = eval(&expanded);
            simplex[n] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
            continue;
        }
        if fr < simplex[n - 1].1 {
            simplex[n] = (reflected, fr);
            continue;
        }
        let (contracted, fc) = if fr < worst.1 {
            let c = affine(&centroid, &reflected, 0.5);
            let v = eval(&c);
            (c, v)
        } else {
            let c = affine(&centroid, &worst.0, 0.5);
            let v = eval(&c);
            (c, v)
        };
        if fc < worst.1.min(fr) {
            simplex[n] = (contracted, fc);
            continue;
        }
        let best = simplex[0].0.clone();
        for vertex in simplex.iter_mut().skip(1) {
            let x = affine(&best, &vertex.0, 0.5);
            let v = eval(&x);
            *vertex = (x, v);
        }
    }

    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let diameter = simplex[1..].iter().map(|(x, _)| distance(x, &simplex[0].0)).fold(0.0, f64::max);
    let (x, fx) = simplex.swap_remove(0);
    NelderMeadOutcome { x, f: fx, iterations, evaluations: evaluations.get(), diameter, converged }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimizes_rosenbrock() {
        let rosen = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let out = nelder_mead(rosen, &[-1.2, 1.0], NelderMeadOptions { initial_step: 0.5, ..Default::default() });
        assert!(out.converged);
        assert!((out.x[0] - 1.0).abs() < 1e-6 && (out.x[1] - 1.0).abs() < 1e-6, "{:?}", out.x);
    }

    #[test]
    fn minimizes_shifted_quadratic_in_five_dimensions() {
        let target = [0.3, -1.0, 2.0, 0.0, 0.7];
        let q = |x: &[f64]| x.iter().zip(&target).enumerate().map(|(i, (a, b))| (i + 1) as f64 * (a - b).powi(2)).sum();
        let out = nelder_mead(q, &[0.0; 5], NelderMeadOptions::default());
        assert!(out.f < 1e-12, "{}", out.f);
    }

    #[test]
    fn respects_evaluation_budget() {
        let out = nelder_mead(|x: &[f64]| x[0].abs().sqrt(), &[5.0], NelderMeadOptions { max_evaluations: 10, ..Default::default() });
        assert!(out.evaluations <= 13);
    }
}
