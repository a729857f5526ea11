//! Bounded Nelder-Mead simplex minimiser.
//!
//! Vertices are projected into the box after every move, so the objective
//! is only ever evaluated inside the bounds.

#[derive(Debug, Clone)]
pub struct NelderMeadOptions {
    pub start: Vec<f64>,
    /// Initial simplex edge per coordinate.
    pub step: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Converged once every vertex lies within this distance of the best
    /// one, per coordinate...
    pub x_tol: f64,
    /// ...and the spread of objective values is below
    /// `f_rtol * max(|f_best|, 1)`.
    pub f_rtol: f64,
    pub max_evals: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NelderMeadResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub evaluations: usize,
    pub iterations: usize,
    pub converged: bool,
    pub diameter: f64,
}

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

struct Counted<F> {
    f: F,
    evals: usize,
}

impl<F: FnMut(&[f64]) -> f64> Counted<F> {
    fn call(&mut self, x: &[f64]) -> f64 {
        self.evals += 1;
        let v = (self.f)(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    }
}

fn project(x: &mut [f64], lower: &[f64], upper: &[f64]) {
    for ((v, lo), hi) in x.iter_mut().zip(lower).zip(upper) {
        *v = v.clamp(*lo, *hi);
    }
}

fn along(from: &[f64], to: &[f64], t: f64) -> Vec<f64> {
    from.iter().zip(to).map(|(a, b)| a + t * (b - a)).collect()
}

pub fn nelder_mead<F: FnMut(&[f64]) -> f64>(objective: F, opts: &NelderMeadOptions) -> NelderMeadResult {
    let dim = opts.start.len();
    let mut f = Counted {
        f: objective,
        evals: 0,
    };

    let mut start = opts.start.clone();
    project(&mut start, &opts.lower, &opts.upper);
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(dim + 1);
    let f0 = f.call(&start);
    simplex.push((start.clone(), f0));
    for i in 0..dim {
        let mut v = start.clone();
        v[i] += opts.step[i];
        if v[i] > opts.upper[i] {
            v[i] = start[i] - opts.step[i];
        }
        project(&mut v, &opts.lower, &opts.upper);
        let fv = f.call(&v);
        simplex.push((v, fv));
    }

    let mut iterations = 0;
    let mut converged = false;
    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = simplex[0].clone();
        let diameter = simplex
            .iter()
            .flat_map(|(v, _)| v.iter().zip(&best.0).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        let spread = simplex[dim].1 - best.1;
        if diameter < opts.x_tol && spread <= opts.f_rtol * best.1.abs().max(1.0) {
            converged = true;
        }
        if converged || f.evals >= opts.max_evals {
            return NelderMeadResult {
                x: best.0,
                f: best.1,
                evaluations: f.evals,
                iterations,
                converged,
                diameter,
            };
        }
        iterations += 1;

        let centroid: Vec<f64> = (0..dim)
            .map(|i| simplex[..dim].iter().map(|(v, _)| v[i]).sum::<f64>() / dim as f64)
            .collect();
        let worst = simplex[dim].clone();
        let mut reflected = along(&centroid, &worst.0, -REFLECT);
        project(&mut reflected, &opts.lower, &opts.upper);
        let fr = f.call(&reflected);

        if fr < best.1 {
            let mut expanded = along(&centroid, &worst.0, -EXPAND);
            project(&mut expanded, &opts.lower, &opts.upper);
            let fe = f.call(&expanded);
            simplex[dim] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
            continue;
        }
        if fr < simplex[dim - 1].1 {
            simplex[dim] = (reflected, fr);
            continue;
        }
        // contraction, outside if the reflection improved on the worst point
        let (target, ft) = if fr < worst.1 {
            (along(&centroid, &reflected, CONTRACT), fr)
        } else {
            (along(&centroid, &worst.0, CONTRACT), worst.1)
        };
        let mut contracted = target;
        project(&mut contracted, &opts.lower, &opts.upper);
        let fc = f.call(&contracted);
        if fc < ft {
            simplex[dim] = (contracted, fc);
            continue;
        }
        for vertex in simplex.iter_mut().skip(1) {
            let mut v = along(&best.0, &vertex.0, SHRINK);
            project(&mut v, &opts.lower, &opts.upper);
            let fv = f.call(&v);
            *vertex = (v, fv);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts(start: Vec<f64>, step: Vec<f64>, lo: f64, hi: f64) -> NelderMeadOptions {
        let d = start.len();
        NelderMeadOptions {
            start,
            step,
            lower: vec![lo; d],
            upper: vec![hi; d],
            x_tol: 1e-9,
            f_rtol: 1e-12,
            max_evals: 2000,
        }
    }

    #[test]
    fn one_dimensional_parabola() {
        let r = nelder_mead(|x| (x[0] - 1.7e-5).powi(2) * 1e12, &opts(vec![1e-5], vec![1e-5], 0.0, 1e-3));
        assert!(r.converged);
        assert!((r.x[0] - 1.7e-5).abs() < 1e-9);
    }

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let r = nelder_mead(f, &opts(vec![-1.2, 1.0], vec![0.5, 0.5], -5.0, 5.0));
        assert!(r.converged);
        assert!((r.x[0] - 1.0).abs() < 1e-6 && (r.x[1] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn minimum_outside_box_pins_to_bound() {
        let r = nelder_mead(|x| (x[0] + 1.0).powi(2), &opts(vec![0.5], vec![0.1], 0.0, 1.0));
        assert_eq!(r.x[0], 0.0);
    }

    #[test]
    fn eval_budget_respected() {
        let mut o = opts(vec![3.0], vec![1.0], -10.0, 10.0);
        o.max_evals = 5;
        o.x_tol = 0.0;
        let r = nelder_mead(|x| x[0] * x[0], &o);
        assert!(!r.converged);
        assert!(r.evaluations <= 5 + 3);
    }
}
