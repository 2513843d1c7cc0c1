//! Local optimizers used internally: a projected L-BFGS for smooth objectives
//! inside a box, and a coordinate pattern search for derivative-free polishing.

/// Result of a local minimization.
#[derive(Debug, Clone)]
pub(crate) struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
}

fn project(x: &mut [f64], lo: &[f64], hi: &[f64]) {
    for ((v, l), h) in x.iter_mut().zip(lo).zip(hi) {
        *v = v.clamp(*l, *h);
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Minimize a smooth function over the box `[lo, hi]`.
///
/// `objective` returns `None` where the function is undefined; such points are
/// treated as infinitely bad by the line search. The returned value is never
/// worse than the value at the (projected) start point.
pub(crate) fn minimize_box<F>(
    mut objective: F,
    start: &[f64],
    lo: &[f64],
    hi: &[f64],
    max_iter: usize,
) -> Option<Minimum>
where
    F: FnMut(&[f64]) -> Option<(f64, Vec<f64>)>,
{
    const MEMORY: usize = 8;
    let n = start.len();
    let mut x = start.to_vec();
    project(&mut x, lo, hi);
    let (mut fx, mut g) = objective(&x)?;
    let mut s_hist: Vec<Vec<f64>> = Vec::new();
    let mut y_hist: Vec<Vec<f64>> = Vec::new();
    let mut stall = 0;

    for _ in 0..max_iter {
        // Coordinates pinned at a bound with the gradient pushing outward stay fixed.
        let free: Vec<bool> = (0..n)
            .map(|i| !((x[i] <= lo[i] && g[i] > 0.0) || (x[i] >= hi[i] && g[i] < 0.0)))
            .collect();
        let pg_norm = (0..n)
            .filter(|&i| free[i])
            .map(|i| g[i] * g[i])
            .sum::<f64>()
            .sqrt();
        if pg_norm < 1e-8 {
            break;
        }

        // Two-loop recursion on the free subspace.
        let mut q: Vec<f64> = (0..n).map(|i| if free[i] { g[i] } else { 0.0 }).collect();
        let m = s_hist.len();
        let mut alphas = vec![0.0; m];
        for k in (0..m).rev() {
            let rho = 1.0 / dot(&y_hist[k], &s_hist[k]);
            alphas[k] = rho * dot(&s_hist[k], &q);
            for i in 0..n {
                q[i] -= alphas[k] * y_hist[k][i];
            }
        }
        if m > 0 {
            let gamma = dot(&s_hist[m - 1], &y_hist[m - 1]) / dot(&y_hist[m - 1], &y_hist[m - 1]);
            q.iter_mut().for_each(|v| *v *= gamma);
        } else {
            let scale = 1.0 / pg_norm.max(1.0);
            q.iter_mut().for_each(|v| *v *= scale);
        }
        for k in 0..m {
            let rho = 1.0 / dot(&y_hist[k], &s_hist[k]);
            let beta = rho * dot(&y_hist[k], &q);
            for i in 0..n {
                q[i] += s_hist[k][i] * (alphas[k] - beta);
            }
        }
        let mut dir: Vec<f64> = (0..n).map(|i| if free[i] { -q[i] } else { 0.0 }).collect();
        if dot(&dir, &g) >= 0.0 {
            s_hist.clear();
            y_hist.clear();
            let scale = 1.0 / pg_norm.max(1.0);
            dir = (0..n)
                .map(|i| if free[i] { -g[i] * scale } else { 0.0 })
                .collect();
        }

        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let mut trial: Vec<f64> = x.iter().zip(&dir).map(|(a, d)| a + step * d).collect();
            project(&mut trial, lo, hi);
            let moved: Vec<f64> = trial.iter().zip(&x).map(|(a, b)| a - b).collect();
            let decrease = dot(&g, &moved);
            if let Some((ft, gt)) = objective(&trial) {
                if ft.is_finite() && ft <= fx + 1e-4 * decrease.min(0.0) && ft <= fx {
                    accepted = Some((trial, ft, gt, moved));
                    break;
                }
            }
            step *= 0.5;
        }
        let Some((xn, fn_, gn, s)) = accepted else {
            break;
        };
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        if dot(&s, &y) > 1e-12 * dot(&y, &y).sqrt() * dot(&s, &s).sqrt() {
            if s_hist.len() == MEMORY {
                s_hist.remove(0);
                y_hist.remove(0);
            }
            s_hist.push(s);
            y_hist.push(y);
        }
        let improvement = fx - fn_;
        x = xn;
        g = gn;
        fx = fn_;
        if improvement <= 1e-10 * fx.abs().max(1.0) {
            stall += 1;
            if stall >= 3 {
                break;
            }
        } else {
            stall = 0;
        }
    }
    Some(Minimum { x, value: fx })
}

/// Coordinate-wise pattern search maximizing `f` inside `[lo, hi]`.
///
/// Runs `iterations` sweeps; the step shrinks geometrically from
/// `step_start` to `step_end` (both as fractions of each coordinate's width),
/// then a compass search halves the step further while no move improves.
/// Returns the best point and value, never worse than the start.
pub(crate) fn pattern_search_max<F>(
    f: &F,
    start: &[f64],
    start_value: f64,
    lo: &[f64],
    hi: &[f64],
    iterations: usize,
    step_start: f64,
    step_end: f64,
) -> (Vec<f64>, f64)
where
    F: Fn(&[f64]) -> f64 + ?Sized,
{
    let mut x = start.to_vec();
    let mut best = start_value;
    let shrink = if iterations > 1 {
        (step_end / step_start).powf(1.0 / (iterations - 1) as f64)
    } else {
        1.0
    };
    let mut step = step_start;
    let mut trial = x.clone();
    for _ in 0..iterations {
        for d in 0..x.len() {
            let width = hi[d] - lo[d];
            for sign in [1.0, -1.0] {
                trial.copy_from_slice(&x);
                trial[d] = (x[d] + sign * step * width).clamp(lo[d], hi[d]);
                if trial[d] == x[d] {
                    continue;
                }
                let v = f(&trial);
                if v > best {
                    best = v;
                    x.copy_from_slice(&trial);
                    break;
                }
            }
        }
        step *= shrink;
    }
    // Finish with a compass search below the schedule's last step so the
    // result is not limited to the final step resolution.
    let mut step = step_end;
    let mut polls = 0;
    while step > step_end * 1e-6 && polls < 200 {
        polls += 1;
        let mut improved = false;
        for d in 0..x.len() {
            let width = hi[d] - lo[d];
            for sign in [1.0, -1.0] {
                trial.copy_from_slice(&x);
                trial[d] = (x[d] + sign * step * width).clamp(lo[d], hi[d]);
                if trial[d] == x[d] {
                    continue;
                }
                let v = f(&trial);
                if v > best {
                    best = v;
                    x.copy_from_slice(&trial);
                    improved = true;
                    break;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    (x, best)
}
