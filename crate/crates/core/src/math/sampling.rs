use super::RandomStream;

/// Latin hypercube design of `n` points in `[0,1]^d`.
///
/// Each coordinate column is an independent random permutation of the `n`
/// equal-width bins, jittered uniformly inside its bin.
pub fn latin_hypercube(n: usize, d: usize, stream: &mut RandomStream) -> Vec<Vec<f64>> {
    let mut points = vec![vec![0.0; d]; n];
    let mut bins: Vec<usize> = (0..n).collect();
    let width = 1.0 / n as f64;
    for j in 0..d {
        stream.shuffle(&mut bins);
        for (point, &bin) in points.iter_mut().zip(&bins) {
            let u = stream.uniform();
            // Keep the value strictly inside its bin even after rounding.
            point[j] = ((bin as f64 + u) * width).min((bin + 1) as f64 * width - f64::EPSILON);
        }
    }
    points
}

/// `n` independent uniform points in `[0,1]^d`.
pub fn uniform_points(n: usize, d: usize, stream: &mut RandomStream) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..d).map(|_| stream.uniform()).collect())
        .collect()
}
