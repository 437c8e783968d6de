use nalgebra::DMatrix;

pub fn linear_kernel(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Linear state kernel times delta action kernel.
pub fn kernel(a: (&[f64], usize), b: (&[f64], usize)) -> f64 {
    if a.1 == b.1 {
        linear_kernel(a.0, b.0)
    } else {
        0.0
    }
}

pub fn gram(points: &[(Vec<f64>, usize)]) -> DMatrix<f64> {
    let n = points.len();
    let mut g = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let k = kernel((&points[i].0, points[i].1), (&points[j].0, points[j].1));
            g[(i, j)] = k;
            g[(j, i)] = k;
        }
    }
    g
}
