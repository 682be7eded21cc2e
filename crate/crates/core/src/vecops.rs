//! Small dense helpers on `&[f64]` vectors of ambient dimension.

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a)
}

#[inline]
pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Vector orthogonal to `q - 1` vectors in `R^q`, built from signed minors
/// (generalized cross product).
pub(crate) fn cross_general(vectors: &[&[f64]]) -> Vec<f64> {
    let q = vectors.len() + 1;
    let mut out = vec![0.0; q];
    for (c, slot) in out.iter_mut().enumerate() {
        let mut m = nalgebra::DMatrix::<f64>::zeros(q - 1, q - 1);
        for (r, v) in vectors.iter().enumerate() {
            let mut cc = 0;
            for (k, val) in v.iter().enumerate() {
                if k != c {
                    m[(r, cc)] = *val;
                    cc += 1;
                }
            }
        }
        let sign = if (c + q - 1) % 2 == 0 { 1.0 } else { -1.0 };
        *slot = sign * m.determinant();
    }
    out
}
