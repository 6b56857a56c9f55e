use super::{Buffer, LocalMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormKind {
    /// Largest absolute entry; zero for an empty matrix.
    Max,
    Frobenius,
}

pub fn local_norm(kind: NormKind, a: &LocalMatrix) -> f64 {
    match kind {
        NormKind::Max => fold(a, 0.0, |acc, v| acc.max(v.abs())),
        NormKind::Frobenius => fold(a, 0.0, |acc, v| acc + v * v).sqrt(),
    }
}

pub(crate) fn sum_of_squares(a: &LocalMatrix) -> f64 {
    fold(a, 0.0, |acc, v| acc + v * v)
}

fn fold(a: &LocalMatrix, init: f64, f: impl Fn(f64, f64) -> f64) -> f64 {
    let mut acc = init;
    let ld = a.ldim();
    for j in 0..a.width() {
        for i in 0..a.height() {
            let v = match &a.data {
                Buffer::D(d) => d[i + j * ld],
                Buffer::I(d) => d[i + j * ld] as f64,
            };
            acc = f(acc, v);
        }
    }
    acc
}
