use crate::matrix::DenseMatrix;

/// Per-column min-max scaling to `[0, 1]`. Constant columns become zeros, so
/// binary presence columns come back unchanged unless they are all ones.
pub fn scale_minmax(matrix: &DenseMatrix) -> DenseMatrix {
    let (rows, cols) = (matrix.rows(), matrix.cols());
    let mut min = vec![f64::INFINITY; cols];
    let mut max = vec![f64::NEG_INFINITY; cols];
    for row in matrix.iter_rows() {
        for (c, &v) in row.iter().enumerate() {
            min[c] = min[c].min(v);
            max[c] = max[c].max(v);
        }
    }
    let mut out = DenseMatrix::zeros(rows, cols);
    for r in 0..rows {
        let src = matrix.row(r);
        let dst = out.row_mut(r);
        for c in 0..cols {
            let range = max[c] - min[c];
            dst[c] = if range > 0.0 { (src[c] - min[c]) / range } else { 0.0 };
        }
    }
    out
}
