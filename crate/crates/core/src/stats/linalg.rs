/// Residual sum of squares of the least-squares fit of `y` on `columns`,
/// via Householder QR. Returns `Err(j)` with the first column index found
/// to be (numerically) dependent on the ones before it.
pub(crate) fn least_squares_rss(columns: &[Vec<f64>], y: &[f64]) -> Result<f64, usize> {
    let n = y.len();
    let mut a: Vec<Vec<f64>> = columns.to_vec();
    let mut qty = y.to_vec();
    let norms: Vec<f64> = a.iter().map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt()).collect();

    for j in 0..a.len() {
        if j >= n {
            return Err(j);
        }
        let col = &a[j];
        let alpha_norm = col[j..].iter().map(|v| v * v).sum::<f64>().sqrt();
        if norms[j] == 0.0 || alpha_norm <= 1e-10 * norms[j] {
            return Err(j);
        }
        let alpha = if col[j] > 0.0 { -alpha_norm } else { alpha_norm };
        let mut v: Vec<f64> = col[j..].to_vec();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        let reflect = |target: &mut [f64]| {
            let dot: f64 = v.iter().zip(target.iter()).map(|(a, b)| a * b).sum();
            let s = 2.0 * dot / vnorm2;
            for (t, vi) in target.iter_mut().zip(&v) {
                *t -= s * vi;
            }
        };
        for c in a.iter_mut().skip(j) {
            reflect(&mut c[j..]);
        }
        reflect(&mut qty[j..]);
    }
    Ok(qty[a.len()..].iter().map(|v| v * v).sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_fit_has_zero_residual() {
        let x: Vec<f64> = (0..6).map(f64::from).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v - 1.0).collect();
        let rss = least_squares_rss(&[vec![1.0; 6], x], &y).unwrap();
        assert!(rss < 1e-20);
    }

    #[test]
    fn intercept_only_rss_is_total_ss() {
        let y = [1.0, 2.0, 4.0, 7.0];
        let m = y.iter().sum::<f64>() / 4.0;
        let tss: f64 = y.iter().map(|v| (v - m) * (v - m)).sum();
        let rss = least_squares_rss(&[vec![1.0; 4]], &y).unwrap();
        assert!((rss - tss).abs() < 1e-12);
    }

    #[test]
    fn collinear_column_detected() {
        let x = vec![1.0, 2.0, 3.0, 4.0];
        let twice: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
        assert_eq!(least_squares_rss(&[vec![1.0; 4], x, twice], &[1.0, 0.0, 2.0, 1.0]), Err(2));
    }
}
