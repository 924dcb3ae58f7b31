use crate::error::{Error, Result};
use crate::repr_metrics::Trajectory;

/// 1-based ranks; tied values share the mean of the ranks they span.
pub fn average_ranks(values: &[f64]) -> Result<Vec<f64>> {
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::Argument("cannot rank NaN values".into()));
    }
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // Ranks start+1 ..= end, averaged.
        let rank = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    Ok(ranks)
}

fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::UndefinedCorrelation(
            "one of the inputs is constant".into(),
        ));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Argument(format!(
            "spearman inputs differ in length ({} vs {})",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::Argument(
            "spearman needs at least two observations".into(),
        ));
    }
    pearson(&average_ranks(x)?, &average_ranks(y)?)
}

/// Mean of the `k` largest eval Spearman values in `traj`.
pub fn top_k_average(traj: &Trajectory, k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::Argument("k must be at least 1".into()));
    }
    if traj.is_empty() {
        return Err(Error::Argument("trajectory has no snapshots".into()));
    }
    let mut values: Vec<f64> = traj.snapshots().iter().map(|s| s.spearman_eval).collect();
    values.sort_by(|a, b| b.total_cmp(a));
    let top = &values[..k.min(values.len())];
    Ok(top.iter().sum::<f64>() / top.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::repr_metrics::TrajectorySnapshot;

    #[test]
    fn monotone_cases() {
        assert_eq!(
            spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]).unwrap(),
            1.0
        );
        assert_eq!(
            spearman(&[1.0, 2.0, 3.0], &[30.0, 20.0, 10.0]).unwrap(),
            -1.0
        );
    }

    #[test]
    fn one_swap_is_point_eight() {
        // 1 - 6·Σd²/(n(n²-1)) with Σd² = 2, n = 4.
        let oracle = 1.0 - 6.0 * 2.0 / (4.0 * 15.0);
        let got = spearman(&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 4.0]).unwrap();
        assert_eq!(got, 0.8);
        assert!((got - oracle).abs() < 1e-15);
    }

    #[test]
    fn ties_get_average_ranks() {
        assert_eq!(
            average_ranks(&[3.0, 1.0, 3.0, 2.0]).unwrap(),
            vec![3.5, 1.0, 3.5, 2.0]
        );
    }

    #[test]
    fn constant_input_is_undefined() {
        assert!(matches!(
            spearman(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]),
            Err(Error::UndefinedCorrelation(_))
        ));
        assert!(matches!(spearman(&[1.0], &[1.0]), Err(Error::Argument(_))));
        assert!(matches!(
            spearman(&[1.0, 2.0], &[1.0]),
            Err(Error::Argument(_))
        ));
    }

    fn traj(values: &[f64]) -> Trajectory {
        Trajectory::from_snapshots(
            values
                .iter()
                .enumerate()
                .map(|(i, &s)| TrajectorySnapshot {
                    step: i as u64 + 1,
                    align_heldout: 0.0,
                    unif_heldout: 0.0,
                    align_eval: 0.0,
                    unif_eval: 0.0,
                    spearman_eval: s,
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn top_k() {
        let t = traj(&[0.5, 0.7, 0.6]);
        assert!((top_k_average(&t, 2).unwrap() - 0.65).abs() < 1e-15);
        assert_eq!(top_k_average(&t, 1).unwrap(), 0.7);
        assert_eq!(top_k_average(&t, 9).unwrap(), (0.5 + 0.7 + 0.6) / 3.0);
        assert!(top_k_average(&Trajectory::new(), 5).is_err());
        assert!(top_k_average(&t, 0).is_err());
    }
}
