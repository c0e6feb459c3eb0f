//! Accuracy metrics against ground truth.

use std::io::Write;

use ndarray::ArrayView1;

use crate::error::{Error, Result};
use crate::solver::UnmixingResult;
use crate::types::{AbundanceMatrix, EndmemberMatrix, GroundTruth};

/// Spectral angle between a reference and an estimated spectrum.
pub fn sad_metric(truth: ArrayView1<'_, f64>, estimate: ArrayView1<'_, f64>) -> Result<f64> {
    crate::graph::sad(truth, estimate)
}

/// Matching cost: an all-zero estimated spectrum (a collapsed endmember)
/// scores π/2 against every reference, like an orthogonal one.
fn matched_angle(truth: ArrayView1<'_, f64>, estimate: ArrayView1<'_, f64>) -> Result<f64> {
    if estimate.iter().all(|v| *v == 0.0) && truth.len() == estimate.len() {
        return Ok(std::f64::consts::FRAC_PI_2);
    }
    sad_metric(truth, estimate)
}

/// `sqrt(‖z − ẑ‖² / N)`.
pub fn rmse(z: ArrayView1<'_, f64>, z_hat: ArrayView1<'_, f64>) -> Result<f64> {
    if z.len() != z_hat.len() {
        return Err(Error::shape(format!(
            "abundance maps have {} and {} pixels",
            z.len(),
            z_hat.len()
        )));
    }
    if z.is_empty() {
        return Err(Error::Degenerate("empty abundance map".into()));
    }
    let sq: f64 = z.iter().zip(z_hat).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok((sq / z.len() as f64).sqrt())
}

/// Bijection `assignment[estimated] = truth` minimizing the summed spectral
/// angle. Exact, by dynamic programming over subsets of truth endmembers.
/// All-zero estimated columns cost π/2 against every truth column.
pub fn match_endmembers(truth: &EndmemberMatrix, estimate: &EndmemberMatrix) -> Result<Vec<usize>> {
    let k = truth.count();
    if estimate.count() != k || estimate.bands() != truth.bands() {
        return Err(Error::shape(format!(
            "truth is {}x{}, estimate is {}x{}",
            truth.bands(),
            k,
            estimate.bands(),
            estimate.count()
        )));
    }
    if k > 20 {
        return Err(Error::param(format!("matching supports at most 20 endmembers, got {k}")));
    }
    let mut cost = vec![vec![0.0; k]; k];
    for (e, row) in cost.iter_mut().enumerate() {
        for (t, c) in row.iter_mut().enumerate() {
            *c = matched_angle(truth.data().column(t), estimate.data().column(e))?;
        }
    }

    // best[mask] = least cost of assigning estimates 0..popcount(mask) to the
    // truth set `mask`.
    let full = 1usize << k;
    let mut best = vec![f64::INFINITY; full];
    let mut choice = vec![usize::MAX; full];
    best[0] = 0.0;
    for mask in 0..full {
        if !best[mask].is_finite() {
            continue;
        }
        let e = mask.count_ones() as usize;
        if e == k {
            continue;
        }
        for (t, &step) in cost[e].iter().enumerate() {
            if mask & (1 << t) != 0 {
                continue;
            }
            let next = mask | (1 << t);
            let c = best[mask] + step;
            if c < best[next] {
                best[next] = c;
                choice[next] = t;
            }
        }
    }
    let mut assignment = vec![0; k];
    let mut mask = full - 1;
    for e in (0..k).rev() {
        let t = choice[mask];
        assignment[e] = t;
        mask &= !(1 << t);
    }
    Ok(assignment)
}

/// Per-endmember accuracy after optimal matching. Vectors are indexed by
/// ground-truth endmember.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    /// `assignment[estimated] = truth`.
    pub assignment: Vec<usize>,
    /// Spectral angles in radians.
    pub sad_per_endmember: Vec<f64>,
    pub rmse_per_map: Vec<f64>,
    pub mean_sad: f64,
    pub mean_rmse: f64,
}

impl EvalReport {
    /// CSV with header `endmember,sad_rad,rmse`, one row per truth endmember
    /// (1-based) and a final `mean` row. With `sad_x100` the angles are
    /// multiplied by 100 and the column is named `sad_rad_x100`.
    pub fn write_csv<W: Write>(&self, mut out: W, sad_x100: bool) -> Result<()> {
        let scale = if sad_x100 { 100.0 } else { 1.0 };
        let header = if sad_x100 { "sad_rad_x100" } else { "sad_rad" };
        writeln!(out, "endmember,{header},rmse")?;
        for (k, (s, r)) in self.sad_per_endmember.iter().zip(&self.rmse_per_map).enumerate() {
            writeln!(out, "{},{},{}", k + 1, s * scale, r)?;
        }
        writeln!(out, "mean,{},{}", self.mean_sad * scale, self.mean_rmse)?;
        Ok(())
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Scores estimated factors against `truth`.
pub fn evaluate_factors(
    endmembers: &EndmemberMatrix,
    abundances: &AbundanceMatrix,
    truth: &GroundTruth,
) -> Result<EvalReport> {
    if abundances.count() != endmembers.count() || abundances.pixels() != truth.abundances.pixels() {
        return Err(Error::shape(format!(
            "estimated abundances are {}x{}, truth is {}x{}",
            abundances.count(),
            abundances.pixels(),
            truth.abundances.count(),
            truth.abundances.pixels()
        )));
    }
    let assignment = match_endmembers(&truth.endmembers, endmembers)?;
    let k = assignment.len();
    let mut sad = vec![0.0; k];
    let mut err = vec![0.0; k];
    for (e, &t) in assignment.iter().enumerate() {
        sad[t] = matched_angle(truth.endmembers.data().column(t), endmembers.data().column(e))?;
        err[t] = rmse(truth.abundances.map(t), abundances.map(e))?;
    }
    Ok(EvalReport {
        mean_sad: mean(&sad),
        mean_rmse: mean(&err),
        assignment,
        sad_per_endmember: sad,
        rmse_per_map: err,
    })
}

pub fn evaluate(result: &UnmixingResult, truth: &GroundTruth) -> Result<EvalReport> {
    evaluate_factors(&result.endmembers, &result.abundances, truth)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array1, Array2};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn truth(rng: &mut ChaCha8Rng, l: usize, k: usize, n: usize) -> GroundTruth {
        GroundTruth::new(
            EndmemberMatrix::new(Array2::from_shape_fn((l, k), |_| rng.random_range(0.0..1.0)))
                .unwrap(),
            AbundanceMatrix::new(Array2::from_shape_fn((k, n), |_| rng.random_range(0.0..1.0)))
                .unwrap(),
        )
        .unwrap()
    }

    fn permute(t: &GroundTruth, perm: &[usize]) -> (EndmemberMatrix, AbundanceMatrix) {
        // Estimated endmember e is truth endmember perm[e].
        let mut m = Array2::zeros(t.endmembers.data().raw_dim());
        let mut a = Array2::zeros(t.abundances.data().raw_dim());
        for (e, &src) in perm.iter().enumerate() {
            m.column_mut(e).assign(&t.endmembers.data().column(src));
            a.row_mut(e).assign(&t.abundances.data().row(src));
        }
        (EndmemberMatrix::new(m).unwrap(), AbundanceMatrix::new(a).unwrap())
    }

    #[test]
    fn sad_metric_properties() {
        let v = array![0.2, 0.5, 0.9];
        let v2 = &v * 2.0;
        assert!(sad_metric(v.view(), v2.view()).unwrap().abs() < 1e-7);
        let s = sad_metric(array![1.0, 0.0].view(), array![0.0, 3.0].view()).unwrap();
        assert!((s - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        let (x, y) = (array![0.3, 0.1, 0.7, 0.2], array![0.5, 0.4, 0.1, 0.9]);
        let mut dot = 0.0;
        let (mut nx, mut ny) = (0.0f64, 0.0f64);
        for i in 0..4 {
            dot += x[i] * y[i];
            nx += x[i] * x[i];
            ny += y[i] * y[i];
        }
        let oracle = (dot / (nx.sqrt() * ny.sqrt())).acos();
        assert!((sad_metric(x.view(), y.view()).unwrap() - oracle).abs() < 1e-14);
    }

    #[test]
    fn rmse_cases() {
        let z = Array1::from_vec(vec![0.1, 0.5, 0.3]);
        assert_eq!(rmse(z.view(), z.view()).unwrap(), 0.0);
        let ones = Array1::<f64>::ones(7);
        let zeros = Array1::<f64>::zeros(7);
        assert_eq!(rmse(ones.view(), zeros.view()).unwrap(), 1.0);
        assert!(rmse(ones.view(), z.view()).is_err());

        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a: Vec<f64> = (0..30).map(|_| rng.random()).collect();
        let b: Vec<f64> = (0..30).map(|_| rng.random()).collect();
        let mut s = 0.0;
        for i in 0..30 {
            s += (a[i] - b[i]).powi(2);
        }
        let oracle = (s / 30.0).sqrt();
        let (a, b) = (Array1::from_vec(a), Array1::from_vec(b));
        assert!((rmse(a.view(), b.view()).unwrap() - oracle).abs() < 1e-12);
        assert_eq!(rmse(a.view(), b.view()).unwrap(), rmse(b.view(), a.view()).unwrap());
    }

    #[test]
    fn matching_identity_and_swap() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let t = truth(&mut rng, 6, 3, 5);
        assert_eq!(match_endmembers(&t.endmembers, &t.endmembers).unwrap(), vec![0, 1, 2]);
        let (m, _) = permute(&t, &[1, 0, 2]);
        assert_eq!(match_endmembers(&t.endmembers, &m).unwrap(), vec![1, 0, 2]);
    }

    #[test]
    fn matching_recovers_planted_permutation() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for trial in 0..20 {
            let k = 2 + trial % 5;
            let t = truth(&mut rng, 30, k, 4);
            let mut perm: Vec<usize> = (0..k).collect();
            for i in (1..k).rev() {
                perm.swap(i, rng.random_range(0..=i));
            }
            let (m, _) = permute(&t, &perm);
            let noisy = m.data().mapv(|v| v * (1.0 + 0.01 * rng.random_range(-1.0..1.0)));
            let est = EndmemberMatrix::new(noisy).unwrap();
            assert_eq!(match_endmembers(&t.endmembers, &est).unwrap(), perm);
        }
    }

    #[test]
    fn evaluate_exact_and_permuted() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let t = truth(&mut rng, 5, 4, 9);
        let r = evaluate_factors(&t.endmembers, &t.abundances, &t).unwrap();
        assert!(r.sad_per_endmember.iter().all(|s| s.abs() < 1e-7));
        assert_eq!(r.mean_rmse, 0.0);
        let (m, a) = permute(&t, &[2, 3, 1, 0]);
        let p = evaluate_factors(&m, &a, &t).unwrap();
        assert_eq!(p.assignment, vec![2, 3, 1, 0]);
        assert_eq!(p.mean_rmse, 0.0);
        assert!(p.mean_sad < 1e-7);
    }

    #[test]
    fn evaluate_mean_matches_hand_computation() {
        let t = GroundTruth::new(
            EndmemberMatrix::new(array![[1.0, 0.0], [0.0, 1.0]]).unwrap(),
            AbundanceMatrix::new(array![[1.0, 0.0], [0.0, 1.0]]).unwrap(),
        )
        .unwrap();
        // Estimate 0 sits at 30° from truth 1, estimate 1 at 45° from truth 0.
        let (s30, c30) = (0.5f64, 3f64.sqrt() / 2.0);
        let est_m = EndmemberMatrix::new(array![[s30, 1.0], [c30, 1.0]]).unwrap();
        let est_a = AbundanceMatrix::new(array![[0.0, 0.5], [1.0, 0.0]]).unwrap();
        let r = evaluate_factors(&est_m, &est_a, &t).unwrap();
        assert_eq!(r.assignment, vec![1, 0]);
        let expected_sad = (std::f64::consts::FRAC_PI_6 + std::f64::consts::FRAC_PI_4) / 2.0;
        assert!((r.mean_sad - expected_sad).abs() < 1e-12);
        // truth map 0 = [1,0] vs estimate row 1 = [1,0]; truth map 1 = [0,1]
        // vs estimate row 0 = [0,0.5].
        assert_eq!(r.rmse_per_map, vec![0.0, (0.25f64 / 2.0).sqrt()]);
        assert!((r.mean_rmse - (0.125f64).sqrt() / 2.0).abs() < 1e-15);
    }

    #[test]
    fn report_csv() {
        let r = EvalReport {
            assignment: vec![0, 1],
            sad_per_endmember: vec![0.01, 0.03],
            rmse_per_map: vec![0.5, 0.25],
            mean_sad: 0.02,
            mean_rmse: 0.375,
        };
        let mut buf = Vec::new();
        r.write_csv(&mut buf, false).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "endmember,sad_rad,rmse\n1,0.01,0.5\n2,0.03,0.25\nmean,0.02,0.375\n"
        );
        let mut buf = Vec::new();
        r.write_csv(&mut buf, true).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("endmember,sad_rad_x100,rmse\n1,1,"));
    }

    #[test]
    fn shape_errors() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let t = truth(&mut rng, 5, 3, 4);
        let other = truth(&mut rng, 5, 2, 4);
        assert!(match_endmembers(&t.endmembers, &other.endmembers).is_err());
        assert!(evaluate_factors(&other.endmembers, &other.abundances, &t).is_err());
    }

    #[test]
    fn collapsed_endmember_scores_right_angle() {
        let t = GroundTruth::new(
            EndmemberMatrix::new(array![[1.0, 0.0], [0.0, 1.0]]).unwrap(),
            AbundanceMatrix::new(array![[1.0, 0.0], [0.0, 1.0]]).unwrap(),
        )
        .unwrap();
        let m = EndmemberMatrix::new(array![[0.0, 0.0], [0.0, 1.0]]).unwrap();
        let a = AbundanceMatrix::new(array![[0.0, 0.0], [0.0, 1.0]]).unwrap();
        let r = evaluate_factors(&m, &a, &t).unwrap();
        assert_eq!(r.assignment, vec![0, 1]);
        assert_eq!(r.sad_per_endmember, vec![std::f64::consts::FRAC_PI_2, 0.0]);
        assert!(sad_metric(t.endmembers.data().column(0), m.data().column(0)).is_err());
    }
}
