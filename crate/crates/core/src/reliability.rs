//! Small statistics behind the parallel-branch design.

use crate::error::{Error, Result};

/// Probability that at least one of several independent components works: `1 − Π(1 − pᵢ)`.
pub fn parallel_reliability(p_list: &[f64]) -> Result<f64> {
    if let Some(p) = p_list.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::InvalidArgument(format!("probability {p} outside [0, 1]")));
    }
    Ok(1.0 - p_list.iter().map(|p| 1.0 - p).product::<f64>())
}

/// Variance of the mean of a simple random sample of size `n` drawn without
/// replacement from `values`: `(1 − n/N)·S²/n`, `S²` the unbiased population variance.
pub fn srswor_variance(values: &[f64], n: usize) -> Result<f64> {
    let big_n = values.len();
    if n == 0 || n > big_n {
        return Err(Error::InvalidArgument(format!(
            "sample size {n} outside 1..={big_n}"
        )));
    }
    if n == big_n {
        return Ok(0.0);
    }
    let mean = values.iter().sum::<f64>() / big_n as f64;
    let s2 = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (big_n - 1) as f64;
    Ok((1.0 - n as f64 / big_n as f64) * s2 / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reliability_examples() {
        assert_eq!(parallel_reliability(&[0.9]).unwrap(), 0.9);
        assert_eq!(parallel_reliability(&[0.2, 1.0, 0.3]).unwrap(), 1.0);
        assert_eq!(parallel_reliability(&[0.5, 0.5]).unwrap(), 0.75);
        assert_eq!(parallel_reliability(&[]).unwrap(), 0.0);
        assert!(parallel_reliability(&[1.5]).is_err());
        assert!(parallel_reliability(&[f64::NAN]).is_err());
    }

    #[test]
    fn srswor_examples() {
        assert_eq!(srswor_variance(&[1.0, 5.0, 2.0], 3).unwrap(), 0.0);
        assert_eq!(srswor_variance(&[4.0; 6], 2).unwrap(), 0.0);
        // S² = 2.5 for 1..5; (1 − 2/5)·2.5/2 = 0.75
        assert!((srswor_variance(&[1.0, 2.0, 3.0, 4.0, 5.0], 2).unwrap() - 0.75).abs() < 1e-15);
        assert!(srswor_variance(&[1.0, 2.0], 0).is_err());
        assert!(srswor_variance(&[1.0, 2.0], 3).is_err());
    }
}
