//! Entanglement depth from the locally normalized Fisher density.

use crate::error::{Error, Result};

/// Largest `f_l` a `k`-producible state of `n` qubits can reach:
/// `(s k^2 + r^2) / n` with `n = s k + r`, `0 <= r < k`.
pub fn producible_bound(k: usize, n: usize) -> f64 {
    let s = n / k;
    let r = n - s * k;
    (s * k * k + r * r) as f64 / n as f64
}

/// Smallest `k` for which `f_l` is compatible with a `k`-producible state.
/// A result `k > 1` certifies `k`-partite entanglement.
pub fn entanglement_depth(f_l: f64, n: usize) -> Result<usize> {
    if n == 0 {
        return Err(Error::InvalidParameter("entanglement depth needs at least one qubit".into()));
    }
    if !(f_l >= 0.0) {
        return Err(Error::InvalidParameter(format!("f_l must be nonnegative, got {f_l}")));
    }
    let tol = 1e-9 * (n as f64).max(1.0);
    if f_l > n as f64 + tol {
        return Err(Error::InvalidParameter(format!("f_l = {f_l} exceeds the maximum {n}")));
    }
    Ok((1..=n).find(|&k| f_l <= producible_bound(k, n) + tol).unwrap_or(n))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        assert_eq!(entanglement_depth(2.5, 8).unwrap(), 3);
        assert_eq!(entanglement_depth(8.0, 8).unwrap(), 8);
        assert_eq!(entanglement_depth(1.0, 8).unwrap(), 1);
        assert_eq!(entanglement_depth(1.0 + 1e-6, 8).unwrap(), 2);
        assert!(entanglement_depth(8.5, 8).is_err());
        assert!(entanglement_depth(-0.1, 8).is_err());
    }

    #[test]
    fn divisible_sizes_reduce_to_k() {
        for (k, n) in [(2, 8), (3, 9), (4, 12), (1, 5), (5, 5)] {
            assert!((producible_bound(k, n) - k as f64).abs() < 1e-15);
        }
    }

    #[test]
    fn bound_is_monotone() {
        for n in 1..20 {
            for k in 1..n {
                assert!(producible_bound(k + 1, n) >= producible_bound(k, n));
            }
        }
    }
}
