//! The geometric-weight series `S(m; sigma) = sum_j sigma_j / (2^j sigma_0
//! ... sigma_{j-1})` and its closed form at the doubling-exponent family
//! `sigma_j = B^(-2^(j-1))`, where `S = (1 - 2^-m) / B`.

use crate::error::{Error, Result};

/// Direct summation. `sigma[0]` must equal one; `sigma[j]`, `j = 1..=m`,
/// are the remaining weights.
pub fn s_sum(sigma: &[f64]) -> Result<f64> {
    if sigma.len() < 2 {
        return Err(Error::InvalidParameter(
            "need sigma_0 = 1 and at least one further weight".into(),
        ));
    }
    if sigma[0] != 1.0 {
        return Err(Error::InvalidParameter(format!(
            "sigma_0 must be exactly 1, got {}",
            sigma[0]
        )));
    }
    if sigma.iter().any(|s| !(*s > 0.0) || !s.is_finite()) {
        return Err(Error::InvalidParameter(
            "all weights must be positive and finite".into(),
        ));
    }
    let mut denom_product = 1.0; // sigma_0 ... sigma_{j-1}
    let mut pow2 = 1.0;
    let mut total = 0.0;
    for j in 1..sigma.len() {
        pow2 *= 2.0;
        let term = sigma[j] / (pow2 * denom_product);
        if !term.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "term {j} is not finite; the weight sequence under- or overflows, \
                 use the exponent-exact geometric route"
            )));
        }
        total += term;
        denom_product *= sigma[j];
    }
    Ok(total)
}

/// Closed form `(1 - 2^-m) / B` of the sum at the doubling family.
pub fn s_sum_closed(b: f64, m: usize) -> Result<f64> {
    if !(b > 0.0) || !b.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "base must be positive and finite, got {b}"
        )));
    }
    if m == 0 {
        return Err(Error::InvalidParameter("need m >= 1".into()));
    }
    Ok((1.0 - 0.5f64.powi(m as i32)) / b)
}

/// The doubling family `sigma_j = B^(-2^(j-1))` as plain values (with
/// `sigma_0 = 1` prepended), when every member is a normal float.
pub fn geometric_sigma(b: f64, m: usize) -> Result<Vec<f64>> {
    if !(b > 0.0) || m == 0 {
        return Err(Error::InvalidParameter("need b > 0 and m >= 1".into()));
    }
    let mut out = vec![1.0];
    for j in 1..=m {
        let exponent = -(1i64 << (j - 1)) as f64;
        let s = b.powf(exponent);
        if !s.is_normal() {
            return Err(Error::InvalidParameter(format!(
                "sigma_{j} = {b}^({exponent}) is not representable as a normal f64"
            )));
        }
        out.push(s);
    }
    Ok(out)
}

/// Direct summation at the doubling family with exact integer exponent
/// arithmetic: each term is `B^(e_j - sum_{i<j} e_i) / 2^j` with
/// `e_j = -2^(j-1)`, so the floating-point range never enters even where
/// the raw weights would under- or overflow.
pub fn s_sum_geometric(b: f64, m: usize) -> Result<f64> {
    if !(b > 0.0) || !b.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "base must be positive and finite, got {b}"
        )));
    }
    if m == 0 || m > 62 {
        return Err(Error::InvalidParameter(format!(
            "term count must lie in 1..=62, got {m}"
        )));
    }
    let mut exp_sum: i128 = 0; // sum of e_i for i < j (e_0 = 0 for sigma_0 = 1)
    let mut total = 0.0;
    for j in 1..=m {
        let e_j: i128 = -(1i128 << (j - 1));
        let term_exp = e_j - exp_sum;
        let term = b.powi(term_exp as i32) * 0.5f64.powi(j as i32);
        total += term;
        exp_sum += e_j;
    }
    Ok(total)
}

/// Smallest `m` satisfying the side condition `m + 2 > log2(N d)`, carried
/// as metadata next to the sum.
pub fn min_terms_for_dimension(nd: usize) -> usize {
    let mut m = 1usize;
    while ((m + 2) as f64) <= (nd as f64).log2() {
        m += 1;
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn worked_example_b2_m2() {
        // sigma = (1, 1/2, 1/4): terms 1/4 and 1/8, total 0.375 = (1/2)(1 - 1/4).
        let sigma = vec![1.0, 0.5, 0.25];
        let s = s_sum(&sigma).unwrap();
        assert_abs_diff_eq!(s, 0.375);
        assert_abs_diff_eq!(s, s_sum_closed(2.0, 2).unwrap());
    }

    #[test]
    fn unit_base_single_term() {
        // m = 1, B = 1: sigma_1 = 1, S = 1/2 = 1 * (1 - 1/2).
        let s = s_sum(&[1.0, 1.0]).unwrap();
        assert_abs_diff_eq!(s, 0.5);
        assert_abs_diff_eq!(s_sum_closed(1.0, 1).unwrap(), 0.5);
        assert_abs_diff_eq!(s_sum_geometric(1.0, 1).unwrap(), 0.5);
    }

    #[test]
    fn three_routes_agree_where_representable() {
        for &b in &[0.5, 1.0, 2.0, 10.0] {
            for m in 1..=10usize {
                let closed = s_sum_closed(b, m).unwrap();
                let fast = s_sum_geometric(b, m).unwrap();
                assert!(
                    ((fast - closed) / closed).abs() <= 1e-14,
                    "geometric route b={b} m={m}: {fast} vs {closed}"
                );
                if let Ok(sigma) = geometric_sigma(b, m) {
                    let direct = s_sum(&sigma).unwrap();
                    assert!(
                        ((direct - closed) / closed).abs() <= 1e-14,
                        "direct route b={b} m={m}: {direct} vs {closed}"
                    );
                }
            }
        }
    }

    #[test]
    fn raw_weights_unrepresentable_for_extreme_bases() {
        // B = 10, m = 10 underflows sigma_10 = 10^-512.
        assert!(geometric_sigma(10.0, 10).is_err());
        assert!(geometric_sigma(10.0, 9).is_ok());
        // The exponent-exact route does not care.
        assert!(s_sum_geometric(10.0, 10).is_ok());
    }

    #[test]
    fn rejects_bad_weights() {
        assert!(s_sum(&[1.0]).is_err());
        assert!(s_sum(&[2.0, 1.0]).is_err());
        assert!(s_sum(&[1.0, -0.5]).is_err());
        assert!(s_sum(&[1.0, 0.0]).is_err());
        assert!(s_sum_closed(0.0, 3).is_err());
    }

    #[test]
    fn dimension_side_condition() {
        assert_eq!(min_terms_for_dimension(1), 1);
        assert_eq!(min_terms_for_dimension(8), 2);
        assert_eq!(min_terms_for_dimension(16), 3);
        assert_eq!(min_terms_for_dimension(64), 5);
    }
}
