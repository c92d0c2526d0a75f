/// Outcome of a one-sided exact sign test of "A scores higher than B".
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignTest {
    pub wins: usize,
    pub losses: usize,
    pub ties: usize,
    /// `P[X >= wins]` for `X ~ Binomial(wins + losses, 1/2)`.
    pub p_value: f64,
    /// Set when every pair tied, so the test carries no information.
    pub all_ties: bool,
}

/// Upper tail `P[X >= k]` of `Binomial(n, 1/2)`.
pub fn binomial_half_upper_tail(n: usize, k: usize) -> f64 {
    if k == 0 {
        return 1.0;
    }
    if k > n {
        return 0.0;
    }
    if 2 * k <= n {
        // Tail is at least 1/2; take the complement, whose terms shrink.
        return 1.0 - decreasing_tail(n, n - k + 1);
    }
    decreasing_tail(n, k)
}

/// `P[X >= k]` for `k > n / 2`.
fn decreasing_tail(n: usize, k: usize) -> f64 {
    if n <= 1000 {
        // Upward from pmf(n) = 2^-n, which is still a normal double here.
        let mut term = 0.5f64.powi(n as i32);
        let mut acc = term;
        for j in (k + 1..=n).rev() {
            term *= j as f64 / (n - j + 1) as f64;
            acc += term;
        }
        return acc.min(1.0);
    }
    // Log space, summed from pmf(k) down.
    // ln C(n, k) = ln C(n, n - k), the shorter product.
    let m = n - k;
    let ln_c: f64 = (0..m).map(|j| ((n - j) as f64).ln() - ((j + 1) as f64).ln()).sum();
    let mut acc = 1.0;
    let mut term = 0.0;
    for j in k..n {
        term += ((n - j) as f64).ln() - ((j + 1) as f64).ln();
        acc += term.exp();
    }
    (ln_c + acc.ln() - n as f64 * std::f64::consts::LN_2).exp().min(1.0)
}

pub fn sign_test(scores_a: &[f64], scores_b: &[f64]) -> crate::Result<SignTest> {
    if scores_a.len() != scores_b.len() {
        return Err(crate::Error::LengthMismatch {
            left: scores_a.len(),
            right: scores_b.len(),
        });
    }
    let (mut wins, mut losses, mut ties) = (0, 0, 0);
    for (a, b) in scores_a.iter().zip(scores_b) {
        match a.partial_cmp(b) {
            Some(std::cmp::Ordering::Greater) => wins += 1,
            Some(std::cmp::Ordering::Less) => losses += 1,
            _ => ties += 1,
        }
    }
    let all_ties = wins + losses == 0;
    let p_value = if all_ties {
        log::warn!("sign test: all {ties} pairs tied");
        1.0
    } else {
        binomial_half_upper_tail(wins + losses, wins)
    };
    Ok(SignTest {
        wins,
        losses,
        ties,
        p_value,
        all_ties,
    })
}
