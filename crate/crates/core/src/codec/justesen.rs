//! Parameter arithmetic of the Justesen code family `J_M`.
//!
//! Only the sizes are modelled; there is no encoder here. All quantities are
//! exact integers or rationals.

use num_rational::Ratio;

/// Lower bound on the relative distance for `ρ = 1/4`.
pub const DELTA_FLOOR: (u64, u64) = (1, 20);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct JustesenParams {
    pub m: u32,
    /// Codeword length `2M(2^M − 1)`.
    pub n_m: u64,
    pub rho: Ratio<u64>,
    /// Nominal information length `⌈ρ·N_M⌉`.
    pub k_m: u64,
    pub delta_floor: Ratio<u64>,
}

pub fn default_rho() -> Ratio<u64> {
    Ratio::new(1, 4)
}

/// `N_M = 2M(2^M − 1)`.
pub fn justesen_n(m: u32) -> u64 {
    assert!((1..=58).contains(&m), "M out of range: {m}");
    2 * u64::from(m) * ((1u64 << m) - 1)
}

pub fn justesen_k(m: u32, rho: Ratio<u64>) -> u64 {
    (rho * justesen_n(m)).ceil().to_integer()
}

pub fn params(m: u32, rho: Ratio<u64>) -> JustesenParams {
    JustesenParams {
        m,
        n_m: justesen_n(m),
        rho,
        k_m: justesen_k(m, rho),
        delta_floor: Ratio::new(DELTA_FLOOR.0, DELTA_FLOOR.1),
    }
}

/// Smallest `M` with `k_M ≥ s`.
pub fn choose_m(s: u64, rho: Ratio<u64>) -> JustesenParams {
    assert!(s >= 1, "group size must be positive");
    assert!(rho > Ratio::from_integer(0) && rho < Ratio::new(1, 2), "rate must lie in (0, 1/2)");
    let m = (1..=58).find(|&m| justesen_k(m, rho) >= s).expect("s too large for 64-bit lengths");
    params(m, rho)
}

/// `⌈N_M / s⌉`: codeword bits each of the `s` blocks carries per label bit.
pub fn per_node_overhead_bound(p: &JustesenParams, s: u64) -> u64 {
    p.n_m.div_ceil(s)
}

/// `N_M ≤ 5·N_{M−1}`.
pub fn growth_within_five(m: u32) -> bool {
    assert!(m >= 2);
    justesen_n(m) <= 5 * justesen_n(m - 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lengths() {
        assert_eq!(justesen_n(1), 2);
        assert_eq!(justesen_n(2), 12);
        assert_eq!(justesen_n(3), 42);
        assert_eq!(justesen_n(4), 120);
    }

    #[test]
    fn choose() {
        let r = default_rho();
        let p = choose_m(3, r);
        assert_eq!((p.m, p.k_m), (2, 3));
        let p = choose_m(1, r);
        assert_eq!((p.m, p.k_m), (1, 1));
        assert_eq!(choose_m(4, r).m, 3);
        assert_eq!(choose_m(11, r).m, 3);
        assert_eq!(choose_m(12, r).m, 4);
        // N_5 = 310, k_5 = 78; N_6 = 756, k_6 = 189.
        let p = choose_m(100, r);
        assert_eq!((p.m, p.n_m, p.k_m), (6, 756, 189));
        assert_eq!(per_node_overhead_bound(&p, 100), 8);
        assert_eq!(p.delta_floor, Ratio::new(1, 20));
    }

    #[test]
    fn overhead_examples() {
        let r = default_rho();
        assert_eq!(per_node_overhead_bound(&choose_m(3, r), 3), 4);
        assert_eq!(per_node_overhead_bound(&choose_m(11, r), 11), 4);
    }

    #[test]
    fn growth() {
        assert!(!growth_within_five(2));
        assert!((3..=20).all(growth_within_five));
    }
}
