use crate::{Error, Result};

/// One total-angular-momentum sector of N spin-½ particles.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sector {
    /// Twice the sector spin, 2j.
    pub two_j: usize,
    /// Number of copies d_j of the irrep in (C²)^⊗N.
    pub multiplicity: f64,
}

impl Sector {
    pub fn j(&self) -> f64 {
        self.two_j as f64 / 2.0
    }

    pub fn dim(&self) -> usize {
        self.two_j + 1
    }
}

/// Dicke basis |J, m⟩ of N spin-½ particles, index k ↔ m = J − k.
#[derive(Clone, Debug, PartialEq)]
pub struct DickeBasis {
    pub n_spins: usize,
    pub sectors: Option<Vec<Sector>>,
}

impl DickeBasis {
    /// Maximal-j basis of `n_spins` ≥ 1 spins.
    pub fn new(n_spins: usize) -> Result<Self> {
        if n_spins == 0 {
            return Err(Error::param("n_spins", "must be at least 1"));
        }
        Ok(DickeBasis { n_spins, sectors: None })
    }

    /// Basis carrying the full permutation-invariant sector list.
    pub fn with_sectors(n_spins: usize) -> Result<Self> {
        let mut b = Self::new(n_spins)?;
        b.sectors = Some(sector_list(n_spins));
        Ok(b)
    }

    /// Total spin J = N/2.
    pub fn j_total(&self) -> f64 {
        self.n_spins as f64 / 2.0
    }

    /// Dimension N + 1 of the maximal-j sector.
    pub fn dim(&self) -> usize {
        self.n_spins + 1
    }

    /// Magnetic quantum number of basis index `k`.
    pub fn m(&self, k: usize) -> f64 {
        self.j_total() - k as f64
    }

    /// Whether two bases describe the same spin system.
    pub fn compatible(&self, other: &DickeBasis) -> bool {
        self.n_spins == other.n_spins
    }
}

/// Binomial coefficient in floating point (exact for results below 2^53).
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0_f64;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc.round_if_exact()
}

trait RoundIfExact {
    fn round_if_exact(self) -> f64;
}

impl RoundIfExact for f64 {
    fn round_if_exact(self) -> f64 {
        if self < 9.0e15 {
            self.round()
        } else {
            self
        }
    }
}

/// d_j = N!(2j+1)/((N/2+j+1)!(N/2−j)!), the multiplicity of spin-j irreps.
pub fn multiplicity(n_spins: usize, two_j: usize) -> f64 {
    assert!(
        two_j <= n_spins && (n_spins - two_j) % 2 == 0,
        "invalid sector 2j={two_j} for N={n_spins}"
    );
    let k = (n_spins - two_j) / 2;
    // C(N, N/2−j)·(2j+1)/(N/2+j+1)
    let v = binomial(n_spins, k) * (two_j + 1) as f64 / (n_spins - k + 1) as f64;
    v.round_if_exact()
}

/// Sectors j = N/2, N/2 − 1, …, (N mod 2)/2 in that order.
pub fn sector_list(n_spins: usize) -> Vec<Sector> {
    (0..=n_spins / 2)
        .map(|k| {
            let two_j = n_spins - 2 * k;
            Sector {
                two_j,
                multiplicity: multiplicity(n_spins, two_j),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_multiplicities() {
        // N = 4: j = 2, 1, 0 with d = 1, 3, 2.
        let s = sector_list(4);
        let d: Vec<f64> = s.iter().map(|s| s.multiplicity).collect();
        assert_eq!(d, vec![1.0, 3.0, 2.0]);
        // N = 5: j = 5/2, 3/2, 1/2 with d = 1, 4, 5.
        let d: Vec<f64> = sector_list(5).iter().map(|s| s.multiplicity).collect();
        assert_eq!(d, vec![1.0, 4.0, 5.0]);
    }

    #[test]
    fn sectors_span_hilbert_and_pi_operator_spaces() {
        for n in 1..=40usize {
            let s = sector_list(n);
            let hilbert: f64 = s.iter().map(|s| s.multiplicity * s.dim() as f64).sum();
            assert!((hilbert - 2f64.powi(n as i32)).abs() <= 1e-12 * hilbert);
            // Permutation-invariant operators: one (2j+1)² block per sector.
            let pi: usize = s.iter().map(|s| s.dim() * s.dim()).sum();
            assert_eq!(pi as f64, binomial(n + 3, 3));
        }
    }

    #[test]
    fn zero_spins_rejected() {
        assert!(DickeBasis::new(0).is_err());
    }
}
