//! Lindblad right-hand side on permutation-invariant j-blocks.
//!
//! Blocks store P_j = d_j·ρ_j (row-major). Collective terms act within each block;
//! single-spin dephasing couples block j to j ± 1 with recoupling weights
//! p_j = 2j(N/2 + j + 1)/(N(2j + 1)) and q_j = 1 − p_j.

use crate::exec::{for_each_mut, Execution};
use crate::ode::OdeSystem;
use crate::spin_algebra::{ladder_coefficients, multiplicity, Block};
use crate::C64;

/// Twisting/dissipation axis of a collective segment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
}

impl Axis {
    /// s² for the phase s with ⟨m_{k−1}|A|m_k⟩ = s·c_k/2 (s = 1 for x, −i for y).
    /// Every product of two A matrix elements entering the generator carries s², s̄² or 1.
    fn sigma(self) -> f64 {
        match self {
            Axis::X => 1.0,
            Axis::Y => -1.0,
        }
    }
}

/// Generator of one segment: H = −c·A², collective rate Γ' on D[A], dephasing γ.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Segment {
    pub axis: Axis,
    pub twist: f64,
    pub collective: f64,
    pub gamma: f64,
}

#[derive(Clone, Debug)]
pub(crate) struct BlockInfo {
    pub two_j: usize,
    pub dim: usize,
    pub offset: usize,
    pub mult: f64,
    m: Vec<f64>,
    /// |A_{k,k+1}| = c_{k+1}/2 (zero past the edge).
    h: Vec<f64>,
    /// |A²_{k,k+2}| = c_{k+1}c_{k+2}/4 (zero past the edge).
    e: Vec<f64>,
    /// A²_{kk} = (c_k² + c_{k+1}²)/4.
    a2: Vec<f64>,
    /// N(p_j/j² + q_j/(j+1)²), the diagonal dephasing weight.
    self_weight: f64,
    /// Coupling vector from the block above (j+1 → j), indexed by k in this block.
    from_above: Option<Vec<f64>>,
    /// Coupling vector from the block below (j−1 → j), indexed by k in this block.
    from_below: Option<Vec<f64>>,
    /// Loss vector towards j−1 (for the lowest retained block of a truncated window).
    to_below: Vec<f64>,
}

/// Block layout of a (possibly truncated) permutation-invariant state.
#[derive(Clone, Debug)]
pub(crate) struct Layout {
    pub n_spins: usize,
    pub blocks: Vec<BlockInfo>,
    /// Index of the leaked-population slot (last entry of the state vector).
    pub leak: usize,
    pub truncated: bool,
}

fn pq(n: usize, two_j: usize) -> (f64, f64) {
    let nf = n as f64;
    let j = two_j as f64 / 2.0;
    let p = 2.0 * j * (nf / 2.0 + j + 1.0) / (nf * (2.0 * j + 1.0));
    (p, 1.0 - p)
}

impl Layout {
    /// Top `window` sectors (all when `None`). `corrupt` perturbs the recoupling weights
    /// (negative control for validation).
    pub fn new(n_spins: usize, window: Option<usize>, corrupt: bool) -> Layout {
        let total = n_spins / 2 + 1;
        let k = window.unwrap_or(total).clamp(1, total);
        let nf = n_spins as f64;
        let mut blocks = Vec::with_capacity(k);
        let mut offset = 0;
        for i in 0..k {
            let two_j = n_spins - 2 * i;
            let j = two_j as f64 / 2.0;
            let dim = two_j + 1;
            let m: Vec<f64> = (0..dim).map(|k| j - k as f64).collect();
            let c = ladder_coefficients(two_j);
            let (mut p, mut q) = pq(n_spins, two_j);
            if corrupt {
                p *= 1.05;
                q = 1.0 - p * 0.95;
            }
            let self_weight = nf * (if two_j > 0 { p / (j * j) } else { 0.0 } + q / ((j + 1.0) * (j + 1.0)));
            let from_above = (i > 0).then(|| {
                let (pa, _) = pq(n_spins, two_j + 2);
                let ja = j + 1.0;
                m.iter()
                    .map(|mm| (nf * pa).sqrt() * (ja * ja - mm * mm).max(0.0).sqrt() / ja)
                    .collect()
            });
            let from_below = (i + 1 < total && i + 1 < k).then(|| {
                let (_, qb) = pq(n_spins, two_j - 2);
                m.iter()
                    .map(|mm| (nf * qb).sqrt() * (j * j - mm * mm).max(0.0).sqrt() / j)
                    .collect()
            });
            let to_below = if two_j > 0 {
                m.iter()
                    .map(|mm| nf * p * (j * j - mm * mm).max(0.0) / (j * j))
                    .collect()
            } else {
                vec![0.0; dim]
            };
            blocks.push(BlockInfo {
                two_j,
                dim,
                offset,
                mult: multiplicity(n_spins, two_j),
                h: (0..dim)
                    .map(|k| if k + 1 < dim { 0.5 * c[k + 1] } else { 0.0 })
                    .collect(),
                e: (0..dim)
                    .map(|k| if k + 2 < dim { 0.25 * c[k + 1] * c[k + 2] } else { 0.0 })
                    .collect(),
                a2: (0..dim)
                    .map(|k| 0.25 * (c[k] * c[k] + if k + 1 < dim { c[k + 1] * c[k + 1] } else { 0.0 }))
                    .collect(),
                m,
                self_weight,
                from_above,
                from_below,
                to_below,
            });
            offset += dim * dim;
        }
        Layout {
            n_spins,
            blocks,
            leak: offset,
            truncated: k < total,
        }
    }

    pub fn len(&self) -> usize {
        self.leak + 1
    }

    /// Flattens block matrices (which must match the layout's first blocks) into a state vector.
    pub fn pack(&self, blocks: &[Block], leaked: f64) -> Vec<C64> {
        let mut y = vec![C64::new(0.0, 0.0); self.len()];
        for (info, b) in self.blocks.iter().zip(blocks) {
            debug_assert_eq!(info.two_j, b.two_j);
            for k in 0..info.dim {
                for l in 0..info.dim {
                    y[info.offset + k * info.dim + l] = b.matrix[(k, l)];
                }
            }
        }
        y[self.leak] = C64::new(leaked, 0.0);
        y
    }

    pub fn unpack(&self, y: &[C64]) -> Vec<Block> {
        self.blocks
            .iter()
            .map(|info| Block {
                two_j: info.two_j,
                multiplicity: info.mult,
                matrix: nalgebra::DMatrix::from_fn(info.dim, info.dim, |k, l| y[info.offset + k * info.dim + l]),
            })
            .collect()
    }
}

/// Lindblad generator of one segment on a block layout.
pub(crate) struct BlockGenerator<'a> {
    pub layout: &'a Layout,
    pub seg: Segment,
    pub exec: Execution,
}

fn axpy(out: &mut [C64], a: C64, x: &[C64]) {
    for (o, x) in out.iter_mut().zip(x) {
        *o += a * x;
    }
}

impl BlockGenerator<'_> {
    fn block_rhs(&self, i: usize, y: &[C64], out: &mut [C64]) {
        let info = &self.layout.blocks[i];
        let d = info.dim;
        let p = &y[info.offset..info.offset + d * d];
        let row = |k: usize| &p[k * d..(k + 1) * d];
        let seg = self.seg;
        let sigma = seg.axis.sigma();
        let left = C64::new(-0.5 * seg.collective, seg.twist);
        let right = C64::new(-0.5 * seg.collective, -seg.twist);
        let (g, gc) = (seg.gamma, seg.collective);
        let nf = self.layout.n_spins as f64;
        let (h, e, a2, m) = (&info.h, &info.e, &info.a2, &info.m);
        let ra2: Vec<C64> = a2.iter().map(|a| right * *a).collect();

        // The generator preserves Hermiticity: fill the upper triangle, mirror the rest.
        for k in 0..d {
            let pk = row(k);
            let o = &mut out[k * d..(k + 1) * d];
            let lk = left * a2[k] - g * nf;
            let wk = g * info.self_weight * m[k];
            for l in k..d {
                o[l] = pk[l] * (lk + ra2[l] + wk * m[l]);
            }
            // A²P
            if k + 2 < d {
                axpy(&mut o[k..], left * (sigma * e[k]), &row(k + 2)[k..]);
            }
            if k >= 2 {
                axpy(&mut o[k..], left * (sigma * e[k - 2]), &row(k - 2)[k..]);
            }
            // PA²
            let rs = right * sigma;
            for l in k.max(2)..d {
                o[l] += rs * (e[l - 2] * pk[l - 2]);
            }
            for l in k..d.saturating_sub(2) {
                o[l] += rs * (e[l] * pk[l + 2]);
            }
            // Γ'·APA
            if gc != 0.0 {
                let mut apa = |kk: usize, hk: f64, s_lo: f64, s_hi: f64| {
                    let pr = row(kk);
                    for l in k.max(1)..d {
                        o[l] += pr[l - 1] * (gc * hk * s_lo * h[l - 1]);
                    }
                    for l in k..d - 1 {
                        o[l] += pr[l + 1] * (gc * hk * s_hi * h[l]);
                    }
                };
                if k + 1 < d {
                    apa(k + 1, h[k], sigma, 1.0);
                }
                if k >= 1 {
                    apa(k - 1, h[k - 1], 1.0, sigma);
                }
            }
            if g != 0.0 {
                if let (true, Some(u)) = (i > 0, info.from_above.as_ref()) {
                    let b = &self.layout.blocks[i - 1];
                    let da = b.dim;
                    let pa = &y[b.offset + (k + 1) * da + 1..b.offset + (k + 1) * da + 1 + d];
                    let gk = g * u[k];
                    for l in k..d {
                        o[l] += pa[l] * (gk * u[l]);
                    }
                }
                if let (true, Some(w)) = (i + 1 < self.layout.blocks.len(), info.from_below.as_ref()) {
                    if k >= 1 && k + 1 < d {
                        let b = &self.layout.blocks[i + 1];
                        let db = b.dim;
                        let pb = &y[b.offset + (k - 1) * db..b.offset + k * db];
                        let gk = g * w[k];
                        for l in k..d - 1 {
                            o[l] += pb[l - 1] * (gk * w[l]);
                        }
                    }
                }
            }
        }
        for k in 1..d {
            for l in 0..k {
                out[k * d + l] = out[l * d + k].conj();
            }
        }
    }
}

impl OdeSystem<C64> for BlockGenerator<'_> {
    fn rhs(&self, _t: f64, y: &[C64], dy: &mut [C64]) {
        let layout = self.layout;
        let mut chunks: Vec<&mut [C64]> = Vec::with_capacity(layout.blocks.len());
        let (body, leak) = dy.split_at_mut(layout.leak);
        let mut rest = body;
        for b in &layout.blocks {
            let (head, tail) = rest.split_at_mut(b.dim * b.dim);
            chunks.push(head);
            rest = tail;
        }
        for_each_mut(self.exec, &mut chunks, |i, out| self.block_rhs(i, y, out));
        let last = layout.blocks.last().unwrap();
        leak[0] = if layout.truncated && self.seg.gamma != 0.0 {
            let d = last.dim;
            let s: f64 = (0..d).map(|k| last.to_below[k] * y[last.offset + k * d + k].re).sum();
            C64::new(self.seg.gamma * s, 0.0)
        } else {
            C64::new(0.0, 0.0)
        };
    }
}
