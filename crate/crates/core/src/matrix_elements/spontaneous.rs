//! Spontaneous emission (repump) rates Γ^sp_{nl} in units of γ.

use super::absorption::REL_CUTOFF;
use super::cache::Fingerprint;
use super::franck_condon::FcTable;
use super::quadrature::EmissionQuadrature;
use super::rates::{RateKind, RateMatrix};
use crate::basis::Basis;
use crate::error::Result;
use crate::parallel;
use crate::params::SimParams;

/// Columns losing more than this fraction of their completeness sum signal a
/// truncation too tight for the working energy band.
pub const LEAK_WARN: f64 = 0.01;

pub fn spontaneous_fingerprint(basis: &Basis, params: &SimParams, quad: &EmissionQuadrature) -> u64 {
    let mut fp = Fingerprint::new(RateKind::Spontaneous);
    fp.u64(basis.dim() as u64);
    fp.u64(basis.max_shell() as u64);
    fp.f64(params.eta_sp());
    fp.bytes(&quad.fingerprint_bytes());
    fp.finish()
}

/// Γ^sp_{nl} = Σ_nodes w Π_j |FC(n_j, l_j; η_sp·|u_j|)|², column l = excited source.
pub fn build_spontaneous_rates(basis: &Basis, params: &SimParams, quad: &EmissionQuadrature) -> Result<RateMatrix> {
    params.validate()?;
    quad.check_normalized()?;
    let dim = basis.dim();
    let max = basis.max_shell() as usize;
    let side = max + 1;
    let eta_sp = params.eta_sp();
    // Per-node, per-axis FC probability tables.
    let tables: Vec<(f64, Vec<FcTable>)> = quad
        .nodes
        .iter()
        .map(|(u, w)| {
            let t = (0..dim)
                .map(|j| FcTable::new(eta_sp * u[j].abs(), max as u32))
                .collect();
            (*w, t)
        })
        .collect();
    // In fewer than three dimensions the unused direction components simply
    // carry no trap axis.
    let box_len = side.pow(dim as u32);
    let box_ids: Vec<u32> = {
        let mut v = vec![u32::MAX; box_len];
        for (id, l) in basis.levels().iter().enumerate() {
            let k = l.components().iter().fold(0usize, |acc, &c| acc * side + c as usize);
            v[k] = id as u32;
        }
        v
    };
    let columns = parallel::map_indexed(basis.len(), |l_id| {
        let l = basis.level(l_id);
        let mut acc = vec![0.0f64; box_len];
        for (w, t) in &tables {
            match dim {
                1 => {
                    for nx in 0..side {
                        acc[nx] += w * t[0].prob(nx as u16, l.axis(0));
                    }
                }
                2 => {
                    for nx in 0..side {
                        let wx = w * t[0].prob(nx as u16, l.axis(0));
                        for ny in 0..side - nx {
                            acc[nx * side + ny] += wx * t[1].prob(ny as u16, l.axis(1));
                        }
                    }
                }
                _ => {
                    for nx in 0..side {
                        let wx = w * t[0].prob(nx as u16, l.axis(0));
                        for ny in 0..side - nx {
                            let wxy = wx * t[1].prob(ny as u16, l.axis(1));
                            let base = (nx * side + ny) * side;
                            for nz in 0..side - nx - ny {
                                acc[base + nz] += wxy * t[2].prob(nz as u16, l.axis(2));
                            }
                        }
                    }
                }
            }
        }
        let mut col: Vec<(u32, f64)> = acc
            .iter()
            .zip(&box_ids)
            .filter(|(v, id)| **id != u32::MAX && **v > 0.0)
            .map(|(v, id)| (*id, *v))
            .collect();
        col.sort_by_key(|e| e.0);
        col
    });
    RateMatrix::from_columns(
        RateKind::Spontaneous,
        basis.len(),
        spontaneous_fingerprint(basis, params, quad),
        columns,
        REL_CUTOFF,
    )
}

/// Number of columns whose completeness sum falls short of 1 by more than
/// [`LEAK_WARN`].
pub fn leaky_columns(sp: &RateMatrix) -> usize {
    sp.column_sums().iter().filter(|&&s| s < 1.0 - LEAK_WARN).count()
}
