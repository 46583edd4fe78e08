//! Anisotropic network model over Cα beads.
//!
//! Beads closer than the cutoff are joined by springs of uniform stiffness
//! gamma. Mode frequencies are square roots of the Hessian eigenvalues after
//! the six rigid-body modes; they are reported normalized by the largest of
//! the requested modes.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::context::Coord;
use crate::eval::EvalError;

pub const DEFAULT_ANM_CUTOFF: f64 = 15.0;
pub const DEFAULT_GAMMA: f64 = 1.0;
/// Eigenvalues below this are treated as rigid-body (zero) modes.
pub const ZERO_MODE_TOLERANCE: f64 = 1e-8;
pub const RIGID_BODY_MODES: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnmParams {
    pub cutoff: f64,
    pub gamma: f64,
}

impl Default for AnmParams {
    fn default() -> Self {
        AnmParams {
            cutoff: DEFAULT_ANM_CUTOFF,
            gamma: DEFAULT_GAMMA,
        }
    }
}

/// The 3n × 3n ANM Hessian.
pub fn anm_hessian(coords: &[Coord], cutoff: f64, gamma: f64) -> DMatrix<f64> {
    let n = coords.len();
    let mut h = DMatrix::<f64>::zeros(3 * n, 3 * n);
    let cutoff2 = cutoff * cutoff;
    for i in 0..n {
        for j in (i + 1)..n {
            let d = [
                coords[j][0] - coords[i][0],
                coords[j][1] - coords[i][1],
                coords[j][2] - coords[i][2],
            ];
            let r2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
            if r2 >= cutoff2 {
                continue;
            }
            for a in 0..3 {
                for b in 0..3 {
                    let k = -gamma * d[a] * d[b] / r2;
                    h[(3 * i + a, 3 * j + b)] = k;
                    h[(3 * j + a, 3 * i + b)] = k;
                    h[(3 * i + a, 3 * i + b)] -= k;
                    h[(3 * j + a, 3 * j + b)] -= k;
                }
            }
        }
    }
    h
}

/// Hessian eigenvalues in ascending order.
pub fn anm_eigenvalues(coords: &[Coord], cutoff: f64, gamma: f64) -> Vec<f64> {
    let mut values: Vec<f64> = anm_hessian(coords, cutoff, gamma)
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .collect();
    values.sort_by(f64::total_cmp);
    values
}

/// The `k` lowest non-rigid mode frequencies, ascending, divided by the
/// largest of them (so the last entry is exactly 1.0).
pub fn anm_frequencies(coords: &[Coord], cutoff: f64, gamma: f64, k: usize) -> Result<Vec<f64>, EvalError> {
    let n = coords.len();
    if k == 0 {
        return Err(EvalError::InvalidInput("mode count must be at least 1".into()));
    }
    if n < 4 {
        return Err(EvalError::InsufficientModes {
            requested: k,
            available: (3 * n).saturating_sub(RIGID_BODY_MODES),
        });
    }
    let cutoff2 = cutoff * cutoff;
    let isolated = (0..n).any(|i| {
        !(0..n).any(|j| {
            j != i && {
                let d = [
                    coords[j][0] - coords[i][0],
                    coords[j][1] - coords[i][1],
                    coords[j][2] - coords[i][2],
                ];
                d[0] * d[0] + d[1] * d[1] + d[2] * d[2] < cutoff2
            }
        })
    });

    let values = anm_eigenvalues(coords, cutoff, gamma);
    let zero_modes = values.iter().filter(|&&v| v < ZERO_MODE_TOLERANCE).count();
    if isolated || zero_modes > RIGID_BODY_MODES {
        return Err(EvalError::DisconnectedStructure { zero_modes });
    }
    let available = values.len() - RIGID_BODY_MODES;
    if available < k {
        return Err(EvalError::InsufficientModes {
            requested: k,
            available,
        });
    }
    let freqs: Vec<f64> = values[RIGID_BODY_MODES..RIGID_BODY_MODES + k]
        .iter()
        .map(|v| v.sqrt())
        .collect();
    let max = freqs[k - 1];
    Ok(freqs.into_iter().map(|f| f / max).collect())
}
