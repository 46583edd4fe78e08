//! Idealized Cα traces built from a secondary structure string.
//!
//! Helix segments follow a 3.6 residue/turn helix (rise 1.5 Å, radius
//! 2.3 Å), strand segments an extended zig-zag (rise 3.5 Å, ±10°) with a
//! slight twist, and loops a seeded self-avoiding walk with 3.8 Å steps.
//! Helix runs shorter than 4 and strand runs shorter than 3 are built as
//! loop. Every consecutive Cα pair is 3.8 ± 0.4 Å apart.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::context::{euclidean, Coord};
use crate::eval::ss::{MIN_HELIX_RUN, MIN_STRAND_RUN};
use crate::eval::EvalError;
use crate::sequence::{ProteinSequence, SsLabel, SsString};

pub const BOND: f64 = 3.8;
pub const HELIX_RISE: f64 = 1.5;
pub const HELIX_RADIUS: f64 = 2.3;
pub const HELIX_RESIDUES_PER_TURN: f64 = 3.6;
pub const STRAND_RISE: f64 = 3.5;
pub const STRAND_TILT_DEG: f64 = 10.0;
const STRAND_TWIST_DEG: f64 = -20.0;
/// Loop walk tries to stay this far from all earlier beads.
const AVOID_RADIUS: f64 = 4.0;
const LOOP_TRIES: usize = 64;
const AXIS_CANDIDATES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Shape {
    Helix,
    Strand,
    Loop,
}

type Vec3 = [f64; 3];

fn add(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

fn scale(a: Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn normalize(a: Vec3) -> Vec3 {
    let n = (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt();
    scale(a, 1.0 / n)
}

fn random_unit(rng: &mut ChaCha8Rng) -> Vec3 {
    // Uniform on the sphere via z and azimuth.
    let z: f64 = rng.random_range(-1.0..1.0);
    let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let r = (1.0 - z * z).sqrt();
    [r * phi.cos(), r * phi.sin(), z]
}

/// Orthonormal frame `(u, w, axis)`.
fn frame(axis: Vec3) -> (Vec3, Vec3, Vec3) {
    let a = normalize(axis);
    let helper = if a[0].abs() < 0.9 {
        [1.0, 0.0, 0.0]
    } else {
        [0.0, 1.0, 0.0]
    };
    let u = normalize(cross(a, helper));
    let w = cross(a, u);
    (u, w, a)
}

/// Offset of residue `k` of a segment relative to its first residue.
fn segment_offsets(shape: Shape, len: usize, axis: Vec3) -> Vec<Vec3> {
    let (u, w, a) = frame(axis);
    let point = |k: usize| -> Vec3 {
        let kf = k as f64;
        match shape {
            Shape::Helix => {
                let theta = kf * std::f64::consts::TAU / HELIX_RESIDUES_PER_TURN;
                add(
                    add(
                        scale(u, HELIX_RADIUS * theta.cos()),
                        scale(w, HELIX_RADIUS * theta.sin()),
                    ),
                    scale(a, HELIX_RISE * kf),
                )
            }
            Shape::Strand => {
                let amp = STRAND_RISE * STRAND_TILT_DEG.to_radians().tan() / 2.0;
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                let phi = kf * STRAND_TWIST_DEG.to_radians();
                add(
                    add(scale(u, sign * amp * phi.cos()), scale(w, sign * amp * phi.sin())),
                    scale(a, STRAND_RISE * kf),
                )
            }
            Shape::Loop => unreachable!("loops are walked, not placed"),
        }
    };
    let origin = point(0);
    (0..len)
        .map(|k| {
            let p = point(k);
            [p[0] - origin[0], p[1] - origin[1], p[2] - origin[2]]
        })
        .collect()
}

fn min_distance_to(points: &[Coord], p: &Coord) -> f64 {
    points.iter().map(|q| euclidean(p, q)).fold(f64::INFINITY, f64::min)
}

fn segments(ss: &SsString) -> Vec<(Shape, usize)> {
    let labels = ss.labels();
    let mut out: Vec<(Shape, usize)> = Vec::new();
    let mut start = 0;
    while start < labels.len() {
        let label = labels[start];
        let end = (start..labels.len())
            .find(|&j| labels[j] != label)
            .unwrap_or(labels.len());
        let len = end - start;
        let shape = match label {
            SsLabel::Helix if len >= MIN_HELIX_RUN => Shape::Helix,
            SsLabel::Strand if len >= MIN_STRAND_RUN => Shape::Strand,
            _ => Shape::Loop,
        };
        match out.last_mut() {
            Some((Shape::Loop, l)) if shape == Shape::Loop => *l += len,
            _ => out.push((shape, len)),
        }
        start = end;
    }
    out
}

fn trace_seed(sequence: &ProteinSequence, ss: &SsString) -> u64 {
    let digest = Sha256::new()
        .chain_update(sequence.to_string().as_bytes())
        .chain_update(b"/")
        .chain_update(ss.to_string().as_bytes())
        .finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

/// Builds a deterministic Cα trace for `sequence` folded as `ss`.
pub fn build_backbone(sequence: &ProteinSequence, ss: &SsString) -> Result<Vec<Coord>, EvalError> {
    if sequence.len() != ss.len() {
        return Err(EvalError::LengthMismatch {
            left: sequence.len(),
            right: ss.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(trace_seed(sequence, ss));
    let mut coords: Vec<Coord> = Vec::with_capacity(sequence.len());
    let mut heading: Vec3 = [0.0, 0.0, 1.0];

    for (shape, len) in segments(ss) {
        match shape {
            Shape::Loop => {
                for _ in 0..len {
                    let Some(&last) = coords.last() else {
                        coords.push([0.0, 0.0, 0.0]);
                        continue;
                    };
                    let earlier = &coords[..coords.len() - 1];
                    let mut best: Option<(f64, Coord)> = None;
                    for _ in 0..LOOP_TRIES {
                        // Bias forward so walks do not curl onto themselves.
                        let dir = normalize(add(random_unit(&mut rng), scale(heading, 0.5)));
                        let cand = add(last, scale(dir, BOND));
                        let clearance = min_distance_to(earlier, &cand);
                        if clearance >= AVOID_RADIUS {
                            best = Some((clearance, cand));
                            break;
                        }
                        if best.is_none_or(|(c, _)| clearance > c) {
                            best = Some((clearance, cand));
                        }
                    }
                    let (_, next) = best.expect("at least one loop candidate");
                    heading = normalize([next[0] - last[0], next[1] - last[1], next[2] - last[2]]);
                    coords.push(next);
                }
            }
            Shape::Helix | Shape::Strand => {
                let start_of_chain = coords.is_empty();
                let mut best: Option<(f64, Vec<Coord>, Vec3)> = None;
                let candidates = if start_of_chain { 1 } else { AXIS_CANDIDATES };
                for c in 0..candidates {
                    let axis = if start_of_chain {
                        [0.0, 0.0, 1.0]
                    } else if c == 0 {
                        heading
                    } else {
                        random_unit(&mut rng)
                    };
                    let origin = match coords.last() {
                        Some(&last) => add(last, scale(normalize(axis), BOND)),
                        None => [0.0, 0.0, 0.0],
                    };
                    let placed: Vec<Coord> = segment_offsets(shape, len, axis)
                        .into_iter()
                        .map(|o| add(origin, o))
                        .collect();
                    let earlier = if coords.is_empty() {
                        &coords[..]
                    } else {
                        &coords[..coords.len() - 1]
                    };
                    let clearance = placed
                        .iter()
                        .map(|p| min_distance_to(earlier, p))
                        .fold(f64::INFINITY, f64::min);
                    if best.as_ref().is_none_or(|(c, _, _)| clearance > *c) {
                        best = Some((clearance, placed, axis));
                    }
                    if clearance >= AVOID_RADIUS {
                        break;
                    }
                }
                let (_, placed, axis) = best.expect("at least one axis candidate");
                heading = normalize(axis);
                coords.extend(placed);
            }
        }
    }
    Ok(coords)
}
