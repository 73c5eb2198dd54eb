//! Phase reconstruction by heap-ordered integration of the phase gradient.
//!
//! Starting from the largest magnitude cell, phases spread to 4-neighbors
//! through trapezoidal steps of the estimated gradient, always continuing
//! from the largest already-phased cell on the integration front. Cells
//! below a relative magnitude tolerance are excluded from integration and
//! receive independent uniform random phases; disconnected islands above
//! the tolerance are re-seeded from their own maxima with phase zero.
//!
//! The masked variant keeps caller-supplied phases fixed and integrates
//! outward from the mask border; the two-pass variant runs a coarse pass
//! and then re-integrates at a fine tolerance with the coarse result as
//! the mask, which confines gradient-integration error to the loud cells
//! it was estimated on. Before the fine pass, the free rotation each
//! coarse island picked up from its zero-phase seed is removed by
//! aligning the island onto a fine-tolerance reference run; the refined
//! two-pass variant then line-searches those rotations against the target
//! magnitude through a caller-supplied synthesis-analysis projection.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::TAU;

use crate::gabor::{idgt, CoefGrid, GaborParams, Window};
use crate::gradient::PhaseGradient;
use crate::{Error, Result};

/// Reconstructed phase grid plus the set of cells that received random
/// phase instead of an integrated or copied one.
#[derive(Debug, Clone)]
pub struct PhaseEstimate {
    pub phase: Array2<f64>,
    pub random_set: Array2<bool>,
}

/// Cells with caller-supplied phase for masked integration.
#[derive(Debug, Clone)]
pub struct KnownPhaseMask {
    pub mask: Array2<bool>,
    pub phase: Array2<f64>,
}

#[derive(Copy, Clone, PartialEq)]
struct HeapEntry {
    mag: f64,
    m: u32,
    n: u32,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // Max-heap on magnitude; on ties the lexicographically smaller
        // (frame, bin) pair pops first so runs are deterministic.
        self.mag
            .total_cmp(&other.mag)
            .then_with(|| other.n.cmp(&self.n))
            .then_with(|| other.m.cmp(&self.m))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Single-pass heap integration of the phase gradient over all cells with
/// magnitude above `tol * max(magnitude)`. Cells below the threshold get
/// i.i.d. uniform phases in `[0, 2 pi)` drawn from a ChaCha stream seeded
/// with `seed`.
pub fn heap_integrate(
    magnitude: &Array2<f64>,
    gradient: &PhaseGradient,
    tol: f64,
    seed: u64,
) -> Result<PhaseEstimate> {
    integrate(magnitude, gradient, tol, None, seed)
}

/// [`heap_integrate`] with a set of fixed known phases.
///
/// Masked cells keep their given phase unconditionally (even below the
/// magnitude tolerance), are never re-integrated, and the masked cells
/// bordering unknown territory pre-load the heap so integration continues
/// outward from the known region.
pub fn heap_integrate_masked(
    magnitude: &Array2<f64>,
    gradient: &PhaseGradient,
    tol: f64,
    known: &KnownPhaseMask,
    seed: u64,
) -> Result<PhaseEstimate> {
    if known.mask.dim() != magnitude.dim() || known.phase.dim() != magnitude.dim() {
        return Err(Error::ShapeMismatch(format!(
            "mask {:?} / phase {:?} vs magnitude {:?}",
            known.mask.dim(),
            known.phase.dim(),
            magnitude.dim()
        )));
    }
    integrate(magnitude, gradient, tol, Some(known), seed)
}

/// Two-pass integration: a coarse pass at `tol1` followed by a fine pass at
/// `tol2 <= tol1` that treats every cell integrated in the first pass as
/// known. Requires `tol1 >= tol2`; equal tolerances reduce to a single pass.
///
/// Each disconnected coarse-pass island carries one free global rotation
/// from its zero-phase seed. Those rotations are fixed before the fine
/// pass by rotating every island onto a single fine-tolerance reference
/// run, so that islands anchored into the second pass agree with each
/// other instead of mixing arbitrary relative offsets at synthesis.
pub fn two_pass(
    magnitude: &Array2<f64>,
    gradient: &PhaseGradient,
    tol1: f64,
    tol2: f64,
    seed: u64,
) -> Result<PhaseEstimate> {
    if tol1 < tol2 {
        return Err(Error::InvalidArgument(format!(
            "first-pass tolerance {tol1} must not be finer than second-pass tolerance {tol2}"
        )));
    }
    let mut first = heap_integrate(magnitude, gradient, tol1, seed)?;
    if tol1 > tol2 {
        let (labels, islands) = island_labels(magnitude, tol1);
        if islands >= 2 {
            align_island_gauges(magnitude, gradient, &labels, islands, tol2, seed, &mut first)?;
        }
    }
    let known = KnownPhaseMask {
        mask: first.random_set.mapv(|r| !r),
        phase: first.phase,
    };
    heap_integrate_masked(magnitude, gradient, tol2, &known, seed)
}

/// Refinement sweeps over the island set in [`two_pass_refined`].
const REFINE_SWEEPS: usize = 2;

/// Islands refined per sweep, strongest first; the remainder keep their
/// reference-aligned rotation.
const MAX_REFINED_ISLANDS: usize = 24;

/// Candidate rotations sampled per island before parabolic interpolation.
const REFINE_ANGLES: usize = 48;

/// Cells enter an island's misfit evaluation when the island reaches them
/// at this fraction of the grid's peak magnitude.
const FOOTPRINT_REL: f64 = 1e-3;

/// [`two_pass`] with the free island rotations additionally refined against
/// the target magnitude. `project` maps a `(magnitude, phase)` grid pair to
/// the analysis coefficients of its synthesized signal; the rotation of one
/// island changes how its leakage interferes with the other islands', so
/// each island is rotated to make the re-analyzed magnitude match the
/// target as closely as possible. Only the free per-island rotations are
/// touched, never the integrated phase structure inside an island.
///
/// The closure additionally receives the column span `(lo, hi)` holding all
/// nonzero magnitudes; it may return zeros on frames far enough outside the
/// span that the synthesized signal cannot reach them through the analysis
/// window.
pub fn two_pass_refined<F>(
    magnitude: &Array2<f64>,
    gradient: &PhaseGradient,
    tol1: f64,
    tol2: f64,
    seed: u64,
    mut project: F,
) -> Result<PhaseEstimate>
where
    F: FnMut(&Array2<f64>, &Array2<f64>, (usize, usize)) -> Result<Array2<num_complex::Complex64>>,
{
    if tol1 < tol2 {
        return Err(Error::InvalidArgument(format!(
            "first-pass tolerance {tol1} must not be finer than second-pass tolerance {tol2}"
        )));
    }
    let mut first = heap_integrate(magnitude, gradient, tol1, seed)?;
    if tol1 > tol2 {
        let (labels, islands) = island_labels(magnitude, tol1);
        if islands >= 2 {
            let reference =
                align_island_gauges(magnitude, gradient, &labels, islands, tol2, seed, &mut first)?;
            refine_island_gauges(magnitude, &labels, islands, &mut first, &reference, &mut project)?;
        }
    }
    let known = KnownPhaseMask {
        mask: first.random_set.mapv(|r| !r),
        phase: first.phase,
    };
    heap_integrate_masked(magnitude, gradient, tol2, &known, seed)
}

/// One refined island: the sparse analysis response of the island alone at
/// its current rotation (`v0`) and a quarter turn ahead (`v1`), over every
/// cell the island's leakage reaches. Rotating the island by `delta` maps
/// the responses to `cos(delta) v0 + sin(delta) v1` and
/// `cos(delta) v1 - sin(delta) v0`, so later sweeps reuse the cache
/// without projecting again. Cells up to `scan` are strong enough to enter
/// the misfit line search; the weaker tail still participates in updates
/// of the accumulated full projection.
struct IslandResponse {
    cells: Vec<(usize, usize, num_complex::Complex64, num_complex::Complex64, f64)>,
    scan: usize,
}

/// Line-searches each strong island's rotation against the magnitude misfit
/// of the projected full grid, in which off-island cells carry the
/// reference phases the fine pass will approximately reproduce. The
/// islands' projections combine linearly in `(cos, sin)` of the rotation,
/// so one island costs two localized projections on the first sweep plus a
/// dense angle scan over the cells its leakage reaches.
fn refine_island_gauges<F>(
    magnitude: &Array2<f64>,
    labels: &Array2<u32>,
    islands: usize,
    first: &mut PhaseEstimate,
    reference: &PhaseEstimate,
    project: &mut F,
) -> Result<()>
where
    F: FnMut(&Array2<f64>, &Array2<f64>, (usize, usize)) -> Result<Array2<num_complex::Complex64>>,
{
    let mut model_phase = reference.phase.clone();
    for (cell, &label) in labels.indexed_iter() {
        if label != u32::MAX {
            model_phase[cell] = first.phase[cell];
        }
    }
    let cols = magnitude.ncols();
    let mut energy = vec![0.0f64; islands];
    let mut span = vec![(usize::MAX, 0usize); islands];
    for ((cell, &label), &mag) in labels.indexed_iter().zip(magnitude.iter()) {
        if label != u32::MAX {
            energy[label as usize] += mag * mag;
            let s = &mut span[label as usize];
            s.0 = s.0.min(cell.1);
            s.1 = s.1.max(cell.1 + 1);
        }
    }
    let mut order: Vec<usize> = (0..islands).collect();
    order.sort_by(|&a, &b| {
        energy[b]
            .partial_cmp(&energy[a])
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    });
    order.truncate(MAX_REFINED_ISLANDS);
    let floor = FOOTPRINT_REL * magnitude.iter().fold(0.0f64, |acc, &v| acc.max(v));
    let keep = 1e-2 * floor;
    let step = TAU / REFINE_ANGLES as f64;

    let mut responses: Vec<IslandResponse> = Vec::with_capacity(order.len());
    for sweep in 0..REFINE_SWEEPS {
        let mut base = project(magnitude, &model_phase, (0, cols))?;
        for (slot, &island) in order.iter().enumerate() {
            if sweep == 0 {
                let mut island_mag = Array2::zeros(magnitude.dim());
                let mut quad_phase = model_phase.clone();
                for (cell, &label) in labels.indexed_iter() {
                    if label as usize == island {
                        island_mag[cell] = magnitude[cell];
                        quad_phase[cell] += std::f64::consts::FRAC_PI_2;
                    }
                }
                let d0 = project(&island_mag, &model_phase, span[island])?;
                let d1 = project(&island_mag, &quad_phase, span[island])?;
                let mut cells = Vec::new();
                for ((cell, &v0), &v1) in d0.indexed_iter().zip(d1.iter()) {
                    if v0.norm() + v1.norm() > keep {
                        cells.push((cell.0, cell.1, v0, v1, magnitude[cell]));
                    }
                }
                cells.sort_by(|x, y| {
                    (y.2.norm() + y.3.norm())
                        .partial_cmp(&(x.2.norm() + x.3.norm()))
                        .unwrap_or(Ordering::Equal)
                });
                let scan = cells
                    .iter()
                    .position(|c| c.2.norm() + c.3.norm() <= floor)
                    .unwrap_or(cells.len());
                responses.push(IslandResponse { cells, scan });
            }
            let response = &mut responses[slot];
            if response.scan == 0 {
                continue;
            }

            let footprint: Vec<_> = response.cells[..response.scan]
                .iter()
                .map(|&(m, n, v0, v1, target)| (base[[m, n]] - v0, v0, v1, target))
                .collect();
            let mut errors = [0.0f64; REFINE_ANGLES];
            let mut best = 0usize;
            for k in 0..REFINE_ANGLES {
                let (sin, cos) = (k as f64 * step).sin_cos();
                let mut acc = 0.0;
                for &(u, v0, v1, target) in &footprint {
                    let g = u + v0.scale(cos) + v1.scale(sin);
                    let diff = g.norm() - target;
                    acc += diff * diff;
                }
                errors[k] = acc;
                if acc < errors[best] {
                    best = k;
                }
            }
            let before = errors[(best + REFINE_ANGLES - 1) % REFINE_ANGLES];
            let after = errors[(best + 1) % REFINE_ANGLES];
            let curvature = before - 2.0 * errors[best] + after;
            let delta = best as f64 * step
                + if curvature > 0.0 {
                    0.5 * (before - after) / curvature * step
                } else {
                    0.0
                };
            let (sin, cos) = delta.sin_cos();
            for (cell, &label) in labels.indexed_iter() {
                if label as usize == island {
                    first.phase[cell] += delta;
                    model_phase[cell] += delta;
                }
            }
            for (m, n, v0, v1, _) in response.cells.iter_mut() {
                let rotated0 = v0.scale(cos) + v1.scale(sin);
                let rotated1 = v1.scale(cos) - v0.scale(sin);
                base[[*m, *n]] += rotated0 - *v0;
                *v0 = rotated0;
                *v1 = rotated1;
            }
        }
    }
    Ok(())
}

/// Rotates each coarse-pass island by the magnitude-squared weighted
/// circular mean of its phase difference against a fine single-pass run,
/// removing the arbitrary per-seed offsets while keeping the island
/// interiors that were integrated over reliable cells only. Returns the
/// reference run for further use.
fn align_island_gauges(
    magnitude: &Array2<f64>,
    gradient: &PhaseGradient,
    labels: &Array2<u32>,
    islands: usize,
    tol2: f64,
    seed: u64,
    first: &mut PhaseEstimate,
) -> Result<PhaseEstimate> {
    let reference = heap_integrate(magnitude, gradient, tol2, seed)?;
    let mut sums = vec![(0.0f64, 0.0f64); islands];
    for ((cell, &label), &mag) in labels.indexed_iter().zip(magnitude.iter()) {
        if label == u32::MAX {
            continue;
        }
        let diff = reference.phase[cell] - first.phase[cell];
        let weight = mag * mag;
        let slot = &mut sums[label as usize];
        slot.0 += weight * diff.cos();
        slot.1 += weight * diff.sin();
    }
    let offsets: Vec<f64> = sums.iter().map(|&(re, im)| im.atan2(re)).collect();
    rotate_islands(labels, &offsets, &mut first.phase);
    Ok(reference)
}

/// Adds each island's offset to every cell carrying that island's label.
fn rotate_islands(labels: &Array2<u32>, offsets: &[f64], phase: &mut Array2<f64>) {
    for (cell, &label) in labels.indexed_iter() {
        if label != u32::MAX {
            phase[cell] += offsets[label as usize];
        }
    }
}

/// 4-connected components of the set `magnitude > tol * max(magnitude)`.
/// Cells outside the set are labelled `u32::MAX`.
fn island_labels(magnitude: &Array2<f64>, tol: f64) -> (Array2<u32>, usize) {
    let (rows, cols) = magnitude.dim();
    let max = magnitude.iter().fold(0.0f64, |acc, &v| acc.max(v));
    let abstol = tol * max;
    let mut labels = Array2::from_elem((rows, cols), u32::MAX);
    let mut count = 0u32;
    let mut stack = Vec::new();
    for n in 0..cols {
        for m in 0..rows {
            if magnitude[[m, n]] <= abstol || labels[[m, n]] != u32::MAX {
                continue;
            }
            stack.push((m, n));
            labels[[m, n]] = count;
            while let Some((cm, cn)) = stack.pop() {
                let mut visit = |vm: usize, vn: usize| {
                    if magnitude[[vm, vn]] > abstol && labels[[vm, vn]] == u32::MAX {
                        labels[[vm, vn]] = count;
                        stack.push((vm, vn));
                    }
                };
                if cm + 1 < rows {
                    visit(cm + 1, cn);
                }
                if cm > 0 {
                    visit(cm - 1, cn);
                }
                if cn + 1 < cols {
                    visit(cm, cn + 1);
                }
                if cn > 0 {
                    visit(cm, cn - 1);
                }
            }
            count += 1;
        }
    }
    (labels, count as usize)
}

fn integrate(
    magnitude: &Array2<f64>,
    gradient: &PhaseGradient,
    tol: f64,
    known: Option<&KnownPhaseMask>,
    seed: u64,
) -> Result<PhaseEstimate> {
    let dim = magnitude.dim();
    if gradient.fgrad.dim() != dim || gradient.tgrad.dim() != dim {
        return Err(Error::ShapeMismatch(format!(
            "gradient {:?}/{:?} vs magnitude {:?}",
            gradient.fgrad.dim(),
            gradient.tgrad.dim(),
            dim
        )));
    }
    if !(tol.is_finite() && tol >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "tolerance must be finite and non-negative, got {tol}"
        )));
    }
    let (rows, cols) = dim;
    let mut max = 0.0f64;
    for &v in magnitude.iter() {
        if !v.is_finite() || v < 0.0 {
            return Err(Error::NonFinite(format!("magnitude value {v}")));
        }
        max = max.max(v);
    }
    let abstol = tol * max;

    let mut phase = Array2::zeros(dim);
    let mut random_set = Array2::from_elem(dim, false);
    // Membership in the yet-unphased above-tolerance set.
    let mut open = Array2::from_elem(dim, false);
    let mut remaining = 0usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for n in 0..cols {
        for m in 0..rows {
            let masked = known.map_or(false, |k| k.mask[[m, n]]);
            if masked {
                phase[[m, n]] = known.unwrap().phase[[m, n]];
            } else if magnitude[[m, n]] > abstol {
                open[[m, n]] = true;
                remaining += 1;
            } else {
                phase[[m, n]] = rng.gen_range(0.0..TAU);
                random_set[[m, n]] = true;
            }
        }
    }

    // Candidate seeds for disconnected islands, in pop order.
    let mut seeds: Vec<HeapEntry> = Vec::new();
    for n in 0..cols {
        for m in 0..rows {
            if open[[m, n]] {
                seeds.push(HeapEntry {
                    mag: magnitude[[m, n]],
                    m: m as u32,
                    n: n as u32,
                });
            }
        }
    }
    seeds.sort_unstable_by(|x, y| y.cmp(x));
    let mut next_seed = 0usize;

    let mut heap: BinaryHeap<HeapEntry> = BinaryHeap::new();
    if let Some(k) = known {
        // Border of the known region: masked cells above tolerance with at
        // least one unmasked 4-neighbor.
        for n in 0..cols {
            for m in 0..rows {
                if !k.mask[[m, n]] || !(magnitude[[m, n]] > abstol) {
                    continue;
                }
                let unmasked_neighbor = (m + 1 < rows && !k.mask[[m + 1, n]])
                    || (m > 0 && !k.mask[[m - 1, n]])
                    || (n + 1 < cols && !k.mask[[m, n + 1]])
                    || (n > 0 && !k.mask[[m, n - 1]]);
                if unmasked_neighbor {
                    heap.push(HeapEntry {
                        mag: magnitude[[m, n]],
                        m: m as u32,
                        n: n as u32,
                    });
                }
            }
        }
    }

    while remaining > 0 {
        if heap.is_empty() {
            while next_seed < seeds.len() {
                let cand = seeds[next_seed];
                next_seed += 1;
                let (m, n) = (cand.m as usize, cand.n as usize);
                if open[[m, n]] {
                    phase[[m, n]] = 0.0;
                    open[[m, n]] = false;
                    remaining -= 1;
                    heap.push(cand);
                    break;
                }
            }
        }
        while let Some(entry) = heap.pop() {
            let (m, n) = (entry.m as usize, entry.n as usize);
            let fg = &gradient.fgrad;
            let tg = &gradient.tgrad;
            if m + 1 < rows && open[[m + 1, n]] {
                phase[[m + 1, n]] = phase[[m, n]] + 0.5 * (fg[[m, n]] + fg[[m + 1, n]]);
                open[[m + 1, n]] = false;
                remaining -= 1;
                heap.push(HeapEntry {
                    mag: magnitude[[m + 1, n]],
                    m: entry.m + 1,
                    n: entry.n,
                });
            }
            if m > 0 && open[[m - 1, n]] {
                phase[[m - 1, n]] = phase[[m, n]] - 0.5 * (fg[[m, n]] + fg[[m - 1, n]]);
                open[[m - 1, n]] = false;
                remaining -= 1;
                heap.push(HeapEntry {
                    mag: magnitude[[m - 1, n]],
                    m: entry.m - 1,
                    n: entry.n,
                });
            }
            if n + 1 < cols && open[[m, n + 1]] {
                phase[[m, n + 1]] = phase[[m, n]] + 0.5 * (tg[[m, n]] + tg[[m, n + 1]]);
                open[[m, n + 1]] = false;
                remaining -= 1;
                heap.push(HeapEntry {
                    mag: magnitude[[m, n + 1]],
                    m: entry.m,
                    n: entry.n + 1,
                });
            }
            if n > 0 && open[[m, n - 1]] {
                phase[[m, n - 1]] = phase[[m, n]] - 0.5 * (tg[[m, n]] + tg[[m, n - 1]]);
                open[[m, n - 1]] = false;
                remaining -= 1;
                heap.push(HeapEntry {
                    mag: magnitude[[m, n - 1]],
                    m: entry.m,
                    n: entry.n - 1,
                });
            }
        }
    }

    Ok(PhaseEstimate { phase, random_set })
}

/// Builds `magnitude * exp(i phase)` and synthesizes a complex signal with
/// the given synthesis (dual) window over the full-spectrum lattice.
pub fn synthesize(
    magnitude: &Array2<f64>,
    phase: &Array2<f64>,
    dual: &Window,
    params: &GaborParams,
) -> Result<Vec<num_complex::Complex64>> {
    let grid = CoefGrid::from_polar(magnitude, phase)?;
    idgt(&grid, dual, params)
}

/// Half-spectrum counterpart of [`synthesize`] for real signals: mirrors
/// bins `1 .. M/2` as conjugates before synthesis and returns the real
/// part. The imaginary residual (only from the unconstrained phases of the
/// DC and Nyquist rows) is discarded.
pub fn synthesize_real(
    magnitude: &Array2<f64>,
    phase: &Array2<f64>,
    dual: &Window,
    params: &GaborParams,
) -> Result<Vec<f64>> {
    let half = CoefGrid::from_polar(magnitude, phase)?;
    let full = half.mirror_to_full(params.channels())?;
    let signal = idgt(&full, dual, params)?;
    Ok(signal.into_iter().map(|z| z.re).collect())
}

/// Wraps a phase value to `(-pi, pi]` for serialization; integration keeps
/// phases unwrapped internally.
pub fn wrap_phase(phi: f64) -> f64 {
    let wrapped = phi - TAU * (phi / TAU).round();
    if wrapped <= -std::f64::consts::PI {
        wrapped + TAU
    } else {
        wrapped
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gabor::Spectrum;
    use crate::gradient::{log_magnitude, scaled_phase_gradient};
    use ndarray::Array2;

    fn uniform_gradient(rows: usize, cols: usize, f: f64, t: f64) -> PhaseGradient {
        PhaseGradient {
            fgrad: Array2::from_elem((rows, cols), f),
            tgrad: Array2::from_elem((rows, cols), t),
        }
    }

    #[test]
    fn constant_gradient_integrates_linearly() {
        // All cells above tolerance, fgrad = 0.1, tgrad = 0.2: the phase
        // surface must be exactly 0.1*m + 0.2*n anchored at the seed.
        let mut s = Array2::from_elem((4, 5), 1.0);
        s[[2, 3]] = 2.0; // unique global maximum: seed with phase 0
        let g = uniform_gradient(4, 5, 0.1, 0.2);
        let est = heap_integrate(&s, &g, 1e-7, 1).unwrap();
        for m in 0..4 {
            for n in 0..5 {
                let expect = 0.1 * (m as f64 - 2.0) + 0.2 * (n as f64 - 3.0);
                assert!(
                    (est.phase[[m, n]] - expect).abs() < 1e-12,
                    "m={m} n={n}: {} vs {expect}",
                    est.phase[[m, n]]
                );
                assert!(!est.random_set[[m, n]]);
            }
        }
    }

    #[test]
    fn below_tolerance_cells_are_randomized_and_marked() {
        let mut s = Array2::from_elem((8, 8), 1e-12);
        s[[4, 4]] = 1.0;
        s[[4, 5]] = 0.5;
        let g = uniform_gradient(8, 8, 0.0, 0.0);
        let est = heap_integrate(&s, &g, 1e-3, 7).unwrap();
        assert!(!est.random_set[[4, 4]]);
        assert!(!est.random_set[[4, 5]]);
        let randoms = est.random_set.iter().filter(|&&r| r).count();
        assert_eq!(randoms, 62);
        for ((idx, &r), &p) in est.random_set.indexed_iter().zip(est.phase.iter()) {
            if r {
                assert!((0.0..TAU).contains(&p), "cell {idx:?}: {p}");
            }
        }
    }

    #[test]
    fn islands_are_seeded_from_their_own_maxima() {
        // Two plateaus separated by silence: each must anchor at zero phase
        // at its own maximum.
        let mut s = Array2::zeros((3, 9));
        for m in 0..3 {
            s[[m, 1]] = 1.0;
            s[[m, 7]] = 0.6;
        }
        s[[1, 1]] = 2.0;
        s[[1, 7]] = 1.5;
        let g = uniform_gradient(3, 9, 0.25, 0.0);
        let est = heap_integrate(&s, &g, 0.1, 3).unwrap();
        assert_eq!(est.phase[[1, 1]], 0.0);
        assert_eq!(est.phase[[1, 7]], 0.0);
        assert!((est.phase[[2, 1]] - 0.25).abs() < 1e-12);
        assert!((est.phase[[0, 7]] + 0.25).abs() < 1e-12);
    }

    #[test]
    fn deterministic_given_seed() {
        let s = Array2::from_shape_fn((16, 16), |(m, n)| ((m * 31 + n * 17) % 13) as f64);
        let g = uniform_gradient(16, 16, 0.05, -0.02);
        let e1 = heap_integrate(&s, &g, 0.2, 42).unwrap();
        let e2 = heap_integrate(&s, &g, 0.2, 42).unwrap();
        assert_eq!(e1.phase, e2.phase);
        assert_eq!(e1.random_set, e2.random_set);
        let e3 = heap_integrate(&s, &g, 0.2, 43).unwrap();
        assert_ne!(e1.phase, e3.phase);
    }

    #[test]
    fn empty_mask_matches_unmasked() {
        let s = Array2::from_shape_fn((8, 8), |(m, n)| 1.0 + ((m + 3 * n) % 5) as f64);
        let g = uniform_gradient(8, 8, 0.3, 0.1);
        let known = KnownPhaseMask {
            mask: Array2::from_elem((8, 8), false),
            phase: Array2::zeros((8, 8)),
        };
        let masked = heap_integrate_masked(&s, &g, 0.05, &known, 11).unwrap();
        let plain = heap_integrate(&s, &g, 0.05, 11).unwrap();
        assert_eq!(masked.phase, plain.phase);
        assert_eq!(masked.random_set, plain.random_set);
    }

    #[test]
    fn full_mask_is_identity_with_empty_random_set() {
        let s = Array2::from_shape_fn((6, 6), |(m, n)| 1.0 + (m * n) as f64);
        let g = uniform_gradient(6, 6, 0.3, 0.1);
        let phase = Array2::from_shape_fn((6, 6), |(m, n)| 0.01 * (m as f64) - 0.4 * n as f64);
        let known = KnownPhaseMask {
            mask: Array2::from_elem((6, 6), true),
            phase: phase.clone(),
        };
        let est = heap_integrate_masked(&s, &g, 1e-3, &known, 5).unwrap();
        assert_eq!(est.phase, phase);
        assert!(est.random_set.iter().all(|&r| !r));
    }

    #[test]
    fn mask_wins_over_randomization_below_tolerance() {
        let mut s = Array2::from_elem((4, 4), 1e-15);
        s[[2, 2]] = 1.0;
        let g = uniform_gradient(4, 4, 0.0, 0.0);
        let mut mask = Array2::from_elem((4, 4), false);
        mask[[0, 0]] = true; // below tolerance and masked
        let mut phase = Array2::zeros((4, 4));
        phase[[0, 0]] = 2.5;
        let known = KnownPhaseMask { mask, phase };
        let est = heap_integrate_masked(&s, &g, 1e-2, &known, 9).unwrap();
        assert_eq!(est.phase[[0, 0]], 2.5);
        assert!(!est.random_set[[0, 0]]);
    }

    #[test]
    fn masked_integration_continues_from_border_phase() {
        // Left half known with phase 1.0, constant tgrad 0.5: the unknown
        // right half must continue 1.0 + 0.5 * steps.
        let s = Array2::from_elem((2, 6), 1.0);
        let g = uniform_gradient(2, 6, 0.0, 0.5);
        let mut mask = Array2::from_elem((2, 6), false);
        let mut phase = Array2::zeros((2, 6));
        for m in 0..2 {
            for n in 0..3 {
                mask[[m, n]] = true;
                phase[[m, n]] = 1.0;
            }
        }
        let known = KnownPhaseMask { mask, phase };
        let est = heap_integrate_masked(&s, &g, 1e-6, &known, 2).unwrap();
        for m in 0..2 {
            for n in 3..6 {
                let expect = 1.0 + 0.5 * (n as f64 - 2.0);
                assert!(
                    (est.phase[[m, n]] - expect).abs() < 1e-12,
                    "m={m} n={n}: {}",
                    est.phase[[m, n]]
                );
            }
        }
    }

    #[test]
    fn two_pass_validates_tolerance_order_and_reduces_when_equal() {
        let s = Array2::from_shape_fn((8, 8), |(m, n)| 0.1 + ((m * 7 + n) % 9) as f64);
        let g = uniform_gradient(8, 8, 0.12, -0.07);
        assert!(two_pass(&s, &g, 1e-10, 1e-1, 4).is_err());
        let double = two_pass(&s, &g, 1e-3, 1e-3, 4).unwrap();
        let single = heap_integrate(&s, &g, 1e-3, 4).unwrap();
        assert_eq!(double.phase, single.phase);
        assert_eq!(double.random_set, single.random_set);
    }

    #[test]
    fn two_pass_aligns_disconnected_islands() {
        // Two loud blobs separated by quiet terrain. With a spatially
        // uniform gradient the integrated phase is path independent, so a
        // fine single pass is exact up to its own seed; the coarse pass
        // seeds the second blob at zero, and the alignment step must
        // recover the single-pass offset.
        let mut s = Array2::from_elem((12, 24), 0.01);
        for n in 2..6 {
            for m in 3..7 {
                s[[m, n]] = 1.0 + (m + n) as f64 * 0.01;
            }
        }
        for n in 17..21 {
            for m in 5..9 {
                s[[m, n]] = 0.9 + (m + n) as f64 * 0.01;
            }
        }
        let g = uniform_gradient(12, 24, 0.31, -0.17);
        let single = heap_integrate(&s, &g, 1e-6, 11).unwrap();
        let double = two_pass(&s, &g, 0.5, 1e-6, 11).unwrap();
        for ((cell, &a), &b) in double.phase.indexed_iter().zip(single.phase.iter()) {
            if !single.random_set[cell] {
                assert!(
                    wrap_phase(a - b).abs() < 1e-9,
                    "cell {cell:?}: {a} vs {b}"
                );
            }
        }
    }

    #[test]
    fn two_pass_refined_recovers_island_rotation() {
        // Two impulses of opposite sign, close enough that their window
        // responses interfere in the valley between them. The coarse pass
        // seeds both islands at phase zero; only a rotation near pi on the
        // second island reproduces the destructive interference recorded
        // in the target magnitude.
        use crate::gabor::{canonical_dual, dgt_real, WindowKind};
        use crate::gradient::{log_magnitude, scaled_phase_gradient, DEFAULT_REL_FLOOR};

        let len = 64;
        let params = GaborParams::new(len, 2, 16).unwrap();
        let gamma = 32.0;
        let window =
            Window::new(WindowKind::Gauss, &params, None, Some(gamma / len as f64)).unwrap();
        let dual = canonical_dual(&window, &params).unwrap();
        let mut signal = vec![0.0; len];
        signal[24] = 1.0;
        signal[40] = -0.8;

        let half = dgt_real(&signal, &window, &params).unwrap().to_half().unwrap();
        let mag = half.magnitude();
        let truth = half.phase();
        let slog = log_magnitude(&mag, DEFAULT_REL_FLOOR).unwrap();
        let grad =
            scaled_phase_gradient(&slog, &params, gamma, crate::gabor::Spectrum::Half).unwrap();

        // Magnitudes cannot pin one global rotation (they are blind to the
        // sign of the whole signal), so the score removes the best global
        // offset before comparing against the true phase.
        let weighted_error = |est: &PhaseEstimate| {
            let mut re = 0.0;
            let mut im = 0.0;
            for ((cell, &m), &t) in mag.indexed_iter().zip(truth.iter()) {
                let d = t - est.phase[cell];
                re += m * m * d.cos();
                im += m * m * d.sin();
            }
            let global = im.atan2(re);
            let mut num = 0.0;
            let mut den = 0.0;
            for ((cell, &m), &t) in mag.indexed_iter().zip(truth.iter()) {
                let w = m * m;
                num += w * (1.0 - (est.phase[cell] + global - t).cos());
                den += w;
            }
            num / den
        };

        let plain = two_pass(&mag, &grad, 1e-1, 1e-6, 7).unwrap();
        let refined = two_pass_refined(&mag, &grad, 1e-1, 1e-6, 7, |mg, ph, _span| {
            let x = synthesize_real(mg, ph, &dual, &params)?;
            Ok(dgt_real(&x, &window, &params)?.to_half()?.into_values())
        })
        .unwrap();

        let plain_err = weighted_error(&plain);
        let refined_err = weighted_error(&refined);
        assert!(
            refined_err < 0.05,
            "refined weighted phase error {refined_err} (plain {plain_err})"
        );
        assert!(refined_err <= plain_err + 1e-9);
    }

    #[test]
    fn phase_is_scale_invariant() {
        let s = Array2::from_shape_fn((8, 8), |(m, n)| 0.1 + ((m * 5 + 2 * n) % 7) as f64);
        let g = uniform_gradient(8, 8, 0.21, 0.13);
        let e1 = heap_integrate(&s, &g, 0.05, 17).unwrap();
        let e2 = heap_integrate(&s.mapv(|v| 8.0 * v), &g, 0.05, 17).unwrap();
        assert_eq!(e1.phase, e2.phase);
        assert_eq!(e1.random_set, e2.random_set);
    }

    #[test]
    fn wrap_phase_range() {
        assert!((wrap_phase(3.0 * std::f64::consts::PI) - std::f64::consts::PI).abs() < 1e-12);
        assert_eq!(wrap_phase(0.0), 0.0);
        let w = wrap_phase(-std::f64::consts::PI);
        assert!((w - std::f64::consts::PI).abs() < 1e-12);
        for k in -7..=7 {
            let phi = 0.7 + k as f64 * TAU;
            assert!((wrap_phase(phi) - 0.7).abs() < 1e-9);
        }
    }

    #[test]
    fn tone_half_spectrum_reconstruction_is_consistent() {
        // End to end on a real tone: gradients from the analytic pipeline,
        // integration, then check the phase advance along the ridge.
        let p = GaborParams::new(256, 4, 32).unwrap();
        let w = crate::gabor::Window::new(crate::gabor::WindowKind::Gauss, &p, None, None).unwrap();
        let bin = 5usize;
        let f: Vec<f64> = (0..256)
            .map(|l| (TAU * bin as f64 * l as f64 / 32.0).cos())
            .collect();
        let c = crate::gabor::dgt_real(&f, &w, &p).unwrap();
        let full = c.magnitude();
        let half = full.slice(ndarray::s![0..17, ..]).to_owned();
        let lm = log_magnitude(&half, 1e-10).unwrap();
        let g = scaled_phase_gradient(&lm, &p, (4 * 32) as f64, Spectrum::Half).unwrap();
        let est = heap_integrate(&half, &g, 1e-4, 0).unwrap();
        let advance = TAU * (4 * bin) as f64 / 32.0;
        for n in 1..p.frames() {
            let d = est.phase[[bin, n]] - est.phase[[bin, n - 1]];
            let err = wrap_phase(d - advance).abs();
            assert!(err < 1e-6, "frame {n}: advance {d} vs {advance}");
        }
    }
}
