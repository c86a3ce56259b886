use serde::Serialize;

use super::{Grid, State2};
use crate::turing::SpatialDim;

/// One row of the diagnostics time series.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DiagnosticsRow {
    pub t: f64,
    pub l1_r: f64,
    pub min_r: f64,
    pub max_r: f64,
    pub std_r: f64,
    pub l1_t: f64,
    pub min_t: f64,
    pub max_t: f64,
}

/// L¹ norms, extrema and the spatial standard deviation of `R`.
pub fn field_stats(state: &State2, grid: &Grid) -> DiagnosticsRow {
    let vol = grid.cell_volume();
    let n = state.r.len() as f64;
    let min = |f: &[f64]| f.iter().copied().fold(f64::INFINITY, f64::min);
    let max = |f: &[f64]| f.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mean_r = state.r.iter().sum::<f64>() / n;
    let var_r = state.r.iter().map(|r| (r - mean_r).powi(2)).sum::<f64>() / n;
    DiagnosticsRow {
        t: state.time,
        l1_r: l1_norm(&state.r, vol),
        min_r: min(&state.r),
        max_r: max(&state.r),
        std_r: var_r.sqrt(),
        l1_t: l1_norm(&state.t, vol),
        min_t: min(&state.t),
        max_t: max(&state.t),
    }
}

pub(crate) fn l1_norm(f: &[f64], cell_volume: f64) -> f64 {
    f.iter().map(|v| v.abs()).sum::<f64>() * cell_volume
}

/// A local extremum; plateaus are reported once at their midpoint.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Extremum {
    pub x: f64,
    pub value: f64,
    /// False when the plateau touches a boundary cell.
    pub interior: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PatternDiagnostics {
    pub r_maxima: Vec<Extremum>,
    pub r_minima: Vec<Extremum>,
    pub t_maxima: Vec<Extremum>,
    pub t_minima: Vec<Extremum>,
    pub amplitude_r: f64,
    pub amplitude_t: f64,
    pub mean_r: f64,
    /// Mean spacing of interior toxicity maxima.
    pub wavelength: Option<f64>,
    /// Mean distance from each interior `T` maximum to the nearest `R`
    /// minimum, in wavelengths.
    pub phase_metric: Option<f64>,
    /// For each interior `T` maximum, the number of `R` maxima above the mean
    /// biomass within half a wavelength.
    pub pulse_peaks: Vec<usize>,
}

impl PatternDiagnostics {
    pub fn interior_t_peaks(&self) -> usize {
        self.pulse_peaks.len()
    }

    pub fn interior_r_peaks(&self) -> usize {
        self.pulse_peaks.iter().sum()
    }

    /// Every pulse carries exactly two biomass peaks.
    pub fn is_double_peaked(&self) -> bool {
        !self.pulse_peaks.is_empty() && self.interior_r_peaks() == 2 * self.interior_t_peaks()
    }
}

#[derive(Clone, Copy)]
enum Kind {
    Max,
    Min,
}

/// Plateau-aware extrema of a 1D profile. Neighbouring values closer than
/// `1e-9 · max(|f|, 1)` count as equal.
fn extrema(f: &[f64], grid: &Grid, kind: Kind) -> Vec<Extremum> {
    let scale = f.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let tol = 1e-9 * scale;
    // runs of (first, last, value)
    let mut runs: Vec<(usize, usize, f64)> = Vec::new();
    for (i, &v) in f.iter().enumerate() {
        match runs.last_mut() {
            Some(run) if (v - run.2).abs() <= tol => run.1 = i,
            _ => runs.push((i, i, v)),
        }
    }
    if runs.len() < 2 {
        return Vec::new();
    }
    let beats = |a: f64, b: f64| match kind {
        Kind::Max => a > b,
        Kind::Min => a < b,
    };
    let last = runs.len() - 1;
    runs.iter()
        .enumerate()
        .filter(|&(k, &(_, _, v))| {
            (k == 0 || beats(v, runs[k - 1].2)) && (k == last || beats(v, runs[k + 1].2))
        })
        .map(|(_, &(a, b, v))| Extremum {
            x: 0.5 * (grid.center(a) + grid.center(b)),
            value: v,
            interior: a > 0 && b + 1 < f.len(),
        })
        .collect()
}

/// Extrema, amplitudes, wavelength, phase metric and pulse structure of a
/// 1D state.
pub fn pattern_diagnostics(state: &State2, grid: &Grid) -> PatternDiagnostics {
    assert_eq!(grid.dim, SpatialDim::One, "pattern diagnostics need a 1D state");
    let amp = |f: &[f64]| {
        let (lo, hi) = f.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
        hi - lo
    };
    let r_maxima = extrema(&state.r, grid, Kind::Max);
    let r_minima = extrema(&state.r, grid, Kind::Min);
    let t_maxima = extrema(&state.t, grid, Kind::Max);
    let t_minima = extrema(&state.t, grid, Kind::Min);
    let mean_r = state.r.iter().sum::<f64>() / state.r.len() as f64;

    let peaks: Vec<f64> = t_maxima.iter().filter(|e| e.interior).map(|e| e.x).collect();
    let wavelength = (peaks.len() >= 2)
        .then(|| (peaks[peaks.len() - 1] - peaks[0]) / (peaks.len() - 1) as f64);

    let phase_metric = wavelength.filter(|_| !r_minima.is_empty()).map(|lambda| {
        let total: f64 = peaks
            .iter()
            .map(|&x| r_minima.iter().map(|m| (m.x - x).abs()).fold(f64::INFINITY, f64::min))
            .sum();
        total / peaks.len() as f64 / lambda
    });

    let pulse_peaks = match wavelength {
        Some(lambda) => peaks
            .iter()
            .map(|&x| {
                r_maxima
                    .iter()
                    .filter(|m| m.value > mean_r && (m.x - x).abs() < 0.5 * lambda)
                    .count()
            })
            .collect(),
        None => Vec::new(),
    };

    PatternDiagnostics {
        r_maxima,
        r_minima,
        t_maxima,
        t_minima,
        amplitude_r: amp(&state.r),
        amplitude_t: amp(&state.t),
        mean_r,
        wavelength,
        phase_metric,
        pulse_peaks,
    }
}

/// A 4-connected region where `R` exceeds its spatial mean.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Spot {
    pub cells: Vec<usize>,
    /// Centroid as (row, col) in cell units.
    pub centroid: (f64, f64),
    /// A cell in the spot interior is a strict local minimum of `R`.
    pub has_central_depression: bool,
    /// A cell in the spot interior is a strict local maximum of `T`.
    pub has_toxicity_peak: bool,
}

impl Spot {
    pub fn qualifies(&self) -> bool {
        self.has_central_depression && self.has_toxicity_peak
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpotDiagnostics {
    pub threshold: f64,
    pub spots: Vec<Spot>,
}

impl SpotDiagnostics {
    pub fn qualifying(&self) -> usize {
        self.spots.iter().filter(|s| s.qualifies()).count()
    }
}

/// Spots of a 2D state. A cell is interior to a spot when all four
/// neighbours (reflected at the boundary) belong to it.
pub fn spot_diagnostics(state: &State2, grid: &Grid) -> SpotDiagnostics {
    assert_eq!(grid.dim, SpatialDim::Two, "spot diagnostics need a 2D state");
    let n = grid.n;
    let threshold = state.r.iter().sum::<f64>() / state.r.len() as f64;
    let inside: Vec<bool> = state.r.iter().map(|&r| r > threshold).collect();
    let neighbours = |c: usize| {
        let (i, j) = (c / n, c % n);
        [
            i.saturating_sub(1) * n + j,
            (i + 1).min(n - 1) * n + j,
            i * n + j.saturating_sub(1),
            i * n + (j + 1).min(n - 1),
        ]
    };
    let strict = |f: &[f64], c: usize, lower: bool| {
        neighbours(c).iter().filter(|&&m| m != c).all(|&m| if lower { f[c] < f[m] } else { f[c] > f[m] })
    };

    let mut label = vec![usize::MAX; n * n];
    let mut spots = Vec::new();
    for seed in 0..n * n {
        if !inside[seed] || label[seed] != usize::MAX {
            continue;
        }
        let id = spots.len();
        let mut cells = vec![seed];
        label[seed] = id;
        let mut head = 0;
        while head < cells.len() {
            let c = cells[head];
            head += 1;
            for m in neighbours(c) {
                if inside[m] && label[m] == usize::MAX {
                    label[m] = id;
                    cells.push(m);
                }
            }
        }
        cells.sort_unstable();
        let interior: Vec<usize> =
            cells.iter().copied().filter(|&c| neighbours(c).iter().all(|&m| label[m] == id)).collect();
        let k = cells.len() as f64;
        let centroid = (
            cells.iter().map(|&c| (c / n) as f64).sum::<f64>() / k,
            cells.iter().map(|&c| (c % n) as f64).sum::<f64>() / k,
        );
        spots.push(Spot {
            has_central_depression: interior.iter().any(|&c| strict(&state.r, c, true)),
            has_toxicity_peak: interior.iter().any(|&c| strict(&state.t, c, false)),
            cells,
            centroid,
        });
    }
    SpotDiagnostics { threshold, spots }
}
