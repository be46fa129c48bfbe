//! Peak lists, outermost-sidepeak slopes and sidepeak/center ratios.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectrum::SpectrumMap;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    /// meV
    pub position: f64,
    pub height: f64,
    pub prominence: f64,
}

/// Peaks sorted by position.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PeakList {
    pub peaks: Vec<Peak>,
}

impl PeakList {
    pub fn len(&self) -> usize {
        self.peaks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.peaks.is_empty()
    }

    /// Peaks strictly on one side of `origin`, farther than `exclude` from it.
    pub fn side(&self, side: Side, origin: f64, exclude: f64) -> Vec<Peak> {
        self.peaks
            .iter()
            .filter(|p| {
                let d = p.position - origin;
                d.abs() > exclude
                    && match side {
                        Side::Blue => d > 0.0,
                        Side::Red => d < 0.0,
                    }
            })
            .copied()
            .collect()
    }

    /// The peak closest to `position`, if within `tol`.
    pub fn near(&self, position: f64, tol: f64) -> Option<Peak> {
        self.peaks
            .iter()
            .filter(|p| (p.position - position).abs() <= tol)
            .min_by(|a, b| {
                (a.position - position)
                    .abs()
                    .total_cmp(&(b.position - position).abs())
            })
            .copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    /// Lower energy than the reference.
    Red,
    /// Higher energy than the reference.
    Blue,
}

/// Peak-finder thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PeakSettings {
    /// Minimum prominence as a fraction of the row maximum.
    pub min_prominence: f64,
    /// Minimum distance between accepted peaks (meV).
    pub min_separation: f64,
}

impl Default for PeakSettings {
    fn default() -> Self {
        PeakSettings {
            min_prominence: 1e-4,
            min_separation: 0.05,
        }
    }
}

/// Peaks of the first row of `s`.
pub fn find_peaks(s: &SpectrumMap, settings: &PeakSettings) -> PeakList {
    match s.values.first() {
        Some(row) => find_peaks_in(&s.omega_axis, row, settings),
        None => PeakList::default(),
    }
}

/// Local maxima whose prominence exceeds `min_prominence · max(values)`.
///
/// When two candidates are closer than `min_separation` the higher one wins;
/// equal heights keep the one nearer to zero energy.
pub fn find_peaks_in(axis: &[f64], values: &[f64], settings: &PeakSettings) -> PeakList {
    let n = values.len().min(axis.len());
    if n < 3 {
        return PeakList::default();
    }
    let v = &values[..n];
    let global = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(global > 0.0) {
        return PeakList::default();
    }
    let threshold = settings.min_prominence * global;

    let mut candidates = Vec::new();
    let mut i = 1;
    while i < n - 1 {
        if v[i - 1] < v[i] {
            // walk over a plateau
            let mut j = i;
            while j + 1 < n && v[j + 1] == v[i] {
                j += 1;
            }
            if j + 1 < n && v[j + 1] < v[i] {
                let mid = (i + j) / 2;
                let prominence = prominence(v, i, j);
                if prominence > threshold {
                    candidates.push(Peak {
                        position: axis[mid],
                        height: v[mid],
                        prominence,
                    });
                }
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }

    candidates.sort_by(|a, b| {
        b.height
            .total_cmp(&a.height)
            .then(a.position.abs().total_cmp(&b.position.abs()))
    });
    let mut kept: Vec<Peak> = Vec::new();
    for c in candidates {
        if kept
            .iter()
            .all(|k| (k.position - c.position).abs() >= settings.min_separation)
        {
            kept.push(c);
        }
    }
    kept.sort_by(|a, b| a.position.total_cmp(&b.position));
    PeakList { peaks: kept }
}

/// Height above the higher of the two bases, for a plateau `lo..=hi`.
fn prominence(v: &[f64], lo: usize, hi: usize) -> f64 {
    let h = v[lo];
    let mut left_min = h;
    for k in (0..lo).rev() {
        if v[k] > h {
            break;
        }
        left_min = left_min.min(v[k]);
    }
    let mut right_min = h;
    for &x in &v[hi + 1..] {
        if x > h {
            break;
        }
        right_min = right_min.min(x);
    }
    h - left_min.max(right_min)
}

/// Linear fit of peak position against pulse area.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    /// meV per π of pulse area
    pub slope: f64,
    /// meV
    pub intercept: f64,
    /// RMS residual in meV
    pub residual: f64,
    pub points_used: usize,
}

/// Least-squares straight line through `(x, y)`.
pub fn linear_fit(points: &[(f64, f64)]) -> Result<SlopeFit> {
    if points.len() < 2 {
        return Err(Error::Analysis(format!(
            "a linear fit needs at least two points, got {}",
            points.len()
        )));
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if !(sxx > 0.0) {
        return Err(Error::Analysis("fit abscissae are all equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (points
        .iter()
        .map(|p| (p.1 - slope * p.0 - intercept).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(SlopeFit {
        slope,
        intercept,
        residual,
        points_used: points.len(),
    })
}

/// Settings for the outermost-sidepeak slope.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SlopeSettings {
    pub peaks: PeakSettings,
    /// Number of spectra used in the fit.
    pub n_points: usize,
    /// Peaks closer than this to zero energy are the central line (meV).
    pub center_exclusion: f64,
    /// Only rows with at least this pulse area (in π) are used.
    pub min_area: f64,
}

impl Default for SlopeSettings {
    fn default() -> Self {
        SlopeSettings {
            peaks: PeakSettings::default(),
            n_points: 5,
            center_exclusion: 0.08,
            min_area: 5.0,
        }
    }
}

/// Position of the outermost peak on one side of zero, if any.
pub fn outermost_peak(list: &PeakList, side: Side, center_exclusion: f64) -> Option<Peak> {
    let side_peaks = list.side(side, 0.0, center_exclusion);
    match side {
        Side::Blue => side_peaks.last().copied(),
        Side::Red => side_peaks.first().copied(),
    }
}

/// Fits the outermost-sidepeak position (meV) against the pulse area (π
/// units) of a power map.
///
/// Rows with area >= `min_area` and a detected sidepeak are eligible; the fit
/// uses `n_points` of them spread evenly from the first to the last eligible
/// row.
pub fn outermost_sidepeak_slope(
    map: &SpectrumMap,
    side: Side,
    settings: &SlopeSettings,
) -> Result<SlopeFit> {
    let sweep = map
        .sweep_axis
        .as_ref()
        .ok_or_else(|| Error::Analysis("a power map needs a sweep axis".into()))?;
    let eligible: Vec<(f64, f64)> = sweep
        .iter()
        .enumerate()
        .filter(|(_, a)| **a >= settings.min_area)
        .filter_map(|(i, a)| {
            let list = find_peaks_in(&map.omega_axis, map.row(i), &settings.peaks);
            outermost_peak(&list, side, settings.center_exclusion).map(|p| (*a, p.position))
        })
        .collect();
    if eligible.len() < 2 {
        return Err(Error::Analysis(format!(
            "only {} rows have a detectable outermost sidepeak",
            eligible.len()
        )));
    }
    let n = settings.n_points.max(2).min(eligible.len());
    let chosen: Vec<(f64, f64)> = (0..n)
        .map(|k| eligible[(k * (eligible.len() - 1) + (n - 1) / 2) / (n - 1)])
        .collect();
    linear_fit(&chosen)
}

/// Integral of the linear interpolant of `(x, y)` over `[a, b]`.
pub fn integrate_window(x: &[f64], y: &[f64], a: f64, b: f64) -> f64 {
    let mut sum = 0.0;
    for k in 0..x.len().saturating_sub(1) {
        let (x0, x1) = (x[k], x[k + 1]);
        let lo = a.max(x0);
        let hi = b.min(x1);
        if hi <= lo {
            continue;
        }
        let slope = (y[k + 1] - y[k]) / (x1 - x0);
        let f = |t: f64| y[k] + slope * (t - x0);
        sum += 0.5 * (hi - lo) * (f(lo) + f(hi));
    }
    sum
}

/// Inner edge of the sidepeak windows (meV).
pub const RATIO_INNER: f64 = 0.08;
/// Outer edge of the sidepeak windows (meV).
pub const RATIO_OUTER: f64 = 5.95;

/// Emission in `0.08 <= |E| <= 5.95` meV divided by emission in
/// `|E| <= 0.08` meV.
///
/// Returns `f64::INFINITY` when the center integral vanishes.
pub fn sidepeak_center_ratio(s: &SpectrumMap) -> Result<f64> {
    let axis = &s.omega_axis;
    if axis.is_empty() || axis[0] > -RATIO_OUTER || *axis.last().unwrap() < RATIO_OUTER {
        return Err(Error::Domain(format!(
            "the omega axis must cover ±{RATIO_OUTER} meV"
        )));
    }
    let row = s.row(0);
    let center = integrate_window(axis, row, -RATIO_INNER, RATIO_INNER);
    let sides = integrate_window(axis, row, RATIO_INNER, RATIO_OUTER)
        + integrate_window(axis, row, -RATIO_OUTER, -RATIO_INNER);
    if center.abs() < f64::EPSILON * sides.abs().max(f64::MIN_POSITIVE) || center == 0.0 {
        eprintln!("warning: center emission vanishes, sidepeak/center ratio is infinite");
        return Ok(f64::INFINITY);
    }
    Ok(sides / center)
}

/// Intensity-weighted mean energy of the dressed emission of a spectrum
/// driven at `detuning` meV.
///
/// The persistent line at the transition (|E| < `exclude`) and its mirror
/// image about the laser frequency are both removed, so a pattern that is
/// symmetric about the laser gives the laser energy back exactly.
pub fn dressed_centroid(s: &SpectrumMap, detuning: f64, exclude: f64) -> Result<f64> {
    let mirror = 2.0 * detuning;
    let (mut num, mut den) = (0.0, 0.0);
    let axis = &s.omega_axis;
    let row = s.row(0);
    let w = crate::correlation::trapezoid_weights(axis);
    for k in 0..axis.len() {
        let e = axis[k];
        if e.abs() < exclude || (e - mirror).abs() < exclude {
            continue;
        }
        let v = row[k].max(0.0) * w[k];
        num += v * e;
        den += v;
    }
    if !(den > 0.0) {
        return Err(Error::Analysis(
            "no dressed emission outside the excluded windows".into(),
        ));
    }
    Ok(num / den)
}

/// Midpoint of the outermost red and blue peaks, ignoring peaks within
/// `exclude` of zero energy.
///
/// Dressed sidebands come in pairs placed symmetrically about the drive, so
/// this locates the center of the pattern even when the two sides carry very
/// different weights.
pub fn sideband_center(peaks: &PeakList, exclude: f64) -> Result<f64> {
    let mut pos = peaks
        .peaks
        .iter()
        .map(|p| p.position)
        .filter(|e| e.abs() > exclude);
    let first = pos
        .next()
        .ok_or_else(|| Error::Analysis("no peaks outside the excluded window".into()))?;
    let (lo, hi) = pos.fold((first, first), |(lo, hi), e| (lo.min(e), hi.max(e)));
    if hi - lo <= 0.0 {
        return Err(Error::Analysis(
            "need at least two sidepeaks to locate a center".into(),
        ));
    }
    Ok(0.5 * (lo + hi))
}

/// Local maxima of a sampled curve, ignoring non-finite samples.
pub fn local_maxima(x: &[f64], y: &[f64]) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for k in 1..y.len().saturating_sub(1) {
        let (a, b, c) = (y[k - 1], y[k], y[k + 1]);
        if a.is_finite() && b.is_finite() && c.is_finite() && b > a && b >= c {
            out.push((x[k], b));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn axis() -> Vec<f64> {
        (0..2048)
            .map(|m| (m as f64 - 1024.0) * 8.0 / 1024.0)
            .collect()
    }

    fn lorentzian(x: f64, x0: f64, w: f64) -> f64 {
        w * w / ((x - x0).powi(2) + w * w)
    }

    #[test]
    fn empty_and_flat() {
        let s = PeakSettings::default();
        assert!(find_peaks_in(&[], &[], &s).is_empty());
        assert!(find_peaks_in(&[0.0, 1.0, 2.0], &[0.0; 3], &s).is_empty());
    }

    #[test]
    fn single_lorentzian() {
        let x = axis();
        let y: Vec<f64> = x.iter().map(|e| lorentzian(*e, 0.0, 0.01)).collect();
        let p = find_peaks_in(&x, &y, &PeakSettings::default());
        assert_eq!(p.len(), 1);
        assert!(p.peaks[0].position.abs() <= 8.0 / 1024.0);
    }

    #[test]
    fn two_symmetric_gaussians() {
        let x = axis();
        let y: Vec<f64> = x
            .iter()
            .map(|e| (-(e - 1.0).powi(2) / 0.02).exp() + (-(e + 1.0).powi(2) / 0.02).exp())
            .collect();
        let p = find_peaks_in(&x, &y, &PeakSettings::default());
        assert_eq!(p.len(), 2);
        assert!((p.peaks[0].position + p.peaks[1].position).abs() <= 8.0 / 1024.0);
        assert!((p.peaks[1].position - 1.0).abs() <= 8.0 / 1024.0);
    }

    #[test]
    fn separation_prefers_higher_then_central() {
        let x = vec![-0.03, -0.02, -0.01, 0.0, 0.01, 0.02, 0.03, 0.04];
        let y = vec![0.0, 1.0, 0.5, 0.0, 0.5, 1.0, 0.5, 0.0];
        let settings = PeakSettings {
            min_prominence: 0.1,
            min_separation: 0.05,
        };
        let p = find_peaks_in(&x, &y, &settings);
        assert_eq!(p.len(), 1);
        // equal heights at ±0.02: tie broken towards zero, then position order
        assert!((p.peaks[0].position.abs() - 0.02).abs() < 1e-12);
        let y2 = vec![0.0, 1.0, 0.5, 0.0, 0.5, 1.2, 0.5, 0.0];
        assert_eq!(find_peaks_in(&x, &y2, &settings).peaks[0].position, 0.02);
    }

    #[test]
    fn prominence_threshold_drops_ripples() {
        let x: Vec<f64> = (0..200).map(|k| k as f64 * 0.01).collect();
        let y: Vec<f64> = x
            .iter()
            .map(|e| (-(e - 1.0f64).powi(2) / 0.01).exp() + 1e-5 * (e * 80.0).sin())
            .collect();
        assert_eq!(find_peaks_in(&x, &y, &PeakSettings::default()).len(), 1);
    }

    #[test]
    fn planted_slope() {
        let x = axis();
        let areas: Vec<f64> = (0..=60).map(|k| k as f64 * 0.25).collect();
        let rows: Vec<Vec<f64>> = areas
            .iter()
            .map(|a| {
                let pos = 0.25 * a;
                x.iter()
                    .map(|e| lorentzian(*e, 0.0, 0.02) + 0.3 * lorentzian(*e, pos, 0.02))
                    .collect()
            })
            .collect();
        let map = SpectrumMap {
            omega_axis: x.clone(),
            sweep_axis: Some(areas),
            values: rows,
        };
        // positions snap to the bin grid, so plant on bin multiples
        let fit = outermost_sidepeak_slope(&map, Side::Blue, &SlopeSettings::default()).unwrap();
        assert!((fit.slope - 0.25).abs() < 1e-6, "{fit:?}");
        assert!(fit.residual < 1e-9);
        assert_eq!(fit.points_used, 5);
    }

    #[test]
    fn slope_needs_two_points() {
        let map = SpectrumMap {
            omega_axis: axis(),
            sweep_axis: Some(vec![6.0]),
            values: vec![vec![0.0; 2048]],
        };
        assert!(matches!(
            outermost_sidepeak_slope(&map, Side::Blue, &SlopeSettings::default()),
            Err(Error::Analysis(_))
        ));
        assert!(linear_fit(&[(1.0, 1.0)]).is_err());
    }

    #[test]
    fn constant_ratio() {
        let x = axis();
        let s = SpectrumMap::single(x.clone(), vec![2.5; x.len()]);
        let r = sidepeak_center_ratio(&s).unwrap();
        assert!((r - 73.375).abs() < 1e-9, "{r}");
    }

    #[test]
    fn narrow_center_peak_ratio() {
        let x = axis();
        let y: Vec<f64> = x.iter().map(|e| (-(e / 0.01).powi(2)).exp()).collect();
        let r = sidepeak_center_ratio(&SpectrumMap::single(x, y)).unwrap();
        assert!(r < 1e-6);
    }

    #[test]
    fn ratio_errors_and_sentinel() {
        let short: Vec<f64> = (0..100).map(|k| k as f64 * 0.01).collect();
        assert!(sidepeak_center_ratio(&SpectrumMap::single(short, vec![1.0; 100])).is_err());
        let x = axis();
        let y: Vec<f64> = x
            .iter()
            .map(|e| if e.abs() > 1.0 { 1.0 } else { 0.0 })
            .collect();
        assert_eq!(
            sidepeak_center_ratio(&SpectrumMap::single(x, y)).unwrap(),
            f64::INFINITY
        );
    }

    #[test]
    fn centroid_of_symmetric_pattern() {
        let x = axis();
        let y: Vec<f64> = x
            .iter()
            .map(|e| {
                lorentzian(*e, 0.0, 0.01) * 5.0
                    + lorentzian(*e, 0.3 - 0.7, 0.05)
                    + lorentzian(*e, 0.3 + 0.7, 0.05)
                    + lorentzian(*e, 0.3, 0.05)
            })
            .collect();
        let c = dressed_centroid(&SpectrumMap::single(x, y), 0.3, 0.08).unwrap();
        assert!((c - 0.3).abs() < 0.01, "{c}");
    }

    #[test]
    fn sideband_center_ignores_weights() {
        let x = axis();
        let y: Vec<f64> = x
            .iter()
            .map(|e| {
                lorentzian(*e, 0.0, 0.01) * 50.0
                    + 0.05 * lorentzian(*e, 0.3 - 0.7, 0.03)
                    + 4.0 * lorentzian(*e, 0.3 + 0.7, 0.03)
                    + 2.0 * lorentzian(*e, 0.3, 0.03)
            })
            .collect();
        let s = SpectrumMap::single(x, y);
        let peaks = find_peaks(&s, &PeakSettings::default());
        let c = sideband_center(&peaks, 0.08).unwrap();
        assert!((c - 0.3).abs() <= 0.01, "{c}");
        assert!(dressed_centroid(&s, 0.3, 0.08).unwrap() > 0.5);
    }

    #[test]
    fn sideband_center_needs_two_peaks() {
        let one = PeakList {
            peaks: vec![Peak {
                position: 0.4,
                height: 1.0,
                prominence: 1.0,
            }],
        };
        assert!(sideband_center(&one, 0.08).is_err());
        assert!(sideband_center(&PeakList::default(), 0.08).is_err());
    }

    proptest! {
        #[test]
        fn peaks_invariant_under_rescaling(scale in 1e-6f64..1e6, pos in -3.0f64..3.0) {
            let x = axis();
            let y: Vec<f64> = x.iter().map(|e| lorentzian(*e, 0.0, 0.02) + 0.4 * lorentzian(*e, pos, 0.05)).collect();
            let ys: Vec<f64> = y.iter().map(|v| v * scale).collect();
            let a: Vec<f64> = find_peaks_in(&x, &y, &PeakSettings::default()).peaks.iter().map(|p| p.position).collect();
            let b: Vec<f64> = find_peaks_in(&x, &ys, &PeakSettings::default()).peaks.iter().map(|p| p.position).collect();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn ratio_invariant_under_rescaling(scale in 1e-6f64..1e6, w in 0.01f64..1.0) {
            let x = axis();
            let y: Vec<f64> = x.iter().map(|e| lorentzian(*e, 0.0, w) + 0.2 * lorentzian(*e, 1.0, 0.1)).collect();
            let ys: Vec<f64> = y.iter().map(|v| v * scale).collect();
            let a = sidepeak_center_ratio(&SpectrumMap::single(x.clone(), y)).unwrap();
            let b = sidepeak_center_ratio(&SpectrumMap::single(x, ys)).unwrap();
            prop_assert!((a - b).abs() <= 1e-10 * a.abs());
        }
    }
}
