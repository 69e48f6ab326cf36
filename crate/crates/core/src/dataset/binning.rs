//! Equal-width binning shared by the bin transform and histograms.
//!
//! Bins are left-closed and right-open, except the last bin which is closed
//! on both ends so that the maximum lands in it.

/// `bins + 1` break points spanning `[min, max]`. The last break is `max`
/// exactly.
pub fn equal_width_breaks(min: f64, max: f64, bins: usize) -> Vec<f64> {
    debug_assert!(bins > 0 && min < max);
    let width = (max - min) / bins as f64;
    let mut breaks: Vec<f64> = (0..bins).map(|i| min + i as f64 * width).collect();
    breaks.push(max);
    breaks
}

/// Index of the bin containing `v`, or `None` when `v` is outside the breaks.
pub fn bin_index(v: f64, breaks: &[f64]) -> Option<usize> {
    let bins = breaks.len().checked_sub(1)?;
    if bins == 0 || v < breaks[0] || v > breaks[bins] {
        return None;
    }
    let width = (breaks[bins] - breaks[0]) / bins as f64;
    let mut idx = (((v - breaks[0]) / width).floor() as usize).min(bins - 1);
    // Guard against rounding in the division by checking the actual breaks.
    while idx > 0 && v < breaks[idx] {
        idx -= 1;
    }
    while idx + 1 < bins && v >= breaks[idx + 1] {
        idx += 1;
    }
    Some(idx)
}
