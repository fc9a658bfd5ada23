//! Exact subset-sum window queries over a row's weights.
//!
//! Genericity and link-decisiveness both reduce to the question "does some
//! subset of these weights sum into a given window?". Rows are checked
//! exactly: direct enumeration for small supports, meet-in-the-middle up to
//! 40 weights, `Unchecked` beyond that. Comparisons are exact floating
//! comparisons; generic weights never land on the window boundary.

/// Result of a window query.
#[derive(Debug, Clone, PartialEq)]
pub enum WindowCheck {
    /// A subset hit the window; positions index into the queried slice.
    Hit(Vec<usize>),
    /// No subset sums into the window.
    Miss,
    /// Support too large for an exact check.
    Unchecked,
}

/// Inclusive/exclusive bounds for the query window.
#[derive(Debug, Clone, Copy)]
pub struct Window {
    pub lo: f64,
    pub hi: f64,
    pub lo_inclusive: bool,
    pub hi_inclusive: bool,
}

impl Window {
    fn contains(&self, s: f64) -> bool {
        let above = if self.lo_inclusive { s >= self.lo } else { s > self.lo };
        let below = if self.hi_inclusive { s <= self.hi } else { s < self.hi };
        above && below
    }
}

const DIRECT_LIMIT: usize = 20;
pub const EXACT_LIMIT: usize = 40;

/// Searches for a subset of `weights` whose sum lies in `window`.
/// The empty subset is a candidate like any other.
pub fn subset_sum_in_window(weights: &[f64], window: Window) -> WindowCheck {
    let k = weights.len();
    if k <= DIRECT_LIMIT {
        direct(weights, window)
    } else if k <= EXACT_LIMIT {
        meet_in_the_middle(weights, window)
    } else {
        WindowCheck::Unchecked
    }
}

fn mask_to_positions(mask: u64, len: usize) -> Vec<usize> {
    (0..len).filter(|&p| mask >> p & 1 == 1).collect()
}

/// All 2^k subset sums, indexed by mask. Each sum adds weights in ascending
/// position order so results match a positional left-to-right accumulation.
fn all_sums(weights: &[f64]) -> Vec<f64> {
    let k = weights.len();
    let mut sums = vec![0.0; 1 << k];
    for mask in 1..(1u64 << k) {
        let top = 63 - mask.leading_zeros() as u64;
        sums[mask as usize] = sums[(mask & !(1 << top)) as usize] + weights[top as usize];
    }
    sums
}

fn direct(weights: &[f64], window: Window) -> WindowCheck {
    let sums = all_sums(weights);
    for (mask, &s) in sums.iter().enumerate() {
        if window.contains(s) {
            return WindowCheck::Hit(mask_to_positions(mask as u64, weights.len()));
        }
    }
    WindowCheck::Miss
}

fn meet_in_the_middle(weights: &[f64], window: Window) -> WindowCheck {
    let half = weights.len() / 2;
    let (wa, wb) = weights.split_at(half);
    let sums_a = all_sums(wa);
    let mut sums_b: Vec<(f64, u64)> = all_sums(wb)
        .into_iter()
        .enumerate()
        .map(|(m, s)| (s, m as u64))
        .collect();
    sums_b.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());

    for (mask_a, &a) in sums_a.iter().enumerate() {
        // candidates b with a + b possibly in window
        let start = sums_b.partition_point(|&(b, _)| a + b < window.lo);
        for &(b, mask_b) in &sums_b[start.saturating_sub(1)..] {
            let s = a + b;
            if window.contains(s) {
                let mut pos = mask_to_positions(mask_a as u64, wa.len());
                pos.extend(mask_to_positions(mask_b, wb.len()).iter().map(|p| p + half));
                return WindowCheck::Hit(pos);
            }
            if s > window.hi {
                break;
            }
        }
    }
    WindowCheck::Miss
}
