use serde::Serialize;

use crate::error::{invalid, Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoincidenceHistogram {
    /// Half-width of the coincidence window (ps).
    pub window_ps: i64,
    pub delay_ps: i64,
    pub bin_width_ps: i64,
    /// Matched pairs binned by `t_B - delay - t_A`, from `-window` upward.
    pub counts: Vec<u64>,
    pub total: u64,
    pub singles_a: u64,
    pub singles_b: u64,
}

impl CoincidenceHistogram {
    /// Left edge of bin `k` (ps).
    pub fn bin_start(&self, k: usize) -> i64 {
        -self.window_ps + k as i64 * self.bin_width_ps
    }
}

pub(crate) fn check_sorted(stream: &[i64]) -> Result<()> {
    match stream.windows(2).position(|w| w[1] < w[0]) {
        Some(i) => Err(Error::UnsortedTags(i + 1)),
        None => Ok(()),
    }
}

/// Index pairs `(i, j)` with `|b[j] - delay - a[i]| ≤ window`, each tag used
/// at most once.
///
/// Every A tag, in time order, takes the earliest still-unmatched B tag that
/// falls in its window. On a line this yields a maximum-cardinality matching,
/// so the total is symmetric under swapping the streams and negating the
/// delay.
pub fn coincidence_pairs(
    a: &[i64],
    b: &[i64],
    window_ps: i64,
    delay_ps: i64,
) -> Result<Vec<(usize, usize)>> {
    if window_ps < 0 {
        return Err(invalid("window_ps", "must be non-negative"));
    }
    check_sorted(a)?;
    check_sorted(b)?;
    let mut pairs = Vec::new();
    let mut j = 0;
    for (i, &ta) in a.iter().enumerate() {
        let lo = ta + delay_ps - window_ps;
        while j < b.len() && b[j] < lo {
            j += 1;
        }
        if j < b.len() && b[j] <= ta + delay_ps + window_ps {
            pairs.push((i, j));
            j += 1;
        }
    }
    Ok(pairs)
}

pub fn count_coincidences(
    a: &[i64],
    b: &[i64],
    window_ps: i64,
    delay_ps: i64,
) -> Result<CoincidenceHistogram> {
    histogram(a, b, window_ps, delay_ps, window_ps.max(1))
}

/// Coincidences with the matched delays resolved into bins of `bin_width_ps`.
pub fn histogram(
    a: &[i64],
    b: &[i64],
    window_ps: i64,
    delay_ps: i64,
    bin_width_ps: i64,
) -> Result<CoincidenceHistogram> {
    if bin_width_ps <= 0 {
        return Err(invalid("bin_width_ps", "must be positive"));
    }
    let pairs = coincidence_pairs(a, b, window_ps, delay_ps)?;
    let nbins = ((2 * window_ps) / bin_width_ps + 1) as usize;
    let mut counts = vec![0u64; nbins];
    for &(i, j) in &pairs {
        let d = b[j] - delay_ps - a[i] + window_ps;
        counts[(d / bin_width_ps) as usize] += 1;
    }
    Ok(CoincidenceHistogram {
        window_ps,
        delay_ps,
        bin_width_ps,
        counts,
        total: pairs.len() as u64,
        singles_a: a.len() as u64,
        singles_b: b.len() as u64,
    })
}

/// Merges already-sorted streams into one sorted stream.
pub fn merge_sorted(streams: &[&[i64]]) -> Vec<i64> {
    let mut out: Vec<i64> = streams.iter().flat_map(|s| s.iter().copied()).collect();
    out.sort_unstable();
    out
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct JtiMap {
    /// Slot edges within one clock cycle (ps); slot `k` is `[e_k, e_{k+1})`.
    pub slot_edges: Vec<i64>,
    /// `counts[slot_a][slot_b]`.
    pub counts: Vec<Vec<u64>>,
}

impl JtiMap {
    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }
}

/// Joint temporal intensity: coincident pairs binned by their arrival slot
/// within the clock cycle. Arrival phases are folded into
/// `[e_0, e_0 + period)` so slots may start at negative offsets.
pub fn jti(
    a: &[i64],
    b: &[i64],
    clock_period_ps: i64,
    slot_edges: &[i64],
    window_ps: i64,
) -> Result<JtiMap> {
    if slot_edges.len() < 2 || slot_edges.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::OverlappingSlots);
    }
    let first = slot_edges[0];
    if slot_edges[slot_edges.len() - 1] - first > clock_period_ps {
        return Err(Error::OverlappingSlots);
    }
    let n = slot_edges.len() - 1;
    let slot = |t: i64| -> Option<usize> {
        let phase = first + (t - first).rem_euclid(clock_period_ps);
        slot_edges.windows(2).position(|w| w[0] <= phase && phase < w[1])
    };
    let mut counts = vec![vec![0u64; n]; n];
    for (i, j) in coincidence_pairs(a, b, window_ps, 0)? {
        if let (Some(sa), Some(sb)) = (slot(a[i]), slot(b[j])) {
            counts[sa][sb] += 1;
        }
    }
    Ok(JtiMap {
        slot_edges: slot_edges.to_vec(),
        counts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn identical_streams_match_fully() {
        let a: Vec<i64> = (0..100).map(|k| k * 1000 + (k * 37) % 50).collect();
        assert_eq!(count_coincidences(&a, &a, 1, 0).unwrap().total, 100);
    }

    #[test]
    fn far_offset_streams_never_match() {
        let a: Vec<i64> = (0..100).map(|k| k * 100_000).collect();
        let b: Vec<i64> = a.iter().map(|t| t + 10 * 300).collect();
        assert_eq!(count_coincidences(&a, &b, 300, 0).unwrap().total, 0);
        assert_eq!(count_coincidences(&a, &b, 300, 3000).unwrap().total, 100);
    }

    #[test]
    fn unsorted_rejected() {
        assert!(matches!(
            count_coincidences(&[5, 3], &[1], 10, 0),
            Err(Error::UnsortedTags(1))
        ));
    }

    #[test]
    fn greedy_keeps_maximum_matching() {
        // a nearest-partner rule would pair 10 with 12 and strand 0
        let a = [0, 10];
        let b = [8, 12];
        assert_eq!(count_coincidences(&a, &b, 8, 0).unwrap().total, 2);
    }

    #[test]
    fn histogram_bins_delays() {
        let a = [0, 1000, 2000];
        let b = [-50, 1000, 2090];
        let h = histogram(&a, &b, 100, 0, 50).unwrap();
        assert_eq!(h.total, 3);
        assert_eq!(h.counts.iter().sum::<u64>(), 3);
        assert_eq!(h.counts[1], 1);
        assert_eq!(h.counts[2], 1);
        assert_eq!(h.counts[3], 1);
    }

    #[test]
    fn jti_folds_cycles() {
        let period = 1000;
        let a = [-5, 1100, 2200];
        let b = [3, 1098, 2205];
        let m = jti(&a, &b, period, &[-50, 50, 150, 250], 300).unwrap();
        assert_eq!(m.counts[0][0], 1);
        assert_eq!(m.counts[1][1], 1);
        assert_eq!(m.counts[2][2], 1);
        assert!(jti(&a, &b, period, &[0, 0, 10], 300).is_err());
        assert!(jti(&a, &b, period, &[0, 1500], 300).is_err());
    }

    fn sorted_stream() -> impl Strategy<Value = Vec<i64>> {
        prop::collection::vec(0i64..200_000, 0..200).prop_map(|mut v| {
            v.sort_unstable();
            v
        })
    }

    proptest! {
        #[test]
        fn swap_symmetry(a in sorted_stream(), b in sorted_stream(), w in 0i64..400, d in -500i64..500) {
            let ab = count_coincidences(&a, &b, w, d).unwrap();
            let ba = count_coincidences(&b, &a, w, -d).unwrap();
            prop_assert_eq!(ab.total, ba.total);
            prop_assert!(ab.total <= ab.singles_a.min(ab.singles_b));
        }
    }
}
