use crate::geom::Timestamp;

/// Per-AP ranges seen during one RTT epoch; `None` where the AP was not heard.
#[derive(Debug, Clone, PartialEq)]
pub struct Fingerprint {
    pub t: Timestamp,
    pub ranges: Vec<Option<f64>>,
}

impl Fingerprint {
    pub fn empty(t: Timestamp, n_aps: usize) -> Self {
        Fingerprint {
            t,
            ranges: vec![None; n_aps],
        }
    }

    /// Records a range; a later range for the same AP replaces the earlier one.
    /// Out-of-range AP ids are ignored.
    pub fn set(&mut self, ap_id: u8, range: f64) {
        if let Some(slot) = self.ranges.get_mut(ap_id as usize) {
            *slot = Some(range);
        }
    }

    pub fn present(&self) -> usize {
        self.ranges.iter().filter(|r| r.is_some()).count()
    }
}

/// RMS range difference over APs present in both, or `None` when fewer than
/// `min_aps` are shared.
pub fn fingerprint_distance(a: &Fingerprint, b: &Fingerprint, min_aps: usize) -> Option<f64> {
    let mut n = 0usize;
    let mut sum = 0.0;
    for (x, y) in a.ranges.iter().zip(&b.ranges) {
        if let (Some(x), Some(y)) = (x, y) {
            n += 1;
            sum += (x - y) * (x - y);
        }
    }
    (n >= min_aps.max(1)).then(|| (sum / n as f64).sqrt())
}
