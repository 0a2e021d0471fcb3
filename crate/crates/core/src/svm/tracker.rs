use super::DualPoint;

/// Running set of points certified to be properly classified, with the
/// stall counter that ends training.
///
/// Index `i < j` refers to the `i`-th class-C point, index `j + i` to the
/// `i`-th class-D point. The stall counter only starts once the set is
/// nonempty: early on the proximity bound exceeds `gamma` and no point can
/// be certified, which would otherwise register as a stall.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassificationTracker {
    pub properly_classified: Vec<bool>,
    pub count: usize,
    pub p_best: f64,
    pub stale: u8,
    pub delta_min: f64,
}

impl ClassificationTracker {
    pub fn new(n: usize, delta_min: f64) -> Self {
        Self {
            properly_classified: vec![false; n],
            count: 0,
            p_best: 0.0,
            stale: 0,
            delta_min,
        }
    }

    pub fn fraction(&self) -> f64 {
        self.count as f64 / self.properly_classified.len() as f64
    }

    pub fn indices(&self) -> Vec<usize> {
        (0..self.properly_classified.len()).filter(|&i| self.properly_classified[i]).collect()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.properly_classified[i]
    }

    /// Adds every index with `gamma - p_plus_i > bound`, updates the stall
    /// counter, and returns whether training should stop.
    pub fn update(&mut self, p_plus: &DualPoint, bound: f64, gamma: f64) -> bool {
        debug_assert!(bound >= 0.0);
        for (i, &x) in p_plus.u.iter().chain(p_plus.v.iter()).enumerate() {
            if !self.properly_classified[i] && gamma - x > bound {
                self.properly_classified[i] = true;
                self.count += 1;
            }
        }
        if self.count == 0 {
            return false;
        }
        let p = self.fraction();
        if p > self.p_best + self.delta_min {
            self.p_best = p;
            self.stale = 0;
        } else {
            self.stale = (self.stale + 1).min(2);
        }
        self.stale >= 2
    }
}
