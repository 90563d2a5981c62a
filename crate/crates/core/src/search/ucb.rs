//! Upper-confidence-bound arm selection with cost-weighted pull counts.

use rand::Rng;

#[derive(Clone, Debug)]
pub struct Ucb {
    /// Total reward R(a).
    pub reward: Vec<f64>,
    /// Pull mass n(a), raised by the charge of every pull.
    pub mass: Vec<f64>,
    /// Plain selection counts, for reporting.
    pub pulls: Vec<u64>,
    pub c: f64,
}

impl Ucb {
    pub fn new(arms: usize, c: f64) -> Ucb {
        assert!(arms > 0, "bandit needs an arm");
        Ucb { reward: vec![0.0; arms], mass: vec![0.0; arms], pulls: vec![0; arms], c }
    }

    pub fn arms(&self) -> usize {
        self.reward.len()
    }

    /// Score of an arm that has been pulled, at `t = sum of masses`.
    pub fn score(&self, arm: usize) -> f64 {
        let t: f64 = self.mass.iter().sum();
        let n = self.mass[arm];
        self.reward[arm] / n + self.c * (t.ln() / n).sqrt()
    }

    /// Unpulled arms first, uniformly; then the best score with uniform
    /// tie-breaking.
    pub fn select<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let fresh: Vec<usize> = (0..self.arms()).filter(|&a| self.mass[a] == 0.0).collect();
        if !fresh.is_empty() {
            return fresh[rng.random_range(0..fresh.len())];
        }
        let scores: Vec<f64> = (0..self.arms()).map(|a| self.score(a)).collect();
        let best = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let top: Vec<usize> = (0..self.arms()).filter(|&a| scores[a] == best).collect();
        top[rng.random_range(0..top.len())]
    }

    /// Records a pull charged `cost + 1`.
    pub fn update(&mut self, arm: usize, reward: f64, cost: i64) {
        self.reward[arm] += reward;
        self.mass[arm] += cost as f64 + 1.0;
        self.pulls[arm] += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rewarded_arm_wins_at_equal_mass() {
        let mut u = Ucb::new(2, 1.0);
        u.update(0, 1.0, 0);
        u.update(1, 0.0, 0);
        let expected = 1.0 + (2f64.ln()).sqrt();
        assert!((u.score(0) - expected).abs() < 1e-12);
        assert!((u.score(0) - 1.8326).abs() < 1e-3);
        assert!((u.score(1) - 0.8326).abs() < 1e-3);
        assert_eq!(u.select(&mut ChaCha8Rng::seed_from_u64(0)), 0);
    }

    #[test]
    fn unpulled_arms_come_first() {
        let mut u = Ucb::new(3, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut seen = [false; 3];
        for _ in 0..3 {
            let a = u.select(&mut rng);
            assert!(!seen[a]);
            seen[a] = true;
            u.update(a, 100.0, 0);
        }
    }

    #[test]
    fn equal_scores_split_evenly() {
        let mut u = Ucb::new(2, 1.0);
        u.update(0, 0.0, 0);
        u.update(1, 0.0, 0);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 10_000;
        let zeros = (0..n).filter(|_| u.select(&mut rng) == 0).count() as f64;
        // binomial(n, 1/2): three standard deviations is 150
        assert!((zeros - n as f64 / 2.0).abs() < 150.0, "{zeros}");
    }

    #[test]
    fn mass_grows_by_cost_plus_one() {
        let mut u = Ucb::new(1, 1.0);
        u.update(0, 0.0, 6);
        u.update(0, 0.0, 0);
        assert_eq!(u.mass[0], 8.0);
        assert_eq!(u.pulls[0], 2);
        assert_eq!(u.select(&mut ChaCha8Rng::seed_from_u64(3)), 0);
    }
}
