//! Evaluation outside the unit-test suite: discounted returns, validation
//! reward against a partner population and the diverse-starts sampler.

mod pool;
mod validation;

pub use pool::{
    build_start_pool, sample_start, PoolError, StartStatePool, DEFAULT_STRIDE, POOL_EXTENSION,
};
pub use validation::{
    default_population, episode_seed, validation_reward, EvalConfig, EvalError, MemberResult,
    ValidationReport, DEFAULT_EPISODES_PER_MEMBER, VALIDATION_FORMAT,
};

/// Sum of `gamma^t * r_t`.
pub fn episode_return(rewards: &[u32], gamma: f64) -> f64 {
    let mut total = 0.0;
    let mut discount = 1.0;
    for r in rewards {
        total += discount * *r as f64;
        discount *= gamma;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn undiscounted_sum() {
        let mut r = vec![0; 19];
        r.push(20);
        assert_eq!(episode_return(&r, 1.0), 20.0);
    }

    #[test]
    fn discounted_by_tick() {
        assert_eq!(episode_return(&[0, 0, 20], 0.5), 5.0);
        assert_eq!(episode_return(&[], 0.9), 0.0);
    }
}
