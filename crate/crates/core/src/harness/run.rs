use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::scenario::{Category, Scenario};
use crate::parallel::map_ordered;
use crate::policy::{Policy, PolicySpec};
use crate::rollout::{run_episode, slot_seed};
use crate::seed;

pub const REPORT_FORMAT: u32 = 1;

/// Outcome of one rollout of one variant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RolloutRecord {
    /// Child seed, as a decimal string so it survives JSON readers that
    /// use doubles.
    #[serde(with = "seed_text")]
    pub seed: u64,
    pub success: bool,
    /// Tick at which the predicate first held.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub ticks: Option<u32>,
    /// Set when a policy could not be built or failed during the rollout;
    /// such rollouts count as failures.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
}

mod seed_text {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(seed: &u64, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(seed)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<u64, D::Error> {
        String::deserialize(d)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariantResult {
    pub index: usize,
    pub score: f64,
    pub successes: u32,
    pub errors: u32,
    pub rollouts: Vec<RolloutRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioResult {
    pub id: String,
    pub layout: String,
    pub category: Category,
    pub tested_agent_index: usize,
    pub partner: String,
    pub predicate: String,
    /// successes / (variants x rollouts per variant)
    pub score: f64,
    pub successes: u32,
    pub rollouts: u32,
    pub errors: u32,
    pub variants: Vec<VariantResult>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub format: u32,
    pub tested: String,
    #[serde(with = "seed_text")]
    pub base_seed: u64,
    /// Unweighted mean of scenario scores per category; `None` when the
    /// suite has no scenario in it.
    pub categories: BTreeMap<Category, Option<f64>>,
    pub layouts: BTreeMap<String, f64>,
    pub rollouts: u32,
    pub error_rollouts: u32,
    pub error_fraction: f64,
    pub scenarios: Vec<ScenarioResult>,
}

/// Seed of one rollout. Depends only on its coordinates, so the order in
/// which rollouts run does not matter.
pub fn child_seed(base_seed: u64, scenario_id: &str, variant: usize, rollout: u32) -> u64 {
    seed::derive(
        base_seed,
        &[
            seed::fnv1a(scenario_id.as_bytes()),
            variant as u64,
            rollout as u64,
        ],
    )
}

/// Play one rollout of `variant` with the tested agent seeded from the
/// child seed's slot 0 and the partner from slot 1.
pub fn run_rollout(
    scenario: &Scenario,
    tested: &PolicySpec,
    variant: usize,
    child: u64,
) -> RolloutRecord {
    let ti = scenario.tested_agent_index;
    let layout = &scenario.layout;
    let fail = |error: String| RolloutRecord {
        seed: child,
        success: false,
        ticks: None,
        error: Some(error),
    };
    let tested_policy = match tested.build(layout, slot_seed(child, 0)) {
        Ok(p) => p,
        Err(e) => return fail(format!("tested policy: {e}")),
    };
    let partner_policy = match scenario.partner.build(layout, slot_seed(child, 1)) {
        Ok(p) => p,
        Err(e) => return fail(format!("partner policy: {e}")),
    };
    let mut policies: [Box<dyn Policy>; 2] = if ti == 0 {
        [tested_policy, partner_policy]
    } else {
        [partner_policy, tested_policy]
    };
    let budget = scenario.predicate.ticks().min(scenario.horizon);
    let mut tracker = scenario.predicate.tracker(ti);
    let mut elapsed = 0;
    let mut hit = None;
    let result = run_episode(
        layout,
        scenario.variants[variant].clone(),
        &mut policies,
        budget,
        |_, _, outcome| {
            elapsed += 1;
            if tracker.observe(outcome) {
                hit = Some(elapsed);
                true
            } else {
                false
            }
        },
    );
    match result {
        Ok(_) => RolloutRecord {
            seed: child,
            success: hit.is_some(),
            ticks: hit,
            error: None,
        },
        Err(failure) => {
            let who = if failure.agent == ti {
                "tested"
            } else {
                "partner"
            };
            fail(format!(
                "{who} policy at tick {}: {}",
                failure.tick, failure.error
            ))
        }
    }
}

fn collect_scenario(scenario: &Scenario, records: Vec<RolloutRecord>) -> ScenarioResult {
    let per = scenario.rollouts_per_variant as usize;
    let mut variants = Vec::with_capacity(scenario.variants.len());
    for (index, chunk) in records.chunks(per).enumerate() {
        let successes = chunk.iter().filter(|r| r.success).count() as u32;
        let errors = chunk.iter().filter(|r| r.error.is_some()).count() as u32;
        variants.push(VariantResult {
            index,
            score: successes as f64 / chunk.len() as f64,
            successes,
            errors,
            rollouts: chunk.to_vec(),
        });
    }
    let successes: u32 = variants.iter().map(|v| v.successes).sum();
    let errors: u32 = variants.iter().map(|v| v.errors).sum();
    let rollouts = records.len() as u32;
    ScenarioResult {
        id: scenario.id.clone(),
        layout: scenario.layout.name().to_string(),
        category: scenario.category,
        tested_agent_index: scenario.tested_agent_index,
        partner: scenario.partner.to_string(),
        predicate: scenario.predicate.to_string(),
        score: successes as f64 / rollouts as f64,
        successes,
        rollouts,
        errors,
        variants,
    }
}

fn jobs_of(scenario: &Scenario) -> impl Iterator<Item = (usize, u32)> + '_ {
    (0..scenario.variants.len())
        .flat_map(move |v| (0..scenario.rollouts_per_variant).map(move |r| (v, r)))
}

/// Score one scenario on the calling thread.
pub fn run_scenario(scenario: &Scenario, tested: &PolicySpec, base_seed: u64) -> ScenarioResult {
    let records = jobs_of(scenario)
        .map(|(v, r)| {
            run_rollout(
                scenario,
                tested,
                v,
                child_seed(base_seed, &scenario.id, v, r),
            )
        })
        .collect();
    collect_scenario(scenario, records)
}

/// Run every rollout of every scenario on `parallelism` threads and
/// aggregate. The report does not depend on `parallelism`.
pub fn run_suite(
    suite: &[Scenario],
    tested: &PolicySpec,
    base_seed: u64,
    parallelism: usize,
) -> TestReport {
    let jobs: Vec<(usize, usize, u32)> = suite
        .iter()
        .enumerate()
        .flat_map(|(s, sc)| jobs_of(sc).map(move |(v, r)| (s, v, r)))
        .collect();
    let run = |&(s, v, r): &(usize, usize, u32)| {
        let sc = &suite[s];
        run_rollout(sc, tested, v, child_seed(base_seed, &sc.id, v, r))
    };
    let records = map_ordered(&jobs, parallelism, run);
    let mut records = records.into_iter();
    let results = suite
        .iter()
        .map(|sc| {
            let n = sc.variants.len() * sc.rollouts_per_variant as usize;
            collect_scenario(sc, records.by_ref().take(n).collect())
        })
        .collect();
    aggregate(tested.to_string(), base_seed, results)
}

fn gcd(a: u128, b: u128) -> u128 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Unweighted mean of success ratios, summed as an exact fraction and
/// rounded once. Falls back to float summation if the fraction outgrows
/// 128 bits.
fn mean<'a>(results: impl Iterator<Item = &'a ScenarioResult>) -> Option<f64> {
    let ratios: Vec<(u128, u128)> = results
        .map(|r| (u128::from(r.successes), u128::from(r.rollouts.max(1))))
        .collect();
    if ratios.is_empty() {
        return None;
    }
    let n = ratios.len() as u128;
    let exact = ratios
        .iter()
        .try_fold((0u128, 1u128), |(num, den), &(s, d)| {
            let num = num.checked_mul(d)?.checked_add(s.checked_mul(den)?)?;
            let den = den.checked_mul(d)?;
            let g = gcd(num, den).max(1);
            Some((num / g, den / g))
        });
    Some(
        match exact.and_then(|(num, den)| Some((num, den.checked_mul(n)?))) {
            Some((num, den)) => {
                let g = gcd(num, den).max(1);
                (num / g) as f64 / (den / g) as f64
            }
            None => {
                ratios
                    .iter()
                    .map(|(s, d)| *s as f64 / *d as f64)
                    .sum::<f64>()
                    / n as f64
            }
        },
    )
}

/// Build a report from scenario results: unweighted means per category and
/// per layout.
pub fn aggregate(tested: String, base_seed: u64, scenarios: Vec<ScenarioResult>) -> TestReport {
    let categories = Category::ALL
        .iter()
        .map(|c| (*c, mean(scenarios.iter().filter(|s| s.category == *c))))
        .collect();
    let mut by_layout: BTreeMap<String, Vec<&ScenarioResult>> = BTreeMap::new();
    for s in &scenarios {
        by_layout.entry(s.layout.clone()).or_default().push(s);
    }
    let layouts = by_layout
        .into_iter()
        .map(|(l, xs)| (l, mean(xs.into_iter()).expect("non-empty")))
        .collect();
    let rollouts: u32 = scenarios.iter().map(|s| s.rollouts).sum();
    let error_rollouts: u32 = scenarios.iter().map(|s| s.errors).sum();
    TestReport {
        format: REPORT_FORMAT,
        tested,
        base_seed,
        categories,
        layouts,
        rollouts,
        error_rollouts,
        error_fraction: if rollouts == 0 {
            0.0
        } else {
            error_rollouts as f64 / rollouts as f64
        },
        scenarios,
    }
}

impl TestReport {
    pub fn category_mean(&self, c: Category) -> Option<f64> {
        self.categories.get(&c).copied().flatten()
    }

    /// Pretty JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<TestReport, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Human-readable summary: category means, layout means and one row per
    /// scenario.
    pub fn table(&self) -> String {
        let fmt = |x: Option<f64>| x.map_or("n/a".to_string(), |v| format!("{v:.2}"));
        let mut out = String::new();
        let _ = writeln!(
            out,
            "tested: {}   base seed: {}",
            self.tested, self.base_seed
        );
        let _ = writeln!(out);
        let _ = writeln!(out, "{:<10} {:>6}", "category", "mean");
        for c in Category::ALL {
            let _ = writeln!(out, "{:<10} {:>6}", c.name(), fmt(self.category_mean(c)));
        }
        let _ = writeln!(out);
        let _ = writeln!(out, "{:<16} {:>6}", "layout", "mean");
        for (l, m) in &self.layouts {
            let _ = writeln!(out, "{:<16} {:>6}", l, fmt(Some(*m)));
        }
        let _ = writeln!(out);
        let width = self
            .scenarios
            .iter()
            .map(|s| s.id.len())
            .max()
            .unwrap_or(8)
            .max(8);
        let _ = writeln!(
            out,
            "{:<width$} {:<4} {:>6} {:>9} {:>6}",
            "scenario", "cat", "score", "successes", "errors"
        );
        for s in &self.scenarios {
            let _ = writeln!(
                out,
                "{:<width$} {:<4} {:>6} {:>9} {:>6}",
                s.id,
                s.category.name(),
                fmt(Some(s.score)),
                format!("{}/{}", s.successes, s.rollouts),
                s.errors
            );
        }
        if self.error_rollouts > 0 {
            let _ = writeln!(
                out,
                "\n{} of {} rollouts ({:.0}%) ended in a policy error",
                self.error_rollouts,
                self.rollouts,
                100.0 * self.error_fraction
            );
        }
        out
    }
}
