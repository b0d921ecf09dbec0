//! Contingency scenarios, the outage uncertainty set, the marginal-moment
//! ambiguity set, exhaustive enumeration and seeded sampling.
//!
//! A scenario records which `(line, period)` pairs are out of service. The
//! uncertainty set bounds simultaneous outages per period by `n_z` and keeps
//! a failed line down for at least `tau_rst` further periods. Whether the
//! line was built is not part of admissibility: failing an unbuilt line never
//! changes the restoration problem.

use std::collections::BTreeMap;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::NetworkInstance;
use crate::rng::{substream, Stream};

/// Probability and moment tolerance for distribution checks.
pub const PROB_TOL: f64 = 1e-9;

/// Draws per sampled distribution unless overridden.
pub const DEFAULT_DRAWS: usize = 1000;

#[derive(Debug, Error, PartialEq)]
pub enum ScenarioError {
    #[error("scenario is {got_lines}x{got_periods}, instance needs {lines}x{periods}")]
    Dimension {
        lines: usize,
        periods: usize,
        got_lines: usize,
        got_periods: usize,
    },
    #[error("{} admissible scenarios exceed the enumeration limit {limit}", fmt_count(*.count, *.exact))]
    Explosion { count: u128, exact: bool, limit: usize },
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
}

fn fmt_count(count: u128, exact: bool) -> String {
    if exact {
        count.to_string()
    } else {
        format!("more than {count}")
    }
}

/// Line availability over the horizon. `works(l, t)` is the binary `z`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "ScenarioRepr", try_from = "ScenarioRepr")]
pub struct ContingencyScenario {
    lines: usize,
    periods: usize,
    /// Line-major: index `l * periods + t`.
    failed: Vec<bool>,
}

#[derive(Serialize, Deserialize)]
struct ScenarioRepr {
    lines: usize,
    periods: usize,
    /// `[line, period]` pairs, zero based.
    failed: Vec<[usize; 2]>,
}

impl From<ContingencyScenario> for ScenarioRepr {
    fn from(s: ContingencyScenario) -> Self {
        ScenarioRepr {
            lines: s.lines,
            periods: s.periods,
            failed: s.failures().map(|(l, t)| [l, t]).collect(),
        }
    }
}

impl TryFrom<ScenarioRepr> for ContingencyScenario {
    type Error = String;

    fn try_from(r: ScenarioRepr) -> Result<Self, String> {
        let mut s = ContingencyScenario::all_working(r.lines, r.periods);
        for [l, t] in r.failed {
            if l >= r.lines || t >= r.periods {
                return Err(format!("failure ({l},{t}) outside {}x{}", r.lines, r.periods));
            }
            s.set_failed(l, t, true);
        }
        Ok(s)
    }
}

impl fmt::Debug for ContingencyScenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Scenario{:?}", self.failures().collect::<Vec<_>>())
    }
}

impl ContingencyScenario {
    pub fn all_working(lines: usize, periods: usize) -> Self {
        Self {
            lines,
            periods,
            failed: vec![false; lines * periods],
        }
    }

    pub fn for_instance(instance: &NetworkInstance) -> Self {
        Self::all_working(instance.line_count(), instance.periods)
    }

    pub fn from_failures(lines: usize, periods: usize, failures: &[(usize, usize)]) -> Self {
        let mut s = Self::all_working(lines, periods);
        for &(l, t) in failures {
            s.set_failed(l, t, true);
        }
        s
    }

    /// Builds from a `z` matrix given per line (`z[l][t]`, 1 = working).
    pub fn from_z(z: &[Vec<u8>]) -> Self {
        let lines = z.len();
        let periods = z.first().map_or(0, Vec::len);
        let mut s = Self::all_working(lines, periods);
        for (l, row) in z.iter().enumerate() {
            for (t, &v) in row.iter().enumerate() {
                s.set_failed(l, t, v == 0);
            }
        }
        s
    }

    pub fn lines(&self) -> usize {
        self.lines
    }

    pub fn periods(&self) -> usize {
        self.periods
    }

    pub fn works(&self, line: usize, t: usize) -> bool {
        !self.failed[line * self.periods + t]
    }

    /// `z` as a number.
    pub fn z(&self, line: usize, t: usize) -> f64 {
        if self.works(line, t) {
            1.0
        } else {
            0.0
        }
    }

    pub fn set_failed(&mut self, line: usize, t: usize, failed: bool) {
        self.failed[line * self.periods + t] = failed;
    }

    pub fn is_all_working(&self) -> bool {
        !self.failed.iter().any(|&f| f)
    }

    /// Failed `(line, period)` pairs in line-major order.
    pub fn failures(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let periods = self.periods;
        self.failed
            .iter()
            .enumerate()
            .filter(|(_, &f)| f)
            .map(move |(i, _)| (i / periods, i % periods))
    }

    pub fn failure_count(&self) -> usize {
        self.failed.iter().filter(|&&f| f).count()
    }

    pub fn failures_in_period(&self, t: usize) -> usize {
        (0..self.lines).filter(|&l| !self.works(l, t)).count()
    }

    /// Lines failing in at least one period.
    pub fn affected_lines(&self) -> Vec<usize> {
        (0..self.lines)
            .filter(|&l| (0..self.periods).any(|t| !self.works(l, t)))
            .collect()
    }

    /// Flattened `z` bit-string, line-major. Identity for deduplication.
    pub fn key(&self) -> String {
        self.failed.iter().map(|&f| if f { '0' } else { '1' }).collect()
    }

    /// Failure pattern of one period restricted to `lines`, as a bit mask.
    pub fn period_mask(&self, t: usize, lines: &[usize]) -> u128 {
        lines
            .iter()
            .enumerate()
            .filter(|(_, &l)| !self.works(l, t))
            .fold(0u128, |m, (i, _)| m | (1u128 << i))
    }
}

fn check_dims(z: &ContingencyScenario, instance: &NetworkInstance) -> Result<(), ScenarioError> {
    if z.lines != instance.line_count() || z.periods != instance.periods {
        return Err(ScenarioError::Dimension {
            lines: instance.line_count(),
            periods: instance.periods,
            got_lines: z.lines,
            got_periods: z.periods,
        });
    }
    Ok(())
}

/// Per-period outage budget and restoration-time coupling.
pub fn is_admissible(z: &ContingencyScenario, instance: &NetworkInstance) -> Result<bool, ScenarioError> {
    check_dims(z, instance)?;
    for t in 0..z.periods {
        if z.failures_in_period(t) > instance.n_z {
            return Ok(false);
        }
    }
    for (l, line) in instance.lines.iter().enumerate() {
        for t in 0..z.periods {
            if z.works(l, t) {
                continue;
            }
            let end = (t + line.tau_rst as usize).min(z.periods - 1);
            if ((t + 1)..=end).any(|u| z.works(l, u)) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Enumerates every admissible scenario in ascending order. Fails before
/// enumerating when the count exceeds `limit`.
pub fn enumerate_scenarios(instance: &NetworkInstance, limit: usize) -> Result<Vec<ContingencyScenario>, ScenarioError> {
    let all: Vec<usize> = (0..instance.line_count()).collect();
    enumerate_scenarios_over(instance, &all, limit)
}

/// Like [`enumerate_scenarios`] but only lines in `active` may fail.
pub fn enumerate_scenarios_over(
    instance: &NetworkInstance,
    active: &[usize],
    limit: usize,
) -> Result<Vec<ContingencyScenario>, ScenarioError> {
    let walker = Walker::new(instance, active);
    let mut counted = 0usize;
    walker.walk(limit.saturating_add(1), &mut |_| counted += 1);
    if counted > limit {
        let (count, exact) = walker.closed_form_count().map_or((counted as u128 - 1, false), |c| (c, true));
        return Err(ScenarioError::Explosion { count, exact, limit });
    }
    let mut out = Vec::with_capacity(counted);
    walker.walk(usize::MAX, &mut |s| out.push(s.clone()));
    out.sort();
    Ok(out)
}

/// Number of admissible scenarios, stopping once `cap` is exceeded.
pub fn count_scenarios(instance: &NetworkInstance, cap: usize) -> usize {
    let all: Vec<usize> = (0..instance.line_count()).collect();
    let mut n = 0;
    Walker::new(instance, &all).walk(cap.saturating_add(1), &mut |_| n += 1);
    n
}

struct Walker<'a> {
    instance: &'a NetworkInstance,
    active: &'a [usize],
}

impl<'a> Walker<'a> {
    fn new(instance: &'a NetworkInstance, active: &'a [usize]) -> Self {
        Self { instance, active }
    }

    /// Visits admissible scenarios depth-first over periods; stops after
    /// `cap` visits.
    fn walk(&self, cap: usize, visit: &mut dyn FnMut(&ContingencyScenario)) {
        let mut s = ContingencyScenario::for_instance(self.instance);
        let mut seen = 0usize;
        self.period(0, &mut s, cap, &mut seen, visit);
    }

    fn period(
        &self,
        t: usize,
        s: &mut ContingencyScenario,
        cap: usize,
        seen: &mut usize,
        visit: &mut dyn FnMut(&ContingencyScenario),
    ) {
        if *seen >= cap {
            return;
        }
        if t == s.periods {
            *seen += 1;
            visit(s);
            return;
        }
        let mut forced = Vec::new();
        let mut free = Vec::new();
        for &l in self.active {
            let tau = self.instance.lines[l].tau_rst as usize;
            let is_forced = (1..=tau.min(t)).any(|d| !s.works(l, t - d));
            if is_forced {
                forced.push(l);
            } else {
                free.push(l);
            }
        }
        if forced.len() > self.instance.n_z {
            return;
        }
        for &l in &forced {
            s.set_failed(l, t, true);
        }
        let room = self.instance.n_z - forced.len();
        let mut chosen = Vec::new();
        self.subsets(t, &free, 0, room, &mut chosen, s, cap, seen, visit);
        for &l in &forced {
            s.set_failed(l, t, false);
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn subsets(
        &self,
        t: usize,
        free: &[usize],
        start: usize,
        room: usize,
        chosen: &mut Vec<usize>,
        s: &mut ContingencyScenario,
        cap: usize,
        seen: &mut usize,
        visit: &mut dyn FnMut(&ContingencyScenario),
    ) {
        self.period(t + 1, s, cap, seen, visit);
        if room == 0 {
            return;
        }
        for i in start..free.len() {
            if *seen >= cap {
                return;
            }
            s.set_failed(free[i], t, true);
            chosen.push(free[i]);
            self.subsets(t, free, i + 1, room - 1, chosen, s, cap, seen, visit);
            chosen.pop();
            s.set_failed(free[i], t, false);
        }
    }

    /// Exact count when no restoration coupling exists: per period the
    /// subsets of at most `n_z` active lines, independently across periods.
    fn closed_form_count(&self) -> Option<u128> {
        if self.active.iter().any(|&l| self.instance.lines[l].tau_rst > 0) {
            return None;
        }
        let m = self.active.len() as u128;
        let per_period = (0..=self.instance.n_z as u128)
            .map(|k| binomial(m, k))
            .fold(0u128, u128::saturating_add);
        Some((0..self.instance.periods).fold(1u128, |acc, _| acc.saturating_mul(per_period)))
    }
}

pub fn binomial(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

/// Marginal failure-probability bounds per `(line, period)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AmbiguitySet {
    lines: usize,
    periods: usize,
    mu_max: Vec<f64>,
}

impl AmbiguitySet {
    pub fn from_instance(instance: &NetworkInstance) -> Self {
        let periods = instance.periods;
        let mu_max = instance.lines.iter().flat_map(|l| l.mu_max.iter().copied()).collect();
        Self {
            lines: instance.line_count(),
            periods,
            mu_max,
        }
    }

    pub fn uniform(lines: usize, periods: usize, mu: f64) -> Self {
        assert!((0.0..=1.0).contains(&mu));
        Self {
            lines,
            periods,
            mu_max: vec![mu; lines * periods],
        }
    }

    pub fn from_fn(lines: usize, periods: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut mu_max = Vec::with_capacity(lines * periods);
        for l in 0..lines {
            for t in 0..periods {
                let v = f(l, t);
                assert!((0.0..=1.0).contains(&v), "mu_max must lie in [0,1]");
                mu_max.push(v);
            }
        }
        Self { lines, periods, mu_max }
    }

    pub fn mu_max(&self, line: usize, t: usize) -> f64 {
        self.mu_max[line * self.periods + t]
    }

    pub fn lines(&self) -> usize {
        self.lines
    }

    pub fn periods(&self) -> usize {
        self.periods
    }

    pub fn matches(&self, instance: &NetworkInstance) -> bool {
        self.lines == instance.line_count() && self.periods == instance.periods
    }
}

/// Probability mass on finitely many scenarios.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteDistribution {
    pub support: Vec<ContingencyScenario>,
    pub probs: Vec<f64>,
}

impl FiniteDistribution {
    pub fn point_mass(z: ContingencyScenario) -> Self {
        Self {
            support: vec![z],
            probs: vec![1.0],
        }
    }

    /// Merges duplicate scenarios and sorts the support.
    pub fn from_weighted(items: impl IntoIterator<Item = (ContingencyScenario, f64)>) -> Self {
        let mut merged: BTreeMap<ContingencyScenario, f64> = BTreeMap::new();
        for (z, p) in items {
            *merged.entry(z).or_insert(0.0) += p;
        }
        let (support, probs) = merged.into_iter().unzip();
        Self { support, probs }
    }

    /// Probability that `line` is out in period `t`.
    pub fn marginal_failure(&self, line: usize, t: usize) -> f64 {
        self.support
            .iter()
            .zip(&self.probs)
            .filter(|(z, _)| !z.works(line, t))
            .map(|(_, p)| p)
            .sum()
    }

    pub fn expectation(&self, mut f: impl FnMut(&ContingencyScenario) -> f64) -> f64 {
        self.support.iter().zip(&self.probs).map(|(z, p)| p * f(z)).sum()
    }

    /// Membership in the ambiguity set: normalized, admissible support and
    /// marginal failure probabilities within `mu_max`.
    pub fn check(&self, instance: &NetworkInstance, ambiguity: &AmbiguitySet) -> Result<(), ScenarioError> {
        let bad = |m: String| Err(ScenarioError::InvalidDistribution(m));
        if self.support.len() != self.probs.len() {
            return bad("support and probs differ in length".into());
        }
        if self.probs.iter().any(|&p| p < -PROB_TOL) {
            return bad("negative probability".into());
        }
        let total: f64 = self.probs.iter().sum();
        if (total - 1.0).abs() > PROB_TOL {
            return bad(format!("probabilities sum to {total}"));
        }
        for z in &self.support {
            if !is_admissible(z, instance)? {
                return bad(format!("inadmissible support scenario {z:?}"));
            }
        }
        for l in 0..instance.line_count() {
            for t in 0..instance.periods {
                let m = self.marginal_failure(l, t);
                if m > ambiguity.mu_max(l, t) + PROB_TOL {
                    return bad(format!(
                        "line {l} period {t}: failure probability {m} exceeds {}",
                        ambiguity.mu_max(l, t)
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Samples a member of the ambiguity set with [`DEFAULT_DRAWS`] draws.
pub fn sample_distribution(ambiguity: &AmbiguitySet, instance: &NetworkInstance, seed: u64) -> FiniteDistribution {
    sample_distribution_with(ambiguity, instance, seed, DEFAULT_DRAWS)
}

/// Per-line failure probabilities drawn uniformly in `[0, mu_max]`, then
/// `draws` independent Bernoulli outage patterns, each repaired into the
/// uncertainty set. Restoration coupling takes priority: outages forced by
/// earlier failures are kept, and new failures beyond `n_z` are dropped in
/// ascending order of failure probability. If the empirical marginals end up
/// above `mu_max`, the distribution is mixed with the all-working scenario
/// just enough to restore membership.
pub fn sample_distribution_with(
    ambiguity: &AmbiguitySet,
    instance: &NetworkInstance,
    seed: u64,
    draws: usize,
) -> FiniteDistribution {
    assert!(draws > 0);
    assert!(ambiguity.matches(instance), "ambiguity set does not match instance");
    let lines = instance.line_count();
    let periods = instance.periods;
    let mut rng = substream(seed, Stream::Sampler);
    let prob: Vec<f64> = (0..lines * periods)
        .map(|i| {
            let mu = ambiguity.mu_max(i / periods, i % periods);
            if mu > 0.0 {
                rng.gen_range(0.0..=mu)
            } else {
                0.0
            }
        })
        .collect();

    let mut counts: BTreeMap<ContingencyScenario, usize> = BTreeMap::new();
    for _ in 0..draws {
        let mut z = ContingencyScenario::all_working(lines, periods);
        for t in 0..periods {
            let mut forced = 0;
            let mut fresh = Vec::new();
            for l in 0..lines {
                let tau = instance.lines[l].tau_rst as usize;
                let draw = rng.gen::<f64>() < prob[l * periods + t];
                if (1..=tau.min(t)).any(|d| !z.works(l, t - d)) {
                    z.set_failed(l, t, true);
                    forced += 1;
                } else if draw {
                    fresh.push(l);
                }
            }
            fresh.sort_by(|&a, &b| prob[b * periods + t].total_cmp(&prob[a * periods + t]).then(a.cmp(&b)));
            for &l in fresh.iter().take(instance.n_z.saturating_sub(forced)) {
                z.set_failed(l, t, true);
            }
        }
        *counts.entry(z).or_insert(0) += 1;
    }
    let mut dist = FiniteDistribution::from_weighted(
        counts.into_iter().map(|(z, c)| (z, c as f64 / draws as f64)),
    );

    let mut alpha: f64 = 1.0;
    for l in 0..lines {
        for t in 0..periods {
            let m = dist.marginal_failure(l, t);
            if m > ambiguity.mu_max(l, t) {
                alpha = alpha.min(ambiguity.mu_max(l, t) / m);
            }
        }
    }
    if alpha < 1.0 {
        let nominal = ContingencyScenario::all_working(lines, periods);
        let items: Vec<_> = dist
            .support
            .into_iter()
            .zip(dist.probs.into_iter().map(|p| p * alpha))
            .chain(std::iter::once((nominal, 1.0 - alpha)))
            .collect();
        dist = FiniteDistribution::from_weighted(items);
    }
    dist
}

/// Draws one scenario according to `dist`.
pub fn sample_scenario(dist: &FiniteDistribution, seed: u64) -> ContingencyScenario {
    let mut rng = substream(seed, Stream::Scenario);
    draw_from(dist, &mut rng).clone()
}

pub fn draw_from<'d>(dist: &'d FiniteDistribution, rng: &mut impl Rng) -> &'d ContingencyScenario {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (z, p) in dist.support.iter().zip(&dist.probs) {
        acc += p;
        if u < acc {
            return z;
        }
    }
    // rounding: fall back to the last scenario with positive mass
    dist.support
        .iter()
        .zip(&dist.probs)
        .rev()
        .find(|(_, &p)| p > 0.0)
        .map(|(z, _)| z)
        .expect("distribution has positive mass")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{LineSpec, NodeSpec};
    use rand::SeedableRng;

    fn inst(lines: usize, periods: usize, n_z: usize, tau: u32) -> NetworkInstance {
        let nodes = (0..=lines)
            .map(|i| NodeSpec {
                id: (i as i64 + 1).into(),
                load_p: vec![10.0; periods],
                load_q: vec![1.0; periods],
                is_substation: i == 0,
                cap_p: 100.0,
                cap_q: 50.0,
                dg_candidate: false,
            })
            .collect();
        let lines = (0..lines)
            .map(|l| LineSpec {
                from: 1.into(),
                to: (l as i64 + 2).into(),
                cost: 1.0,
                resistance: 0.0,
                reactance: 0.0,
                cap_p: 100.0,
                cap_q: 50.0,
                mu_max: vec![0.01; periods],
                tau_rst: tau,
            })
            .collect();
        NetworkInstance {
            nodes,
            lines,
            periods,
            budget_cost: 100.0,
            budget_dg: 0,
            n_z,
            v_min: 0.9,
            v_max: 1.1,
            v_ref: 1.0,
            coords: None,
        }
    }

    /// Brute force: every bit mask filtered by `is_admissible`.
    fn brute_force(instance: &NetworkInstance) -> Vec<ContingencyScenario> {
        let (l, t) = (instance.line_count(), instance.periods);
        let mut out = Vec::new();
        for mask in 0u64..(1 << (l * t)) {
            let failures: Vec<_> = (0..l * t)
                .filter(|i| mask >> i & 1 == 1)
                .map(|i| (i / t, i % t))
                .collect();
            let z = ContingencyScenario::from_failures(l, t, &failures);
            if is_admissible(&z, instance).unwrap() {
                out.push(z);
            }
        }
        out.sort();
        out
    }

    #[test]
    fn all_working_is_admissible() {
        let i = inst(3, 2, 1, 1);
        assert!(is_admissible(&ContingencyScenario::for_instance(&i), &i).unwrap());
    }

    #[test]
    fn outage_budget_enforced() {
        let i = inst(3, 1, 1, 0);
        let z = ContingencyScenario::from_failures(3, 1, &[(0, 0), (1, 0)]);
        assert!(!is_admissible(&z, &i).unwrap());
    }

    #[test]
    fn restoration_time_enforced() {
        let i = inst(1, 3, 1, 2);
        let z = ContingencyScenario::from_z(&[vec![0, 1, 1]]);
        assert!(!is_admissible(&z, &i).unwrap());
        let z = ContingencyScenario::from_z(&[vec![0, 0, 0]]);
        assert!(is_admissible(&z, &i).unwrap());
    }

    #[test]
    fn dimension_mismatch_is_error() {
        let i = inst(2, 2, 1, 0);
        let z = ContingencyScenario::all_working(3, 2);
        assert!(matches!(is_admissible(&z, &i), Err(ScenarioError::Dimension { .. })));
    }

    #[test]
    fn three_lines_one_period() {
        let i = inst(3, 1, 1, 0);
        let got = enumerate_scenarios(&i, 100).unwrap();
        assert_eq!(got.len(), 4);
        assert_eq!(got, brute_force(&i));
    }

    #[test]
    fn two_lines_two_periods_unbounded() {
        let i = inst(2, 2, 2, 0);
        let got = enumerate_scenarios(&i, 100).unwrap();
        assert_eq!(got.len(), 16);
        assert_eq!(got, brute_force(&i));
    }

    #[test]
    fn restoration_coupling_single_line() {
        let i = inst(1, 2, 1, 1);
        let got = enumerate_scenarios(&i, 100).unwrap();
        let mut expected = vec![
            ContingencyScenario::from_z(&[vec![1, 1]]),
            ContingencyScenario::from_z(&[vec![0, 0]]),
            ContingencyScenario::from_z(&[vec![1, 0]]),
        ];
        expected.sort();
        assert_eq!(got, expected);
    }

    #[test]
    fn enumeration_matches_brute_force_with_coupling() {
        for (l, t, nz, tau) in [(3, 3, 1, 1), (2, 3, 2, 2), (4, 2, 2, 1), (3, 3, 2, 0)] {
            let i = inst(l, t, nz, tau);
            assert_eq!(enumerate_scenarios(&i, 10_000).unwrap(), brute_force(&i), "{l} {t} {nz} {tau}");
        }
    }

    #[test]
    fn explosion_reports_exact_count() {
        let i = inst(3, 2, 1, 0);
        match enumerate_scenarios(&i, 10) {
            Err(ScenarioError::Explosion { count, exact, limit }) => {
                assert_eq!((count, exact, limit), (16, true, 10));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn zero_mu_gives_point_mass_on_nominal() {
        let i = inst(3, 2, 1, 1);
        let amb = AmbiguitySet::uniform(3, 2, 0.0);
        let d = sample_distribution(&amb, &i, 1);
        assert_eq!(d.support, vec![ContingencyScenario::for_instance(&i)]);
        assert_eq!(d.probs, vec![1.0]);
    }

    #[test]
    fn sampled_distribution_is_member_and_deterministic() {
        let i = inst(4, 3, 1, 1);
        let amb = AmbiguitySet::uniform(4, 3, 0.3);
        let a = sample_distribution_with(&amb, &i, 1, 400);
        let b = sample_distribution_with(&amb, &i, 1, 400);
        assert_eq!(a, b);
        a.check(&i, &amb).unwrap();
        assert!(a.support.len() > 1);
    }

    #[test]
    fn sample_scenario_point_mass() {
        let z = ContingencyScenario::from_failures(2, 1, &[(1, 0)]);
        let d = FiniteDistribution::point_mass(z.clone());
        assert_eq!(sample_scenario(&d, 9), z);
    }

    #[test]
    fn sample_scenario_frequencies() {
        let a = ContingencyScenario::all_working(1, 1);
        let b = ContingencyScenario::from_failures(1, 1, &[(0, 0)]);
        let d = FiniteDistribution::from_weighted([(a.clone(), 0.5), (b.clone(), 0.5)]);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let n = 100_000;
        let hits = (0..n).filter(|_| draw_from(&d, &mut rng) == &a).count();
        let freq = hits as f64 / n as f64;
        assert!((freq - 0.5).abs() < 0.01, "{freq}");
    }

    #[test]
    fn scenario_serializes_failures_only() {
        let z = ContingencyScenario::from_failures(3, 2, &[(2, 1)]);
        let text = serde_json::to_string(&z).unwrap();
        assert_eq!(text, r#"{"lines":3,"periods":2,"failed":[[2,1]]}"#);
        let back: ContingencyScenario = serde_json::from_str(&text).unwrap();
        assert_eq!(back, z);
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 2), 10);
        assert_eq!(binomial(37, 3), 7770);
        assert_eq!(binomial(3, 4), 0);
    }
}
