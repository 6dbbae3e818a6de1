//! The myopic and index recruitment rules and the period transition.
//!
//! Both rules compare each pool candidate against a stationary search
//! value: `u^S` for the myopic rule, the search index for the optimal one.
//! A candidate that loses that comparison is retired, and since its state
//! is frozen from then on it would lose it in every later period too.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock, RwLock};

use rand::Rng;

use crate::error::{Error, Result};
use crate::indices::{self, Lattice};
use crate::model::{self, CandidateState, Category, CategoryParams, Policy, Scenario, Signal};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Action {
    Evaluate(usize),
    Search,
}

/// Exogenous randomness resolving one period.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Draw {
    Signal(Signal),
    Arrival(Option<Category>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Hire {
    pub category: Category,
    pub position: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepKind {
    Signal(Signal),
    Arrival(Category),
    NoArrival,
    Hired(Category, usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PoolState {
    pub candidates: Vec<CandidateState>,
    pub terminated: Option<Hire>,
}

impl PoolState {
    pub fn new(candidates: Vec<CandidateState>) -> Self {
        PoolState {
            candidates,
            terminated: None,
        }
    }

    pub fn initial(scenario: &Scenario) -> Self {
        PoolState::new(scenario.initial_pool.clone())
    }

    /// Marks the decision's retirements.
    pub fn commit(&mut self, decision: &Decision) {
        for &i in &decision.retire {
            self.candidates[i].retire();
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub kind: StepKind,
    pub next: PoolState,
}

/// The action for this period and the candidates that lose to search.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decision {
    pub action: Action,
    pub retire: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct StateInfo {
    pub(crate) p_one: f64,
    pub(crate) posterior: f64,
    pub(crate) myopic: f64,
    pub(crate) eligible: bool,
}

const DENSE_DEPTH: u32 = 256;

fn tri(d: u32) -> usize {
    let d = d as usize;
    d * (d + 1) / 2
}

/// Lazily filled per-category state facts.
struct StateTable {
    cat: CategoryParams,
    dense: Vec<OnceLock<StateInfo>>,
    extra: RwLock<HashMap<(u32, u32), StateInfo>>,
    priority: Mutex<HashMap<(u32, u32), f64>>,
    // retirement flags of the blank-rooted lattice, valid up to `stop_depth`
    stop: Option<(Lattice, Vec<bool>)>,
    stop_depth: u32,
}

impl StateTable {
    fn new(cat: CategoryParams) -> Self {
        StateTable {
            cat,
            dense: (0..tri(DENSE_DEPTH)).map(|_| OnceLock::new()).collect(),
            extra: RwLock::new(HashMap::new()),
            priority: Mutex::new(HashMap::new()),
            stop: None,
            stop_depth: 0,
        }
    }
}

/// A recruitment rule bound to a scenario, with cached per-state facts.
/// Shareable across threads.
pub struct Recruiter {
    policy: Policy,
    delta: f64,
    threshold: f64,
    cfg: model::NumericalConfig,
    tables: [StateTable; 2],
}

impl std::fmt::Debug for Recruiter {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Recruiter")
            .field("policy", &self.policy)
            .field("threshold", &self.threshold)
            .finish()
    }
}

impl Recruiter {
    /// Builds the scenario's own rule; computes the search index for the
    /// optimal policy.
    pub fn new(scenario: &Scenario) -> Result<Recruiter> {
        let threshold = match scenario.policy {
            Policy::Myopic => indices::myopic_search_value(scenario)?,
            Policy::OptimalIndex => indices::search_index(scenario, &scenario.tolerances)?.value,
        };
        Recruiter::with_threshold(scenario, scenario.policy, threshold)
    }

    /// A rule with an explicit search value (`u^S` or `V^S`).
    pub fn with_threshold(scenario: &Scenario, policy: Policy, threshold: f64) -> Result<Recruiter> {
        let cfg = scenario.tolerances;
        let mut tables = [StateTable::new(scenario.cat_a), StateTable::new(scenario.cat_b)];
        if policy == Policy::OptimalIndex {
            for t in tables.iter_mut() {
                let depth = 2 * cfg.horizon_cap;
                let lat = Lattice::build(&t.cat, scenario.delta, 0, 0, depth)?;
                let flags = lat.stop_flags(threshold);
                t.stop = Some((lat, flags));
                t.stop_depth = cfg.horizon_cap;
            }
        }
        Ok(Recruiter {
            policy,
            delta: scenario.delta,
            threshold,
            cfg,
            tables,
        })
    }

    pub fn policy(&self) -> Policy {
        self.policy
    }

    /// The stationary search value the rule compares candidates against.
    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub(crate) fn info(&self, c: Category, n1: u32, n0: u32) -> Result<StateInfo> {
        let t = &self.tables[c.index()];
        let d = n1 + n0;
        if d < DENSE_DEPTH {
            let slot = &t.dense[tri(d) + n0 as usize];
            if let Some(info) = slot.get() {
                return Ok(*info);
            }
            let info = self.compute_info(t, n1, n0)?;
            return Ok(*slot.get_or_init(|| info));
        }
        if let Some(info) = t.extra.read().unwrap().get(&(n1, n0)) {
            return Ok(*info);
        }
        let info = self.compute_info(t, n1, n0)?;
        t.extra.write().unwrap().insert((n1, n0), info);
        Ok(info)
    }

    fn compute_info(&self, t: &StateTable, n1: u32, n0: u32) -> Result<StateInfo> {
        let cat = &t.cat;
        let posterior = model::posterior(cat, n1, n0)?;
        let p_one = model::predictive(cat, posterior, Signal::One);
        let myopic = indices::myopic_value(cat, n1, n0)?;
        let eligible = match self.policy {
            Policy::Myopic => myopic >= self.threshold,
            Policy::OptimalIndex => !self.retires_at_search_index(t, n1, n0)?,
        };
        Ok(StateInfo {
            p_one,
            posterior,
            myopic,
            eligible,
        })
    }

    fn retires_at_search_index(&self, t: &StateTable, n1: u32, n0: u32) -> Result<bool> {
        if let Some((lat, flags)) = &t.stop {
            if n1 + n0 <= t.stop_depth {
                if let Some(n) = lat.slot(n1, n0) {
                    return Ok(flags[n]);
                }
            }
        }
        let lat = Lattice::build(&t.cat, self.delta, n1, n0, self.cfg.horizon_cap)?;
        if lat.root_absorbed() {
            return Ok(false);
        }
        let mut w = Vec::new();
        Ok(lat.continuation(self.threshold, false, &mut w) <= self.threshold)
    }

    /// Ranking value of an eligible candidate: its myopic value or its index.
    pub(crate) fn priority(&self, c: Category, n1: u32, n0: u32) -> Result<f64> {
        match self.policy {
            Policy::Myopic => Ok(self.info(c, n1, n0)?.myopic),
            Policy::OptimalIndex => {
                let t = &self.tables[c.index()];
                if let Some(v) = t.priority.lock().unwrap().get(&(n1, n0)) {
                    return Ok(*v);
                }
                let (v, _) = indices::gittins_value(&t.cat, n1, n0, self.delta, &self.cfg)?;
                t.priority.lock().unwrap().insert((n1, n0), v);
                Ok(v)
            }
        }
    }

    /// Chooses this period's action. Retired candidates are skipped;
    /// candidates that lose to search are listed in `retire`.
    pub fn decide(&self, candidates: &[CandidateState]) -> Result<Decision> {
        self.decide_among(candidates, 0..candidates.len())
    }

    pub(crate) fn decide_among(
        &self,
        candidates: &[CandidateState],
        positions: impl Iterator<Item = usize>,
    ) -> Result<Decision> {
        let mut retire = Vec::new();
        let mut eligible: Vec<usize> = Vec::new();
        for i in positions {
            let c = &candidates[i];
            if c.retired {
                continue;
            }
            if self.info(c.category, c.n1, c.n0)?.eligible {
                eligible.push(i);
            } else {
                retire.push(i);
            }
        }
        let action = match eligible.as_slice() {
            [] => Action::Search,
            [only] => Action::Evaluate(*only),
            many => {
                let mut best = many[0];
                let c = &candidates[best];
                let mut best_v = self.priority(c.category, c.n1, c.n0)?;
                for &i in &many[1..] {
                    let c = &candidates[i];
                    let v = self.priority(c.category, c.n1, c.n0)?;
                    if v > best_v {
                        best = i;
                        best_v = v;
                    }
                }
                Action::Evaluate(best)
            }
        };
        Ok(Decision { action, retire })
    }
}

/// Myopic rule's decision for a pool.
pub fn myopic_action(pool: &PoolState, scenario: &Scenario) -> Result<Decision> {
    let u_s = indices::myopic_search_value(scenario)?;
    Recruiter::with_threshold(scenario, Policy::Myopic, u_s)?.decide(&pool.candidates)
}

/// Index rule's decision for a pool given the search index `vs`.
pub fn optimal_action(pool: &PoolState, scenario: &Scenario, vs: f64) -> Result<Decision> {
    Recruiter::with_threshold(scenario, Policy::OptimalIndex, vs)?.decide(&pool.candidates)
}

/// Advances the pool by one period.
pub fn apply(pool: &PoolState, action: Action, draw: Draw, scenario: &Scenario) -> Result<StepOutcome> {
    if pool.terminated.is_some() {
        return Err(Error::IllegalAction("the process has already ended".into()));
    }
    let mut next = pool.clone();
    let kind = match (action, draw) {
        (Action::Evaluate(i), Draw::Signal(s)) => {
            let c = next
                .candidates
                .get_mut(i)
                .ok_or_else(|| Error::IllegalAction(format!("no candidate at position {i}")))?;
            if c.retired {
                return Err(Error::IllegalAction(format!("candidate {i} is retired")));
            }
            let cat = scenario.cat(c.category);
            if model::is_acceptable(cat, c.n1, c.n0)? {
                return Err(Error::IllegalAction(format!("candidate {i} is already acceptable")));
            }
            c.observe(s);
            if model::is_acceptable(cat, c.n1, c.n0)? {
                let hire = Hire {
                    category: c.category,
                    position: i,
                };
                next.terminated = Some(hire);
                StepKind::Hired(hire.category, i)
            } else {
                StepKind::Signal(s)
            }
        }
        (Action::Search, Draw::Arrival(Some(c))) => {
            next.candidates.push(CandidateState::blank(c));
            StepKind::Arrival(c)
        }
        (Action::Search, Draw::Arrival(None)) => StepKind::NoArrival,
        (a, d) => {
            return Err(Error::IllegalAction(format!("draw {d:?} does not resolve {a:?}")));
        }
    };
    Ok(StepOutcome { kind, next })
}

/// One recorded period of a simulated trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceStep {
    pub decision: Decision,
    pub kind: StepKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrajectoryEnd {
    pub hire: Option<Hire>,
    pub periods: u64,
}

/// Simulates one trajectory for at most `horizon` periods, calling
/// `on_step` after each period.
pub fn run_trajectory<R: Rng + ?Sized>(
    recruiter: &Recruiter,
    scenario: &Scenario,
    initial: &[CandidateState],
    rng: &mut R,
    horizon: u64,
    mut on_step: impl FnMut(&TraceStep),
) -> Result<TrajectoryEnd> {
    let mut pool: Vec<CandidateState> = initial.to_vec();
    let mut active: Vec<usize> = (0..pool.len()).filter(|&i| !pool[i].retired).collect();
    let (mu_a, mu_ab) = (scenario.mu_a, scenario.mu_total());
    for period in 0..horizon {
        let decision = recruiter.decide_among(&pool, active.iter().copied())?;
        if !decision.retire.is_empty() {
            for &i in &decision.retire {
                pool[i].retire();
            }
            active.retain(|i| !pool[*i].retired);
        }
        let kind = match decision.action {
            Action::Evaluate(i) => {
                let c = &mut pool[i];
                let info = recruiter.info(c.category, c.n1, c.n0)?;
                let s = if rng.random::<f64>() < info.p_one {
                    Signal::One
                } else {
                    Signal::Zero
                };
                c.observe(s);
                if model::is_acceptable(scenario.cat(c.category), c.n1, c.n0)? {
                    StepKind::Hired(c.category, i)
                } else {
                    StepKind::Signal(s)
                }
            }
            Action::Search => {
                let u = rng.random::<f64>();
                let arrival = if u < mu_a {
                    Some(Category::A)
                } else if u < mu_ab {
                    Some(Category::B)
                } else {
                    None
                };
                match arrival {
                    Some(c) => {
                        active.push(pool.len());
                        pool.push(CandidateState::blank(c));
                        StepKind::Arrival(c)
                    }
                    None => StepKind::NoArrival,
                }
            }
        };
        on_step(&TraceStep { decision, kind });
        if let StepKind::Hired(category, position) = kind {
            return Ok(TrajectoryEnd {
                hire: Some(Hire { category, position }),
                periods: period + 1,
            });
        }
    }
    Ok(TrajectoryEnd {
        hire: None,
        periods: horizon,
    })
}
