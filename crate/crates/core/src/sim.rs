//! Scenario drivers: coherence decay along a curvature chain, directional
//! measurement trials and observer accessibility, plus report writers.

use rand::{Rng, RngCore, SeedableRng};
use rand_xoshiro::SplitMix64;
use serde::{Deserialize, Serialize};

use crate::calculus::{measure_with_bound, prove_with_laws, transition_with_bound, CalculusError, FailureReason, Sequent};
use crate::dsl::{ScenarioConfig, ScenarioKind};
use crate::formula::{coherence, curvature_cost, base_cost, Formula};
use crate::frame::{accessible, Frame, FrameError};
use crate::metrics::{
    fisher_exact_two_tailed, fit_exponential, persistence_score, shannon_entropy, ContingencyTable, FitResult,
};
use crate::observer::{observer_valuation, Observer};

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_TRIALS: u32 = 50;
pub const DEFAULT_WIDTH: u32 = 1;
pub const DEFAULT_POPULATION: u32 = 30;
/// Horizons handed out round-robin to generated observers.
pub const HORIZON_CYCLE: [u32; 4] = [1, 2, 3, 4];

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum SimError {
    #[error("scenario is declared as `{found}` but `{expected}` was requested")]
    KindMismatch { expected: ScenarioKind, found: String },
    #[error("frame is not a forward chain")]
    NotAChain,
    #[error("malformed frame: {0}")]
    MalformedFrame(String),
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error(transparent)]
    Calculus(#[from] CalculusError),
}

/// Seed for trial `trial_index`, independent of execution order.
pub fn derive_trial_seed(master_seed: u64, trial_index: u64) -> u64 {
    let x = master_seed ^ trial_index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA);
    SplitMix64::seed_from_u64(x).next_u64()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Reverse,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Forward => "forward",
            Direction::Reverse => "reverse",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial_index: u32,
    pub direction: Option<Direction>,
    pub success: bool,
    pub proof_depth: u32,
    pub failure_reason: Option<FailureReason>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldRecord {
    pub world: String,
    pub kappa: f64,
    pub pi: f64,
    pub access_fraction: Option<f64>,
    pub entropy: f64,
    pub mean_proof_depth: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub kind: ScenarioKind,
    pub per_world: Vec<WorldRecord>,
    pub fit: Option<FitResult>,
    pub fisher_p: Option<f64>,
    pub trials: Vec<TrialRecord>,
    pub seed: u64,
}

impl ScenarioReport {
    /// (successes, failures) for one direction of a reciprocity run.
    pub fn tally(&self, direction: Direction) -> (u64, u64) {
        let rows = self.trials.iter().filter(|t| t.direction == Some(direction));
        rows.fold((0, 0), |(s, f), t| if t.success { (s + 1, f) } else { (s, f + 1) })
    }

    /// One line for terminal output.
    pub fn summary(&self) -> String {
        match self.kind {
            ScenarioKind::Coherence => {
                let pis: Vec<String> = self.per_world.iter().map(|w| format!("{:.2}", w.pi)).collect();
                match &self.fit {
                    Some(fit) => format!(
                        "coherence: pi=({}) rate={:.4} r2={:.4}",
                        pis.join(", "),
                        fit.rate,
                        fit.r_squared
                    ),
                    None => format!("coherence: pi=({}) rate=n/a", pis.join(", ")),
                }
            }
            ScenarioKind::Reciprocity => {
                let (fs, ff) = self.tally(Direction::Forward);
                let (rs, rf) = self.tally(Direction::Reverse);
                format!(
                    "reciprocity: forward {fs}/{} reverse {rs}/{} fisher_p={:e}",
                    fs + ff,
                    rs + rf,
                    self.fisher_p.unwrap_or(f64::NAN)
                )
            }
            ScenarioKind::Accessibility => {
                let last = self.per_world.last().and_then(|w| w.access_fraction).unwrap_or(0.0);
                format!("accessibility: final access fraction {last:.2}")
            }
        }
    }
}

/// Runs whichever scenario the configuration declares.
pub fn run(config: &ScenarioConfig) -> Result<ScenarioReport, SimError> {
    match config.scenario_kind {
        Some(ScenarioKind::Coherence) => run_coherence(config),
        Some(ScenarioKind::Reciprocity) => run_reciprocity(config),
        Some(ScenarioKind::Accessibility) => run_accessibility(config),
        None => Err(SimError::MalformedFrame("no `scenario` directive".into())),
    }
}

fn check_kind(config: &ScenarioConfig, expected: ScenarioKind) -> Result<(), SimError> {
    match config.scenario_kind {
        Some(kind) if kind == expected => Ok(()),
        other => Err(SimError::KindMismatch {
            expected,
            found: other.map_or_else(|| "unspecified".to_string(), |k| k.to_string()),
        }),
    }
}

fn seed_of(config: &ScenarioConfig) -> u64 {
    config.seed.unwrap_or(DEFAULT_SEED)
}

/// Replicates the head world's propositions `width` times and pushes the
/// multiset down the chain. At each hop every coherent formula must be
/// re-derived (`φ ⊢ φ`) within the source's λ and κ, and its curvature
/// surcharge at the target is charged against the energy left after the
/// hop. Formulas that fail either check are decohered.
pub fn run_coherence(config: &ScenarioConfig) -> Result<ScenarioReport, SimError> {
    check_kind(config, ScenarioKind::Coherence)?;
    let frame = &config.frame;
    let chain = frame.chain().ok_or(SimError::NotAChain)?;
    let model = &config.cost_model;
    let width = config.width.unwrap_or(DEFAULT_WIDTH) as usize;

    let head = frame.world(&chain[0])?;
    let mut pool: Vec<Formula> = Vec::with_capacity(head.props.len() * width);
    for _ in 0..width {
        pool.extend(head.props.iter().cloned());
    }

    let mut per_world = Vec::with_capacity(chain.len());
    for (k, id) in chain.iter().enumerate() {
        let world = frame.world(id)?;
        let bits: Vec<bool> = pool.iter().map(|f| coherence(f) == 1).collect();
        let entropy = if bits.is_empty() { 0.0 } else { shannon_entropy(&bits).unwrap_or(0.0) };
        let mut record = WorldRecord {
            world: id.clone(),
            kappa: world.kappa,
            pi: persistence_score(&pool),
            access_fraction: None,
            entropy,
            mean_proof_depth: None,
        };
        if let Some(next) = chain.get(k + 1) {
            let (depths, survivors) = hop(frame, id, next, &pool, model)?;
            if !depths.is_empty() {
                record.mean_proof_depth = Some(depths.iter().sum::<u32>() as f64 / depths.len() as f64);
            }
            pool = survivors;
        }
        per_world.push(record);
    }

    let points: Vec<(f64, f64)> = per_world.iter().filter(|w| w.pi > 0.0).map(|w| (w.kappa, w.pi)).collect();
    Ok(ScenarioReport {
        kind: ScenarioKind::Coherence,
        per_world,
        fit: fit_exponential(&points).ok(),
        fisher_p: None,
        trials: Vec::new(),
        seed: seed_of(config),
    })
}

/// One coherence hop; returns sustain-proof depths and the new multiset.
fn hop(
    frame: &Frame,
    from: &str,
    to: &str,
    pool: &[Formula],
    model: &crate::formula::CostModel,
) -> Result<(Vec<u32>, Vec<Formula>), SimError> {
    let source = frame.world(from)?;
    let target = frame.world(to)?;
    if !accessible(frame, from, to)? {
        return Ok((Vec::new(), pool.iter().map(Formula::decohere).collect()));
    }
    let delta_e = frame.edge(from, to).expect("accessible implies an edge");
    let budget = source.energy - delta_e;
    let mut spent = 0.0;
    let mut depths = Vec::new();
    let mut out = Vec::with_capacity(pool.len());
    for phi in pool {
        if coherence(phi) == 0 {
            out.push(phi.clone());
            continue;
        }
        let seq = Sequent::new(vec![phi.clone()], vec![phi.clone()]);
        let proof = prove_with_laws(&seq, source.lambda, model, source.kappa, frame.laws());
        if !proof.proved {
            out.push(phi.decohere());
            continue;
        }
        depths.push(proof.depth);
        let surcharge = curvature_cost(phi, model, target.kappa) - base_cost(phi, model);
        if spent + surcharge <= budget {
            spent += surcharge;
            out.push(phi.clone());
        } else {
            out.push(phi.decohere());
        }
    }
    Ok((depths, out))
}

/// Two-world measurement trials. Forward measures `A` then `B` from the
/// first world into the second, reverse measures `B` then `A` from the
/// second into the first, each on a fresh copy of the frame and under the
/// source world's λ less a seeded jitter.
pub fn run_reciprocity(config: &ScenarioConfig) -> Result<ScenarioReport, SimError> {
    check_kind(config, ScenarioKind::Reciprocity)?;
    let frame = &config.frame;
    let ids: Vec<String> = frame.worlds().map(|w| w.id.clone()).collect();
    if ids.len() != 2 || frame.edge_count() != 2 {
        return Err(SimError::MalformedFrame(
            "reciprocity needs exactly two worlds joined in both directions".into(),
        ));
    }
    let (wa, wb) = (ids[0].as_str(), ids[1].as_str());
    if frame.edge(wa, wb).is_none() || frame.edge(wb, wa).is_none() {
        return Err(SimError::MalformedFrame("missing edge between the two worlds".into()));
    }
    let trials = config.trials.unwrap_or(DEFAULT_TRIALS);
    let noise = config.noise.unwrap_or(0.0);
    let seed = seed_of(config);

    let mut records = Vec::with_capacity(2 * trials as usize);
    for trial in 0..trials {
        let mut rng = SplitMix64::seed_from_u64(derive_trial_seed(seed, trial as u64));
        records.push(measure_pair(config, trial, Direction::Forward, wa, wb, ["A", "B"], noise, &mut rng)?);
        records.push(measure_pair(config, trial, Direction::Reverse, wb, wa, ["B", "A"], noise, &mut rng)?);
    }

    let mut report = ScenarioReport {
        kind: ScenarioKind::Reciprocity,
        per_world: Vec::new(),
        fit: None,
        fisher_p: None,
        trials: records,
        seed,
    };
    let (fs, ff) = report.tally(Direction::Forward);
    let (rs, rf) = report.tally(Direction::Reverse);
    report.fisher_p = ContingencyTable::new(fs, ff, rs, rf).ok().map(|t| fisher_exact_two_tailed(&t));
    for id in [wa, wb] {
        let world = frame.world(id)?;
        report.per_world.push(WorldRecord {
            world: id.to_string(),
            kappa: world.kappa,
            pi: persistence_score(&world.props),
            access_fraction: None,
            entropy: 0.0,
            mean_proof_depth: None,
        });
    }
    Ok(report)
}

#[allow(clippy::too_many_arguments)]
fn measure_pair(
    config: &ScenarioConfig,
    trial: u32,
    direction: Direction,
    from: &str,
    to: &str,
    qubits: [&str; 2],
    noise: f64,
    rng: &mut SplitMix64,
) -> Result<TrialRecord, SimError> {
    let mut frame = config.frame.clone();
    let lambda = frame.world(from)?.lambda;
    let amplitude = (noise * lambda as f64).floor().max(0.0) as u32;
    let jitters: Vec<u32> = qubits.iter().map(|_| rng.gen_range(0..=amplitude)).collect();
    let mut depth = 0;
    for (q, jitter) in qubits.iter().zip(jitters) {
        let bound = lambda.saturating_sub(jitter);
        let outcome = format!("o_{q}");
        let result = measure_with_bound(&mut frame, from, to, q, &outcome, &config.cost_model, bound)?;
        if !result.valid {
            return Ok(TrialRecord {
                trial_index: trial,
                direction: Some(direction),
                success: false,
                proof_depth: depth,
                failure_reason: result.proof.failure_reason,
            });
        }
        depth = depth.max(result.proof.depth);
    }
    Ok(TrialRecord {
        trial_index: trial,
        direction: Some(direction),
        success: true,
        proof_depth: depth,
        failure_reason: None,
    })
}

/// Transports the head world's first proposition φ down the chain. Each hop
/// is searched within λ less the rounded-up curvature surcharge accumulated
/// so far; once a hop fails, φ arrives decohered and stays so. Observers then
/// evaluate φ at every world of the resulting frame.
pub fn run_accessibility(config: &ScenarioConfig) -> Result<ScenarioReport, SimError> {
    check_kind(config, ScenarioKind::Accessibility)?;
    let frame = &config.frame;
    let chain = frame.chain().ok_or(SimError::NotAChain)?;
    let model = &config.cost_model;
    let phi = frame
        .world(&chain[0])?
        .props
        .first()
        .cloned()
        .ok_or_else(|| SimError::MalformedFrame(format!("no proposition at `{}`", chain[0])))?;

    let mut working = frame.clone();
    let mut snapshot = frame.clone();
    let mut carried = phi.clone();
    let mut load = 0.0;
    let mut depths: Vec<Option<u32>> = vec![None];
    for pair in chain.windows(2) {
        let (from, to) = (pair[0].as_str(), pair[1].as_str());
        let target = frame.world(to)?;
        load += curvature_cost(&phi, model, target.kappa) - base_cost(&phi, model);
        if coherence(&carried) == 0 {
            working.world_mut(to)?.props.push(carried.clone());
            snapshot.world_mut(to)?.props.push(carried.clone());
            depths.push(None);
            continue;
        }
        if !working.world(from)?.holds(&carried) {
            working.world_mut(from)?.props.push(carried.clone());
        }
        let capacity = (working.world(from)?.lambda as f64 - load.ceil()).max(0.0) as u32;
        let seq = Sequent::new(vec![carried.clone()], vec![carried.clone()]);
        let outcome = transition_with_bound(&mut working, from, to, &seq, model, capacity)?;
        if outcome.valid {
            depths.push(Some(outcome.proof.depth));
        } else {
            carried = carried.decohere();
            working.world_mut(to)?.props.push(carried.clone());
            depths.push(None);
        }
        snapshot.world_mut(to)?.props.push(carried.clone());
    }

    let observers = population(config, &chain[0]);
    let mut per_world = Vec::with_capacity(chain.len());
    for (id, depth) in chain.iter().zip(depths) {
        let world = snapshot.world(id)?;
        let mut bits = Vec::with_capacity(observers.len());
        for o in &observers {
            bits.push(observer_valuation(&snapshot, o, id, &phi, model)? == 1);
        }
        let seen = bits.iter().filter(|&&b| b).count();
        per_world.push(WorldRecord {
            world: id.clone(),
            kappa: world.kappa,
            pi: persistence_score(&world.props),
            access_fraction: Some(if bits.is_empty() { 0.0 } else { seen as f64 / bits.len() as f64 }),
            entropy: if bits.is_empty() { 0.0 } else { shannon_entropy(&bits).unwrap_or(0.0) },
            mean_proof_depth: depth.map(f64::from),
        });
    }
    Ok(ScenarioReport {
        kind: ScenarioKind::Accessibility,
        per_world,
        fit: None,
        fisher_p: None,
        trials: Vec::new(),
        seed: seed_of(config),
    })
}

/// Declared observers, or a generated population homed at `head`.
fn population(config: &ScenarioConfig, head: &str) -> Vec<Observer> {
    if !config.observers.is_empty() {
        return config.observers.clone();
    }
    let n = config.population.unwrap_or(DEFAULT_POPULATION);
    (0..n)
        .map(|i| {
            let horizon = HORIZON_CYCLE[i as usize % HORIZON_CYCLE.len()];
            Observer::new(format!("o{i}"), head, horizon)
        })
        .collect()
}

// ---------------------------------------------------------------------------
// report output

#[derive(Serialize)]
struct PerWorldRow<'a> {
    world: &'a str,
    kappa: f64,
    pi: f64,
    access_fraction: Option<f64>,
    entropy: f64,
    mean_proof_depth: Option<f64>,
}

#[derive(Serialize)]
struct TrialRow<'a> {
    trial: u32,
    direction: &'a str,
    success: bool,
    proof_depth: u32,
    failure_reason: &'a str,
}

pub fn report_json(report: &ScenarioReport) -> String {
    let mut text = serde_json::to_string_pretty(report).expect("reports contain only finite values");
    text.push('\n');
    text
}

fn csv_text<T: Serialize>(header: &[&str], rows: impl IntoIterator<Item = T>) -> String {
    let mut writer = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    writer.write_record(header).expect("in-memory write");
    for row in rows {
        writer.serialize(row).expect("in-memory write");
    }
    String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("csv output is UTF-8")
}

pub fn per_world_csv(report: &ScenarioReport) -> String {
    csv_text(
        &["world", "kappa", "pi", "access_fraction", "entropy", "mean_proof_depth"],
        report.per_world.iter().map(|w| PerWorldRow {
            world: &w.world,
            kappa: w.kappa,
            pi: w.pi,
            access_fraction: w.access_fraction,
            entropy: w.entropy,
            mean_proof_depth: w.mean_proof_depth,
        }),
    )
}

pub fn trials_csv(report: &ScenarioReport) -> String {
    csv_text(
        &["trial", "direction", "success", "proof_depth", "failure_reason"],
        report.trials.iter().map(|t| TrialRow {
            trial: t.trial_index,
            direction: t.direction.map_or("", Direction::as_str),
            success: t.success,
            proof_depth: t.proof_depth,
            failure_reason: t.failure_reason.map_or("", FailureReason::as_str),
        }),
    )
}
