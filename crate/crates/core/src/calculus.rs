//! Cost-annotated linear sequent calculus, bounded proof search and
//! world-indexed transitions.
//!
//! Sequents are read resource-wise: `Γ ⊢ Δ` says the multiset Γ can be turned
//! into all of Δ at once, so the succedent is searched as the tensor of its
//! members (an empty Δ demands that Γ be used up entirely). Search is
//! backward, depth-first in a fixed rule order, and iteratively deepened so the
//! first proof returned is also one of minimal height.
//!
//! Besides the logical rules, a frame may carry transformation [`Law`]s. A law
//! `P1, …, Pk ⟹ Q` acts as a left rule: from `Γ, Q ⊢ C` infer
//! `Γ, P1, …, Pk ⊢ C`. Measurement collapse is one such law, instantiated per
//! measurement.

use std::collections::HashMap;
use std::fmt;
use std::rc::Rc;

use serde::{Deserialize, Serialize};

use crate::formula::{base_cost, Formula, CostModel};
use crate::frame::{accessible, Frame, FrameError};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum CalculusError {
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error("precondition violated: {0}")]
    Precondition(String),
}

/// Γ ⊢ Δ over formula multisets.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Sequent {
    pub gamma: Vec<Formula>,
    pub delta: Vec<Formula>,
}

impl Sequent {
    pub fn new(gamma: Vec<Formula>, delta: Vec<Formula>) -> Self {
        Sequent { gamma, delta }
    }

    /// The succedent read as a single goal.
    fn goal(&self) -> Option<Formula> {
        let mut iter = self.delta.iter().rev().cloned();
        let last = iter.next()?;
        Some(iter.fold(last, |acc, f| Formula::tensor(f, acc)))
    }
}

fn write_list(f: &mut fmt::Formatter<'_>, items: &[Formula]) -> fmt::Result {
    for (i, item) in items.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        write!(f, "{item}")?;
    }
    Ok(())
}

impl fmt::Display for Sequent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_list(f, &self.gamma)?;
        f.write_str(if self.gamma.is_empty() { "|-" } else { " |-" })?;
        if !self.delta.is_empty() {
            f.write_str(" ")?;
        }
        write_list(f, &self.delta)
    }
}

/// A transformation law `premises ⟹ conclusion`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Law {
    pub name: String,
    pub premises: Vec<Formula>,
    pub conclusion: Formula,
}

impl Law {
    pub fn new(name: impl Into<String>, premises: Vec<Formula>, conclusion: Formula) -> Self {
        Law {
            name: name.into(),
            premises,
            conclusion,
        }
    }

    /// `Quantum(ψ) ⟹ Classical(o)`.
    pub fn collapse(psi: &str, outcome: &str) -> Self {
        Law::new(
            format!("collapse({psi})"),
            vec![quantum(psi)],
            classical_outcome(outcome),
        )
    }
}

pub fn quantum(psi: &str) -> Formula {
    Formula::atom_with_args("Quantum", [psi])
}

pub fn classical_outcome(outcome: &str) -> Formula {
    Formula::classical_with_args("Classical", [outcome])
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Rule {
    Identity,
    Empty,
    TensorR,
    TensorL,
    LolliR,
    LolliL,
    WithR,
    WithL1,
    WithL2,
    Dereliction,
    Contraction,
    Weakening,
    Promotion,
    Law(String),
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Rule::Identity => "identity",
            Rule::Empty => "empty",
            Rule::TensorR => "tensor_r",
            Rule::TensorL => "tensor_l",
            Rule::LolliR => "lolli_r",
            Rule::LolliL => "lolli_l",
            Rule::WithR => "with_r",
            Rule::WithL1 => "with_l1",
            Rule::WithL2 => "with_l2",
            Rule::Dereliction => "dereliction",
            Rule::Contraction => "contraction",
            Rule::Weakening => "weakening",
            Rule::Promotion => "promotion",
            Rule::Law(name) => return write!(f, "law:{name}"),
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Derivation {
    pub rule: Rule,
    pub conclusion: Sequent,
    pub premises: Vec<Derivation>,
}

impl Derivation {
    pub fn height(&self) -> u32 {
        1 + self.premises.iter().map(Derivation::height).max().unwrap_or(0)
    }

    fn render(&self, indent: usize, out: &mut String) {
        use std::fmt::Write;
        let _ = writeln!(out, "{:indent$}{}  {}", "", self.rule, self.conclusion);
        for p in &self.premises {
            p.render(indent + 2, out);
        }
    }
}

/// Indented plain text, one `rule  sequent` line per node.
impl fmt::Display for Derivation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::new();
        self.render(0, &mut out);
        f.write_str(&out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureReason {
    DepthExceeded,
    NoRuleApplies,
    CostInvalid,
    /// The transition's edge is missing or unaffordable; no search was run.
    Inaccessible,
}

impl FailureReason {
    pub fn as_str(self) -> &'static str {
        match self {
            FailureReason::DepthExceeded => "depth_exceeded",
            FailureReason::NoRuleApplies => "no_rule_applies",
            FailureReason::CostInvalid => "cost_invalid",
            FailureReason::Inaccessible => "inaccessible",
        }
    }
}

impl fmt::Display for FailureReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProofResult {
    pub proved: bool,
    pub depth: u32,
    pub tree: Option<Derivation>,
    pub consumed_cost: f64,
    pub failure_reason: Option<FailureReason>,
}

impl ProofResult {
    fn failed(reason: FailureReason) -> Self {
        ProofResult {
            proved: false,
            depth: 0,
            tree: None,
            consumed_cost: 0.0,
            failure_reason: Some(reason),
        }
    }
}

/// (Σ c_κ(Γ), Σ c_κ(Δ)). Both sides share the factor (1 + ακ), applied once
/// after summing so the comparison cannot drift with κ.
pub fn cost_ledger(seq: &Sequent, model: &CostModel, kappa: f64) -> (f64, f64) {
    let factor = 1.0 + model.alpha() * kappa;
    let side = |fs: &[Formula]| fs.iter().map(|f| base_cost(f, model)).sum::<f64>() * factor;
    (side(&seq.gamma), side(&seq.delta))
}

pub fn cost_valid(seq: &Sequent, model: &CostModel, kappa: f64) -> bool {
    let (gamma, delta) = cost_ledger(seq, model, kappa);
    gamma >= delta
}

pub fn prove(seq: &Sequent, depth_bound: u32, model: &CostModel, kappa: f64) -> ProofResult {
    prove_with_laws(seq, depth_bound, model, kappa, &[])
}

pub fn prove_with_laws(
    seq: &Sequent,
    depth_bound: u32,
    model: &CostModel,
    kappa: f64,
    laws: &[Law],
) -> ProofResult {
    if !cost_valid(seq, model, kappa) {
        return ProofResult::failed(FailureReason::CostInvalid);
    }
    let mut search = Search {
        laws,
        memo: HashMap::new(),
    };
    let mut context = seq.gamma.clone();
    context.sort();
    let goal = seq.goal();
    let mut reason = FailureReason::DepthExceeded;
    for budget in 1..=depth_bound {
        match search.run(&context, goal.as_ref(), budget) {
            Attempt::Found(tree) => {
                let mut tree = (*tree).clone();
                tree.conclusion = seq.clone();
                return ProofResult {
                    proved: true,
                    depth: tree.height(),
                    tree: Some(tree),
                    consumed_cost: cost_ledger(seq, model, kappa).0,
                    failure_reason: None,
                };
            }
            // the whole space was explored without touching the bound
            Attempt::Failed { hit_bound: false } => {
                reason = FailureReason::NoRuleApplies;
                break;
            }
            Attempt::Failed { hit_bound: true } => {}
        }
    }
    ProofResult::failed(reason)
}

#[derive(Clone)]
enum Attempt {
    Found(Rc<Derivation>),
    Failed { hit_bound: bool },
}

type Key = (Vec<Formula>, Option<Formula>, u32);

struct Search<'a> {
    laws: &'a [Law],
    memo: HashMap<Key, Attempt>,
}

/// Indices of the first occurrence of each distinct element of a sorted slice.
fn distinct(context: &[Formula]) -> impl Iterator<Item = usize> + '_ {
    (0..context.len()).filter(move |&i| i == 0 || context[i] != context[i - 1])
}

fn without(context: &[Formula], index: usize) -> Vec<Formula> {
    let mut rest = context.to_vec();
    rest.remove(index);
    rest
}

fn with_added(mut context: Vec<Formula>, added: impl IntoIterator<Item = Formula>) -> Vec<Formula> {
    context.extend(added);
    context.sort();
    context
}

/// Every way of dividing a sorted multiset in two, without repeating splits
/// that differ only by which copy of a duplicate went where. The left part
/// grows from empty.
fn splits(context: &[Formula]) -> Vec<(Vec<Formula>, Vec<Formula>)> {
    let mut groups: Vec<(&Formula, usize)> = Vec::new();
    for f in context {
        match groups.last_mut() {
            Some((g, n)) if *g == f => *n += 1,
            _ => groups.push((f, 1)),
        }
    }
    let mut counts = vec![0usize; groups.len()];
    let mut out = Vec::new();
    loop {
        let mut left = Vec::new();
        let mut right = Vec::new();
        for ((f, n), &k) in groups.iter().zip(&counts) {
            left.extend(std::iter::repeat_n((*f).clone(), k));
            right.extend(std::iter::repeat_n((*f).clone(), n - k));
        }
        out.push((left, right));
        // mixed-radix increment
        let mut i = 0;
        loop {
            if i == groups.len() {
                return out;
            }
            if counts[i] < groups[i].1 {
                counts[i] += 1;
                break;
            }
            counts[i] = 0;
            i += 1;
        }
    }
}

/// Removes `part` from `context` as a multiset; `None` if not contained.
fn take(context: &[Formula], part: &[Formula]) -> Option<Vec<Formula>> {
    let mut rest = context.to_vec();
    for f in part {
        let pos = rest.iter().position(|g| g == f)?;
        rest.remove(pos);
    }
    Some(rest)
}

fn node(rule: Rule, context: &[Formula], goal: Option<&Formula>, premises: Vec<Derivation>) -> Rc<Derivation> {
    Rc::new(Derivation {
        rule,
        conclusion: Sequent::new(context.to_vec(), goal.cloned().into_iter().collect()),
        premises,
    })
}

impl Search<'_> {
    fn run(&mut self, context: &[Formula], goal: Option<&Formula>, budget: u32) -> Attempt {
        if budget == 0 {
            return Attempt::Failed { hit_bound: true };
        }
        let key = (context.to_vec(), goal.cloned(), budget);
        if let Some(hit) = self.memo.get(&key) {
            return hit.clone();
        }
        let result = self.expand(context, goal, budget);
        self.memo.insert(key, result.clone());
        result
    }

    fn expand(&mut self, context: &[Formula], goal: Option<&Formula>, budget: u32) -> Attempt {
        let below = budget - 1;
        let mut hit_bound = false;

        // Tries a list of premises in order; all must succeed.
        macro_rules! attempt {
            ($rule:expr, [$(($ctx:expr, $goal:expr)),+ $(,)?]) => {{
                let mut premises = Vec::new();
                let mut ok = true;
                $(
                    if ok {
                        match self.run(&$ctx, $goal, below) {
                            Attempt::Found(p) => premises.push((*p).clone()),
                            Attempt::Failed { hit_bound: h } => {
                                hit_bound |= h;
                                ok = false;
                            }
                        }
                    }
                )+
                if ok {
                    return Attempt::Found(node($rule, context, goal, premises));
                }
            }};
        }

        // identity / empty
        match goal {
            Some(g @ (Formula::Atom(_) | Formula::Diamond(..))) => {
                if context.len() == 1 && &context[0] == g {
                    return Attempt::Found(node(Rule::Identity, context, goal, Vec::new()));
                }
            }
            None if context.is_empty() => {
                return Attempt::Found(node(Rule::Empty, context, goal, Vec::new()));
            }
            _ => {}
        }

        if let Some(Formula::Tensor(a, b)) = goal {
            for (left, right) in splits(context) {
                attempt!(Rule::TensorR, [(left, Some(&**a)), (right, Some(&**b))]);
            }
        }

        for i in distinct(context) {
            if let Formula::Tensor(a, b) = &context[i] {
                let next = with_added(without(context, i), [(**a).clone(), (**b).clone()]);
                attempt!(Rule::TensorL, [(next, goal)]);
            }
        }

        if let Some(Formula::Lolli(a, b)) = goal {
            let next = with_added(context.to_vec(), [(**a).clone()]);
            attempt!(Rule::LolliR, [(next, Some(&**b))]);
        }

        for i in distinct(context) {
            if let Formula::Lolli(a, b) = &context[i] {
                for (left, right) in splits(&without(context, i)) {
                    let right = with_added(right, [(**b).clone()]);
                    attempt!(Rule::LolliL, [(left, Some(&**a)), (right, goal)]);
                }
            }
        }

        if let Some(Formula::With(a, b)) = goal {
            attempt!(Rule::WithR, [(context, Some(&**a)), (context, Some(&**b))]);
        }

        for (rule, pick_left) in [(Rule::WithL1, true), (Rule::WithL2, false)] {
            for i in distinct(context) {
                if let Formula::With(a, b) = &context[i] {
                    let chosen = if pick_left { a } else { b };
                    let next = with_added(without(context, i), [(**chosen).clone()]);
                    attempt!(rule.clone(), [(next, goal)]);
                }
            }
        }

        for i in distinct(context) {
            if let Formula::Bang(a) = &context[i] {
                let next = with_added(without(context, i), [(**a).clone()]);
                attempt!(Rule::Dereliction, [(next, goal)]);
            }
        }

        // Each contraction spends one level of the depth budget, so a branch
        // can never perform more than `depth_bound` of them.
        for i in distinct(context) {
            if context[i].is_bang() {
                let next = with_added(context.to_vec(), [context[i].clone()]);
                attempt!(Rule::Contraction, [(next, goal)]);
            }
        }

        for i in distinct(context) {
            if context[i].is_bang() {
                attempt!(Rule::Weakening, [(without(context, i), goal)]);
            }
        }

        if let Some(Formula::Bang(a)) = goal {
            if context.iter().all(Formula::is_bang) {
                attempt!(Rule::Promotion, [(context, Some(&**a))]);
            }
        }

        for law in self.laws {
            if let Some(rest) = take(context, &law.premises) {
                let next = with_added(rest, [law.conclusion.clone()]);
                attempt!(Rule::Law(law.name.clone()), [(next, goal)]);
            }
        }

        Attempt::Failed { hit_bound }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionOutcome {
    pub valid: bool,
    pub proof: ProofResult,
    pub source_remainder: Vec<Formula>,
    pub target_additions: Vec<Formula>,
    pub energy_spent: f64,
}

/// Γ_w ⊢_{w→w′} Δ_{w′} under λ(w).
pub fn transition(
    frame: &mut Frame,
    w: &str,
    w_prime: &str,
    seq: &Sequent,
    model: &CostModel,
) -> Result<TransitionOutcome, CalculusError> {
    let bound = frame.world(w)?.lambda;
    transition_with_bound(frame, w, w_prime, seq, model, bound)
}

/// As [`transition`], but searching within `depth_bound` instead of λ(w).
pub fn transition_with_bound(
    frame: &mut Frame,
    w: &str,
    w_prime: &str,
    seq: &Sequent,
    model: &CostModel,
    depth_bound: u32,
) -> Result<TransitionOutcome, CalculusError> {
    apply(frame, w, w_prime, seq, model, depth_bound, &[])
}

fn apply(
    frame: &mut Frame,
    w: &str,
    w_prime: &str,
    seq: &Sequent,
    model: &CostModel,
    depth_bound: u32,
    extra_laws: &[Law],
) -> Result<TransitionOutcome, CalculusError> {
    let source = frame.world(w)?;
    frame.world(w_prime)?;
    let Some(remainder) = take(&source.props, &seq.gamma) else {
        return Err(CalculusError::Precondition(format!(
            "antecedent `{seq}` is not contained in the propositions of `{w}`"
        )));
    };
    let rejected = |proof: ProofResult| TransitionOutcome {
        valid: false,
        proof,
        source_remainder: source.props.clone(),
        target_additions: Vec::new(),
        energy_spent: 0.0,
    };
    if !accessible(frame, w, w_prime)? {
        return Ok(rejected(ProofResult::failed(FailureReason::Inaccessible)));
    }
    let proof = if depth_bound == 0 {
        ProofResult::failed(FailureReason::DepthExceeded)
    } else if extra_laws.is_empty() {
        prove_with_laws(seq, depth_bound, model, source.kappa, frame.laws())
    } else {
        let laws: Vec<Law> = frame.laws().iter().chain(extra_laws).cloned().collect();
        prove_with_laws(seq, depth_bound, model, source.kappa, &laws)
    };
    if !proof.proved {
        return Ok(rejected(proof));
    }
    let delta_e = frame.edge(w, w_prime).expect("accessible implies an edge");
    let source = frame.world_mut(w)?;
    source.props = remainder.clone();
    source.energy -= delta_e;
    frame.world_mut(w_prime)?.props.extend(seq.delta.iter().cloned());
    Ok(TransitionOutcome {
        valid: true,
        proof,
        source_remainder: remainder,
        target_additions: seq.delta.clone(),
        energy_spent: delta_e,
    })
}

/// `!Quantum(ψ) ⊢_{w→w′} Classical(o)`: consumes the banged state at `w` and
/// registers the outcome at `w′`.
pub fn measure(
    frame: &mut Frame,
    w: &str,
    w_prime: &str,
    psi: &str,
    outcome: &str,
    model: &CostModel,
) -> Result<TransitionOutcome, CalculusError> {
    let bound = frame.world(w)?.lambda;
    measure_with_bound(frame, w, w_prime, psi, outcome, model, bound)
}

pub fn measure_with_bound(
    frame: &mut Frame,
    w: &str,
    w_prime: &str,
    psi: &str,
    outcome: &str,
    model: &CostModel,
    depth_bound: u32,
) -> Result<TransitionOutcome, CalculusError> {
    let state = Formula::bang(quantum(psi));
    if !frame.world(w)?.holds(&state) {
        return Err(CalculusError::Precondition(format!(
            "`{state}` is not present at `{w}` (already measured?)"
        )));
    }
    let seq = Sequent::new(vec![state], vec![classical_outcome(outcome)]);
    apply(
        frame,
        w,
        w_prime,
        &seq,
        model,
        depth_bound,
        &[Law::collapse(psi, outcome)],
    )
}
