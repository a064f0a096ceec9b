//! Observer-indexed valuations bounded by a hop-count epistemic horizon.

use serde::{Deserialize, Serialize};

use crate::calculus::{prove_with_laws, CalculusError, Sequent};
use crate::formula::{CostModel, Formula};
use crate::frame::{accessible, hop_distance, Frame, FrameError};

/// Largest antecedent sub-multiset tried when looking for a derivation.
pub const MAX_ANTECEDENT: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Observer {
    pub id: String,
    pub home: String,
    pub horizon: u32,
}

impl Observer {
    pub fn new(id: impl Into<String>, home: impl Into<String>, horizon: u32) -> Self {
        Observer {
            id: id.into(),
            home: home.into(),
            horizon,
        }
    }

    /// Checks that the home world exists in `frame`.
    pub fn bind(self, frame: &Frame) -> Result<Self, FrameError> {
        frame.world(&self.home)?;
        Ok(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Persistence {
    Preserved,
    Violated,
    NotEstablished,
}

pub fn observer_sees(frame: &Frame, o: &Observer, w: &str) -> Result<bool, FrameError> {
    Ok(hop_distance(frame, &o.home, w)?.is_some_and(|d| d <= o.horizon as usize))
}

/// V_o(w, φ): visible from the observer's home and either held at `w` or
/// derivable there from at most three of its propositions within λ(w).
pub fn observer_valuation(
    frame: &Frame,
    o: &Observer,
    w: &str,
    phi: &Formula,
    model: &CostModel,
) -> Result<u8, FrameError> {
    if !observer_sees(frame, o, w)? {
        return Ok(0);
    }
    Ok(provable_at(frame, w, phi, model)? as u8)
}

/// Whether φ is held at `w` or derivable from a small sub-multiset of its
/// propositions under the world's own λ and κ.
pub fn provable_at(frame: &Frame, w: &str, phi: &Formula, model: &CostModel) -> Result<bool, FrameError> {
    let world = frame.world(w)?;
    if world.holds(phi) {
        return Ok(true);
    }
    let mut props = world.props.clone();
    props.sort();
    let mut tried: Vec<Vec<Formula>> = Vec::new();
    for size in 1..=MAX_ANTECEDENT.min(props.len()) {
        for picked in combinations(props.len(), size) {
            let gamma: Vec<Formula> = picked.iter().map(|&i| props[i].clone()).collect();
            if tried.contains(&gamma) {
                continue;
            }
            let seq = Sequent::new(gamma.clone(), vec![phi.clone()]);
            if prove_with_laws(&seq, world.lambda, model, world.kappa, frame.laws()).proved {
                return Ok(true);
            }
            tried.push(gamma);
        }
    }
    Ok(false)
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(k);
    fn go(start: usize, n: usize, k: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if current.len() == k {
            out.push(current.clone());
            return;
        }
        for i in start..n {
            current.push(i);
            go(i + 1, n, k, current, out);
            current.pop();
        }
    }
    go(0, n, k, &mut current, &mut out);
    out
}

/// Truth persistence across an accessible step `w → w′`.
pub fn persistence_check(
    frame: &Frame,
    o: &Observer,
    w: &str,
    w_prime: &str,
    phi: &Formula,
    model: &CostModel,
) -> Result<Persistence, CalculusError> {
    if !accessible(frame, w, w_prime)? {
        return Err(CalculusError::Precondition(format!(
            "`{w}` does not access `{w_prime}`"
        )));
    }
    if observer_valuation(frame, o, w, phi, model)? == 0 {
        return Ok(Persistence::NotEstablished);
    }
    Ok(if observer_valuation(frame, o, w_prime, phi, model)? == 1 {
        Persistence::Preserved
    } else {
        Persistence::Violated
    })
}
