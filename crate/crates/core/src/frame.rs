//! Kripke frames whose worlds carry energy, curvature and inference capacity,
//! connected by energy-weighted directed edges.

use std::collections::VecDeque;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::calculus::Law;
use crate::formula::Formula;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum FrameError {
    #[error("unknown world `{0}`")]
    UnknownWorld(String),
    #[error("duplicate world `{0}`")]
    DuplicateWorld(String),
    #[error("duplicate edge {0} -> {1}")]
    DuplicateEdge(String, String),
    #[error("invalid value for world `{world}`: {message}")]
    InvalidWorld { world: String, message: String },
    #[error("edge {from} -> {to}: deltaE must be finite and >= 0")]
    InvalidDelta { from: String, to: String },
}

/// A logical context: its proposition multiset Σ plus the scalars E, κ and λ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct World {
    pub id: String,
    pub props: Vec<Formula>,
    pub energy: f64,
    pub kappa: f64,
    pub lambda: u32,
}

impl World {
    pub fn new(id: impl Into<String>, energy: f64, kappa: f64, lambda: u32) -> Result<Self, FrameError> {
        let id = id.into();
        let invalid = |message: &str| FrameError::InvalidWorld {
            world: id.clone(),
            message: message.to_string(),
        };
        if !(energy.is_finite() && energy >= 0.0) {
            return Err(invalid("energy must be finite and >= 0"));
        }
        if !(kappa.is_finite() && kappa >= 0.0) {
            return Err(invalid("kappa must be finite and >= 0"));
        }
        if lambda == 0 {
            return Err(invalid("lambda must be >= 1"));
        }
        Ok(World {
            id,
            props: Vec::new(),
            energy,
            kappa,
            lambda,
        })
    }

    pub fn with_props(mut self, props: impl IntoIterator<Item = Formula>) -> Self {
        self.props.extend(props);
        self
    }

    pub fn holds(&self, phi: &Formula) -> bool {
        self.props.contains(phi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathCost {
    pub hops: usize,
    pub total_delta_e: f64,
}

/// Worlds in declaration order, edges keyed by ordered pair, and the
/// transformation laws shared by every world of the frame.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Frame {
    worlds: IndexMap<String, World>,
    edges: IndexMap<(String, String), f64>,
    laws: Vec<Law>,
}

impl Frame {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_world(&mut self, world: World) -> Result<(), FrameError> {
        if self.worlds.contains_key(&world.id) {
            return Err(FrameError::DuplicateWorld(world.id));
        }
        self.worlds.insert(world.id.clone(), world);
        Ok(())
    }

    pub fn add_edge(&mut self, from: &str, to: &str, delta_e: f64) -> Result<(), FrameError> {
        self.require(from)?;
        self.require(to)?;
        if !(delta_e.is_finite() && delta_e >= 0.0) {
            return Err(FrameError::InvalidDelta {
                from: from.into(),
                to: to.into(),
            });
        }
        let key = (from.to_string(), to.to_string());
        if self.edges.contains_key(&key) {
            return Err(FrameError::DuplicateEdge(key.0, key.1));
        }
        self.edges.insert(key, delta_e);
        Ok(())
    }

    pub fn add_law(&mut self, law: Law) {
        self.laws.push(law);
    }

    pub fn laws(&self) -> &[Law] {
        &self.laws
    }

    pub fn world(&self, id: &str) -> Result<&World, FrameError> {
        self.worlds
            .get(id)
            .ok_or_else(|| FrameError::UnknownWorld(id.to_string()))
    }

    pub fn world_mut(&mut self, id: &str) -> Result<&mut World, FrameError> {
        self.worlds
            .get_mut(id)
            .ok_or_else(|| FrameError::UnknownWorld(id.to_string()))
    }

    fn require(&self, id: &str) -> Result<(), FrameError> {
        self.world(id).map(|_| ())
    }

    pub fn worlds(&self) -> impl Iterator<Item = &World> {
        self.worlds.values()
    }

    pub fn world_count(&self) -> usize {
        self.worlds.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// `(from, to, deltaE)` in insertion order.
    pub fn edges(&self) -> impl Iterator<Item = (&str, &str, f64)> {
        self.edges
            .iter()
            .map(|((from, to), delta)| (from.as_str(), to.as_str(), *delta))
    }

    pub fn edge(&self, from: &str, to: &str) -> Option<f64> {
        self.edges.get(&(from.to_string(), to.to_string())).copied()
    }

    pub fn remove_edge(&mut self, from: &str, to: &str) -> Option<f64> {
        self.edges
            .shift_remove(&(from.to_string(), to.to_string()))
    }

    pub fn successors<'a>(&'a self, w: &'a str) -> impl Iterator<Item = (&'a str, f64)> + 'a {
        self.edges
            .iter()
            .filter(move |((from, _), _)| from == w)
            .map(|((_, to), delta)| (to.as_str(), *delta))
    }

    /// Follows the unique outgoing edge from the unique source world.
    /// Returns `None` unless the frame is a simple forward chain covering
    /// every world.
    pub fn chain(&self) -> Option<Vec<String>> {
        let n = self.worlds.len();
        if n == 0 || self.edges.len() != n - 1 {
            return None;
        }
        let has_incoming = |id: &str| self.edges.keys().any(|(_, to)| to == id);
        let mut heads = self.worlds.keys().filter(|id| !has_incoming(id));
        let head = heads.next()?.clone();
        if heads.next().is_some() {
            return None;
        }
        let mut order = vec![head];
        while order.len() < n {
            let last = order.last().unwrap().clone();
            let mut next = self.successors(&last);
            let (to, _) = next.next()?;
            if next.next().is_some() || order.iter().any(|seen| seen == to) {
                return None;
            }
            let to = to.to_string();
            order.push(to);
        }
        Some(order)
    }
}

/// R(w, w′): an edge exists and its ΔE fits within E(w).
pub fn accessible(frame: &Frame, w: &str, w_prime: &str) -> Result<bool, FrameError> {
    let source = frame.world(w)?;
    frame.require(w_prime)?;
    Ok(frame
        .edge(w, w_prime)
        .is_some_and(|delta| delta <= source.energy))
}

/// V(w, ◇_r φ): some accessible successor holds φ with ΔE ≤ r.
pub fn eval_diamond(frame: &Frame, w: &str, phi: &Formula, budget: f64) -> Result<bool, FrameError> {
    let source = frame.world(w)?;
    for (to, delta) in frame.successors(w) {
        if delta <= source.energy && delta <= budget && frame.world(to)?.holds(phi) {
            return Ok(true);
        }
    }
    Ok(false)
}

/// V(w, φ) as 0 or 1.
pub fn eval_prop(frame: &Frame, w: &str, phi: &Formula) -> Result<u8, FrameError> {
    let holds = match phi {
        Formula::Diamond(budget, inner) => eval_diamond(frame, w, inner, budget.value())?,
        _ => frame.world(w)?.holds(phi),
    };
    Ok(holds as u8)
}

/// Breadth-first search over accessible edges, each gated by the energy of the
/// world it leaves.
pub fn shortest_path(frame: &Frame, w: &str, w_prime: &str) -> Result<Option<PathCost>, FrameError> {
    frame.require(w)?;
    frame.require(w_prime)?;
    let mut visited: IndexMap<&str, PathCost> = IndexMap::new();
    visited.insert(
        w,
        PathCost {
            hops: 0,
            total_delta_e: 0.0,
        },
    );
    let mut queue = VecDeque::from([w]);
    while let Some(current) = queue.pop_front() {
        let here = visited[current];
        if current == w_prime {
            return Ok(Some(here));
        }
        let energy = frame.world(current)?.energy;
        for (to, delta) in frame.successors(current) {
            if delta <= energy && !visited.contains_key(to) {
                visited.insert(
                    to,
                    PathCost {
                        hops: here.hops + 1,
                        total_delta_e: here.total_delta_e + delta,
                    },
                );
                queue.push_back(to);
            }
        }
    }
    Ok(None)
}

pub fn hop_distance(frame: &Frame, w: &str, w_prime: &str) -> Result<Option<usize>, FrameError> {
    Ok(shortest_path(frame, w, w_prime)?.map(|p| p.hops))
}
