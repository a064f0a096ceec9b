//! Proptest generators shared by several test targets.

use eclc::calculus::{Law, Sequent};
use eclc::dsl::{NamedSequent, ScenarioConfig, ScenarioKind};
use eclc::formula::{default_classical, CostModel, Formula};
use eclc::frame::{Frame, World};
use eclc::observer::Observer;
use indexmap::IndexMap;
use proptest::prelude::*;

const POOL: [&str; 5] = ["A", "B", "C", "D", "E"];

fn pool_formula(i: usize) -> Formula {
    match i {
        0..=4 => Formula::atom(POOL[i]),
        5 => Formula::tensor(Formula::atom("A"), Formula::atom("B")),
        6 => Formula::bang(Formula::atom("C")),
        _ => Formula::lolli(Formula::atom("A"), Formula::atom("D")),
    }
}

#[derive(Debug, Clone)]
pub struct Setup {
    pub frame: Frame,
    pub from: String,
    pub to: String,
    pub gamma: Vec<Formula>,
    pub delta: Vec<Formula>,
}

/// Frames of 2 to 4 worlds without self-loops. Every world holds distinct
/// propositions, so a consumed antecedent cannot be found a second time.
/// About half the cases move Γ unchanged over an affordable edge, so valid
/// steps are common.
pub fn setup() -> impl Strategy<Value = Setup> {
    (2usize..=4)
        .prop_flat_map(|n| {
            (
                Just(n),
                prop::collection::vec((0.0f64..20.0, 0.0f64..3.0, 1u32..8, prop::collection::btree_set(0usize..8, 1..5)), n),
                prop::collection::vec((0usize..n, 0usize..n, 0.0f64..25.0), 1..8),
                0usize..n,
                0usize..n,
                prop::collection::vec(any::<prop::sample::Index>(), 1..4),
                prop::collection::vec(0usize..8, 0..3),
                any::<bool>(),
            )
        })
        .prop_map(|(n, worlds, edges, from, to, picks, delta, transfer)| {
            let mut frame = Frame::new();
            for (i, (energy, kappa, lambda, props)) in worlds.into_iter().enumerate() {
                let world = World::new(format!("w{i}"), energy, kappa, lambda)
                    .unwrap()
                    .with_props(props.into_iter().map(pool_formula));
                frame.add_world(world).unwrap();
            }
            for (a, b, de) in edges {
                if a != b && frame.edge(&format!("w{a}"), &format!("w{b}")).is_none() {
                    frame.add_edge(&format!("w{a}"), &format!("w{b}"), de).unwrap();
                }
            }
            let to = if to == from { (from + 1) % n } else { to };
            let from_id = format!("w{from}");
            let to_id = format!("w{to}");
            if transfer {
                let energy = frame.world(&from_id).unwrap().energy;
                frame.remove_edge(&from_id, &to_id);
                frame.add_edge(&from_id, &to_id, energy / 2.0).unwrap();
                frame.world_mut(&from_id).unwrap().lambda = 8;
            }
            let held = frame.world(&from_id).unwrap().props.clone();
            let mut gamma: Vec<Formula> = picks.iter().map(|ix| held[ix.index(held.len())].clone()).collect();
            gamma.sort();
            gamma.dedup();
            let delta = if transfer { gamma.clone() } else { delta.into_iter().map(pool_formula).collect() };
            Setup {
                frame,
                from: from_id,
                to: to_id,
                gamma,
                delta,
            }
        })
}

const NAMES: [&str; 6] = ["A", "B", "Phi", "Quantum", "Entangled", "o"];

pub fn atom() -> impl Strategy<Value = Formula> {
    (0..NAMES.len(), prop::collection::vec(prop::sample::select(vec!["a", "psi", "B"]), 0..3), any::<bool>(), any::<bool>())
        .prop_map(|(i, args, coherent, classical_name)| {
            if classical_name && !coherent {
                return Formula::classical_with_args("Classical", args);
            }
            if coherent {
                Formula::atom_with_args(NAMES[i], args)
            } else {
                Formula::classical_with_args(NAMES[i], args)
            }
        })
}

pub fn formula(depth: u32) -> impl Strategy<Value = Formula> {
    atom().prop_recursive(depth, 64, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::tensor(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::lolli(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::with(a, b)),
            inner.clone().prop_map(Formula::bang),
            (0.0f64..1e6, inner).prop_map(|(r, a)| Formula::diamond(r, a)),
        ]
    })
}

pub fn real() -> impl Strategy<Value = f64> {
    prop_oneof![(0u32..100).prop_map(f64::from), 0.0f64..1e3, 0.0f64..1e-3]
}

pub fn config() -> impl Strategy<Value = ScenarioConfig> {
    let worlds = prop::collection::vec(
        (real(), real(), 1u32..20, prop::collection::vec(formula(3), 0..3)),
        1..5,
    );
    (
        worlds,
        prop::collection::vec((any::<prop::sample::Index>(), any::<prop::sample::Index>(), real()), 0..6),
        (real(), real(), prop::collection::vec((prop::sample::select(NAMES.to_vec()), real()), 0..3)),
        prop::collection::vec((any::<prop::sample::Index>(), 0u32..6), 0..3),
        prop::collection::vec((any::<prop::sample::Index>(), any::<prop::sample::Index>(), prop::collection::vec(formula(2), 0..3), prop::collection::vec(formula(2), 0..3)), 0..3),
        prop::collection::vec((prop::collection::vec(formula(2), 1..3), formula(2)), 0..2),
        (
            prop::option::of(prop::sample::select(vec![
                ScenarioKind::Coherence,
                ScenarioKind::Reciprocity,
                ScenarioKind::Accessibility,
            ])),
            prop::option::of(1u32..500),
            prop::option::of(any::<u64>()),
            prop::option::of(real()),
            prop::option::of(real()),
            prop::option::of(1u32..100),
            prop::option::of(1u32..100),
        ),
        any::<bool>(),
    )
        .prop_map(|(worlds, edges, (alpha, default_cost, costs), observers, sequents, laws, scalars, extra_classical)| {
            let mut frame = Frame::new();
            let n = worlds.len();
            let id = |i: usize| format!("w{i}");
            for (i, (energy, kappa, lambda, props)) in worlds.into_iter().enumerate() {
                frame.add_world(World::new(id(i), energy, kappa, lambda).unwrap().with_props(props)).unwrap();
            }
            for (a, b, de) in edges {
                let (a, b) = (id(a.index(n)), id(b.index(n)));
                if frame.edge(&a, &b).is_none() {
                    frame.add_edge(&a, &b, de).unwrap();
                }
            }
            for (i, (premises, conclusion)) in laws.into_iter().enumerate() {
                frame.add_law(Law::new(format!("law{i}"), premises, conclusion));
            }
            let mut model = CostModel::new(default_cost, alpha).unwrap();
            for (name, c) in costs {
                model.set_cost(name, c).unwrap();
            }
            let observers = observers
                .into_iter()
                .enumerate()
                .map(|(i, (home, h))| Observer::new(format!("o{i}"), id(home.index(n)), h))
                .collect();
            let sequents: IndexMap<String, NamedSequent> = sequents
                .into_iter()
                .enumerate()
                .map(|(i, (a, b, gamma, delta))| {
                    (
                        format!("s{i}"),
                        NamedSequent {
                            source: id(a.index(n)),
                            target: id(b.index(n)),
                            sequent: Sequent::new(gamma, delta),
                        },
                    )
                })
                .collect();
            let (scenario_kind, trials, seed, kappa0, noise, width, population) = scalars;
            let mut classical = default_classical();
            if extra_classical {
                classical.push("Residual".into());
            }
            ScenarioConfig {
                frame,
                cost_model: model,
                observers,
                sequents,
                scenario_kind,
                trials,
                seed,
                kappa0,
                noise,
                width,
                population,
                classical,
            }
        })
}

