//! Test oracles written independently of the library, plus shared
//! generators in [`strategies`].

#![allow(dead_code)]

pub mod strategies;

use std::collections::HashMap;

use eclc::formula::Formula;

/// Standalone formula representation for the enumerator.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum T {
    Atom(String),
    Dia(String),
    Tensor(Box<T>, Box<T>),
    Lolli(Box<T>, Box<T>),
    With(Box<T>, Box<T>),
    Bang(Box<T>),
}

pub fn convert(f: &Formula) -> T {
    match f {
        Formula::Atom(a) => T::Atom(format!("{a:?}")),
        Formula::Diamond(..) => T::Dia(format!("{f:?}")),
        Formula::Tensor(a, b) => T::Tensor(Box::new(convert(a)), Box::new(convert(b))),
        Formula::Lolli(a, b) => T::Lolli(Box::new(convert(a)), Box::new(convert(b))),
        Formula::With(a, b) => T::With(Box::new(convert(a)), Box::new(convert(b))),
        Formula::Bang(a) => T::Bang(Box::new(convert(a))),
    }
}

/// Decides "some derivation of height at most `d` exists" by trying every
/// rule instance, with sub-multisets enumerated as index bitmasks.
#[derive(Default)]
pub struct Enumerator {
    seen: HashMap<(Vec<T>, Option<T>, u32), bool>,
}

fn sorted(mut v: Vec<T>) -> Vec<T> {
    v.sort();
    v
}

fn remove_at(ctx: &[T], i: usize) -> Vec<T> {
    ctx.iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .map(|(_, t)| t.clone())
        .collect()
}

fn partition(ctx: &[T], mask: u32) -> (Vec<T>, Vec<T>) {
    let mut inside = Vec::new();
    let mut outside = Vec::new();
    for (i, t) in ctx.iter().enumerate() {
        if mask & (1 << i) != 0 {
            inside.push(t.clone());
        } else {
            outside.push(t.clone());
        }
    }
    (inside, outside)
}

impl Enumerator {
    pub fn derivable(&mut self, gamma: &[Formula], delta: &[Formula], d: u32) -> bool {
        let ctx: Vec<T> = gamma.iter().map(convert).collect();
        let goal = delta
            .iter()
            .rev()
            .map(convert)
            .reduce(|acc, t| T::Tensor(Box::new(t), Box::new(acc)));
        self.check(sorted(ctx), goal, d)
    }

    fn check(&mut self, ctx: Vec<T>, goal: Option<T>, d: u32) -> bool {
        if d == 0 {
            return false;
        }
        let key = (ctx, goal, d);
        if let Some(&v) = self.seen.get(&key) {
            return v;
        }
        let (ctx, goal, _) = key.clone();
        let v = self.rules(&ctx, goal.as_ref(), d - 1);
        self.seen.insert(key, v);
        v
    }

    fn sub(&mut self, ctx: Vec<T>, goal: Option<&T>, d: u32) -> bool {
        self.check(sorted(ctx), goal.cloned(), d)
    }

    fn rules(&mut self, ctx: &[T], goal: Option<&T>, d: u32) -> bool {
        match goal {
            None if ctx.is_empty() => return true,
            Some(g @ (T::Atom(_) | T::Dia(_))) if ctx.len() == 1 && &ctx[0] == g => return true,
            _ => {}
        }
        let n = ctx.len();
        match goal {
            Some(T::Tensor(a, b)) => {
                for mask in 0..(1u32 << n) {
                    let (l, r) = partition(ctx, mask);
                    if self.sub(l, Some(a), d) && self.sub(r, Some(b), d) {
                        return true;
                    }
                }
            }
            Some(T::Lolli(a, b)) => {
                let mut next = ctx.to_vec();
                next.push((**a).clone());
                if self.sub(next, Some(b), d) {
                    return true;
                }
            }
            Some(T::With(a, b)) => {
                if self.sub(ctx.to_vec(), Some(a), d) && self.sub(ctx.to_vec(), Some(b), d) {
                    return true;
                }
            }
            Some(T::Bang(a)) if ctx.iter().all(|t| matches!(t, T::Bang(_))) && self.sub(ctx.to_vec(), Some(a), d) => {
                return true;
            }
            _ => {}
        }
        for i in 0..n {
            let rest = remove_at(ctx, i);
            let found = match &ctx[i] {
                T::Tensor(a, b) => {
                    let mut next = rest.clone();
                    next.push((**a).clone());
                    next.push((**b).clone());
                    self.sub(next, goal, d)
                }
                T::Lolli(a, b) => (0..(1u32 << rest.len())).any(|mask| {
                    let (l, mut r) = partition(&rest, mask);
                    r.push((**b).clone());
                    self.sub(l, Some(a), d) && self.sub(r, goal, d)
                }),
                T::With(a, b) => {
                    let mut left = rest.clone();
                    left.push((**a).clone());
                    let mut right = rest.clone();
                    right.push((**b).clone());
                    self.sub(left, goal, d) || self.sub(right, goal, d)
                }
                T::Bang(a) => {
                    let mut derelict = rest.clone();
                    derelict.push((**a).clone());
                    let mut doubled = ctx.to_vec();
                    doubled.push(ctx[i].clone());
                    self.sub(derelict, goal, d) || self.sub(doubled, goal, d) || self.sub(rest.clone(), goal, d)
                }
                T::Atom(_) | T::Dia(_) => false,
            };
            if found {
                return true;
            }
        }
        false
    }
}

/// All formulas over `atoms` with nesting depth at most `depth`.
pub fn formulas(atoms: &[&str], depth: u32) -> Vec<Formula> {
    let mut all: Vec<Formula> = atoms.iter().map(|a| Formula::atom(*a)).collect();
    for _ in 0..depth {
        let prev = all.clone();
        let mut next = prev.clone();
        for a in &prev {
            next.push(Formula::bang(a.clone()));
            for b in &prev {
                next.push(Formula::tensor(a.clone(), b.clone()));
                next.push(Formula::lolli(a.clone(), b.clone()));
                next.push(Formula::with(a.clone(), b.clone()));
            }
        }
        next.sort();
        next.dedup();
        all = next;
    }
    all
}

/// Multisets of size at most `k` drawn from `pool`, as sorted vectors.
pub fn multisets(pool: &[Formula], k: usize) -> Vec<Vec<Formula>> {
    fn go(pool: &[Formula], start: usize, k: usize, cur: &mut Vec<Formula>, out: &mut Vec<Vec<Formula>>) {
        out.push(cur.clone());
        if cur.len() == k {
            return;
        }
        for i in start..pool.len() {
            cur.push(pool[i].clone());
            go(pool, i, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(pool, 0, k, &mut Vec::new(), &mut out);
    out
}

/// Deterministic stream for sampling without pulling in the library's RNG.
pub struct Lcg(pub u64);

impl Lcg {
    pub fn next(&mut self) -> u64 {
        self.0 = self.0.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        self.0 >> 33
    }

    pub fn below(&mut self, n: usize) -> usize {
        (self.next() % n as u64) as usize
    }
}

/// Sequents checked against the enumerator: every Γ of size ≤ 2 over the
/// depth-1 formulas against every depth-1 goal (and the empty goal), plus
/// `sampled` sequents with Γ of size ≤ 3 over depth-2 formulas.
pub fn oracle_corpus(sampled: usize) -> Vec<(Vec<Formula>, Vec<Formula>)> {
    let atoms = ["A", "B", "C"];
    let shallow = formulas(&atoms, 1);
    let deep = formulas(&atoms, 2);
    let mut cases = Vec::new();
    for gamma in multisets(&shallow, 2) {
        cases.push((gamma.clone(), Vec::new()));
        for g in &shallow {
            cases.push((gamma.clone(), vec![g.clone()]));
        }
    }
    let mut rng = Lcg(0x5EED);
    for _ in 0..sampled {
        let size = rng.below(4);
        let gamma: Vec<Formula> = (0..size).map(|_| deep[rng.below(deep.len())].clone()).collect();
        let goals = rng.below(3);
        let delta: Vec<Formula> = (0..goals).map(|_| deep[rng.below(deep.len())].clone()).collect();
        cases.push((gamma, delta));
    }
    cases
}

/// ln-free Fisher p by exact integer enumeration; tables whose weight does
/// not exceed the observed one are summed.
pub fn fisher_reference(a: u64, b: u64, c: u64, d: u64) -> f64 {
    fn choose(n: u64, k: u64) -> u128 {
        if k > n {
            return 0;
        }
        let k = k.min(n - k);
        let mut r: u128 = 1;
        for i in 0..k {
            r = r * (n - i) as u128 / (i + 1) as u128;
        }
        r
    }
    let r1 = a + b;
    let r2 = c + d;
    let c1 = a + c;
    let n = r1 + r2;
    let weight = |x: u64| choose(r1, x) * choose(r2, c1 - x);
    let observed = weight(a);
    let lo = c1.saturating_sub(r2);
    let hi = r1.min(c1);
    let total: u128 = (lo..=hi).map(weight).filter(|&w| w <= observed).sum();
    total as f64 / choose(n, c1) as f64
}
