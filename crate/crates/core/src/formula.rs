//! Linear-logic formulas, coherence flags and the cost model.

use std::fmt;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

/// Prefix given to atom names when a coherent resource decoheres.
pub const DECOHERED_PREFIX: &str = "Decohered_";

/// A formula of the propositional MALL fragment with exponentials and the
/// resource-indexed diamond.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Formula {
    Atom(Atom),
    Tensor(Box<Formula>, Box<Formula>),
    Lolli(Box<Formula>, Box<Formula>),
    With(Box<Formula>, Box<Formula>),
    Bang(Box<Formula>),
    Diamond(Budget, Box<Formula>),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Atom {
    pub name: String,
    pub args: Vec<String>,
    pub coherent: bool,
}

/// Nonnegative transition budget carried by a diamond. Stored by bit pattern so
/// formulas stay hashable; construction rejects negatives and NaN.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Budget(u64);

impl Budget {
    pub fn new(value: f64) -> Option<Self> {
        if value.is_finite() && value >= 0.0 {
            // normalise -0.0
            Some(Budget((value + 0.0).to_bits()))
        } else {
            None
        }
    }

    pub fn value(self) -> f64 {
        f64::from_bits(self.0)
    }
}

impl Formula {
    pub fn atom(name: impl Into<String>) -> Formula {
        Formula::Atom(Atom {
            name: name.into(),
            args: Vec::new(),
            coherent: true,
        })
    }

    pub fn atom_with_args<I, S>(name: impl Into<String>, args: I) -> Formula
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Formula::Atom(Atom {
            name: name.into(),
            args: args.into_iter().map(Into::into).collect(),
            coherent: true,
        })
    }

    /// A non-coherent (classical) atom.
    pub fn classical(name: impl Into<String>) -> Formula {
        Formula::Atom(Atom {
            name: name.into(),
            args: Vec::new(),
            coherent: false,
        })
    }

    pub fn classical_with_args<I, S>(name: impl Into<String>, args: I) -> Formula
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Formula::Atom(Atom {
            name: name.into(),
            args: args.into_iter().map(Into::into).collect(),
            coherent: false,
        })
    }

    pub fn tensor(left: Formula, right: Formula) -> Formula {
        Formula::Tensor(Box::new(left), Box::new(right))
    }

    pub fn lolli(left: Formula, right: Formula) -> Formula {
        Formula::Lolli(Box::new(left), Box::new(right))
    }

    pub fn with(left: Formula, right: Formula) -> Formula {
        Formula::With(Box::new(left), Box::new(right))
    }

    pub fn bang(inner: Formula) -> Formula {
        Formula::Bang(Box::new(inner))
    }

    /// Panics if `budget` is negative or not finite.
    pub fn diamond(budget: f64, inner: Formula) -> Formula {
        let budget = Budget::new(budget).expect("diamond budget must be finite and >= 0");
        Formula::Diamond(budget, Box::new(inner))
    }

    pub fn is_atom(&self) -> bool {
        matches!(self, Formula::Atom(_))
    }

    pub fn is_bang(&self) -> bool {
        matches!(self, Formula::Bang(_))
    }

    /// Height of the syntax tree; atoms have height 0.
    pub fn height(&self) -> usize {
        match self {
            Formula::Atom(_) => 0,
            Formula::Tensor(a, b) | Formula::Lolli(a, b) | Formula::With(a, b) => {
                1 + a.height().max(b.height())
            }
            Formula::Bang(a) | Formula::Diamond(_, a) => 1 + a.height(),
        }
    }

    /// Visits every atomic leaf, left to right.
    pub fn atoms(&self) -> Vec<&Atom> {
        let mut out = Vec::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms<'a>(&'a self, out: &mut Vec<&'a Atom>) {
        match self {
            Formula::Atom(a) => out.push(a),
            Formula::Tensor(a, b) | Formula::Lolli(a, b) | Formula::With(a, b) => {
                a.collect_atoms(out);
                b.collect_atoms(out);
            }
            Formula::Bang(a) | Formula::Diamond(_, a) => a.collect_atoms(out),
        }
    }

    /// Rewrites every coherent leaf to its decohered counterpart.
    pub fn decohere(&self) -> Formula {
        self.map_atoms(&|atom| {
            if atom.coherent {
                Atom {
                    name: format!("{DECOHERED_PREFIX}{}", atom.name),
                    args: atom.args.clone(),
                    coherent: false,
                }
            } else {
                atom.clone()
            }
        })
    }

    fn map_atoms(&self, f: &dyn Fn(&Atom) -> Atom) -> Formula {
        match self {
            Formula::Atom(a) => Formula::Atom(f(a)),
            Formula::Tensor(a, b) => Formula::tensor(a.map_atoms(f), b.map_atoms(f)),
            Formula::Lolli(a, b) => Formula::lolli(a.map_atoms(f), b.map_atoms(f)),
            Formula::With(a, b) => Formula::with(a.map_atoms(f), b.map_atoms(f)),
            Formula::Bang(a) => Formula::bang(a.map_atoms(f)),
            Formula::Diamond(r, a) => Formula::Diamond(*r, Box::new(a.map_atoms(f))),
        }
    }
}

/// δ(φ): 1 when every atomic leaf is coherent, else 0.
pub fn coherence(phi: &Formula) -> u8 {
    match phi {
        Formula::Atom(a) => a.coherent as u8,
        Formula::Tensor(a, b) | Formula::Lolli(a, b) | Formula::With(a, b) => {
            coherence(a) & coherence(b)
        }
        Formula::Bang(a) | Formula::Diamond(_, a) => coherence(a),
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum CostModelError {
    #[error("cost for atom `{0}` must be finite and >= 0")]
    NegativeCost(String),
    #[error("default cost must be finite and >= 0")]
    NegativeDefault,
    #[error("alpha must be finite and >= 0")]
    InvalidAlpha,
}

/// Per-atom costs plus the curvature coupling constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostModel {
    atom_costs: IndexMap<String, f64>,
    default_cost: f64,
    alpha: f64,
}

impl CostModel {
    pub fn new(default_cost: f64, alpha: f64) -> Result<Self, CostModelError> {
        if !(default_cost.is_finite() && default_cost >= 0.0) {
            return Err(CostModelError::NegativeDefault);
        }
        if !(alpha.is_finite() && alpha >= 0.0) {
            return Err(CostModelError::InvalidAlpha);
        }
        Ok(CostModel {
            atom_costs: IndexMap::new(),
            default_cost,
            alpha,
        })
    }

    /// Every formula costs nothing. Used when only the logic matters.
    pub fn free() -> Self {
        CostModel {
            atom_costs: IndexMap::new(),
            default_cost: 0.0,
            alpha: 1.0,
        }
    }

    pub fn with_cost(mut self, atom: impl Into<String>, cost: f64) -> Result<Self, CostModelError> {
        self.set_cost(atom, cost)?;
        Ok(self)
    }

    pub fn set_cost(&mut self, atom: impl Into<String>, cost: f64) -> Result<(), CostModelError> {
        let atom = atom.into();
        if !(cost.is_finite() && cost >= 0.0) {
            return Err(CostModelError::NegativeCost(atom));
        }
        self.atom_costs.insert(atom, cost);
        Ok(())
    }

    pub fn set_alpha(&mut self, alpha: f64) -> Result<(), CostModelError> {
        if !(alpha.is_finite() && alpha >= 0.0) {
            return Err(CostModelError::InvalidAlpha);
        }
        self.alpha = alpha;
        Ok(())
    }

    pub fn set_default_cost(&mut self, cost: f64) -> Result<(), CostModelError> {
        if !(cost.is_finite() && cost >= 0.0) {
            return Err(CostModelError::NegativeDefault);
        }
        self.default_cost = cost;
        Ok(())
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn default_cost(&self) -> f64 {
        self.default_cost
    }

    pub fn atom_costs(&self) -> &IndexMap<String, f64> {
        &self.atom_costs
    }

    pub fn atom_cost(&self, name: &str) -> f64 {
        self.atom_costs
            .get(name)
            .copied()
            .unwrap_or(self.default_cost)
    }
}

impl Default for CostModel {
    fn default() -> Self {
        CostModel {
            atom_costs: IndexMap::new(),
            default_cost: 1.0,
            alpha: 1.0,
        }
    }
}

/// Flat-world cost: atoms are looked up, multiplicatives add, `&` takes its
/// worst branch and the unary modalities are transparent.
pub fn base_cost(phi: &Formula, model: &CostModel) -> f64 {
    match phi {
        Formula::Atom(a) => model.atom_cost(&a.name),
        Formula::Tensor(a, b) | Formula::Lolli(a, b) => base_cost(a, model) + base_cost(b, model),
        Formula::With(a, b) => base_cost(a, model).max(base_cost(b, model)),
        Formula::Bang(a) | Formula::Diamond(_, a) => base_cost(a, model),
    }
}

/// c_κ(φ) = c(φ)(1 + ακ).
pub fn curvature_cost(phi: &Formula, model: &CostModel, kappa: f64) -> f64 {
    let base = base_cost(phi, model);
    if kappa == 0.0 {
        return base;
    }
    base * (1.0 + model.alpha * kappa)
}

// Precedence levels used by the printer; higher binds tighter.
const PREC_LOLLI: u8 = 1;
const PREC_WITH: u8 = 2;
const PREC_TENSOR: u8 = 3;
const PREC_PREFIX: u8 = 4;
const PREC_ATOM: u8 = 5;

fn precedence(phi: &Formula) -> u8 {
    match phi {
        Formula::Atom(_) => PREC_ATOM,
        Formula::Tensor(..) => PREC_TENSOR,
        Formula::With(..) => PREC_WITH,
        Formula::Lolli(..) => PREC_LOLLI,
        Formula::Bang(_) | Formula::Diamond(..) => PREC_PREFIX,
    }
}

/// Atom names read as classical unless marked otherwise.
pub const DEFAULT_CLASSICAL: [&str; 2] = ["Classical", "Decohered"];

/// Renders a formula with minimal parentheses, prefixing `~` to every
/// non-coherent atom whose name is not in `classical`.
pub struct Marked<'a> {
    formula: &'a Formula,
    classical: &'a [String],
}

impl<'a> Marked<'a> {
    pub fn new(formula: &'a Formula, classical: &'a [String]) -> Self {
        Marked { formula, classical }
    }

    fn child(&self, f: &mut fmt::Formatter<'_>, child: &Formula, parens: bool) -> fmt::Result {
        let inner = Marked::new(child, self.classical);
        if parens {
            write!(f, "({inner})")
        } else {
            write!(f, "{inner}")
        }
    }
}

impl fmt::Display for Marked<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let phi = self.formula;
        match phi {
            Formula::Atom(a) => {
                if !a.coherent && !self.classical.contains(&a.name) {
                    f.write_str("~")?;
                }
                write!(f, "{a}")
            }
            Formula::Tensor(a, b) | Formula::With(a, b) => {
                let prec = precedence(phi);
                let op = if matches!(phi, Formula::Tensor(..)) { "*" } else { "&" };
                self.child(f, a, precedence(a) < prec)?;
                write!(f, " {op} ")?;
                self.child(f, b, precedence(b) <= prec)
            }
            Formula::Lolli(a, b) => {
                self.child(f, a, precedence(a) <= PREC_LOLLI)?;
                f.write_str(" -o ")?;
                self.child(f, b, precedence(b) < PREC_LOLLI)
            }
            Formula::Bang(a) => {
                f.write_str("!")?;
                self.child(f, a, precedence(a) < PREC_PREFIX)
            }
            Formula::Diamond(r, a) => {
                write!(f, "<{}>", r.value())?;
                self.child(f, a, precedence(a) < PREC_PREFIX)
            }
        }
    }
}

pub fn default_classical() -> Vec<String> {
    DEFAULT_CLASSICAL.iter().map(|s| s.to_string()).collect()
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)?;
        if !self.args.is_empty() {
            write!(f, "({})", self.args.join(","))?;
        }
        Ok(())
    }
}

/// ASCII rendering against the default classical-atom set.
impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        thread_local! {
            static DEFAULT: Vec<String> = default_classical();
        }
        DEFAULT.with(|set| write!(f, "{}", Marked::new(self, set)))
    }
}
