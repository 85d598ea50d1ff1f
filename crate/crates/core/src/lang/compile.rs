//! Static checking and compilation of a parsed model into an executable
//! successor function over bit-vector state codes.

use std::collections::HashMap;

use crate::arith::Scalar;
use crate::state::StateCode;

use super::ast::*;
use super::lexer::Pos;
use super::LangError;

/// Runtime value of an expression.
#[derive(Clone, Debug, PartialEq)]
pub enum Value<S> {
    Bool(bool),
    Int(i64),
    Num(S),
}

impl<S: Scalar> Value<S> {
    fn type_name(&self) -> &'static str {
        match self {
            Value::Bool(_) => "bool",
            Value::Int(_) => "int",
            Value::Num(_) => "number",
        }
    }

    fn as_num(&self) -> Option<S> {
        match self {
            Value::Int(v) => Some(int_to_scalar(*v)),
            Value::Num(s) => Some(s.clone()),
            Value::Bool(_) => None,
        }
    }
}

fn int_to_scalar<S: Scalar>(v: i64) -> S {
    if v >= 0 {
        S::from_u64(v as u64)
    } else {
        S::zero().sub(&S::from_u64(v.unsigned_abs()))
    }
}

/// Bit layout of one variable: a contiguous field storing the offset from
/// the lower bound, most significant bit first in declaration order.
#[derive(Clone, Debug)]
pub struct VarInfo {
    pub name: String,
    pub lo: i64,
    pub hi: i64,
    pub is_bool: bool,
    pub bits: u32,
    /// Right-shift that brings this field to the least significant bits.
    pub shift: u32,
}

/// Executable model: pure successor, reward and label functions over
/// state codes, plus the encoding metadata.
pub struct CompiledModel<S: Scalar> {
    pub kind: ModelKind,
    vars: Vec<VarInfo>,
    var_index: HashMap<String, usize>,
    consts: HashMap<String, Value<S>>,
    commands: Vec<Command>,
    rewards: HashMap<String, Vec<(Expr, Expr)>>,
    labels: HashMap<String, Expr>,
    width: u32,
    initial: StateCode,
}

/// Successor distribution of a state.
#[derive(Debug)]
pub struct Successors<S> {
    /// Target states with merged weights, in first-occurrence order.
    pub list: Vec<(StateCode, S)>,
    /// Set when the state had no enabled command and received the
    /// self-loop fallback.
    pub deadlock: bool,
}

/// Tolerance on DTMC probability sums for inexact backends.
const SUM_TOLERANCE: f64 = 1e-9;

impl<S: Scalar> CompiledModel<S> {
    pub fn bit_width(&self) -> u32 {
        self.width
    }

    pub fn initial_state(&self) -> StateCode {
        self.initial
    }

    pub fn variables(&self) -> &[VarInfo] {
        &self.vars
    }

    pub fn encode(&self, vals: &[i64]) -> StateCode {
        debug_assert_eq!(vals.len(), self.vars.len());
        let mut code = 0u64;
        for (v, info) in vals.iter().zip(&self.vars) {
            debug_assert!(*v >= info.lo && *v <= info.hi);
            code |= ((v - info.lo) as u64) << info.shift;
        }
        StateCode(code)
    }

    pub fn decode(&self, s: StateCode) -> Vec<i64> {
        self.vars
            .iter()
            .map(|info| {
                let mask = if info.bits == 0 {
                    0
                } else {
                    (u64::MAX >> (64 - info.bits)) << info.shift
                };
                info.lo + ((s.0 & mask) >> info.shift) as i64
            })
            .collect()
    }

    /// Human-readable valuation, for traces and diagnostics.
    pub fn describe(&self, s: StateCode) -> String {
        let vals = self.decode(s);
        self.vars
            .iter()
            .zip(vals)
            .map(|(info, v)| {
                if info.is_bool {
                    format!("{}={}", info.name, v != 0)
                } else {
                    format!("{}={v}", info.name)
                }
            })
            .collect::<Vec<_>>()
            .join(",")
    }

    fn eval(&self, e: &Expr, vals: &[i64]) -> Result<Value<S>, LangError> {
        match &e.kind {
            ExprKind::Int(v) => Ok(Value::Int(*v)),
            ExprKind::Bool(b) => Ok(Value::Bool(*b)),
            ExprKind::Number(text) => Ok(Value::Num(S::parse(text).map_err(|err| {
                LangError::Eval {
                    pos: e.pos,
                    msg: err.to_string(),
                }
            })?)),
            ExprKind::Ident(name) => {
                if let Some(&i) = self.var_index.get(name) {
                    let v = vals[i];
                    Ok(if self.vars[i].is_bool {
                        Value::Bool(v != 0)
                    } else {
                        Value::Int(v)
                    })
                } else if let Some(c) = self.consts.get(name) {
                    Ok(c.clone())
                } else {
                    Err(LangError::Undeclared {
                        pos: e.pos,
                        name: name.clone(),
                    })
                }
            }
            ExprKind::Neg(inner) => match self.eval(inner, vals)? {
                Value::Int(v) => Ok(Value::Int(-v)),
                Value::Num(s) => Ok(Value::Num(S::zero().sub(&s))),
                Value::Bool(_) => Err(self.type_err(e.pos, "cannot negate a bool")),
            },
            ExprKind::Not(inner) => match self.eval(inner, vals)? {
                Value::Bool(b) => Ok(Value::Bool(!b)),
                v => Err(self.type_err(e.pos, &format!("`!` applied to {}", v.type_name()))),
            },
            ExprKind::Bin(op, a, b) => {
                let va = self.eval(a, vals)?;
                let vb = self.eval(b, vals)?;
                self.eval_bin(*op, va, vb, e.pos)
            }
        }
    }

    fn type_err(&self, pos: Pos, msg: &str) -> LangError {
        LangError::Type {
            pos,
            msg: msg.to_string(),
        }
    }

    fn eval_bin(&self, op: BinOp, a: Value<S>, b: Value<S>, pos: Pos) -> Result<Value<S>, LangError> {
        use BinOp::*;
        match op {
            And | Or => match (a, b) {
                (Value::Bool(x), Value::Bool(y)) => {
                    Ok(Value::Bool(if op == And { x && y } else { x || y }))
                }
                (a, b) => Err(self.type_err(
                    pos,
                    &format!("boolean operator on {} and {}", a.type_name(), b.type_name()),
                )),
            },
            Eq | Neq => {
                let r = match (&a, &b) {
                    (Value::Bool(x), Value::Bool(y)) => x == y,
                    (Value::Int(x), Value::Int(y)) => x == y,
                    _ => match (a.as_num(), b.as_num()) {
                        (Some(x), Some(y)) => x == y,
                        _ => {
                            return Err(self.type_err(
                                pos,
                                &format!("cannot compare {} and {}", a.type_name(), b.type_name()),
                            ))
                        }
                    },
                };
                Ok(Value::Bool(if op == Eq { r } else { !r }))
            }
            Lt | Le | Gt | Ge => {
                let ord = match (&a, &b) {
                    (Value::Int(x), Value::Int(y)) => x.partial_cmp(y),
                    _ => match (a.as_num(), b.as_num()) {
                        (Some(x), Some(y)) => x.partial_cmp(&y),
                        _ => None,
                    },
                };
                let Some(ord) = ord else {
                    return Err(self.type_err(
                        pos,
                        &format!("cannot order {} and {}", a.type_name(), b.type_name()),
                    ));
                };
                Ok(Value::Bool(match op {
                    Lt => ord.is_lt(),
                    Le => ord.is_le(),
                    Gt => ord.is_gt(),
                    Ge => ord.is_ge(),
                    _ => unreachable!(),
                }))
            }
            Add | Sub | Mul => match (&a, &b) {
                (Value::Int(x), Value::Int(y)) => {
                    let r = match op {
                        Add => x.checked_add(*y),
                        Sub => x.checked_sub(*y),
                        Mul => x.checked_mul(*y),
                        _ => unreachable!(),
                    };
                    r.map(Value::Int).ok_or_else(|| LangError::Eval {
                        pos,
                        msg: "integer overflow".into(),
                    })
                }
                _ => {
                    let (Some(x), Some(y)) = (a.as_num(), b.as_num()) else {
                        return Err(self.type_err(
                            pos,
                            &format!("arithmetic on {} and {}", a.type_name(), b.type_name()),
                        ));
                    };
                    Ok(Value::Num(match op {
                        Add => x.add(&y),
                        Sub => x.sub(&y),
                        Mul => x.mul(&y),
                        _ => unreachable!(),
                    }))
                }
            },
            // Division always yields a number; exact in the rational backend.
            Div => {
                let (Some(x), Some(y)) = (a.as_num(), b.as_num()) else {
                    return Err(self.type_err(
                        pos,
                        &format!("`/` on {} and {}", a.type_name(), b.type_name()),
                    ));
                };
                x.div(&y).map(Value::Num).map_err(|err| LangError::Eval {
                    pos,
                    msg: err.to_string(),
                })
            }
            Min | Max => match (&a, &b) {
                (Value::Int(x), Value::Int(y)) => Ok(Value::Int(if op == Min {
                    *x.min(y)
                } else {
                    *x.max(y)
                })),
                _ => {
                    let (Some(x), Some(y)) = (a.as_num(), b.as_num()) else {
                        return Err(self.type_err(pos, "min/max on non-numeric operands"));
                    };
                    let take_x = if op == Min { x <= y } else { x >= y };
                    Ok(Value::Num(if take_x { x } else { y }))
                }
            },
        }
    }

    fn eval_bool(&self, e: &Expr, vals: &[i64]) -> Result<bool, LangError> {
        match self.eval(e, vals)? {
            Value::Bool(b) => Ok(b),
            v => Err(self.type_err(e.pos, &format!("expected bool, got {}", v.type_name()))),
        }
    }

    /// Evaluates a boolean state formula (goal or label body) at a state.
    pub fn eval_predicate(&self, e: &Expr, s: StateCode) -> Result<bool, LangError> {
        let vals = self.decode(s);
        self.eval_bool(e, &vals)
    }

    pub fn label(&self, name: &str) -> Option<&Expr> {
        self.labels.get(name)
    }

    pub fn has_reward_struct(&self, name: &str) -> bool {
        self.rewards.contains_key(name)
    }

    /// State reward under the named structure: the sum of all items whose
    /// guard holds. Rewards are evaluated on demand, never stored per state.
    pub fn reward(&self, name: &str, s: StateCode) -> Result<S, LangError> {
        let items = self.rewards.get(name).ok_or_else(|| LangError::UnknownReward {
            name: name.to_string(),
        })?;
        let vals = self.decode(s);
        let mut total = S::zero();
        for (guard, value) in items {
            if self.eval_bool(guard, &vals)? {
                let v = self.eval(value, &vals)?;
                let Some(v) = v.as_num() else {
                    return Err(self.type_err(value.pos, "reward value must be numeric"));
                };
                if v.is_negative() {
                    return Err(LangError::Eval {
                        pos: value.pos,
                        msg: format!("negative reward {} in state {}", v.render(), self.describe(s)),
                    });
                }
                total = total.add(&v);
            }
        }
        Ok(total)
    }

    /// Successor distribution of `s`: weights of duplicate targets are
    /// merged in first-occurrence order. For DTMCs the merged weights must
    /// sum to one (exactly under the rational backend, within 1e-9
    /// otherwise); for CTMCs the weights are positive rates. A deadlocked
    /// state becomes a weight-one self-loop with the `deadlock` flag set.
    pub fn successors(&self, s: StateCode) -> Result<Successors<S>, LangError> {
        let vals = self.decode(s);
        let mut list: Vec<(StateCode, S)> = Vec::new();
        let mut any = false;
        for cmd in &self.commands {
            if !self.eval_bool(&cmd.guard, &vals)? {
                continue;
            }
            any = true;
            for alt in &cmd.alternatives {
                let w = self.eval(&alt.weight, &vals)?;
                let Some(w) = w.as_num() else {
                    return Err(self.type_err(alt.weight.pos, "weight must be numeric"));
                };
                if w.is_negative() {
                    return Err(LangError::Eval {
                        pos: alt.weight.pos,
                        msg: format!(
                            "negative weight {} in state {}",
                            w.render(),
                            self.describe(s)
                        ),
                    });
                }
                if w.is_zero() {
                    continue;
                }
                let target = self.apply_updates(&alt.updates, &vals)?;
                match list.iter_mut().find(|(t, _)| *t == target) {
                    Some((_, total)) => *total = total.add(&w),
                    None => list.push((target, w)),
                }
            }
        }
        if !any {
            return Ok(Successors {
                list: vec![(s, S::one())],
                deadlock: true,
            });
        }
        if self.kind == ModelKind::Dtmc {
            let mut sum = S::zero();
            for (_, w) in &list {
                sum = sum.add(w);
            }
            let ok = if S::EXACT {
                sum.is_one()
            } else {
                (sum.to_f64() - 1.0).abs() <= SUM_TOLERANCE
            };
            if !ok {
                return Err(LangError::BadDistribution {
                    state: self.describe(s),
                    sum: sum.render(),
                });
            }
        }
        Ok(Successors {
            list,
            deadlock: false,
        })
    }

    fn apply_updates(&self, updates: &[Update], vals: &[i64]) -> Result<StateCode, LangError> {
        let mut next = vals.to_vec();
        for u in updates {
            let &i = self.var_index.get(&u.var).ok_or_else(|| LangError::Undeclared {
                pos: u.pos,
                name: u.var.clone(),
            })?;
            let info = &self.vars[i];
            let v = match self.eval(&u.value, vals)? {
                Value::Bool(b) => {
                    if !info.is_bool {
                        return Err(self.type_err(u.pos, "bool assigned to integer variable"));
                    }
                    b as i64
                }
                Value::Int(v) => {
                    if info.is_bool {
                        return Err(self.type_err(u.pos, "integer assigned to bool variable"));
                    }
                    v
                }
                Value::Num(_) => {
                    return Err(self.type_err(
                        u.pos,
                        "updates must assign integer or bool values; `/` yields a number",
                    ))
                }
            };
            if v < info.lo || v > info.hi {
                return Err(LangError::Eval {
                    pos: u.pos,
                    msg: format!(
                        "update drives {} to {v}, outside [{}..{}]",
                        info.name, info.lo, info.hi
                    ),
                });
            }
            next[i] = v;
        }
        Ok(self.encode(&next))
    }
}

// --- static checks and compilation -----------------------------------------

/// Validates the parts of a model that do not depend on constant values:
/// unique names, declared identifiers, operator typing, and — when all
/// weights are constant — probability normalization per command.
pub fn check_model(ast: &ModelAst) -> Result<(), LangError> {
    let mut names: HashMap<&str, &'static str> = HashMap::new();
    for c in &ast.constants {
        if names.insert(&c.name, "constant").is_some() {
            return Err(LangError::Duplicate {
                pos: c.pos,
                name: c.name.clone(),
            });
        }
    }
    for v in &ast.variables {
        if names.insert(&v.name, "variable").is_some() {
            return Err(LangError::Duplicate {
                pos: v.pos,
                name: v.name.clone(),
            });
        }
    }
    let ck = TypeChecker { ast, names };
    for c in &ast.constants {
        if let Some(e) = &c.value {
            let t = ck.check(e, true)?;
            let want = match c.ctype {
                ConstType::Int => Ty::Int,
                ConstType::Double => Ty::Num,
                ConstType::Bool => Ty::Bool,
            };
            ck.require(e.pos, t, want)?;
        }
    }
    for v in &ast.variables {
        if let VarType::IntRange(lo, hi) = &v.vtype {
            ck.require(lo.pos, ck.check(lo, true)?, Ty::Int)?;
            ck.require(hi.pos, ck.check(hi, true)?, Ty::Int)?;
        }
        if let Some(init) = &v.init {
            let want = match v.vtype {
                VarType::Bool => Ty::Bool,
                VarType::IntRange(..) => Ty::Int,
            };
            ck.require(init.pos, ck.check(init, true)?, want)?;
        }
    }
    for cmd in &ast.commands {
        ck.require(cmd.guard.pos, ck.check(&cmd.guard, false)?, Ty::Bool)?;
        for alt in &cmd.alternatives {
            let t = ck.check(&alt.weight, false)?;
            if t == Ty::Bool {
                return Err(LangError::Type {
                    pos: alt.weight.pos,
                    msg: "weight must be numeric".into(),
                });
            }
            for u in &alt.updates {
                let Some(var) = ast.variables.iter().find(|v| v.name == u.var) else {
                    return Err(LangError::Undeclared {
                        pos: u.pos,
                        name: u.var.clone(),
                    });
                };
                let t = ck.check(&u.value, false)?;
                match (&var.vtype, t) {
                    (VarType::Bool, Ty::Bool) => {}
                    (VarType::IntRange(..), Ty::Int) => {}
                    (VarType::Bool, _) => {
                        return Err(LangError::Type {
                            pos: u.pos,
                            msg: format!("update of bool variable {} needs a bool", u.var),
                        })
                    }
                    (VarType::IntRange(..), _) => {
                        return Err(LangError::Type {
                            pos: u.pos,
                            msg: format!("update of integer variable {} needs an int", u.var),
                        })
                    }
                }
            }
        }
        // Constant probabilities are normalized statically; state-dependent
        // weights are checked per state at first expansion.
        if ast.kind == ModelKind::Dtmc {
            if let Some(sum) = const_weight_sum(ast, cmd) {
                if (sum - 1.0).abs() > 1e-9 {
                    return Err(LangError::BadCommandSum {
                        pos: cmd.pos,
                        sum,
                    });
                }
            }
        }
    }
    let mut label_names: HashMap<&str, ()> = HashMap::new();
    for l in &ast.labels {
        if label_names.insert(&l.name, ()).is_some() {
            return Err(LangError::Duplicate {
                pos: l.pos,
                name: l.name.clone(),
            });
        }
        ck.require(l.expr.pos, ck.check(&l.expr, false)?, Ty::Bool)?;
    }
    let mut reward_names: HashMap<&str, ()> = HashMap::new();
    for r in &ast.rewards {
        if reward_names.insert(&r.name, ()).is_some() {
            return Err(LangError::Duplicate {
                pos: r.pos,
                name: if r.name.is_empty() {
                    "<default rewards>".into()
                } else {
                    r.name.clone()
                },
            });
        }
        for (guard, value) in &r.items {
            ck.require(guard.pos, ck.check(guard, false)?, Ty::Bool)?;
            let t = ck.check(value, false)?;
            if t == Ty::Bool {
                return Err(LangError::Type {
                    pos: value.pos,
                    msg: "reward value must be numeric".into(),
                });
            }
        }
    }
    Ok(())
}

/// Best-effort constant fold of a command's weight sum in f64, used for the
/// static normalization diagnostic. Returns None when any weight depends on
/// a variable or an unresolved constant.
fn const_weight_sum(ast: &ModelAst, cmd: &Command) -> Option<f64> {
    fn fold(ast: &ModelAst, e: &Expr) -> Option<f64> {
        Some(match &e.kind {
            ExprKind::Int(v) => *v as f64,
            ExprKind::Number(s) => s.parse().ok()?,
            ExprKind::Bool(_) => return None,
            ExprKind::Ident(name) => {
                let c = ast.constants.iter().find(|c| &c.name == name)?;
                fold(ast, c.value.as_ref()?)?
            }
            ExprKind::Neg(x) => -fold(ast, x)?,
            ExprKind::Not(_) => return None,
            ExprKind::Bin(op, a, b) => {
                let (a, b) = (fold(ast, a)?, fold(ast, b)?);
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a / b,
                    BinOp::Min => a.min(b),
                    BinOp::Max => a.max(b),
                    _ => return None,
                }
            }
        })
    }
    cmd.alternatives
        .iter()
        .map(|alt| fold(ast, &alt.weight))
        .sum()
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Ty {
    Bool,
    Int,
    Num,
}

struct TypeChecker<'a> {
    ast: &'a ModelAst,
    names: HashMap<&'a str, &'static str>,
}

impl<'a> TypeChecker<'a> {
    fn require(&self, pos: Pos, got: Ty, want: Ty) -> Result<(), LangError> {
        let ok = got == want || (want == Ty::Num && got == Ty::Int);
        if ok {
            Ok(())
        } else {
            Err(LangError::Type {
                pos,
                msg: format!("expected {want:?}, got {got:?}"),
            })
        }
    }

    /// Infers the type of `e`. With `const_only` set, variables are
    /// rejected (bounds, initial values and constant defaults must be
    /// constant expressions).
    fn check(&self, e: &Expr, const_only: bool) -> Result<Ty, LangError> {
        use BinOp::*;
        match &e.kind {
            ExprKind::Int(_) => Ok(Ty::Int),
            ExprKind::Number(_) => Ok(Ty::Num),
            ExprKind::Bool(_) => Ok(Ty::Bool),
            ExprKind::Ident(name) => {
                if let Some(c) = self.ast.constants.iter().find(|c| &c.name == name) {
                    return Ok(match c.ctype {
                        ConstType::Int => Ty::Int,
                        ConstType::Double => Ty::Num,
                        ConstType::Bool => Ty::Bool,
                    });
                }
                if let Some(v) = self.ast.variables.iter().find(|v| &v.name == name) {
                    if const_only {
                        return Err(LangError::Type {
                            pos: e.pos,
                            msg: format!("variable {name} not allowed in a constant expression"),
                        });
                    }
                    return Ok(match v.vtype {
                        VarType::Bool => Ty::Bool,
                        VarType::IntRange(..) => Ty::Int,
                    });
                }
                let _ = self.names;
                Err(LangError::Undeclared {
                    pos: e.pos,
                    name: name.clone(),
                })
            }
            ExprKind::Neg(x) => {
                let t = self.check(x, const_only)?;
                if t == Ty::Bool {
                    Err(LangError::Type {
                        pos: e.pos,
                        msg: "cannot negate a bool".into(),
                    })
                } else {
                    Ok(t)
                }
            }
            ExprKind::Not(x) => {
                self.require(e.pos, self.check(x, const_only)?, Ty::Bool)?;
                Ok(Ty::Bool)
            }
            ExprKind::Bin(op, a, b) => {
                let ta = self.check(a, const_only)?;
                let tb = self.check(b, const_only)?;
                match op {
                    And | Or => {
                        self.require(a.pos, ta, Ty::Bool)?;
                        self.require(b.pos, tb, Ty::Bool)?;
                        Ok(Ty::Bool)
                    }
                    Eq | Neq => {
                        let both_bool = ta == Ty::Bool && tb == Ty::Bool;
                        let both_num = ta != Ty::Bool && tb != Ty::Bool;
                        if both_bool || both_num {
                            Ok(Ty::Bool)
                        } else {
                            Err(LangError::Type {
                                pos: e.pos,
                                msg: format!("cannot compare {ta:?} and {tb:?}"),
                            })
                        }
                    }
                    Lt | Le | Gt | Ge => {
                        self.require(a.pos, ta, Ty::Num)?;
                        self.require(b.pos, tb, Ty::Num)?;
                        Ok(Ty::Bool)
                    }
                    Add | Sub | Mul | Min | Max => {
                        self.require(a.pos, ta, Ty::Num)?;
                        self.require(b.pos, tb, Ty::Num)?;
                        Ok(if ta == Ty::Int && tb == Ty::Int {
                            Ty::Int
                        } else {
                            Ty::Num
                        })
                    }
                    Div => {
                        self.require(a.pos, ta, Ty::Num)?;
                        self.require(b.pos, tb, Ty::Num)?;
                        Ok(Ty::Num)
                    }
                }
            }
        }
    }
}

/// Resolves constants (with CLI overrides), lays out the bit encoding and
/// produces the executable model.
pub fn compile<S: Scalar>(
    ast: &ModelAst,
    overrides: &HashMap<String, String>,
) -> Result<CompiledModel<S>, LangError> {
    check_model(ast)?;
    for name in overrides.keys() {
        if !ast.constants.iter().any(|c| &c.name == name) {
            return Err(LangError::UnknownConstant { name: name.clone() });
        }
    }

    // Constants resolve in declaration order; each default may use the
    // constants declared before it.
    let mut consts: HashMap<String, Value<S>> = HashMap::new();
    let shell = |consts: &HashMap<String, Value<S>>| CompiledModel::<S> {
        kind: ast.kind,
        vars: Vec::new(),
        var_index: HashMap::new(),
        consts: consts.clone(),
        commands: Vec::new(),
        rewards: HashMap::new(),
        labels: HashMap::new(),
        width: 0,
        initial: StateCode(0),
    };
    for c in &ast.constants {
        let value = if let Some(text) = overrides.get(&c.name) {
            parse_const_override(c, text)?
        } else if let Some(e) = &c.value {
            let v = shell(&consts).eval(e, &[])?;
            coerce_const(c, v)?
        } else {
            return Err(LangError::UnresolvedConstant {
                name: c.name.clone(),
            });
        };
        consts.insert(c.name.clone(), value);
    }

    // Bit layout: declaration order, most significant field first.
    let resolver = shell(&consts);
    let mut vars = Vec::new();
    for v in &ast.variables {
        let (lo, hi, is_bool) = match &v.vtype {
            VarType::Bool => (0, 1, true),
            VarType::IntRange(lo_e, hi_e) => {
                let lo = resolver.eval(lo_e, &[]).and_then(|v| match v {
                    Value::Int(i) => Ok(i),
                    _ => Err(resolver.type_err(lo_e.pos, "bound must be an integer")),
                })?;
                let hi = resolver.eval(hi_e, &[]).and_then(|v| match v {
                    Value::Int(i) => Ok(i),
                    _ => Err(resolver.type_err(hi_e.pos, "bound must be an integer")),
                })?;
                if lo > hi {
                    return Err(LangError::Eval {
                        pos: v.pos,
                        msg: format!("bounds of {} are empty: [{lo}..{hi}]", v.name),
                    });
                }
                (lo, hi, false)
            }
        };
        let size = (hi - lo) as u64 + 1;
        let bits = 64 - (size - 1).leading_zeros().min(64);
        let bits = if size == 1 { 0 } else { bits };
        vars.push(VarInfo {
            name: v.name.clone(),
            lo,
            hi,
            is_bool,
            bits,
            shift: 0,
        });
    }
    let width: u32 = vars.iter().map(|v| v.bits).sum();
    if width > 64 {
        return Err(LangError::TooWide { width });
    }
    let mut shift = width;
    for v in &mut vars {
        shift -= v.bits;
        v.shift = shift;
    }

    let mut model = CompiledModel {
        kind: ast.kind,
        var_index: vars
            .iter()
            .enumerate()
            .map(|(i, v)| (v.name.clone(), i))
            .collect(),
        vars,
        consts,
        commands: ast.commands.clone(),
        rewards: ast
            .rewards
            .iter()
            .map(|r| (r.name.clone(), r.items.clone()))
            .collect(),
        labels: ast
            .labels
            .iter()
            .map(|l| (l.name.clone(), l.expr.clone()))
            .collect(),
        width,
        initial: StateCode(0),
    };
    // A model with no reward structure still answers reward queries for the
    // default (empty) name with all-zero rewards.
    model.rewards.entry(String::new()).or_default();

    let mut init_vals = Vec::new();
    for (v, info) in ast.variables.iter().zip(&model.vars) {
        let value = match &v.init {
            None => info.lo,
            Some(e) => match model.eval(e, &[])? {
                Value::Int(i) => i,
                Value::Bool(b) => b as i64,
                Value::Num(_) => {
                    return Err(model.type_err(e.pos, "initial value must be int or bool"))
                }
            },
        };
        if value < info.lo || value > info.hi {
            return Err(LangError::Eval {
                pos: v.pos,
                msg: format!(
                    "initial value {value} of {} outside [{}..{}]",
                    info.name, info.lo, info.hi
                ),
            });
        }
        init_vals.push(value);
    }
    model.initial = model.encode(&init_vals);
    Ok(model)
}

fn parse_const_override<S: Scalar>(c: &ConstDecl, text: &str) -> Result<Value<S>, LangError> {
    let bad = || LangError::Eval {
        pos: c.pos,
        msg: format!("cannot parse override `{text}` for constant {}", c.name),
    };
    match c.ctype {
        ConstType::Int => text.trim().parse::<i64>().map(Value::Int).map_err(|_| bad()),
        ConstType::Bool => match text.trim() {
            "true" => Ok(Value::Bool(true)),
            "false" => Ok(Value::Bool(false)),
            _ => Err(bad()),
        },
        ConstType::Double => S::parse(text).map(Value::Num).map_err(|_| bad()),
    }
}

fn coerce_const<S: Scalar>(c: &ConstDecl, v: Value<S>) -> Result<Value<S>, LangError> {
    match (c.ctype, v) {
        (ConstType::Int, Value::Int(i)) => Ok(Value::Int(i)),
        (ConstType::Bool, Value::Bool(b)) => Ok(Value::Bool(b)),
        (ConstType::Double, Value::Int(i)) => Ok(Value::Num(int_to_scalar(i))),
        (ConstType::Double, Value::Num(s)) => Ok(Value::Num(s)),
        (_, v) => Err(LangError::Type {
            pos: c.pos,
            msg: format!("constant {} declared {:?} but valued {}", c.name, c.ctype, v.type_name()),
        }),
    }
}
