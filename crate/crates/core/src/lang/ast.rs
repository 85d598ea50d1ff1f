//! Syntax trees for models and properties, with a canonical pretty-printer.

use std::fmt;

use super::lexer::Pos;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelKind {
    Dtmc,
    Ctmc,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelKind::Dtmc => write!(f, "dtmc"),
            ModelKind::Ctmc => write!(f, "ctmc"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConstType {
    Int,
    Double,
    Bool,
}

#[derive(Clone, Debug)]
pub struct ConstDecl {
    pub name: String,
    pub ctype: ConstType,
    pub value: Option<Expr>,
    pub pos: Pos,
}

#[derive(Clone, Debug)]
pub enum VarType {
    Bool,
    /// Bounded integer `[lo..hi]`; bounds are constant expressions.
    IntRange(Expr, Expr),
}

#[derive(Clone, Debug)]
pub struct VarDecl {
    pub name: String,
    pub vtype: VarType,
    pub init: Option<Expr>,
    pub pos: Pos,
}

#[derive(Clone, Debug)]
pub struct Update {
    pub var: String,
    pub value: Expr,
    pub pos: Pos,
}

#[derive(Clone, Debug)]
pub struct Alternative {
    pub weight: Expr,
    pub updates: Vec<Update>,
}

#[derive(Clone, Debug)]
pub struct Command {
    pub guard: Expr,
    pub alternatives: Vec<Alternative>,
    pub pos: Pos,
}

#[derive(Clone, Debug)]
pub struct RewardStruct {
    /// Empty string for the unnamed (default) structure.
    pub name: String,
    pub items: Vec<(Expr, Expr)>,
    pub pos: Pos,
}

#[derive(Clone, Debug)]
pub struct LabelDecl {
    pub name: String,
    pub expr: Expr,
    pub pos: Pos,
}

#[derive(Clone, Debug)]
pub struct ModelAst {
    pub kind: ModelKind,
    pub constants: Vec<ConstDecl>,
    pub module_name: String,
    pub variables: Vec<VarDecl>,
    pub commands: Vec<Command>,
    pub rewards: Vec<RewardStruct>,
    pub labels: Vec<LabelDecl>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Eq,
    Neq,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
    Min,
    Max,
}

#[derive(Clone, Debug)]
pub enum ExprKind {
    Int(i64),
    /// Decimal or scientific literal kept as text.
    Number(String),
    Bool(bool),
    Ident(String),
    Neg(Box<Expr>),
    Not(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
}

#[derive(Clone, Debug)]
pub struct Expr {
    pub kind: ExprKind,
    pub pos: Pos,
}

impl Expr {
    pub fn new(kind: ExprKind, pos: Pos) -> Self {
        Expr { kind, pos }
    }
}

/// Property to check.
#[derive(Clone, Debug)]
pub enum PropertySpec {
    /// `P=? [ F goal ]`
    ReachProb { goal: GoalFormula },
    /// `R{"name"}=? [ F goal ]`; empty name selects the default structure.
    ExpReward { reward: String, goal: GoalFormula },
    /// `R{"name"}=? [ S ]`
    LongRunAvg { reward: String },
}

/// Goal-state formula: a declared label or an inline state expression
/// (which behaves as a synthesized label).
#[derive(Clone, Debug)]
pub enum GoalFormula {
    Label(String),
    Expr(Expr),
}

// --- pretty printing -------------------------------------------------------

fn prec(op: BinOp) -> u8 {
    match op {
        BinOp::Or => 1,
        BinOp::And => 2,
        BinOp::Eq | BinOp::Neq | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 3,
        BinOp::Add | BinOp::Sub => 4,
        BinOp::Mul | BinOp::Div => 5,
        BinOp::Min | BinOp::Max => 6,
    }
}

fn fmt_expr(e: &Expr, parent: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match &e.kind {
        ExprKind::Int(v) => write!(f, "{v}"),
        ExprKind::Number(s) => write!(f, "{s}"),
        ExprKind::Bool(b) => write!(f, "{b}"),
        ExprKind::Ident(n) => write!(f, "{n}"),
        ExprKind::Neg(x) => {
            write!(f, "-")?;
            fmt_expr(x, 7, f)
        }
        ExprKind::Not(x) => {
            write!(f, "!")?;
            fmt_expr(x, 7, f)
        }
        ExprKind::Bin(op @ (BinOp::Min | BinOp::Max), a, b) => {
            write!(f, "{}(", if *op == BinOp::Min { "min" } else { "max" })?;
            fmt_expr(a, 0, f)?;
            write!(f, ", ")?;
            fmt_expr(b, 0, f)?;
            write!(f, ")")
        }
        ExprKind::Bin(op, a, b) => {
            let p = prec(*op);
            if p < parent {
                write!(f, "(")?;
            }
            fmt_expr(a, p, f)?;
            let sym = match op {
                BinOp::Add => "+",
                BinOp::Sub => "-",
                BinOp::Mul => "*",
                BinOp::Div => "/",
                BinOp::Eq => "=",
                BinOp::Neq => "!=",
                BinOp::Lt => "<",
                BinOp::Le => "<=",
                BinOp::Gt => ">",
                BinOp::Ge => ">=",
                BinOp::And => "&",
                BinOp::Or => "|",
                BinOp::Min | BinOp::Max => unreachable!(),
            };
            write!(f, " {sym} ")?;
            // Right operand at p+1 keeps left associativity unambiguous.
            fmt_expr(b, p + 1, f)?;
            if p < parent {
                write!(f, ")")?;
            }
            Ok(())
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_expr(self, 0, f)
    }
}

impl fmt::Display for ModelAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", self.kind)?;
        writeln!(f)?;
        for c in &self.constants {
            let ty = match c.ctype {
                ConstType::Int => "int",
                ConstType::Double => "double",
                ConstType::Bool => "bool",
            };
            match &c.value {
                Some(v) => writeln!(f, "const {ty} {} = {v};", c.name)?,
                None => writeln!(f, "const {ty} {};", c.name)?,
            }
        }
        writeln!(f)?;
        writeln!(f, "module {}", self.module_name)?;
        for v in &self.variables {
            match &v.vtype {
                VarType::Bool => write!(f, "  {} : bool", v.name)?,
                VarType::IntRange(lo, hi) => write!(f, "  {} : [{lo}..{hi}]", v.name)?,
            }
            match &v.init {
                Some(e) => writeln!(f, " init {e};")?,
                None => writeln!(f, ";")?,
            }
        }
        for c in &self.commands {
            write!(f, "  [] {} -> ", c.guard)?;
            for (i, alt) in c.alternatives.iter().enumerate() {
                if i > 0 {
                    write!(f, " + ")?;
                }
                write!(f, "{} : (", alt.weight)?;
                for (j, u) in alt.updates.iter().enumerate() {
                    if j > 0 {
                        write!(f, " & ")?;
                    }
                    write!(f, "{}'={}", u.var, u.value)?;
                }
                write!(f, ")")?;
            }
            writeln!(f, ";")?;
        }
        writeln!(f, "endmodule")?;
        for r in &self.rewards {
            writeln!(f)?;
            if r.name.is_empty() {
                writeln!(f, "rewards")?;
            } else {
                writeln!(f, "rewards \"{}\"", r.name)?;
            }
            for (guard, value) in &r.items {
                writeln!(f, "  {guard} : {value};")?;
            }
            writeln!(f, "endrewards")?;
        }
        if !self.labels.is_empty() {
            writeln!(f)?;
        }
        for l in &self.labels {
            writeln!(f, "label \"{}\" = {};", l.name, l.expr)?;
        }
        Ok(())
    }
}

impl fmt::Display for PropertySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PropertySpec::ReachProb { goal } => write!(f, "P=? [ F {goal} ]"),
            PropertySpec::ExpReward { reward, goal } if reward.is_empty() => {
                write!(f, "R=? [ F {goal} ]")
            }
            PropertySpec::ExpReward { reward, goal } => {
                write!(f, "R{{\"{reward}\"}}=? [ F {goal} ]")
            }
            PropertySpec::LongRunAvg { reward } if reward.is_empty() => write!(f, "R=? [ S ]"),
            PropertySpec::LongRunAvg { reward } => write!(f, "R{{\"{reward}\"}}=? [ S ]"),
        }
    }
}

impl fmt::Display for GoalFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GoalFormula::Label(n) => write!(f, "\"{n}\""),
            GoalFormula::Expr(e) => write!(f, "{e}"),
        }
    }
}
