//! Recursive-descent parser for models and properties.

use super::ast::*;
use super::lexer::{Lexer, Tok};
use super::LangError;

const KEYWORDS: &[&str] = &[
    "dtmc",
    "ctmc",
    "const",
    "int",
    "double",
    "bool",
    "module",
    "endmodule",
    "rewards",
    "endrewards",
    "label",
    "init",
    "true",
    "false",
    "min",
    "max",
];

pub fn parse_model_text(text: &str) -> Result<ModelAst, LangError> {
    let mut lx = Lexer::tokenize(text)?;
    let kind = if lx.eat_kw("dtmc") {
        ModelKind::Dtmc
    } else if lx.eat_kw("ctmc") {
        ModelKind::Ctmc
    } else {
        return Err(LangError::Syntax {
            pos: lx.pos(),
            msg: "model must start with `dtmc` or `ctmc`".into(),
        });
    };
    let mut constants = Vec::new();
    let mut module = None;
    let mut rewards = Vec::new();
    let mut labels = Vec::new();
    loop {
        let pos = lx.pos();
        match lx.peek() {
            Tok::Eof => break,
            Tok::Ident(kw) if kw == "const" => {
                lx.next();
                let ctype = if lx.eat_kw("int") {
                    ConstType::Int
                } else if lx.eat_kw("double") {
                    ConstType::Double
                } else if lx.eat_kw("bool") {
                    ConstType::Bool
                } else {
                    return Err(LangError::Syntax {
                        pos: lx.pos(),
                        msg: "constant declarations need a type: int, double or bool".into(),
                    });
                };
                let name = ident(&mut lx, "constant name")?;
                let value = if lx.eat(&Tok::Eq) {
                    Some(parse_expr(&mut lx)?)
                } else {
                    None
                };
                lx.expect(&Tok::Semi, "`;`")?;
                constants.push(ConstDecl {
                    name,
                    ctype,
                    value,
                    pos,
                });
            }
            Tok::Ident(kw) if kw == "module" => {
                if module.is_some() {
                    return Err(LangError::Syntax {
                        pos,
                        msg: "only a single module is supported".into(),
                    });
                }
                module = Some(parse_module(&mut lx)?);
            }
            Tok::Ident(kw) if kw == "rewards" => {
                lx.next();
                let name = match lx.peek() {
                    Tok::Str(s) => {
                        let s = s.clone();
                        lx.next();
                        s
                    }
                    _ => String::new(),
                };
                let mut items = Vec::new();
                while !lx.eat_kw("endrewards") {
                    let guard = parse_expr(&mut lx)?;
                    lx.expect(&Tok::Colon, "`:`")?;
                    let value = parse_expr(&mut lx)?;
                    lx.expect(&Tok::Semi, "`;`")?;
                    items.push((guard, value));
                }
                rewards.push(RewardStruct { name, items, pos });
            }
            Tok::Ident(kw) if kw == "label" => {
                lx.next();
                let name = match lx.next() {
                    Tok::Str(s) => s,
                    other => {
                        return Err(LangError::Syntax {
                            pos: lx.pos(),
                            msg: format!("expected quoted label name, found {other:?}"),
                        })
                    }
                };
                lx.expect(&Tok::Eq, "`=`")?;
                let expr = parse_expr(&mut lx)?;
                lx.expect(&Tok::Semi, "`;`")?;
                labels.push(LabelDecl { name, expr, pos });
            }
            other => {
                return Err(LangError::Syntax {
                    pos,
                    msg: format!("expected a declaration, found {other:?}"),
                })
            }
        }
    }
    let (module_name, variables, commands) = module.ok_or(LangError::NoModule)?;
    Ok(ModelAst {
        kind,
        constants,
        module_name,
        variables,
        commands,
        rewards,
        labels,
    })
}

fn ident(lx: &mut Lexer, what: &str) -> Result<String, LangError> {
    let pos = lx.pos();
    let name = lx.expect_ident(what)?;
    if KEYWORDS.contains(&name.as_str()) {
        return Err(LangError::Syntax {
            pos,
            msg: format!("`{name}` is a keyword and cannot be used as {what}"),
        });
    }
    Ok(name)
}

#[allow(clippy::type_complexity)]
fn parse_module(lx: &mut Lexer) -> Result<(String, Vec<VarDecl>, Vec<Command>), LangError> {
    lx.expect_kw("module")?;
    let name = ident(lx, "module name")?;
    let mut variables = Vec::new();
    let mut commands = Vec::new();
    loop {
        let pos = lx.pos();
        match lx.peek() {
            Tok::Ident(kw) if kw == "endmodule" => {
                lx.next();
                break;
            }
            Tok::LBracket => {
                lx.next();
                lx.expect(&Tok::RBracket, "`]` (commands carry no action labels)")?;
                let guard = parse_expr(lx)?;
                lx.expect(&Tok::Arrow, "`->`")?;
                let mut alternatives = vec![parse_alternative(lx)?];
                while lx.eat(&Tok::Plus) {
                    alternatives.push(parse_alternative(lx)?);
                }
                lx.expect(&Tok::Semi, "`;`")?;
                commands.push(Command {
                    guard,
                    alternatives,
                    pos,
                });
            }
            Tok::Ident(_) => {
                let vname = ident(lx, "variable name")?;
                lx.expect(&Tok::Colon, "`:`")?;
                let vtype = if lx.eat_kw("bool") {
                    VarType::Bool
                } else if lx.eat(&Tok::LBracket) {
                    let lo = parse_expr(lx)?;
                    lx.expect(&Tok::DotDot, "`..`")?;
                    let hi = parse_expr(lx)?;
                    lx.expect(&Tok::RBracket, "`]`")?;
                    VarType::IntRange(lo, hi)
                } else {
                    return Err(LangError::Syntax {
                        pos: lx.pos(),
                        msg: "expected `bool` or `[lo..hi]`".into(),
                    });
                };
                let init = if lx.eat_kw("init") {
                    Some(parse_expr(lx)?)
                } else {
                    None
                };
                lx.expect(&Tok::Semi, "`;`")?;
                variables.push(VarDecl {
                    name: vname,
                    vtype,
                    init,
                    pos,
                });
            }
            other => {
                return Err(LangError::Syntax {
                    pos,
                    msg: format!("expected variable or command, found {other:?}"),
                })
            }
        }
    }
    Ok((name, variables, commands))
}

/// One `weight : (updates)` alternative. A bare `(updates)` gets weight 1.
fn parse_alternative(lx: &mut Lexer) -> Result<Alternative, LangError> {
    let pos = lx.pos();
    let weight = if *lx.peek() == Tok::LParen && updates_follow(lx) {
        Expr::new(ExprKind::Int(1), pos)
    } else {
        let w = parse_expr(lx)?;
        lx.expect(&Tok::Colon, "`:`")?;
        w
    };
    let mut updates = Vec::new();
    parse_update_group(lx, &mut updates)?;
    while lx.eat(&Tok::And) {
        parse_update_group(lx, &mut updates)?;
    }
    Ok(Alternative { weight, updates })
}

/// Lookahead check for `(name' = ...` — distinguishes a parenthesized
/// update list from a parenthesized weight expression.
fn updates_follow(lx: &Lexer) -> bool {
    matches!(lx.peek(), Tok::LParen)
        && matches!(lx.peek_n(1), Tok::Ident(_))
        && matches!(lx.peek_n(2), Tok::Prime)
}

/// Parses `( update (& update)* )` or a single bare update; both the
/// style with one pair of parentheses around all updates and the style
/// parenthesizing each update are accepted.
fn parse_update_group(lx: &mut Lexer, out: &mut Vec<Update>) -> Result<(), LangError> {
    lx.expect(&Tok::LParen, "`(`")?;
    loop {
        let pos = lx.pos();
        let var = ident(lx, "variable in update")?;
        lx.expect(&Tok::Prime, "`'`")?;
        lx.expect(&Tok::Eq, "`=`")?;
        let value = parse_cmp(lx)?;
        out.push(Update { var, value, pos });
        if !lx.eat(&Tok::And) {
            break;
        }
    }
    lx.expect(&Tok::RParen, "`)`")?;
    Ok(())
}

// --- expressions -----------------------------------------------------------

pub fn parse_expr(lx: &mut Lexer) -> Result<Expr, LangError> {
    parse_or(lx)
}

fn parse_or(lx: &mut Lexer) -> Result<Expr, LangError> {
    let mut e = parse_and(lx)?;
    while *lx.peek() == Tok::Or {
        let pos = lx.pos();
        lx.next();
        let rhs = parse_and(lx)?;
        e = Expr::new(ExprKind::Bin(BinOp::Or, Box::new(e), Box::new(rhs)), pos);
    }
    Ok(e)
}

fn parse_and(lx: &mut Lexer) -> Result<Expr, LangError> {
    let mut e = parse_cmp(lx)?;
    while *lx.peek() == Tok::And {
        let pos = lx.pos();
        lx.next();
        let rhs = parse_cmp(lx)?;
        e = Expr::new(ExprKind::Bin(BinOp::And, Box::new(e), Box::new(rhs)), pos);
    }
    Ok(e)
}

/// Comparison level; this is also the entry point for update right-hand
/// sides, where a top-level `&` separates updates rather than conjuncts.
fn parse_cmp(lx: &mut Lexer) -> Result<Expr, LangError> {
    let e = parse_addsub(lx)?;
    let op = match lx.peek() {
        Tok::Eq => BinOp::Eq,
        Tok::Neq => BinOp::Neq,
        Tok::Lt => BinOp::Lt,
        Tok::Le => BinOp::Le,
        Tok::Gt => BinOp::Gt,
        Tok::Ge => BinOp::Ge,
        _ => return Ok(e),
    };
    let pos = lx.pos();
    lx.next();
    let rhs = parse_addsub(lx)?;
    Ok(Expr::new(
        ExprKind::Bin(op, Box::new(e), Box::new(rhs)),
        pos,
    ))
}

fn parse_addsub(lx: &mut Lexer) -> Result<Expr, LangError> {
    let mut e = parse_muldiv(lx)?;
    loop {
        let op = match lx.peek() {
            Tok::Plus => BinOp::Add,
            Tok::Minus => BinOp::Sub,
            _ => return Ok(e),
        };
        let pos = lx.pos();
        lx.next();
        let rhs = parse_muldiv(lx)?;
        e = Expr::new(ExprKind::Bin(op, Box::new(e), Box::new(rhs)), pos);
    }
}

fn parse_muldiv(lx: &mut Lexer) -> Result<Expr, LangError> {
    let mut e = parse_unary(lx)?;
    loop {
        let op = match lx.peek() {
            Tok::Star => BinOp::Mul,
            Tok::Slash => BinOp::Div,
            _ => return Ok(e),
        };
        let pos = lx.pos();
        lx.next();
        let rhs = parse_unary(lx)?;
        e = Expr::new(ExprKind::Bin(op, Box::new(e), Box::new(rhs)), pos);
    }
}

fn parse_unary(lx: &mut Lexer) -> Result<Expr, LangError> {
    let pos = lx.pos();
    match lx.peek() {
        Tok::Minus => {
            lx.next();
            let e = parse_unary(lx)?;
            Ok(Expr::new(ExprKind::Neg(Box::new(e)), pos))
        }
        Tok::Not => {
            lx.next();
            let e = parse_unary(lx)?;
            Ok(Expr::new(ExprKind::Not(Box::new(e)), pos))
        }
        _ => parse_atom(lx),
    }
}

fn parse_atom(lx: &mut Lexer) -> Result<Expr, LangError> {
    let pos = lx.pos();
    match lx.next() {
        Tok::Int(v) => Ok(Expr::new(ExprKind::Int(v), pos)),
        Tok::Number(s) => Ok(Expr::new(ExprKind::Number(s), pos)),
        Tok::Ident(name) => match name.as_str() {
            "true" => Ok(Expr::new(ExprKind::Bool(true), pos)),
            "false" => Ok(Expr::new(ExprKind::Bool(false), pos)),
            "min" | "max" => {
                let op = if name == "min" { BinOp::Min } else { BinOp::Max };
                lx.expect(&Tok::LParen, "`(`")?;
                let a = parse_expr(lx)?;
                lx.expect(&Tok::Comma, "`,`")?;
                let b = parse_expr(lx)?;
                lx.expect(&Tok::RParen, "`)`")?;
                Ok(Expr::new(ExprKind::Bin(op, Box::new(a), Box::new(b)), pos))
            }
            _ if KEYWORDS.contains(&name.as_str()) => Err(LangError::Syntax {
                pos,
                msg: format!("keyword `{name}` cannot appear in an expression"),
            }),
            _ => Ok(Expr::new(ExprKind::Ident(name), pos)),
        },
        Tok::LParen => {
            let e = parse_expr(lx)?;
            lx.expect(&Tok::RParen, "`)`")?;
            Ok(e)
        }
        other => Err(LangError::Syntax {
            pos,
            msg: format!("expected an expression, found {other:?}"),
        }),
    }
}

// --- properties ------------------------------------------------------------

pub fn parse_property_text(text: &str) -> Result<PropertySpec, LangError> {
    let mut lx = Lexer::tokenize(text)?;
    let pos = lx.pos();
    let head = lx.expect_ident("`P` or `R`")?;
    let spec = match head.as_str() {
        "P" => {
            lx.expect(&Tok::EqQuestion, "`=?`")?;
            lx.expect(&Tok::LBracket, "`[`")?;
            lx.expect_kw("F")?;
            let goal = parse_goal(&mut lx)?;
            lx.expect(&Tok::RBracket, "`]`")?;
            PropertySpec::ReachProb { goal }
        }
        "R" => {
            let reward = if lx.eat(&Tok::LBrace) {
                let name = match lx.next() {
                    Tok::Str(s) => s,
                    other => {
                        return Err(LangError::Syntax {
                            pos: lx.pos(),
                            msg: format!("expected quoted reward name, found {other:?}"),
                        })
                    }
                };
                lx.expect(&Tok::RBrace, "`}`")?;
                name
            } else {
                String::new()
            };
            lx.expect(&Tok::EqQuestion, "`=?`")?;
            lx.expect(&Tok::LBracket, "`[`")?;
            if lx.eat_kw("S") {
                lx.expect(&Tok::RBracket, "`]`")?;
                PropertySpec::LongRunAvg { reward }
            } else {
                lx.expect_kw("F")?;
                let goal = parse_goal(&mut lx)?;
                lx.expect(&Tok::RBracket, "`]`")?;
                PropertySpec::ExpReward { reward, goal }
            }
        }
        _ => {
            return Err(LangError::Syntax {
                pos,
                msg: format!("properties start with `P` or `R`, found `{head}`"),
            })
        }
    };
    lx.expect(&Tok::Eof, "end of property")?;
    Ok(spec)
}

fn parse_goal(lx: &mut Lexer) -> Result<GoalFormula, LangError> {
    if let Tok::Str(s) = lx.peek() {
        let s = s.clone();
        lx.next();
        return Ok(GoalFormula::Label(s));
    }
    Ok(GoalFormula::Expr(parse_expr(lx)?))
}
