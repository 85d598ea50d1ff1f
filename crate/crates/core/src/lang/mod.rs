//! Guarded-command modeling language and property syntax.
//!
//! Models are single-module guarded-command programs in a PRISM-style
//! dialect:
//!
//! ```text
//! dtmc                              // or ctmc
//! const int n = 4;
//! const double p = 0.2;
//! module name
//!   v : [0..7] init 5;              // bounded int; bool also available
//!   [] guard -> w1 : (v'=e1) + w2 : (v'=e2);
//! endmodule
//! rewards "tries"  guard : expr;  endrewards
//! label "ok" = v=6;
//! ```
//!
//! Expressions combine `+ - * /`, `min`/`max`, comparisons and `& | !`;
//! `/` always produces a number (exact under the rational backend), so
//! rational constants can be written as fractions of integers. Weights are
//! probabilities (DTMC, summing to one per command) or positive rates
//! (CTMC). `//` starts a line comment. Deadlocked states compile to
//! warning-flagged self-loops.
//!
//! Properties: `P=? [ F goal ]`, `R{"name"}=? [ F goal ]`, `R=? [ S ]`,
//! where `goal` is a quoted label or an inline state formula.

mod ast;
mod compile;
mod lexer;
mod parser;

pub use ast::{
    Alternative, BinOp, Command, ConstDecl, ConstType, Expr, ExprKind, GoalFormula, LabelDecl,
    ModelAst, ModelKind, PropertySpec, RewardStruct, Update, VarDecl, VarType,
};
pub use compile::{compile, CompiledModel, Successors, Value, VarInfo};
pub use lexer::Pos;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LangError {
    #[error("{pos}: syntax error: {msg}")]
    Syntax { pos: Pos, msg: String },
    #[error("model has no module")]
    NoModule,
    #[error("{pos}: name `{name}` declared twice")]
    Duplicate { pos: Pos, name: String },
    #[error("{pos}: undeclared identifier `{name}`")]
    Undeclared { pos: Pos, name: String },
    #[error("{pos}: type error: {msg}")]
    Type { pos: Pos, msg: String },
    #[error("{pos}: probabilities sum to {sum}, expected 1")]
    BadCommandSum { pos: Pos, sum: f64 },
    #[error("distribution of state {state} sums to {sum}, expected 1")]
    BadDistribution { state: String, sum: String },
    #[error("{pos}: evaluation error: {msg}")]
    Eval { pos: Pos, msg: String },
    #[error("constant `{name}` has no value; pass a `--const` override")]
    UnresolvedConstant { name: String },
    #[error("unknown reward structure or name: {name}")]
    UnknownReward { name: String },
    #[error("constant override `{name}` does not match any declared constant")]
    UnknownConstant { name: String },
    #[error("state encoding needs {width} bits; at most 64 are supported")]
    TooWide { width: u32 },
}

/// Parses a model file.
pub fn parse_model(text: &str) -> Result<ModelAst, LangError> {
    let ast = parser::parse_model_text(text)?;
    compile::check_model(&ast)?;
    Ok(ast)
}

/// Parses a property string.
pub fn parse_property(text: &str) -> Result<PropertySpec, LangError> {
    parser::parse_property_text(text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::Rat;
    use crate::arith::Scalar;
    use std::collections::HashMap;

    const ZEROCONF: &str = r#"
// address auto-configuration chain
dtmc

const int n = 4;
const int h = 32;
const int a = 256;
const double p = 0.2;

module zeroconf
  v : [0..n+3] init n+1;
  [] v=n+1 -> 1-h/a : (v'=n+2) + h/a : (v'=n);
  [] v>1 & v<=n -> 1-p : (v'=n+1) + p : (v'=v-1);
  [] v=1 -> 1-p : (v'=n+1) + p : (v'=n+3);
  [] v=n+2 -> 1 : (v'=n+2);
  [] v=n+3 -> 1 : (v'=n+3);
endmodule

rewards "tries"
  v=n+1 : 1;
endrewards

label "ok" = v=n+2;
label "err" = v=n+3;
label "end" = v>=n+2;
"#;

    #[test]
    fn parses_and_compiles_the_seven_state_chain() {
        let ast = parse_model(ZEROCONF).unwrap();
        assert_eq!(ast.kind, ModelKind::Dtmc);
        assert_eq!(ast.variables.len(), 1);
        let model: CompiledModel<Rat> = compile(&ast, &HashMap::new()).unwrap();
        assert_eq!(model.bit_width(), 3);
        // The single counter occupies the full code: state i is 5 (101).
        assert_eq!(model.initial_state().0, 5);
        let succ = model.successors(model.initial_state()).unwrap();
        assert_eq!(succ.list.len(), 2);
        assert_eq!(succ.list[0], (crate::state::StateCode(6), Rat::new(7, 8)));
        assert_eq!(succ.list[1], (crate::state::StateCode(4), Rat::new(1, 8)));
        assert_eq!(
            model.reward("tries", model.initial_state()).unwrap(),
            Rat::one()
        );
        assert!(model
            .eval_predicate(model.label("ok").unwrap(), crate::state::StateCode(6))
            .unwrap());
    }

    #[test]
    fn duplicate_targets_merge_weights() {
        let text = r#"
dtmc
module m
  x : [0..1] init 0;
  [] x=0 -> 0.3 : (x'=1) + 0.2 : (x'=1) + 0.5 : (x'=0);
  [] x=1 -> 1 : (x'=1);
endmodule
"#;
        let ast = parse_model(text).unwrap();
        let model: CompiledModel<f64> = compile(&ast, &HashMap::new()).unwrap();
        let succ = model.successors(model.initial_state()).unwrap();
        assert_eq!(succ.list.len(), 2);
        assert_eq!(succ.list[0].1, 0.5);
    }

    #[test]
    fn deadlock_becomes_flagged_self_loop() {
        let text = "dtmc\nmodule m\n  b : bool init false;\nendmodule\n";
        let ast = parse_model(text).unwrap();
        let model: CompiledModel<f64> = compile(&ast, &HashMap::new()).unwrap();
        let succ = model.successors(model.initial_state()).unwrap();
        assert!(succ.deadlock);
        assert_eq!(succ.list, vec![(model.initial_state(), 1.0)]);
    }

    #[test]
    fn bad_probability_sum_is_a_static_error() {
        let text = r#"
dtmc
module m
  x : [0..1] init 0;
  [] x=0 -> 0.5 : (x'=1) + 0.6 : (x'=0);
endmodule
"#;
        let err = parse_model(text).unwrap_err();
        match err {
            LangError::BadCommandSum { sum, .. } => assert!((sum - 1.1).abs() < 1e-12),
            other => panic!("expected BadCommandSum, got {other}"),
        }
    }

    #[test]
    fn state_dependent_weights_checked_lazily() {
        // Weights depend on x, so the static pass cannot fold them; the
        // broken state is only reported when expanded.
        let text = r#"
dtmc
const double q = 0.25;
module m
  x : [0..2] init 0;
  [] x<2 -> q*(x+1) : (x'=x+1) + 1-q*(x+1) : (x'=x);
  [] x=2 -> 1 : (x'=2);
endmodule
"#;
        let ast = parse_model(text).unwrap();
        let model: CompiledModel<f64> = compile(&ast, &HashMap::new()).unwrap();
        assert!(model.successors(model.encode(&[0])).is_ok());
        assert!(model.successors(model.encode(&[1])).is_ok());
    }

    #[test]
    fn undeclared_names_and_type_errors_are_caught() {
        let bad_name = "dtmc\nmodule m\n x : [0..1] init 0;\n [] y=0 -> 1 : (x'=1);\nendmodule\n";
        assert!(matches!(
            parse_model(bad_name),
            Err(LangError::Undeclared { .. })
        ));
        let bad_type = "dtmc\nmodule m\n x : [0..1] init 0;\n [] x+1 -> 1 : (x'=1);\nendmodule\n";
        assert!(matches!(parse_model(bad_type), Err(LangError::Type { .. })));
        let bad_init = "dtmc\nmodule m\n x : [0..1] init 7;\n [] x=0 -> 1 : (x'=1);\nendmodule\n";
        let ast = parse_model(bad_init).unwrap();
        assert!(compile::<f64>(&ast, &HashMap::new()).is_err());
    }

    #[test]
    fn out_of_range_update_is_reported_with_state() {
        let text = "dtmc\nmodule m\n x : [0..3] init 0;\n [] true -> 1 : (x'=x+1);\nendmodule\n";
        let ast = parse_model(text).unwrap();
        let model: CompiledModel<f64> = compile(&ast, &HashMap::new()).unwrap();
        assert!(model.successors(model.encode(&[2])).is_ok());
        let err = model.successors(model.encode(&[3])).unwrap_err();
        assert!(err.to_string().contains("outside"));
    }

    #[test]
    fn constant_overrides_change_the_layout() {
        let ast = parse_model(ZEROCONF).unwrap();
        let mut ov = HashMap::new();
        ov.insert("n".to_string(), "100".to_string());
        let model: CompiledModel<f64> = compile(&ast, &ov).unwrap();
        // 0..103 needs 7 bits.
        assert_eq!(model.bit_width(), 7);
        assert_eq!(model.initial_state().0, 101);
    }

    #[test]
    fn missing_constant_requires_override() {
        let text = "dtmc\nconst int k;\nmodule m\n x : [0..k] init 0;\n [] true -> 1 : (x'=x);\nendmodule\n";
        let ast = parse_model(text).unwrap();
        assert!(matches!(
            compile::<f64>(&ast, &HashMap::new()),
            Err(LangError::UnresolvedConstant { .. })
        ));
        let mut ov = HashMap::new();
        ov.insert("k".into(), "3".into());
        assert!(compile::<f64>(&ast, &ov).is_ok());
    }

    #[test]
    fn encode_decode_round_trip() {
        let text = r#"
ctmc
module m
  a : [2..5] init 3;
  b : bool init true;
  c : [0..12] init 7;
  [] true -> 1 : (a'=a);
endmodule
"#;
        let ast = parse_model(text).unwrap();
        let model: CompiledModel<f64> = compile(&ast, &HashMap::new()).unwrap();
        // 2 bits + 1 bit + 4 bits, declaration order, MSB first.
        assert_eq!(model.bit_width(), 7);
        for a in 2..=5 {
            for b in 0..=1 {
                for c in 0..=12 {
                    let code = model.encode(&[a, b, c]);
                    assert_eq!(model.decode(code), vec![a, b, c]);
                }
            }
        }
        // Fields are packed contiguously: a=3 (offset 1), b=true, c=7
        // encodes as 01 1 0111.
        assert_eq!(model.encode(&[3, 1, 7]).0, 0b01_1_0111);
    }

    #[test]
    fn pretty_print_reparses_to_the_same_tree() {
        for text in [ZEROCONF] {
            let ast = parse_model(text).unwrap();
            let printed = ast.to_string();
            let reparsed = parse_model(&printed).unwrap_or_else(|e| {
                panic!("pretty-printed model failed to reparse: {e}\n{printed}")
            });
            assert_eq!(printed, reparsed.to_string());
        }
    }

    #[test]
    fn property_forms() {
        match parse_property(r#"P=? [ F "ok" ]"#).unwrap() {
            PropertySpec::ReachProb {
                goal: GoalFormula::Label(l),
            } => assert_eq!(l, "ok"),
            p => panic!("unexpected {p:?}"),
        }
        match parse_property(r#"R{"danger"}=? [ F "down" ]"#).unwrap() {
            PropertySpec::ExpReward {
                reward,
                goal: GoalFormula::Label(l),
            } => {
                assert_eq!(reward, "danger");
                assert_eq!(l, "down");
            }
            p => panic!("unexpected {p:?}"),
        }
        match parse_property("R=? [ S ]").unwrap() {
            PropertySpec::LongRunAvg { reward } => assert_eq!(reward, ""),
            p => panic!("unexpected {p:?}"),
        }
        // Inline state formulas act as synthesized labels.
        match parse_property("P=?[ F s=5 ]").unwrap() {
            PropertySpec::ReachProb {
                goal: GoalFormula::Expr(e),
            } => assert_eq!(e.to_string(), "s = 5"),
            p => panic!("unexpected {p:?}"),
        }
        assert!(parse_property("P=? [ G \"ok\" ]").is_err());
    }

    #[test]
    fn property_round_trip() {
        for text in [
            r#"P=? [ F "ok" ]"#,
            r#"R{"danger"}=? [ F "down" ]"#,
            r#"R=? [ S ]"#,
            r#"R{"calls"}=? [ S ]"#,
        ] {
            let p = parse_property(text).unwrap();
            assert_eq!(p.to_string(), text);
        }
    }
}
