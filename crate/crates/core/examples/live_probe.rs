// Prints the live-set evolution of the elimination phase for one model,
// plus a sample of the longest-lived states at the peak.

use std::collections::HashMap;

use probmc::elim::{explore_eliminate, ElimOptions, PartialChain};
use probmc::explore::{explore, ExploreOptions};
use probmc::lang::{compile, parse_model, parse_property};
use probmc::model::AnalysisModel;
use probmc::state::StateCode;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let text = std::fs::read_to_string(&args[1]).unwrap();
    let prop_text = &args[2];
    let mut consts = HashMap::new();
    for kv in &args[3..] {
        let (k, v) = kv.split_once('=').unwrap();
        consts.insert(k.to_string(), v.to_string());
    }
    let ast = parse_model(&text).unwrap();
    let model = compile::<f64>(&ast, &consts).unwrap();
    let prop = parse_property(prop_text).unwrap();
    let analysis = AnalysisModel::new(&model, &prop).unwrap();
    let pre = explore(&analysis, &ExploreOptions::default()).unwrap();
    let mut n = 0u64;
    let mut peak_snapshot: Vec<StateCode> = Vec::new();
    let mut peak = 0usize;
    let mut cb = |chain: &PartialChain<f64>, _s: StateCode| {
        n += 1;
        if chain.live_states() > peak {
            peak = chain.live_states();
            if n % 500 == 0 {
                peak_snapshot = chain.states().map(|(s, _)| *s).collect();
            }
        }
        if n % 2000 == 0 {
            eprintln!("elim #{n}: live={}", chain.live_states());
        }
    };
    let opts = ElimOptions {
        trace_limit: usize::MAX,
        ..Default::default()
    };
    let res = explore_eliminate(&analysis, &pre, &opts, Some(&mut cb)).unwrap();
    eprintln!(
        "final: live={} peak={} states={}",
        res.chain.live_states(),
        res.chain.peak_states(),
        pre.states
    );
    peak_snapshot.sort();
    for s in peak_snapshot.iter().take(12) {
        eprintln!("  live at peak: {}", model.describe(*s));
    }
}
