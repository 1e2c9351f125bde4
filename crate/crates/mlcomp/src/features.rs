//! Static code features: a fixed 63-value summary of a module, used as
//! estimator input and as the policy state.
//!
//! Layout (frozen by `FEATURE_MANIFEST_VERSION`):
//! indices 0..22 instruction-kind counts in canonical kind order, then
//! 9 control-flow metrics, 8 loop metrics, 8 call metrics, 8 per-function
//! distribution stats, and 8 density ratios in [0, 1]. Ratios with a zero
//! denominator are 0, so every value is finite and non-negative.

use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use tir::cfg::{compute_cfg, compute_dominators, compute_loops, detect_counted};
use tir::{InstKind, Operand, TirModule};

pub const NUM_FEATURES: usize = 63;
pub const FEATURE_MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub manifest_version: u32,
}

impl FeatureVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }
}

/// One manifest row: position, stable name, human description.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeatureInfo {
    pub index: usize,
    pub name: &'static str,
    pub description: &'static str,
}

#[rustfmt::skip]
const MANIFEST: [(&str, &str); NUM_FEATURES] = [
    ("count.const", "static const instructions"),
    ("count.copy", "static copy instructions"),
    ("count.add", "static add instructions"),
    ("count.sub", "static sub instructions"),
    ("count.mul", "static mul instructions"),
    ("count.div", "static div instructions"),
    ("count.rem", "static rem instructions"),
    ("count.lt", "static lt instructions"),
    ("count.le", "static le instructions"),
    ("count.eq", "static eq instructions"),
    ("count.and", "static and instructions"),
    ("count.or", "static or instructions"),
    ("count.xor", "static xor instructions"),
    ("count.shl", "static shl instructions"),
    ("count.shr", "static shr instructions"),
    ("count.load", "static load instructions"),
    ("count.store", "static store instructions"),
    ("count.call", "static call instructions"),
    ("count.ret", "static ret instructions"),
    ("count.br", "static br instructions"),
    ("count.jmp", "static jmp instructions"),
    ("count.print", "static print instructions"),
    ("cfg.functions", "functions in the module"),
    ("cfg.blocks", "basic blocks over all functions"),
    ("cfg.edges", "control-flow edges over all functions"),
    ("cfg.unreachable_blocks", "blocks unreachable from their function entry"),
    ("cfg.max_out_degree", "largest successor count of any block"),
    ("cfg.cond_branches", "conditional branch instructions"),
    ("cfg.jumps", "unconditional jump instructions"),
    ("cfg.rets", "return instructions"),
    ("cfg.mean_block_size", "mean instructions per block"),
    ("loop.count", "natural loops over all functions"),
    ("loop.max_depth", "deepest loop nesting (1 = outermost)"),
    ("loop.total_body_instrs", "instructions in loop bodies, summed per loop"),
    ("loop.innermost", "loops containing no other loop"),
    ("loop.counted", "loops in canonical counted form"),
    ("loop.with_preheader", "loops that have a preheader block"),
    ("loop.mean_body_instrs", "mean body instructions per loop"),
    ("loop.max_counted_trip", "largest trip count among counted loops"),
    ("call.sites", "call instructions"),
    ("call.distinct_callees", "distinct called functions"),
    ("call.leaf_functions", "functions containing no call"),
    ("call.max_out_degree", "largest distinct-callee count of any function"),
    ("call.recursive_functions", "functions on a call-graph cycle through themselves"),
    ("call.mean_callee_instrs", "mean instruction count of called functions"),
    ("call.max_callee_instrs", "largest instruction count of a called function"),
    ("call.sites_in_loops", "call instructions inside loop bodies"),
    ("fn.min_instrs", "smallest function instruction count"),
    ("fn.max_instrs", "largest function instruction count"),
    ("fn.mean_instrs", "mean function instruction count"),
    ("fn.min_blocks", "smallest function block count"),
    ("fn.max_blocks", "largest function block count"),
    ("fn.mean_blocks", "mean function block count"),
    ("fn.total_params", "parameters over all functions"),
    ("module.globals", "global arrays in the module"),
    ("ratio.arith", "binary computational instructions / total"),
    ("ratio.memory", "load and store instructions / total"),
    ("ratio.control", "ret, br and jmp instructions / total"),
    ("ratio.call", "call instructions / total"),
    ("ratio.const", "const instructions / total"),
    ("ratio.copy", "copy instructions / total"),
    ("ratio.loop_body", "instructions in loop-body blocks / total"),
    ("ratio.looping_fns", "instructions in functions that contain a loop / total"),
];

/// The fixed feature layout, one row per index.
pub fn feature_manifest() -> Vec<FeatureInfo> {
    MANIFEST
        .iter()
        .enumerate()
        .map(|(index, (name, description))| FeatureInfo {
            index,
            name,
            description,
        })
        .collect()
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

pub fn extract_features(m: &TirModule) -> FeatureVector {
    let mut v = vec![0.0f64; NUM_FEATURES];

    let counts = m.kind_counts();
    for (k, &c) in counts.iter().enumerate() {
        v[k] = c as f64;
    }
    let total = m.instr_count() as f64;

    let mut blocks = 0usize;
    let mut edges = 0usize;
    let mut unreachable = 0usize;
    let mut max_out = 0usize;

    let mut loop_count = 0usize;
    let mut loop_max_depth = 0u32;
    let mut loop_body_instrs = 0usize;
    let mut loop_innermost = 0usize;
    let mut loop_counted = 0usize;
    let mut loop_preheaders = 0usize;
    let mut max_trip = 0u64;
    let mut loop_body_block_instrs = 0usize;
    let mut instrs_in_looping_fns = 0usize;

    let mut call_sites_in_loops = 0usize;
    let mut callees: BTreeSet<&str> = BTreeSet::new();
    let mut leaf_fns = 0usize;
    let mut max_cg_out = 0usize;

    for f in &m.functions {
        let cfg = compute_cfg(f);
        let doms = compute_dominators(f, &cfg);
        let loops = compute_loops(f, &cfg, &doms);

        blocks += f.blocks.len();
        edges += cfg.edge_count();
        unreachable += cfg.reachable.iter().filter(|r| !**r).count();
        max_out = max_out.max(cfg.succs.iter().map(|s| s.len()).max().unwrap_or(0));

        loop_count += loops.len();
        let mut body_union: BTreeSet<usize> = BTreeSet::new();
        for lp in &loops {
            loop_max_depth = loop_max_depth.max(lp.depth);
            loop_body_instrs += lp.body.iter().map(|&b| f.blocks[b].instrs.len()).sum::<usize>();
            let innermost = loops
                .iter()
                .all(|o| o.header == lp.header || !lp.body.contains(&o.header));
            if innermost {
                loop_innermost += 1;
            }
            if lp.preheader.is_some() {
                loop_preheaders += 1;
            }
            if let Some(c) = detect_counted(f, lp, &loops) {
                loop_counted += 1;
                max_trip = max_trip.max(c.trip);
            }
            body_union.extend(lp.body.iter().copied());
        }
        for &b in &body_union {
            loop_body_block_instrs += f.blocks[b].instrs.len();
            call_sites_in_loops += f.blocks[b]
                .instrs
                .iter()
                .filter(|i| i.kind == InstKind::Call)
                .count();
        }
        if !loops.is_empty() {
            instrs_in_looping_fns += f.instr_count();
        }

        let mut fn_callees: BTreeSet<&str> = BTreeSet::new();
        for b in &f.blocks {
            for i in &b.instrs {
                if i.kind == InstKind::Call {
                    if let Some(Operand::Global(name)) = i.operands.first() {
                        fn_callees.insert(name);
                    }
                }
            }
        }
        if fn_callees.is_empty() {
            leaf_fns += 1;
        }
        max_cg_out = max_cg_out.max(fn_callees.len());
        callees.extend(fn_callees);
    }

    v[22] = m.functions.len() as f64;
    v[23] = blocks as f64;
    v[24] = edges as f64;
    v[25] = unreachable as f64;
    v[26] = max_out as f64;
    v[27] = counts[InstKind::Br.index()] as f64;
    v[28] = counts[InstKind::Jmp.index()] as f64;
    v[29] = counts[InstKind::Ret.index()] as f64;
    v[30] = ratio(total, blocks as f64);

    v[31] = loop_count as f64;
    v[32] = loop_max_depth as f64;
    v[33] = loop_body_instrs as f64;
    v[34] = loop_innermost as f64;
    v[35] = loop_counted as f64;
    v[36] = loop_preheaders as f64;
    v[37] = ratio(loop_body_instrs as f64, loop_count as f64);
    v[38] = max_trip as f64;

    let call_graph: Vec<(&str, BTreeSet<&str>)> = m
        .functions
        .iter()
        .map(|f| {
            let mut out = BTreeSet::new();
            for b in &f.blocks {
                for i in &b.instrs {
                    if i.kind == InstKind::Call {
                        if let Some(Operand::Global(name)) = i.operands.first() {
                            out.insert(name.as_str());
                        }
                    }
                }
            }
            (f.name.as_str(), out)
        })
        .collect();
    let reaches_self = |start: &str| -> bool {
        let mut seen: BTreeSet<&str> = BTreeSet::new();
        let mut stack: Vec<&str> = call_graph
            .iter()
            .find(|(n, _)| *n == start)
            .map(|(_, out)| out.iter().copied().collect())
            .unwrap_or_default();
        while let Some(f) = stack.pop() {
            if f == start {
                return true;
            }
            if seen.insert(f) {
                if let Some((_, out)) = call_graph.iter().find(|(n, _)| *n == f) {
                    stack.extend(out.iter().copied());
                }
            }
        }
        false
    };
    let recursive = m.functions.iter().filter(|f| reaches_self(&f.name)).count();

    let callee_sizes: Vec<f64> = callees
        .iter()
        .filter_map(|name| m.function(name))
        .map(|f| f.instr_count() as f64)
        .collect();

    v[39] = counts[InstKind::Call.index()] as f64;
    v[40] = callees.len() as f64;
    v[41] = leaf_fns as f64;
    v[42] = max_cg_out as f64;
    v[43] = recursive as f64;
    v[44] = ratio(callee_sizes.iter().sum(), callee_sizes.len() as f64);
    v[45] = callee_sizes.iter().cloned().fold(0.0, f64::max);
    v[46] = call_sites_in_loops as f64;

    let instr_counts: Vec<f64> = m.functions.iter().map(|f| f.instr_count() as f64).collect();
    let block_counts: Vec<f64> = m.functions.iter().map(|f| f.blocks.len() as f64).collect();
    let min_of = |xs: &[f64]| xs.iter().cloned().fold(f64::INFINITY, f64::min);
    v[47] = if instr_counts.is_empty() { 0.0 } else { min_of(&instr_counts) };
    v[48] = instr_counts.iter().cloned().fold(0.0, f64::max);
    v[49] = ratio(instr_counts.iter().sum(), instr_counts.len() as f64);
    v[50] = if block_counts.is_empty() { 0.0 } else { min_of(&block_counts) };
    v[51] = block_counts.iter().cloned().fold(0.0, f64::max);
    v[52] = ratio(block_counts.iter().sum(), block_counts.len() as f64);
    v[53] = m.functions.iter().map(|f| f.params.len()).sum::<usize>() as f64;
    v[54] = m.globals.len() as f64;

    let arith: u64 = InstKind::ALL
        .iter()
        .filter(|k| k.is_binop())
        .map(|k| counts[k.index()])
        .sum();
    let memory = counts[InstKind::Load.index()] + counts[InstKind::Store.index()];
    let control = counts[InstKind::Ret.index()]
        + counts[InstKind::Br.index()]
        + counts[InstKind::Jmp.index()];
    v[55] = ratio(arith as f64, total);
    v[56] = ratio(memory as f64, total);
    v[57] = ratio(control as f64, total);
    v[58] = ratio(counts[InstKind::Call.index()] as f64, total);
    v[59] = ratio(counts[InstKind::Const.index()] as f64, total);
    v[60] = ratio(counts[InstKind::Copy.index()] as f64, total);
    v[61] = ratio(loop_body_block_instrs as f64, total);
    v[62] = ratio(instrs_in_looping_fns as f64, total);

    FeatureVector {
        values: v,
        manifest_version: FEATURE_MANIFEST_VERSION,
    }
}
