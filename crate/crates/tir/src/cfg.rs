//! Per-function control-flow analyses: CFG, dominators, natural loops,
//! liveness, and the counted-loop shape shared by loopunroll and the
//! feature extractor.

use crate::ir::{InstKind, TirFunction};
use std::collections::BTreeSet;

/// Successor/predecessor lists by block index. `br` contributes two entries
/// (possibly duplicated when both targets agree).
#[derive(Debug, Clone)]
pub struct Cfg {
    pub succs: Vec<Vec<usize>>,
    pub preds: Vec<Vec<usize>>,
    pub reachable: Vec<bool>,
}

impl Cfg {
    /// Total edge count (duplicates from two-way branches included).
    pub fn edge_count(&self) -> usize {
        self.succs.iter().map(|s| s.len()).sum()
    }
}

pub fn compute_cfg(f: &TirFunction) -> Cfg {
    let n = f.blocks.len();
    let mut succs = vec![Vec::new(); n];
    let mut preds = vec![Vec::new(); n];
    for (bi, b) in f.blocks.iter().enumerate() {
        if let Some(t) = b.instrs.last() {
            for target in &t.targets {
                let ti = f.block_index(target).expect("verified target");
                succs[bi].push(ti);
                preds[ti].push(bi);
            }
        }
    }
    let mut reachable = vec![false; n];
    let mut stack = vec![0usize];
    if n > 0 {
        reachable[0] = true;
    }
    while let Some(b) = stack.pop() {
        for &s in &succs[b] {
            if !reachable[s] {
                reachable[s] = true;
                stack.push(s);
            }
        }
    }
    Cfg {
        succs,
        preds,
        reachable,
    }
}

/// Dominator sets as bitsets over block indices. Unreachable blocks have
/// empty sets and are never reported as dominated or dominating.
#[derive(Debug, Clone)]
pub struct Dominators {
    sets: Vec<Vec<u64>>,
    words: usize,
}

impl Dominators {
    pub fn dominates(&self, a: usize, b: usize) -> bool {
        self.sets[b][a / 64] & (1u64 << (a % 64)) != 0
    }

    pub fn dom_set(&self, b: usize) -> Vec<usize> {
        let mut out = Vec::new();
        for w in 0..self.words {
            let mut bits = self.sets[b][w];
            while bits != 0 {
                let t = bits.trailing_zeros() as usize;
                out.push(w * 64 + t);
                bits &= bits - 1;
            }
        }
        out
    }
}

/// Iterative dataflow: dom(entry) = {entry}; dom(b) = {b} | AND over
/// reachable predecessors.
pub fn compute_dominators(f: &TirFunction, cfg: &Cfg) -> Dominators {
    let n = f.blocks.len();
    let words = n.div_ceil(64);
    let full = vec![u64::MAX; words];
    let mut sets: Vec<Vec<u64>> = (0..n)
        .map(|b| {
            if b == 0 {
                let mut s = vec![0u64; words];
                s[0] |= 1;
                s
            } else if cfg.reachable[b] {
                full.clone()
            } else {
                vec![0u64; words]
            }
        })
        .collect();
    let mut changed = true;
    while changed {
        changed = false;
        for b in 1..n {
            if !cfg.reachable[b] {
                continue;
            }
            let mut acc = full.clone();
            for &p in &cfg.preds[b] {
                if cfg.reachable[p] {
                    for w in 0..words {
                        acc[w] &= sets[p][w];
                    }
                }
            }
            acc[b / 64] |= 1u64 << (b % 64);
            if acc != sets[b] {
                sets[b] = acc;
                changed = true;
            }
        }
    }
    Dominators { sets, words }
}

/// A natural loop: header plus all blocks that reach a back edge source
/// without passing the header. Loops sharing a header are merged.
#[derive(Debug, Clone)]
pub struct LoopInfo {
    pub header: usize,
    /// Body block indices, header included.
    pub body: BTreeSet<usize>,
    /// Nesting depth; 1 for outermost.
    pub depth: u32,
    /// The unique predecessor of the header outside the loop whose only
    /// successor is the header, when such a block exists.
    pub preheader: Option<usize>,
    /// Back edge sources.
    pub latches: Vec<usize>,
}

/// Natural loops of a function, sorted by header index. On irreducible
/// control flow this simply finds whatever back edges dominance admits.
pub fn compute_loops(f: &TirFunction, cfg: &Cfg, doms: &Dominators) -> Vec<LoopInfo> {
    let n = f.blocks.len();
    let mut by_header: std::collections::BTreeMap<usize, LoopInfo> = Default::default();
    for u in 0..n {
        if !cfg.reachable[u] {
            continue;
        }
        for &h in &cfg.succs[u] {
            if !doms.dominates(h, u) {
                continue;
            }
            let entry = by_header.entry(h).or_insert_with(|| LoopInfo {
                header: h,
                body: BTreeSet::from([h]),
                depth: 0,
                preheader: None,
                latches: Vec::new(),
            });
            entry.latches.push(u);
            // Reverse reachability from the latch, stopping at the header:
            // every inserted block is pushed exactly once, the header never.
            let mut stack = Vec::new();
            if entry.body.insert(u) {
                stack.push(u);
            }
            while let Some(b) = stack.pop() {
                for &p in &cfg.preds[b] {
                    if cfg.reachable[p] && entry.body.insert(p) {
                        stack.push(p);
                    }
                }
            }
        }
    }
    let mut loops: Vec<LoopInfo> = by_header.into_values().collect();
    for i in 0..loops.len() {
        let header = loops[i].header;
        loops[i].depth = 1 + loops
            .iter()
            .filter(|other| other.header != header && other.body.contains(&header))
            .count() as u32;
        let outside_preds: Vec<usize> = cfg.preds[loops[i].header]
            .iter()
            .copied()
            .filter(|p| cfg.reachable[*p] && !loops[i].body.contains(p))
            .collect();
        if let [p] = outside_preds[..] {
            let unique_succ = {
                let s = &cfg.succs[p];
                !s.is_empty() && s.iter().all(|&x| x == loops[i].header)
            };
            if unique_succ {
                loops[i].preheader = Some(p);
            }
        }
    }
    loops
}

/// Per-block live-in/live-out register sets (backward may-analysis).
pub struct Liveness {
    pub live_in: Vec<BTreeSet<String>>,
    pub live_out: Vec<BTreeSet<String>>,
}

pub fn compute_liveness(f: &TirFunction, cfg: &Cfg) -> Liveness {
    let n = f.blocks.len();
    let mut use_set: Vec<BTreeSet<String>> = vec![Default::default(); n];
    let mut def_set: Vec<BTreeSet<String>> = vec![Default::default(); n];
    for (bi, b) in f.blocks.iter().enumerate() {
        for i in &b.instrs {
            for r in i.used_regs() {
                if !def_set[bi].contains(r) {
                    use_set[bi].insert(r.to_string());
                }
            }
            if let Some(d) = &i.dest {
                def_set[bi].insert(d.clone());
            }
        }
    }
    let mut live_in: Vec<BTreeSet<String>> = vec![Default::default(); n];
    let mut live_out: Vec<BTreeSet<String>> = vec![Default::default(); n];
    let mut changed = true;
    while changed {
        changed = false;
        for bi in (0..n).rev() {
            let mut out: BTreeSet<String> = Default::default();
            for &s in &cfg.succs[bi] {
                out.extend(live_in[s].iter().cloned());
            }
            let mut inp = use_set[bi].clone();
            for r in &out {
                if !def_set[bi].contains(r) {
                    inp.insert(r.clone());
                }
            }
            if out != live_out[bi] || inp != live_in[bi] {
                live_out[bi] = out;
                live_in[bi] = inp;
                changed = true;
            }
        }
    }
    Liveness { live_in, live_out }
}

/// A loop in counted canonical form:
///
/// ```text
/// pre:    %i = const INIT ... jmp header
/// header: %c = lt %i, BOUND   br %c, body_entry, exit
/// ...     (body; unique latch ends: %i = add %i, STEP  jmp header)
/// ```
///
/// with %c used only by the br, %i stepped exactly once (in the latch,
/// STEP > 0), and the loop innermost.
#[derive(Debug, Clone)]
pub struct CountedLoop {
    pub header: usize,
    pub preheader: usize,
    pub latch: usize,
    pub body_entry: usize,
    pub exit: usize,
    pub counter: String,
    pub init: i64,
    pub bound: i64,
    pub step: i64,
    pub trip: u64,
}

/// Detect the counted canonical form for one loop. `loops` is the full loop
/// set of the function (for the innermost check).
pub fn detect_counted(f: &TirFunction, lp: &LoopInfo, loops: &[LoopInfo]) -> Option<CountedLoop> {
    let innermost = loops
        .iter()
        .all(|other| other.header == lp.header || !lp.body.contains(&other.header));
    if !innermost {
        return None;
    }
    let preheader = lp.preheader?;
    let [latch] = lp.latches[..] else { return None };
    let header_block = &f.blocks[lp.header];
    let [cmp, br] = &header_block.instrs[..] else {
        return None;
    };
    if cmp.kind != InstKind::Lt || br.kind != InstKind::Br {
        return None;
    }
    let cmp_dest = cmp.dest.as_deref()?;
    if br.operands[0].as_reg() != Some(cmp_dest) {
        return None;
    }
    let counter = cmp.operands[0].as_reg()?.to_string();
    let bound = cmp.operands[1].as_lit()?;
    let body_entry = f.block_index(&br.targets[0])?;
    let exit = f.block_index(&br.targets[1])?;
    if !lp.body.contains(&body_entry) || lp.body.contains(&exit) || body_entry == lp.header {
        return None;
    }
    // %c: defined exactly once (the cmp), used exactly once (the br).
    let mut c_defs = 0;
    let mut c_uses = 0;
    for b in &f.blocks {
        for i in &b.instrs {
            if i.dest.as_deref() == Some(cmp_dest) {
                c_defs += 1;
            }
            c_uses += i.used_regs().filter(|r| *r == cmp_dest).count();
        }
    }
    if c_defs != 1 || c_uses != 1 {
        return None;
    }
    // The latch ends with the single in-loop step of the counter, then jmp.
    let latch_block = &f.blocks[latch];
    if latch_block.instrs.last()?.kind != InstKind::Jmp {
        return None;
    }
    let li = latch_block.instrs.len();
    if li < 2 {
        return None;
    }
    let step_instr = &latch_block.instrs[li - 2];
    if step_instr.kind != InstKind::Add
        || step_instr.dest.as_deref() != Some(counter.as_str())
        || step_instr.operands[0].as_reg() != Some(counter.as_str())
    {
        return None;
    }
    let step = step_instr.operands[1].as_lit()?;
    if step <= 0 {
        return None;
    }
    let mut counter_defs_in_loop = 0;
    for &bi in &lp.body {
        for i in &f.blocks[bi].instrs {
            if i.dest.as_deref() == Some(counter.as_str()) {
                counter_defs_in_loop += 1;
            }
        }
    }
    if counter_defs_in_loop != 1 {
        return None;
    }
    // Init: the last definition of the counter in the preheader is a const.
    let init = f.blocks[preheader]
        .instrs
        .iter()
        .rev()
        .find(|i| i.dest.as_deref() == Some(counter.as_str()))
        .and_then(|i| {
            if i.kind == InstKind::Const {
                i.operands[0].as_lit()
            } else {
                None
            }
        })?;
    let trip = if init >= bound {
        0
    } else {
        let span = (bound as i128) - (init as i128);
        let s = step as i128;
        ((span + s - 1) / s) as u64
    };
    // The final step must not wrap, or the real loop would keep running.
    if (init as i128) + (trip as i128) * (step as i128) > i64::MAX as i128 {
        return None;
    }
    Some(CountedLoop {
        header: lp.header,
        preheader,
        latch,
        body_entry,
        exit,
        counter,
        init,
        bound,
        step,
        trip,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_module;

    fn fun(src: &str) -> TirFunction {
        parse_module(src).unwrap().functions[0].clone()
    }

    #[test]
    fn diamond_has_four_edges() {
        let f = fun(
            "func @main(){ bb0: %c = const 1  br %c, l, r
             l: jmp j
             r: jmp j
             j: ret 0 }",
        );
        let cfg = compute_cfg(&f);
        assert_eq!(cfg.edge_count(), 4);
        assert!(cfg.reachable.iter().all(|r| *r));
    }

    #[test]
    fn single_block_dominators() {
        let f = fun("func @main(){ bb0: ret 0 }");
        let cfg = compute_cfg(&f);
        let d = compute_dominators(&f, &cfg);
        assert_eq!(d.dom_set(0), vec![0]);
    }

    #[test]
    fn while_loop_shape() {
        let f = fun(
            "func @main(){ pre: %i = const 0  jmp h
             h: %c = lt %i, 8  br %c, b, e
             b: %i = add %i, 1  jmp h
             e: ret %i }",
        );
        let cfg = compute_cfg(&f);
        let doms = compute_dominators(&f, &cfg);
        let loops = compute_loops(&f, &cfg, &doms);
        assert_eq!(loops.len(), 1);
        let lp = &loops[0];
        assert_eq!(lp.header, 1);
        assert_eq!(lp.body, BTreeSet::from([1, 2]));
        assert_eq!(lp.depth, 1);
        assert_eq!(lp.preheader, Some(0));
        let counted = detect_counted(&f, lp, &loops).expect("counted form");
        assert_eq!((counted.init, counted.bound, counted.step), (0, 8, 1));
        assert_eq!(counted.trip, 8);
        assert_eq!(counted.latch, 2);
    }

    #[test]
    fn non_counted_shapes_are_rejected() {
        // Bound is a register, not a literal.
        let f = fun(
            "func @main(){ pre: %i = const 0  %n = const 8  jmp h
             h: %c = lt %i, %n  br %c, b, e
             b: %i = add %i, 1  jmp h
             e: ret %i }",
        );
        let cfg = compute_cfg(&f);
        let doms = compute_dominators(&f, &cfg);
        let loops = compute_loops(&f, &cfg, &doms);
        assert!(detect_counted(&f, &loops[0], &loops).is_none());
    }

    #[test]
    fn nested_loop_depths() {
        let f = fun(
            "func @main(){ pre: %i = const 0  jmp oh
             oh: %ci = lt %i, 2  br %ci, ob, oe
             ob: %j = const 0  jmp ih
             ih: %cj = lt %j, 2  br %cj, ib, ol
             ib: %j = add %j, 1  jmp ih
             ol: %i = add %i, 1  jmp oh
             oe: ret %i }",
        );
        let cfg = compute_cfg(&f);
        let doms = compute_dominators(&f, &cfg);
        let loops = compute_loops(&f, &cfg, &doms);
        assert_eq!(loops.len(), 2);
        let outer = loops.iter().find(|l| l.header == 1).unwrap();
        let inner = loops.iter().find(|l| l.header == 3).unwrap();
        assert_eq!(outer.depth, 1);
        assert_eq!(inner.depth, 2);
        // Outer is not innermost, inner is counted.
        assert!(detect_counted(&f, outer, &loops).is_none());
        assert!(detect_counted(&f, inner, &loops).is_some());
    }

    #[test]
    fn liveness_flows_backward() {
        let f = fun(
            "func @main(){ bb0: %a = const 1  %c = const 1  br %c, l, r
             l: %b = add %a, 1  jmp j
             r: %b = add %a, 2  jmp j
             j: ret %b }",
        );
        let cfg = compute_cfg(&f);
        let lv = compute_liveness(&f, &cfg);
        assert!(lv.live_out[0].contains("a"));
        assert!(lv.live_in[3].contains("b"));
        assert!(!lv.live_out[3].contains("b"));
    }
}
