//! The bundled programs are the ground truth for everything downstream, so
//! each one is checked against an independent Rust reimplementation of the
//! algorithm it encodes, and the text files are pinned to the canonical
//! printer output byte for byte.

mod common;

use common::{corpus_module, load_corpus, platform_path, run};
use tir::cfg::{compute_cfg, compute_dominators, compute_loops};
use tir::passes::apply_phase_by_name;
use tir::ir::structurally_equal;
use tir::{parse_module, print_module};

#[test]
fn round_trip_is_byte_identical() {
    for (stem, text, module) in load_corpus() {
        let printed = print_module(&module);
        assert_eq!(printed, text, "{stem} is not in canonical form");
        let reparsed = parse_module(&printed).unwrap();
        assert!(
            structurally_equal(&module, &reparsed),
            "{stem} changed across print/parse"
        );
    }
}

#[test]
fn corpus_names_cover_the_required_set() {
    let have: Vec<String> = load_corpus().into_iter().map(|(s, _, _)| s).collect();
    for want in [
        "matmul4",
        "dotprod8",
        "fib-iter",
        "bubblesort",
        "checksum",
        "sieve",
        "gcd-loop",
        "histogram",
        "popcount-loop",
        "polyeval",
        "strrev-array",
        "sum1to10",
    ] {
        assert!(have.iter().any(|s| s == want), "missing program {want}");
    }
}

#[test]
fn checksum_matches_native_arithmetic() {
    let (a, b) = (12i64, 5i64);
    let t = a + b;
    let x1 = t * 8 - t * 4;
    let mut buf = [0i64; 4];
    buf[0] = x1;
    buf[0] = 9;
    let v0 = buf[0];
    let expect = v0 * v0 + x1 + t;
    assert_eq!(run(&corpus_module("checksum")), expect);
}

#[test]
fn polyeval_matches_horner_at_six() {
    let x = 6i64;
    let expect = 3 * x * x * x + 4 * x * x + 2 * x + 7;
    assert_eq!(run(&corpus_module("polyeval")), expect);
}

#[test]
fn strrev_array_matches_reverse_and_weight() {
    let mut v = [10i64, 20, 30, 40, 50, 60, 70, 80];
    v.reverse();
    let expect: i64 = v.iter().enumerate().map(|(i, x)| (i as i64 + 1) * x).sum();
    assert_eq!(run(&corpus_module("strrev-array")), expect);
}

#[test]
fn dotprod8_matches_native_dot_product() {
    let expect: i64 = (0i64..8).map(|i| (i + 1) * (2 * i + 1)).sum();
    assert_eq!(run(&corpus_module("dotprod8")), expect);
}

#[test]
fn fib_iter_matches_native_fibonacci() {
    let (mut a, mut b) = (0i64, 1i64);
    for _ in 0..20 {
        let t = a + b;
        a = b;
        b = t;
    }
    assert_eq!(run(&corpus_module("fib-iter")), a);
}

#[test]
fn bubblesort_matches_std_sort_and_weight() {
    let mut v = [9i64, 7, 8, 3, 5, 1, 6, 2];
    v.sort();
    let expect: i64 = v.iter().enumerate().map(|(i, x)| (i as i64 + 1) * x).sum();
    assert_eq!(run(&corpus_module("bubblesort")), expect);
}

#[test]
fn sieve_matches_native_prime_count() {
    let mut composite = [false; 30];
    for i in 2..30usize {
        if composite[i] {
            continue;
        }
        let mut m = 2 * i;
        while m < 30 {
            composite[m] = true;
            m += i;
        }
    }
    let expect = (2..30).filter(|&i| !composite[i]).count() as i64;
    assert_eq!(run(&corpus_module("sieve")), expect);
}

#[test]
fn gcd_loop_matches_native_euclid() {
    let (mut a, mut b) = (1071i64, 462i64);
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    assert_eq!(run(&corpus_module("gcd-loop")), a);
}

#[test]
fn histogram_matches_native_tally() {
    let mut hist = [0i64; 4];
    for i in 0i64..16 {
        hist[((7 * i + 3) % 4) as usize] += 1;
    }
    let expect: i64 = hist.iter().enumerate().map(|(i, h)| (i as i64 + 1) * h).sum();
    assert_eq!(run(&corpus_module("histogram")), expect);
}

#[test]
fn popcount_loop_matches_count_ones() {
    let expect = 3735928559i64.count_ones() as i64;
    assert_eq!(run(&corpus_module("popcount-loop")), expect);
}

#[test]
fn sum1to10_matches_arithmetic_series() {
    let expect: i64 = (1..=10).sum();
    assert_eq!(run(&corpus_module("sum1to10")), expect);
}

#[test]
fn callmix_matches_native_polynomial_sum() {
    let expect: i64 = (0i64..8).map(|i| i * i + (i + 1)).sum();
    assert_eq!(run(&corpus_module("callmix")), expect);
}

#[test]
fn matmul4_matches_native_matrix_product() {
    let a: Vec<i64> = (0..16).map(|i| i + 1).collect();
    let b: Vec<i64> = (0..16).map(|i| 3 * i + 2).collect();
    let mut total = 0i64;
    for r in 0..4 {
        for q in 0..4 {
            let mut acc = 0i64;
            for k in 0..4 {
                acc += a[4 * r + k] * b[4 * k + q];
            }
            total += acc;
        }
    }
    assert_eq!(run(&corpus_module("matmul4")), total);
}

#[test]
fn bubblesort_edges_match_a_terminator_scan() {
    let m = corpus_module("bubblesort");
    let f = &m.functions[0];
    let cfg = compute_cfg(f);

    let index_of = |label: &str| f.blocks.iter().position(|b| b.label == label).unwrap();
    let mut expect: Vec<(usize, usize)> = Vec::new();
    for (bi, b) in f.blocks.iter().enumerate() {
        let term = b.instrs.last().unwrap();
        for t in &term.targets {
            expect.push((bi, index_of(t)));
        }
    }
    let mut got: Vec<(usize, usize)> = cfg
        .succs
        .iter()
        .enumerate()
        .flat_map(|(bi, ss)| ss.iter().map(move |&s| (bi, s)))
        .collect();
    expect.sort_unstable();
    got.sort_unstable();
    assert_eq!(got, expect);
    assert_eq!(cfg.edge_count(), expect.len());
}

#[test]
fn matmul4_has_three_loops_nested_three_deep() {
    let m = corpus_module("matmul4");
    let f = &m.functions[0];
    let cfg = compute_cfg(f);
    let doms = compute_dominators(f, &cfg);
    let loops = compute_loops(f, &cfg, &doms);
    assert_eq!(loops.len(), 3);
    assert_eq!(loops.iter().map(|l| l.depth).max(), Some(3));
}

#[test]
fn unrolling_dotprod8_leaves_no_loops_and_keeps_the_answer() {
    let m = corpus_module("dotprod8");
    let before = tir::exec::interpret(&m, tir::exec::DEFAULT_FUEL).unwrap();
    let out = apply_phase_by_name(&m, "loopunroll").unwrap();
    assert!(out.changed);

    let f = &out.module.functions[0];
    let cfg = compute_cfg(f);
    let doms = compute_dominators(f, &cfg);
    assert!(compute_loops(f, &cfg, &doms).is_empty());

    // Both trip-8 bodies flatten: 2 loads per dot iteration.
    let loads = out.module.kind_counts()[tir::InstKind::Load.index()];
    assert_eq!(loads, 16);

    let after = tir::exec::interpret(&out.module, tir::exec::DEFAULT_FUEL).unwrap();
    assert_eq!(after.exit_value, before.exit_value);
    assert_eq!(after.print_trace, before.print_trace);
}

#[test]
fn bundled_platform_files_parse() {
    for name in ["vulcan", "ember"] {
        let p = tir::platform::load_platform(&platform_path(name)).unwrap();
        assert_eq!(p.name, name);
        assert!(p.clock_hz > 0);
        assert!(p.bytes.iter().all(|&b| b > 0));
    }
}
