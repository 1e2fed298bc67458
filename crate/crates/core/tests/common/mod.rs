//! Shared fixtures, random network generators and numerical oracles for the
//! integration suites.

#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use selcond_core::{parse_network, Assignment, BeliefNetwork, NodeSpec};

pub const NET_A: &str = include_str!("../../../../networks/net_a.bnet");
pub const NET_C: &str = include_str!("../../../../networks/net_c.bnet");

pub fn net_a() -> BeliefNetwork {
    parse_network(NET_A).unwrap()
}

pub fn net_c() -> BeliefNetwork {
    parse_network(NET_C).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random DAG over `n` nodes in declaration order; each node picks up to
/// `max_parents` distinct earlier nodes, CPT entries uniform in `[lo, hi)`.
pub fn random_network(
    rng: &mut ChaCha8Rng,
    n: usize,
    max_parents: usize,
    lo: f64,
    hi: f64,
) -> BeliefNetwork {
    let specs = (0..n)
        .map(|i| {
            let mut earlier: Vec<usize> = (0..i).collect();
            earlier.shuffle(rng);
            let k = rng.gen_range(0..=max_parents.min(i));
            let parents: Vec<String> = earlier[..k].iter().map(|p| format!("N{p}")).collect();
            let rows = (0..1usize << k).map(|_| rng.gen_range(lo..hi)).collect();
            NodeSpec::with_parents(format!("N{i}"), parents, rows)
        })
        .collect();
    BeliefNetwork::new("random", specs).unwrap()
}

/// Chain `N0 -> N1 -> ...` when `tree` is false; otherwise every node after
/// the first has one uniformly chosen earlier parent.
pub fn random_tree(rng: &mut ChaCha8Rng, n: usize, tree: bool, lo: f64, hi: f64) -> BeliefNetwork {
    let specs = (0..n)
        .map(|i| {
            if i == 0 {
                return NodeSpec::prior("N0", rng.gen_range(lo..hi));
            }
            let p = if tree { rng.gen_range(0..i) } else { i - 1 };
            let rows = vec![rng.gen_range(lo..hi), rng.gen_range(lo..hi)];
            NodeSpec::with_parents(format!("N{i}"), [format!("N{p}")], rows)
        })
        .collect();
    BeliefNetwork::new("tree", specs).unwrap()
}

/// A random single-node query and `0..=max_evidence` evidence nodes, all
/// distinct.
pub fn random_query(
    rng: &mut ChaCha8Rng,
    net: &BeliefNetwork,
    max_evidence: usize,
) -> (Assignment, Assignment) {
    let mut nodes: Vec<usize> = (0..net.len()).collect();
    nodes.shuffle(rng);
    let query = net.empty_assignment().with(nodes[0], rng.gen());
    let k = rng.gen_range(0..=max_evidence.min(net.len() - 1));
    let mut evidence = net.empty_assignment();
    for &e in &nodes[1..1 + k] {
        evidence.set(e, rng.gen());
    }
    (query, evidence)
}

/// Random assignment binding each node with probability `p_bind`.
pub fn random_assignment(rng: &mut ChaCha8Rng, net: &BeliefNetwork, p_bind: f64) -> Assignment {
    let mut a = net.empty_assignment();
    for i in 0..net.len() {
        if rng.gen_bool(p_bind) {
            a.set(i, rng.gen());
        }
    }
    a
}

/// Uniform point of the simplex with every entry at least `floor`.
pub fn simplex_point(rng: &mut ChaCha8Rng, k: usize, floor: f64) -> Vec<f64> {
    let e: Vec<f64> = (0..k).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
    let total: f64 = e.iter().sum();
    let free = 1.0 - floor * k as f64;
    e.iter().map(|x| floor + free * x / total).collect()
}

pub fn categorical(rng: &mut ChaCha8Rng, p: &[f64]) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, &pi) in p.iter().enumerate() {
        acc += pi;
        if u < acc {
            return i;
        }
    }
    p.len() - 1
}

// 15-point Kronrod rule with its embedded 7-point Gauss rule.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Globally adaptive Gauss–Kronrod quadrature of `f` over `[a, b]`: the
/// interval with the largest error estimate is bisected until the summed
/// error is below `rel_tol` times the integral.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> f64 {
    #[derive(PartialEq)]
    struct Part(f64, f64, f64, f64);
    impl Eq for Part {}
    impl PartialOrd for Part {
        fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
            Some(self.cmp(other))
        }
    }
    impl Ord for Part {
        fn cmp(&self, other: &Self) -> std::cmp::Ordering {
            self.3.total_cmp(&other.3)
        }
    }
    if a == b {
        return 0.0;
    }
    let (v, e) = kronrod(&f, a, b);
    let mut heap = std::collections::BinaryHeap::from([Part(a, b, v, e)]);
    let (mut total, mut err) = (v, e);
    for _ in 0..4000 {
        if err <= rel_tol * total.abs() {
            break;
        }
        let Part(lo, hi, v, e) = heap.pop().unwrap();
        let mid = 0.5 * (lo + hi);
        let (l, el) = kronrod(&f, lo, mid);
        let (r, er) = kronrod(&f, mid, hi);
        total += l + r - v;
        err += el + er - e;
        heap.push(Part(lo, mid, l, el));
        heap.push(Part(mid, hi, r, er));
    }
    let mut parts = heap.into_vec();
    parts.sort_by(|x, y| x.0.total_cmp(&y.0));
    parts.iter().map(|p| p.2).sum()
}

/// `∫_0^x t^(a−1) (1−t)^(b−1) dt · e^(−c)` for `x ≤ 1/2`. A shape below
/// one is handled with `t = s^(1/a)`, which removes the singularity at zero;
/// otherwise the kernel is integrated directly, split at its mode.
fn lower_beta_integral(a: f64, b: f64, x: f64, c: f64) -> f64 {
    let tol = 1e-14;
    if a < 1.0 {
        return integrate(
            |s| {
                let t = s.powf(1.0 / a);
                ((b - 1.0) * (-t).ln_1p() - c).exp() / a
            },
            0.0,
            x.powf(a),
            tol,
        );
    }
    let kernel = |t: f64| {
        if t <= 0.0 {
            return if a == 1.0 { (-c).exp() } else { 0.0 };
        }
        ((a - 1.0) * t.ln() + (b - 1.0) * (-t).ln_1p() - c).exp()
    };
    let mode = if b > 1.0 {
        (a - 1.0) / (a + b - 2.0)
    } else {
        x
    };
    if mode > 0.0 && mode < x {
        integrate(kernel, 0.0, mode, tol) + integrate(kernel, mode, x, tol)
    } else {
        integrate(kernel, 0.0, x, tol)
    }
}

/// Beta(a, b) CDF at `x` by quadrature, normalized by the quadrature of the
/// whole interval; shares no code with the library kernel.
pub fn beta_cdf_quadrature(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    // Scale by the log-kernel at its mode so large shapes do not underflow.
    let c = if a > 1.0 && b > 1.0 {
        let m = (a - 1.0) / (a + b - 2.0);
        (a - 1.0) * m.ln() + (b - 1.0) * (-m).ln_1p()
    } else {
        0.0
    };
    let left = lower_beta_integral(a, b, 0.5, c);
    let right = lower_beta_integral(b, a, 0.5, c);
    let total = left + right;
    if x <= 0.5 {
        lower_beta_integral(a, b, x, c) / total
    } else {
        1.0 - lower_beta_integral(b, a, 1.0 - x, c) / total
    }
}

/// Beta(a, b) mass of `[lo, hi]`.
pub fn beta_interval_mass(a: f64, b: f64, lo: f64, hi: f64) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    beta_cdf_quadrature(a, b, hi.min(1.0)) - beta_cdf_quadrature(a, b, lo.max(0.0))
}

/// Sum of `joint_probability` over every completion of `partial`, written
/// independently of the library oracle.
pub fn brute_marginal(net: &BeliefNetwork, partial: &Assignment) -> f64 {
    let n = net.len();
    let mut total = 0.0;
    for bits in 0u64..(1u64 << n) {
        let state: Vec<bool> = (0..n).map(|i| bits >> i & 1 == 1).collect();
        if !partial.agrees_with(&state) {
            continue;
        }
        let mut p = 1.0;
        for (i, &v) in state.iter().enumerate() {
            let row = net
                .parents(i)
                .iter()
                .fold(0usize, |acc, &q| (acc << 1) | state[q] as usize);
            let r = net.cpt(i).rows()[row];
            p *= if v { r } else { 1.0 - r };
        }
        total += p;
    }
    total
}
