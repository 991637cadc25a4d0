//! Independent reference implementations used as test oracles. Everything
//! here is written densely and directly from the definitions, without
//! reusing library code paths.
#![allow(dead_code)]

use std::collections::{BTreeSet, VecDeque};

use hmlet::graph::InteractionGraph;
use hmlet::numerics::Rng;

pub type Mat = Vec<Vec<f64>>;

pub const BETA: f64 = 0.2;
pub const LEAKY_SLOPE: f64 = 0.01;

pub fn zeros(r: usize, c: usize) -> Mat {
    vec![vec![0.0; c]; r]
}

pub fn matmul(a: &Mat, b: &Mat) -> Mat {
    let (n, m, p) = (a.len(), b.len(), b[0].len());
    let mut out = zeros(n, p);
    for i in 0..n {
        for k in 0..m {
            for j in 0..p {
                out[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    out
}

pub fn transpose(a: &Mat) -> Mat {
    (0..a[0].len())
        .map(|j| a.iter().map(|row| row[j]).collect())
        .collect()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn max_abs_diff(a: &Mat, b: &Mat) -> f64 {
    a.iter()
        .flatten()
        .zip(b.iter().flatten())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Dense `D^-1/2 A D^-1/2` of the user-item training graph.
pub fn dense_normalized_adjacency(g: &InteractionGraph) -> Mat {
    let (nu, n) = (g.num_users(), g.num_nodes());
    let mut a = zeros(n, n);
    for (u, items) in g.train().iter().enumerate() {
        for &i in items {
            a[u][nu + i as usize] = 1.0;
            a[nu + i as usize][u] = 1.0;
        }
    }
    let dinv: Vec<f64> = a
        .iter()
        .map(|row| {
            let d: f64 = row.iter().sum();
            if d > 0.0 {
                1.0 / d.sqrt()
            } else {
                0.0
            }
        })
        .collect();
    let mut out = zeros(n, n);
    for r in 0..n {
        for c in 0..n {
            if a[r][c] != 0.0 {
                out[r][c] = dinv[r] * a[r][c] * dinv[c];
            }
        }
    }
    out
}

/// Random user-item graph where every user has at least one train item and
/// at least one non-train item, and every item is used.
pub fn random_graph(nu: usize, ni: usize, rng: &mut Rng) -> InteractionGraph {
    assert!(nu >= 2 && ni >= 2, "a single user cannot cover every item");
    loop {
        let train: Vec<Vec<u32>> = (0..nu)
            .map(|_| {
                let mut items: Vec<u32> = (0..ni as u32).filter(|_| rng.bernoulli(0.5)).collect();
                if items.is_empty() {
                    items.push(rng.below(ni) as u32);
                }
                if items.len() == ni {
                    items.remove(rng.below(ni));
                }
                items
            })
            .collect();
        let used: BTreeSet<u32> = train.iter().flatten().copied().collect();
        if used.len() == ni {
            return InteractionGraph::from_splits(
                nu,
                ni,
                train,
                vec![vec![]; nu],
                vec![vec![]; nu],
            )
            .unwrap();
        }
    }
}

/// One (user, positive, negative) triplet per training pair, negatives drawn uniformly.
pub fn all_triplets(g: &InteractionGraph, rng: &mut Rng) -> Vec<(usize, usize, usize)> {
    let mut out = Vec::new();
    for (u, items) in g.train().iter().enumerate() {
        let negs: Vec<usize> = (0..g.num_items())
            .filter(|i| !items.contains(&(*i as u32)))
            .collect();
        for &i in items {
            out.push((u, i as usize, negs[rng.below(negs.len())]));
        }
    }
    out
}

fn softplus_neg(delta: f64) -> f64 {
    // -ln sigma(delta)
    if delta > 0.0 {
        (-delta).exp().ln_1p()
    } else {
        -delta + delta.exp().ln_1p()
    }
}

// ---------------------------------------------------------------------------
// Gated model reference (straight-through surrogate)

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OGate {
    Linear,
    NonLinear,
    Gated,
}

/// `(propagate, gate)` for layers 1..=4.
pub fn oracle_plan(variant: &str) -> [(bool, OGate); 4] {
    use OGate::*;
    match variant {
        "All" => [(true, Gated); 4],
        "Front" => [
            (true, Gated),
            (true, Gated),
            (false, Linear),
            (false, Linear),
        ],
        "Middle" => [
            (false, Linear),
            (true, Gated),
            (true, Gated),
            (false, Linear),
        ],
        "End" => [
            (false, Linear),
            (false, Linear),
            (true, Gated),
            (true, Gated),
        ],
        "forced-linear" => [(false, Linear); 4],
        "forced-nonlinear" => [(true, NonLinear); 4],
        other => panic!("no plan for {other}"),
    }
}

#[derive(Clone, Debug)]
pub struct OracleSpec {
    pub nu: usize,
    pub ni: usize,
    pub dim: usize,
    pub plan: [(bool, OGate); 4],
    pub hidden: bool,
    pub elu: bool,
    pub tau: f64,
    pub lambda: f64,
}

/// Hard choices and soft probabilities at the expansion point, per gated
/// layer and node.
#[derive(Clone, Debug, Default)]
pub struct Frozen {
    pub z: Vec<Vec<[f64; 2]>>,
    pub y: Vec<Vec<[f64; 2]>>,
    /// Smallest |pre-activation| met (propagated aggregates and hidden gate
    /// units), i.e. the distance to the nearest activation kink.
    pub kink_distance: f64,
}

fn leaky(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        LEAKY_SLOPE * x
    }
}

fn phi(x: f64, elu: bool) -> f64 {
    if elu {
        if x > 0.0 {
            x
        } else {
            x.exp() - 1.0
        }
    } else {
        leaky(x)
    }
}

struct Cursor<'a> {
    theta: &'a [f64],
    pos: usize,
}

impl Cursor<'_> {
    fn take(&mut self, n: usize) -> &[f64] {
        let s = &self.theta[self.pos..self.pos + n];
        self.pos += n;
        s
    }

    /// Row-major `rows x cols` block.
    fn mat(&mut self, rows: usize, cols: usize) -> Mat {
        let flat = self.take(rows * cols).to_vec();
        flat.chunks(cols).map(|c| c.to_vec()).collect()
    }
}

/// `x * W + b` with `W` stored in x out.
fn affine(x: &[f64], w: &Mat, b: &[f64]) -> Vec<f64> {
    (0..b.len())
        .map(|j| {
            b[j] + x
                .iter()
                .enumerate()
                .map(|(k, xk)| xk * w[k][j])
                .sum::<f64>()
        })
        .collect()
}

/// Loss (BPR mean + L2) of the surrogate in which each gated row equals
/// `(z* - y* + y(theta)) . [L, N]`. With `frozen == None` the expansion
/// point is `theta` itself and the computed `(z*, y*)` are returned.
pub fn oracle_objective(
    spec: &OracleSpec,
    a: &Mat,
    theta: &[f64],
    noise: &[Vec<[f64; 2]>],
    triplets: &[(usize, usize, usize)],
    frozen: Option<&Frozen>,
) -> (f64, Frozen) {
    let (n, d) = (spec.nu + spec.ni, spec.dim);
    let mut cur = Cursor { theta, pos: 0 };
    let e0 = cur.mat(n, d);
    let num_gated = spec.plan.iter().filter(|p| p.1 == OGate::Gated).count();
    let mut gate_params = Vec::new();
    let mut gate_sq = 0.0;
    for _ in 0..num_gated {
        let start = cur.pos;
        let hidden = spec
            .hidden
            .then(|| (cur.mat(2 * d, d), cur.take(d).to_vec()));
        let fan_in = if spec.hidden { d } else { 2 * d };
        let out = (cur.mat(fan_in, 2), cur.take(2).to_vec());
        gate_sq += theta[start..cur.pos].iter().map(|v| v * v).sum::<f64>();
        gate_params.push((hidden, out));
    }
    assert_eq!(cur.pos, theta.len(), "parameter vector length");

    let mut computed = Frozen {
        kink_distance: f64::INFINITY,
        ..Frozen::default()
    };
    let mut gs: Vec<Mat> = vec![e0.clone()];
    let mut n_prev = e0.clone();
    let mut k = 0;
    for &(propagate, gate) in &spec.plan {
        let p = matmul(a, gs.last().unwrap());
        let l = p.clone();
        let nl: Mat = if propagate {
            let m = p
                .iter()
                .flatten()
                .fold(f64::INFINITY, |m, v| m.min(v.abs()));
            computed.kink_distance = computed.kink_distance.min(m);
            p.iter()
                .map(|row| row.iter().map(|&x| phi(x, spec.elu)).collect())
                .collect()
        } else {
            n_prev.clone()
        };
        let g = match gate {
            OGate::Linear => l.clone(),
            OGate::NonLinear => nl.clone(),
            OGate::Gated => {
                let (hidden, (w, b)) = &gate_params[k];
                let mut zs = Vec::new();
                let mut ys = Vec::new();
                let mut rows = Vec::new();
                for v in 0..n {
                    let x: Vec<f64> = l[v].iter().chain(&nl[v]).copied().collect();
                    let h = match hidden {
                        Some((w1, b1)) => {
                            let pre = affine(&x, w1, b1);
                            let m = pre.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
                            computed.kink_distance = computed.kink_distance.min(m);
                            pre.into_iter().map(leaky).collect()
                        }
                        None => x,
                    };
                    let logits = affine(&h, w, b);
                    let s0 = (logits[0] + noise[k][v][0]) / spec.tau;
                    let s1 = (logits[1] + noise[k][v][1]) / spec.tau;
                    let m = s0.max(s1);
                    let (e0v, e1v) = ((s0 - m).exp(), (s1 - m).exp());
                    let y = [e0v / (e0v + e1v), e1v / (e0v + e1v)];
                    let z = if s1 > s0 { [0.0, 1.0] } else { [1.0, 0.0] };
                    let (zf, yf) = match frozen {
                        Some(f) => (f.z[k][v], f.y[k][v]),
                        None => (z, y),
                    };
                    let c0 = zf[0] - yf[0] + y[0];
                    let c1 = zf[1] - yf[1] + y[1];
                    rows.push(
                        (0..d)
                            .map(|j| c0 * l[v][j] + c1 * nl[v][j])
                            .collect::<Vec<f64>>(),
                    );
                    zs.push(z);
                    ys.push(y);
                }
                computed.z.push(zs);
                computed.y.push(ys);
                k += 1;
                rows
            }
        };
        n_prev = nl;
        gs.push(g);
    }

    let score =
        |u: usize, i: usize| BETA * gs.iter().map(|g| dot(&g[u], &g[spec.nu + i])).sum::<f64>();
    let b = triplets.len() as f64;
    let ranking: f64 = triplets
        .iter()
        .map(|&(u, i, j)| softplus_neg(score(u, i) - score(u, j)))
        .sum::<f64>()
        / b;
    let sq = |r: usize| e0[r].iter().map(|v| v * v).sum::<f64>();
    let ego: f64 = triplets
        .iter()
        .map(|&(u, i, j)| sq(u) + sq(spec.nu + i) + sq(spec.nu + j))
        .sum::<f64>()
        / b;
    (ranking + spec.lambda * (ego + gate_sq), computed)
}

/// Relative error with a floor on the denominator.
pub fn rel_err(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

// ---------------------------------------------------------------------------
// Linear GCN reference

/// `[E0, A E0, A^2 E0, ...]` computed with explicit matrix powers.
pub fn linear_layers(a: &Mat, e0: &Mat, layers: usize) -> Vec<Mat> {
    let n = a.len();
    let mut power: Mat = (0..n)
        .map(|r| (0..n).map(|c| if r == c { 1.0 } else { 0.0 }).collect())
        .collect();
    let mut out = Vec::new();
    for _ in 0..=layers {
        out.push(matmul(&power, e0));
        power = matmul(&power, a);
    }
    out
}

pub fn linear_score(layers: &[Mat], nu: usize, u: usize, i: usize) -> f64 {
    BETA * layers.iter().map(|g| dot(&g[u], &g[nu + i])).sum::<f64>()
}

/// Gradient of the mean BPR loss plus batch-ego L2 w.r.t. `E0` for the
/// all-linear model: `sum_l (A^l)^T dG_l`.
pub fn linear_grad(
    a: &Mat,
    e0: &Mat,
    nu: usize,
    triplets: &[(usize, usize, usize)],
    lambda: f64,
) -> Mat {
    let layers = linear_layers(a, e0, 4);
    let (n, d) = (e0.len(), e0[0].len());
    let b = triplets.len() as f64;
    let mut dgs = vec![zeros(n, d); layers.len()];
    for &(u, i, j) in triplets {
        let delta = linear_score(&layers, nu, u, i) - linear_score(&layers, nu, u, j);
        // d/d delta of -ln sigma(delta) = -sigma(-delta)
        let s = -1.0 / (1.0 + delta.exp()) / b;
        for (l, g) in layers.iter().enumerate() {
            for c in 0..d {
                dgs[l][u][c] += s * BETA * (g[nu + i][c] - g[nu + j][c]);
                dgs[l][nu + i][c] += s * BETA * g[u][c];
                dgs[l][nu + j][c] -= s * BETA * g[u][c];
            }
        }
    }
    let mut grad = zeros(n, d);
    let mut power: Mat = (0..n)
        .map(|r| (0..n).map(|c| if r == c { 1.0 } else { 0.0 }).collect())
        .collect();
    for dg in &dgs {
        let contrib = matmul(&transpose(&power), dg);
        for r in 0..n {
            for c in 0..d {
                grad[r][c] += contrib[r][c];
            }
        }
        power = matmul(&power, a);
    }
    for &(u, i, j) in triplets {
        for r in [u, nu + i, nu + j] {
            for c in 0..d {
                grad[r][c] += 2.0 * lambda * e0[r][c] / b;
            }
        }
    }
    grad
}

// ---------------------------------------------------------------------------
// Metrics reference

/// Full stable sort by descending score then ascending index.
pub fn rank_reference(scores: &[f64], excluded: &BTreeSet<usize>, k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len())
        .filter(|i| !excluded.contains(i))
        .collect();
    idx.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap().then(a.cmp(&b)));
    idx.truncate(k);
    idx
}

fn count_hits(ranked: &[usize], relevant: &[usize], k: usize) -> usize {
    let top: BTreeSet<usize> = ranked.iter().take(k).copied().collect();
    let rel: BTreeSet<usize> = relevant.iter().copied().collect();
    top.intersection(&rel).count()
}

pub fn ndcg_reference(ranked: &[usize], relevant: &[usize], k: usize) -> f64 {
    if relevant.is_empty() {
        return 0.0;
    }
    let mut dcg = 0.0;
    for p in 1..=k.min(ranked.len()) {
        if relevant.iter().any(|&r| r == ranked[p - 1]) {
            dcg += 1.0 / ((p + 1) as f64).log2();
        }
    }
    let mut idcg = 0.0;
    for p in 1..=k.min(relevant.len()) {
        idcg += 1.0 / ((p + 1) as f64).log2();
    }
    dcg / idcg
}

pub fn recall_reference(ranked: &[usize], relevant: &[usize], k: usize) -> f64 {
    if relevant.is_empty() {
        return 0.0;
    }
    count_hits(ranked, relevant, k) as f64 / relevant.len() as f64
}

pub fn precision_reference(ranked: &[usize], relevant: &[usize], k: usize) -> f64 {
    count_hits(ranked, relevant, k) as f64 / k as f64
}

// ---------------------------------------------------------------------------
// Centrality reference

pub fn random_simple_graph(n: usize, p: f64, rng: &mut Rng) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if rng.bernoulli(p) {
                edges.push((a, b));
            }
        }
    }
    edges
}

fn adjacency_lists(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    adj
}

/// Distances and shortest-path counts between all pairs, by BFS from each node.
fn all_pairs_paths(n: usize, edges: &[(usize, usize)]) -> (Vec<Vec<usize>>, Vec<Vec<f64>>) {
    let adj = adjacency_lists(n, edges);
    let mut dist = vec![vec![usize::MAX; n]; n];
    let mut count = vec![vec![0.0; n]; n];
    for s in 0..n {
        dist[s][s] = 0;
        count[s][s] = 1.0;
        let mut q = VecDeque::from([s]);
        while let Some(v) = q.pop_front() {
            for &w in &adj[v] {
                if dist[s][w] == usize::MAX {
                    dist[s][w] = dist[s][v] + 1;
                    q.push_back(w);
                }
                if dist[s][w] == dist[s][v] + 1 {
                    count[s][w] += count[s][v];
                }
            }
        }
    }
    (dist, count)
}

/// Sum over unordered pairs `{s, t}` of the share of shortest s-t paths
/// through each node, normalized by `2 / ((n-1)(n-2))`.
pub fn betweenness_reference(n: usize, edges: &[(usize, usize)]) -> Vec<f64> {
    if n <= 2 {
        return vec![0.0; n];
    }
    let (dist, count) = all_pairs_paths(n, edges);
    let mut out = vec![0.0; n];
    for s in 0..n {
        for t in s + 1..n {
            if dist[s][t] == usize::MAX {
                continue;
            }
            for v in 0..n {
                if v == s || v == t || dist[s][v] == usize::MAX || dist[v][t] == usize::MAX {
                    continue;
                }
                if dist[s][v] + dist[v][t] == dist[s][t] {
                    out[v] += count[s][v] * count[v][t] / count[s][t];
                }
            }
        }
    }
    let norm = 2.0 / ((n - 1) * (n - 2)) as f64;
    out.into_iter().map(|b| b * norm).collect()
}

/// Floyd-Warshall distances, then `(n_v - 1)/sum d * (n_v - 1)/(n - 1)`.
pub fn closeness_reference(n: usize, edges: &[(usize, usize)]) -> Vec<f64> {
    const INF: usize = usize::MAX / 4;
    let mut d = vec![vec![INF; n]; n];
    for (v, row) in d.iter_mut().enumerate() {
        row[v] = 0;
    }
    for &(a, b) in edges {
        d[a][b] = 1;
        d[b][a] = 1;
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if d[i][k] + d[k][j] < d[i][j] {
                    d[i][j] = d[i][k] + d[k][j];
                }
            }
        }
    }
    (0..n)
        .map(|v| {
            let reach: Vec<usize> = d[v].iter().copied().filter(|&x| x < INF).collect();
            let total: usize = reach.iter().sum();
            if total == 0 {
                return 0.0;
            }
            let nv = (reach.len() - 1) as f64;
            nv / total as f64 * nv / (n - 1) as f64
        })
        .collect()
}

/// Dense power iteration with a column-stochastic transition matrix; dangling
/// columns are uniform.
pub fn pagerank_reference(n: usize, edges: &[(usize, usize)], damping: f64) -> Vec<f64> {
    let adj = adjacency_lists(n, edges);
    let mut m = zeros(n, n);
    for u in 0..n {
        if adj[u].is_empty() {
            for row in m.iter_mut() {
                row[u] = 1.0 / n as f64;
            }
        } else {
            for &v in &adj[u] {
                m[v][u] += 1.0 / adj[u].len() as f64;
            }
        }
    }
    let mut x = vec![1.0 / n as f64; n];
    for _ in 0..100_000 {
        let next: Vec<f64> = (0..n)
            .map(|v| (1.0 - damping) / n as f64 + damping * dot(&m[v], &x))
            .collect();
        let change: f64 = next.iter().zip(&x).map(|(a, b)| (a - b).abs()).sum();
        x = next;
        if change < 1e-15 {
            break;
        }
    }
    x
}

// ---------------------------------------------------------------------------
// Graph pipeline reference

/// Repeatedly drops every pair whose user or item has fewer than `k` pairs.
pub fn kcore_reference(pairs: &BTreeSet<(String, String)>, k: usize) -> BTreeSet<(String, String)> {
    let mut cur = pairs.clone();
    loop {
        let mut du = std::collections::BTreeMap::<&str, usize>::new();
        let mut di = std::collections::BTreeMap::<&str, usize>::new();
        for (u, i) in &cur {
            *du.entry(u).or_default() += 1;
            *di.entry(i).or_default() += 1;
        }
        let next: BTreeSet<(String, String)> = cur
            .iter()
            .filter(|(u, i)| du[u.as_str()] >= k && di[i.as_str()] >= k)
            .cloned()
            .collect();
        if next.len() == cur.len() {
            return next;
        }
        cur = next;
    }
}

// ---------------------------------------------------------------------------
// Finite-difference driver

use hmlet::graph::build_adjacency;
use hmlet::model::{
    forward, init_params, layer_plan, ForwardMode, GatedOutput, ModelConfig, VariantName,
};
use hmlet::numerics::Activation;
use hmlet::trainer::{loss_and_grads, Triplet};

pub struct GradCheck {
    pub coords: usize,
    pub max_rel_err: f64,
    /// |oracle loss - library loss| at the expansion point.
    pub loss_gap: f64,
    pub worst: (usize, f64, f64),
}

/// Smallest |aggregate| that a perturbation of size `h` must not cross.
const KINK_MARGIN: f64 = 1e-4;

/// Central differences of the oracle surrogate against the library's
/// analytic gradient on a random 4x4 graph with D = 3.
pub fn gradient_check(
    variant: VariantName,
    hidden: bool,
    elu: bool,
    seed: u64,
    h: f64,
    floor: f64,
) -> GradCheck {
    let (nu, ni, dim, tau, lambda) = (4, 4, 3, 0.7, 1e-2);
    let mut rng = Rng::seed_from_u64(seed);
    for _attempt in 0..100 {
        let graph = random_graph(nu, ni, &mut rng);
        let mut config = ModelConfig::new(layer_plan(variant));
        config.hidden_gate = hidden;
        config.activation = if elu {
            Activation::Elu
        } else {
            Activation::LeakyRelu
        };
        let params = init_params(nu + ni, dim, &config, &mut rng).unwrap();
        let adj = build_adjacency(&graph).unwrap();
        let trace = forward(
            &adj,
            &params,
            &config,
            tau,
            ForwardMode::Train,
            Some(&mut rng),
        )
        .unwrap();

        let noise: Vec<Vec<[f64; 2]>> = trace
            .layers()
            .iter()
            .filter_map(|t| match &t.gated {
                GatedOutput::Mixed { gates, .. } => Some(
                    gates
                        .iter()
                        .map(|g| g.sample.as_ref().expect("train-mode sample").noise)
                        .collect(),
                ),
                _ => None,
            })
            .collect();

        let trip = all_triplets(&graph, &mut rng);
        let lib_trip: Vec<Triplet> = trip
            .iter()
            .map(|&(user, pos, neg)| Triplet { user, pos, neg })
            .collect();
        let (loss, grads) = loss_and_grads(&trace, &adj, &params, &lib_trip, lambda).unwrap();
        let theta: Vec<f64> = params.tensors().concat();
        let analytic: Vec<f64> = grads.tensors().concat();

        let spec = OracleSpec {
            nu,
            ni,
            dim,
            plan: oracle_plan(variant.as_str()),
            hidden,
            elu,
            tau,
            lambda,
        };
        let a = dense_normalized_adjacency(&graph);
        let (f0, frozen) = oracle_objective(&spec, &a, &theta, &noise, &trip, None);
        if frozen.kink_distance < KINK_MARGIN {
            continue;
        }
        let mut out = GradCheck {
            coords: theta.len(),
            max_rel_err: 0.0,
            loss_gap: (f0 - loss.total).abs(),
            worst: (0, 0.0, 0.0),
        };
        let mut probe = theta.clone();
        for k in 0..theta.len() {
            probe[k] = theta[k] + h;
            let fp = oracle_objective(&spec, &a, &probe, &noise, &trip, Some(&frozen)).0;
            probe[k] = theta[k] - h;
            let fm = oracle_objective(&spec, &a, &probe, &noise, &trip, Some(&frozen)).0;
            probe[k] = theta[k];
            let fd = (fp - fm) / (2.0 * h);
            let err = rel_err(analytic[k], fd, floor);
            if err > out.max_rel_err {
                out.max_rel_err = err;
                out.worst = (k, analytic[k], fd);
            }
        }
        return out;
    }
    panic!("no instance away from activation kinks");
}
