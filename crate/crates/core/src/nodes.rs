//! Well-spread node sets: generators, gap diagnostics and layer splitting.
//!
//! A node set is stored as the nodes of one period cell `[lo, lo + P)` and is
//! identified with its periodic extension `Λ + Pℤ^d`.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::aniso::{mat_vec, ExpansiveDilation};
use crate::error::{Error, Result};

/// Default probe grid size per axis for the two-dimensional gap.
pub const DEFAULT_PROBE: usize = 2048;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodicBox {
    pub lo: Vec<f64>,
    pub size: Vec<f64>,
}

impl PeriodicBox {
    pub fn new(lo: Vec<f64>, size: Vec<f64>) -> Result<Self> {
        if lo.len() != size.len() || lo.is_empty() || lo.len() > 2 {
            return Err(Error::InvalidInput("box must be 1- or 2-dimensional".into()));
        }
        if size.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
            return Err(Error::InvalidInput("box sides must be positive".into()));
        }
        Ok(Self { lo, size })
    }

    /// Centered cube `[-L/2, L/2)^d`.
    pub fn centered(d: usize, side: f64) -> Result<Self> {
        Self::new(vec![-side / 2.0; d], vec![side; d])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn volume(&self) -> f64 {
        self.size.iter().product()
    }

    /// Representative of `x` inside the box.
    pub fn wrap(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.lo.iter().zip(&self.size))
            .map(|(v, (lo, p))| {
                let mut t = (v - lo).rem_euclid(*p);
                if t >= *p {
                    t -= p;
                }
                lo + t
            })
            .collect()
    }

    /// Euclidean distance in the periodic metric.
    pub fn distance(&self, x: &[f64], y: &[f64]) -> f64 {
        x.iter()
            .zip(y)
            .zip(&self.size)
            .map(|((a, b), p)| {
                let t = (a - b).rem_euclid(*p);
                let t = t.min(p - t);
                t * t
            })
            .sum::<f64>()
            .sqrt()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Generator {
    Lattice {
        #[serde(default = "one")]
        spacing: f64,
    },
    Jittered {
        delta: f64,
        #[serde(default = "one")]
        spacing: f64,
    },
    PoissonThinned {
        r_min: f64,
        r_max: f64,
    },
}

fn one() -> f64 {
    1.0
}

/// Seeded node generation inside `domain`.
pub fn generate(kind: &Generator, domain: &PeriodicBox, seed: u64) -> Result<Vec<Vec<f64>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match *kind {
        Generator::Lattice { spacing } => lattice(domain, spacing),
        Generator::Jittered { delta, spacing } => {
            if !(0.0..0.5).contains(&delta) {
                return Err(Error::InvalidInput(format!("jitter {delta} must lie in [0, 1/2)")));
            }
            let base = lattice(domain, spacing)?;
            Ok(base
                .into_iter()
                .map(|p| {
                    let moved: Vec<f64> = p
                        .iter()
                        .map(|v| v + spacing * rng.random_range(-delta..=delta))
                        .collect();
                    domain.wrap(&moved)
                })
                .collect())
        }
        Generator::PoissonThinned { r_min, r_max } => poisson_thinned(domain, r_min, r_max, &mut rng),
    }
}

fn lattice(domain: &PeriodicBox, spacing: f64) -> Result<Vec<Vec<f64>>> {
    if !(spacing > 0.0) {
        return Err(Error::InvalidInput("lattice spacing must be positive".into()));
    }
    let mut axes = Vec::new();
    for (lo, p) in domain.lo.iter().zip(&domain.size) {
        let cells = p / spacing;
        if (cells - cells.round()).abs() > 1e-9 {
            return Err(Error::InvalidInput(format!(
                "box side {p} is not a multiple of the spacing {spacing}"
            )));
        }
        let first = (lo / spacing - 1e-9).ceil() as i64;
        let count = cells.round() as i64;
        axes.push((first..first + count).map(|k| k as f64 * spacing).collect::<Vec<_>>());
    }
    Ok(match axes.len() {
        1 => axes[0].iter().map(|&x| vec![x]).collect(),
        _ => axes[0]
            .iter()
            .flat_map(|&x| axes[1].iter().map(move |&y| vec![x, y]))
            .collect(),
    })
}

fn poisson_thinned(
    domain: &PeriodicBox,
    r_min: f64,
    r_max: f64,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Vec<f64>>> {
    if !(r_min > 0.0 && r_min < r_max) {
        return Err(Error::InvalidInput("poisson thinning needs 0 < r_min < r_max".into()));
    }
    if domain.size.iter().any(|p| *p < 2.0 * r_max) {
        return Err(Error::InvalidInput("box too small for r_max".into()));
    }
    let d = domain.dim();
    let mut nodes: Vec<Vec<f64>> = Vec::new();
    let attempts = (30.0 * domain.volume() / r_min.powi(d as i32)).ceil() as usize;
    for _ in 0..attempts {
        let p: Vec<f64> = domain
            .lo
            .iter()
            .zip(&domain.size)
            .map(|(lo, s)| lo + rng.random_range(0.0..*s))
            .collect();
        if nodes.iter().all(|q| domain.distance(&p, q) >= r_min) {
            nodes.push(p);
        }
    }
    // fill holes: the farthest point is at distance > r_max > r_min from every node
    let probe = if d == 1 { 0 } else { 256 };
    loop {
        let (g, far) = farthest_point(&nodes, domain, probe)?;
        if g <= r_max {
            break;
        }
        nodes.push(far);
    }
    Ok(nodes)
}

/// Gap together with the resolution of the probe used to measure it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub gap: f64,
    pub resolution: f64,
}

/// `ρ(Λ) = sup_x min_λ |x - λ|` over the periodic box.
pub fn gap(nodes: &[Vec<f64>], domain: &PeriodicBox) -> Result<GapReport> {
    gap_with_probe(nodes, domain, DEFAULT_PROBE)
}

pub fn gap_with_probe(nodes: &[Vec<f64>], domain: &PeriodicBox, probe: usize) -> Result<GapReport> {
    let (g, _) = farthest_point(nodes, domain, probe)?;
    let resolution = if domain.dim() == 1 {
        0.0
    } else {
        let h: f64 = domain.size.iter().map(|s| (s / probe as f64).powi(2)).sum::<f64>().sqrt();
        h / 2.0
    };
    Ok(GapReport { gap: g, resolution })
}

fn farthest_point(
    nodes: &[Vec<f64>],
    domain: &PeriodicBox,
    probe: usize,
) -> Result<(f64, Vec<f64>)> {
    if nodes.is_empty() {
        return Err(Error::InvalidInput("node set is empty".into()));
    }
    if domain.dim() == 1 {
        let p = domain.size[0];
        let mut xs: Vec<f64> = nodes.iter().map(|v| domain.wrap(v)[0]).collect();
        xs.sort_by(f64::total_cmp);
        let mut best = (0.0, xs[0]);
        for i in 0..xs.len() {
            let next = if i + 1 < xs.len() { xs[i + 1] } else { xs[0] + p };
            let half = (next - xs[i]) / 2.0;
            if half > best.0 {
                best = (half, xs[i] + half);
            }
        }
        return Ok((best.0, domain.wrap(&[best.1])));
    }
    let probe = probe.max(8);
    let buckets = BucketGrid::new(nodes, domain);
    let hx = domain.size[0] / probe as f64;
    let hy = domain.size[1] / probe as f64;
    let mut best = (0.0, vec![domain.lo[0], domain.lo[1]]);
    for i in 0..probe {
        for k in 0..probe {
            let x = [domain.lo[0] + (i as f64 + 0.5) * hx, domain.lo[1] + (k as f64 + 0.5) * hy];
            let dmin = buckets.nearest(&x);
            if dmin > best.0 {
                best = (dmin, x.to_vec());
            }
        }
    }
    Ok(best)
}

struct BucketGrid<'a> {
    domain: &'a PeriodicBox,
    nb: [usize; 2],
    cells: Vec<Vec<[f64; 2]>>,
}

impl<'a> BucketGrid<'a> {
    fn new(nodes: &[Vec<f64>], domain: &'a PeriodicBox) -> Self {
        let per = (nodes.len() as f64).sqrt().ceil().max(1.0) as usize;
        let nb = [per, per];
        let mut cells = vec![Vec::new(); nb[0] * nb[1]];
        for v in nodes {
            let w = domain.wrap(v);
            let b = Self::bucket_of(domain, nb, &w);
            cells[b[0] * nb[1] + b[1]].push([w[0], w[1]]);
        }
        Self { domain, nb, cells }
    }

    fn bucket_of(domain: &PeriodicBox, nb: [usize; 2], x: &[f64]) -> [usize; 2] {
        let f = |a: usize| {
            let t = ((x[a] - domain.lo[a]) / domain.size[a] * nb[a] as f64).floor() as i64;
            t.clamp(0, nb[a] as i64 - 1) as usize
        };
        [f(0), f(1)]
    }

    fn nearest(&self, x: &[f64; 2]) -> f64 {
        let b = Self::bucket_of(self.domain, self.nb, x);
        let bw = (self.domain.size[0] / self.nb[0] as f64).min(self.domain.size[1] / self.nb[1] as f64);
        let maxring = self.nb[0].max(self.nb[1]);
        let mut best = f64::INFINITY;
        for ring in 0..=maxring {
            if (ring as f64 - 1.0) * bw > best {
                break;
            }
            let r = ring as i64;
            for di in -r..=r {
                for dk in -r..=r {
                    if di.abs() != r && dk.abs() != r {
                        continue;
                    }
                    let bi = (b[0] as i64 + di).rem_euclid(self.nb[0] as i64) as usize;
                    let bk = (b[1] as i64 + dk).rem_euclid(self.nb[1] as i64) as usize;
                    for p in &self.cells[bi * self.nb[1] + bk] {
                        best = best.min(self.domain.distance(x, p));
                    }
                }
            }
        }
        best
    }
}

/// Layer membership of one node: cube index and layer number (1-based).
pub type LayerMap = BTreeMap<Vec<i64>, Vec<f64>>;

/// Node set of one period cell with gap, separation count and layers.
#[derive(Clone, Debug)]
pub struct NodeSet {
    nodes: Vec<Vec<f64>>,
    domain: PeriodicBox,
    gap: GapReport,
    max_per_cube: usize,
    layers: Vec<LayerMap>,
}

/// Node of the periodic extension seen at one scale on the signal box.
#[derive(Clone, Debug, PartialEq)]
pub struct Representative {
    pub position: Vec<f64>,
    /// Index of the cell node it is a translate of.
    pub cell: usize,
    /// `position - cell node`, an element of the period lattice.
    pub shift: Vec<f64>,
}

/// Canonical splitting: `k = floor(λ)`, then lexicographic order inside each cube.
pub fn split(nodes: &[Vec<f64>], domain: &PeriodicBox) -> Result<NodeSet> {
    split_with_probe(nodes, domain, DEFAULT_PROBE)
}

pub fn split_with_probe(nodes: &[Vec<f64>], domain: &PeriodicBox, probe: usize) -> Result<NodeSet> {
    let d = domain.dim();
    if nodes.iter().any(|v| v.len() != d || v.iter().any(|x| !x.is_finite())) {
        return Err(Error::InvalidInput("node dimension mismatch or non-finite node".into()));
    }
    let nodes: Vec<Vec<f64>> = nodes.iter().map(|v| domain.wrap(v)).collect();
    let gap = gap_with_probe(&nodes, domain, probe)?;
    let mut cubes: BTreeMap<Vec<i64>, Vec<Vec<f64>>> = BTreeMap::new();
    for v in &nodes {
        cubes.entry(floor_index(v)).or_default().push(v.clone());
    }
    let max_per_cube = cubes.values().map(|c| c.len()).max().unwrap_or(0);
    let mut layers = vec![LayerMap::new(); max_per_cube];
    for (k, mut members) in cubes {
        members.sort_by(|a, b| lex_cmp(a, b));
        for (s, v) in members.into_iter().enumerate() {
            layers[s].insert(k.clone(), v);
        }
    }
    let mut nodes = nodes;
    nodes.sort_by(|a, b| lex_cmp(a, b));
    Ok(NodeSet { nodes, domain: domain.clone(), gap, max_per_cube, layers })
}

fn floor_index(v: &[f64]) -> Vec<i64> {
    v.iter().map(|x| x.floor() as i64).collect()
}

fn lex_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            std::cmp::Ordering::Equal => continue,
            o => return o,
        }
    }
    std::cmp::Ordering::Equal
}

impl NodeSet {
    pub fn nodes(&self) -> &[Vec<f64>] {
        &self.nodes
    }

    pub fn domain(&self) -> &PeriodicBox {
        &self.domain
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn period(&self) -> &[f64] {
        &self.domain.size
    }

    pub fn gap(&self) -> f64 {
        self.gap.gap
    }

    pub fn gap_report(&self) -> GapReport {
        self.gap
    }

    pub fn max_per_cube(&self) -> usize {
        self.max_per_cube
    }

    pub fn layers(&self) -> &[LayerMap] {
        &self.layers
    }

    /// Nodes recovered from the layers, sorted.
    pub fn reassemble(&self) -> Vec<Vec<f64>> {
        let mut out: Vec<Vec<f64>> = self.layers.iter().flat_map(|l| l.values().cloned()).collect();
        out.sort_by(|a, b| lex_cmp(a, b));
        out
    }

    /// Smallest pairwise distance in the periodic metric.
    pub fn min_separation(&self) -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..self.nodes.len() {
            for k in i + 1..self.nodes.len() {
                best = best.min(self.domain.distance(&self.nodes[i], &self.nodes[k]));
            }
        }
        best
    }

    /// All nodes of the periodic extension with `|λ - center| <= radius`, as
    /// `(position, cell index)` in deterministic order.
    pub fn nodes_within(&self, center: &[f64], radius: f64) -> Vec<(Vec<f64>, usize)> {
        let d = self.dim();
        let p = &self.domain.size;
        let mut out = Vec::new();
        for (ci, c) in self.nodes.iter().enumerate() {
            let range = |a: usize| {
                let lo = ((center[a] - radius - c[a]) / p[a]).floor() as i64;
                let hi = ((center[a] + radius - c[a]) / p[a]).ceil() as i64;
                lo..=hi
            };
            let mut push = |n: &[i64]| {
                let pos: Vec<f64> = (0..d).map(|a| c[a] + n[a] as f64 * p[a]).collect();
                let dist: f64 = pos.iter().zip(center).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
                if dist <= radius {
                    out.push((pos, ci));
                }
            };
            if d == 1 {
                for n in range(0) {
                    push(&[n]);
                }
            } else {
                for n0 in range(0) {
                    for n1 in range(1) {
                        push(&[n0, n1]);
                    }
                }
            }
        }
        out.sort_by(|a, b| lex_cmp(&a.0, &b.0));
        out
    }

    /// Cube index and 1-based layer of a node of the periodic extension.
    pub fn layer_of(&self, lambda: &[f64]) -> Result<(Vec<i64>, usize)> {
        let k = floor_index(lambda);
        let center: Vec<f64> = k.iter().map(|v| *v as f64 + 0.5).collect();
        let radius = (self.dim() as f64).sqrt() / 2.0 + 1e-9;
        let mut members: Vec<Vec<f64>> = self
            .nodes_within(&center, radius)
            .into_iter()
            .map(|(p, _)| p)
            .filter(|p| floor_index(p) == k)
            .collect();
        members.sort_by(|a, b| lex_cmp(a, b));
        members
            .iter()
            .position(|p| p.iter().zip(lambda).all(|(a, b)| (a - b).abs() < 1e-9))
            .map(|s| (k, s + 1))
            .ok_or_else(|| Error::Internal(format!("node {lambda:?} is not covered by the splitting")))
    }

    /// Nodes `λ` with `A^j λ ∈ [-T/2, T/2)^d`: the translates that index scale-`j`
    /// atoms on a periodic signal box of side `T`.
    pub fn representatives(&self, a: &ExpansiveDilation, j: i32, box_size: f64) -> Result<Vec<Representative>> {
        let d = self.dim();
        if a.dim() != d {
            return Err(Error::InvalidInput("dilation and node dimensions differ".into()));
        }
        let inv = a.power_ref(-j)?;
        // the box lattice A^{-j} T ℤ^d must consist of periods of Λ
        for r in 0..d {
            for c in 0..d {
                let v = inv[(r, c)] * box_size / self.domain.size[r];
                if (v - v.round()).abs() > 1e-9 {
                    return Err(Error::InvalidInput(format!(
                        "signal box {box_size} is incompatible with the node period at scale {j}"
                    )));
                }
            }
        }
        let fwd = a.power_ref(j)?;
        let corners: Vec<Vec<f64>> = (0..1usize << d)
            .map(|m| {
                let u: Vec<f64> =
                    (0..d).map(|i| if (m >> i) & 1 == 1 { box_size / 2.0 } else { -box_size / 2.0 }).collect();
                mat_vec(inv, &u)
            })
            .collect();
        let radius = corners
            .iter()
            .map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
            + 1e-9;
        let mut reps = Vec::new();
        for (pos, ci) in self.nodes_within(&vec![0.0; d], radius) {
            let img = mat_vec(fwd, &pos);
            let inside = img.iter().all(|x| {
                let u = (x + box_size / 2.0) / box_size;
                (-1e-9..1.0 - 1e-9).contains(&u)
            });
            if inside {
                let shift = pos.iter().zip(&self.nodes[ci]).map(|(a, b)| a - b).collect();
                reps.push(Representative { position: pos, cell: ci, shift });
            }
        }
        Ok(reps)
    }
}

/// One node per row, `d` columns, optional header line.
pub fn read_nodes_csv(r: impl Read, d: usize) -> Result<Vec<Vec<f64>>> {
    let mut text = String::new();
    let mut r = r;
    r.read_to_string(&mut text)?;
    let mut out = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> = line.split(',').map(|s| s.trim().parse::<f64>()).collect();
        match parsed {
            Ok(v) if v.len() == d => out.push(v),
            Ok(v) => {
                return Err(Error::Parse(format!("line {}: expected {d} columns, got {}", ln + 1, v.len())))
            }
            Err(_) if ln == 0 => continue,
            Err(e) => return Err(Error::Parse(format!("line {}: {e}", ln + 1))),
        }
    }
    Ok(out)
}

pub fn write_nodes_csv(nodes: &[Vec<f64>], mut w: impl Write) -> Result<()> {
    let d = nodes.first().map_or(1, |v| v.len());
    let head: Vec<String> = ["x", "y"].iter().take(d).map(|s| s.to_string()).collect();
    writeln!(w, "{}", head.join(","))?;
    for v in nodes {
        let row: Vec<String> = v.iter().map(|x| format!("{x:e}")).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_box(d: usize, side: f64) -> PeriodicBox {
        PeriodicBox::centered(d, side).unwrap()
    }

    #[test]
    fn integer_lattice_gap() {
        let b = unit_box(1, 8.0);
        let nodes = generate(&Generator::Lattice { spacing: 1.0 }, &b, 0).unwrap();
        assert_eq!(nodes, (-4..4).map(|k| vec![k as f64]).collect::<Vec<_>>());
        assert!((gap(&nodes, &b).unwrap().gap - 0.5).abs() < 1e-15);
    }

    #[test]
    fn single_node_gap() {
        let b = PeriodicBox::new(vec![-1.0], vec![2.0]).unwrap();
        assert!((gap(&[vec![0.0]], &b).unwrap().gap - 1.0).abs() < 1e-15);
        assert!(matches!(gap(&[], &b), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn planar_lattice_gap() {
        let b = unit_box(2, 4.0);
        let nodes = generate(&Generator::Lattice { spacing: 1.0 }, &b, 0).unwrap();
        let r = gap_with_probe(&nodes, &b, 256).unwrap();
        let exact = 0.5f64.sqrt();
        assert!(r.gap <= exact + 1e-12 && r.gap + r.resolution >= exact - 1e-12);
    }

    #[test]
    fn jittered_is_reproducible() {
        let b = unit_box(1, 16.0);
        let kind = Generator::Jittered { delta: 0.2, spacing: 1.0 };
        assert_eq!(generate(&kind, &b, 7).unwrap(), generate(&kind, &b, 7).unwrap());
        assert_ne!(generate(&kind, &b, 7).unwrap(), generate(&kind, &b, 8).unwrap());
        assert!(generate(&Generator::Jittered { delta: 0.5, spacing: 1.0 }, &b, 0).is_err());
    }

    #[test]
    fn split_small_cube() {
        let b = PeriodicBox::new(vec![0.0], vec![1.0]).unwrap();
        let ns = split(&[vec![0.5], vec![0.0], vec![0.25]], &b).unwrap();
        assert_eq!(ns.max_per_cube(), 3);
        for (s, want) in [0.0, 0.25, 0.5].iter().enumerate() {
            assert_eq!(ns.layers()[s][&vec![0]], vec![*want]);
        }
        assert_eq!(ns.layer_of(&[0.25]).unwrap(), (vec![0], 2));
        assert_eq!(ns.layer_of(&[3.25]).unwrap(), (vec![3], 2));
        assert!(matches!(ns.layer_of(&[0.3]), Err(Error::Internal(_))));
    }

    #[test]
    fn split_integer_lattice() {
        let b = unit_box(2, 6.0);
        let nodes = generate(&Generator::Lattice { spacing: 1.0 }, &b, 0).unwrap();
        let ns = split(&nodes, &b).unwrap();
        assert_eq!(ns.max_per_cube(), 1);
        for (k, v) in &ns.layers()[0] {
            assert_eq!(k.iter().map(|x| *x as f64).collect::<Vec<_>>(), *v);
        }
    }

    #[test]
    fn nodes_within_periodic() {
        let b = PeriodicBox::new(vec![0.0], vec![2.0]).unwrap();
        let ns = split(&[vec![0.5], vec![1.5]], &b).unwrap();
        let near: Vec<f64> = ns.nodes_within(&[10.0], 1.0).into_iter().map(|(p, _)| p[0]).collect();
        assert_eq!(near, vec![9.5, 10.5]);
    }

    #[test]
    fn representatives_cover_box() {
        let b = PeriodicBox::new(vec![-2.0], vec![4.0]).unwrap();
        let nodes = generate(&Generator::Jittered { delta: 0.16, spacing: 0.25 }, &b, 3).unwrap();
        let ns = split(&nodes, &b).unwrap();
        let a = ExpansiveDilation::scalar(2.0).unwrap();
        for j in -3..=3 {
            let reps = ns.representatives(&a, j, 32.0).unwrap();
            assert_eq!(reps.len(), (16.0 * 8.0 * 2f64.powi(-j)) as usize);
            for r in &reps {
                let x = 2f64.powi(j) * r.position[0];
                assert!((-16.0 - 1e-9..16.0).contains(&x));
            }
        }
        assert!(ns.representatives(&a, 4, 32.0).is_err());
    }

    #[test]
    fn csv_roundtrip() {
        let nodes = vec![vec![0.5, -1.25], vec![3.0, 0.0]];
        let mut buf = Vec::new();
        write_nodes_csv(&nodes, &mut buf).unwrap();
        assert_eq!(read_nodes_csv(&buf[..], 2).unwrap(), nodes);
        assert!(read_nodes_csv(&b"1,2,3\n"[..], 2).is_err());
    }
}
