//! Box counting for lattice paths, mass-distribution and Hölder checks, and
//! the coarse-graining toolkit: good cubes, good sets and connected-set
//! counts in the renormalised graph.
//!
//! Cube tilings are anchored at the multiples of the side length and are
//! half-open: the point `x` lies in the tile with label `floor(x / side)`.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::graph::{LrpGraph, Neighbourhood};
use crate::kernel::ModelConfig;
use crate::lattice::Lattice;
use crate::metric::{distance_field, distance_masked, Region, UNREACHED};
use crate::rng::{stream_id, RngStream};
use crate::sampler::GraphSampler;
use crate::stats;

/// Coordinates of the vertices along a path.
pub fn path_coords(lattice: &Lattice, path: &[usize]) -> Vec<Vec<i64>> {
    path.iter().map(|&v| lattice.coords(v)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxCover {
    /// Tile side δL in lattice units.
    pub side: f64,
    /// Offset of the tiling anchor.
    pub offset: Vec<f64>,
    pub labels: BTreeSet<Vec<i64>>,
}

impl BoxCover {
    pub fn count(&self) -> usize {
        self.labels.len()
    }
}

fn tile_label(x: &[i64], side: f64, offset: &[f64]) -> Vec<i64> {
    x.iter()
        .zip(offset)
        .map(|(&c, &o)| ((c as f64 - o) / side).floor() as i64)
        .collect()
}

/// Tiles of side `side` (anchored at the origin) hit by the path.
pub fn box_count(path: &[Vec<i64>], side: f64) -> Result<BoxCover> {
    let d = path.first().map_or(0, Vec::len);
    box_count_with_offset(path, side, &vec![0.0; d])
}

pub fn box_count_with_offset(path: &[Vec<i64>], side: f64, offset: &[f64]) -> Result<BoxCover> {
    if path.is_empty() {
        return Err(Error::Empty("path"));
    }
    if !(side >= 1.0) {
        return Err(invalid(
            "side",
            "tile side must be at least one lattice unit",
        ));
    }
    let labels = path.iter().map(|x| tile_label(x, side, offset)).collect();
    Ok(BoxCover {
        side,
        offset: offset.to_vec(),
        labels,
    })
}

/// One-scale Hausdorff content estimate Σ r^Δ over the cover, with tile
/// diameters measured relative to the macroscopic length `l`.
pub fn hausdorff_content(cover: &BoxCover, l: f64, delta_exp: f64) -> f64 {
    let d = cover.offset.len() as f64;
    cover.count() as f64 * (cover.side * d.sqrt() / l).powf(delta_exp)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimFit {
    /// (log(L/side), log N) per scale.
    pub points: Vec<(f64, f64)>,
    pub dim_hat: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub const MIN_SCALES: usize = 4;

/// Least-squares slope of log N against log(L/side).
pub fn fit_dimension(covers: &[BoxCover], l: f64) -> Result<DimFit> {
    if covers.len() < MIN_SCALES {
        return Err(Error::DegenerateFit("need at least four scales"));
    }
    let mut sides: Vec<f64> = covers.iter().map(|c| c.side).collect();
    sides.sort_by(f64::total_cmp);
    if sides.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::DegenerateFit("repeated scale"));
    }
    let points: Vec<(f64, f64)> = covers
        .iter()
        .map(|c| ((l / c.side).ln(), (c.count() as f64).ln()))
        .collect();
    let x: Vec<f64> = points.iter().map(|p| p.0).collect();
    let y: Vec<f64> = points.iter().map(|p| p.1).collect();
    let fit = stats::ols(&x, &y)?;
    Ok(DimFit {
        points,
        dim_hat: fit.slope,
        intercept: fit.intercept,
        r_squared: fit.r_squared,
    })
}

/// Box-counting dimension of a path over tile sides `l / 2^k`.
pub fn path_dimension(path: &[Vec<i64>], l: f64, ks: &[u32]) -> Result<DimFit> {
    let covers = ks
        .iter()
        .map(|&k| box_count(path, l / f64::from(1u32 << k)))
        .collect::<Result<Vec<_>>>()?;
    fit_dimension(&covers, l)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MassReport {
    pub boxes: usize,
    pub passed: usize,
    /// Largest ζ(V) / (C (diam V / L)^Δ) over all boxes.
    pub max_ratio: f64,
    /// Σ ζ(V) per scale (always 1).
    pub total_mass: Vec<f64>,
}

impl MassReport {
    pub fn pass_rate(&self) -> f64 {
        self.passed as f64 / self.boxes.max(1) as f64
    }
}

/// ζ(V) is the fraction of the path's vertices lying in tile V. Checks
/// ζ(V) ≤ C (diam V / L)^Δ for every tile of every listed side, with
/// diam V = side·√d.
pub fn mass_distribution_check(
    path: &[Vec<i64>],
    sides: &[f64],
    l: f64,
    delta_exp: f64,
    c: f64,
) -> Result<MassReport> {
    if path.is_empty() {
        return Err(Error::Empty("path"));
    }
    let d = path[0].len();
    let offset = vec![0.0; d];
    let total = path.len() as f64;
    let mut report = MassReport {
        boxes: 0,
        passed: 0,
        max_ratio: 0.0,
        total_mass: Vec::new(),
    };
    for &side in sides {
        if !(side >= 1.0) {
            return Err(invalid(
                "side",
                "tile side must be at least one lattice unit",
            ));
        }
        let mut mass: HashMap<Vec<i64>, usize> = HashMap::new();
        for x in path {
            *mass.entry(tile_label(x, side, &offset)).or_default() += 1;
        }
        let bound = c * (side * (d as f64).sqrt() / l).powf(delta_exp);
        let mut sum = 0.0;
        for &m in mass.values() {
            let zeta = m as f64 / total;
            sum += zeta;
            let ratio = zeta / bound;
            report.boxes += 1;
            if ratio <= 1.0 {
                report.passed += 1;
            }
            report.max_ratio = report.max_ratio.max(ratio);
        }
        report.total_mass.push(sum);
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolderPoint {
    pub k: u32,
    pub radius: u64,
    pub pairs: usize,
    pub max_ratio: f64,
    pub envelope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolderParams {
    /// Macroscopic scale n.
    pub n: u64,
    pub a_n: f64,
    pub theta: f64,
    pub eps: f64,
    pub ks: Vec<u32>,
    /// Random pairs per scale.
    pub pairs: usize,
}

/// For each k, the largest d(u, v)/a_n over random pairs with
/// ‖u − v‖∞ ≤ n / 2^k, next to the envelope 2^{−(θ−ε)k}.
pub fn holder_profile(
    g: &LrpGraph,
    params: &HolderParams,
    rng: &mut impl Rng,
) -> Result<Vec<HolderPoint>> {
    if !(params.a_n > 0.0) {
        return Err(invalid("a_n", "must be positive"));
    }
    let l = g.lattice();
    let side = l.side() as i64;
    let mut out = Vec::with_capacity(params.ks.len());
    for &k in &params.ks {
        let radius = (params.n >> k).max(1) as i64;
        let mut max_ratio: f64 = 0.0;
        let mut done = 0;
        while done < params.pairs {
            let u = rng.random_range(0..l.len());
            let cv: Vec<i64> = l
                .coords(u)
                .iter()
                .map(|&c| c + rng.random_range(-radius..=radius))
                .collect();
            if cv.iter().any(|&c| c < 0 || c >= side) {
                continue;
            }
            let v = l.index(&cv).expect("checked inside the box");
            let dist = distance_masked(g, u, v, None)?.expect("box is connected");
            max_ratio = max_ratio.max(dist as f64 / params.a_n);
            done += 1;
        }
        out.push(HolderPoint {
            k,
            radius: radius as u64,
            pairs: params.pairs,
            max_ratio,
            envelope: 2f64.powf(-(params.theta - params.eps) * k as f64),
        });
    }
    Ok(out)
}

/// (u1, v1, u2, v2): an edge entering V_s(z) at v1 from u1 outside, and a
/// different edge leaving V_3s(z) from u2 to v2 outside.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SpecialPair {
    pub u1: usize,
    pub v1: usize,
    pub u2: usize,
    pub v2: usize,
}

/// Directed crossing edges (outside, inside) of a region.
fn crossings(g: &LrpGraph, inside: &[bool]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for v in 0..inside.len() {
        if inside[v] {
            g.for_each_neighbour(v, |u| {
                if !inside[u] {
                    out.push((u, v));
                }
            });
        }
    }
    out.sort_unstable();
    out.dedup();
    out
}

fn same_edge(a: (usize, usize), b: (usize, usize)) -> bool {
    (a.0 == b.0 && a.1 == b.1) || (a.0 == b.1 && a.1 == b.0)
}

/// All special pairs of V_3s(z), enumerated explicitly.
pub fn find_special_pairs(g: &LrpGraph, z: &[f64], s: f64) -> Vec<SpecialPair> {
    let l = g.lattice();
    let inner = Region::cube(z, s).mask(l);
    let outer = Region::cube(z, 3.0 * s).mask(l);
    let entering = crossings(g, &inner);
    let leaving: Vec<(usize, usize)> = crossings(g, &outer)
        .into_iter()
        .map(|(out, inn)| (inn, out))
        .collect();
    let mut pairs = Vec::new();
    for &(u1, v1) in &entering {
        for &(u2, v2) in &leaving {
            if !same_edge((u1, v1), (u2, v2)) {
                pairs.push(SpecialPair { u1, v1, u2, v2 });
            }
        }
    }
    pairs
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GoodCubeParams {
    pub s: f64,
    pub alpha: f64,
    pub b: f64,
    pub theta: f64,
}

impl GoodCubeParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.s > 0.0) {
            return Err(invalid("s", "must be positive"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(invalid("alpha", "must lie in (0, 1)"));
        }
        if !(self.b > 0.0) {
            return Err(invalid("b", "must be positive"));
        }
        if !(self.theta > 0.0 && self.theta < 1.0) {
            return Err(invalid("theta", "must lie in (0, 1)"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CubeClassification {
    pub good: bool,
    pub witness: Option<SpecialPair>,
}

/// Per-cube data that does not depend on (α, b): the special-pair
/// endpoints with their separations and internal distances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CubeProfile {
    /// (witness, Euclidean |v1 − u2|, d(v1, u2; V_3s(z)) or None).
    pub pairs: Vec<(SpecialPair, f64, Option<u32>)>,
}

/// Computes one representative special pair per (v1, u2) endpoint pair,
/// which is all the good-cube test depends on.
pub fn cube_profile(g: &LrpGraph, z: &[f64], s: f64) -> CubeProfile {
    let l = g.lattice();
    let inner = Region::cube(z, s).mask(l);
    let outer = Region::cube(z, 3.0 * s).mask(l);
    let entering = crossings(g, &inner);
    let leaving: Vec<(usize, usize)> = crossings(g, &outer)
        .into_iter()
        .map(|(out, inn)| (inn, out))
        .collect();
    let mut by_v1: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for &(u1, v1) in &entering {
        by_v1.entry(v1).or_default().push(u1);
    }
    let mut by_u2: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for &(u2, v2) in &leaving {
        by_u2.entry(u2).or_default().push(v2);
    }
    let mut pairs = Vec::new();
    for (&v1, u1s) in &by_v1 {
        let field = distance_field(g, &[v1], Some(&Region::Mask(outer.clone())))
            .expect("v1 lies in V_s ⊂ V_3s");
        let cv1 = l.coords(v1);
        for (&u2, v2s) in &by_u2 {
            let Some(pair) = u1s.iter().find_map(|&u1| {
                v2s.iter()
                    .find(|&&v2| !same_edge((u1, v1), (u2, v2)))
                    .map(|&v2| SpecialPair { u1, v1, u2, v2 })
            }) else {
                continue;
            };
            let cu2 = l.coords(u2);
            let sep = cv1
                .iter()
                .zip(&cu2)
                .map(|(a, b)| ((a - b) as f64).powi(2))
                .sum::<f64>()
                .sqrt();
            let dist = match field.dist[u2] {
                UNREACHED => None,
                x => Some(x),
            };
            pairs.push((pair, sep, dist));
        }
    }
    CubeProfile { pairs }
}

/// Good iff every special pair has |v1 − u2| ≥ αs and
/// d(v1, u2; V_3s(z)) / a_s ≥ (bα)^θ. Pairs not connected inside V_3s pass
/// the distance clause.
pub fn classify_profile(
    profile: &CubeProfile,
    params: &GoodCubeParams,
    a_s: f64,
) -> CubeClassification {
    let sep_min = params.alpha * params.s;
    let gap_min = (params.b * params.alpha).powf(params.theta);
    for &(pair, sep, dist) in &profile.pairs {
        let close = sep < sep_min;
        let short = dist.is_some_and(|d| (d as f64) / a_s < gap_min);
        if close || short {
            return CubeClassification {
                good: false,
                witness: Some(pair),
            };
        }
    }
    CubeClassification {
        good: true,
        witness: None,
    }
}

pub fn classify_good_cube(
    g: &LrpGraph,
    z: &[f64],
    params: &GoodCubeParams,
    a_s: f64,
) -> Result<CubeClassification> {
    params.validate()?;
    if !(a_s > 0.0) {
        return Err(invalid("a_s", "must be positive"));
    }
    Ok(classify_profile(&cube_profile(g, z, params.s), params, a_s))
}

/// Box of side `factor · s` centred on the cube used for good-cube rates.
pub fn cube_box(template: &ModelConfig, s: u64, factor: u64) -> Result<(ModelConfig, Vec<f64>)> {
    let side = factor * s + 1;
    let config = ModelConfig {
        n: side,
        ..*template
    };
    let centre = vec![(side / 2) as f64; template.d];
    Ok((config, centre))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoodRate {
    pub alpha: f64,
    pub b: f64,
    pub good: usize,
    pub replicates: usize,
    pub rate: f64,
    pub ci: (f64, f64),
}

/// Cube profiles on independent graphs, one cube per graph.
pub fn sample_cube_profiles(
    template: &ModelConfig,
    s: u64,
    replicates: usize,
) -> Result<Vec<CubeProfile>> {
    let (config, centre) = cube_box(template, s, 5)?;
    let sampler = GraphSampler::new(&config)?;
    Ok((0..replicates as u64)
        .into_par_iter()
        .map(|r| {
            let g = sampler.sample(stream_id("goodcubes", &[s, r]));
            cube_profile(&g, &centre, s as f64)
        })
        .collect())
}

/// Empirical good rate with a Wilson 95% interval for every (α, b).
pub fn good_cube_rates(
    profiles: &[CubeProfile],
    s: f64,
    theta: f64,
    a_s: f64,
    alphas: &[f64],
    bs: &[f64],
) -> Result<Vec<GoodRate>> {
    let mut out = Vec::new();
    for &b in bs {
        for &alpha in alphas {
            let params = GoodCubeParams { s, alpha, b, theta };
            params.validate()?;
            let good = profiles
                .iter()
                .filter(|p| classify_profile(p, &params, a_s).good)
                .count();
            let m = profiles.len();
            out.push(GoodRate {
                alpha,
                b,
                good,
                replicates: m,
                rate: good as f64 / m.max(1) as f64,
                ci: stats::wilson_interval(good, m, 1.96),
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoodSetReport {
    /// Per translation class (labels mod 3): (members, good members).
    pub classes: Vec<(usize, usize)>,
    pub best_class: usize,
    pub fraction: f64,
    pub good: bool,
}

/// Splits the labels into the 3^d translation classes `label mod 3`; the
/// set is good when some class holds at least |Λ|/(2·3^d) good cubes.
pub fn good_set_fraction(
    lambda: &[Vec<i64>],
    mut is_good: impl FnMut(&[i64]) -> bool,
) -> Result<GoodSetReport> {
    if lambda.is_empty() {
        return Err(Error::Empty("cube set"));
    }
    let d = lambda[0].len();
    let nclass = 3usize.pow(d as u32);
    let mut classes = vec![(0usize, 0usize); nclass];
    for label in lambda {
        let c = label
            .iter()
            .fold(0usize, |acc, &x| acc * 3 + x.rem_euclid(3) as usize);
        classes[c].0 += 1;
        if is_good(label) {
            classes[c].1 += 1;
        }
    }
    let best_class = (0..nclass)
        .max_by_key(|&c| (classes[c].1, std::cmp::Reverse(c)))
        .expect("at least one class");
    let fraction = classes[best_class].1 as f64 / lambda.len() as f64;
    Ok(GoodSetReport {
        classes,
        best_class,
        fraction,
        good: fraction * (2 * nclass) as f64 >= 1.0,
    })
}

/// Centre, in lattice coordinates, of the tile with the given label.
pub fn tile_centre(label: &[i64], side: u64) -> Vec<f64> {
    label
        .iter()
        .map(|&k| (k * side as i64) as f64 + (side as f64 - 1.0) / 2.0)
        .collect()
}

/// Coarse-grained graph on tiles of side `side`: tiles are adjacent when
/// some edge of the underlying graph joins them.
#[derive(Debug, Clone, PartialEq)]
pub struct RenormGraph {
    pub side: u64,
    pub tiles: Lattice,
    pub adjacency: Vec<Vec<usize>>,
}

pub fn renormalize(g: &LrpGraph, side: u64) -> Result<RenormGraph> {
    let l = g.lattice();
    if side == 0 || l.side() % side != 0 {
        return Err(Error::Tiling(format!(
            "tile side {side} does not divide the box side {}",
            l.side()
        )));
    }
    let tiles = Lattice::new(l.dim(), l.side() / side)?;
    let tile_of = |v: usize| -> usize {
        let c: Vec<i64> = l.coords(v).iter().map(|&x| x / side as i64).collect();
        tiles.index(&c).expect("tile inside")
    };
    let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); tiles.len()];
    for t in 0..tiles.len() {
        tiles.for_each_nearest(t, |u| {
            adj[t].insert(u);
        });
    }
    for &(a, b) in g.long_edges() {
        let (ta, tb) = (tile_of(a as usize), tile_of(b as usize));
        if ta != tb {
            adj[ta].insert(tb);
            adj[tb].insert(ta);
        }
    }
    Ok(RenormGraph {
        side,
        tiles,
        adjacency: adj.into_iter().map(|s| s.into_iter().collect()).collect(),
    })
}

pub const MAX_CONNECTED_SET_SIZE: usize = 7;

/// Number of connected vertex sets of each size 1..=k containing `root`.
pub fn enumerate_connected_sets(
    adjacency: &[Vec<usize>],
    root: usize,
    k: usize,
) -> Result<Vec<u64>> {
    if k > MAX_CONNECTED_SET_SIZE {
        return Err(Error::CapExceeded {
            what: "connected set size",
            value: k,
            limit: MAX_CONNECTED_SET_SIZE,
        });
    }
    if root >= adjacency.len() {
        return Err(Error::VertexOutside(root));
    }
    let mut counts = vec![0u64; k];
    if k == 0 {
        return Ok(counts);
    }
    let mut set = vec![root];
    let mut blocked: HashSet<usize> = HashSet::from([root]);
    let ext: Vec<usize> = adjacency[root]
        .iter()
        .copied()
        .filter(|&u| u != root)
        .collect();
    blocked.extend(ext.iter().copied());
    grow(adjacency, &mut set, ext, &mut blocked, k, &mut counts);
    Ok(counts)
}

// Every connected set is generated once: candidates are tried in order and
// a candidate that has been tried stays excluded in later branches.
fn grow(
    adjacency: &[Vec<usize>],
    set: &mut Vec<usize>,
    mut ext: Vec<usize>,
    blocked: &mut HashSet<usize>,
    k: usize,
    counts: &mut [u64],
) {
    counts[set.len() - 1] += 1;
    if set.len() == k {
        return;
    }
    while let Some(w) = ext.pop() {
        let mut next = ext.clone();
        let mut added = Vec::new();
        for &u in &adjacency[w] {
            if !blocked.contains(&u) {
                blocked.insert(u);
                added.push(u);
                next.push(u);
            }
        }
        set.push(w);
        grow(adjacency, set, next, blocked, k, counts);
        set.pop();
        for u in added {
            blocked.remove(&u);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenormStats {
    pub mu_hat: f64,
    pub mu_se: f64,
    /// Mean |CS_k(root)| for k = 1..=k_max.
    pub cs_counts: Vec<f64>,
    pub replicates: usize,
}

/// Mean renormalised degree and connected-set counts around the central
/// tile, over independent graphs on a box of `tiles` tiles per axis.
pub fn renorm_stats(
    template: &ModelConfig,
    side: u64,
    tiles: u64,
    k_max: usize,
    replicates: usize,
) -> Result<RenormStats> {
    let config = ModelConfig {
        n: side * tiles,
        ..*template
    };
    let sampler = GraphSampler::new(&config)?;
    let per: Vec<(f64, Vec<u64>)> = (0..replicates as u64)
        .into_par_iter()
        .map(|r| -> Result<(f64, Vec<u64>)> {
            let g = sampler.sample(stream_id("renorm", &[side, tiles, r]));
            let rg = renormalize(&g, side)?;
            let root = rg
                .tiles
                .index(&vec![(tiles / 2) as i64; config.d])
                .expect("central tile");
            let deg = rg.adjacency[root].len() as f64;
            Ok((deg, enumerate_connected_sets(&rg.adjacency, root, k_max)?))
        })
        .collect::<Result<_>>()?;
    let degs: Vec<f64> = per.iter().map(|p| p.0).collect();
    let m = per.len() as f64;
    let cs_counts = (0..k_max)
        .map(|k| per.iter().map(|p| p.1[k] as f64).sum::<f64>() / m)
        .collect();
    Ok(RenormStats {
        mu_hat: stats::mean(&degs),
        mu_se: (stats::variance(&degs) / m).sqrt(),
        cs_counts,
        replicates: per.len(),
    })
}

/// Stream for geodesic sampling in dimension experiments.
pub fn geodesic_stream(seed: u64, n: u64, replicate: u64) -> RngStream {
    RngStream::new(seed, stream_id("geodesic", &[n, replicate]), 0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_point_and_straight_path() {
        let p = vec![vec![5i64, 5]];
        assert_eq!(box_count(&p, 4.0).unwrap().count(), 1);
        let line: Vec<Vec<i64>> = (0..1024).map(|x| vec![x]).collect();
        let fit = path_dimension(&line, 1024.0, &[2, 3, 4, 5, 6, 7]).unwrap();
        assert!((fit.dim_hat - 1.0).abs() < 1e-9);
        assert!(box_count(&line, 0.5).is_err());
        let point: Vec<Vec<i64>> = vec![vec![3]];
        assert_eq!(
            path_dimension(&point, 1024.0, &[2, 3, 4, 5])
                .unwrap()
                .dim_hat,
            0.0
        );
    }

    #[test]
    fn path_graph_connected_sets() {
        // Path 0 - 1 - 2 - 3 - 4, rooted in the middle.
        let adj: Vec<Vec<usize>> = (0..5)
            .map(|i: usize| {
                let mut v = Vec::new();
                if i > 0 {
                    v.push(i - 1);
                }
                if i < 4 {
                    v.push(i + 1);
                }
                v
            })
            .collect();
        assert_eq!(enumerate_connected_sets(&adj, 2, 3).unwrap(), vec![1, 2, 3]);
        assert!(enumerate_connected_sets(&adj, 2, 8).is_err());
    }

    #[test]
    fn good_sets() {
        let lambda: Vec<Vec<i64>> = (0..12).map(|x| vec![x]).collect();
        assert!(good_set_fraction(&lambda, |_| true).unwrap().good);
        assert!(!good_set_fraction(&lambda, |_| false).unwrap().good);
        // Two good cubes out of twelve: 2/12 ≥ 1/6.
        let r = good_set_fraction(&lambda, |l| l[0] == 0 || l[0] == 3).unwrap();
        assert!(r.good);
        let r = good_set_fraction(&lambda, |l| l[0] == 0 || l[0] == 1).unwrap();
        assert!(!r.good);
    }

    #[test]
    fn tile_centres_recover_tiles() {
        let c = tile_centre(&[2], 4);
        assert_eq!(c, vec![9.5]);
        let cube = Region::cube(&c, 4.0);
        let hits: Vec<i64> = (0..20).filter(|&x| cube.contains_point(&[x])).collect();
        assert_eq!(hits, vec![8, 9, 10, 11]);
    }
}
