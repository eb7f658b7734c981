//! Chemical distances, restricted metrics, diameters and geodesic DAGs.
//!
//! A restricted distance `d(x, y; U)` only uses vertices of `U`, so every
//! edge on the path has both endpoints in `U`. Distances are `u32` with
//! [`UNREACHED`] as the sentinel in flat per-vertex arrays.

use std::collections::VecDeque;
use std::io::Write;

use num::BigUint;
use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::Neighbourhood;
use crate::lattice::Lattice;

pub const UNREACHED: u32 = u32::MAX;

/// Vertex subsets of the box. Balls use the Euclidean norm; `Cube` is the
/// closed cube `V_side(center)` of the given side length.
#[derive(Debug, Clone, PartialEq)]
pub enum Region {
    Whole,
    Ball {
        center: Vec<f64>,
        radius: f64,
    },
    Cube {
        center: Vec<f64>,
        side: f64,
    },
    /// Points with `inner < |x − center| ≤ outer`.
    Annulus {
        center: Vec<f64>,
        inner: f64,
        outer: f64,
    },
    Complement(Box<Region>),
    Mask(Vec<bool>),
}

impl Region {
    pub fn ball(center: &[f64], radius: f64) -> Self {
        Region::Ball {
            center: center.to_vec(),
            radius,
        }
    }

    pub fn cube(center: &[f64], side: f64) -> Self {
        Region::Cube {
            center: center.to_vec(),
            side,
        }
    }

    pub fn complement(self) -> Self {
        Region::Complement(Box::new(self))
    }

    pub fn contains(&self, lattice: &Lattice, v: usize) -> bool {
        match self {
            Region::Whole => true,
            Region::Mask(m) => m.get(v).copied().unwrap_or(false),
            Region::Complement(r) => !r.contains(lattice, v),
            _ => {
                let mut c = [0i64; 8];
                let d = lattice.dim();
                lattice.coords_into(v, &mut c[..d]);
                self.contains_point(&c[..d])
            }
        }
    }

    /// Membership of a lattice point given by coordinates. Masks are not
    /// geometric and answer `false`.
    pub fn contains_point(&self, x: &[i64]) -> bool {
        let dist2 = |center: &[f64]| -> f64 {
            x.iter()
                .zip(center)
                .map(|(&a, &c)| (a as f64 - c).powi(2))
                .sum()
        };
        match self {
            Region::Whole => true,
            Region::Mask(_) => false,
            Region::Complement(r) => !r.contains_point(x),
            Region::Ball { center, radius } => dist2(center) <= radius * radius,
            Region::Cube { center, side } => x
                .iter()
                .zip(center)
                .all(|(&a, &c)| (a as f64 - c).abs() <= side / 2.0),
            Region::Annulus {
                center,
                inner,
                outer,
            } => {
                let r2 = dist2(center);
                r2 > inner * inner && r2 <= outer * outer
            }
        }
    }

    pub fn mask(&self, lattice: &Lattice) -> Vec<bool> {
        match self {
            Region::Mask(m) => {
                let mut m = m.clone();
                m.resize(lattice.len(), false);
                m
            }
            _ => (0..lattice.len())
                .map(|v| self.contains(lattice, v))
                .collect(),
        }
    }
}

fn resolve_mask<G: Neighbourhood>(g: &G, region: Option<&Region>) -> Option<Vec<bool>> {
    match region {
        None | Some(Region::Whole) => None,
        Some(r) => Some(r.mask(g.lattice())),
    }
}

/// Multi-source BFS inside `allowed` (everything when `None`). Stops early
/// once `stop` returns true for a dequeued vertex.
fn bfs_core<G: Neighbourhood>(
    g: &G,
    sources: &[usize],
    allowed: Option<&[bool]>,
    mut stop: impl FnMut(usize) -> bool,
) -> (Vec<u32>, Option<usize>) {
    let mut dist = vec![UNREACHED; g.vertex_count()];
    let mut queue = VecDeque::new();
    for &s in sources {
        if dist[s] == UNREACHED {
            dist[s] = 0;
            queue.push_back(s);
        }
    }
    while let Some(v) = queue.pop_front() {
        if stop(v) {
            return (dist, Some(v));
        }
        let next = dist[v] + 1;
        g.for_each_neighbour(v, |u| {
            if dist[u] == UNREACHED && allowed.is_none_or(|m| m[u]) {
                dist[u] = next;
                queue.push_back(u);
            }
        });
    }
    (dist, None)
}

/// Per-vertex BFS distances from a source set.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceField {
    pub sources: Vec<usize>,
    pub dist: Vec<u32>,
}

impl DistanceField {
    pub fn get(&self, v: usize) -> Option<u32> {
        match self.dist[v] {
            UNREACHED => None,
            d => Some(d),
        }
    }
}

fn check_inside(g: &impl Neighbourhood, mask: Option<&[bool]>, v: usize) -> Result<()> {
    if v >= g.vertex_count() || mask.is_some_and(|m| !m[v]) {
        return Err(Error::VertexOutside(v));
    }
    Ok(())
}

pub fn distance_field<G: Neighbourhood>(
    g: &G,
    sources: &[usize],
    region: Option<&Region>,
) -> Result<DistanceField> {
    let mask = resolve_mask(g, region);
    for &s in sources {
        check_inside(g, mask.as_deref(), s)?;
    }
    let (dist, _) = bfs_core(g, sources, mask.as_deref(), |_| false);
    Ok(DistanceField {
        sources: sources.to_vec(),
        dist,
    })
}

/// Graph distance from `x` to `y` inside `region`; `None` when unreached.
pub fn distance<G: Neighbourhood>(
    g: &G,
    x: usize,
    y: usize,
    region: Option<&Region>,
) -> Result<Option<u32>> {
    let mask = resolve_mask(g, region);
    distance_masked(g, x, y, mask.as_deref())
}

pub fn distance_masked<G: Neighbourhood>(
    g: &G,
    x: usize,
    y: usize,
    mask: Option<&[bool]>,
) -> Result<Option<u32>> {
    check_inside(g, mask, x)?;
    check_inside(g, mask, y)?;
    let (dist, hit) = bfs_core(g, &[x], mask, |v| v == y);
    Ok(hit.map(|v| dist[v]))
}

/// Minimum over a ∈ A ∩ U, b ∈ B ∩ U of d(a, b; U).
pub fn set_distance<G: Neighbourhood>(
    g: &G,
    a: &Region,
    b: &Region,
    u: &Region,
) -> Result<Option<u32>> {
    let l = g.lattice();
    let um = u.mask(l);
    let sources: Vec<usize> = (0..l.len())
        .filter(|&v| um[v] && a.contains(l, v))
        .collect();
    let targets: Vec<bool> = (0..l.len()).map(|v| um[v] && b.contains(l, v)).collect();
    if sources.is_empty() {
        return Err(Error::Empty("A ∩ U"));
    }
    if !targets.iter().any(|&t| t) {
        return Err(Error::Empty("B ∩ U"));
    }
    let (dist, hit) = bfs_core(g, &sources, Some(&um), |v| targets[v]);
    Ok(hit.map(|v| dist[v]))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Diameter {
    pub value: u32,
    /// False when only the double-sweep lower bound was computed.
    pub exact: bool,
}

/// Regions up to this many vertices get an exact all-sources diameter.
pub const EXACT_DIAMETER_LIMIT: usize = 4096;

/// Diameter of `U` in its restricted metric. Exact for small regions;
/// otherwise a double-sweep lower bound flagged as inexact.
pub fn diameter<G: Neighbourhood>(g: &G, u: &Region) -> Result<Diameter> {
    let l = g.lattice();
    let mask = u.mask(l);
    let members: Vec<usize> = (0..l.len()).filter(|&v| mask[v]).collect();
    if members.is_empty() {
        return Err(Error::Empty("region"));
    }
    let sweep = |s: usize| -> Result<(u32, usize)> {
        let (dist, _) = bfs_core(g, &[s], Some(&mask), |_| false);
        let mut best = (0, s);
        for &v in &members {
            if dist[v] == UNREACHED {
                return Err(Error::Disconnected);
            }
            if dist[v] > best.0 {
                best = (dist[v], v);
            }
        }
        Ok(best)
    };
    if members.len() <= EXACT_DIAMETER_LIMIT {
        let mut value = 0;
        for &s in &members {
            value = value.max(sweep(s)?.0);
        }
        return Ok(Diameter { value, exact: true });
    }
    let (_, far) = sweep(members[0])?;
    let (value, _) = sweep(far)?;
    Ok(Diameter {
        value,
        exact: false,
    })
}

/// All geodesics from `source` to `target`, as a layered predecessor DAG.
#[derive(Debug, Clone)]
pub struct GeodesicDag {
    pub source: usize,
    pub target: usize,
    pub length: u32,
    /// Vertices on some geodesic, sorted by distance from the source.
    pub vertices: Vec<usize>,
    pub levels: Vec<u32>,
    /// Predecessors of `vertices[i]`, as positions into `vertices`.
    pub preds: Vec<Vec<usize>>,
    /// Number of geodesics from the source to each vertex (saturating).
    pub counts: Vec<u64>,
    pub saturated: bool,
}

pub fn geodesic_dag<G: Neighbourhood>(
    g: &G,
    x: usize,
    y: usize,
    region: Option<&Region>,
) -> Result<GeodesicDag> {
    let mask = resolve_mask(g, region);
    let mask = mask.as_deref();
    check_inside(g, mask, x)?;
    check_inside(g, mask, y)?;
    let (from_x, _) = bfs_core(g, &[x], mask, |_| false);
    let length = from_x[y];
    if length == UNREACHED {
        return Err(Error::Unreached);
    }
    let (from_y, _) = bfs_core(g, &[y], mask, |_| false);
    let on = |v: usize| {
        from_x[v] != UNREACHED && from_y[v] != UNREACHED && from_x[v] + from_y[v] == length
    };
    let mut vertices: Vec<usize> = (0..g.vertex_count()).filter(|&v| on(v)).collect();
    vertices.sort_by_key(|&v| (from_x[v], v));
    let position = |v: usize| vertices.binary_search_by_key(&(from_x[v], v), |&w| (from_x[w], w));
    let mut preds = Vec::with_capacity(vertices.len());
    for &v in &vertices {
        let mut p = Vec::new();
        if v != x {
            g.for_each_neighbour(v, |u| {
                if mask.is_none_or(|m| m[u]) && on(u) && from_x[u] + 1 == from_x[v] {
                    p.push(position(u).expect("on-geodesic vertex is indexed"));
                }
            });
            p.sort_unstable();
            p.dedup();
        }
        preds.push(p);
    }
    let mut counts = vec![0u64; vertices.len()];
    let mut saturated = false;
    for i in 0..vertices.len() {
        if i == 0 {
            counts[0] = 1;
            continue;
        }
        let mut c: u64 = 0;
        for &p in &preds[i] {
            c = c.checked_add(counts[p]).unwrap_or_else(|| {
                saturated = true;
                u64::MAX
            });
        }
        counts[i] = c;
    }
    let levels = vertices.iter().map(|&v| from_x[v]).collect();
    Ok(GeodesicDag {
        source: x,
        target: y,
        length,
        vertices,
        levels,
        preds,
        counts,
        saturated,
    })
}

impl GeodesicDag {
    fn target_pos(&self) -> usize {
        self.vertices.len() - 1
    }

    /// Number of geodesics (saturating at `u64::MAX`, see `saturated`).
    pub fn count(&self) -> u64 {
        self.counts[self.target_pos()]
    }

    pub fn exact_counts(&self) -> Vec<BigUint> {
        let mut out: Vec<BigUint> = Vec::with_capacity(self.vertices.len());
        for (i, p) in self.preds.iter().enumerate() {
            if i == 0 {
                out.push(BigUint::from(1u32));
            } else {
                out.push(p.iter().map(|&j| &out[j]).sum());
            }
        }
        out
    }

    pub fn exact_count(&self) -> BigUint {
        self.exact_counts().pop().unwrap_or_default()
    }

    /// Geodesic counts from each vertex to the target, computed on the
    /// reversed DAG (saturating).
    pub fn backward_counts(&self) -> Vec<u64> {
        let n = self.vertices.len();
        let mut out = vec![0u64; n];
        out[n - 1] = 1;
        for i in (1..n).rev() {
            let c = out[i];
            for &p in &self.preds[i] {
                out[p] = out[p].saturating_add(c);
            }
        }
        out
    }

    /// Number of DAG edges.
    pub fn edge_count(&self) -> usize {
        self.preds.iter().map(Vec::len).sum()
    }

    /// A uniformly random geodesic, sampled backwards from the target with
    /// predecessor weights proportional to prefix counts.
    pub fn sample_geodesic(&self, rng: &mut impl Rng) -> Vec<usize> {
        let weights_f64: Option<Vec<f64>> = self.saturated.then(|| {
            let mut w: Vec<f64> = Vec::with_capacity(self.vertices.len());
            for (i, p) in self.preds.iter().enumerate() {
                w.push(if i == 0 {
                    1.0
                } else {
                    p.iter().map(|&j| w[j]).sum()
                });
            }
            w
        });
        let mut path = vec![self.target];
        let mut i = self.target_pos();
        while i != 0 {
            let preds = &self.preds[i];
            let next = match &weights_f64 {
                None => {
                    let mut r = rng.random_range(0..self.counts[i]);
                    let mut pick = preds[preds.len() - 1];
                    for &p in preds {
                        if r < self.counts[p] {
                            pick = p;
                            break;
                        }
                        r -= self.counts[p];
                    }
                    pick
                }
                Some(w) => {
                    let total: f64 = preds.iter().map(|&p| w[p]).sum();
                    let mut r = rng.random::<f64>() * total;
                    let mut pick = preds[preds.len() - 1];
                    for &p in preds {
                        if r < w[p] {
                            pick = p;
                            break;
                        }
                        r -= w[p];
                    }
                    pick
                }
            };
            path.push(self.vertices[next]);
            i = next;
        }
        path.reverse();
        path
    }
}

/// Writes a path as one comma-separated coordinate tuple per line under a
/// `# x=… y=… len=… count=…` header.
pub fn write_geodesic(
    lattice: &Lattice,
    path: &[usize],
    count: &str,
    mut w: impl Write,
) -> Result<()> {
    let fmt = |v: usize| {
        lattice
            .coords(v)
            .iter()
            .map(|c| c.to_string())
            .collect::<Vec<_>>()
            .join(",")
    };
    let (Some(&x), Some(&y)) = (path.first(), path.last()) else {
        return Err(Error::Empty("path"));
    };
    writeln!(
        w,
        "# x={} y={} len={} count={}",
        fmt(x),
        fmt(y),
        path.len() - 1,
        count
    )?;
    for &v in path {
        writeln!(w, "{}", fmt(v))?;
    }
    Ok(())
}
