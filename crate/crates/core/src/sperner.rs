//! Generalised Sperner families over subsets of {1, …, n}, stored as
//! bitmasks (element `e` is bit `e − 1`).
//!
//! A member `A` is upward-unstable when some `B ⊆ Aᶜ` with `|B| ≥ n/2`
//! meets no member `A' ⊇ A`, and downward-unstable when some `B' ⊆ A` with
//! `|B'| ≥ n/2` is contained in every member `A' ⊆ A`. Both conditions are
//! monotone in the witness, so it suffices to test the largest candidates
//!
//! ```text
//! B*  = complement of A ∪ ⋃ { A' \ A : A' ∈ F, A' ⊇ A }
//! B'* = ⋂ { A' : A' ∈ F, A' ⊆ A }
//! ```
//!
//! against the size bound. Sizes are compared as `2|B| ≥ n`.

use std::io::{BufRead, Write};

use num::{BigInt, BigRational, One, ToPrimitive, Zero};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::graph::{LrpGraph, WithShortcuts};
use crate::metric::distance_masked;

pub const MAX_GROUND_SET: u32 = 24;
pub const MAX_SHORTCUTS: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SetFamily {
    n: u32,
    members: Vec<u32>,
}

impl SetFamily {
    /// Sorts and deduplicates `members`; rejects masks outside {1, …, n}.
    pub fn new(n: u32, mut members: Vec<u32>) -> Result<Self> {
        if n > MAX_GROUND_SET {
            return Err(Error::CapExceeded {
                what: "ground set size",
                value: n as usize,
                limit: MAX_GROUND_SET as usize,
            });
        }
        let full = full_mask(n);
        if let Some(&bad) = members.iter().find(|&&m| m & !full != 0) {
            return Err(invalid(
                "members",
                format!("{bad:#b} has elements above n = {n}"),
            ));
        }
        members.sort_unstable();
        members.dedup();
        Ok(Self { n, members })
    }

    pub fn empty(n: u32) -> Result<Self> {
        Self::new(n, Vec::new())
    }

    pub fn power_set(n: u32) -> Result<Self> {
        if n > 20 {
            return Err(Error::CapExceeded {
                what: "power set ground size",
                value: n as usize,
                limit: 20,
            });
        }
        Self::new(n, (0..1u32 << n).collect())
    }

    /// All subsets of size k.
    pub fn level(n: u32, k: u32) -> Result<Self> {
        if n > 20 {
            return Err(Error::CapExceeded {
                what: "level ground size",
                value: n as usize,
                limit: 20,
            });
        }
        Self::new(n, (0..1u32 << n).filter(|m| m.count_ones() == k).collect())
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn members(&self) -> &[u32] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, a: u32) -> bool {
        self.members.binary_search(&a).is_ok()
    }

    /// a_k = number of members of size k, for k = 0..=n.
    pub fn level_profile(&self) -> Vec<u64> {
        let mut a = vec![0u64; self.n as usize + 1];
        for m in &self.members {
            a[m.count_ones() as usize] += 1;
        }
        a
    }

    fn with(&self, extra: u32) -> Self {
        let mut members = self.members.clone();
        if let Err(pos) = members.binary_search(&extra) {
            members.insert(pos, extra);
        }
        Self { n: self.n, members }
    }
}

pub fn full_mask(n: u32) -> u32 {
    if n >= 32 {
        u32::MAX
    } else {
        (1u32 << n) - 1
    }
}

fn large_enough(size: u32, n: u32) -> bool {
    2 * size >= n
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stability {
    Upward,
    Downward,
    Neither,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemberClass {
    pub set: u32,
    /// Largest upward witness candidate B*.
    pub up_witness: u32,
    /// Largest downward witness candidate B'*.
    pub down_witness: u32,
    pub upward: bool,
    pub downward: bool,
}

impl MemberClass {
    /// Upward takes precedence when both conditions hold.
    pub fn stability(&self) -> Stability {
        if self.upward {
            Stability::Upward
        } else if self.downward {
            Stability::Downward
        } else {
            Stability::Neither
        }
    }
}

pub fn classify_member(family: &SetFamily, a: u32) -> Result<MemberClass> {
    if !family.contains(a) {
        return Err(Error::NotAMember(a));
    }
    let n = family.n;
    let mut above = a;
    let mut below = a;
    for &m in &family.members {
        if m & a == a {
            above |= m;
        }
        if m & a == m {
            below &= m;
        }
    }
    let up_witness = full_mask(n) & !above;
    let down_witness = below;
    Ok(MemberClass {
        set: a,
        up_witness,
        down_witness,
        upward: large_enough(up_witness.count_ones(), n),
        downward: large_enough(down_witness.count_ones(), n),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpernerReport {
    pub members: Vec<MemberClass>,
    pub is_sperner: bool,
    pub level_profile: Vec<u64>,
}

impl SpernerReport {
    pub fn count(&self, s: Stability) -> usize {
        self.members.iter().filter(|m| m.stability() == s).count()
    }
}

pub fn is_sperner_family(family: &SetFamily) -> SpernerReport {
    let members: Vec<MemberClass> = family
        .members
        .iter()
        .map(|&a| classify_member(family, a).expect("iterating over members"))
        .collect();
    let is_sperner = members.iter().all(|m| m.upward || m.downward);
    SpernerReport {
        members,
        is_sperner,
        level_profile: family.level_profile(),
    }
}

/// Cheaper yes/no check that stops at the first failing member.
pub fn is_sperner(family: &SetFamily) -> bool {
    family.members.iter().all(|&a| {
        let c = classify_member(family, a).expect("iterating over members");
        c.upward || c.downward
    })
}

pub fn binomial(n: u32, k: u32) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

/// Σ_k a_k / C(n, k), exactly.
pub fn lym_sum(family: &SetFamily) -> BigRational {
    family
        .level_profile()
        .iter()
        .enumerate()
        .filter(|(_, &a)| a > 0)
        .map(|(k, &a)| BigRational::new(BigInt::from(a), binomial(family.n, k as u32)))
        .fold(BigRational::zero(), |acc, x| acc + x)
}

fn check_p(p: &BigRational) -> Result<()> {
    if *p <= BigRational::zero() || *p >= BigRational::one() {
        return Err(invalid("p", "must lie strictly between 0 and 1"));
    }
    Ok(())
}

fn level_weight(n: u32, k: u32, p: &BigRational) -> BigRational {
    let q = BigRational::one() - p;
    num::pow(p.clone(), k as usize) * num::pow(q, (n - k) as usize)
}

/// P[the Bernoulli(p) set lies in the family], exactly.
pub fn event_probability(family: &SetFamily, p: &BigRational) -> Result<BigRational> {
    check_p(p)?;
    Ok(family
        .level_profile()
        .iter()
        .enumerate()
        .filter(|(_, &a)| a > 0)
        .map(|(k, &a)| {
            BigRational::from_integer(BigInt::from(a)) * level_weight(family.n, k as u32, p)
        })
        .fold(BigRational::zero(), |acc, x| acc + x))
}

/// max_k C(n, k) p^k (1 − p)^{n−k} and the maximising k.
pub fn central_term(n: u32, p: &BigRational) -> (BigRational, u32) {
    let mut best = (BigRational::zero(), 0);
    for k in 0..=n {
        let t = BigRational::from_integer(binomial(n, k)) * level_weight(n, k, p);
        if t > best.0 {
            best = (t, k);
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainReport {
    pub probability: BigRational,
    pub central: BigRational,
    pub mode: u32,
    pub lym: BigRational,
    /// P ≤ central · LYM.
    pub first_link: bool,
    /// central · LYM ≤ 4 · central.
    pub second_link: bool,
    /// P·√n.
    pub scaled_probability: f64,
    /// 4·√n·central.
    pub scaled_bound: f64,
}

impl ChainReport {
    pub fn holds(&self) -> bool {
        self.first_link && self.second_link
    }
}

/// Verifies P ≤ central · LYM ≤ 4 · central in exact arithmetic.
pub fn sperner_bound_check(family: &SetFamily, p: &BigRational) -> Result<ChainReport> {
    check_p(p)?;
    if !is_sperner(family) {
        return Err(Error::NotSperner);
    }
    let probability = event_probability(family, p)?;
    let (central, mode) = central_term(family.n, p);
    let lym = lym_sum(family);
    let middle = &central * &lym;
    let four = BigRational::from_integer(BigInt::from(4));
    let first_link = probability <= middle;
    let second_link = middle <= &four * &central;
    let root_n = f64::from(family.n).sqrt();
    Ok(ChainReport {
        scaled_probability: probability.to_f64().unwrap_or(f64::NAN) * root_n,
        scaled_bound: 4.0 * root_n * central.to_f64().unwrap_or(f64::NAN),
        probability,
        central,
        mode,
        lym,
        first_link,
        second_link,
    })
}

/// ln max_k C(n, k) p^k (1 − p)^{n−k}, evaluated with log-gamma so that it
/// stays finite for large n.
pub fn log_central_term(n: u64, p: f64) -> f64 {
    use statrs::function::gamma::ln_gamma;
    let nf = n as f64;
    let lo = (p * nf).floor().max(0.0) as u64;
    let hi = ((p * nf).ceil() as u64).min(n);
    let term = |k: u64| {
        let kf = k as f64;
        ln_gamma(nf + 1.0) - ln_gamma(kf + 1.0) - ln_gamma(nf - kf + 1.0)
            + kf * p.ln()
            + (nf - kf) * (1.0 - p).ln()
    };
    term(lo).max(term(hi))
}

/// 4·√n·max_k C(n, k) p^k (1 − p)^{n−k}.
pub fn scaled_sperner_bound(n: u64, p: f64) -> f64 {
    4.0 * (n as f64).sqrt() * log_central_term(n, p).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyKind {
    AntichainLow,
    GreedyMaximal,
    RandomLevels,
}

fn random_subset_of_size(n: u32, k: u32, rng: &mut impl Rng) -> u32 {
    let mut elems: Vec<u32> = (0..n).collect();
    let (chosen, _) = elems.partial_shuffle(rng, k as usize);
    chosen.iter().fold(0, |m, &e| m | (1 << e))
}

/// Random test families. `antichain-low` draws an antichain of sets of size
/// at most n/2; `greedy-maximal` admits random candidates while the family
/// stays Sperner; `random-levels` draws from two adjacent levels and keeps
/// a draw only if the family stays Sperner.
pub fn generate_family(kind: FamilyKind, n: u32, rng: &mut impl Rng) -> Result<SetFamily> {
    if n == 0 || n > MAX_GROUND_SET {
        return Err(invalid(
            "n",
            format!("{n} (must be in 1..={MAX_GROUND_SET})"),
        ));
    }
    let attempts = rng.random_range(0..=4 * n as usize);
    let mut family = SetFamily::empty(n)?;
    match kind {
        FamilyKind::AntichainLow => {
            for _ in 0..attempts {
                let k = rng.random_range(0..=n / 2);
                let cand = random_subset_of_size(n, k, rng);
                let comparable = family
                    .members
                    .iter()
                    .any(|&m| m & cand == m || m & cand == cand);
                if !comparable {
                    family = family.with(cand);
                }
            }
        }
        FamilyKind::GreedyMaximal => {
            for _ in 0..attempts {
                let cand = rng.random_range(0..=full_mask(n));
                if family.contains(cand) {
                    continue;
                }
                let next = family.with(cand);
                if is_sperner(&next) {
                    family = next;
                }
            }
        }
        FamilyKind::RandomLevels => {
            let k = rng.random_range(0..n);
            for _ in 0..attempts {
                let level = k + rng.random_range(0..=1);
                let cand = random_subset_of_size(n, level, rng);
                if family.contains(cand) {
                    continue;
                }
                let next = family.with(cand);
                if is_sperner(&next) {
                    family = next;
                }
            }
        }
    }
    Ok(family)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowFamily {
    pub family: SetFamily,
    pub report: SpernerReport,
    /// d(x, y) for every on/off pattern, indexed by the pattern mask.
    pub distances: Vec<u32>,
}

/// Switches every subset of the candidate shortcuts on top of `g`, records
/// d(x, y), and collects the patterns whose distance lies in
/// (a − eps, a + eps).
pub fn distance_window_family(
    g: &LrpGraph,
    shortcuts: &[(usize, usize)],
    x: usize,
    y: usize,
    a: f64,
    eps: f64,
) -> Result<WindowFamily> {
    if shortcuts.len() > MAX_SHORTCUTS {
        return Err(Error::CapExceeded {
            what: "candidate shortcuts",
            value: shortcuts.len(),
            limit: MAX_SHORTCUTS,
        });
    }
    let j = shortcuts.len() as u32;
    let mut distances = Vec::with_capacity(1 << j);
    let mut members = Vec::new();
    for mask in 0u32..(1 << j) {
        let on = (0..j as usize)
            .filter(|&b| mask >> b & 1 == 1)
            .map(|b| shortcuts[b]);
        let overlay = WithShortcuts::new(g, on);
        let dist = distance_masked(&overlay, x, y, None)?.ok_or(Error::Unreached)?;
        distances.push(dist);
        let df = f64::from(dist);
        if df > a - eps && df < a + eps {
            members.push(mask);
        }
    }
    let family = SetFamily::new(j, members)?;
    let report = is_sperner_family(&family);
    Ok(WindowFamily {
        family,
        report,
        distances,
    })
}

/// Reads the family file format: a first line `n=<int>`, then one subset
/// per line as comma-separated elements of {1, …, n}; an empty line is the
/// empty set.
pub fn read_family(r: impl BufRead) -> Result<SetFamily> {
    let mut lines = r.lines();
    let header = lines.next().ok_or(Error::Empty("family file"))??;
    let n: u32 = header
        .trim()
        .strip_prefix("n=")
        .and_then(|v| v.trim().parse().ok())
        .ok_or_else(|| Error::Parse {
            line: 1,
            reason: "expected `n=<int>`".into(),
        })?;
    if n > MAX_GROUND_SET {
        return Err(Error::CapExceeded {
            what: "ground set size",
            value: n as usize,
            limit: MAX_GROUND_SET as usize,
        });
    }
    let mut members = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        let mut mask = 0u32;
        for tok in line.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            let e: u32 = tok.parse().map_err(|_| Error::Parse {
                line: i + 2,
                reason: format!("`{tok}` is not an element"),
            })?;
            if e == 0 || e > n {
                return Err(Error::Parse {
                    line: i + 2,
                    reason: format!("element {e} outside 1..={n}"),
                });
            }
            mask |= 1 << (e - 1);
        }
        members.push(mask);
    }
    SetFamily::new(n, members)
}

pub fn write_family(family: &SetFamily, mut w: impl Write) -> Result<()> {
    writeln!(w, "n={}", family.n)?;
    for &m in &family.members {
        let elems: Vec<String> = (0..family.n)
            .filter(|&b| m >> b & 1 == 1)
            .map(|b| (b + 1).to_string())
            .collect();
        writeln!(w, "{}", elems.join(","))?;
    }
    Ok(())
}

/// Parses a fraction `a/b` or an integer.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let bad = || invalid("p", format!("`{s}` is not a rational number"));
    let (num, den) = match s.trim().split_once('/') {
        Some((a, b)) => (a.trim(), b.trim()),
        None => (s.trim(), "1"),
    };
    let num: BigInt = num.parse().map_err(|_| bad())?;
    let den: BigInt = den.parse().map_err(|_| bad())?;
    if den.is_zero() {
        return Err(bad());
    }
    Ok(BigRational::new(num, den))
}
