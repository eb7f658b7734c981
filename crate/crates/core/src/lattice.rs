//! The finite box [0, n)^d of Z^d with row-major vertex numbering.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest vertex count we are willing to index (flat per-vertex arrays).
pub const MAX_VERTICES: u64 = 1 << 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lattice {
    d: usize,
    n: u64,
    len: usize,
}

impl Lattice {
    pub fn new(d: usize, n: u64) -> Result<Self> {
        if d == 0 || d > 8 {
            return Err(crate::error::invalid(
                "d",
                "dimension must be between 1 and 8",
            ));
        }
        let mut len: u64 = 1;
        for _ in 0..d {
            len = len.checked_mul(n).ok_or(Error::BoxTooLarge { d, n })?;
        }
        if len > MAX_VERTICES || usize::try_from(len).is_err() {
            return Err(Error::BoxTooLarge { d, n });
        }
        Ok(Self {
            d,
            n,
            len: len as usize,
        })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn side(&self) -> u64 {
        self.n
    }

    /// Number of vertices, n^d.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn index(&self, coords: &[i64]) -> Option<usize> {
        debug_assert_eq!(coords.len(), self.d);
        let n = self.n as i64;
        let mut idx: usize = 0;
        for &c in coords {
            if c < 0 || c >= n {
                return None;
            }
            idx = idx * self.n as usize + c as usize;
        }
        Some(idx)
    }

    pub fn coords_into(&self, mut v: usize, out: &mut [i64]) {
        let n = self.n as usize;
        for slot in out.iter_mut().rev() {
            *slot = (v % n) as i64;
            v /= n;
        }
    }

    pub fn coords(&self, v: usize) -> Vec<i64> {
        let mut out = vec![0; self.d];
        self.coords_into(v, &mut out);
        out
    }

    /// Displacement j - i in lattice coordinates.
    pub fn displacement(&self, i: usize, j: usize) -> Vec<i64> {
        let a = self.coords(i);
        let b = self.coords(j);
        b.iter().zip(&a).map(|(x, y)| x - y).collect()
    }

    pub fn sup_distance(&self, i: usize, j: usize) -> i64 {
        self.displacement(i, j)
            .iter()
            .map(|c| c.abs())
            .max()
            .unwrap_or(0)
    }

    /// Calls `f` on every nearest neighbour of `v` inside the box, i.e. every
    /// vertex at sup-norm distance exactly one.
    pub fn for_each_nearest(&self, v: usize, mut f: impl FnMut(usize)) {
        let d = self.d;
        let n = self.n as i64;
        let mut c = [0i64; 8];
        assert!(d <= c.len(), "dimension above 8 is not supported");
        self.coords_into(v, &mut c[..d]);
        let total = 3usize.pow(d as u32);
        let centre = total / 2;
        'offsets: for code in 0..total {
            if code == centre {
                continue;
            }
            let mut rem = code;
            let mut idx: usize = 0;
            for &ci in &c[..d] {
                let x = ci + (rem % 3) as i64 - 1;
                rem /= 3;
                if x < 0 || x >= n {
                    continue 'offsets;
                }
                idx = idx * self.n as usize + x as usize;
            }
            f(idx);
        }
    }

    pub fn nearest_neighbours(&self, v: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(3usize.pow(self.d as u32) - 1);
        self.for_each_nearest(v, |u| out.push(u));
        out
    }
}
