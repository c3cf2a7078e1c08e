use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which physical process a rate matrix describes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RateKind {
    /// Per-pulse probabilities Γ^abs_{lm}, ground m → excited l.
    Absorption,
    /// Rates Γ^sp_{nl} in units of γ, excited l → ground n.
    Spontaneous,
}

impl RateKind {
    pub(crate) fn tag(self) -> u8 {
        match self {
            RateKind::Absorption => 0,
            RateKind::Spontaneous => 1,
        }
    }

    pub(crate) fn from_tag(t: u8) -> Option<Self> {
        match t {
            0 => Some(RateKind::Absorption),
            1 => Some(RateKind::Spontaneous),
            _ => None,
        }
    }
}

/// Sparse non-negative matrix over trap levels, stored by source column.
///
/// Entry (to, from) lives in column `from`; row indices within a column are
/// strictly increasing.
#[derive(Clone, Debug, PartialEq)]
pub struct RateMatrix {
    kind: RateKind,
    size: usize,
    fingerprint: u64,
    col_ptr: Vec<usize>,
    rows: Vec<u32>,
    values: Vec<f64>,
}

impl RateMatrix {
    /// Assemble from per-column `(to, rate)` lists. Entries at or below
    /// `rel_cutoff · max` are dropped.
    pub fn from_columns(
        kind: RateKind,
        size: usize,
        fingerprint: u64,
        columns: Vec<Vec<(u32, f64)>>,
        rel_cutoff: f64,
    ) -> Result<Self> {
        if columns.len() != size {
            return Err(Error::invalid("column count does not match matrix size"));
        }
        let mut col_ptr = Vec::with_capacity(size + 1);
        let mut rows = Vec::new();
        let mut values = Vec::new();
        col_ptr.push(0);
        for mut col in columns {
            col.sort_by_key(|e| e.0);
            for (r, v) in col {
                rows.push(r);
                values.push(v);
            }
            col_ptr.push(rows.len());
        }
        Self::from_flat(kind, size, fingerprint, col_ptr, rows, values, rel_cutoff)
    }

    /// Assemble from compressed columns (rows sorted within each column),
    /// dropping entries at or below `rel_cutoff · max`.
    pub fn from_flat(
        kind: RateKind,
        size: usize,
        fingerprint: u64,
        mut col_ptr: Vec<usize>,
        mut rows: Vec<u32>,
        mut values: Vec<f64>,
        rel_cutoff: f64,
    ) -> Result<Self> {
        if col_ptr.len() != size + 1 || rows.len() != values.len() || col_ptr[size] != rows.len() {
            return Err(Error::invalid("inconsistent compressed column layout"));
        }
        let mut max = 0.0f64;
        for &v in &values {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::invalid(format!("rate entries must be finite and ≥ 0, got {v}")));
            }
            max = max.max(v);
        }
        let threshold = max * rel_cutoff;
        let mut w = 0;
        let mut start = 0;
        for c in 0..size {
            let end = col_ptr[c + 1];
            let mut prev: Option<u32> = None;
            for k in start..end {
                let r = rows[k];
                if r as usize >= size {
                    return Err(Error::invalid("row index out of range"));
                }
                if prev.is_some_and(|p| p >= r) {
                    return Err(Error::invalid("rows must be strictly increasing within a column"));
                }
                prev = Some(r);
                if values[k] > threshold {
                    rows[w] = r;
                    values[w] = values[k];
                    w += 1;
                }
            }
            start = end;
            col_ptr[c + 1] = w;
        }
        rows.truncate(w);
        values.truncate(w);
        Ok(RateMatrix {
            kind,
            size,
            fingerprint,
            col_ptr,
            rows,
            values,
        })
    }

    /// Rebuild from triplets already in column-major order (used by the cache).
    pub(crate) fn from_sorted_triplets(
        kind: RateKind,
        size: usize,
        fingerprint: u64,
        triplets: &[(u32, u32, f64)],
    ) -> Result<Self> {
        let mut col_ptr = vec![0usize; size + 1];
        let mut rows = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        let mut last: Option<(u32, u32)> = None;
        for &(to, from, v) in triplets {
            if to as usize >= size || from as usize >= size {
                return Err(Error::Corrupt("triplet index out of range".into()));
            }
            if let Some((lt, lf)) = last {
                if (from, to) <= (lf, lt) {
                    return Err(Error::Corrupt("triplets not in column-major order".into()));
                }
            }
            last = Some((to, from));
            col_ptr[from as usize + 1] += 1;
            rows.push(to);
            values.push(v);
        }
        for i in 0..size {
            col_ptr[i + 1] += col_ptr[i];
        }
        Ok(RateMatrix {
            kind,
            size,
            fingerprint,
            col_ptr,
            rows,
            values,
        })
    }

    pub fn kind(&self) -> RateKind {
        self.kind
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Rows and values of column `from`.
    #[inline]
    pub fn column(&self, from: usize) -> (&[u32], &[f64]) {
        let (a, b) = (self.col_ptr[from], self.col_ptr[from + 1]);
        (&self.rows[a..b], &self.values[a..b])
    }

    pub fn get(&self, to: usize, from: usize) -> f64 {
        let (rows, vals) = self.column(from);
        match rows.binary_search(&(to as u32)) {
            Ok(i) => vals[i],
            Err(_) => 0.0,
        }
    }

    pub fn column_sum(&self, from: usize) -> f64 {
        self.column(from).1.iter().fold(0.0, |a, v| a + v)
    }

    pub fn column_sums(&self) -> Vec<f64> {
        (0..self.size).map(|c| self.column_sum(c)).collect()
    }

    pub fn max_entry(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// All entries as (to, from, rate), column-major.
    pub fn triplets(&self) -> impl Iterator<Item = (u32, u32, f64)> + '_ {
        (0..self.size).flat_map(move |c| {
            let (r, v) = self.column(c);
            r.iter().zip(v).map(move |(&r, &v)| (r, c as u32, v))
        })
    }

    /// Multiply every entry by `factor` (absorption rates scale with area²).
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        for v in out.values.iter_mut() {
            *v *= factor;
        }
        out
    }
}
