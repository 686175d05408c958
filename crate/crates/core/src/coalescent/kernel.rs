use crate::error::{Error, Result};

/// Symmetric collision kernel `K(i, j)` on cluster masses.
#[derive(Debug, Clone, PartialEq)]
pub enum Kernel {
    /// `K = 1`.
    Constant,
    /// `K = i + j`.
    Additive,
    /// `K = i * j`.
    Multiplicative,
    /// `K(i, j) = table[i - 1][j - 1]`, defined up to the table size.
    Tabulated(Vec<Vec<f64>>),
}

impl Kernel {
    /// Validated tabulated kernel: square, symmetric, finite and non-negative.
    pub fn tabulated(table: Vec<Vec<f64>>) -> Result<Self> {
        let m = table.len();
        if m == 0 {
            return Err(Error::Domain("empty kernel table".into()));
        }
        for (i, row) in table.iter().enumerate() {
            if row.len() != m {
                return Err(Error::Domain(format!("kernel row {} has {} entries, expected {m}", i + 1, row.len())));
            }
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::Domain(format!("kernel entry ({}, {}) = {v}", i + 1, j + 1)));
                }
                if v != table[j][i] {
                    return Err(Error::Domain(format!("kernel is not symmetric at ({}, {})", i + 1, j + 1)));
                }
            }
        }
        Ok(Kernel::Tabulated(table))
    }

    /// Largest mass at which the kernel is defined, `None` if unbounded.
    pub fn max_mass(&self) -> Option<u64> {
        match self {
            Kernel::Tabulated(t) => Some(t.len() as u64),
            _ => None,
        }
    }

    pub fn rate(&self, i: u64, j: u64) -> Result<f64> {
        if i == 0 || j == 0 {
            return Err(Error::Domain("cluster masses start at 1".into()));
        }
        Ok(match self {
            Kernel::Constant => 1.0,
            Kernel::Additive => (i + j) as f64,
            Kernel::Multiplicative => i as f64 * j as f64,
            Kernel::Tabulated(t) => {
                let m = t.len() as u64;
                if i > m || j > m {
                    return Err(Error::Domain(format!(
                        "kernel table covers masses up to {m}, needed K({i}, {j})"
                    )));
                }
                t[i as usize - 1][j as usize - 1]
            }
        })
    }

    /// Name used in output metadata.
    pub fn name(&self) -> &'static str {
        match self {
            Kernel::Constant => "constant",
            Kernel::Additive => "additive",
            Kernel::Multiplicative => "multiplicative",
            Kernel::Tabulated(_) => "tabulated",
        }
    }
}
