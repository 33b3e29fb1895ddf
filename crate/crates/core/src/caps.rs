//! Enumeration budgets. Exact enumeration is the default wherever it fits
//! under these caps; sampled estimation is the documented fallback and is
//! never substituted silently.

use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct Caps {
    /// Max number of submatrices / subtensors in an exact enumeration.
    pub enum_cap: u128,
    /// Max outcome-space size (2^n or 3^n) for exact sign-vector enumeration.
    pub dist_cap: u128,
    /// Max number of distinct values tracked by the linear convolution DP.
    pub value_cap: usize,
    /// Max coefficient-box size for GAP membership and Z(V) enumeration.
    pub box_cap: u128,
    /// Max principal-submatrix subsets scanned by the robust-rank search.
    pub subset_cap: u128,
}

impl Default for Caps {
    fn default() -> Self {
        Caps {
            enum_cap: 10_000_000,
            dist_cap: 1 << 24,
            value_cap: 4_000_000,
            box_cap: 10_000_000,
            subset_cap: 1 << 22,
        }
    }
}

impl Caps {
    pub fn check_enum(&self, needed: u128) -> Result<()> {
        if needed > self.enum_cap {
            Err(Error::CapExceeded { needed, cap: self.enum_cap })
        } else {
            Ok(())
        }
    }

    pub fn check_dist(&self, needed: u128) -> Result<()> {
        if needed > self.dist_cap {
            Err(Error::CapExceeded { needed, cap: self.dist_cap })
        } else {
            Ok(())
        }
    }

    pub fn check_box(&self, needed: u128) -> Result<()> {
        if needed > self.box_cap {
            Err(Error::CapExceeded { needed, cap: self.box_cap })
        } else {
            Ok(())
        }
    }

    pub fn check_subsets(&self, needed: u128) -> Result<()> {
        if needed > self.subset_cap {
            Err(Error::CapExceeded { needed, cap: self.subset_cap })
        } else {
            Ok(())
        }
    }
}
