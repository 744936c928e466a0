//! Shared table of ln n in double-double, grown on demand.
//!
//! Every entry is computed from `n` alone, so the contents never depend on the
//! order in which callers request growth.

use std::sync::RwLock;

use crate::dd::DoubleDouble;

static TABLE: RwLock<Vec<DoubleDouble>> = RwLock::new(Vec::new());

/// Runs `f` with a table whose index `n` holds ln n for `1 <= n <= n_max`.
pub fn with_logs<R>(n_max: usize, f: impl FnOnce(&[DoubleDouble]) -> R) -> R {
    {
        let table = TABLE.read().expect("ln table poisoned");
        if table.len() > n_max {
            return f(&table);
        }
    }
    {
        let mut table = TABLE.write().expect("ln table poisoned");
        let target = (n_max + 1).max(table.len() * 2).max(1024);
        if table.len() < target {
            let missing = target - table.len();
            table.reserve(missing);
            if table.is_empty() {
                table.push(DoubleDouble::ZERO);
            }
            while table.len() < target {
                let n = table.len() as f64;
                table.push(DoubleDouble::from_f64(n).ln());
            }
        }
    }
    let table = TABLE.read().expect("ln table poisoned");
    f(&table)
}
